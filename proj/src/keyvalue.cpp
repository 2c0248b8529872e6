#include "keyvalue.hpp"

#include "error.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <sstream>

namespace magic {

namespace {

constexpr const char* kModule = "config";

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& raw) {
    T v{};
    const std::string s = trim(raw);
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || s.empty())
        throw config_error(kModule, "key '" + key + "': cannot parse '" + s + "'");
    return v;
}

}  // namespace

KeyValues KeyValues::parse(const std::string& text) {
    KeyValues kv;
    const std::string body = trim(text);
    if (!body.empty() && body.front() == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& e) {
            throw config_error(kModule, std::string("invalid JSON configuration: ") + e.what());
        }
        if (j.contains("config") && j["config"].is_object()) j = j["config"];
        for (auto it = j.begin(); it != j.end(); ++it) {
            const auto& v = it.value();
            if (v.is_string()) kv.values_[it.key()] = v.get<std::string>();
            else if (v.is_array()) {
                std::string joined;
                for (const auto& e : v) {
                    if (!joined.empty()) joined += ',';
                    joined += e.is_string() ? e.get<std::string>() : e.dump();
                }
                kv.values_[it.key()] = joined;
            } else if (!v.is_null()) kv.values_[it.key()] = v.dump();
        }
        return kv;
    }

    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error(kModule, "line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw config_error(kModule, "line " + std::to_string(line_no) + ": empty key");
        if (kv.values_.count(key))
            throw config_error(kModule, "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        kv.values_[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

void KeyValues::merge(const KeyValues& overrides) {
    for (const auto& [k, v] : overrides.values_) values_[k] = v;
}

std::string KeyValues::get_string(const std::string& key, const std::string& fallback) const {
    used_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double KeyValues::get_double(const std::string& key, double fallback) const {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const double v = parse_number<double>(key, it->second);
    if (!std::isfinite(v)) throw config_error(kModule, "key '" + key + "' must be finite");
    return v;
}

long long KeyValues::get_int(const std::string& key, long long fallback) const {
    used_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? fallback : parse_number<long long>(key, it->second);
}

std::uint64_t KeyValues::get_u64(const std::string& key, std::uint64_t fallback) const {
    used_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? fallback : parse_number<std::uint64_t>(key, it->second);
}

bool KeyValues::get_bool(const std::string& key, bool fallback) const {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string v = trim(it->second);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw config_error(kModule, "key '" + key + "': expected true/false, got '" + v + "'");
}

std::vector<std::string> KeyValues::get_list(const std::string& key,
                                             const std::vector<std::string>& fallback) const {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<std::string> out;
    std::istringstream in(it->second);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

void KeyValues::require_all_used(const std::string& module) const {
    for (const auto& [k, v] : values_) {
        if (!used_.count(k)) throw config_error(module, "unknown configuration key '" + k + "'");
    }
}

std::string KeyValues::to_text() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
    return out;
}

}  // namespace magic
