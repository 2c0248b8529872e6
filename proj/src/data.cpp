#include "data.hpp"

#include "error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace magic {

namespace {

constexpr const char* kModule = "data";

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string header_name(std::string_view raw) {
    std::string s = trim(raw);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

bool parse_real(std::string_view cell, double& out) {
    std::string s = trim(cell);
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out, std::chars_format::general);
    return ec == std::errc() && ptr == last;
}

std::string format_real(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

}  // namespace

std::string column_label(const Dataset& ds, std::size_t j) {
    if (j < ds.instrument_names.size()) return ds.instrument_names[j];
    return "z" + std::to_string(j + 1);
}

ValidationReport validate(const Dataset& ds, bool strict_binary) {
    ValidationReport report;
    const auto n = ds.y.size();

    if (n < 2) {
        report.push_back({"too few rows", "", -1,
                          "need at least 2 observations, got " + std::to_string(n)});
    }
    if (ds.d.size() != n || ds.z.rows() != n) {
        report.push_back({"length mismatch", "", -1,
                          "y has " + std::to_string(n) + " rows, d has " +
                              std::to_string(ds.d.size()) + ", z has " +
                              std::to_string(ds.z.rows())});
        return report;
    }
    if (!ds.instrument_names.empty() &&
        ds.instrument_names.size() != static_cast<std::size_t>(ds.z.cols())) {
        report.push_back({"name count mismatch", "", -1,
                          std::to_string(ds.instrument_names.size()) +
                              " instrument names for " + std::to_string(ds.z.cols()) +
                              " columns"});
    }

    auto check_finite = [&](const Eigen::Ref<const Eigen::VectorXd>& v, const std::string& col) {
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (!std::isfinite(v[i])) {
                report.push_back({"non-finite value", col, static_cast<long>(i),
                                  "non-finite value in column '" + col + "' at row " +
                                      std::to_string(i)});
            }
        }
    };
    check_finite(ds.y, "y");
    check_finite(ds.d, "d");

    for (Eigen::Index j = 0; j < ds.z.cols(); ++j) {
        const std::string col = column_label(ds, static_cast<std::size_t>(j));
        const auto before = report.size();
        check_finite(ds.z.col(j), col);
        if (report.size() != before || n < 2) continue;

        const double mean = ds.z.col(j).mean();
        const double ss = (ds.z.col(j).array() - mean).square().sum();
        if (!(ss > 0.0)) {
            report.push_back({"constant instrument", col, -1,
                              "instrument '" + col + "' is constant"});
        }
        if (strict_binary) {
            for (Eigen::Index i = 0; i < n; ++i) {
                const double v = ds.z(i, j);
                if (v != 0.0 && v != 1.0) {
                    report.push_back({"non-binary instrument", col, static_cast<long>(i),
                                      "instrument '" + col + "' is not 0/1 at row " +
                                          std::to_string(i)});
                    break;
                }
            }
        }
    }
    return report;
}

void require_valid(const Dataset& ds, bool strict_binary) {
    auto report = validate(ds, strict_binary);
    if (!report.empty()) throw data_error(kModule, report.front().message);
}

std::vector<std::string> read_csv_header(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error(kModule, "cannot open file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw data_error(kModule, "file '" + path + "' is empty");
    std::vector<std::string> names;
    for (const auto& f : split_fields(line)) names.push_back(header_name(f));
    return names;
}

Dataset load_csv(const std::string& path, const CsvBinding& binding, bool strict_binary) {
    std::ifstream in(path);
    if (!in) throw data_error(kModule, "cannot open file '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw data_error(kModule, "file '" + path + "' is empty");

    std::unordered_map<std::string, std::size_t> index;
    const auto header = split_fields(line);
    for (std::size_t c = 0; c < header.size(); ++c) index.emplace(header_name(header[c]), c);

    std::vector<std::string> selected;
    selected.push_back(binding.outcome);
    selected.push_back(binding.exposure);
    selected.insert(selected.end(), binding.instruments.begin(), binding.instruments.end());

    std::unordered_set<std::string> seen;
    std::vector<std::size_t> cols;
    for (const auto& name : selected) {
        if (!seen.insert(name).second)
            throw data_error(kModule, "column '" + name + "' selected more than once");
        auto it = index.find(name);
        if (it == index.end())
            throw data_error(kModule, "column '" + name + "' not found in '" + path + "'");
        cols.push_back(it->second);
    }
    if (binding.instruments.empty()) throw data_error(kModule, "no instrument columns selected");

    std::vector<std::vector<double>> columns(cols.size());
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != header.size()) {
            throw data_error(kModule, "line " + std::to_string(line_no) + " has " +
                                          std::to_string(fields.size()) + " fields, header has " +
                                          std::to_string(header.size()));
        }
        for (std::size_t s = 0; s < cols.size(); ++s) {
            double v = 0.0;
            const auto cell = fields[cols[s]];
            if (!parse_real(cell, v) || !std::isfinite(v)) {
                throw data_error(kModule, "line " + std::to_string(line_no) + ", column '" +
                                              selected[s] + "': cannot parse '" + trim(cell) +
                                              "' as a finite number");
            }
            columns[s].push_back(v);
        }
    }

    const auto n = static_cast<Eigen::Index>(columns[0].size());
    const auto p = static_cast<Eigen::Index>(binding.instruments.size());
    Dataset ds;
    ds.y = Eigen::Map<const Eigen::VectorXd>(columns[0].data(), n);
    ds.d = Eigen::Map<const Eigen::VectorXd>(columns[1].data(), n);
    ds.z.resize(n, p);
    for (Eigen::Index j = 0; j < p; ++j)
        ds.z.col(j) = Eigen::Map<const Eigen::VectorXd>(columns[2 + j].data(), n);
    ds.instrument_names = binding.instruments;

    require_valid(ds, strict_binary);
    return ds;
}

void write_csv(const Dataset& ds, const std::string& path, const std::string& outcome_name,
               const std::string& exposure_name) {
    std::ofstream out(path);
    if (!out) throw data_error(kModule, "cannot write '" + path + "'");
    out << outcome_name << ',' << exposure_name;
    for (std::size_t j = 0; j < ds.p(); ++j) out << ',' << column_label(ds, j);
    out << '\n';
    for (Eigen::Index i = 0; i < ds.y.size(); ++i) {
        out << format_real(ds.y[i]) << ',' << format_real(ds.d[i]);
        for (Eigen::Index j = 0; j < ds.z.cols(); ++j) out << ',' << format_real(ds.z(i, j));
        out << '\n';
    }
    if (!out) throw data_error(kModule, "write to '" + path + "' failed");
}

}  // namespace magic
