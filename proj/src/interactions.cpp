#include "interactions.hpp"

#include "error.hpp"

#include <string>

namespace magic {

namespace {

constexpr const char* kModule = "interactions";

// C(p,k), saturating at limit + 1.
std::size_t binomial_capped(std::size_t p, std::size_t k, std::size_t limit) {
    if (k > p) return 0;
    k = std::min(k, p - k);
    unsigned __int128 c = 1;
    for (std::size_t i = 1; i <= k; ++i) {
        c = c * (p - k + i) / i;
        if (c > limit) return limit + 1;
    }
    return static_cast<std::size_t>(c);
}

void enumerate_order(std::size_t p, int k, std::vector<std::uint32_t>& out) {
    std::vector<std::uint32_t> idx(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(i);
    while (true) {
        out.insert(out.end(), idx.begin(), idx.end());
        // lexicographic successor: bump the rightmost index that has room
        int i = k - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] ==
                             static_cast<std::uint32_t>(p - static_cast<std::size_t>(k - i))) {
            --i;
        }
        if (i < 0) break;
        ++idx[static_cast<std::size_t>(i)];
        for (int t = i + 1; t < k; ++t)
            idx[static_cast<std::size_t>(t)] = idx[static_cast<std::size_t>(t - 1)] + 1;
    }
}

}  // namespace

std::size_t InteractionPlan::count(int k) const {
    if (k < 1 || k > q_) throw config_error(kModule, "order " + std::to_string(k) + " outside plan");
    return flat_[static_cast<std::size_t>(k)].size() / static_cast<std::size_t>(k);
}

std::span<const std::uint32_t> InteractionPlan::subset(int k, std::size_t i) const {
    const auto& f = flat_[static_cast<std::size_t>(k)];
    return {f.data() + i * static_cast<std::size_t>(k), static_cast<std::size_t>(k)};
}

std::size_t InteractionPlan::moment_offset(int k) const {
    std::size_t off = 0;
    for (int j = 2; j < k; ++j) off += count(j);
    return off;
}

std::size_t InteractionPlan::basis_dim(int k) const {
    if (k < 2 || k > q_)
        throw config_error(kModule, "basis order k=" + std::to_string(k) + " outside [2, q]");
    std::size_t dim = 1;
    for (int j = 1; j < k; ++j) dim += count(j);
    return dim;
}

InteractionPlan build_plan(std::size_t p, int q) {
    if (q < 2) throw config_error(kModule, "q must be at least 2, got " + std::to_string(q));
    if (p < 2) throw config_error(kModule, "q >= 2 requires p >= 2 (p=" + std::to_string(p) + ")");
    if (static_cast<std::size_t>(q) > p)
        throw config_error(kModule, "q=" + std::to_string(q) + " exceeds p=" + std::to_string(p));
    const std::size_t limit = InteractionPlan::kMaxInteractions;
    std::size_t r = 0;
    std::size_t total = 0;
    for (int k = 1; k <= q; ++k) {
        const std::size_t c = binomial_capped(p, static_cast<std::size_t>(k), limit);
        total += c;
        if (k >= 2) r += c;
        if (r > limit || total > limit + p)
            throw guard_error(kModule, "r(p=" + std::to_string(p) + ", q=" + std::to_string(q) +
                                           ") exceeds the limit of " + std::to_string(limit));
    }

    InteractionPlan plan;
    plan.p_ = p;
    plan.q_ = q;
    plan.r_ = r;
    plan.flat_.resize(static_cast<std::size_t>(q) + 1);
    for (int k = 1; k <= q; ++k) enumerate_order(p, k, plan.flat_[static_cast<std::size_t>(k)]);
    return plan;
}

Eigen::VectorXd eval_demeaned(const Eigen::Ref<const Eigen::VectorXd>& z_row,
                              const Eigen::Ref<const Eigen::VectorXd>& mu,
                              const InteractionPlan& plan) {
    if (static_cast<std::size_t>(z_row.size()) != plan.p() ||
        static_cast<std::size_t>(mu.size()) != plan.p())
        throw data_error(kModule, "row/mean length does not match plan p=" + std::to_string(plan.p()));
    Eigen::VectorXd centered = z_row - mu;
    Eigen::VectorXd out(static_cast<Eigen::Index>(plan.r()));
    Eigen::Index pos = 0;
    for (int k = 2; k <= plan.q(); ++k) {
        for (std::size_t i = 0; i < plan.count(k); ++i) {
            double prod = 1.0;
            for (auto j : plan.subset(k, i)) prod *= centered[j];
            out[pos++] = prod;
        }
    }
    return out;
}

Eigen::VectorXd eval_basis(const Eigen::Ref<const Eigen::VectorXd>& z_row,
                           const InteractionPlan& plan, int k) {
    if (static_cast<std::size_t>(z_row.size()) != plan.p())
        throw data_error(kModule, "row length does not match plan p=" + std::to_string(plan.p()));
    Eigen::VectorXd out(static_cast<Eigen::Index>(plan.basis_dim(k)));
    Eigen::Index pos = 0;
    out[pos++] = 1.0;
    for (int j = 1; j < k; ++j) {
        for (std::size_t i = 0; i < plan.count(j); ++i) {
            double prod = 1.0;
            for (auto c : plan.subset(j, i)) prod *= z_row[c];
            out[pos++] = prod;
        }
    }
    return out;
}

Eigen::MatrixXd demeaned_block(const Eigen::MatrixXd& z, const Eigen::VectorXd& mu,
                               const InteractionPlan& plan, int k) {
    if (static_cast<std::size_t>(z.cols()) != plan.p() ||
        static_cast<std::size_t>(mu.size()) != plan.p())
        throw data_error(kModule, "instrument matrix does not match plan p=" + std::to_string(plan.p()));
    const Eigen::MatrixXd centered = z.rowwise() - mu.transpose();
    const auto m = plan.count(k);
    Eigen::MatrixXd out(z.rows(), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
        auto s = plan.subset(k, i);
        auto col = out.col(static_cast<Eigen::Index>(i));
        col = centered.col(s[0]);
        for (std::size_t t = 1; t < s.size(); ++t) col.array() *= centered.col(s[t]).array();
    }
    return out;
}

Eigen::MatrixXd demeaned_matrix(const Eigen::MatrixXd& z, const Eigen::VectorXd& mu,
                                const InteractionPlan& plan) {
    Eigen::MatrixXd out(z.rows(), static_cast<Eigen::Index>(plan.r()));
    for (int k = 2; k <= plan.q(); ++k) {
        out.middleCols(static_cast<Eigen::Index>(plan.moment_offset(k)),
                       static_cast<Eigen::Index>(plan.count(k))) = demeaned_block(z, mu, plan, k);
    }
    return out;
}

Eigen::MatrixXd basis_matrix(const Eigen::MatrixXd& z, const InteractionPlan& plan, int k) {
    if (static_cast<std::size_t>(z.cols()) != plan.p())
        throw data_error(kModule, "instrument matrix does not match plan p=" + std::to_string(plan.p()));
    Eigen::MatrixXd out(z.rows(), static_cast<Eigen::Index>(plan.basis_dim(k)));
    out.col(0).setOnes();
    Eigen::Index pos = 1;
    for (int j = 1; j < k; ++j) {
        for (std::size_t i = 0; i < plan.count(j); ++i) {
            auto s = plan.subset(j, i);
            auto col = out.col(pos++);
            col = z.col(s[0]);
            for (std::size_t t = 1; t < s.size(); ++t) col.array() *= z.col(s[t]).array();
        }
    }
    return out;
}

nlohmann::json plan_to_json(const InteractionPlan& plan) {
    nlohmann::json orders = nlohmann::json::object();
    for (int k = 1; k <= plan.q(); ++k) {
        nlohmann::json list = nlohmann::json::array();
        for (std::size_t i = 0; i < plan.count(k); ++i) {
            auto s = plan.subset(k, i);
            list.push_back(std::vector<std::uint32_t>(s.begin(), s.end()));
        }
        orders[std::to_string(k)] = std::move(list);
    }
    return {{"p", plan.p()}, {"q", plan.q()}, {"r", plan.r()}, {"orders", std::move(orders)}};
}

InteractionPlan plan_from_json(const nlohmann::json& j) {
    try {
        InteractionPlan plan;
        plan.p_ = j.at("p").get<std::size_t>();
        plan.q_ = j.at("q").get<int>();
        if (plan.q_ < 1) throw config_error(kModule, "serialized plan has q < 1");
        plan.flat_.resize(static_cast<std::size_t>(plan.q_) + 1);
        plan.r_ = 0;
        for (int k = 1; k <= plan.q_; ++k) {
            auto& flat = plan.flat_[static_cast<std::size_t>(k)];
            for (const auto& s : j.at("orders").at(std::to_string(k))) {
                if (s.size() != static_cast<std::size_t>(k))
                    throw config_error(kModule, "serialized subset has wrong order");
                for (const auto& v : s) {
                    auto idx = v.get<std::uint32_t>();
                    if (idx >= plan.p_) throw config_error(kModule, "serialized index out of range");
                    flat.push_back(idx);
                }
            }
            if (k >= 2) plan.r_ += flat.size() / static_cast<std::size_t>(k);
        }
        return plan;
    } catch (const nlohmann::json::exception& e) {
        throw config_error(kModule, std::string("malformed plan: ") + e.what());
    }
}

}  // namespace magic
