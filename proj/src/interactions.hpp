#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace magic {

// All distinct instrument subsets of sizes 1..q. Within an order subsets are
// lexicographic; moment vectors stack orders 2..q in ascending order.
class InteractionPlan {
public:
    static constexpr std::size_t kMaxInteractions = 1'000'000;

    InteractionPlan() = default;

    std::size_t p() const { return p_; }
    int q() const { return q_; }
    // Number of moments, sum_{k=2}^{q} C(p,k).
    std::size_t r() const { return r_; }

    std::size_t count(int k) const;
    std::span<const std::uint32_t> subset(int k, std::size_t i) const;

    // Offset of order k's block inside the stacked r-vector (k >= 2).
    std::size_t moment_offset(int k) const;
    // Length of W_{k-1}: 1 + sum_{j=1}^{k-1} C(p,j).
    std::size_t basis_dim(int k) const;

    friend InteractionPlan build_plan(std::size_t p, int q);
    friend InteractionPlan plan_from_json(const nlohmann::json& j);

private:
    std::size_t p_ = 0;
    int q_ = 0;
    std::size_t r_ = 0;
    // flat[k] concatenates the C(p,k) subsets of order k, k entries each.
    std::vector<std::vector<std::uint32_t>> flat_;
};

InteractionPlan build_plan(std::size_t p, int q);

// Stacked demeaned interactions prod_{j in x}(z_j - mu_j), orders 2..q.
Eigen::VectorXd eval_demeaned(const Eigen::Ref<const Eigen::VectorXd>& z_row,
                              const Eigen::Ref<const Eigen::VectorXd>& mu,
                              const InteractionPlan& plan);

// W_{k-1}(z) = (1, raw products of orders 1..k-1).
Eigen::VectorXd eval_basis(const Eigen::Ref<const Eigen::VectorXd>& z_row,
                           const InteractionPlan& plan, int k);

// Row-wise versions over an n x p instrument matrix.
Eigen::MatrixXd demeaned_block(const Eigen::MatrixXd& z, const Eigen::VectorXd& mu,
                               const InteractionPlan& plan, int k);
Eigen::MatrixXd demeaned_matrix(const Eigen::MatrixXd& z, const Eigen::VectorXd& mu,
                                const InteractionPlan& plan);
Eigen::MatrixXd basis_matrix(const Eigen::MatrixXd& z, const InteractionPlan& plan, int k);

// {"p":..,"q":..,"orders":{"1":[[0],[1],..],"2":[[0,1],..],..}}
nlohmann::json plan_to_json(const InteractionPlan& plan);
InteractionPlan plan_from_json(const nlohmann::json& j);

}  // namespace magic
