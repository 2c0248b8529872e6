#pragma once

#include "data.hpp"
#include "interactions.hpp"
#include "nuisance.hpp"

#include <Eigen/Dense>

namespace magic {

// Per-observation moments g_i(beta) = A_i - beta * B_i, with
// A_i = (Zbar_{k,mu}(z_i) * R_k^Y_i)_{k=2..q} and B_i the same with R_k^D.
// The cross moments are accumulated once so every objective evaluation costs
// O(r^2) plus one r x r factorization.
struct MomentComponents {
    Eigen::MatrixXd a;
    Eigen::MatrixXd b;
    Eigen::VectorXd a_mean;
    Eigen::VectorXd b_mean;
    Eigen::MatrixXd s_aa;  // E_n[A A^T], exactly symmetric
    Eigen::MatrixXd s_ab;  // E_n[A B^T]
    Eigen::MatrixXd s_bb;  // E_n[B B^T], exactly symmetric

    Eigen::Index n() const { return a.rows(); }
    Eigen::Index r() const { return a.cols(); }
};

struct MomentSnapshot {
    Eigen::VectorXd gbar;
    Eigen::MatrixXd omega;
    double beta = 0.0;
};

// Builds the cross moments from explicit A and B (n x r each).
MomentComponents make_components(Eigen::MatrixXd a, Eigen::MatrixXd b);

MomentComponents build_components(const Dataset& ds, const NuisanceEstimate& nuis,
                                  const InteractionPlan& plan);

Eigen::VectorXd gbar(const MomentComponents& mc, double beta);

// Uncentered E_n[g g^T] = S_aa - beta (S_ab + S_ba) + beta^2 S_bb.
Eigen::MatrixXd omega(const MomentComponents& mc, double beta);

MomentSnapshot snapshot(const MomentComponents& mc, double beta);

}  // namespace magic
