#pragma once

#include "data.hpp"
#include "interactions.hpp"

#include <map>
#include <optional>
#include <string>

namespace magic {

enum class BaselineMethod { Tsls, RatioPair, EfficientFixedR };

std::string to_string(BaselineMethod m);

struct BaselineResult {
    BaselineMethod method = BaselineMethod::Tsls;
    double beta_hat = 0.0;
    double se = 0.0;
    std::map<std::string, double> extra;
};

// Two-stage least squares of y on d, instrumented by (1, Z), HC0 standard error.
BaselineResult tsls(const Dataset& ds);

// E_n[(z_j - mu_j)(z_k - mu_k) y] / E_n[(z_j - mu_j)(z_k - mu_k) d] with a
// delta-method standard error.
BaselineResult ratio_pair(const Dataset& ds, std::size_t j, std::size_t k);

// Two-step GMM on the fixed-r residual moments
// (Zbar_2, ..., Zbar_q) (y - d beta - (1, z) pi-hat), weighted by
// Omega^{-1} M. The first step defaults to TSLS; it only affects weighting.
BaselineResult efficient_fixed_r(const Dataset& ds, const InteractionPlan& plan,
                                 std::optional<double> beta_init = std::nullopt);

}  // namespace magic
