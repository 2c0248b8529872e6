#pragma once

#include "data.hpp"
#include "interactions.hpp"

#include <cstddef>

namespace magic {

struct FStatReport {
    double f_value = 0.0;
    std::size_t num_restrictions = 0;
    std::size_t n_effective = 0;
};

// Heteroskedasticity-robust (HC0) Wald statistic / r for the interaction
// coefficients in the regression of D-bar (d with the linear effect of Z
// partialled out) on (1, Zbar_{2,mu-hat}, ..., Zbar_{q,mu-hat}).
FStatReport f_stat(const Dataset& ds, const InteractionPlan& plan);

}  // namespace magic
