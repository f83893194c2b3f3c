#pragma once

#include <functional>
#include <string>
#include <vector>

#include "egsage/matrix.hpp"

namespace egsage {

struct GradCheckReport {
    bool pass = false;
    // True when the loss evaluated non-finite, which invalidates the check.
    bool aborted = false;
    double max_relative_error = 0.0;
    // Worst coordinate as "param <p> (<r>,<c>)", empty for a vacuous pass.
    std::string worst_coordinate;
};

// Central-difference comparison of analytic_gradients against the numeric
// gradient of loss_fn at params. Relative error per coordinate is
// |analytic - numeric| / max(1, |numeric|). An empty parameter set passes
// vacuously.
auto finite_difference_check(const std::function<double(const std::vector<Matrix>&)>& loss_fn,
                             std::vector<Matrix> params,
                             const std::vector<Matrix>& analytic_gradients,
                             double step = 1e-5,
                             double tolerance = 1e-4) -> GradCheckReport;

} // namespace egsage
