#include "egsage/gradcheck.hpp"

#include <cmath>
#include <sstream>

#include "egsage/errors.hpp"

namespace egsage {

auto finite_difference_check(const std::function<double(const std::vector<Matrix>&)>& loss_fn,
                             std::vector<Matrix> params,
                             const std::vector<Matrix>& analytic_gradients,
                             double step,
                             double tolerance) -> GradCheckReport {
    if (params.size() != analytic_gradients.size()) {
        throw DimensionError("finite_difference_check: " + std::to_string(params.size()) +
                             " params vs " + std::to_string(analytic_gradients.size()) +
                             " gradients");
    }
    GradCheckReport report;
    report.pass = true;
    for (std::size_t p = 0; p < params.size(); ++p) {
        if (!params[p].same_shape(analytic_gradients[p])) {
            throw DimensionError("finite_difference_check: param " + std::to_string(p) + " is " +
                                 params[p].shape_string() + " but gradient is " +
                                 analytic_gradients[p].shape_string());
        }
        for (std::size_t r = 0; r < params[p].rows(); ++r) {
            for (std::size_t c = 0; c < params[p].cols(); ++c) {
                const double saved = params[p](r, c);
                params[p](r, c) = saved + step;
                const double loss_plus = loss_fn(params);
                params[p](r, c) = saved - step;
                const double loss_minus = loss_fn(params);
                params[p](r, c) = saved;
                if (!std::isfinite(loss_plus) || !std::isfinite(loss_minus)) {
                    report.aborted = true;
                    report.pass = false;
                    std::ostringstream where;
                    where << "param " << p << " (" << r << "," << c << ")";
                    report.worst_coordinate = where.str();
                    return report;
                }
                const double numeric = (loss_plus - loss_minus) / (2.0 * step);
                const double analytic = analytic_gradients[p](r, c);
                const double rel =
                    std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
                if (rel > report.max_relative_error) {
                    report.max_relative_error = rel;
                    std::ostringstream where;
                    where << "param " << p << " (" << r << "," << c << ")";
                    report.worst_coordinate = where.str();
                }
            }
        }
    }
    report.pass = report.max_relative_error < tolerance;
    return report;
}

} // namespace egsage
