#include "seqcls/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "seqcls/errors.hpp"

namespace seqcls::ad {

double finite_difference_check(const std::function<double(const Tensor&)>& f, const Tensor& theta,
                               const Tensor& analytic_grad, double h) {
    check_same_shape(theta, analytic_grad, "finite_difference_check");
    if (h <= 0.0) throw ContractError("finite_difference_check: h must be positive");
    double max_rel = 0.0;
    Tensor perturbed = theta;
    for (size_t i = 0; i < theta.size(); ++i) {
        const double orig = theta[i];
        perturbed[i] = orig + h;
        const double fp = f(perturbed);
        perturbed[i] = orig - h;
        const double fm = f(perturbed);
        perturbed[i] = orig;
        const double fd = (fp - fm) / (2.0 * h);
        const double an = analytic_grad[i];
        const double denom = std::max({std::abs(fd), std::abs(an), 1e-6});
        max_rel = std::max(max_rel, std::abs(fd - an) / denom);
    }
    return max_rel;
}

} // namespace seqcls::ad
