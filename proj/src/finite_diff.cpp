#include "signet/finite_diff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace signet {

Tensor fd_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x, double eps) {
    Tensor g = Tensor::zeros(x.shape());
    Tensor probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = probe[i];
        probe[i] = saved + eps;
        const double hi = f(probe);
        probe[i] = saved - eps;
        const double lo = f(probe);
        probe[i] = saved;
        g[i] = (hi - lo) / (2.0 * eps);
    }
    return g;
}

std::string GradCheckResult::describe() const {
    std::ostringstream os;
    os << (ok ? "ok" : "FAIL") << " max_rel_err=" << max_rel_err << " at flat index "
       << worst_index << " (analytic=" << analytic_at_worst << ", numeric=" << numeric_at_worst
       << ")";
    return os.str();
}

GradCheckResult finite_diff_check(const std::function<double(const Tensor&)>& f, const Tensor& x,
                                  const Tensor& analytic, double eps, double tolerance,
                                  std::size_t max_coords, double min_magnitude,
                                  std::uint64_t sample_seed) {
    Tensor::check_same_shape(x, analytic, "finite_diff_check");

    std::vector<std::size_t> coords(x.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (max_coords > 0 && coords.size() > max_coords) {
        Rng rng(sample_seed);
        rng.shuffle(coords);
        coords.resize(max_coords);
        std::sort(coords.begin(), coords.end());
    }

    GradCheckResult res;
    Tensor probe = x;
    for (std::size_t i : coords) {
        const double saved = probe[i];
        probe[i] = saved + eps;
        const double hi = f(probe);
        probe[i] = saved - eps;
        const double lo = f(probe);
        probe[i] = saved;
        const double numeric = (hi - lo) / (2.0 * eps);
        const double a = analytic[i];
        if (std::abs(a) < min_magnitude && std::abs(numeric) < min_magnitude) continue;
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-12});
        const double rel = std::abs(a - numeric) / denom;
        if (rel > res.max_rel_err) {
            res.max_rel_err = rel;
            res.worst_index = i;
            res.analytic_at_worst = a;
            res.numeric_at_worst = numeric;
        }
    }
    res.ok = res.max_rel_err <= tolerance;
    return res;
}

}  // namespace signet
