#pragma once

// Central-difference gradient oracle for validating analytic backward passes.

#include <functional>
#include <string>

#include "signet/rng.hpp"
#include "signet/tensor.hpp"

namespace signet {

// Central-difference gradient of a scalar function: g_i = (f(x + eps e_i) - f(x - eps e_i)) / 2eps.
// Evaluates f twice per coordinate, so keep inputs small.
Tensor fd_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                   double eps = 1e-5);

struct GradCheckResult {
    bool ok = true;
    double max_rel_err = 0.0;
    std::size_t worst_index = 0;
    double analytic_at_worst = 0.0;
    double numeric_at_worst = 0.0;
    std::string describe() const;
};

// Compare an analytic gradient against central differences coordinate by coordinate.
// rel_err = |a - n| / max(|a|, |n|, floor); coordinates where both magnitudes fall below
// `min_magnitude` are skipped (central differences cannot resolve them against the loss's
// own rounding noise). When `max_coords` > 0 and the tensor is larger, a deterministic
// random subset of coordinates is checked instead of all of them.
GradCheckResult finite_diff_check(const std::function<double(const Tensor&)>& f, const Tensor& x,
                                  const Tensor& analytic, double eps = 1e-5,
                                  double tolerance = 1e-6, std::size_t max_coords = 0,
                                  double min_magnitude = 0.0, std::uint64_t sample_seed = 17);

}  // namespace signet
