#pragma once

#include <stdexcept>

namespace evalm::lm {

// Standard training-cost approximation: 6 FLOPs per parameter per token
// (forward + backward). An estimate, not a measurement.
inline double flops_estimate(double n_params, double n_tokens) {
    if (n_params <= 0.0 || n_tokens <= 0.0)
        throw std::invalid_argument("flops_estimate: inputs must be positive");
    return 6.0 * n_params * n_tokens;
}

}  // namespace evalm::lm
