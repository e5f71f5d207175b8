#pragma once

// Seeded random POMDPs that satisfy the identifiability assumptions.

#include <cstdint>

#include "spomdp/pomdp.hpp"

namespace spomdp {

struct GeneratorSpec {
    Dims dims;
    std::uint64_t seed = 0;
    /// Lower bound on sigma_X(O) and on every |det T(:, :, a)|.
    double conditioning = 0.1;
    /// Defaults to R, giving reward levels 1, 2, ..., R.
    double r_max = 0.0;
    std::size_t max_attempts = 10'000;
};

/// Reward levels r_max * (m + 1) / R.
Vector default_reward_values(std::size_t R, double r_max);

/// Dirichlet(1) columns of O, rows of every T(:, :, a) and rows of Gamma.
/// O and each transition slice are redrawn independently until they clear the
/// conditioning floor; throws GenerationFailed after `max_attempts` draws of
/// any one of them. Deterministic given the spec.
PomdpModel generate_model(const GeneratorSpec& spec);

}  // namespace spomdp
