#include "spomdp/generate.hpp"

#include <cmath>
#include <string>

#include "spomdp/random.hpp"

namespace spomdp {

Vector default_reward_values(std::size_t R, double r_max) {
    Vector v(R);
    for (std::size_t m = 0; m < R; ++m) v[m] = r_max * static_cast<double>(m + 1) / static_cast<double>(R);
    return v;
}

namespace {

Matrix draw_observation(Rng& rng, const Dims& d) {
    Matrix O(d.Y, d.X);
    for (std::size_t x = 0; x < d.X; ++x) O.set_column(x, rng.dirichlet_flat(d.Y));
    return O;
}

Matrix draw_stochastic(Rng& rng, std::size_t n) {
    Matrix P(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vector row = rng.dirichlet_flat(n);
        for (std::size_t j = 0; j < n; ++j) P(i, j) = row[j];
    }
    return P;
}

[[noreturn]] void give_up(const std::string& what, std::size_t attempts) {
    throw Error(ErrorKind::GenerationFailed, what + " did not clear the conditioning floor in " +
                                                 std::to_string(attempts) + " draws");
}

}  // namespace

PomdpModel generate_model(const GeneratorSpec& spec) {
    const Dims& d = spec.dims;
    if (d.X == 0 || d.Y == 0 || d.A == 0 || d.R == 0) throw Error(ErrorKind::ConfigError, "generate: dims must be positive");
    if (d.Y < d.X && spec.conditioning > 0.0)
        throw Error(ErrorKind::ConfigError, "generate: Y < X cannot give full column rank O");
    if (spec.max_attempts == 0) throw Error(ErrorKind::ConfigError, "generate: max_attempts must be positive");

    Rng rng(spec.seed);
    PomdpModel m;
    m.dims = d;
    const double r_max = spec.r_max > 0.0 ? spec.r_max : static_cast<double>(d.R);
    m.reward_values = default_reward_values(d.R, r_max);
    m.r_max = r_max;

    std::size_t tries = 0;
    do {
        if (tries++ == spec.max_attempts) give_up("O", spec.max_attempts);
        m.O = draw_observation(rng, d);
    } while (svd(m.O).S[d.X - 1] < spec.conditioning);

    m.T = Tensor3(d.X, d.X, d.A);
    for (std::size_t a = 0; a < d.A; ++a) {
        Matrix P;
        tries = 0;
        do {
            if (tries++ == spec.max_attempts) give_up("T(:, :, " + std::to_string(a) + ")", spec.max_attempts);
            P = draw_stochastic(rng, d.X);
        } while (std::abs(determinant(P)) < spec.conditioning);
        for (std::size_t i = 0; i < d.X; ++i)
            for (std::size_t j = 0; j < d.X; ++j) m.T(i, j, a) = P(i, j);
    }

    m.Gamma = Tensor3(d.X, d.A, d.R);
    for (std::size_t x = 0; x < d.X; ++x)
        for (std::size_t a = 0; a < d.A; ++a) {
            const Vector row = rng.dirichlet_flat(d.R);
            for (std::size_t r = 0; r < d.R; ++r) m.Gamma(x, a, r) = row[r];
        }

    // Dirichlet draws are strictly positive, so the uniform-policy chain is
    // irreducible; the call still guards degenerate rounding.
    induced_chain(m, MemorylessPolicy::uniform(d.Y, d.A));
    return m;
}

}  // namespace spomdp
