#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <doctest.h>

#include "spomdp/generate.hpp"
#include "spomdp/io.hpp"

namespace testutil {

using namespace spomdp;

// The shipped two-state benchmark model.
inline PomdpModel paper_model() {
    return model_from_json(Json::parse(R"({
      "X": 2, "Y": 4, "A": 2, "R": 4, "r_max": 4.0, "reward_values": [1.0, 2.0, 3.0, 4.0],
      "O": [[0.54, 0.93], [0.10, 0.01], [0.36, 0.01], [0.00, 0.05]],
      "T": [[[0.83, 0.17], [0.01, 0.99]], [[0.32, 0.68], [0.91, 0.09]]],
      "Gamma": [[[0.10, 0.01, 0.10, 0.79], [0.67, 0.05, 0.14, 0.14]],
                [[0.50, 0.27, 0.15, 0.08], [0.77, 0.01, 0.20, 0.02]]]})"));
}

/// O as Y rows, T[a][x][x'], Gamma[x][a][r]; reward levels 1..R.
inline PomdpModel make_model(const std::vector<std::vector<double>>& O,
                             const std::vector<std::vector<std::vector<double>>>& T,
                             const std::vector<std::vector<std::vector<double>>>& Gamma) {
    const std::size_t R = Gamma.at(0).at(0).size();
    Json j;
    j["X"] = O.at(0).size();
    j["Y"] = O.size();
    j["A"] = T.size();
    j["R"] = R;
    Vector rv(R);
    std::iota(rv.begin(), rv.end(), 1.0);
    j["r_max"] = static_cast<double>(R);
    j["reward_values"] = rv;
    j["O"] = O;
    j["T"] = T;
    j["Gamma"] = Gamma;
    return model_from_json(j);
}

/// Two states that swap deterministically under every action, observed and
/// rewarded without noise.
inline PomdpModel swap_model(std::size_t A = 2) {
    std::vector<std::vector<std::vector<double>>> T(A, {{0, 1}, {1, 0}});
    std::vector<std::vector<std::vector<double>>> G(2, std::vector<std::vector<double>>(A));
    for (std::size_t a = 0; a < A; ++a) {
        G[0][a] = {1, 0};
        G[1][a] = {0, 1};
    }
    return make_model({{1, 0}, {0, 1}}, T, G);
}

inline PomdpModel random_model(Dims d, std::uint64_t seed, double conditioning = 0.1) {
    GeneratorSpec s;
    s.dims = d;
    s.seed = seed;
    s.conditioning = conditioning;
    return generate_model(s);
}

inline std::vector<std::vector<std::size_t>> all_permutations(std::size_t n) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), 0);
    std::vector<std::vector<std::size_t>> out;
    do out.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
    return out;
}

inline double max_abs_diff(const Tensor3& a, const Tensor3& b) {
    REQUIRE(a.dims() == b.dims());
    double m = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

inline bool is_distribution(std::span<const double> v, double tol = 1e-12) {
    double s = 0.0;
    for (double x : v) {
        if (x < -tol) return false;
        s += x;
    }
    return std::abs(s - 1.0) <= tol * std::max<std::size_t>(v.size(), 1);
}

/// Gram-Schmidt on Gaussian columns.
inline Matrix random_orthonormal(std::size_t n, std::size_t k, Rng& rng) {
    Matrix q(n, k);
    for (std::size_t j = 0; j < k; ++j) {
        Vector v(n);
        for (double& x : v) x = rng.normal();
        for (std::size_t i = 0; i < j; ++i) {
            const Vector u = q.column(i);
            const double c = dot(u, v);
            for (std::size_t r = 0; r < n; ++r) v[r] -= c * u[r];
        }
        const double nrm = norm2(v);
        for (double& x : v) x /= nrm;
        q.set_column(j, v);
    }
    return q;
}

inline Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
    Matrix m(r, c);
    for (double& x : m.data()) x = rng.normal();
    return m;
}

}  // namespace testutil
