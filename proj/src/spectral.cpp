#include "spomdp/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spomdp/random.hpp"

namespace spomdp {

ActionViewDataset build_views(const Trajectory& tr, const ViewShape& shape, std::size_t action) {
    const Dims& d = shape.dims;
    if (action >= d.A) throw Error(ErrorKind::DimensionMismatch, "build_views: action out of range");
    if (tr.size() < 3) throw Error(ErrorKind::NoSamples, "build_views: trajectory shorter than 3 steps");

    ActionViewDataset out;
    out.action = action;
    out.shape = shape;
    const auto& s = tr.steps;
    for (std::size_t t = 1; t + 1 < s.size(); ++t) {
        if (s[t].a != action) continue;
        const Step& prev = s[t - 1];
        const Step& cur = s[t];
        const Step& next = s[t + 1];
        if (prev.a >= d.A || prev.y >= d.Y || prev.r >= d.R || cur.y >= d.Y || cur.r >= d.R || next.y >= d.Y ||
            next.a >= d.A || next.r >= d.R) {
            throw Error(ErrorKind::DimensionMismatch, "build_views: trajectory index out of range at step " + std::to_string(t));
        }
        const auto v1 = static_cast<std::uint32_t>(view1_index(d, prev.a, prev.y, prev.r));
        const auto v2 = static_cast<std::uint32_t>(view2_index(d, cur.y, cur.r));
        const auto v3 = static_cast<std::uint32_t>(shape.augmented ? view1_index(d, next.a, next.y, next.r) : next.y);
        out.samples.push_back({v1, v2, v3});
    }
    if (out.samples.empty()) {
        throw Error(ErrorKind::NoSamples, "action " + std::to_string(action) + " never played at an interior step");
    }
    return out;
}

MomentSet empirical_covariances(const ActionViewDataset& d) {
    const std::size_t d1 = d.shape.d1(), d2 = d.shape.d2(), d3 = d.shape.d3();
    if (d.n() == 0) throw Error(ErrorKind::NoSamples, "empirical_covariances: empty dataset");
    // Histogram first; every moment is a contraction of it.
    MomentSet m;
    m.n = d.n();
    m.P123 = Tensor3(d1, d2, d3);
    for (const auto& s : d.samples) m.P123(s[0], s[1], s[2]) += 1.0;
    const double inv = 1.0 / static_cast<double>(d.n());
    for (double& x : m.P123.data()) x *= inv;

    m.K12 = Matrix(d1, d2);
    m.K13 = Matrix(d1, d3);
    m.K23 = Matrix(d2, d3);
    for (std::size_t i = 0; i < d1; ++i)
        for (std::size_t j = 0; j < d2; ++j)
            for (std::size_t k = 0; k < d3; ++k) {
                const double p = m.P123(i, j, k);
                if (p == 0.0) continue;
                m.K12(i, j) += p;
                m.K13(i, k) += p;
                m.K23(j, k) += p;
            }
    return m;
}

MomentSet moments_from_exact(const ExactMoments& e) {
    MomentSet m;
    m.K12 = e.K12;
    m.K13 = e.K13;
    m.K23 = e.K23;
    m.P123 = e.P123;
    m.n = 0;
    return m;
}

namespace {

double sigma_at(const Matrix& m, std::size_t rank) {
    const SvdResult d = svd(m);
    return rank == 0 || d.S.size() < rank ? 0.0 : d.S[rank - 1];
}

}  // namespace

void symmetrize_and_moments(MomentSet& k, std::size_t rank, double tol) {
    if (k.K12.empty()) throw Error(ErrorKind::DimensionMismatch, "symmetrize_and_moments: covariances missing");
    const double s12 = sigma_at(k.K12, rank);
    if (s12 < tol) {
        throw Error(ErrorKind::IllConditioned,
                    "sigma_X(K12) = " + std::to_string(s12) + " below " + std::to_string(tol) + " (too few samples?)");
    }
    const Matrix K21 = k.K12.transpose();
    const Matrix K31 = k.K13.transpose();
    const Matrix K32 = k.K23.transpose();
    const Matrix S1 = K32 * pseudo_inverse_rank(k.K12, rank);  // d3 x d1
    const Matrix S2 = K31 * pseudo_inverse_rank(K21, rank);    // d3 x d2
    k.M2_hat = S1 * k.K12 * S2.transpose();
    k.M3_hat = tensor_multilinear(k.P123, S1.transpose(), S2.transpose(), Matrix::identity(k.P123.dim(2)));
}

Whitening whiten(const Matrix& M2, std::size_t rank) {
    if (M2.rows() != M2.cols()) throw Error(ErrorKind::DimensionMismatch, "whiten: M2 must be square");
    if (rank == 0 || rank > M2.rows()) throw Error(ErrorKind::DimensionMismatch, "whiten: rank out of range");
    const Matrix sym = 0.5 * (M2 + M2.transpose());
    const SvdResult d = svd(sym);

    Whitening w{Matrix(M2.rows(), rank), Matrix(M2.rows(), rank), Vector(rank)};
    for (std::size_t k = 0; k < rank; ++k) {
        const Vector u = d.U.column(k);
        const double lambda = dot(u, sym * u);  // signed eigenvalue
        if (lambda < 1e-10) {
            throw Error(ErrorKind::RankDeficient, "whiten: eigenvalue " + std::to_string(k) + " of M2 is " + std::to_string(lambda));
        }
        w.eigenvalues[k] = lambda;
        const double s = std::sqrt(lambda);
        for (std::size_t i = 0; i < M2.rows(); ++i) {
            w.W(i, k) = u[i] / s;
            w.W_pinvT(i, k) = u[i] * s;
        }
    }
    return w;
}

PowerResult tensor_power_method(const Tensor3& M3w, const PowerConfig& cfg) {
    const std::size_t k = M3w.dim(0);
    if (k == 0 || M3w.dim(1) != k || M3w.dim(2) != k) throw Error(ErrorKind::DimensionMismatch, "tensor_power_method: cubic tensor required");
    if (cfg.restarts < 1 || cfg.iters < 1) throw Error(ErrorKind::ConfigError, "tensor_power_method: restarts and iters must be positive");
    if (!M3w.all_finite()) throw Error(ErrorKind::NonFinite, "tensor_power_method");

    Rng rng(cfg.seed);
    Tensor3 t = M3w;
    PowerResult out;

    // Returns the final step size.
    auto iterate = [&](Vector& v, int budget) {
        double delta = std::numeric_limits<double>::infinity();
        for (int it = 0; it < budget; ++it) {
            Vector w = tensor_contract_pair(t, v);
            const double nrm = norm2(w);
            if (!(nrm > 0.0) || !std::isfinite(nrm)) return delta;
            for (double& x : w) x /= nrm;
            delta = l2_distance(w, v);
            v = std::move(w);
            if (delta < cfg.tol) break;
        }
        return delta;
    };

    for (std::size_t comp = 0; comp < k; ++comp) {
        Vector best;
        double best_value = -std::numeric_limits<double>::infinity();
        for (int r = 0; r < cfg.restarts; ++r) {
            Vector v(k);
            for (double& x : v) x = rng.normal();
            const double nrm = norm2(v);
            for (double& x : v) x /= nrm;
            iterate(v, cfg.iters);
            const double value = tensor_contract_all(t, v);
            ++out.restarts_used;
            if (value > best_value) {
                best_value = value;
                best = v;
            }
        }
        const double delta = iterate(best, 10 * cfg.iters);
        if (!(delta < cfg.tol)) {
            throw Error(ErrorKind::NoConvergence,
                        "tensor_power_method: component " + std::to_string(comp) + " step " + std::to_string(delta));
        }
        const double value = tensor_contract_all(t, best);
        if (!(value > 0.0)) {
            throw Error(ErrorKind::NegativeEigenvalue,
                        "tensor_power_method: component " + std::to_string(comp) + " eigenvalue " + std::to_string(value));
        }
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b)
                for (std::size_t c = 0; c < k; ++c) t(a, b, c) -= value * best[a] * best[b] * best[c];
        out.pairs.push_back(Eigenpair{value, std::move(best)});
    }
    return out;
}

SpectralResult dewhiten_and_recover_views(const PowerResult& pairs, const Whitening& w, const MomentSet& k,
                                          std::size_t rank, const SpectralConfig& cfg) {
    if (pairs.pairs.size() != rank) throw Error(ErrorKind::DimensionMismatch, "dewhiten: need one eigenpair per state");
    const std::size_t d3 = w.W.rows();

    SpectralResult out;
    out.restarts_used = pairs.restarts_used;
    out.V3_hat = Matrix(d3, rank);
    out.omega_hat.resize(rank);
    out.eigenvalues.resize(rank);
    for (std::size_t i = 0; i < rank; ++i) {
        const auto& [lambda, v] = pairs.pairs[i];
        Vector scaled = v;
        for (double& x : scaled) x *= lambda;
        const Vector mu = w.W_pinvT * scaled;
        out.V3_hat.set_column(i, project_simplex(mu));
        out.eigenvalues[i] = lambda;
        out.omega_hat[i] = std::max(1.0 / (lambda * lambda), cfg.omega_floor);
    }
    double total = 0.0;
    for (double x : out.omega_hat) total += x;
    for (double& x : out.omega_hat) x /= total;

    // Invert the symmetrization maps: mu2 = K21 K31^+ mu3, mu1 = K12 K32^+ mu3.
    const Matrix K31 = k.K13.transpose();
    const Matrix K32 = k.K23.transpose();
    if (sigma_at(K31, rank) < cfg.cond_tol || sigma_at(K32, rank) < cfg.cond_tol) {
        throw Error(ErrorKind::IllConditioned, "dewhiten: third-view covariances below rank");
    }
    const Matrix to_v2 = k.K12.transpose() * pseudo_inverse_rank(K31, rank, cfg.pinv_tol);
    const Matrix to_v1 = k.K12 * pseudo_inverse_rank(K32, rank, cfg.pinv_tol);
    out.V2_hat = Matrix(to_v2.rows(), rank);
    out.V1_hat = Matrix(to_v1.rows(), rank);
    for (std::size_t i = 0; i < rank; ++i) {
        const Vector mu3 = out.V3_hat.column(i);
        out.V2_hat.set_column(i, project_simplex(to_v2 * mu3));
        out.V1_hat.set_column(i, project_simplex(to_v1 * mu3));
    }
    return out;
}

SpectralResult decompose(MomentSet k, std::size_t rank, const SpectralConfig& cfg) {
    symmetrize_and_moments(k, rank, cfg.cond_tol);
    const Whitening w = whiten(k.M2_hat, rank);
    const Tensor3 m3w = symmetrize(tensor_multilinear(k.M3_hat, w.W, w.W, w.W));
    const PowerResult pairs = tensor_power_method(m3w, cfg.power);
    return dewhiten_and_recover_views(pairs, w, k, rank, cfg);
}

}  // namespace spomdp
