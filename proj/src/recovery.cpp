#include "spomdp/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <tuple>

#include "spomdp/random.hpp"

namespace spomdp {

double BoundConfig::lambda_for(std::size_t action) const {
    if (lambda.empty()) return 1.0;
    return lambda.size() == 1 ? lambda.front() : lambda.at(action);
}

void BoundConfig::validate(std::size_t A) const {
    if (!(C_O > 0.0 && C_R > 0.0 && C_T > 0.0)) throw Error(ErrorKind::ConfigError, "bound constants must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::ConfigError, "delta must lie in (0, 1)");
    if (!estimate_lambda) {
        if (lambda.size() != 1 && lambda.size() != A)
            throw Error(ErrorKind::ConfigError, "lambda needs one value or one per action");
        for (double l : lambda)
            if (!(l > 0.0)) throw Error(ErrorKind::ConfigError, "lambda must be positive");
    }
}

PomdpModel EstimatedPomdp::to_model(const Vector& reward_values) const {
    PomdpModel m;
    m.dims = dims;
    m.T = f_T;
    m.O = f_O;
    m.Gamma = f_R;
    m.reward_values = reward_values;
    m.r_max = reward_values.empty() ? 0.0 : reward_values.back();
    return m;
}

Vector recover_reward(std::span<const double> v2_col, const Dims& d) {
    if (v2_col.size() != d.Y * d.R) throw Error(ErrorKind::DimensionMismatch, "recover_reward: column must have Y*R entries");
    Vector out(d.R, 0.0);
    for (std::size_t n = 0; n < d.Y; ++n)
        for (std::size_t m = 0; m < d.R; ++m) out[m] += v2_col[view2_index(d, n, m)];
    return out;
}

RhoObservation recover_rho_and_observation(std::span<const double> v2_col, std::span<const double> pi_col, const Dims& d) {
    if (v2_col.size() != d.Y * d.R || pi_col.size() != d.Y)
        throw Error(ErrorKind::DimensionMismatch, "recover_rho_and_observation");
    for (double p : pi_col)
        if (!(p > 0.0)) throw Error(ErrorKind::PolicyFloorViolated, "recover_rho_and_observation: pi(l|y) must be positive");

    RhoObservation out;
    Vector raw(d.Y, 0.0);
    for (std::size_t n = 0; n < d.Y; ++n) {
        double s = 0.0;
        for (std::size_t m = 0; m < d.R; ++m) s += v2_col[view2_index(d, n, m)];
        raw[n] = s / pi_col[n];
        out.rho += raw[n];
    }
    if (!(out.rho > 0.0)) {
        out.f_O.assign(d.Y, 1.0 / static_cast<double>(d.Y));
        return out;
    }
    for (double& x : raw) x /= out.rho;
    out.f_O = project_simplex(raw);
    return out;
}

Matrix permute_columns(const Matrix& m, std::span<const std::size_t> perm) {
    if (perm.size() != m.cols()) throw Error(ErrorKind::DimensionMismatch, "permute_columns");
    Matrix out(m.rows(), m.cols());
    for (std::size_t j = 0; j < perm.size(); ++j)
        for (std::size_t i = 0; i < m.rows(); ++i) out(i, j) = m(i, perm[j]);
    return out;
}

Alignment align_permutations(const std::vector<Matrix>& O_by_action, std::span<const double> bounds_O) {
    if (O_by_action.empty() || bounds_O.size() != O_by_action.size())
        throw Error(ErrorKind::DimensionMismatch, "align_permutations: one bound per action required");
    const std::size_t A = O_by_action.size();
    const std::size_t X = O_by_action.front().cols();

    Alignment out;
    out.l_star = static_cast<std::size_t>(std::min_element(bounds_O.begin(), bounds_O.end()) - bounds_O.begin());
    const Matrix& ref = O_by_action[out.l_star];

    out.d_O_hat = 2.0;
    for (std::size_t i = 0; i < X; ++i)
        for (std::size_t j = i + 1; j < X; ++j) out.d_O_hat = std::min(out.d_O_hat, l1_distance(ref.column(i), ref.column(j)));
    const double worst = *std::max_element(bounds_O.begin(), bounds_O.end());
    out.warning = X > 1 && worst > out.d_O_hat / 4.0;

    out.perms.resize(A);
    for (std::size_t l = 0; l < A; ++l) {
        const Matrix& cur = O_by_action[l];
        std::vector<std::tuple<double, std::size_t, std::size_t>> cand;  // (distance, ref col, own col)
        for (std::size_t j = 0; j < X; ++j)
            for (std::size_t i = 0; i < X; ++i) cand.emplace_back(l1_distance(cur.column(i), ref.column(j)), j, i);
        std::sort(cand.begin(), cand.end());
        std::vector<bool> used_ref(X, false), used_own(X, false);
        out.perms[l].assign(X, 0);
        for (const auto& [dist, j, i] : cand) {
            if (used_ref[j] || used_own[i]) continue;
            used_ref[j] = used_own[i] = true;
            out.perms[l][j] = i;
        }
    }
    return out;
}

Matrix recover_transition(const Matrix& V3_aligned, const Matrix& O_hat, double tol, bool project) {
    const std::size_t X = O_hat.cols();
    if (V3_aligned.rows() != O_hat.rows() || V3_aligned.cols() != X)
        throw Error(ErrorKind::DimensionMismatch, "recover_transition: V3 must be Y x X");
    const SvdResult d = svd(O_hat);
    if (d.S.size() < X || d.S[X - 1] <= tol)
        throw Error(ErrorKind::RankDeficient, "recover_transition: estimated O is not full column rank");
    const Matrix Opinv = pseudo_inverse_rank(O_hat, X);
    Matrix out(X, X);
    for (std::size_t i = 0; i < X; ++i) {
        Vector row = Opinv * V3_aligned.column(i);
        if (project) row = project_simplex(row);
        for (std::size_t j = 0; j < X; ++j) out(i, j) = row[j];
    }
    return out;
}

Matrix augmented_design_matrix(const Matrix& f_O, const Tensor3& f_R, const MemorylessPolicy& pi) {
    const std::size_t Y = f_O.rows(), X = f_O.cols();
    const std::size_t A = f_R.dim(1), R = f_R.dim(2);
    if (f_R.dim(0) != X || pi.observations() != Y || pi.actions() != A)
        throw Error(ErrorKind::DimensionMismatch, "augmented_design_matrix");
    const Dims d{X, Y, A, R};
    Matrix W(A * Y * R, X);
    for (std::size_t j = 0; j < X; ++j)
        for (std::size_t k = 0; k < A; ++k)
            for (std::size_t n = 0; n < Y; ++n)
                for (std::size_t m = 0; m < R; ++m) W(view1_index(d, k, n, m), j) = pi.pi(n, k) * f_R(j, k, m) * f_O(n, j);
    return W;
}

Matrix recover_transition_augmented(const Matrix& V3_aug, const Matrix& f_O, const Tensor3& f_R,
                                    const MemorylessPolicy& pi, double tol) {
    const Matrix W = augmented_design_matrix(f_O, f_R, pi);
    const std::size_t X = W.cols();
    if (V3_aug.rows() != W.rows() || V3_aug.cols() != X)
        throw Error(ErrorKind::DimensionMismatch, "recover_transition_augmented: V3 must be (A*Y*R) x X");
    const SvdResult d = svd(W);
    if (d.S.size() < X || d.S[X - 1] <= tol)
        throw Error(ErrorKind::RankDeficient, "recover_transition_augmented: W is not full column rank");
    const Matrix Wpinv = pseudo_inverse_rank(W, X);
    Matrix out(X, X);
    for (std::size_t i = 0; i < X; ++i) {
        const Vector row = project_simplex(Wpinv * V3_aug.column(i));
        for (std::size_t j = 0; j < X; ++j) out(i, j) = row[j];
    }
    return out;
}

namespace {

double sigma_min(const Matrix& m, std::size_t rank) {
    const SvdResult d = svd(m);
    return d.S.size() < rank ? 0.0 : d.S[rank - 1];
}

}  // namespace

double estimate_lambda(const Matrix& O_hat, double pi_min_action, const Matrix& K13, const SpectralResult& s) {
    const std::size_t X = O_hat.cols();
    const double omega_min = *std::min_element(s.omega_hat.begin(), s.omega_hat.end());
    double view_min = std::numeric_limits<double>::infinity();
    for (const Matrix* v : {&s.V1_hat, &s.V2_hat, &s.V3_hat}) {
        const double sv = sigma_min(*v, X);
        view_min = std::min(view_min, sv * sv);
    }
    const double lambda = sigma_min(O_hat, X) * pi_min_action * pi_min_action * sigma_min(K13, X) *
                          std::pow(omega_min * view_min, 1.5);
    return std::max(lambda, 1e-12);
}

std::vector<ActionBounds> confidence_bounds(std::span<const std::size_t> n_per_action, const BoundConfig& cfg,
                                            const Dims& d, std::span<const double> lambdas) {
    const std::size_t A = n_per_action.size();
    const double log_term = std::log(1.0 / cfg.delta);
    const double YR = static_cast<double>(d.Y * d.R);
    const double X2 = static_cast<double>(d.X * d.X);
    auto clip = [](double b) { return std::clamp(b, 0.0, 2.0); };

    std::vector<ActionBounds> out(A);
    for (std::size_t l = 0; l < A; ++l) {
        const double lambda = lambdas.empty() ? cfg.lambda_for(l) : lambdas[l];
        if (n_per_action[l] == 0 || !(lambda > 0.0)) {
            out[l] = ActionBounds{2.0, 2.0, 2.0};
            continue;
        }
        const double n = static_cast<double>(n_per_action[l]);
        const double base = std::sqrt(YR * log_term / n) / lambda;
        out[l].B_O = clip(cfg.C_O * base);
        out[l].B_R = clip(cfg.C_R * base);
        out[l].B_T = clip(cfg.C_T * std::sqrt(YR * X2 * log_term / n) / lambda);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Full pipeline

namespace {

struct ActionEstimate {
    SpectralResult spectral;
    Matrix O;  ///< per-action observation estimate, Y x X
    std::vector<Vector> reward;  ///< per column
    std::size_t n = 0;
    double lambda = 1.0;
};

EstimatedPomdp assemble(std::vector<MomentSet> moments, std::span<const MemorylessPolicy* const> policies, const Dims& d,
                        const EstimatorConfig& cfg) {
    const std::size_t A = d.A, X = d.X;
    cfg.bounds.validate(A);
    std::vector<ActionEstimate> per(A);
    for (std::size_t l = 0; l < A; ++l) {
        try {
            SpectralConfig sc = cfg.spectral;
            sc.power.seed = derive_seed(cfg.spectral.power.seed, l);
            const Matrix K13 = moments[l].K13;
            per[l].n = moments[l].n;
            per[l].spectral = decompose(std::move(moments[l]), X, sc);
            const Vector pi_col = policies[l]->pi.column(l);
            per[l].O = Matrix(d.Y, X);
            for (std::size_t i = 0; i < X; ++i) {
                const Vector v2 = per[l].spectral.V2_hat.column(i);
                per[l].O.set_column(i, recover_rho_and_observation(v2, pi_col, d).f_O);
                per[l].reward.push_back(recover_reward(v2, d));
            }
            per[l].lambda = cfg.bounds.estimate_lambda
                                ? estimate_lambda(per[l].O, policies[l]->min_prob(l), K13, per[l].spectral)
                                : cfg.bounds.lambda_for(l);
        } catch (const ActionError&) {
            throw;
        } catch (const Error& e) {
            throw ActionError(e, l);
        }
    }

    EstimatedPomdp est;
    est.dims = d;
    est.n_per_action.resize(A);
    est.lambda_used.resize(A);
    for (std::size_t l = 0; l < A; ++l) {
        est.n_per_action[l] = per[l].n;
        est.lambda_used[l] = per[l].lambda;
    }
    est.bounds = confidence_bounds(est.n_per_action, cfg.bounds, d, est.lambda_used);

    std::vector<Matrix> O_by_action;
    Vector B_O(A);
    for (std::size_t l = 0; l < A; ++l) {
        O_by_action.push_back(per[l].O);
        B_O[l] = est.bounds[l].B_O;
    }
    const Alignment al = align_permutations(O_by_action, B_O);
    est.l_star = al.l_star;
    est.d_O_hat = al.d_O_hat;
    est.f_O = O_by_action[al.l_star];
    if (al.warning) {
        std::ostringstream os;
        os << "max per-action observation bound " << *std::max_element(B_O.begin(), B_O.end())
           << " exceeds d_O/4 = " << al.d_O_hat / 4.0 << "; column matching across actions may be wrong";
        est.permutation_warnings.push_back(os.str());
    }

    est.f_R = Tensor3(X, A, d.R);
    for (std::size_t l = 0; l < A; ++l)
        for (std::size_t j = 0; j < X; ++j) {
            const Vector& rw = per[l].reward[al.perms[l][j]];
            for (std::size_t m = 0; m < d.R; ++m) est.f_R(j, l, m) = rw[m];
        }

    est.f_T = Tensor3(X, X, A);
    for (std::size_t l = 0; l < A; ++l) {
        try {
            const Matrix V3 = permute_columns(per[l].spectral.V3_hat, al.perms[l]);
            const Matrix rows = cfg.augmented ? recover_transition_augmented(V3, est.f_O, est.f_R, *policies[l])
                                              : recover_transition(V3, est.f_O);
            for (std::size_t i = 0; i < X; ++i)
                for (std::size_t j = 0; j < X; ++j) est.f_T(i, j, l) = rows(i, j);
        } catch (const Error& e) {
            throw ActionError(e, l);
        }
    }
    return est;
}

}  // namespace

EstimatedPomdp estimate_from_sources(std::span<const ActionSource> sources, const Dims& d, const EstimatorConfig& cfg) {
    if (sources.size() != d.A) throw Error(ErrorKind::DimensionMismatch, "estimate_from_sources: one source per action");
    if (!cfg.augmented && d.Y < d.X)
        throw Error(ErrorKind::ConfigError, "Y < X needs the augmented third view");
    const ViewShape shape{d, cfg.augmented};
    std::vector<MomentSet> moments;
    std::vector<const MemorylessPolicy*> policies;
    for (std::size_t l = 0; l < d.A; ++l) {
        const ActionSource& src = sources[l];
        if (src.trajectory == nullptr || src.policy == nullptr)
            throw Error(ErrorKind::ConfigError, "estimate_from_sources: missing source");
        if (src.policy->observations() != d.Y || src.policy->actions() != d.A)
            throw Error(ErrorKind::DimensionMismatch, "estimate_from_sources: policy must be Y x A");
        try {
            const ActionViewDataset ds = build_views(*src.trajectory, shape, l);
            if (ds.n() < cfg.min_samples) {
                throw Error(ErrorKind::NoSamples, std::to_string(ds.n()) + " samples, need " + std::to_string(cfg.min_samples));
            }
            moments.push_back(empirical_covariances(ds));
        } catch (const Error& e) {
            throw ActionError(e, l);
        }
        policies.push_back(src.policy);
    }
    return assemble(std::move(moments), policies, d, cfg);
}

EstimatedPomdp estimate_all(const Trajectory& tr, const MemorylessPolicy& p, const Dims& d, const EstimatorConfig& cfg) {
    std::vector<ActionSource> sources(d.A, ActionSource{&tr, &p});
    return estimate_from_sources(sources, d, cfg);
}

EstimatedPomdp estimate_from_exact(const PomdpModel& m, const MemorylessPolicy& p, const EstimatorConfig& cfg,
                                   std::size_t nominal_n) {
    std::vector<MomentSet> moments;
    std::vector<const MemorylessPolicy*> policies(m.dims.A, &p);
    for (std::size_t l = 0; l < m.dims.A; ++l) {
        MomentSet k = moments_from_exact(exact_moments(m, p, l, cfg.augmented));
        k.n = nominal_n;
        moments.push_back(std::move(k));
    }
    return assemble(std::move(moments), policies, m.dims, cfg);
}

EstimationError estimation_error(const EstimatedPomdp& est, const PomdpModel& truth) {
    const auto [X, Y, A, R] = truth.dims;
    if (!(est.dims == truth.dims)) throw Error(ErrorKind::DimensionMismatch, "estimation_error: dimension mismatch");
    std::vector<std::size_t> perm(X);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<std::size_t> best_perm = perm;
    double best = std::numeric_limits<double>::infinity();
    do {
        double cost = 0.0;
        for (std::size_t i = 0; i < X; ++i) cost += l1_distance(est.f_O.column(i), truth.O.column(perm[i]));
        if (cost < best) {
            best = cost;
            best_perm = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    EstimationError e;
    e.permutation = best_perm;
    for (std::size_t i = 0; i < X; ++i) {
        const std::size_t ti = best_perm[i];
        double col = 0.0;
        for (std::size_t y = 0; y < Y; ++y) {
            const double diff = std::abs(est.f_O(y, i) - truth.O(y, ti));
            col += diff;
            e.O_max = std::max(e.O_max, diff);
        }
        e.O_l1 = std::max(e.O_l1, col);
        for (std::size_t a = 0; a < A; ++a) {
            double rl1 = 0.0, tl2 = 0.0;
            for (std::size_t r = 0; r < R; ++r) {
                const double diff = std::abs(est.f_R(i, a, r) - truth.Gamma(ti, a, r));
                rl1 += diff;
                e.R_max = std::max(e.R_max, diff);
            }
            for (std::size_t j = 0; j < X; ++j) {
                const double diff = est.f_T(i, j, a) - truth.T(ti, best_perm[j], a);
                tl2 += diff * diff;
                e.T_max = std::max(e.T_max, std::abs(diff));
            }
            e.R_l1 = std::max(e.R_l1, rl1);
            e.T_l2 = std::max(e.T_l2, std::sqrt(tl2));
        }
    }
    return e;
}

}  // namespace spomdp
