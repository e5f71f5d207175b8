#include "spomdp/smucrl.hpp"

#include <cmath>
#include <limits>

#include "spomdp/parallel.hpp"
#include "spomdp/random.hpp"

namespace spomdp {

bool AdmissibleSet::contains(const PomdpModel& m, double tol) const {
    const Dims& d = center.dims;
    if (!(m.dims == d)) return false;
    const double rO = observation_radius();
    for (std::size_t x = 0; x < d.X; ++x)
        if (l1_distance(m.O.column(x), center.f_O.column(x)) > rO + tol) return false;
    for (std::size_t a = 0; a < d.A; ++a) {
        const ActionBounds& b = center.bounds[a];
        for (std::size_t x = 0; x < d.X; ++x) {
            double r1 = 0.0, t2 = 0.0;
            for (std::size_t r = 0; r < d.R; ++r) r1 += std::abs(m.Gamma(x, a, r) - center.f_R(x, a, r));
            for (std::size_t x2 = 0; x2 < d.X; ++x2) {
                const double diff = m.T(x, x2, a) - center.f_T(x, x2, a);
                t2 += diff * diff;
            }
            if (r1 > b.B_R + tol || std::sqrt(t2) > b.B_T + tol) return false;
        }
    }
    return true;
}

namespace {

enum class Norm { L1, L2 };

double norm_of(const Vector& v, Norm n) { return n == Norm::L1 ? norm1(v) : norm2(v); }

Vector perturb(const Vector& c, double radius, Norm n, Rng& rng) {
    if (!(radius > 0.0) || c.size() < 2) return c;
    Vector dir(c.size());
    double mean = 0.0;
    for (double& x : dir) mean += x = rng.normal();
    mean /= static_cast<double>(c.size());
    for (double& x : dir) x -= mean;
    const double len = norm_of(dir, n);
    if (!(len > 0.0)) return c;
    const double step = radius * rng.uniform() / len;
    Vector cand(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) cand[i] = c[i] + step * dir[i];
    cand = project_simplex(cand);

    Vector diff(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) diff[i] = cand[i] - c[i];
    const double dist = norm_of(diff, n);
    if (dist > radius) {
        // Convex combination of two simplex points stays on the simplex.
        const double s = radius / dist;
        for (std::size_t i = 0; i < c.size(); ++i) cand[i] = c[i] + s * diff[i];
    }
    return cand;
}

}  // namespace

std::vector<PomdpModel> sample_admissible(const AdmissibleSet& s, std::size_t count, std::uint64_t seed) {
    if (count == 0) throw Error(ErrorKind::ConfigError, "sample_admissible: count must be positive");
    const Dims& d = s.center.dims;
    const PomdpModel center = s.center.to_model(s.reward_values);
    std::vector<PomdpModel> out{center};
    Rng rng(seed);
    for (std::size_t k = 1; k < count; ++k) {
        PomdpModel m = center;
        for (std::size_t x = 0; x < d.X; ++x) m.O.set_column(x, perturb(center.O.column(x), s.observation_radius(), Norm::L1, rng));
        for (std::size_t a = 0; a < d.A; ++a) {
            const ActionBounds& b = s.center.bounds[a];
            for (std::size_t x = 0; x < d.X; ++x) {
                Vector g(d.R), t(d.X);
                for (std::size_t r = 0; r < d.R; ++r) g[r] = center.Gamma(x, a, r);
                for (std::size_t x2 = 0; x2 < d.X; ++x2) t[x2] = center.T(x, x2, a);
                g = perturb(g, b.B_R, Norm::L1, rng);
                t = perturb(t, b.B_T, Norm::L2, rng);
                for (std::size_t r = 0; r < d.R; ++r) m.Gamma(x, a, r) = g[r];
                for (std::size_t x2 = 0; x2 < d.X; ++x2) m.T(x, x2, a) = t[x2];
            }
        }
        out.push_back(std::move(m));
    }
    return out;
}

OptimisticResult optimistic_policy(const AdmissibleSet& s, const PlannerConfig& cfg, std::uint64_t seed,
                                   const std::vector<PomdpModel>& extra) {
    std::vector<PomdpModel> models = sample_admissible(s, cfg.n_model_samples, seed);
    models.insert(models.end(), extra.begin(), extra.end());

    std::vector<std::optional<PlanResult>> plans(models.size());
    std::vector<std::optional<Error>> errors(models.size());
    parallel_for(models.size(), cfg.threads, [&](std::size_t i) {
        try {
            plans[i] = plan_memoryless(models[i], cfg, derive_seed(seed, i + 1));
        } catch (const Error& e) {
            errors[i] = e;
        }
    });

    OptimisticResult out;
    out.eta_tilde = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t i = 0; i < models.size(); ++i) {
        if (!plans[i]) {
            ++out.failed;
            continue;
        }
        if (!any || plans[i]->eta > out.eta_tilde) {
            any = true;
            out.eta_tilde = plans[i]->eta;
            out.policy = plans[i]->policy;
            out.model_index = i;
        }
    }
    if (!any) throw *errors.front();
    out.model = models[out.model_index];
    return out;
}

std::size_t SmUcrlConfig::burn_in_for(const Dims& d) const {
    return burn_in > 0 ? burn_in : std::max<std::size_t>(10 * d.Y * d.A * d.R, 2000);
}

ExperimentLog run_smucrl(const PomdpModel& truth, std::size_t horizon, const SmUcrlConfig& cfg, std::uint64_t seed) {
    require_valid(truth);
    const Dims& d = truth.dims;
    cfg.planner.validate(d.A);
    if (horizon == 0) throw Error(ErrorKind::ConfigError, "run_smucrl: horizon must be positive");
    const double delta = cfg.delta_override ? *cfg.delta_override
                                            : cfg.delta_prime / std::pow(static_cast<double>(horizon), 6.0);
    if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::ConfigError, "run_smucrl: delta must lie in (0, 1)");

    ExperimentLog log;
    log.agent = "smucrl";
    log.seed = seed;
    log.horizon = horizon;
    log.eta_plus = cfg.eta_plus ? *cfg.eta_plus : optimal_average_reward(truth, cfg.planner, derive_seed(seed, 0)).eta_plus;
    log.rewards.reserve(horizon);

    Environment env(truth, derive_seed(seed, 1));
    Rng act_rng(derive_seed(seed, 2));
    std::vector<Trajectory> trajectories;
    std::vector<MemorylessPolicy> policies;
    std::vector<std::size_t> retained(d.A, 0), retained_from(d.A, 0);

    const std::size_t burn_in = cfg.burn_in_for(d);
    MemorylessPolicy policy = MemorylessPolicy::uniform(d.Y, d.A);
    std::size_t t = 0;
    for (std::size_t k = 0; t < horizon; ++k) {
        EpisodeRecord rec;
        rec.index = k;
        rec.start = t;
        rec.N = retained;
        rec.source = retained_from;
        rec.v.assign(d.A, 0);

        if (k > 0) {
            try {
                std::vector<ActionSource> sources;
                for (std::size_t l = 0; l < d.A; ++l)
                    sources.push_back(ActionSource{&trajectories[retained_from[l]], &policies[retained_from[l]]});
                EstimatorConfig ec = cfg.estimator;
                ec.bounds.delta = delta;
                ec.spectral.power.seed = derive_seed(seed, 1000 + k);
                AdmissibleSet set{estimate_from_sources(sources, d, ec), truth.reward_values};
                rec.bounds = set.center.bounds;
                if (cfg.track_errors) rec.error = estimation_error(set.center, truth);
                const OptimisticResult opt = optimistic_policy(set, cfg.planner, derive_seed(seed, 2000 + k));
                policy = opt.policy;
                rec.eta_tilde = opt.eta_tilde;
            } catch (const Error& e) {
                rec.anomaly = std::string("estimation failed, keeping previous policy: ") + e.what();
                log.anomalies.push_back("episode " + std::to_string(k) + ": " + rec.anomaly);
            }
        }
        rec.policy = policy;
        rec.eta_true = induced_chain(truth, policy).eta;

        // Action rows copied once; the hot loop only samples.
        std::vector<Vector> rows(d.Y);
        for (std::size_t y = 0; y < d.Y; ++y) rows[y] = policy.pi.row(y);

        Trajectory tr;
        tr.seed = seed;
        const std::size_t budget = k == 0 ? std::min(burn_in, horizon) : horizon - t;
        while (tr.size() < budget && t < horizon) {
            const std::uint32_t y = env.observation();
            const std::uint32_t x = env.hidden_state();
            const auto a = static_cast<std::uint32_t>(act_rng.categorical(rows[y]));
            const std::uint32_t r = env.act(a);
            tr.steps.push_back(Step{y, a, r});
            tr.states.push_back(x);
            log.rewards.push_back(truth.reward_values[r]);
            ++t;
            ++rec.v[a];
            if (k > 0 && rec.v[a] >= 2 * std::max<std::size_t>(retained[a], 1)) {
                rec.stopped_by_rule = true;
                break;
            }
        }
        rec.length = tr.size();

        trajectories.push_back(std::move(tr));
        policies.push_back(policy);
        for (std::size_t l = 0; l < d.A; ++l)
            if (rec.v[l] > retained[l]) {
                retained[l] = rec.v[l];
                retained_from[l] = k;
            }
        // Drop trajectories no action refers to any more.
        for (std::size_t j = 0; j + 1 < trajectories.size(); ++j) {
            bool used = false;
            for (std::size_t l = 0; l < d.A; ++l) used = used || retained_from[l] == j;
            if (!used) trajectories[j] = Trajectory{};
        }
        log.episodes.push_back(std::move(rec));
    }
    return log;
}

}  // namespace spomdp
