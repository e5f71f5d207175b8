#include "spomdp/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "spomdp/parallel.hpp"
#include "spomdp/random.hpp"

namespace spomdp {

namespace fs = std::filesystem;

std::string_view agent_name(Agent a) {
    switch (a) {
        case Agent::SmUcrl: return "smucrl";
        case Agent::Random: return "random";
        case Agent::QLearning: return "qlearning";
        case Agent::UcrlMdp: return "ucrl-mdp";
    }
    return "?";
}

Agent parse_agent(std::string_view name) {
    for (Agent a : {Agent::SmUcrl, Agent::Random, Agent::QLearning, Agent::UcrlMdp})
        if (agent_name(a) == name) return a;
    throw Error(ErrorKind::ConfigError, "unknown agent \"" + std::string(name) + "\"");
}

// ---------------------------------------------------------------------------
// Config

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::ConfigError, "config: " + what); }

void check_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) config_error(where + " must be an object");
    for (const auto& [key, _] : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return key == k; }))
            config_error("unknown key \"" + key + "\" in " + where);
    }
}

template <class T>
void read(const Json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        config_error(std::string("bad value for \"") + key + "\"");
    }
}

GeneratorSpec parse_generator(const Json& g) {
    check_keys(g, "model.generate", {"X", "Y", "A", "R", "seed", "conditioning", "r_max", "max_attempts"});
    GeneratorSpec s;
    read(g, "X", s.dims.X);
    read(g, "Y", s.dims.Y);
    read(g, "A", s.dims.A);
    read(g, "R", s.dims.R);
    read(g, "seed", s.seed);
    read(g, "conditioning", s.conditioning);
    read(g, "r_max", s.r_max);
    read(g, "max_attempts", s.max_attempts);
    return s;
}

Json generator_to_json(const GeneratorSpec& s) {
    return {{"X", s.dims.X}, {"Y", s.dims.Y}, {"A", s.dims.A}, {"R", s.dims.R}, {"seed", s.seed},
            {"conditioning", s.conditioning}, {"r_max", s.r_max}, {"max_attempts", s.max_attempts}};
}

}  // namespace

ExperimentConfig parse_experiment_config(const Json& j, const fs::path& base_dir) {
    check_keys(j, "config", {"schema", "model", "agent", "agents", "horizon", "seeds", "checkpoints", "output_dir",
                             "bounds", "planner", "smucrl", "qlearning", "ucrl", "estimate"});
    ExperimentConfig c;
    if (!j.contains("schema")) config_error("missing \"schema\"");
    read(j, "schema", c.schema);
    if (c.schema != kConfigSchema) config_error("unsupported schema " + std::to_string(c.schema));

    if (!j.contains("model")) config_error("missing \"model\"");
    const Json& model = j["model"];
    if (model.is_string()) {
        fs::path p = model.get<std::string>();
        c.model = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    } else if (model.is_object() && model.contains("generate")) {
        check_keys(model, "model", {"generate"});
        c.model = parse_generator(model["generate"]);
    } else {
        config_error("\"model\" must be a path or {\"generate\": {...}}");
    }

    if (j.contains("agent") && j.contains("agents")) config_error("give either \"agent\" or \"agents\"");
    if (j.contains("agent")) c.agents = {parse_agent(j["agent"].get<std::string>())};
    if (j.contains("agents")) {
        if (!j["agents"].is_array()) config_error("\"agents\" must be a list");
        c.agents.clear();
        for (const auto& a : j["agents"]) c.agents.push_back(parse_agent(a.get<std::string>()));
    }
    read(j, "horizon", c.horizon);
    read(j, "seeds", c.seeds);
    read(j, "checkpoints", c.checkpoints);
    if (j.contains("output_dir")) {
        fs::path p = j["output_dir"].get<std::string>();
        c.output_dir = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }

    BoundConfig& b = c.smucrl.estimator.bounds;
    if (j.contains("bounds")) {
        const Json& jb = j["bounds"];
        check_keys(jb, "bounds", {"C_O", "C_R", "C_T", "lambda", "delta", "delta_prime", "delta_override", "diagnostics"});
        read(jb, "C_O", b.C_O);
        read(jb, "C_R", b.C_R);
        read(jb, "C_T", b.C_T);
        read(jb, "delta", b.delta);
        read(jb, "delta_prime", c.smucrl.delta_prime);
        if (jb.contains("delta_override") && !jb["delta_override"].is_null())
            c.smucrl.delta_override = jb["delta_override"].get<double>();
        if (jb.contains("lambda")) {
            const Json& l = jb["lambda"];
            if (l.is_string()) {
                if (l.get<std::string>() != "estimate") config_error("\"lambda\" must be numbers or \"estimate\"");
                b.estimate_lambda = true;
            } else if (l.is_number()) {
                b.lambda = {l.get<double>()};
            } else {
                read(jb, "lambda", b.lambda);
            }
        }
        if (jb.contains("diagnostics")) {
            const Json& d = jb["diagnostics"];
            check_keys(d, "bounds.diagnostics", {"G", "theta", "Theta", "N_bar"});
            BoundConfig::Diagnostics diag;
            read(d, "G", diag.G);
            read(d, "theta", diag.theta);
            read(d, "Theta", diag.Theta);
            read(d, "N_bar", diag.N_bar);
            b.diagnostics = diag;
        }
    }
    PlannerConfig& p = c.smucrl.planner;
    if (j.contains("planner")) {
        const Json& jp = j["planner"];
        check_keys(jp, "planner", {"n_model_samples", "am_iters", "am_restarts", "policy_floor", "grid_resolution", "threads"});
        read(jp, "n_model_samples", p.n_model_samples);
        read(jp, "am_iters", p.am_iters);
        read(jp, "am_restarts", p.am_restarts);
        read(jp, "policy_floor", p.policy_floor);
        read(jp, "grid_resolution", p.grid_resolution);
        read(jp, "threads", p.threads);
    }
    if (j.contains("smucrl")) {
        const Json& js = j["smucrl"];
        check_keys(js, "smucrl", {"burn_in", "min_samples", "augmented", "track_errors"});
        read(js, "burn_in", c.smucrl.burn_in);
        read(js, "min_samples", c.smucrl.estimator.min_samples);
        read(js, "augmented", c.smucrl.estimator.augmented);
        read(js, "track_errors", c.smucrl.track_errors);
    }
    if (j.contains("qlearning")) {
        const Json& jq = j["qlearning"];
        check_keys(jq, "qlearning", {"gamma", "alpha_exponent", "epsilon_min"});
        read(jq, "gamma", c.qlearning.gamma);
        read(jq, "alpha_exponent", c.qlearning.alpha_exponent);
        read(jq, "epsilon_min", c.qlearning.epsilon_min);
    }
    if (j.contains("ucrl")) {
        const Json& ju = j["ucrl"];
        check_keys(ju, "ucrl", {"delta", "max_vi_iters"});
        read(ju, "delta", c.ucrl.delta);
        read(ju, "max_vi_iters", c.ucrl.max_vi_iters);
    }
    if (j.contains("estimate")) {
        const Json& je = j["estimate"];
        check_keys(je, "estimate", {"sample_sizes", "policy"});
        read(je, "sample_sizes", c.sample_sizes);
        if (je.contains("policy") && !je["policy"].is_null()) {
            fs::path pp = je["policy"].get<std::string>();
            c.policy = pp.is_relative() && !base_dir.empty() ? base_dir / pp : pp;
        }
    }
    c.validate();
    return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
    return parse_experiment_config(read_json(path), path.parent_path());
}

Json experiment_config_to_json(const ExperimentConfig& c) {
    Json j;
    j["schema"] = c.schema;
    if (const auto* p = std::get_if<fs::path>(&c.model)) {
        j["model"] = p->string();
    } else {
        j["model"] = {{"generate", generator_to_json(std::get<GeneratorSpec>(c.model))}};
    }
    Json agents = Json::array();
    for (Agent a : c.agents) agents.push_back(std::string(agent_name(a)));
    j["agents"] = agents;
    j["horizon"] = c.horizon;
    j["seeds"] = c.seeds;
    j["checkpoints"] = c.checkpoints;
    j["output_dir"] = c.output_dir.string();
    const BoundConfig& b = c.smucrl.estimator.bounds;
    j["bounds"] = {{"C_O", b.C_O}, {"C_R", b.C_R}, {"C_T", b.C_T},
                   {"lambda", b.estimate_lambda ? Json("estimate") : Json(b.lambda)},
                   {"delta", b.delta}, {"delta_prime", c.smucrl.delta_prime},
                   {"delta_override", c.smucrl.delta_override ? Json(*c.smucrl.delta_override) : Json()}};
    if (b.diagnostics)
        j["bounds"]["diagnostics"] = {{"G", b.diagnostics->G}, {"theta", b.diagnostics->theta},
                                      {"Theta", b.diagnostics->Theta}, {"N_bar", b.diagnostics->N_bar}};
    const PlannerConfig& p = c.smucrl.planner;
    j["planner"] = {{"n_model_samples", p.n_model_samples}, {"am_iters", p.am_iters}, {"am_restarts", p.am_restarts},
                    {"policy_floor", p.policy_floor}, {"grid_resolution", p.grid_resolution}, {"threads", p.threads}};
    j["smucrl"] = {{"burn_in", c.smucrl.burn_in}, {"min_samples", c.smucrl.estimator.min_samples},
                   {"augmented", c.smucrl.estimator.augmented}, {"track_errors", c.smucrl.track_errors}};
    j["qlearning"] = {{"gamma", c.qlearning.gamma}, {"alpha_exponent", c.qlearning.alpha_exponent},
                      {"epsilon_min", c.qlearning.epsilon_min}};
    j["ucrl"] = {{"delta", c.ucrl.delta}, {"max_vi_iters", c.ucrl.max_vi_iters}};
    j["estimate"] = {{"sample_sizes", c.sample_sizes}, {"policy", c.policy ? Json(c.policy->string()) : Json()}};
    return j;
}

void ExperimentConfig::validate() const {
    if (horizon < 1) config_error("horizon must be at least 1");
    if (seeds.empty()) config_error("seeds must be nonempty");
    if (agents.empty()) config_error("agents must be nonempty");
    if (checkpoints < 1) config_error("checkpoints must be positive");
    if (sample_sizes.empty()) config_error("estimate.sample_sizes must be nonempty");
    if (smucrl.estimator.min_samples < 1) config_error("min_samples must be positive");
    smucrl.estimator.bounds.validate(std::max<std::size_t>(smucrl.estimator.bounds.lambda.size(), 1));
    if (!(smucrl.delta_prime > 0.0 && smucrl.delta_prime < 1.0)) config_error("delta_prime must lie in (0, 1)");
    qlearning.validate();
    ucrl.validate();
    if (const auto* g = std::get_if<GeneratorSpec>(&model)) {
        if (g->dims.X == 0 || g->dims.Y == 0 || g->dims.A == 0 || g->dims.R == 0)
            config_error("generator dims must be positive");
    }
}

PomdpModel ExperimentConfig::load_model() const {
    PomdpModel m = std::holds_alternative<GeneratorSpec>(model) ? generate_model(std::get<GeneratorSpec>(model))
                                                               : spomdp::load_model(std::get<fs::path>(model));
    const Dims& d = m.dims;
    smucrl.planner.validate(d.A);
    smucrl.estimator.bounds.validate(d.A);
    const bool needs_spectral = std::find(agents.begin(), agents.end(), Agent::SmUcrl) != agents.end();
    if (needs_spectral && d.Y < d.X && !smucrl.estimator.augmented)
        config_error("Y < X requires smucrl.augmented = true");
    return m;
}

// ---------------------------------------------------------------------------
// Bench

std::vector<std::size_t> checkpoint_steps(std::size_t horizon, std::size_t count) {
    std::vector<std::size_t> out;
    for (std::size_t i = 1; i <= count; ++i) {
        const auto t = static_cast<std::size_t>(std::llround(static_cast<double>(i) * static_cast<double>(horizon) /
                                                             static_cast<double>(count)));
        if (t >= 1 && (out.empty() || t > out.back())) out.push_back(t);
    }
    return out;
}

bool BenchSummary::all_ok() const {
    return std::all_of(runs.begin(), runs.end(), [](const RunOutcome& r) { return r.ok && r.audit.empty(); });
}

namespace {

ExperimentLog run_agent(Agent agent, const PomdpModel& m, const ExperimentConfig& cfg, std::uint64_t seed, double eta_plus) {
    BaselineReference ref{eta_plus, cfg.smucrl.planner.policy_floor, cfg.smucrl.planner.grid_resolution};
    switch (agent) {
        case Agent::SmUcrl: {
            SmUcrlConfig sc = cfg.smucrl;
            sc.eta_plus = eta_plus;
            return run_smucrl(m, cfg.horizon, sc, seed);
        }
        case Agent::Random: return run_random(m, cfg.horizon, seed, ref);
        case Agent::QLearning: return run_qlearning(m, cfg.horizon, cfg.qlearning, seed, ref);
        case Agent::UcrlMdp: return run_ucrl_mdp(m, cfg.horizon, cfg.ucrl, seed, ref);
    }
    throw Error(ErrorKind::ConfigError, "unknown agent");
}

std::string run_stem(Agent a, std::uint64_t seed) { return std::string(agent_name(a)) + "_seed" + std::to_string(seed); }

struct Band {
    std::vector<double> mean, stderr_;
    std::size_t n = 0;
};

Band band_of(const std::vector<const RunOutcome*>& runs, std::size_t points) {
    Band b;
    b.mean.assign(points, 0.0);
    b.stderr_.assign(points, 0.0);
    b.n = runs.size();
    if (runs.empty()) return b;
    for (std::size_t i = 0; i < points; ++i) {
        double s = 0.0;
        for (const RunOutcome* r : runs) s += r->checkpoint_average[i];
        const double mean = s / static_cast<double>(runs.size());
        double ss = 0.0;
        for (const RunOutcome* r : runs) ss += (r->checkpoint_average[i] - mean) * (r->checkpoint_average[i] - mean);
        b.mean[i] = mean;
        if (runs.size() > 1)
            b.stderr_[i] = std::sqrt(ss / static_cast<double>(runs.size() - 1)) / std::sqrt(static_cast<double>(runs.size()));
    }
    return b;
}

}  // namespace

BenchSummary cmd_bench(const ExperimentConfig& cfg, unsigned threads, bool write) {
    cfg.validate();
    const PomdpModel m = cfg.load_model();
    BenchSummary summary;
    summary.eta_plus = optimal_average_reward(m, cfg.smucrl.planner, derive_seed(cfg.seeds.front(), 0)).eta_plus;
    summary.checkpoints = checkpoint_steps(cfg.horizon, cfg.checkpoints);

    // Deduplicated seeds, jobs in (agent, seed) order.
    std::vector<std::uint64_t> seeds = cfg.seeds;
    std::sort(seeds.begin(), seeds.end());
    seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
    std::vector<Agent> agents;
    for (Agent a : cfg.agents)
        if (std::find(agents.begin(), agents.end(), a) == agents.end()) agents.push_back(a);
    for (Agent a : agents)
        for (std::uint64_t s : seeds) {
            RunOutcome r;
            r.agent = a;
            r.seed = s;
            summary.runs.push_back(std::move(r));
        }

    const fs::path runs_dir = cfg.output_dir / "runs";
    if (write) fs::create_directories(runs_dir);

    parallel_for(summary.runs.size(), threads, [&](std::size_t i) {
        RunOutcome& out = summary.runs[i];
        try {
            const ExperimentLog log = run_agent(out.agent, m, cfg, out.seed, summary.eta_plus);
            out.ok = true;
            out.average_reward = log.average_reward();
            const std::vector<double> avg = running_average(log.rewards);
            for (std::size_t t : summary.checkpoints) out.checkpoint_average.push_back(avg.at(t - 1));
            if (out.agent == Agent::SmUcrl) out.audit = audit_episodes(log, m.dims.A);
            if (write) {
                write_log_csv(log, runs_dir / (run_stem(out.agent, out.seed) + ".csv"));
                write_json(log_sidecar(log), runs_dir / (run_stem(out.agent, out.seed) + ".json"));
            }
        } catch (const std::exception& e) {
            out.ok = false;
            out.error = e.what();
        }
    });

    if (!write) return summary;

    Json js;
    js["schema"] = kConfigSchema;
    js["eta_plus"] = summary.eta_plus;
    js["horizon"] = cfg.horizon;
    js["checkpoints"] = summary.checkpoints;
    js["config"] = experiment_config_to_json(cfg);
    Json per_agent = Json::object();
    fs::create_directories(cfg.output_dir / "plot_data");
    std::vector<double> xs(summary.checkpoints.begin(), summary.checkpoints.end());
    std::vector<SvgSeries> series;
    for (Agent a : agents) {
        std::vector<const RunOutcome*> good;
        Json runs = Json::array();
        for (const RunOutcome& r : summary.runs) {
            if (r.agent != a) continue;
            Json jr = {{"seed", r.seed}, {"status", r.ok ? "ok" : "failed"}};
            if (r.ok) {
                jr["terminal_average_reward"] = r.average_reward;
                good.push_back(&r);
            } else {
                jr["error"] = r.error;
            }
            if (!r.audit.empty()) jr["audit_violations"] = r.audit;
            runs.push_back(jr);
        }
        const Band band = band_of(good, summary.checkpoints.size());
        Json ja;
        ja["runs"] = runs;
        ja["succeeded"] = good.size();
        ja["failed"] = runs.size() - good.size();
        ja["mean"] = band.mean;
        if (good.size() > 1) ja["stderr"] = band.stderr_;
        if (!good.empty()) {
            ja["terminal_mean"] = band.mean.back();
            if (good.size() > 1) ja["terminal_stderr"] = band.stderr_.back();
        }
        per_agent[std::string(agent_name(a))] = ja;

        std::string csv = good.size() > 1 ? "t,mean,stderr\n" : "t,mean\n";
        for (std::size_t i = 0; i < summary.checkpoints.size() && !good.empty(); ++i) {
            csv += std::to_string(summary.checkpoints[i]) + "," + format_double(band.mean[i]);
            if (good.size() > 1) csv += "," + format_double(band.stderr_[i]);
            csv += "\n";
        }
        std::ofstream(cfg.output_dir / "plot_data" / (std::string(agent_name(a)) + ".csv"), std::ios::binary) << csv;
        if (!good.empty()) series.push_back(SvgSeries{std::string(agent_name(a)), band.mean, good.size() > 1 ? band.stderr_ : std::vector<double>{}});
    }
    js["agents"] = per_agent;
    js["all_ok"] = summary.all_ok();
    write_json(js, cfg.output_dir / "summary.json");
    std::ofstream(cfg.output_dir / "average_reward.svg", std::ios::binary)
        << render_svg("Average reward", "steps", "average reward", xs, series, summary.eta_plus);
    return summary;
}

// ---------------------------------------------------------------------------
// Estimate

std::vector<EstimateRow> cmd_estimate(const ExperimentConfig& cfg, unsigned threads, bool write) {
    cfg.validate();
    const PomdpModel m = cfg.load_model();
    const MemorylessPolicy policy = cfg.policy ? policy_from_json(read_json(*cfg.policy))
                                               : MemorylessPolicy::uniform(m.dims.Y, m.dims.A);
    require_compatible(m, policy);

    std::vector<EstimateRow> rows;
    for (std::size_t n : cfg.sample_sizes)
        for (std::uint64_t s : cfg.seeds) {
            EstimateRow r;
            r.n = n;
            r.seed = s;
            rows.push_back(std::move(r));
        }
    std::vector<std::optional<EstimatedPomdp>> estimates(rows.size());

    parallel_for(rows.size(), threads, [&](std::size_t i) {
        EstimateRow& row = rows[i];
        try {
            const Trajectory tr = simulate(m, policy, row.n, derive_seed(row.seed, row.n));
            EstimatorConfig ec = cfg.smucrl.estimator;
            ec.spectral.power.seed = derive_seed(row.seed, row.n + 1);
            EstimatedPomdp est = estimate_all(tr, policy, m.dims, ec);
            row.err = estimation_error(est, m);
            row.bounds = est.bounds;
            row.warnings = est.permutation_warnings.size();
            row.ok = true;
            estimates[i] = std::move(est);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
    });

    if (!write) return rows;
    fs::create_directories(cfg.output_dir / "estimates");
    std::string csv = "n,seed,status,O_l1,R_l1,T_l2,O_max,R_max,T_max,B_O_max,B_R_max,B_T_max,permutation_warnings\n";
    Json report = Json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const EstimateRow& r = rows[i];
        csv += std::to_string(r.n) + "," + std::to_string(r.seed) + "," + (r.ok ? "ok" : "failed");
        if (r.ok) {
            double bo = 0, br = 0, bt = 0;
            for (const auto& b : r.bounds) {
                bo = std::max(bo, b.B_O);
                br = std::max(br, b.B_R);
                bt = std::max(bt, b.B_T);
            }
            for (double v : {r.err.O_l1, r.err.R_l1, r.err.T_l2, r.err.O_max, r.err.R_max, r.err.T_max, bo, br, bt})
                csv += "," + format_double(v);
            csv += "," + std::to_string(r.warnings) + "\n";
            write_json(estimate_to_json(*estimates[i], m.reward_values),
                       cfg.output_dir / "estimates" / ("n" + std::to_string(r.n) + "_seed" + std::to_string(r.seed) + ".json"));
        } else {
            csv += ",,,,,,,,,,\n";
        }
        Json jr = {{"n", r.n}, {"seed", r.seed}, {"status", r.ok ? "ok" : "failed"}};
        if (r.ok) jr["error"] = estimation_error_to_json(r.err);
        else jr["message"] = r.error;
        report.push_back(jr);
    }
    std::ofstream(cfg.output_dir / "estimate_report.csv", std::ios::binary) << csv;

    // Mean error per sample size, plus the chart.
    Json means = Json::array();
    std::vector<double> xs;
    SvgSeries so, sr, st;
    so.label = "observation (l1)";
    sr.label = "reward (l1)";
    st.label = "transition (l2)";
    for (std::size_t n : cfg.sample_sizes) {
        double o = 0, rr = 0, t = 0;
        std::size_t k = 0;
        for (const auto& r : rows)
            if (r.n == n && r.ok) {
                o += r.err.O_l1;
                rr += r.err.R_l1;
                t += r.err.T_l2;
                ++k;
            }
        Json jm = {{"n", n}, {"succeeded", k}};
        if (k > 0) {
            jm["O_l1"] = o / k;
            jm["R_l1"] = rr / k;
            jm["T_l2"] = t / k;
            xs.push_back(std::log10(static_cast<double>(n)));
            so.y.push_back(o / k);
            sr.y.push_back(rr / k);
            st.y.push_back(t / k);
        }
        means.push_back(jm);
    }
    write_json(Json{{"rows", report}, {"mean_by_n", means}}, cfg.output_dir / "estimate_report.json");
    std::ofstream(cfg.output_dir / "estimation_error.svg", std::ios::binary)
        << render_svg("Estimation error", "log10 samples", "error", xs, {so, sr, st});
    return rows;
}

// ---------------------------------------------------------------------------
// SVG

std::string render_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<double>& x, const std::vector<SvgSeries>& series, std::optional<double> reference) {
    constexpr double W = 800, H = 500, L = 70, Rm = 160, Tm = 40, B = 50;
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
    double x0 = x.empty() ? 0 : x.front(), x1 = x.empty() ? 1 : x.back();
    double y0 = std::numeric_limits<double>::infinity(), y1 = -y0;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.y.size(); ++i) {
            const double e = i < s.err.size() ? s.err[i] : 0.0;
            y0 = std::min(y0, s.y[i] - e);
            y1 = std::max(y1, s.y[i] + e);
        }
    if (reference) {
        y0 = std::min(y0, *reference);
        y1 = std::max(y1, *reference);
    }
    if (!std::isfinite(y0)) y0 = 0, y1 = 1;
    if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    if (x1 <= x0) x1 = x0 + 1;
    auto px = [&](double v) { return L + (v - x0) / (x1 - x0) * (W - L - Rm); };
    auto py = [&](double v) { return H - B - (v - y0) / (y1 - y0) * (H - Tm - B); };
    auto num = [](double v) {
        std::ostringstream os;
        os.precision(4);
        os << v;
        return os.str();
    };

    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(2);
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
    s << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - Rm << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << L << "\" y1=\"" << Tm << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double xv = x0 + (x1 - x0) * i / 5.0, yv = y0 + (y1 - y0) * i / 5.0;
        s << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << num(xv) << "</text>\n";
        s << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << num(yv) << "</text>\n";
        s << "<line x1=\"" << L << "\" y1=\"" << py(yv) << "\" x2=\"" << W - Rm << "\" y2=\"" << py(yv) << "\" stroke=\"#eee\"/>\n";
    }
    s << "<text x=\"" << (L + W - Rm) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << x_label << "</text>\n";
    s << "<text transform=\"translate(18," << (Tm + H - B) / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << y_label << "</text>\n";
    if (reference) {
        s << "<line x1=\"" << L << "\" y1=\"" << py(*reference) << "\" x2=\"" << W - Rm << "\" y2=\"" << py(*reference)
          << "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
        s << "<text x=\"" << W - Rm + 6 << "\" y=\"" << py(*reference) + 4 << "\" fill=\"gray\">eta+</text>\n";
    }
    for (std::size_t k = 0; k < series.size(); ++k) {
        const SvgSeries& ser = series[k];
        const char* c = colors[k % 6];
        const std::size_t n = std::min(ser.y.size(), x.size());
        if (ser.err.size() >= n && n > 0) {
            s << "<polygon fill=\"" << c << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
            for (std::size_t i = 0; i < n; ++i) s << px(x[i]) << "," << py(ser.y[i] + ser.err[i]) << " ";
            for (std::size_t i = n; i-- > 0;) s << px(x[i]) << "," << py(ser.y[i] - ser.err[i]) << " ";
            s << "\"/>\n";
        }
        s << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < n; ++i) s << px(x[i]) << "," << py(ser.y[i]) << " ";
        s << "\"/>\n";
        const double ly = Tm + 20 + 20 * static_cast<double>(k);
        s << "<line x1=\"" << W - Rm + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - Rm + 30 << "\" y2=\"" << ly
          << "\" stroke=\"" << c << "\" stroke-width=\"2\"/>\n";
        s << "<text x=\"" << W - Rm + 36 << "\" y=\"" << ly + 4 << "\">" << ser.label << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

}  // namespace spomdp
