// Command-line driver. Exit codes: 0 ok, 1 config error, 2 numerical
// failure, 3 partial bench failure.

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "spomdp/bench.hpp"
#include "spomdp/generate.hpp"
#include "spomdp/planner.hpp"

using namespace spomdp;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0, kConfig = 1, kNumerical = 2, kPartial = 3;

int exit_code_for(ErrorKind k) {
    switch (k) {
        case ErrorKind::ConfigError:
        case ErrorKind::InvalidModel:
        case ErrorKind::DimensionMismatch:
        case ErrorKind::PolicyFloorViolated:
        case ErrorKind::GridTooCoarse: return kConfig;
        default: return kNumerical;
    }
}

unsigned resolve_threads(int flag) {
    if (flag > 0) return static_cast<unsigned>(flag);
    if (const char* env = std::getenv("SPECTRAL_POMDP_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
        throw Error(ErrorKind::ConfigError, "SPECTRAL_POMDP_THREADS must be a positive integer");
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

Dims parse_dims(const std::string& s) {
    std::vector<std::size_t> v;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            std::size_t pos = 0;
            const long long x = std::stoll(part, &pos);
            if (pos != part.size() || x <= 0) throw std::invalid_argument(part);
            v.push_back(static_cast<std::size_t>(x));
        } catch (const std::exception&) {
            throw Error(ErrorKind::ConfigError, "--dims expects four positive integers X,Y,A,R");
        }
    }
    if (v.size() != 4) throw Error(ErrorKind::ConfigError, "--dims expects four positive integers X,Y,A,R");
    return Dims{v[0], v[1], v[2], v[3]};
}

struct Common {
    std::string config;
    std::string model;
    std::string out;
    std::optional<std::uint64_t> seed;
    int threads = 0;
};

ExperimentConfig config_from(const Common& c) {
    ExperimentConfig cfg;
    if (!c.config.empty()) cfg = load_experiment_config(c.config);
    if (!c.model.empty()) cfg.model = fs::path(c.model);
    if (c.config.empty() && c.model.empty()) throw Error(ErrorKind::ConfigError, "give --config or --model");
    if (c.seed) cfg.seeds = {*c.seed};
    if (!c.out.empty()) cfg.output_dir = c.out;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral estimation and optimistic exploration in POMDPs"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Write a random POMDP that clears the conditioning floor");
    std::string dims_arg = "2,4,2,4";
    std::uint64_t gen_seed = 0;
    double conditioning = 0.1, r_max = 0.0;
    std::string gen_out;
    gen->add_option("--dims", dims_arg, "X,Y,A,R")->capture_default_str();
    gen->add_option("--seed", gen_seed)->capture_default_str();
    gen->add_option("--conditioning", conditioning, "floor on sigma_X(O) and |det T_a|")->capture_default_str();
    gen->add_option("--r-max", r_max, "largest reward level (default R)");
    gen->add_option("--out", gen_out, "model file (stdout if omitted)");

    Common est_c, bench_c, plan_c, val_c;
    auto add_common = [](CLI::App* sub, Common& c) {
        sub->add_option("--config", c.config, "experiment config (JSON)");
        sub->add_option("--model", c.model, "model file, overrides the config");
        sub->add_option("--seed", c.seed, "single seed, overrides the config");
        sub->add_option("--out", c.out, "output directory");
        sub->add_option("--threads", c.threads, "worker threads (default SPECTRAL_POMDP_THREADS or all cores)");
    };

    auto* est = app.add_subcommand("estimate", "Simulate, estimate and report errors over a sample-size sweep");
    add_common(est, est_c);
    std::vector<std::size_t> n_override;
    std::string policy_path;
    est->add_option("--n", n_override, "sample sizes, overrides the config");
    est->add_option("--policy", policy_path, "behaviour policy file (default uniform)");

    auto* bench = app.add_subcommand("bench", "Run every (agent, seed) pair and summarize");
    add_common(bench, bench_c);
    std::vector<std::string> agents_override;
    std::optional<std::size_t> horizon_override;
    bench->add_option("--agents", agents_override, "agents, overrides the config");
    bench->add_option("--horizon", horizon_override, "steps per run, overrides the config");

    auto* plan = app.add_subcommand("plan", "Best memoryless policy of a known model");
    add_common(plan, plan_c);

    auto* val = app.add_subcommand("validate", "Check a config and its model");
    add_common(val, val_c);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    try {
        if (*gen) {
            GeneratorSpec spec;
            spec.dims = parse_dims(dims_arg);
            spec.seed = gen_seed;
            spec.conditioning = conditioning;
            spec.r_max = r_max;
            const PomdpModel m = generate_model(spec);
            if (gen_out.empty()) {
                std::cout << model_to_json(m).dump(2) << "\n";
            } else {
                save_model(m, gen_out);
            }
            return kOk;
        }
        if (*est) {
            ExperimentConfig cfg = config_from(est_c);
            if (!n_override.empty()) cfg.sample_sizes = n_override;
            if (!policy_path.empty()) cfg.policy = fs::path(policy_path);
            cfg.validate();
            const auto rows = cmd_estimate(cfg, resolve_threads(est_c.threads));
            std::size_t failed = 0;
            for (const auto& r : rows) {
                if (r.ok) {
                    std::cout << "n=" << r.n << " seed=" << r.seed << " O_l1=" << r.err.O_l1 << " R_l1=" << r.err.R_l1
                              << " T_l2=" << r.err.T_l2 << "\n";
                } else {
                    ++failed;
                    std::cout << "n=" << r.n << " seed=" << r.seed << " failed: " << r.error << "\n";
                }
            }
            std::cout << "report: " << (cfg.output_dir / "estimate_report.csv").string() << "\n";
            return failed == 0 ? kOk : (failed == rows.size() ? kNumerical : kPartial);
        }
        if (*bench) {
            ExperimentConfig cfg = config_from(bench_c);
            if (!agents_override.empty()) {
                cfg.agents.clear();
                for (const auto& a : agents_override) cfg.agents.push_back(parse_agent(a));
            }
            if (horizon_override) cfg.horizon = *horizon_override;
            cfg.validate();
            const BenchSummary s = cmd_bench(cfg, resolve_threads(bench_c.threads));
            std::cout << "eta+ = " << s.eta_plus << "\n";
            for (const auto& r : s.runs) {
                std::cout << agent_name(r.agent) << " seed " << r.seed << ": ";
                if (r.ok) std::cout << "average reward " << r.average_reward;
                else std::cout << "FAILED " << r.error;
                for (const auto& a : r.audit) std::cout << "\n  audit: " << a;
                std::cout << "\n";
            }
            std::cout << "summary: " << (cfg.output_dir / "summary.json").string() << "\n";
            return s.all_ok() ? kOk : kPartial;
        }
        if (*plan) {
            const ExperimentConfig cfg = config_from(plan_c);
            const PomdpModel m = cfg.load_model();
            const OptimalReward r = optimal_average_reward(m, cfg.smucrl.planner, derive_seed(cfg.seeds.front(), 0));
            Json j{{"eta_plus", r.eta_plus}, {"eta_grid", r.eta_grid}, {"eta_planner", r.eta_planner},
                   {"policy", policy_to_json(r.policy)}};
            if (!plan_c.out.empty()) {
                fs::create_directories(cfg.output_dir);
                write_json(j, cfg.output_dir / "plan.json");
            }
            std::cout << j.dump(2) << "\n";
            return kOk;
        }
        if (*val) {
            const ExperimentConfig cfg = config_from(val_c);
            const PomdpModel m = cfg.load_model();
            const auto violations = validate_model(m, true);
            for (const auto& v : violations) std::cout << "violation: " << v.what << "\n";
            std::cout << "sigma_X(O) = " << observation_conditioning(m)
                      << ", min |det T_a| = " << transition_conditioning(m) << "\n";
            if (!violations.empty()) return kConfig;
            std::cout << "ok\n";
            return kOk;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumerical;
    }
    return kOk;
}
