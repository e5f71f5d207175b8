#include "test_util.hpp"

#include <fstream>
#include <sstream>

#include "spomdp/bench.hpp"

using namespace spomdp;
using namespace testutil;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(SPOMDP_SOURCE_DIR) / "configs";

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("spomdp_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json minimal() { return Json{{"schema", 1}, {"model", "paper_model.json"}}; }

ErrorKind kind_of(const Json& j) {
    try {
        parse_experiment_config(j, kConfigs);
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::NonFinite;  // sentinel: no error
}

}  // namespace

TEST_CASE("the shipped config parses and round-trips") {
    const ExperimentConfig c = load_experiment_config(kConfigs / "bench_default.json");
    CHECK(c.agents.size() == 4);
    CHECK(c.horizon == 200'000);
    CHECK(c.seeds.size() == 10);
    CHECK(c.smucrl.estimator.bounds.lambda == Vector{5.0});
    const PomdpModel m = c.load_model();
    CHECK(m.dims == Dims{2, 4, 2, 4});
    CHECK(m.r_max == 4.0);
    const ExperimentConfig back = parse_experiment_config(experiment_config_to_json(c));
    CHECK(experiment_config_to_json(back).dump() == experiment_config_to_json(c).dump());
}

TEST_CASE("config validation") {
    CHECK(kind_of(minimal()) == ErrorKind::NonFinite);
    Json j = minimal();
    j["horizon"] = 0;
    CHECK(kind_of(j) == ErrorKind::ConfigError);
    j = minimal();
    j["seeds"] = Json::array();
    CHECK(kind_of(j) == ErrorKind::ConfigError);
    j = minimal();
    j["schema"] = 2;
    CHECK(kind_of(j) == ErrorKind::ConfigError);
    j = minimal();
    j["horizn"] = 10;
    CHECK(kind_of(j) == ErrorKind::ConfigError);
    j = minimal();
    j["agent"] = "sarsa";
    CHECK(kind_of(j) == ErrorKind::ConfigError);
    j = minimal();
    j["bounds"] = {{"lambda", "guess"}};
    CHECK(kind_of(j) == ErrorKind::ConfigError);
    j = minimal();
    j["bounds"] = {{"lambda", "estimate"}};
    CHECK(parse_experiment_config(j, kConfigs).smucrl.estimator.bounds.estimate_lambda);
    j = minimal();
    j.erase("model");
    CHECK(kind_of(j) == ErrorKind::ConfigError);
}

TEST_CASE("fewer observations than states need augmented recovery") {
    Json j = minimal();
    j["model"] = {{"generate", {{"X", 3}, {"Y", 2}, {"A", 2}, {"R", 2}, {"seed", 1}, {"conditioning", 0.0}}}};
    const ExperimentConfig c = parse_experiment_config(j);
    CHECK_THROWS_AS(c.load_model(), Error);
    j["smucrl"] = {{"augmented", true}};
    CHECK_NOTHROW(parse_experiment_config(j).load_model());
    j.erase("smucrl");
    j["agent"] = "random";
    CHECK_NOTHROW(parse_experiment_config(j).load_model());
}

TEST_CASE("checkpoints are evenly spaced and end at the horizon") {
    const auto c = checkpoint_steps(200'000, 50);
    REQUIRE(c.size() == 50);
    CHECK(c.front() == 4000);
    CHECK(c.back() == 200'000);
    CHECK(checkpoint_steps(10, 50).size() == 10);
}

TEST_CASE("a single-seed random bench writes one log and no error bars") {
    Json j = minimal();
    j["agent"] = "random";
    j["seeds"] = {1};
    j["horizon"] = 2000;
    ExperimentConfig c = parse_experiment_config(j, kConfigs);
    c.output_dir = scratch("single");
    const BenchSummary s = cmd_bench(c, 1);
    CHECK(s.all_ok());
    CHECK(fs::exists(c.output_dir / "runs" / "random_seed1.csv"));
    std::size_t csvs = 0;
    for (const auto& e : fs::directory_iterator(c.output_dir / "runs")) csvs += e.path().extension() == ".csv";
    CHECK(csvs == 1);
    const Json summary = read_json(c.output_dir / "summary.json");
    CHECK_FALSE(summary["agents"]["random"].contains("stderr"));
    CHECK(summary["agents"]["random"]["mean"].size() == 50);
    const std::string csv = slurp(c.output_dir / "runs" / "random_seed1.csv");
    CHECK(csv.rfind("t,reward,episode,cumulative_regret\n1,", 0) == 0);
    CHECK(slurp(c.output_dir / "average_reward.svg").find("<polyline") != std::string::npos);
}

TEST_CASE("bench output is byte-identical across invocations and agent sets") {
    Json j = minimal();
    j["agents"] = {"random", "qlearning"};
    j["seeds"] = {3, 4};
    j["horizon"] = 3000;
    ExperimentConfig c = parse_experiment_config(j, kConfigs);
    c.output_dir = scratch("det_a");
    const BenchSummary a = cmd_bench(c, 2);
    CHECK(a.runs.size() == 4);
    const fs::path first = c.output_dir;
    c.output_dir = scratch("det_b");
    c.agents = {Agent::Random};
    cmd_bench(c, 1);
    for (const char* f : {"random_seed3.csv", "random_seed4.csv"})
        CHECK(slurp(first / "runs" / f) == slurp(c.output_dir / "runs" / f));
    const Json summary = read_json(first / "summary.json");
    CHECK(summary["agents"]["qlearning"].contains("stderr"));
}

TEST_CASE("SM-UCRL bench runs are audited") {
    Json j = minimal();
    j["agent"] = "smucrl";
    j["seeds"] = {0};
    j["horizon"] = 10'000;
    j["bounds"] = {{"lambda", {5.0}}};
    const ExperimentConfig c = parse_experiment_config(j, kConfigs);
    const BenchSummary s = cmd_bench(c, 1, false);
    REQUIRE(s.runs.size() == 1);
    CHECK(s.runs[0].ok);
    CHECK(s.runs[0].audit.empty());
    CHECK(s.runs[0].checkpoint_average.size() == 50);
}

TEST_CASE("estimation sweep emits one row per sample size") {
    Json j = minimal();
    j["seeds"] = {0};
    j["estimate"] = {{"sample_sizes", {2000, 20000}}};
    ExperimentConfig c = parse_experiment_config(j, kConfigs);
    c.output_dir = scratch("estimate");
    const auto rows = cmd_estimate(c, 1);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].ok);
    const std::string csv = slurp(c.output_dir / "estimate_report.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    CHECK(fs::exists(c.output_dir / "estimates" / "n20000_seed0.json"));
    const Json dump = read_json(c.output_dir / "estimates" / "n20000_seed0.json");
    CHECK(dump.contains("bounds"));
    CHECK(dump.contains("permutation_warnings"));
}

TEST_CASE("transition error stays above observation error across the sweep") {
    ExperimentConfig c = load_experiment_config(kConfigs / "bench_default.json");
    c.seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    const auto rows = cmd_estimate(c, 2, false);
    for (std::size_t n : c.sample_sizes) {
        double o = 0.0, t = 0.0;
        int k = 0;
        for (const auto& r : rows)
            if (r.n == n && r.ok) {
                o += r.err.O_l1;
                t += r.err.T_l2;
                ++k;
            }
        REQUIRE(k == 10);
        CAPTURE(n);
        CHECK(t > o);
    }
}

TEST_CASE("a deterministic model is estimated without error") {
    ExperimentConfig c;
    c.model = fs::path(scratch("det_model").string() + ".json");
    save_model(swap_model(), std::get<fs::path>(c.model));
    c.sample_sizes = {1000, 10000};
    c.seeds = {0, 1};
    const auto rows = cmd_estimate(c, 1, false);
    for (const auto& r : rows) {
        REQUIRE(r.ok);
        CHECK(r.err.O_l1 < 1e-9);
        CHECK(r.err.R_l1 < 1e-9);
        CHECK(r.err.T_l2 < 1e-9);
    }
}

TEST_CASE("svg rendering handles bands, references and empty input") {
    const std::string svg = render_svg("t", "x", "y", {1, 2, 3}, {SvgSeries{"a", {1, 2, 3}, {0.1, 0.1, 0.1}}}, 2.5);
    CHECK(svg.find("<polygon") != std::string::npos);
    CHECK(svg.find("stroke-dasharray") != std::string::npos);
    CHECK(render_svg("t", "x", "y", {}, {}).find("</svg>") != std::string::npos);
}
