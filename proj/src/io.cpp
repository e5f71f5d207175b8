#include "spomdp/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

namespace spomdp {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorKind::ConfigError, "model file: " + what); }

std::size_t get_dim(const Json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number_integer() || j[key].get<long long>() <= 0)
        bad(std::string("\"") + key + "\" must be a positive integer");
    return j[key].get<std::size_t>();
}

std::vector<double> get_vector(const Json& j, std::size_t n, const std::string& what) {
    if (!j.is_array() || j.size() != n) bad(what + " must be an array of " + std::to_string(n) + " numbers");
    std::vector<double> v;
    for (const auto& x : j) {
        if (!x.is_number()) bad(what + " must contain numbers");
        v.push_back(x.get<double>());
    }
    return v;
}

Json matrix_rows(const Matrix& m) {
    Json out = Json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) out.push_back(m.row(i));
    return out;
}

}  // namespace

Json model_to_json(const PomdpModel& m) {
    const auto [X, Y, A, R] = m.dims;
    Json j;
    j["X"] = X;
    j["Y"] = Y;
    j["A"] = A;
    j["R"] = R;
    j["r_max"] = m.r_max;
    j["reward_values"] = m.reward_values;
    j["O"] = matrix_rows(m.O);
    Json T = Json::array();
    for (std::size_t a = 0; a < A; ++a) {
        Json slice = Json::array();
        for (std::size_t x = 0; x < X; ++x) {
            Vector row(X);
            for (std::size_t x2 = 0; x2 < X; ++x2) row[x2] = m.T(x, x2, a);
            slice.push_back(row);
        }
        T.push_back(slice);
    }
    j["T"] = T;
    Json G = Json::array();
    for (std::size_t x = 0; x < X; ++x) {
        Json per_state = Json::array();
        for (std::size_t a = 0; a < A; ++a) {
            Vector row(R);
            for (std::size_t r = 0; r < R; ++r) row[r] = m.Gamma(x, a, r);
            per_state.push_back(row);
        }
        G.push_back(per_state);
    }
    j["Gamma"] = G;
    return j;
}

PomdpModel model_from_json(const Json& j) {
    if (!j.is_object()) bad("top level must be an object");
    PomdpModel m;
    m.dims = Dims{get_dim(j, "X"), get_dim(j, "Y"), get_dim(j, "A"), get_dim(j, "R")};
    const auto [X, Y, A, R] = m.dims;
    if (!j.contains("r_max") || !j["r_max"].is_number()) bad("\"r_max\" must be a number");
    m.r_max = j["r_max"].get<double>();
    if (!j.contains("reward_values")) bad("\"reward_values\" missing");
    m.reward_values = get_vector(j["reward_values"], R, "reward_values");

    if (!j.contains("O") || !j["O"].is_array() || j["O"].size() != Y) bad("\"O\" must have Y rows");
    m.O = Matrix(Y, X);
    for (std::size_t y = 0; y < Y; ++y) {
        const Vector row = get_vector(j["O"][y], X, "O row");
        for (std::size_t x = 0; x < X; ++x) m.O(y, x) = row[x];
    }
    if (!j.contains("T") || !j["T"].is_array() || j["T"].size() != A) bad("\"T\" must have A slices");
    m.T = Tensor3(X, X, A);
    for (std::size_t a = 0; a < A; ++a) {
        if (!j["T"][a].is_array() || j["T"][a].size() != X) bad("every T slice must have X rows");
        for (std::size_t x = 0; x < X; ++x) {
            const Vector row = get_vector(j["T"][a][x], X, "T row");
            for (std::size_t x2 = 0; x2 < X; ++x2) m.T(x, x2, a) = row[x2];
        }
    }
    if (!j.contains("Gamma") || !j["Gamma"].is_array() || j["Gamma"].size() != X) bad("\"Gamma\" must have X entries");
    m.Gamma = Tensor3(X, A, R);
    for (std::size_t x = 0; x < X; ++x) {
        if (!j["Gamma"][x].is_array() || j["Gamma"][x].size() != A) bad("every Gamma entry must have A rows");
        for (std::size_t a = 0; a < A; ++a) {
            const Vector row = get_vector(j["Gamma"][x][a], R, "Gamma row");
            for (std::size_t r = 0; r < R; ++r) m.Gamma(x, a, r) = row[r];
        }
    }
    require_valid(m);
    return m;
}

PomdpModel load_model(const std::filesystem::path& path) { return model_from_json(read_json(path)); }

void save_model(const PomdpModel& m, const std::filesystem::path& path) { write_json(model_to_json(m), path); }

Json policy_to_json(const MemorylessPolicy& p) {
    Json j;
    j["pi_min"] = p.pi_min;
    j["pi"] = matrix_rows(p.pi);
    return j;
}

MemorylessPolicy policy_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("pi") || !j["pi"].is_array() || j["pi"].empty())
        throw Error(ErrorKind::ConfigError, "policy file: \"pi\" must be a nonempty list of rows");
    std::vector<std::vector<double>> rows;
    for (const auto& r : j["pi"]) rows.push_back(get_vector(r, r.is_array() ? r.size() : 0, "policy row"));
    const double floor = j.contains("pi_min") ? j["pi_min"].get<double>() : 1e-12;
    return MemorylessPolicy::from_matrix(Matrix::from_rows(rows), floor);
}

Json estimate_to_json(const EstimatedPomdp& e, const Vector& reward_values) {
    Json j = model_to_json(e.to_model(reward_values));
    Json bounds = Json::array();
    for (std::size_t l = 0; l < e.bounds.size(); ++l) {
        bounds.push_back({{"action", l},
                          {"n", e.n_per_action[l]},
                          {"lambda", e.lambda_used[l]},
                          {"B_O", e.bounds[l].B_O},
                          {"B_R", e.bounds[l].B_R},
                          {"B_T", e.bounds[l].B_T}});
    }
    j["bounds"] = {{"l_star", e.l_star}, {"d_O_hat", e.d_O_hat}, {"per_action", bounds}};
    j["permutation_warnings"] = e.permutation_warnings;
    return j;
}

Json estimation_error_to_json(const EstimationError& e) {
    return {{"O_l1", e.O_l1}, {"R_l1", e.R_l1}, {"T_l2", e.T_l2}, {"O_max", e.O_max},
            {"R_max", e.R_max}, {"T_max", e.T_max}, {"permutation", e.permutation}};
}

std::string format_double(double x) {
    if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

void write_log_csv(const ExperimentLog& log, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::ConfigError, "cannot write " + path.string());
    const std::vector<double> regret = regret_curve(log);
    const std::vector<std::uint32_t> episode = log.episode_of_step();
    std::string buf = "t,reward,episode,cumulative_regret\n";
    for (std::size_t t = 0; t < log.rewards.size(); ++t) {
        buf += std::to_string(t + 1);
        buf += ',';
        buf += format_double(log.rewards[t]);
        buf += ',';
        buf += std::to_string(episode[t]);
        buf += ',';
        buf += format_double(regret[t + 1]);
        buf += '\n';
        if (buf.size() > (1u << 20)) {
            out << buf;
            buf.clear();
        }
    }
    out << buf;
}

Json log_sidecar(const ExperimentLog& log) {
    Json j;
    j["agent"] = log.agent;
    j["seed"] = log.seed;
    j["horizon"] = log.horizon;
    j["eta_plus"] = log.eta_plus;
    j["average_reward"] = log.average_reward();
    Json eps = Json::array();
    for (const auto& e : log.episodes) {
        Json r;
        r["index"] = e.index;
        r["start"] = e.start;
        r["length"] = e.length;
        r["N"] = e.N;
        r["v"] = e.v;
        r["source"] = e.source;
        r["eta_tilde"] = e.eta_tilde;
        r["eta_true"] = std::isfinite(e.eta_true) ? Json(e.eta_true) : Json();
        r["stopped_by_rule"] = e.stopped_by_rule;
        Json b = Json::array();
        for (const auto& x : e.bounds) b.push_back({{"B_O", x.B_O}, {"B_R", x.B_R}, {"B_T", x.B_T}});
        r["bounds"] = b;
        if (e.error) r["estimation_error"] = estimation_error_to_json(*e.error);
        if (!e.anomaly.empty()) r["anomaly"] = e.anomaly;
        eps.push_back(r);
    }
    j["episodes"] = eps;
    j["anomalies"] = log.anomalies;
    return j;
}

void write_json(const Json& j, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::ConfigError, "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

Json read_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::ConfigError, "cannot read " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ConfigError, path.string() + ": " + e.what());
    }
}

}  // namespace spomdp
