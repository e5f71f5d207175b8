#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "spomdp/bench.hpp"
#include "spomdp/generate.hpp"
#include "spomdp/planner.hpp"

namespace py = pybind11;
using namespace spomdp;

namespace {

py::array_t<double> to_array(const Matrix& m) {
    py::array_t<double> out({m.rows(), m.cols()});
    auto v = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) v(i, j) = m(i, j);
    return out;
}

py::array_t<double> to_array(const Tensor3& t) {
    py::array_t<double> out({t.dim(0), t.dim(1), t.dim(2)});
    std::copy(t.data().begin(), t.data().end(), out.mutable_data());
    return out;
}

Matrix to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw Error(ErrorKind::DimensionMismatch, "expected a 2-d array");
    Matrix m(a.shape(0), a.shape(1));
    std::copy(a.data(), a.data() + a.size(), m.data().begin());
    return m;
}

MemorylessPolicy policy_or_uniform(const PomdpModel& m, const std::optional<py::array_t<double>>& pi, double floor) {
    if (!pi) return MemorylessPolicy::uniform(m.dims.Y, m.dims.A);
    return MemorylessPolicy::from_matrix(to_matrix(*pi), floor);
}

py::dict error_dict(const EstimationError& e) {
    py::dict d;
    d["O_l1"] = e.O_l1;
    d["R_l1"] = e.R_l1;
    d["T_l2"] = e.T_l2;
    d["O_max"] = e.O_max;
    d["R_max"] = e.R_max;
    d["T_max"] = e.T_max;
    d["permutation"] = e.permutation;
    return d;
}

py::dict estimate_dict(const EstimatedPomdp& est, const PomdpModel& truth) {
    py::dict d;
    d["O"] = to_array(est.f_O);
    d["Gamma"] = to_array(est.f_R);
    d["T"] = to_array(est.f_T);
    py::list bounds;
    for (const auto& b : est.bounds) bounds.append(py::make_tuple(b.B_O, b.B_R, b.B_T));
    d["bounds"] = bounds;
    d["l_star"] = est.l_star;
    d["permutation_warnings"] = est.permutation_warnings;
    d["error"] = error_dict(estimation_error(est, truth));
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Spectral POMDP estimation and optimistic memoryless learning";

    static py::exception<Error> exc(m, "SpomdpError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            exc(e.what());
        }
    });

    py::class_<Dims>(m, "Dims")
        .def(py::init<std::size_t, std::size_t, std::size_t, std::size_t>(), py::arg("X"), py::arg("Y"), py::arg("A"),
             py::arg("R"))
        .def_readwrite("X", &Dims::X)
        .def_readwrite("Y", &Dims::Y)
        .def_readwrite("A", &Dims::A)
        .def_readwrite("R", &Dims::R)
        .def("__repr__", [](const Dims& d) {
            return "Dims(X=" + std::to_string(d.X) + ", Y=" + std::to_string(d.Y) + ", A=" + std::to_string(d.A) +
                   ", R=" + std::to_string(d.R) + ")";
        });

    py::class_<PomdpModel>(m, "Model")
        .def_readonly("dims", &PomdpModel::dims)
        .def_property_readonly("O", [](const PomdpModel& p) { return to_array(p.O); })
        .def_property_readonly("T", [](const PomdpModel& p) { return to_array(p.T); })
        .def_property_readonly("Gamma", [](const PomdpModel& p) { return to_array(p.Gamma); })
        .def_readonly("reward_values", &PomdpModel::reward_values)
        .def("to_json", [](const PomdpModel& p) { return model_to_json(p).dump(2); })
        .def_static("from_json", [](const std::string& s) { return model_from_json(Json::parse(s)); })
        .def_static("load", [](const std::string& path) { return load_model(path); })
        .def("save", [](const PomdpModel& p, const std::string& path) { save_model(p, path); })
        .def("average_reward",
             [](const PomdpModel& p, std::optional<py::array_t<double>> pi, double floor) {
                 return induced_chain(p, policy_or_uniform(p, pi, floor)).eta;
             },
             py::arg("policy") = py::none(), py::arg("floor") = 0.0);

    m.def("generate",
          [](std::size_t X, std::size_t Y, std::size_t A, std::size_t R, std::uint64_t seed, double conditioning) {
              GeneratorSpec s;
              s.dims = {X, Y, A, R};
              s.seed = seed;
              s.conditioning = conditioning;
              return generate_model(s);
          },
          py::arg("X"), py::arg("Y"), py::arg("A"), py::arg("R"), py::arg("seed") = 0, py::arg("conditioning") = 0.1);

    m.def("simulate",
          [](const PomdpModel& model, std::size_t n, std::uint64_t seed, std::optional<py::array_t<double>> pi,
             double floor) {
              const Trajectory tr = simulate(model, policy_or_uniform(model, pi, floor), n, seed);
              py::array_t<std::uint32_t> out({tr.size(), std::size_t{3}});
              auto v = out.mutable_unchecked<2>();
              for (std::size_t t = 0; t < tr.size(); ++t) {
                  v(t, 0) = tr.steps[t].y;
                  v(t, 1) = tr.steps[t].a;
                  v(t, 2) = tr.steps[t].r;
              }
              return out;
          },
          py::arg("model"), py::arg("n"), py::arg("seed") = 0, py::arg("policy") = py::none(), py::arg("floor") = 0.0,
          "Columns y, a, r (reward index) of a simulated trajectory.");

    m.def("estimate",
          [](const PomdpModel& model, std::size_t n, std::uint64_t seed, double lambda) {
              const auto p = MemorylessPolicy::uniform(model.dims.Y, model.dims.A);
              EstimatorConfig cfg;
              cfg.bounds.lambda = {lambda};
              cfg.spectral.power.seed = seed;
              py::gil_scoped_release release;
              const EstimatedPomdp est = estimate_all(simulate(model, p, n, seed), p, model.dims, cfg);
              py::gil_scoped_acquire acquire;
              return estimate_dict(est, model);
          },
          py::arg("model"), py::arg("n"), py::arg("seed") = 0, py::arg("lambda_") = 1.0,
          "Estimate from n uniform-policy steps; includes errors against the model.");

    m.def("estimate_exact",
          [](const PomdpModel& model) {
              EstimatorConfig cfg;
              return estimate_dict(estimate_from_exact(model, MemorylessPolicy::uniform(model.dims.Y, model.dims.A), cfg),
                                   model);
          },
          py::arg("model"), "Run the estimator on population moments.");

    m.def("plan",
          [](const PomdpModel& model, std::uint64_t seed, double floor) {
              PlannerConfig cfg;
              cfg.policy_floor = floor;
              const OptimalReward r = optimal_average_reward(model, cfg, seed);
              py::dict d;
              d["eta_plus"] = r.eta_plus;
              d["eta_grid"] = r.eta_grid;
              d["eta_planner"] = r.eta_planner;
              d["policy"] = to_array(r.policy.pi);
              return d;
          },
          py::arg("model"), py::arg("seed") = 0, py::arg("floor") = 0.05);

    m.def("run",
          [](const PomdpModel& model, const std::string& agent, std::size_t horizon, std::uint64_t seed, double lambda) {
              ExperimentLog log;
              {
                  py::gil_scoped_release release;
                  switch (parse_agent(agent)) {
                      case Agent::SmUcrl: {
                          SmUcrlConfig cfg;
                          cfg.estimator.bounds.lambda = {lambda};
                          cfg.track_errors = false;
                          log = run_smucrl(model, horizon, cfg, seed);
                          break;
                      }
                      case Agent::Random: log = run_random(model, horizon, seed); break;
                      case Agent::QLearning: log = run_qlearning(model, horizon, QConfig{}, seed); break;
                      case Agent::UcrlMdp: log = run_ucrl_mdp(model, horizon, UcrlConfig{}, seed); break;
                  }
              }
              py::dict d;
              d["rewards"] = py::array_t<double>(log.rewards.size(), log.rewards.data());
              d["eta_plus"] = log.eta_plus;
              d["average_reward"] = log.average_reward();
              d["episode_starts"] = log.episode_starts();
              d["audit"] = log.agent == "smucrl" ? audit_episodes(log, model.dims.A) : std::vector<std::string>{};
              return d;
          },
          py::arg("model"), py::arg("agent"), py::arg("horizon"), py::arg("seed") = 0, py::arg("lambda_") = 5.0,
          "Run one agent; agent is smucrl, random, qlearning or ucrl-mdp.");
}
