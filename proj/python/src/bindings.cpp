#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>
#include <string>
#include <vector>

#include "radt/augment.hpp"
#include "radt/config.hpp"
#include "radt/data.hpp"
#include "radt/envs.hpp"
#include "radt/eval.hpp"
#include "radt/experiment.hpp"
#include "radt/mdp.hpp"
#include "radt/rcsl.hpp"
#include "radt/shift.hpp"

namespace py = pybind11;
using namespace radt;

namespace {

Dataset parse_jsonl(const std::string& text) {
  std::istringstream in(text);
  return dataset_from_jsonl(in);
}

std::vector<double> trajectory_returns(const Dataset& ds) {
  std::vector<double> out;
  out.reserve(ds.size());
  for (const auto& traj : ds.trajectories) out.push_back(traj.rtg.empty() ? 0.0 : traj.rtg.front());
  return out;
}

}  // namespace

PYBIND11_MODULE(_radt, m) {
  m.doc() = "Tabular return-augmented RCSL laboratory";
  m.attr("__version__") = kToolVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<CoverageError>(m, "CoverageError", PyExc_RuntimeError);

  py::class_<TabularMdp>(m, "TabularMdp")
      .def_property_readonly("num_states", &TabularMdp::num_states)
      .def_property_readonly("num_actions", &TabularMdp::num_actions)
      .def_property_readonly("horizon", &TabularMdp::horizon)
      .def_property_readonly("reward_grid", &TabularMdp::reward_grid)
      .def("p", &TabularMdp::p, py::arg("s"), py::arg("a"), py::arg("next"))
      .def("r", &TabularMdp::r, py::arg("s"), py::arg("a"))
      .def("fingerprint", [](const TabularMdp& mdp) { return fingerprint(mdp); })
      .def("to_json", [](const TabularMdp& mdp) { return to_json(mdp).dump(); });

  py::class_<StationaryPolicy>(m, "StationaryPolicy")
      .def_static("uniform", &StationaryPolicy::uniform, py::arg("horizon"), py::arg("num_states"),
                  py::arg("num_actions"))
      .def_static("epsilon_greedy", &StationaryPolicy::epsilon_greedy, py::arg("greedy"), py::arg("epsilon"))
      .def("prob", &StationaryPolicy::prob, py::arg("t"), py::arg("s"), py::arg("a"));

  m.def("chain_walk", &chain_walk, py::arg("num_states") = 5, py::arg("success") = 0.9, py::arg("horizon") = 5);
  m.def("two_state", &two_state, py::arg("p_keep"), py::arg("horizon") = 1);
  m.def("random_mdp", &random_mdp, py::arg("num_states"), py::arg("num_actions"), py::arg("horizon"),
        py::arg("seed"), py::arg("levels") = 3, py::arg("branching") = 3);
  m.def(
      "apply_shift",
      [](const TabularMdp& target, const std::string& kind, double magnitude, std::uint64_t seed) {
        return apply_shift(target, ShiftSpec{shift_kind_from_string(kind), magnitude, seed});
      },
      py::arg("target"), py::arg("kind"), py::arg("magnitude"), py::arg("seed") = 0);

  m.def("optimal_policy", [](const TabularMdp& mdp) { return value_iteration(mdp).policy; }, py::arg("mdp"));
  m.def("optimal_value", [](const TabularMdp& mdp) { return value_iteration(mdp).value; }, py::arg("mdp"));
  m.def("policy_value", &policy_value, py::arg("mdp"), py::arg("policy"));

  py::class_<Dataset>(m, "Dataset")
      .def("__len__", &Dataset::size)
      .def_property_readonly("num_transitions", &Dataset::num_transitions)
      .def_property_readonly("horizon", [](const Dataset& ds) { return ds.horizon; })
      .def("returns", &trajectory_returns)
      .def("rtg", [](const Dataset& ds, std::size_t i) { return ds.trajectories.at(i).rtg; }, py::arg("index"))
      .def("to_jsonl", [](const Dataset& ds) { return dataset_to_jsonl(ds); })
      .def_static("from_jsonl", &parse_jsonl, py::arg("text"))
      .def("__eq__", [](const Dataset& a, const Dataset& b) { return a == b; });

  m.def(
      "collect",
      [](const TabularMdp& mdp, const StationaryPolicy& policy, std::size_t n, std::uint64_t seed,
         const std::string& domain) { return collect(mdp, policy, n, seed, domain_from_string(domain)); },
      py::arg("mdp"), py::arg("policy"), py::arg("n"), py::arg("seed"), py::arg("domain") = "target");
  m.def("mix", [](const Dataset& t, const Dataset& s, std::uint64_t seed) { return mix(t, s, seed); },
        py::arg("target"), py::arg("source"), py::arg("seed"));

  m.def(
      "augment_exact_cdf",
      [](const Dataset& ds, const TabularMdp& source, const TabularMdp& target, const StationaryPolicy& behavior,
         std::uint64_t seed) {
        return psi_exact_cdf(ds, return_table(source, behavior), return_table(target, behavior), seed).data;
      },
      py::arg("data"), py::arg("source"), py::arg("target"), py::arg("behavior"), py::arg("seed") = 0);
  m.def(
      "augment_mean_variance",
      [](const Dataset& ds, const TabularMdp& source, const TabularMdp& target, const StationaryPolicy& behavior,
         double clip_lo, double clip_hi) {
        return psi_mean_variance(ds, exact_return_stats(source, behavior), exact_return_stats(target, behavior),
                                 ClipConfig{clip_lo, clip_hi, 1e-6})
            .data;
      },
      py::arg("data"), py::arg("source"), py::arg("target"), py::arg("behavior"), py::arg("clip_lo") = 0.9,
      py::arg("clip_hi") = 1.25);

  py::class_<TabularRcslPolicy>(m, "TabularRcslPolicy")
      .def("action_probs",
           [](const TabularRcslPolicy& policy, int t, int s, double g) -> py::object {
             std::vector<double> probs(static_cast<std::size_t>(policy.num_actions()));
             if (!policy.action_probs(t, s, g, probs)) return py::none();
             return py::cast(probs);
           },
           py::arg("t"), py::arg("s"), py::arg("g"))
      .def("to_json", [](const TabularRcslPolicy& policy) { return to_json(policy).dump(); });

  m.def(
      "fit_tabular",
      [](const Dataset& ds, double bin_width, double smoothing, bool time_indexed) {
        return fit_tabular(ds, ReturnBinner{bin_width, 0.0}, smoothing, time_indexed);
      },
      py::arg("data"), py::arg("bin_width") = 1.0, py::arg("smoothing") = 0.0, py::arg("time_indexed") = true);

  m.def(
      "evaluate",
      [](const TabularRcslPolicy& policy, const TabularMdp& target, const std::vector<double>& f_grid,
         std::size_t n_rollouts, std::uint64_t seed) {
        return to_json(evaluate(policy, target, f_grid, n_rollouts, seed)).dump();
      },
      py::arg("policy"), py::arg("target"), py::arg("f_grid"), py::arg("n_rollouts") = 200, py::arg("seed") = 0);

  m.def(
      "config_hash",
      [](const std::filesystem::path& path, const std::vector<std::string>& overrides) {
        return config_hash(load_experiment_config(path, overrides, false));
      },
      py::arg("path"), py::arg("overrides") = std::vector<std::string>{});
  m.def(
      "run_experiment",
      [](const std::filesystem::path& path, const std::vector<std::string>& overrides, int jobs) {
        const auto cfg = load_experiment_config(path, overrides, false);
        MatrixResult result;
        {
          py::gil_scoped_release release;
          result = run_matrix(cfg, RunOptions{jobs, false, {}});
        }
        return py::make_tuple(matrix_csv(result), matrix_summary(result).dump());
      },
      py::arg("path"), py::arg("overrides") = std::vector<std::string>{}, py::arg("jobs") = 1);
}
