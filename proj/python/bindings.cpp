#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fairmatch/harness.hpp"
#include "fairmatch/instance.hpp"
#include "fairmatch/lp.hpp"
#include "fairmatch/metrics.hpp"
#include "fairmatch/policies.hpp"
#include "fairmatch/stochastic.hpp"
#include "fairmatch/theory.hpp"

namespace py = pybind11;
using namespace fairmatch;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Online bipartite matching under max-min group fairness";

  py::class_<OfflineAgent>(m, "OfflineAgent")
      .def_readonly("id", &OfflineAgent::id)
      .def_readonly("capacity", &OfflineAgent::capacity)
      .def_readonly("neighbors", &OfflineAgent::neighbors);
  py::class_<OnlineType>(m, "OnlineType")
      .def_readonly("id", &OnlineType::id)
      .def_readonly("rate", &OnlineType::rate)
      .def_readonly("neighbors", &OnlineType::neighbors);
  py::class_<Group>(m, "Group")
      .def(py::init([](int id, std::vector<int> members) {
             return Group{id, std::move(members)};
           }),
           py::arg("id"), py::arg("members"))
      .def_readonly("id", &Group::id)
      .def_readonly("members", &Group::members);
  py::class_<Instance>(m, "Instance")
      .def_readonly("agents", &Instance::agents)
      .def_readonly("types", &Instance::types)
      .def_readonly("groups", &Instance::groups)
      .def_readonly("label", &Instance::label)
      .def("total_rate", &Instance::total_rate)
      .def("min_capacity", &Instance::min_capacity)
      .def("min_rate", &Instance::min_rate)
      .def("to_json", &instance_to_json)
      .def("__repr__", [](const Instance& inst) {
        return "<Instance '" + inst.label + "' agents=" + std::to_string(inst.num_agents()) +
               " types=" + std::to_string(inst.num_types()) + ">";
      });

  m.def("validate", [](const Instance& instance) {
    const ValidationReport report = validate(instance);
    return py::make_tuple(report.errors, report.warnings);
  });
  m.def("central_star", &central_star, py::arg("n"));
  m.def("pool_supply", &pool_supply, py::arg("n"));
  m.def("single_agent", &single_agent, py::arg("b"), py::arg("rates"),
        py::arg("groups") = std::vector<Group>{});
  m.def("instance_from_json", &instance_from_json);
  m.def("load_instance", &load_instance);
  m.def("save_instance", &save_instance);
  m.def(
      "scale_to_target_s",
      [](const Instance& instance, double target) {
        const ScaleResult result = scale_to_target_s(instance, target);
        return py::make_tuple(result.instance, result.achieved_s, result.alpha);
      },
      py::arg("instance"), py::arg("target_s"));

  py::class_<LpSolution>(m, "LpSolution")
      .def_readonly("s_star", &LpSolution::s_star)
      .def_readonly("objective", &LpSolution::objective)
      .def_property_readonly(
          "variant",
          [](const LpSolution& sol) {
            return sol.variant == LpVariant::kHomogeneous ? "homogeneous" : "grouped";
          })
      .def_property_readonly("x",
                             [](const LpSolution& sol) {
                               py::dict out;
                               for (const auto& [edge, value] : sol.x) {
                                 out[py::make_tuple(edge.first, edge.second)] = value;
                               }
                               return out;
                             })
      .def("edge", &LpSolution::edge)
      .def("column_sum", &LpSolution::column_sum);
  m.def("solve_homogeneous", &solve_homogeneous);
  m.def("solve_grouped", &solve_grouped);
  m.def("opt_upper_bound", &opt_upper_bound);

  py::class_<FairnessEstimate>(m, "FairnessEstimate")
      .def_readonly("mean", &FairnessEstimate::mean)
      .def_readonly("half_width_95", &FairnessEstimate::half_width_95)
      .def_readonly("trials", &FairnessEstimate::trials)
      .def_readonly("inner_trials", &FairnessEstimate::inner_trials)
      .def("__repr__", [](const FairnessEstimate& est) {
        return "<FairnessEstimate " + std::to_string(est.mean) + " +/- " +
               std::to_string(est.half_width_95) + ">";
      });
  m.def(
      "estimate_fair_a",
      [](const std::string& policy, const Instance& instance, long trials, std::uint64_t seed,
         const std::map<std::string, double>& params) {
        return estimate_fair_a(policy_factory(policy, params), instance, trials, seed);
      },
      py::arg("policy"), py::arg("instance"), py::arg("trials"), py::arg("seed") = 1,
      py::arg("params") = std::map<std::string, double>{},
      py::call_guard<py::gil_scoped_release>());
  m.def(
      "estimate_fair_b",
      [](const std::string& policy, const Instance& instance, long outer_trials,
         long inner_trials, std::uint64_t seed, const std::map<std::string, double>& params) {
        return estimate_fair_b(policy_factory(policy, params), instance, outer_trials,
                               inner_trials, seed);
      },
      py::arg("policy"), py::arg("instance"), py::arg("outer_trials"),
      py::arg("inner_trials") = 200, py::arg("seed") = 1,
      py::arg("params") = std::map<std::string, double>{},
      py::call_guard<py::gil_scoped_release>());
  m.def("offline_fair_b_single_agent", &offline_fair_b_single_agent, py::arg("b"),
        py::arg("lambda_"));
  m.def("competitive_ratio", &competitive_ratio);

  m.def("truncated_poisson_mean", &truncated_poisson_mean, py::arg("mu"), py::arg("b"));
  m.def("g", &g_bound, py::arg("b"), py::arg("s"));
  m.def("h", &h_bound, py::arg("lambda_"), py::arg("s"));
  m.def("nadap_bound", &nadap_bound, py::arg("b"));
  m.def("fcfs_fair_a", &fcfs_fair_a, py::arg("b"), py::arg("lambda_"));
  m.def("fcfs_fair_b_ratio", &fcfs_fair_b_ratio, py::arg("b"), py::arg("lambda_"));
  m.def("ode_fair_b_upper_bound", &ode_fair_b_upper_bound, py::arg("lambda_"),
        py::arg("step") = 1e-4);
  py::class_<BoundReport>(m, "BoundReport")
      .def_readonly("name", &BoundReport::name)
      .def_readonly("params", &BoundReport::params)
      .def_readonly("value", &BoundReport::value)
      .def_readonly("asymptotic", &BoundReport::asymptotic)
      .def_property_readonly("kind",
                             [](const BoundReport& report) {
                               return report.kind == BoundKind::kExact ? "exact"
                                      : report.kind == BoundKind::kLowerBound ? "lower_bound"
                                                                              : "upper_bound";
                             })
      .def("to_csv_row", &BoundReport::to_csv_row);
  m.def("g_tail_bound", &g_tail_bound, py::arg("b"), py::arg("s"));
  m.def("prob_reject_bounds", &prob_reject_bounds, py::arg("b"), py::arg("lambda_"));

  m.def(
      "dependent_round_vector",
      [](const std::vector<double>& fractions, std::uint64_t seed, std::uint64_t stream) {
        return dependent_round_vector(fractions, RngStream{seed, stream});
      },
      py::arg("fractions"), py::arg("seed") = 1, py::arg("stream") = 0);
  m.def(
      "sample_stream",
      [](const Instance& instance, std::uint64_t seed, std::uint64_t stream) {
        const ArrivalStream s = sample_stream(instance, RngStream{seed, stream});
        std::vector<std::pair<double, int>> events;
        events.reserve(s.events.size());
        for (const ArrivalEvent& e : s.events) events.emplace_back(e.time, e.type_id);
        return py::make_tuple(s.counts, events);
      },
      py::arg("instance"), py::arg("seed") = 1, py::arg("stream") = 0);

  m.def("ingest_trips_csv",
        [](const std::string& path, const std::string& window, int top_k, int days,
           const std::string& grouping) {
          IngestOptions options;
          int h1, m1, h2, m2;
          if (std::sscanf(window.c_str(), "%d:%d-%d:%d", &h1, &m1, &h2, &m2) != 4) {
            throw std::invalid_argument("window must look like 18:00-19:00");
          }
          options.window_begin_sec = h1 * 3600 + m1 * 60;
          options.window_end_sec = h2 * 3600 + m2 * 60;
          options.top_k = top_k;
          options.days = days;
          options.grouping =
              grouping == "destination" ? Grouping::kDestination : Grouping::kHomogeneous;
          return ingest_trips(read_trips_csv(path), options);
        },
        py::arg("path"), py::arg("window") = "00:00-24:00", py::arg("top_k") = 484,
        py::arg("days") = 0, py::arg("grouping") = "homogeneous");
  m.def(
      "run_sweep_file",
      [](const std::string& config_path, const std::string& out_csv) {
        const ExperimentConfig config = load_config(config_path);
        write_sweep_csv(run_sweep(config), out_csv);
      },
      py::arg("config_path"), py::arg("out_csv"), py::call_guard<py::gil_scoped_release>());
}
