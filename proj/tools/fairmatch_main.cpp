#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fairmatch/harness.hpp"
#include "fairmatch/instance.hpp"
#include "fairmatch/lp.hpp"
#include "fairmatch/metrics.hpp"
#include "fairmatch/policies.hpp"
#include "fairmatch/theory.hpp"

namespace {

using namespace fairmatch;

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

int cmd_solve_lp(const std::string& instance_path, const std::string& variant,
                 const std::string& x_out) {
  const Instance instance = load_instance(instance_path);
  const LpSolution sol =
      variant == "grouped" ? solve_grouped(instance) : solve_homogeneous(instance);
  std::cout << "variant=" << variant << " s*=" << fmt(sol.s_star)
            << " opt_upper_bound=" << fmt(opt_upper_bound(sol)) << "\n";
  if (!x_out.empty()) {
    std::ofstream out(x_out, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + x_out);
    out << "i,j,x\n";
    for (const auto& [edge, value] : sol.x) {
      out << edge.first << ',' << edge.second << ',' << fmt(value) << '\n';
    }
  }
  return 0;
}

int cmd_simulate(const std::string& instance_path, const std::string& policy_name,
                 const std::string& objective, long trials, long inner, std::uint64_t seed,
                 const std::string& out_path, const std::map<std::string, double>& params) {
  const Instance instance = load_instance(instance_path);
  const PolicyFactory factory = policy_factory(policy_name, params);
  const bool fair_a = objective == "fair-a";
  const FairnessEstimate estimate =
      fair_a ? estimate_fair_a(factory, instance, trials, seed)
             : estimate_fair_b(factory, instance, trials, inner, seed);
  const bool homogeneous_groups = [&instance] {
    for (const Group& g : instance.groups) {
      if (g.members.size() != 1) return false;
    }
    return true;
  }();
  const LpSolution sol =
      homogeneous_groups ? solve_homogeneous(instance) : solve_grouped(instance);
  const double benchmark = fair_a ? opt_upper_bound(sol)
                                  : (instance.num_agents() == 1
                                         ? offline_fair_b_single_agent(
                                               instance.agents[0].capacity, instance.total_rate())
                                         : opt_upper_bound(sol));
  const double ratio = competitive_ratio(estimate.mean, benchmark);

  std::string csv =
      "instance_label,policy,objective,mean,half_width_95,trials,benchmark,competitive_ratio,seed\n";
  csv += instance.label + ',' + policy_name + ',' + objective + ',' + fmt(estimate.mean) + ',' +
         fmt(estimate.half_width_95) + ',' + std::to_string(estimate.trials) + ',' +
         fmt(benchmark) + ',' + fmt(ratio) + ',' + std::to_string(seed) + '\n';
  if (out_path.empty()) {
    std::cout << csv;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + out_path);
    out << csv;
    std::cout << "mean=" << fmt(estimate.mean) << " half_width=" << fmt(estimate.half_width_95)
              << " benchmark=" << fmt(benchmark) << " ratio=" << fmt(ratio) << "\n";
  }
  return 0;
}

int cmd_theory(const std::string& fn, long b, double s, double lambda, double step) {
  std::cout << "name,params,value,kind,asymptotic\n";
  if (fn == "g") {
    BoundReport report{"g", {{"b", double(b)}, {"s", s}}, g_bound(b, s), BoundKind::kExact, false};
    std::cout << report.to_csv_row() << "\n";
  } else if (fn == "h") {
    BoundReport report{
        "h", {{"lambda", lambda}, {"s", s}}, h_bound(lambda, s), BoundKind::kExact, false};
    std::cout << report.to_csv_row() << "\n";
  } else if (fn == "f") {
    BoundReport report{"f",
                       {{"b", double(b)}, {"lambda", lambda}},
                       fcfs_fair_b_ratio(b, lambda),
                       BoundKind::kExact,
                       false};
    std::cout << report.to_csv_row() << "\n";
  } else if (fn == "ode") {
    BoundReport report{"ode_R",
                       {{"lambda", lambda}, {"step", step}},
                       ode_fair_b_upper_bound(lambda, step),
                       BoundKind::kUpperBound,
                       false};
    std::cout << report.to_csv_row() << "\n";
  } else if (fn == "bounds") {
    for (const BoundReport& report : prob_reject_bounds(b, lambda)) {
      std::cout << report.to_csv_row() << "\n";
    }
  } else {
    throw std::runtime_error("theory --fn must be one of g|h|f|ode|bounds");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fairmatch: online bipartite matching under max-min group fairness"};
  app.require_subcommand(1);

  // solve-lp
  std::string instance_path, variant = "homogeneous", x_out;
  auto* solve = app.add_subcommand("solve-lp", "solve a benchmark LP and print s*");
  solve->add_option("--instance", instance_path, "instance JSON file")->required();
  solve->add_option("--variant", variant, "homogeneous|grouped")
      ->check(CLI::IsMember({"homogeneous", "grouped"}));
  solve->add_option("--x-out", x_out, "write the full x* as CSV (columns i,j,x)");

  // simulate
  std::string sim_instance, sim_policy, sim_objective = "fair-a", sim_out;
  long sim_trials = 1000, sim_inner = 200;
  std::uint64_t sim_seed = 1;
  double sim_tau = -1.0, sim_epsilon = -1.0, sim_k = -1.0;
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo estimate of FAIR-A or FAIR-B");
  simulate->add_option("--instance", sim_instance, "instance JSON file")->required();
  simulate->add_option("--policy", sim_policy,
                       "fcfs|nadap-s|nadap|reserve|prob-reject|greedy|rank|mgs|threshold|serve-kth")
      ->required();
  simulate->add_option("--objective", sim_objective, "fair-a|fair-b")
      ->check(CLI::IsMember({"fair-a", "fair-b"}));
  simulate->add_option("--trials", sim_trials, "trial count (outer trials for fair-b)");
  simulate->add_option("--inner", sim_inner, "inner trials (fair-b only)");
  simulate->add_option("--seed", sim_seed, "master seed");
  simulate->add_option("--out", sim_out, "output CSV path (default: stdout)");
  simulate->add_option("--tau", sim_tau, "threshold policy parameter");
  simulate->add_option("--epsilon", sim_epsilon, "prob-reject policy parameter");
  simulate->add_option("--k", sim_k, "serve-kth policy parameter");

  // sweep
  std::string sweep_config, sweep_out;
  auto* sweep = app.add_subcommand("sweep", "run an experiment sweep from a JSON config");
  sweep->add_option("--config", sweep_config, "experiment config JSON")->required();
  sweep->add_option("--out", sweep_out, "output CSV path")->required();

  // ingest
  std::string trips_path, window = "18:00-19:00", grouping = "homogeneous", ingest_out;
  int top_k = 484, days = 0;
  auto* ingest = app.add_subcommand("ingest", "aggregate a trips CSV into an instance");
  ingest->add_option("--trips", trips_path, "trips CSV")->required();
  ingest->add_option("--window", window, "time-of-day window, e.g. 18:00-19:00");
  ingest->add_option("--top-k", top_k, "keep this many most frequent pairs");
  ingest->add_option("--days", days, "days the records span (default: distinct days in the data)");
  ingest->add_option("--grouping", grouping, "homogeneous|destination")
      ->check(CLI::IsMember({"homogeneous", "destination"}));
  ingest->add_option("--out", ingest_out, "output instance JSON")->required();

  // theory
  std::string fn;
  long theory_b = 1;
  double theory_s = 1.0, theory_lambda = 1.0, theory_step = 1e-4;
  auto* theory = app.add_subcommand("theory", "closed-form values and bounds");
  theory->add_option("--fn", fn, "g|h|f|ode|bounds")->required();
  theory->add_option("--b", theory_b, "capacity parameter");
  theory->add_option("--s", theory_s, "scale parameter");
  theory->add_option("--lambda", theory_lambda, "rate parameter");
  theory->add_option("--step", theory_step, "ODE step (<= 1e-4)");

  // make-instance
  std::string builder, make_out;
  int make_n = 10, make_b = 1;
  std::vector<double> make_rates;
  auto* make = app.add_subcommand("make-instance", "write a named example instance");
  make->add_option("--builder", builder, "central-star|pool-supply|single-agent")->required();
  make->add_option("--n", make_n, "size parameter");
  make->add_option("--b", make_b, "capacity (single-agent)");
  make->add_option("--rates", make_rates, "rates (single-agent)");
  make->add_option("--out", make_out, "output instance JSON")->required();

  // synth-trips
  std::string synth_out;
  int synth_origins = 6, synth_pairs = 5, synth_days = 30;
  std::uint64_t synth_seed = 1;
  auto* synth = app.add_subcommand("synth-trips", "write a synthetic trips CSV fixture");
  synth->add_option("--out", synth_out, "output CSV path")->required();
  synth->add_option("--origins", synth_origins, "number of origin areas");
  synth->add_option("--pairs", synth_pairs, "pairs per origin");
  synth->add_option("--days", synth_days, "days of records");
  synth->add_option("--seed", synth_seed, "fixture seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve_lp(instance_path, variant, x_out);
    if (simulate->parsed()) {
      std::map<std::string, double> params;
      if (sim_tau >= 0.0) params["tau"] = sim_tau;
      if (sim_epsilon >= 0.0) params["epsilon"] = sim_epsilon;
      if (sim_k >= 0.0) params["k"] = sim_k;
      return cmd_simulate(sim_instance, sim_policy, sim_objective, sim_trials, sim_inner, sim_seed,
                          sim_out, params);
    }
    if (sweep->parsed()) {
      const ExperimentConfig config = load_config(sweep_config);
      write_sweep_csv(run_sweep(config), sweep_out);
      std::cout << "wrote " << sweep_out << "\n";
      return 0;
    }
    if (ingest->parsed()) {
      IngestOptions options;
      int h1, m1, h2, m2;
      if (std::sscanf(window.c_str(), "%d:%d-%d:%d", &h1, &m1, &h2, &m2) != 4) {
        throw std::runtime_error("bad --window, expected HH:MM-HH:MM");
      }
      options.window_begin_sec = h1 * 3600 + m1 * 60;
      options.window_end_sec = h2 * 3600 + m2 * 60;
      options.top_k = top_k;
      options.days = days;
      options.grouping =
          grouping == "destination" ? Grouping::kDestination : Grouping::kHomogeneous;
      const Instance instance = ingest_trips(read_trips_csv(trips_path), options);
      save_instance(instance, ingest_out);
      std::cout << "wrote " << ingest_out << " (" << instance.num_agents() << " agents, "
                << instance.num_types() << " types, " << instance.groups.size() << " groups)\n";
      return 0;
    }
    if (theory->parsed()) return cmd_theory(fn, theory_b, theory_s, theory_lambda, theory_step);
    if (make->parsed()) {
      Instance instance;
      if (builder == "central-star") {
        instance = central_star(make_n);
      } else if (builder == "pool-supply") {
        instance = pool_supply(make_n);
      } else if (builder == "single-agent") {
        instance = single_agent(make_b, make_rates);
      } else {
        throw std::runtime_error("unknown builder: " + builder);
      }
      save_instance(instance, make_out);
      std::cout << "wrote " << make_out << "\n";
      return 0;
    }
    if (synth->parsed()) {
      const std::vector<TripRecord> records =
          synthetic_trips(synth_origins, synth_pairs, synth_days, synth_seed);
      std::ofstream out(synth_out, std::ios::binary);
      if (!out) throw std::runtime_error("cannot open for writing: " + synth_out);
      out << "trip_id,start_ts,end_ts,origin_area,dest_area,fare\n";
      for (std::size_t r = 0; r < records.size(); ++r) {
        out << r << ',' << records[r].start_epoch << ',' << records[r].start_epoch + 600 << ','
            << records[r].origin_area << ',' << records[r].destination_area << ",10.0\n";
      }
      std::cout << "wrote " << synth_out << " (" << records.size() << " records)\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
