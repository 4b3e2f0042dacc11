// Acceptance suite: one pass/fail line per criterion, exit code = #failures.
// Monte-Carlo checks run at fixed seeds; trial counts are sized so that the
// stated tolerance bands dominate estimator noise (including the downward
// bias of min-over-groups estimators on many-group instances).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "fairmatch/harness.hpp"
#include "fairmatch/instance.hpp"
#include "fairmatch/lp.hpp"
#include "fairmatch/metrics.hpp"
#include "fairmatch/policies.hpp"
#include "fairmatch/stochastic.hpp"
#include "fairmatch/theory.hpp"

using namespace fairmatch;

namespace {

struct Check {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += "FAILED " + what;
    } else {
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.5g", v);
  return buf;
}

const double kOneMinusInvE = 1.0 - std::exp(-1.0);

// ---------------------------------------------------------------- criterion 1
Check closed_form_anchors() {
  Check check;
  check.require(std::abs(g_bound(1, 1.0) - kOneMinusInvE) <= 1e-12, "g(1,1)=1-1/e");
  bool all = true;
  for (long b = 1; b <= 30; ++b) {
    const double bd = static_cast<double>(b);
    const double closed = 1.0 - std::exp(-bd + (bd - 1.0) * std::log(bd) - std::lgamma(bd));
    all &= std::abs(g_bound(b, 1.0) - closed) <= 1e-10;
  }
  check.require(all, "g(b,1) closed form b=1..30");
  const double f11 = fcfs_fair_b_ratio(1, 1.0);
  check.require(f11 >= 0.862 && f11 <= 0.864, "f(1,1)=" + num(f11));
  const double ratio = ode_fair_b_upper_bound(1.0, 1e-4) / offline_fair_b_single_agent(1, 1.0);
  check.require(ratio >= 0.937 && ratio <= 0.947, "R_1(1)/OFF=" + num(ratio));
  return check;
}

// ---------------------------------------------------------------- criterion 2
Check fcfs_oracle_equivalence() {
  Check check;
  std::uint64_t seed = 201;
  for (int b : {1, 2, 5}) {
    for (double lambda : {0.5, 1.0, 2.0}) {
      const FairnessEstimate sim =
          estimate_fair_a(policy_factory("fcfs"), single_agent(b, {lambda}), 1000000, seed++);
      const double exact = fcfs_fair_a(b, lambda);
      const double se = std::max(sim.half_width_95 / 1.96, 1e-9);
      check.require(std::abs(sim.mean - exact) <= 3.0 * se + 1e-6,
                    "b=" + std::to_string(b) + ",L=" + num(lambda) + " |" +
                        num(sim.mean - exact) + "|<=3se");
    }
  }
  return check;
}

// ---------------------------------------------------------------- criterion 3
Check central_star_suite() {
  Check check;
  const Instance star = central_star(100);
  const LpSolution sol = solve_homogeneous(star);
  check.require(std::abs(sol.s_star - 1.0) <= 1e-9, "LP s*=1");

  const FairnessEstimate nadap_s =
      estimate_fair_a(policy_factory("nadap-s"), star, 12000000, 301);
  check.require(std::abs(nadap_s.mean - kOneMinusInvE) <= 0.01,
                "NADAP-S=" + num(nadap_s.mean) + " in 1-1/e+-0.01");

  const FairnessEstimate greedy = estimate_fair_a(policy_factory("greedy"), star, 200000, 302);
  check.require(greedy.mean <= 0.55, "GREEDY=" + num(greedy.mean) + "<=0.55");
  const FairnessEstimate rank = estimate_fair_a(policy_factory("rank"), star, 200000, 303);
  check.require(rank.mean <= 0.55, "RANK=" + num(rank.mean) + "<=0.55");

  const double tau = 2.0 - std::sqrt(3.0);
  const FairnessEstimate threshold =
      estimate_fair_a(policy_factory("threshold", {{"tau", tau}}), star, 4000000, 304);
  check.require(std::abs(threshold.mean - (std::sqrt(3.0) - 1.0)) <= 0.03,
                "THRESHOLD=" + num(threshold.mean) + " in sqrt(3)-1+-0.03");
  return check;
}

// ---------------------------------------------------------------- criterion 4
Check pool_supply_suite() {
  Check check;
  const Instance pool = pool_supply(50);
  const FairnessEstimate reserve = estimate_fair_a(policy_factory("reserve"), pool, 100000, 401);
  check.require(reserve.mean >= 0.93, "RESERVE=" + num(reserve.mean) + ">=0.93");
  const FairnessEstimate nadap_s = estimate_fair_a(policy_factory("nadap-s"), pool, 100000, 402);
  check.require(std::abs(nadap_s.mean - kOneMinusInvE) <= 0.01,
                "NADAP-S=" + num(nadap_s.mean) + " in 1-1/e+-0.01");
  return check;
}

// ---------------------------------------------------------------- criterion 5
Instance random_battery_instance(std::uint64_t seed) {
  Rng rng(RngStream{20260501, seed});
  Instance instance;
  instance.label = "battery(" + std::to_string(seed) + ")";
  const int n_agents = 2 + static_cast<int>(rng.next_below(5));  // 2..6
  const int n_types = 2 + static_cast<int>(rng.next_below(7));   // 2..8
  for (int i = 0; i < n_agents; ++i) {
    instance.agents.push_back(OfflineAgent{i, 1 + static_cast<int>(rng.next_below(4)), {}});
  }
  for (int j = 0; j < n_types; ++j) {
    OnlineType type{j, 1.0 + 2.0 * rng.next_double(), {}};  // rates in [1, 3]
    const int degree =
        1 + static_cast<int>(rng.next_below(std::min<std::uint64_t>(3, n_agents)));
    for (int d = 0; d < degree; ++d) {
      const int i = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n_agents)));
      if (std::find(type.neighbors.begin(), type.neighbors.end(), i) == type.neighbors.end()) {
        type.neighbors.push_back(i);
        instance.agents[static_cast<std::size_t>(i)].neighbors.push_back(j);
      }
    }
    instance.types.push_back(std::move(type));
  }
  // homogeneous cover plus two overlapping multi-type groups
  for (int j = 0; j < n_types; ++j) instance.groups.push_back(Group{j, {j}});
  for (int extra = 0; extra < 2; ++extra) {
    Group group{n_types + extra, {}};
    for (int j = 0; j < n_types; ++j) {
      if (rng.next_below(2) == 0) group.members.push_back(j);
    }
    if (group.members.empty()) group.members.push_back(extra % n_types);
    instance.groups.push_back(std::move(group));
  }
  return instance;
}

Check bound_dominance_battery() {
  Check check;
  int worst_reported = 0;
  for (std::uint64_t k = 0; k < 20; ++k) {
    const Instance instance = random_battery_instance(k);
    if (!validate(instance).ok()) {
      check.require(false, "battery instance " + std::to_string(k) + " invalid");
      continue;
    }
    const LpSolution sol = solve_grouped(instance);
    const double s_star = sol.s_star;
    const long min_rate_floor = static_cast<long>(std::floor(instance.min_rate()));

    const FairnessEstimate nadap =
        estimate_fair_a(policy_factory("nadap"), instance, 30000, 500 + k);
    const double nadap_floor =
        nadap_bound(instance.min_capacity()) * s_star - 3.0 * nadap.half_width_95 / 1.96;
    const bool nadap_ok = nadap.mean >= nadap_floor;

    const FairnessEstimate reserve =
        estimate_fair_a(policy_factory("reserve"), instance, 30000, 700 + k);
    const double reserve_floor =
        nadap_bound(std::max(1L, min_rate_floor)) * s_star - 3.0 * reserve.half_width_95 / 1.96;
    const bool reserve_ok = reserve.mean >= reserve_floor;

    if (!nadap_ok || !reserve_ok || worst_reported < 2) {
      check.require(nadap_ok, "inst" + std::to_string(k) + " NADAP " + num(nadap.mean) +
                                  ">=" + num(nadap_floor));
      check.require(reserve_ok, "inst" + std::to_string(k) + " RESERVE " + num(reserve.mean) +
                                    ">=" + num(reserve_floor));
      ++worst_reported;
    } else {
      if (!nadap_ok || !reserve_ok) check.pass = false;
    }
  }
  check.require(true, "20-instance battery done");
  return check;
}

// ---------------------------------------------------------------- criterion 6
Check dependent_rounding_guarantees() {
  Check check;
  const std::vector<double> mixed{0.15, 0.6, 1.0, 0.35, 0.0, 0.8, 0.45, 0.7, 0.25, 0.5};
  const double total = std::accumulate(mixed.begin(), mixed.end(), 0.0);
  std::vector<double> hits(mixed.size(), 0.0);
  bool sums_ok = true;
  const long n = 100000;
  for (long t = 0; t < n; ++t) {
    const auto y = dependent_round_vector(mixed, RngStream{601, static_cast<std::uint64_t>(t)});
    const long sum = std::accumulate(y.begin(), y.end(), 0L);
    sums_ok &= sum == static_cast<long>(std::floor(total)) ||
               sum == static_cast<long>(std::ceil(total));
    for (std::size_t i = 0; i < y.size(); ++i) hits[i] += y[i];
  }
  check.require(sums_ok, "sum in {floor,ceil} on all 1e5 samples");
  double chi2 = 0.0;
  int df = 0;
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    if (mixed[i] == 0.0 || mixed[i] == 1.0) {
      sums_ok &= hits[i] == (mixed[i] == 1.0 ? static_cast<double>(n) : 0.0);
      continue;
    }
    const double expected = mixed[i] * static_cast<double>(n);
    chi2 += (hits[i] - expected) * (hits[i] - expected) / (expected * (1.0 - mixed[i]));
    ++df;
  }
  const double crit = df * std::pow(1.0 - 2.0 / (9.0 * df) + 3.090232 * std::sqrt(2.0 / (9.0 * df)), 3.0);
  check.require(chi2 < crit, "marginal chi2=" + num(chi2) + "<" + num(crit));

  bool exact3 = true;
  const std::vector<double> point_three(10, 0.3);
  for (long t = 0; t < 100000; ++t) {
    const auto y =
        dependent_round_vector(point_three, RngStream{602, static_cast<std::uint64_t>(t)});
    exact3 &= std::accumulate(y.begin(), y.end(), 0) == 3;
  }
  check.require(exact3, "10x0.3 sums to 3 surely");

  const std::vector<FracEdge> edges{{0, 0, 0.5}, {1, 0, 0.5}, {2, 0, 0.5},
                                    {0, 1, 0.4}, {1, 1, 0.3}, {2, 1, 0.2}};
  bool disjoint = true, col_bounds = true;
  double col0 = 0.0;
  for (long t = 0; t < 100000; ++t) {
    const auto chosen =
        dependent_round_bipartite(edges, RngStream{603, static_cast<std::uint64_t>(t)});
    int rows[3] = {0, 0, 0};
    int c0 = 0, c1 = 0;
    for (const FracEdge& e : chosen) {
      ++rows[e.row];
      (e.col == 0 ? c0 : c1)++;
    }
    disjoint &= rows[0] <= 1 && rows[1] <= 1 && rows[2] <= 1;
    col_bounds &= (c0 == 1 || c0 == 2) && (c1 == 0 || c1 == 1);
    col0 += c0;
  }
  check.require(disjoint, "serve-sets disjoint on all samples");
  check.require(col_bounds, "|serve(j)| in {floor,ceil} on all samples");
  check.require(std::abs(col0 / 100000.0 - 1.5) < 0.01, "E|serve(0)|=" + num(col0 / 100000.0));
  return check;
}

// ---------------------------------------------------------------- criterion 7
Check fair_b_orderings() {
  Check check;
  const Instance example3 = single_agent(1, {1.0});
  const FairnessEstimate a3 = estimate_fair_a(policy_factory("fcfs"), example3, 1000000, 701);
  const FairnessEstimate b3 = estimate_fair_b(policy_factory("fcfs"), example3, 100000, 200, 702);
  check.require(b3.mean - a3.mean >= 0.02, "example 3: FAIR-B-FAIR-A=" + num(b3.mean - a3.mean) +
                                               ">=0.02");

  const Instance example4 = single_agent(1, {10.0});
  const PolicyFactory eleventh = policy_factory("serve-kth", {{"k", 11.0}});
  const FairnessEstimate a4 = estimate_fair_a(eleventh, example4, 1000000, 703);
  const FairnessEstimate b4 = estimate_fair_b(eleventh, example4, 100000, 200, 704);
  const double separation = 3.0 * (a4.half_width_95 + b4.half_width_95) / 1.96;
  check.require(a4.mean - b4.mean > separation,
                "example 4: FAIR-B=" + num(b4.mean) + "<FAIR-A=" + num(a4.mean));
  return check;
}

// ---------------------------------------------------------------- criterion 8
Check prob_reject_bound_check() {
  Check check;
  const std::vector<double> rates{25.0, 25.0, 25.0, 25.0};  // Lambda = 100

  const Instance surplus = single_agent(120, rates);  // kappa = 1.2
  const FairnessEstimate sim_surplus =
      estimate_fair_b(policy_factory("prob-reject"), surplus, 20000, 50, 801);
  const double off_surplus = std::min(1.0, offline_fair_b_single_agent(120, 100.0));
  const double ratio = sim_surplus.mean / off_surplus;
  check.require(ratio >= 0.81,
                "kappa=1.2: ratio=" + num(ratio) + ">=0.81 (bound " +
                    num(prob_reject_bounds(120, 100.0)[0].value) + ")");

  const Instance scarce = single_agent(80, rates);  // kappa = 0.8
  const FairnessEstimate sim_scarce =
      estimate_fair_b(policy_factory("prob-reject"), scarce, 20000, 50, 802);
  const double floor_scarce = (1.0 - std::sqrt(std::log(100.0) / 100.0)) * 0.8 * 0.95;
  check.require(sim_scarce.mean >= floor_scarce, "kappa=0.8: FAIR-B=" + num(sim_scarce.mean) +
                                                     ">=" + num(floor_scarce) +
                                                     " (0.95 asymptotic slack)");
  return check;
}

// ---------------------------------------------------------------- criterion 9
Check guarantee_curve_sweep() {
  Check check;
  bool floor_ok = true, balanced_ok = true, monotone_ok = true, tail_ok = true;
  for (long b = 1; b <= 40; ++b) {
    for (int k = 1; k <= 30; ++k) {
      const double s = 0.1 * static_cast<double>(k);
      const double value = g_bound(b, s);
      floor_ok &= value >= kOneMinusInvE - 1e-12;
      balanced_ok &= value >= g_bound(b, 1.0) - 1e-12;
      if (b > 1) monotone_ok &= value >= g_bound(b - 1, s) - 1e-12;
      if (!(b == 1 && s == 1.0)) tail_ok &= value >= g_tail_bound(b, s).value - 1e-12;
    }
  }
  check.require(floor_ok, "g>=1-1/e on grid");
  check.require(balanced_ok, "g(b,s)>=g(b,1) on grid");
  check.require(monotone_ok, "g increasing in b on grid");
  check.require(tail_ok, "g>=tail bounds on grid");
  return check;
}

// --------------------------------------------------------- criteria 10 and 11
ExperimentConfig homogeneous_config() {
  IngestOptions options;
  options.window_begin_sec = 18 * 3600;
  options.window_end_sec = 19 * 3600;
  options.top_k = 484;
  options.days = 30;
  options.grouping = Grouping::kHomogeneous;
  options.label = "synthetic-homogeneous";
  ExperimentConfig config;
  config.label = "figure-1-style";
  config.seed = 1001;
  config.trials = 1000;
  config.objective = Objective::kFairA;
  config.benchmark_variant = LpVariant::kHomogeneous;
  config.instance = ingest_trips(synthetic_trips(6, 5, 30, 2026), options);
  config.policies = {{"nadap-s", {}}, {"greedy", {}}, {"rank", {}}};
  config.sweep = SweepKind::kScaleS;
  config.scale_targets = {0.5, 1.0, 1.5, 2.0};
  config.config_hash = config_fingerprint("figure-1-style");
  return config;
}

ExperimentConfig heterogeneous_config() {
  IngestOptions options;
  options.window_begin_sec = 18 * 3600;
  options.window_end_sec = 19 * 3600;
  options.top_k = 484;
  options.days = 30;
  options.grouping = Grouping::kDestination;
  options.label = "synthetic-destination";
  ExperimentConfig config;
  config.label = "figure-2-style";
  config.seed = 1002;
  config.trials = 1000;
  config.objective = Objective::kFairA;
  config.benchmark_variant = LpVariant::kGrouped;
  config.instance =
      ingest_trips(synthetic_trips(6, 5, 30, 2026, /*rare_origin=*/true), options);
  config.policies = {{"nadap", {}}, {"reserve", {}}, {"greedy", {}}, {"rank", {}}, {"mgs", {}}};
  config.sweep = SweepKind::kBLambda;
  config.cells = {{2, 2.0}, {5, 4.0}, {27, 23.0}};
  config.config_hash = config_fingerprint("figure-2-style");
  return config;
}

double row_ratio(const std::vector<SweepRow>& rows, const std::string& cell,
                 const std::string& policy) {
  for (const SweepRow& row : rows) {
    if (row.cell == cell && row.policy == policy) {
      if (!row.error.empty()) return -1.0;
      return row.ratio;
    }
  }
  return -1.0;
}

Check qualitative_reproduction(std::vector<SweepRow>& homogeneous_rows,
                               std::vector<SweepRow>& heterogeneous_rows) {
  Check check;
  const ExperimentConfig fig1 = homogeneous_config();
  homogeneous_rows = run_sweep(fig1);
  const std::vector<std::string> cells{"s*=0.5", "s*=1", "s*=1.5", "s*=2"};
  bool dominates = true;
  for (const std::string& cell : cells) {
    const double ours = row_ratio(homogeneous_rows, cell, "nadap-s");
    dominates &= ours >= row_ratio(homogeneous_rows, cell, "greedy") - 1e-12 &&
                 ours >= row_ratio(homogeneous_rows, cell, "rank") - 1e-12 && ours >= 0.0;
  }
  check.require(dominates, "NADAP-S >= GREEDY,RANK at every s*");
  std::string argmin;
  double best = 2.0;
  for (const std::string& cell : cells) {
    const double value = row_ratio(homogeneous_rows, cell, "nadap-s");
    if (value < best) {
      best = value;
      argmin = cell;
    }
  }
  check.require(argmin == "s*=1", "NADAP-S ratio minimized at " + argmin);

  const ExperimentConfig fig2 = heterogeneous_config();
  heterogeneous_rows = run_sweep(fig2);
  const double nadap_gap =
      row_ratio(heterogeneous_rows, "b=27,l=23", "nadap") - row_ratio(heterogeneous_rows, "b=2,l=2", "nadap");
  const double reserve_gap = row_ratio(heterogeneous_rows, "b=27,l=23", "reserve") -
                             row_ratio(heterogeneous_rows, "b=2,l=2", "reserve");
  check.require(nadap_gap >= 0.1, "NADAP large-cell gain=" + num(nadap_gap) + ">=0.1");
  check.require(reserve_gap >= 0.1, "RESERVE large-cell gain=" + num(reserve_gap) + ">=0.1");
  return check;
}

Check determinism(const std::vector<SweepRow>& homogeneous_rows,
                  const std::vector<SweepRow>& heterogeneous_rows) {
  Check check;
  const std::string fig1_again = sweep_csv(run_sweep(homogeneous_config()));
  check.require(fig1_again == sweep_csv(homogeneous_rows), "figure-1 sweep CSV byte-identical");
  const std::string fig2_again = sweep_csv(run_sweep(heterogeneous_config()));
  check.require(fig2_again == sweep_csv(heterogeneous_rows), "figure-2 sweep CSV byte-identical");
  write_sweep_csv(homogeneous_rows, "/tmp/fairmatch_acceptance_fig1.csv");
  write_sweep_csv(heterogeneous_rows, "/tmp/fairmatch_acceptance_fig2.csv");
  return check;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  if (argc > 2 && std::strcmp(argv[1], "--only") == 0) only = std::atoi(argv[2]);

  std::vector<SweepRow> fig1_rows, fig2_rows;
  const std::vector<std::pair<std::string, std::function<Check()>>> criteria{
      {"closed-form anchors (g, f, ODE ratio)", closed_form_anchors},
      {"FCFS long-run fairness matches the truncated-Poisson oracle", fcfs_oracle_equivalence},
      {"central-star suite (NADAP-S, GREEDY, RANK, threshold, LP)", central_star_suite},
      {"pooled-supply suite (RESERVE, NADAP-S)", pool_supply_suite},
      {"sampler/pooling bound dominance on a random battery", bound_dominance_battery},
      {"dependent rounding marginal and sum guarantees", dependent_rounding_guarantees},
      {"short-run vs long-run fairness orderings", fair_b_orderings},
      {"probabilistic-rejection short-run bounds", prob_reject_bound_check},
      {"g(b,s) property sweep", guarantee_curve_sweep},
      {"qualitative sweep reproduction on synthetic trips",
       [&]() { return qualitative_reproduction(fig1_rows, fig2_rows); }},
      {"seeded reruns are byte-identical", [&]() { return determinism(fig1_rows, fig2_rows); }},
  };

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (only > 0 && static_cast<int>(k + 1) != only &&
        !(only == 11 && k + 1 == 10)) {  // criterion 11 depends on 10's rows
      continue;
    }
    const Check result = criteria[k].second();
    failures += !result.pass;
    std::printf("criterion %2zu %s  %s  [%s]\n", k + 1, result.pass ? "PASS" : "FAIL",
                criteria[k].first.c_str(), result.detail.c_str());
    std::fflush(stdout);
  }
  if (failures == 0) {
    std::printf("all acceptance criteria passed\n");
  } else {
    std::printf("%d acceptance criteria FAILED\n", failures);
  }
  return failures;
}
