#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "fairmatch/instance.hpp"
#include "fairmatch/lp.hpp"
#include "fairmatch/stochastic.hpp"
#include "support/test_oracles.hpp"

using namespace fairmatch;

namespace {

LpRow row(std::vector<double> coeffs, RowSense sense, double rhs) {
  return LpRow{std::move(coeffs), sense, rhs};
}

// Residuals of an LpSolution against the instance's constraint families.
double solution_residual(const Instance& instance, const LpSolution& sol) {
  double worst = 0.0;
  for (const OfflineAgent& agent : instance.agents) {
    double load = 0.0;
    for (int j : agent.neighbors) load += sol.edge(agent.id, j);
    worst = std::max(worst, load - static_cast<double>(agent.capacity));
  }
  if (sol.variant == LpVariant::kHomogeneous) {
    for (const OnlineType& type : instance.types) {
      worst = std::max(worst, sol.s_star * type.rate - sol.column_sum(type.id));
    }
  } else {
    for (const Group& group : instance.groups) {
      double covered = 0.0, rate = 0.0;
      for (int j : group.members) {
        covered += sol.column_sum(j);
        rate += instance.types[static_cast<std::size_t>(j)].rate;
      }
      worst = std::max(worst, sol.s_star * rate - covered);
    }
    for (const OnlineType& type : instance.types) {
      worst = std::max(worst, sol.column_sum(type.id) - type.rate);
    }
  }
  for (const auto& [edge, value] : sol.x) worst = std::max(worst, -value);
  return worst;
}

}  // namespace

TEST_CASE("solve_lp: one-variable programs") {
  LinearProgram lp;
  lp.objective = {1.0};
  lp.rows.push_back(row({1.0}, RowSense::kLe, 1.0));
  const LpResult one = solve_lp(lp);
  REQUIRE(one.status == LpStatus::kOptimal);
  CHECK(one.objective == doctest::Approx(1.0).epsilon(1e-12));

  lp.rows.push_back(row({1.0}, RowSense::kLe, 0.5));
  const LpResult half = solve_lp(lp);
  REQUIRE(half.status == LpStatus::kOptimal);
  CHECK(half.objective == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("solve_lp: infeasible and unbounded detection") {
  LinearProgram bad;
  bad.objective = {1.0};
  bad.rows.push_back(row({1.0}, RowSense::kGe, 2.0));
  bad.rows.push_back(row({1.0}, RowSense::kLe, 1.0));
  CHECK(solve_lp(bad).status == LpStatus::kInfeasible);

  LinearProgram free;
  free.objective = {1.0};
  free.rows.push_back(row({1.0}, RowSense::kGe, 1.0));
  CHECK(solve_lp(free).status == LpStatus::kUnbounded);
}

TEST_CASE("solve_lp matches brute-force vertex enumeration on 3-variable programs") {
  // A haphazard mix of senses; the oracle enumerates every basic solution.
  LinearProgram lp;
  lp.objective = {3.0, -1.0, 2.0};
  lp.rows.push_back(row({1.0, 1.0, 1.0}, RowSense::kLe, 7.0));
  lp.rows.push_back(row({2.0, -1.0, 0.5}, RowSense::kLe, 5.0));
  lp.rows.push_back(row({-1.0, 2.0, 1.0}, RowSense::kGe, 1.0));
  lp.rows.push_back(row({0.0, 1.0, 2.0}, RowSense::kLe, 6.0));
  const auto oracle = testsupport::enumerate_lp_optimum(lp);
  REQUIRE(oracle.has_value());
  const LpResult result = solve_lp(lp);
  REQUIRE(result.status == LpStatus::kOptimal);
  CHECK(result.objective == doctest::Approx(*oracle).epsilon(1e-9));
  CHECK(result.max_residual <= 1e-8);

  LinearProgram with_eq;
  with_eq.objective = {1.0, 2.0, 0.5};
  with_eq.rows.push_back(row({1.0, 1.0, 0.0}, RowSense::kEq, 3.0));
  with_eq.rows.push_back(row({0.5, 0.0, 1.0}, RowSense::kLe, 4.0));
  with_eq.rows.push_back(row({1.0, 0.0, -1.0}, RowSense::kGe, -2.0));
  const auto oracle_eq = testsupport::enumerate_lp_optimum(with_eq);
  REQUIRE(oracle_eq.has_value());
  const LpResult result_eq = solve_lp(with_eq);
  REQUIRE(result_eq.status == LpStatus::kOptimal);
  CHECK(result_eq.objective == doctest::Approx(*oracle_eq).epsilon(1e-9));
}

TEST_CASE("solve_lp vs the enumeration oracle on random small programs") {
  Rng gen(RngStream{424242, 0});
  int compared = 0;
  for (int rep = 0; rep < 200; ++rep) {
    LinearProgram lp;
    const int n = 2 + static_cast<int>(gen.next_below(2));  // 2..3 variables
    const int m = 2 + static_cast<int>(gen.next_below(3));  // 2..4 rows
    lp.objective.resize(static_cast<std::size_t>(n));
    for (double& c : lp.objective) c = std::round((2.0 * gen.next_double() - 1.0) * 8.0) / 2.0;
    bool bounded_box = false;
    for (int r = 0; r < m; ++r) {
      LpRow row;
      row.coeffs.resize(static_cast<std::size_t>(n));
      for (double& a : row.coeffs) a = std::round((2.0 * gen.next_double() - 1.0) * 8.0) / 2.0;
      const auto roll = gen.next_below(4);
      row.sense = roll == 0 ? RowSense::kGe : roll == 1 ? RowSense::kEq : RowSense::kLe;
      row.rhs = std::round((2.0 * gen.next_double() - 0.5) * 10.0) / 2.0;
      lp.rows.push_back(std::move(row));
    }
    // add a box so the oracle's enumeration is meaningful and bounded
    LpRow box;
    box.coeffs.assign(static_cast<std::size_t>(n), 1.0);
    box.sense = RowSense::kLe;
    box.rhs = 10.0;
    lp.rows.push_back(std::move(box));
    bounded_box = true;
    REQUIRE(bounded_box);

    const auto oracle = testsupport::enumerate_lp_optimum(lp);
    const LpResult result = solve_lp(lp);
    if (!oracle.has_value()) {
      CHECK(result.status == LpStatus::kInfeasible);
      continue;
    }
    REQUIRE(result.status == LpStatus::kOptimal);
    CHECK(result.objective == doctest::Approx(*oracle).epsilon(1e-7));
    CHECK(result.max_residual <= 1e-8);
    ++compared;
  }
  CHECK(compared > 50);  // most random programs are feasible
}

TEST_CASE("homogeneous benchmark on the central star") {
  for (int n : {2, 5, 100}) {
    const Instance star = central_star(n);
    const LpSolution sol = solve_homogeneous(star);
    CHECK(sol.s_star == doctest::Approx(1.0).epsilon(1e-9));
    // unique optimum: x_{t,t} = 1/n on the rare edge, 1 - 1/n toward common
    for (int t = 0; t < n; ++t) {
      CHECK(sol.edge(t, t) == doctest::Approx(1.0 / n).epsilon(1e-7));
      CHECK(sol.edge(t, n) == doctest::Approx(1.0 - 1.0 / n).epsilon(1e-7));
    }
    CHECK(solution_residual(star, sol) <= 1e-8);
  }
}

TEST_CASE("homogeneous benchmark: single agent and pooled supply") {
  const LpSolution two = solve_homogeneous(single_agent(2, {1.0}));
  CHECK(two.s_star == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(two.edge(0, 0) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(opt_upper_bound(two) == doctest::Approx(1.0));

  const Instance pool = pool_supply(7);
  const LpSolution sol = solve_homogeneous(pool);
  CHECK(sol.s_star == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(sol.column_sum(0) == doctest::Approx(7.0).epsilon(1e-9));
  CHECK(solution_residual(pool, sol) <= 1e-8);
}

TEST_CASE("normalization: every column saturates at s* lambda_j") {
  for (int n : {3, 6, 11}) {
    const Instance star = central_star(n);
    const LpSolution sol = solve_homogeneous(star);
    for (const OnlineType& type : star.types) {
      CHECK(std::abs(sol.column_sum(type.id) - sol.s_star * type.rate) <= 1e-9);
    }
  }
}

TEST_CASE("homogeneous benchmark: s* = 0 when a type has no agents") {
  Instance instance = single_agent(1, {1.0});
  instance.types.push_back(OnlineType{1, 1.0, {}});
  instance.groups.push_back(Group{1, {1}});
  REQUIRE(validate(instance).ok());
  const LpSolution sol = solve_homogeneous(instance);
  CHECK(sol.s_star == doctest::Approx(0.0));
}

TEST_CASE("grouped benchmark: imbalanced pair inside one group") {
  // one group, two types with rates 1 and L, each wired to its own unit
  // agent: s* = 2/(1+L)
  for (double big : {9.0, 99.0}) {
    Instance instance;
    instance.label = "pair";
    instance.types.push_back(OnlineType{0, 1.0, {0}});
    instance.types.push_back(OnlineType{1, big, {1}});
    instance.agents.push_back(OfflineAgent{0, 1, {0}});
    instance.agents.push_back(OfflineAgent{1, 1, {1}});
    instance.groups.push_back(Group{0, {0, 1}});
    REQUIRE(validate(instance).ok());
    const LpSolution sol = solve_grouped(instance);
    CHECK(sol.s_star == doctest::Approx(2.0 / (1.0 + big)).epsilon(1e-9));
  }
}

TEST_CASE("grouped benchmark: per-type caps forbid overserving one member") {
  // one group of 4 rate-1 types; only type 0 reaches an agent (capacity 4):
  // without the per-type cap the LP would overserve type 0 to fairness 1,
  // with it s* = 1/4.
  Instance instance;
  instance.label = "overserve";
  instance.agents.push_back(OfflineAgent{0, 4, {0}});
  instance.types.push_back(OnlineType{0, 1.0, {0}});
  for (int j = 1; j < 4; ++j) instance.types.push_back(OnlineType{j, 1.0, {}});
  Group group{0, {0, 1, 2, 3}};
  instance.groups.push_back(group);
  REQUIRE(validate(instance).ok());
  const LpSolution sol = solve_grouped(instance);
  CHECK(sol.s_star == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(sol.column_sum(0) <= 1.0 + 1e-9);
}

TEST_CASE("grouped benchmark with homogeneous groups equals min(homogeneous, 1)") {
  for (const Instance& instance :
       {central_star(5), single_agent(2, {1.0}), pool_supply(6), single_agent(3, {0.5, 0.5})}) {
    const LpSolution grouped = solve_grouped(instance);
    const LpSolution homogeneous = solve_homogeneous(instance);
    CHECK(grouped.s_star ==
          doctest::Approx(std::min(homogeneous.s_star, 1.0)).epsilon(1e-8));
    CHECK(grouped.s_star <= 1.0 + 1e-9);
    CHECK(solution_residual(instance, grouped) <= 1e-8);
  }
}

TEST_CASE("opt_upper_bound per variant") {
  LpSolution sol;
  sol.variant = LpVariant::kHomogeneous;
  sol.s_star = 2.0;
  CHECK(opt_upper_bound(sol) == doctest::Approx(1.0));
  sol.s_star = 0.5;
  CHECK(opt_upper_bound(sol) == doctest::Approx(0.5));
  sol.variant = LpVariant::kGrouped;
  sol.s_star = 0.8;
  CHECK(opt_upper_bound(sol) == doctest::Approx(0.8));
}

TEST_CASE("solver determinism: identical inputs give identical solutions") {
  const Instance star = central_star(9);
  const LpSolution a = solve_homogeneous(star);
  const LpSolution b = solve_homogeneous(star);
  REQUIRE(a.x.size() == b.x.size());
  CHECK(a.s_star == b.s_star);
  auto ita = a.x.begin();
  auto itb = b.x.begin();
  for (; ita != a.x.end(); ++ita, ++itb) {
    CHECK(ita->first == itb->first);
    CHECK(ita->second == itb->second);  // bitwise equality
  }
}
