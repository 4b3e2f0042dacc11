#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fairmatch/instance.hpp"

namespace fairmatch {

enum class RowSense { kLe, kGe, kEq };

struct LpRow {
  std::vector<double> coeffs;  // dense, one per variable
  RowSense sense = RowSense::kLe;
  double rhs = 0.0;
};

// Generic carrier for both benchmark LPs: maximize c.x subject to rows,
// all variables >= 0.
struct LinearProgram {
  std::vector<double> objective;
  std::vector<LpRow> rows;

  int num_vars() const { return static_cast<int>(objective.size()); }
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

struct LpResult {
  LpStatus status = LpStatus::kOptimal;
  std::vector<double> values;
  double objective = 0.0;
  // Largest constraint violation of the returned point; tests pin <= 1e-8.
  double max_residual = 0.0;
};

// Dense two-phase primal simplex with Bland's rule throughout, so identical
// inputs always produce the identical vertex. Optimality is certified by the
// final reduced costs (all <= tol); primal feasibility is re-checked against
// the original rows and reported in max_residual.
LpResult solve_lp(const LinearProgram& lp, double tol = 1e-9);

enum class LpVariant { kHomogeneous, kGrouped };

struct LpSolution {
  std::map<std::pair<int, int>, double> x;  // (agent i, type j) -> x_ij
  double s_star = 0.0;
  double objective = 0.0;
  LpVariant variant = LpVariant::kHomogeneous;

  double edge(int agent, int type) const;
  // sum_i x_ij for one type.
  double column_sum(int type) const;
};

// max s  s.t.  sum_j x_ij <= b_i,  sum_i x_ij >= s*lambda_j,  x,s >= 0.
// The returned solution is column-normalized so sum_i x_ij = s* lambda_j
// exactly for every type (skipped when s* = 0); rescaling a column downward
// cannot violate the capacity rows.
LpSolution solve_homogeneous(const Instance& instance);

// Grouped variant: group coverage rows sum_{j in G} sum_i x_ij >= s * rate(G)
// plus the per-type caps sum_i x_ij <= lambda_j, which force s* <= 1.
LpSolution solve_grouped(const Instance& instance);

// Valid clairvoyant upper bound: min(s*, 1) for the homogeneous LP, s* for
// the grouped one.
double opt_upper_bound(const LpSolution& sol);

}  // namespace fairmatch
