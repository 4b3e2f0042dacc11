#include "fairmatch/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fairmatch {

namespace {

constexpr long kMaxIterations = 200000;

// Dense tableau: rows m, columns = structural + slack/artificial + rhs.
// Basis tracked per row. Bland's rule end to end.
class SimplexTableau {
 public:
  SimplexTableau(const LinearProgram& lp, double tol) : tol_(tol), n_struct_(lp.num_vars()) {
    const int m = static_cast<int>(lp.rows.size());
    // Count extra columns: one slack/surplus per inequality, one artificial
    // per >= or = row (and per <= row with negative rhs after normalization).
    std::vector<LpRow> rows = lp.rows;
    for (LpRow& row : rows) {
      if (static_cast<int>(row.coeffs.size()) != n_struct_) {
        throw std::invalid_argument("solve_lp: row width mismatch");
      }
      for (double c : row.coeffs) {
        if (!std::isfinite(c)) throw std::invalid_argument("solve_lp: non-finite coefficient");
      }
      if (!std::isfinite(row.rhs)) throw std::invalid_argument("solve_lp: non-finite rhs");
      if (row.rhs < 0.0) {
        for (double& c : row.coeffs) c = -c;
        row.rhs = -row.rhs;
        row.sense = row.sense == RowSense::kLe   ? RowSense::kGe
                    : row.sense == RowSense::kGe ? RowSense::kLe
                                                 : RowSense::kEq;
      }
    }
    int n_slack = 0, n_art = 0;
    for (const LpRow& row : rows) {
      if (row.sense != RowSense::kEq) ++n_slack;
      if (row.sense != RowSense::kLe) ++n_art;
    }
    cols_ = n_struct_ + n_slack + n_art;
    a_.assign(static_cast<std::size_t>(m) * (cols_ + 1), 0.0);
    basis_.assign(static_cast<std::size_t>(m), -1);
    art_begin_ = n_struct_ + n_slack;

    int slack = n_struct_;
    int art = art_begin_;
    for (int r = 0; r < m; ++r) {
      const LpRow& row = rows[static_cast<std::size_t>(r)];
      for (int c = 0; c < n_struct_; ++c) at(r, c) = row.coeffs[static_cast<std::size_t>(c)];
      at(r, cols_) = row.rhs;
      if (row.sense == RowSense::kLe) {
        at(r, slack) = 1.0;
        basis_[static_cast<std::size_t>(r)] = slack++;
      } else if (row.sense == RowSense::kGe) {
        at(r, slack) = -1.0;
        ++slack;
        at(r, art) = 1.0;
        basis_[static_cast<std::size_t>(r)] = art++;
      } else {
        at(r, art) = 1.0;
        basis_[static_cast<std::size_t>(r)] = art++;
      }
    }
    m_ = m;
  }

  LpStatus solve(const std::vector<double>& objective, std::vector<double>& values,
                 double& objective_value) {
    // Phase 1: maximize -sum(artificials).
    if (art_begin_ < cols_) {
      std::vector<double> phase1(static_cast<std::size_t>(cols_), 0.0);
      for (int c = art_begin_; c < cols_; ++c) phase1[static_cast<std::size_t>(c)] = -1.0;
      const LpStatus status = optimize(phase1);
      if (status != LpStatus::kOptimal) return status;
      double infeasibility = 0.0;
      for (int r = 0; r < m_; ++r) {
        if (basis_[static_cast<std::size_t>(r)] >= art_begin_) infeasibility += at(r, cols_);
      }
      if (infeasibility > 1e3 * tol_) return LpStatus::kInfeasible;
      pivot_out_artificials();
    }
    // Phase 2 on the original objective, artificial columns disallowed.
    std::vector<double> phase2(static_cast<std::size_t>(cols_), 0.0);
    for (int c = 0; c < n_struct_; ++c) phase2[static_cast<std::size_t>(c)] = objective[static_cast<std::size_t>(c)];
    const LpStatus status = optimize(phase2, /*allow_artificials=*/false);
    if (status != LpStatus::kOptimal) return status;

    values.assign(static_cast<std::size_t>(n_struct_), 0.0);
    for (int r = 0; r < m_; ++r) {
      const int b = basis_[static_cast<std::size_t>(r)];
      if (b >= 0 && b < n_struct_) values[static_cast<std::size_t>(b)] = std::max(0.0, at(r, cols_));
    }
    objective_value = 0.0;
    for (int c = 0; c < n_struct_; ++c) {
      objective_value += objective[static_cast<std::size_t>(c)] * values[static_cast<std::size_t>(c)];
    }
    return LpStatus::kOptimal;
  }

 private:
  double& at(int r, int c) { return a_[static_cast<std::size_t>(r) * (cols_ + 1) + c]; }
  double at(int r, int c) const { return a_[static_cast<std::size_t>(r) * (cols_ + 1) + c]; }

  void pivot(int row, int col) {
    const double p = at(row, col);
    for (int c = 0; c <= cols_; ++c) at(row, c) /= p;
    at(row, col) = 1.0;
    for (int r = 0; r < m_; ++r) {
      if (r == row) continue;
      const double factor = at(r, col);
      if (factor == 0.0) continue;
      for (int c = 0; c <= cols_; ++c) at(r, c) -= factor * at(row, c);
      at(r, col) = 0.0;
    }
    basis_[static_cast<std::size_t>(row)] = col;
  }

  // Reduced costs rc_j = c_j - c_B . (tableau column j), maintained
  // incrementally across pivots and refreshed periodically against drift.
  void recompute_reduced_costs(const std::vector<double>& cost, std::vector<double>& rc) const {
    for (int c = 0; c <= cols_; ++c) {
      double v = c < cols_ ? cost[static_cast<std::size_t>(c)] : 0.0;
      for (int r = 0; r < m_; ++r) {
        const int b = basis_[static_cast<std::size_t>(r)];
        const double cb = b >= 0 ? cost[static_cast<std::size_t>(b)] : 0.0;
        if (cb != 0.0) v -= cb * at(r, c);
      }
      rc[static_cast<std::size_t>(c)] = v;
    }
  }

  LpStatus optimize(const std::vector<double>& cost, bool allow_artificials = true) {
    std::vector<double> rc(static_cast<std::size_t>(cols_) + 1, 0.0);
    recompute_reduced_costs(cost, rc);
    std::vector<char> in_basis(static_cast<std::size_t>(cols_), 0);
    for (int r = 0; r < m_; ++r) {
      if (basis_[static_cast<std::size_t>(r)] >= 0) {
        in_basis[static_cast<std::size_t>(basis_[static_cast<std::size_t>(r)])] = 1;
      }
    }
    const int limit = allow_artificials ? cols_ : art_begin_;
    for (long iter = 0; iter < kMaxIterations; ++iter) {
      if (iter > 0 && iter % 512 == 0) recompute_reduced_costs(cost, rc);
      int entering = -1;
      for (int c = 0; c < limit; ++c) {
        if (!in_basis[static_cast<std::size_t>(c)] && rc[static_cast<std::size_t>(c)] > tol_) {
          entering = c;  // Bland: smallest improving index
          break;
        }
      }
      if (entering < 0) return LpStatus::kOptimal;

      int leaving = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int r = 0; r < m_; ++r) {
        const double a = at(r, entering);
        if (a > tol_) {
          const double ratio = at(r, cols_) / a;
          if (ratio < best_ratio - tol_ ||
              (ratio < best_ratio + tol_ && leaving >= 0 &&
               basis_[static_cast<std::size_t>(r)] < basis_[static_cast<std::size_t>(leaving)])) {
            best_ratio = ratio;
            leaving = r;
          }
        }
      }
      if (leaving < 0) return LpStatus::kUnbounded;
      const int departing = basis_[static_cast<std::size_t>(leaving)];
      pivot(leaving, entering);
      const double gain = rc[static_cast<std::size_t>(entering)];
      for (int c = 0; c <= cols_; ++c) rc[static_cast<std::size_t>(c)] -= gain * at(leaving, c);
      rc[static_cast<std::size_t>(entering)] = 0.0;
      if (departing >= 0) in_basis[static_cast<std::size_t>(departing)] = 0;
      in_basis[static_cast<std::size_t>(entering)] = 1;
    }
    return LpStatus::kIterationLimit;
  }

  // After phase 1, swap any artificial still in the basis (at value 0) for a
  // non-artificial column in its row; rows with no such column are redundant
  // and harmless since the artificial is pinned at zero.
  void pivot_out_artificials() {
    for (int r = 0; r < m_; ++r) {
      if (basis_[static_cast<std::size_t>(r)] < art_begin_) continue;
      for (int c = 0; c < art_begin_; ++c) {
        if (std::abs(at(r, c)) > 1e3 * tol_) {
          pivot(r, c);
          break;
        }
      }
    }
  }

  double tol_;
  int n_struct_;
  int cols_ = 0;
  int art_begin_ = 0;
  int m_ = 0;
  std::vector<double> a_;
  std::vector<int> basis_;
};

double residual(const LinearProgram& lp, const std::vector<double>& values) {
  double worst = 0.0;
  for (const LpRow& row : lp.rows) {
    double lhs = 0.0;
    for (int c = 0; c < lp.num_vars(); ++c) {
      lhs += row.coeffs[static_cast<std::size_t>(c)] * values[static_cast<std::size_t>(c)];
    }
    double violation = 0.0;
    switch (row.sense) {
      case RowSense::kLe: violation = lhs - row.rhs; break;
      case RowSense::kGe: violation = row.rhs - lhs; break;
      case RowSense::kEq: violation = std::abs(lhs - row.rhs); break;
    }
    worst = std::max(worst, violation);
  }
  for (double v : values) worst = std::max(worst, -v);
  return worst;
}

}  // namespace

LpResult solve_lp(const LinearProgram& lp, double tol) {
  if (lp.num_vars() == 0) throw std::invalid_argument("solve_lp: empty program");
  SimplexTableau tableau(lp, tol);
  LpResult result;
  result.status = tableau.solve(lp.objective, result.values, result.objective);
  if (result.status == LpStatus::kOptimal) {
    result.max_residual = residual(lp, result.values);
  }
  return result;
}

double LpSolution::edge(int agent, int type) const {
  const auto it = x.find({agent, type});
  return it == x.end() ? 0.0 : it->second;
}

double LpSolution::column_sum(int type) const {
  double sum = 0.0;
  for (const auto& [key, value] : x) {
    if (key.second == type) sum += value;
  }
  return sum;
}

namespace {

struct EdgeIndex {
  std::vector<std::pair<int, int>> edges;  // (agent, type), deterministic order
  int s_var = 0;                           // index of the scale variable

  explicit EdgeIndex(const Instance& instance) {
    for (int j = 0; j < instance.num_types(); ++j) {
      std::vector<int> neighbors = instance.types[static_cast<std::size_t>(j)].neighbors;
      std::sort(neighbors.begin(), neighbors.end());
      for (int i : neighbors) edges.emplace_back(i, j);
    }
    s_var = static_cast<int>(edges.size());
  }
};

LpSolution run_benchmark(const EdgeIndex& index, LinearProgram&& lp, LpVariant variant) {
  const LpResult result = solve_lp(lp, 1e-9);
  switch (result.status) {
    case LpStatus::kOptimal: break;
    case LpStatus::kInfeasible:
      throw std::runtime_error("benchmark LP infeasible (should not happen on valid instances)");
    case LpStatus::kUnbounded:
      throw std::runtime_error("benchmark LP unbounded: solver bug or invalid instance");
    case LpStatus::kIterationLimit:
      throw std::runtime_error("benchmark LP hit the iteration limit");
  }
  LpSolution sol;
  sol.variant = variant;
  sol.s_star = result.values[static_cast<std::size_t>(index.s_var)];
  sol.objective = result.objective;
  for (std::size_t e = 0; e < index.edges.size(); ++e) {
    const double v = result.values[e];
    if (v != 0.0) sol.x[index.edges[e]] = v;
  }
  return sol;
}

}  // namespace

LpSolution solve_homogeneous(const Instance& instance) {
  require_valid(instance);
  const EdgeIndex index(instance);
  const int n_vars = static_cast<int>(index.edges.size()) + 1;

  LinearProgram lp;
  lp.objective.assign(static_cast<std::size_t>(n_vars), 0.0);
  lp.objective[static_cast<std::size_t>(index.s_var)] = 1.0;
  std::vector<LpRow> agent_rows(static_cast<std::size_t>(instance.num_agents()));
  std::vector<LpRow> type_rows(static_cast<std::size_t>(instance.num_types()));
  for (int i = 0; i < instance.num_agents(); ++i) {
    agent_rows[static_cast<std::size_t>(i)].coeffs.assign(static_cast<std::size_t>(n_vars), 0.0);
    agent_rows[static_cast<std::size_t>(i)].sense = RowSense::kLe;
    agent_rows[static_cast<std::size_t>(i)].rhs = instance.agents[static_cast<std::size_t>(i)].capacity;
  }
  for (int j = 0; j < instance.num_types(); ++j) {
    type_rows[static_cast<std::size_t>(j)].coeffs.assign(static_cast<std::size_t>(n_vars), 0.0);
    type_rows[static_cast<std::size_t>(j)].sense = RowSense::kGe;
    type_rows[static_cast<std::size_t>(j)].rhs = 0.0;
    type_rows[static_cast<std::size_t>(j)].coeffs[static_cast<std::size_t>(index.s_var)] =
        -instance.types[static_cast<std::size_t>(j)].rate;
  }
  for (std::size_t e = 0; e < index.edges.size(); ++e) {
    const auto [i, j] = index.edges[e];
    agent_rows[static_cast<std::size_t>(i)].coeffs[e] = 1.0;
    type_rows[static_cast<std::size_t>(j)].coeffs[e] = 1.0;
  }
  for (auto& row : agent_rows) lp.rows.push_back(std::move(row));
  for (auto& row : type_rows) lp.rows.push_back(std::move(row));

  LpSolution sol = run_benchmark(index, std::move(lp), LpVariant::kHomogeneous);

  // Normalization: scale each over-served column down so that
  // sum_i x*_ij = s* lambda_j exactly. Skipped entirely when s* = 0.
  if (sol.s_star > 0.0) {
    for (int j = 0; j < instance.num_types(); ++j) {
      const double target = sol.s_star * instance.types[static_cast<std::size_t>(j)].rate;
      const double sum = sol.column_sum(j);
      if (sum <= 0.0) {
        throw std::logic_error("homogeneous LP: zero column with positive s* is impossible");
      }
      const double factor = target / sum;
      for (auto& [key, value] : sol.x) {
        if (key.second == j) value *= factor;
      }
    }
  }
  return sol;
}

LpSolution solve_grouped(const Instance& instance) {
  require_valid(instance);
  const EdgeIndex index(instance);
  const int n_vars = static_cast<int>(index.edges.size()) + 1;

  LinearProgram lp;
  lp.objective.assign(static_cast<std::size_t>(n_vars), 0.0);
  lp.objective[static_cast<std::size_t>(index.s_var)] = 1.0;

  std::vector<LpRow> agent_rows(static_cast<std::size_t>(instance.num_agents()));
  for (int i = 0; i < instance.num_agents(); ++i) {
    agent_rows[static_cast<std::size_t>(i)].coeffs.assign(static_cast<std::size_t>(n_vars), 0.0);
    agent_rows[static_cast<std::size_t>(i)].sense = RowSense::kLe;
    agent_rows[static_cast<std::size_t>(i)].rhs = instance.agents[static_cast<std::size_t>(i)].capacity;
  }
  std::vector<LpRow> type_rows(static_cast<std::size_t>(instance.num_types()));
  for (int j = 0; j < instance.num_types(); ++j) {
    type_rows[static_cast<std::size_t>(j)].coeffs.assign(static_cast<std::size_t>(n_vars), 0.0);
    type_rows[static_cast<std::size_t>(j)].sense = RowSense::kLe;
    type_rows[static_cast<std::size_t>(j)].rhs = instance.types[static_cast<std::size_t>(j)].rate;
  }
  std::vector<LpRow> group_rows(instance.groups.size());
  for (std::size_t k = 0; k < instance.groups.size(); ++k) {
    group_rows[k].coeffs.assign(static_cast<std::size_t>(n_vars), 0.0);
    group_rows[k].sense = RowSense::kGe;
    group_rows[k].rhs = 0.0;
    double group_rate = 0.0;
    for (int j : instance.groups[k].members) {
      group_rate += instance.types[static_cast<std::size_t>(j)].rate;
    }
    group_rows[k].coeffs[static_cast<std::size_t>(index.s_var)] = -group_rate;
  }
  for (std::size_t e = 0; e < index.edges.size(); ++e) {
    const auto [i, j] = index.edges[e];
    agent_rows[static_cast<std::size_t>(i)].coeffs[e] = 1.0;
    type_rows[static_cast<std::size_t>(j)].coeffs[e] = 1.0;
    for (std::size_t k = 0; k < instance.groups.size(); ++k) {
      const auto& members = instance.groups[k].members;
      if (std::find(members.begin(), members.end(), j) != members.end()) {
        group_rows[k].coeffs[e] += 1.0;
      }
    }
  }
  for (auto& row : agent_rows) lp.rows.push_back(std::move(row));
  for (auto& row : group_rows) lp.rows.push_back(std::move(row));
  for (auto& row : type_rows) lp.rows.push_back(std::move(row));

  return run_benchmark(index, std::move(lp), LpVariant::kGrouped);
}

double opt_upper_bound(const LpSolution& sol) {
  return sol.variant == LpVariant::kHomogeneous ? std::min(sol.s_star, 1.0) : sol.s_star;
}

}  // namespace fairmatch
