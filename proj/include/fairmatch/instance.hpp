#pragma once

#include <string>
#include <utility>
#include <vector>

namespace fairmatch {

// A supply node known in advance. `neighbors` lists the online types this
// agent is eligible to serve.
struct OfflineAgent {
  int id = 0;
  int capacity = 1;  // b_i >= 1
  std::vector<int> neighbors;
};

// A demand class arriving by a Poisson process of rate `rate` over [0,1].
struct OnlineType {
  int id = 0;
  double rate = 0.0;  // lambda_j > 0
  std::vector<int> neighbors;
};

// A protected group: a nonempty set of online types. Groups may overlap.
struct Group {
  int id = 0;
  std::vector<int> members;
};

struct Instance {
  std::vector<OfflineAgent> agents;
  std::vector<OnlineType> types;
  std::vector<Group> groups;
  std::string label;

  int num_agents() const { return static_cast<int>(agents.size()); }
  int num_types() const { return static_cast<int>(types.size()); }
  double total_rate() const;
  int min_capacity() const;
  double min_rate() const;
};

struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;

  bool ok() const { return errors.empty(); }
};

// Checks all structural invariants: index ranges, adjacency symmetry,
// capacity >= 1, rate > 0, every type covered by a group, total rate > 0.
// Types with an empty neighborhood produce a warning (their fairness is
// structurally zero but the model stays well-defined).
ValidationReport validate(const Instance& instance);
void require_valid(const Instance& instance);  // throws on errors

// n rare types of rate 1/n plus one common type of rate n-1; n unit-capacity
// agents, agent t adjacent to rare type t and to the common type (the common
// type has id n). Homogeneous groups. Requires n >= 2.
Instance central_star(int n);

// One online type of rate n, n unit-capacity agents all adjacent to it, a
// single group. Requires n >= 1.
Instance pool_supply(int n);

// One agent of capacity b adjacent to every type. Groups default to
// homogeneous when the list is empty. Requires b >= 1 and nonempty rates.
Instance single_agent(int b, const std::vector<double>& rates,
                      std::vector<Group> groups = {});

struct ScaleResult {
  Instance instance;
  double achieved_s = 0.0;
  double alpha = 1.0;
};

// Rescales all capacities to max(1, round(alpha * b_i)), choosing alpha by
// bisection so the homogeneous LP scale s* lands as close to target_s as
// integer rounding allows. Capacities stay integral; the achieved s* is
// reported instead of pretending the target was met exactly.
// Throws if target_s cannot be bracketed with alpha in [2^-20, 2^20].
ScaleResult scale_to_target_s(const Instance& instance, double target_s);

// JSON document with top-level keys agents/types/groups/label.
// write -> read round-trips losslessly.
std::string instance_to_json(const Instance& instance);
Instance instance_from_json(const std::string& text);
void save_instance(const Instance& instance, const std::string& path);
Instance load_instance(const std::string& path);

}  // namespace fairmatch
