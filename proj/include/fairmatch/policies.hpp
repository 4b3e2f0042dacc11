#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fairmatch/instance.hpp"
#include "fairmatch/lp.hpp"
#include "fairmatch/stochastic.hpp"

namespace fairmatch {

// One irrevocable decision: the chosen agent id, or nullopt for a rejection.
using Decision = std::optional<int>;

// Sequential decision contract shared by every online policy.
//
// A policy is constructed once per (instance, parameters); reset() starts a
// fresh run by clearing capacities and redrawing any per-run randomness
// (priority order, reserved sets, rejection schedule) from the given stream.
// decide() must only ever serve an eligible agent with remaining capacity;
// the simulation loop re-verifies this with its own ledger.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual void reset(const RngStream& stream) = 0;
  virtual Decision decide(const ArrivalEvent& event) = 0;
  // True if the policy serves whenever some eligible agent has capacity.
  virtual bool non_rejecting() const { return false; }
  // Fresh copy sharing the same instance and tables; used to run independent
  // trial chunks concurrently.
  virtual std::unique_ptr<Policy> clone() const = 0;
};

using PolicyPtr = std::unique_ptr<Policy>;

// Single-agent first-come-first-serve: serve while capacity remains.
// Construction fails on instances with more than one offline agent.
PolicyPtr fcfs_policy(const Instance& instance);

// LP-guided sampler for homogeneous groups: on an arrival of type j, sample
// one neighbor i with probability x*_ij / (s* lambda_j); serve it if it still
// has capacity, otherwise reject (no resampling). Requires a normalized
// homogeneous solution with s* > 0.
PolicyPtr nadap_s_policy(const Instance& instance, const LpSolution& sol);

// Grouped-LP sampler: sample i with probability x*_ij / lambda_j, rejecting
// outright with the leftover probability 1 - sum_i x*_ij / lambda_j.
PolicyPtr nadap_policy(const Instance& instance, const LpSolution& sol);

// Pre-reserves unit-capacity agent copies per type via bipartite dependent
// rounding of the grouped solution; serves type j from its reserved set
// first-come-first-serve. Reservation is redrawn on every reset().
PolicyPtr reserve_policy(const Instance& instance, const LpSolution& sol);

// Single-agent probabilistic rejection: with K = floor(Lambda*(1+epsilon)),
// pre-rounds K copies of b/K (clipped to 1) into indicators Y, then serves
// the k-th overall arrival iff k <= K, Y_k = 1 and capacity remains.
PolicyPtr prob_reject_policy(const Instance& instance, double epsilon);

// Serve the eligible agent with the most remaining capacity, ties uniform.
PolicyPtr greedy_policy(const Instance& instance);

// Fixed uniform-random priority order over agents, drawn per run.
PolicyPtr ranking_policy(const Instance& instance);

// Two-candidate sampler: candidate 1 from x*_ij / lambda_j (leftover mass
// rejects outright); candidate 2 re-drawn by the same rule conditioned on
// differing from candidate 1 when the support allows; serve candidate 1 if
// it has capacity, else candidate 2, else reject.
PolicyPtr mgs_policy(const Instance& instance, const LpSolution& sol);

// Central-star specific: reject common-type arrivals before time tau, then
// serve them with a uniformly random available agent; rare types are always
// served when their dedicated agent is free. Construction fails when the
// instance is not central-star shaped.
PolicyPtr threshold_policy(const Instance& instance, double tau);

// Serves an arrival only when it is the k-th overall (used by the short-run
// fairness counterexample).
PolicyPtr serve_kth_policy(const Instance& instance, long k);

// Builds a policy (and the LP solution it needs) from its CLI name:
// fcfs | nadap-s | nadap | reserve | prob-reject | greedy | rank | mgs |
// threshold | serve-kth. Parameters: epsilon (prob-reject; defaults to
// kappa-1 when capacity exceeds demand, else sqrt(ln Lambda / Lambda)),
// tau (threshold; defaults to 2 - sqrt(3)), k (serve-kth).
PolicyPtr make_policy(const std::string& name, const Instance& instance,
                      const std::map<std::string, double>& params = {});

// Factory used by the estimators: called once per instance, reset per trial.
using PolicyFactory = std::function<PolicyPtr(const Instance&)>;
PolicyFactory policy_factory(const std::string& name,
                             const std::map<std::string, double>& params = {});

}  // namespace fairmatch
