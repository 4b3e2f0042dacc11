#pragma once

#include <string>
#include <vector>

#include "fairmatch/instance.hpp"
#include "fairmatch/policies.hpp"
#include "fairmatch/stochastic.hpp"

namespace fairmatch {

// Per-type served / arrived counts for one simulation run.
struct ServiceTally {
  std::vector<long> served;   // X_j
  std::vector<long> arrived;  // A_j

  long total_served() const;
};

enum class Objective { kFairA, kFairB };

struct FairnessEstimate {
  double mean = 0.0;
  double half_width_95 = 0.0;
  long trials = 0;        // outer trials
  long inner_trials = 1;  // only meaningful for FAIR-B
  Objective objective = Objective::kFairA;
};

// Feeds the stream to the policy in time order with exact capacity
// bookkeeping. Throws if the policy serves an ineligible or exhausted agent.
ServiceTally run_once(Policy& policy, const Instance& instance, const ArrivalStream& stream);
void run_once_into(Policy& policy, const Instance& instance, const ArrivalStream& stream,
                   ServiceTally& tally);

// Long-run fairness: averages X(G) over independent trials (fresh arrival
// stream and fresh policy randomness each), then takes the minimum over
// groups of mean(X(G)) / rate(G). The confidence half-width is the delta
// method applied to the minimizing group.
FairnessEstimate estimate_fair_a(const PolicyFactory& factory, const Instance& instance,
                                 long trials, std::uint64_t seed);

// Short-run fairness: the outer loop draws an arrival vector; the inner loop
// re-runs the policy with a fresh uniform order (conditioned on the counts)
// and fresh policy coins, estimating E[X(G) | A] per group. The outer score
// is min over groups with A(G) > 0 of that mean over A(G), and 1 when
// nothing arrives. Finite inner_trials bias the minimum downward; >= 200 is
// recommended whenever several groups are near-minimal.
FairnessEstimate estimate_fair_b(const PolicyFactory& factory, const Instance& instance,
                                 long outer_trials, long inner_trials, std::uint64_t seed);

// Exact clairvoyant short-run optimum for a single agent of capacity b and
// total rate Lambda: Pr[Pois <= b] + sum_{k>b} Pr[Pois = k] * b/k.
double offline_fair_b_single_agent(int b, double lambda);

// alg / benchmark; NaN ("not applicable") when the benchmark is zero.
double competitive_ratio(double alg, double benchmark);

}  // namespace fairmatch
