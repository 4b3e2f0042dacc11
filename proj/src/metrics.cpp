#include "fairmatch/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <stdexcept>

#include "fairmatch/theory.hpp"

namespace fairmatch {

namespace {

constexpr std::uint64_t kArrivalTag = 0xA221;
constexpr std::uint64_t kPolicyTag = 0xB173;
constexpr std::uint64_t kCountsTag = 0xC541;
constexpr std::uint64_t kOrderTag = 0xD907;

struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

// Precomputed eligibility + capacity ledger, reused across trials so the
// per-event policy verification stays O(1).
class SimContext {
 public:
  explicit SimContext(const Instance& instance) : instance_(&instance) {
    n_agents_ = instance.num_agents();
    n_types_ = instance.num_types();
    adjacency_.assign(static_cast<std::size_t>(n_agents_) * static_cast<std::size_t>(n_types_), 0);
    for (const OnlineType& type : instance.types) {
      for (int i : type.neighbors) {
        adjacency_[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_types_) +
                   static_cast<std::size_t>(type.id)] = 1;
      }
    }
  }

  void run(Policy& policy, const ArrivalStream& stream, ServiceTally& tally) {
    tally.served.assign(static_cast<std::size_t>(n_types_), 0);
    tally.arrived = stream.counts;
    caps_.resize(static_cast<std::size_t>(n_agents_));
    for (int i = 0; i < n_agents_; ++i) {
      caps_[static_cast<std::size_t>(i)] = instance_->agents[static_cast<std::size_t>(i)].capacity;
    }
    for (const ArrivalEvent& event : stream.events) {
      const Decision decision = policy.decide(event);
      if (!decision) continue;
      const int agent = *decision;
      if (agent < 0 || agent >= n_agents_ ||
          !adjacency_[static_cast<std::size_t>(agent) * static_cast<std::size_t>(n_types_) +
                      static_cast<std::size_t>(event.type_id)]) {
        throw std::logic_error("policy served an ineligible agent");
      }
      if (caps_[static_cast<std::size_t>(agent)] <= 0) {
        throw std::logic_error("policy served an agent with exhausted capacity");
      }
      --caps_[static_cast<std::size_t>(agent)];
      ++tally.served[static_cast<std::size_t>(event.type_id)];
    }
  }

 private:
  const Instance* instance_;
  int n_agents_ = 0;
  int n_types_ = 0;
  std::vector<char> adjacency_;
  std::vector<int> caps_;
};

std::vector<double> group_rates(const Instance& instance) {
  std::vector<double> rates;
  rates.reserve(instance.groups.size());
  for (const Group& group : instance.groups) {
    double r = 0.0;
    for (int j : group.members) r += instance.types[static_cast<std::size_t>(j)].rate;
    rates.push_back(r);
  }
  return rates;
}

}  // namespace

long ServiceTally::total_served() const {
  long sum = 0;
  for (long s : served) sum += s;
  return sum;
}

ServiceTally run_once(Policy& policy, const Instance& instance, const ArrivalStream& stream) {
  ServiceTally tally;
  run_once_into(policy, instance, stream, tally);
  return tally;
}

void run_once_into(Policy& policy, const Instance& instance, const ArrivalStream& stream,
                   ServiceTally& tally) {
  SimContext context(instance);
  context.run(policy, stream, tally);
}

namespace {

// Fixed chunk count: the trial split (and so the reduction order) never
// depends on the machine, keeping reruns byte-identical.
constexpr long kTrialChunks = 16;

template <typename Accum, typename Body>
std::vector<Accum> run_chunked(long trials, const Policy& prototype, const Body& body) {
  const long n_chunks = std::min<long>(kTrialChunks, trials);
  std::vector<Accum> accums(static_cast<std::size_t>(n_chunks));
  std::vector<std::future<void>> futures;
  futures.reserve(static_cast<std::size_t>(n_chunks));
  for (long c = 0; c < n_chunks; ++c) {
    const long begin = trials * c / n_chunks;
    const long end = trials * (c + 1) / n_chunks;
    Accum* accum = &accums[static_cast<std::size_t>(c)];
    futures.push_back(std::async(std::launch::async, [&prototype, &body, accum, begin, end]() {
      const PolicyPtr policy = prototype.clone();
      body(*policy, begin, end, *accum);
    }));
  }
  for (auto& future : futures) future.get();
  return accums;
}

}  // namespace

FairnessEstimate estimate_fair_a(const PolicyFactory& factory, const Instance& instance,
                                 long trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("estimate_fair_a: trials must be >= 1");
  require_valid(instance);
  const PolicyPtr prototype = factory(instance);
  const SimContext shared_context(instance);
  const ArrivalSampler sampler(instance);
  const std::vector<double> rates = group_rates(instance);
  const std::size_t n_groups = instance.groups.size();
  const RngStream base{seed, 0};

  struct Accum {
    std::vector<KahanSum> sums, sums_sq;
  };
  const auto chunks = run_chunked<Accum>(
      trials, *prototype,
      [&](Policy& policy, long begin, long end, Accum& accum) {
        SimContext context = shared_context;
        accum.sums.resize(n_groups);
        accum.sums_sq.resize(n_groups);
        ArrivalStream stream;
        ServiceTally tally;
        for (long t = begin; t < end; ++t) {
          sampler.sample(base.substream(kArrivalTag, static_cast<std::uint64_t>(t)), stream);
          policy.reset(base.substream(kPolicyTag, static_cast<std::uint64_t>(t)));
          context.run(policy, stream, tally);
          for (std::size_t k = 0; k < n_groups; ++k) {
            long served = 0;
            for (int j : instance.groups[k].members) {
              served += tally.served[static_cast<std::size_t>(j)];
            }
            const double x = static_cast<double>(served);
            accum.sums[k].add(x);
            accum.sums_sq[k].add(x * x);
          }
        }
      });
  std::vector<KahanSum> sums(n_groups), sums_sq(n_groups);
  for (const auto& chunk : chunks) {  // fixed merge order
    for (std::size_t k = 0; k < n_groups; ++k) {
      sums[k].add(chunk.sums[k].sum);
      sums_sq[k].add(chunk.sums_sq[k].sum);
    }
  }

  FairnessEstimate estimate;
  estimate.objective = Objective::kFairA;
  estimate.trials = trials;
  double best = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t k = 0; k < n_groups; ++k) {
    const double ratio = sums[k].sum / static_cast<double>(trials) / rates[k];
    if (ratio < best) {
      best = ratio;
      arg = k;
    }
  }
  estimate.mean = best;
  if (trials > 1) {
    const double n = static_cast<double>(trials);
    const double mean_x = sums[arg].sum / n;
    const double var = std::max(0.0, (sums_sq[arg].sum - n * mean_x * mean_x) / (n - 1.0));
    estimate.half_width_95 = 1.96 * std::sqrt(var / n) / rates[arg];
  }
  return estimate;
}

FairnessEstimate estimate_fair_b(const PolicyFactory& factory, const Instance& instance,
                                 long outer_trials, long inner_trials, std::uint64_t seed) {
  if (outer_trials < 1 || inner_trials < 1) {
    throw std::invalid_argument("estimate_fair_b: outer and inner trials must be >= 1");
  }
  require_valid(instance);
  const PolicyPtr prototype = factory(instance);
  const SimContext shared_context(instance);
  const ArrivalSampler sampler(instance);
  const std::size_t n_groups = instance.groups.size();
  const RngStream base{seed, 0};

  struct Accum {
    KahanSum score_sum, score_sq;
  };
  const auto chunks = run_chunked<Accum>(
      outer_trials, *prototype,
      [&](Policy& policy, long begin, long end, Accum& accum) {
        SimContext context = shared_context;
        std::vector<long> counts(instance.types.size());
        std::vector<long> group_served(n_groups);
        std::vector<long> group_arrived(n_groups);
        ArrivalStream stream;
        ServiceTally tally;
        for (long t = begin; t < end; ++t) {
          // Outer draw: the arrival vector only.
          sampler.sample_counts(base.substream(kCountsTag, static_cast<std::uint64_t>(t)), counts);
          long total = 0;
          for (long c : counts) total += c;
          double score;
          if (total == 0) {
            score = 1.0;  // nobody arrived
          } else {
            std::fill(group_served.begin(), group_served.end(), 0L);
            std::fill(group_arrived.begin(), group_arrived.end(), 0L);
            for (std::size_t k = 0; k < n_groups; ++k) {
              for (int j : instance.groups[k].members) {
                group_arrived[k] += counts[static_cast<std::size_t>(j)];
              }
            }
            const RngStream order_base = base.substream(kOrderTag, static_cast<std::uint64_t>(t));
            const RngStream policy_base = base.substream(kPolicyTag, static_cast<std::uint64_t>(t));
            for (long r = 0; r < inner_trials; ++r) {
              // Conditioned on the counts, both the order and the policy
              // coins are redrawn; this is the expectation the short-run
              // objective takes.
              resample_order_into(counts, order_base.substream(static_cast<std::uint64_t>(r)),
                                  stream);
              policy.reset(policy_base.substream(static_cast<std::uint64_t>(r)));
              context.run(policy, stream, tally);
              for (std::size_t k = 0; k < n_groups; ++k) {
                for (int j : instance.groups[k].members) {
                  group_served[k] += tally.served[static_cast<std::size_t>(j)];
                }
              }
            }
            score = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < n_groups; ++k) {
              if (group_arrived[k] == 0) continue;
              const double mean_served =
                  static_cast<double>(group_served[k]) / static_cast<double>(inner_trials);
              score = std::min(score, mean_served / static_cast<double>(group_arrived[k]));
            }
          }
          accum.score_sum.add(score);
          accum.score_sq.add(score * score);
        }
      });
  KahanSum score_sum, score_sq;
  for (const auto& chunk : chunks) {
    score_sum.add(chunk.score_sum.sum);
    score_sq.add(chunk.score_sq.sum);
  }

  FairnessEstimate estimate;
  estimate.objective = Objective::kFairB;
  estimate.trials = outer_trials;
  estimate.inner_trials = inner_trials;
  const double n = static_cast<double>(outer_trials);
  estimate.mean = score_sum.sum / n;
  if (outer_trials > 1) {
    const double var = std::max(0.0, (score_sq.sum - n * estimate.mean * estimate.mean) / (n - 1.0));
    estimate.half_width_95 = 1.96 * std::sqrt(var / n);
  }
  return estimate;
}

double offline_fair_b_single_agent(int b, double lambda) {
  if (b < 1 || !(lambda > 0.0)) {
    throw std::invalid_argument("offline_fair_b_single_agent: need b >= 1, Lambda > 0");
  }
  // OPT serves everything when A <= b and an even b/k share when A = k > b.
  double value = poisson_cdf(lambda, b);
  const long hard_cap =
      b + 200 + static_cast<long>(10.0 * (lambda + std::sqrt(lambda + 1.0)));
  for (long k = b + 1; k <= hard_cap; ++k) {
    const double term = poisson_pmf(lambda, k) * static_cast<double>(b) / static_cast<double>(k);
    value += term;
    if (term < 1e-12 && static_cast<double>(k) > lambda) break;
  }
  return value;
}

double competitive_ratio(double alg, double benchmark) {
  if (benchmark == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return alg / benchmark;
}

}  // namespace fairmatch
