#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

namespace fairmatch {

struct Instance;

// Identifies one reproducible random stream. The same (seed, stream_id)
// always yields the same draw sequence, so Monte-Carlo trial i can use
// stream_id = i and run anywhere, in any order.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  // Derives a child stream; mixing is stationary (no hidden state), so
  // substream(a).substream(b) is a pure function of (seed, stream_id, a, b).
  RngStream substream(std::uint64_t a, std::uint64_t b = 0) const;
};

// Counter-free splittable generator (xoshiro256** seeded via splitmix64).
// We do not use <random> distributions: their output is not pinned by the
// standard, and bit-for-bit reproducibility is part of the contract here.
class Rng {
 public:
  explicit Rng(const RngStream& stream);

  std::uint64_t next_u64();
  // Uniform on [0,1), 53-bit resolution.
  double next_double();
  // Uniform integer in [0, n), unbiased (rejection sampling).
  std::uint64_t next_below(std::uint64_t n);
  // Poisson variate. Exact inversion (Knuth product form), chunked so the
  // running product never underflows for large mu.
  long poisson(double mu);

 private:
  std::uint64_t s_[4];
};

struct ArrivalEvent {
  double time = 0.0;  // in [0,1]
  int type_id = 0;
};

// Time-sorted realization of all Poisson arrival processes over [0,1].
struct ArrivalStream {
  std::vector<ArrivalEvent> events;  // sorted nondecreasing by time
  std::vector<long> counts;          // per-type totals A_j

  long total() const;
};

// Draws per-type counts A_j ~ Poisson(lambda_j), then event times i.i.d.
// Uniform[0,1] given the counts, merged and sorted. The count-then-uniform
// construction makes the inter-type ordering exchangeable, which the
// short-run fairness estimator relies on.
ArrivalStream sample_stream(const Instance& instance, const RngStream& stream);
void sample_stream_into(const Instance& instance, const RngStream& stream, ArrivalStream& out);

// Same draws as sample_stream, with the per-type inversion constants
// precomputed once; estimators hold one of these across trials.
class ArrivalSampler {
 public:
  explicit ArrivalSampler(const Instance& instance);
  void sample(const RngStream& stream, ArrivalStream& out) const;
  void sample_counts(const RngStream& stream, std::vector<long>& counts) const;

 private:
  void counts_with(Rng& rng, std::vector<long>& counts) const;
  std::vector<int> full_chunks_;        // floor(rate / 30) per type
  std::vector<double> remainder_limit_; // exp(-(rate mod 30)); 1.0 when none
};

// Fresh uniform order for fixed per-type counts (inner resampling when
// conditioning on an arrival vector).
ArrivalStream resample_order(const std::vector<long>& counts, const RngStream& stream);
void resample_order_into(const std::vector<long>& counts, const RngStream& stream, ArrivalStream& out);

// Pairwise pipage rounding of a fractional vector with entries in [0,1].
// Guarantees, surely and not just in expectation:
//   (P1) E[Y_k] = fractions[k] exactly,
//   (P2) sum(Y) is floor(sum fractions) or ceil(sum fractions).
// Entries already integral (within 1e-12) pass through unchanged.
// Throws std::invalid_argument for entries outside [0,1] beyond 1e-12.
std::vector<int> dependent_round_vector(std::span<const double> fractions, Rng& rng);
std::vector<int> dependent_round_vector(std::span<const double> fractions, const RngStream& stream);

// One fractional edge of a bipartite assignment, row = unit-capacity agent.
struct FracEdge {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

// Gandhi et al. style dependent rounding on a bipartite fractional matching
// with per-row sums <= 1. Preserves per-edge marginals, keeps every row sum
// <= 1 surely, and rounds every column sum to its floor or ceiling surely.
// Returns the chosen edges (value 1).
std::vector<FracEdge> dependent_round_bipartite(std::vector<FracEdge> edges, Rng& rng);
std::vector<FracEdge> dependent_round_bipartite(std::vector<FracEdge> edges, const RngStream& stream);

}  // namespace fairmatch
