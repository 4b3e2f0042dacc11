#include "fairmatch/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fairmatch/instance.hpp"

namespace fairmatch {
namespace {

constexpr double kIntegralTol = 1e-12;

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

RngStream RngStream::substream(std::uint64_t a, std::uint64_t b) const {
  // Fold (stream_id, a, b) into a new stream id with splitmix steps; the
  // seed is left untouched so a run is fully described by one seed.
  std::uint64_t state = stream_id;
  splitmix64(state);
  state ^= a * 0x9e3779b97f4a7c15ULL;
  splitmix64(state);
  state ^= b * 0xd1b54a32d192ed03ULL;
  std::uint64_t id = splitmix64(state);
  return RngStream{seed, id};
}

Rng::Rng(const RngStream& stream) {
  std::uint64_t state = stream.seed;
  splitmix64(state);
  state ^= stream.stream_id;
  for (auto& word : s_) word = splitmix64(state);
  // xoshiro must not start from the all-zero state.
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 0x9e3779b97f4a7c15ULL;
}

std::uint64_t Rng::next_u64() {
  // xoshiro256**
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::next_below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("next_below: n must be positive");
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % n;
  }
}

long Rng::poisson(double mu) {
  if (!(mu >= 0.0)) throw std::invalid_argument("poisson: mu must be >= 0");
  long total = 0;
  // Pois(a+b) = Pois(a) + Pois(b); chunking keeps exp(-mu) comfortably above
  // the subnormal range for the product-form inversion below.
  while (mu > 30.0) {
    mu -= 30.0;
    const double limit = std::exp(-30.0);
    double product = 1.0;
    long k = 0;
    do {
      product *= next_double();
      ++k;
    } while (product > limit);
    total += k - 1;
  }
  if (mu > 0.0) {
    const double limit = std::exp(-mu);
    double product = 1.0;
    long k = 0;
    do {
      product *= next_double();
      ++k;
    } while (product > limit);
    total += k - 1;
  }
  return total;
}

long ArrivalStream::total() const {
  long sum = 0;
  for (long c : counts) sum += c;
  return sum;
}

namespace {

void fill_events(const std::vector<long>& counts, Rng& rng, ArrivalStream& out) {
  out.events.clear();
  long total = 0;
  for (long c : counts) total += c;
  out.events.reserve(static_cast<std::size_t>(total));
  for (int j = 0; j < static_cast<int>(counts.size()); ++j) {
    for (long k = 0; k < counts[j]; ++k) {
      out.events.push_back(ArrivalEvent{rng.next_double(), j});
    }
  }
  std::sort(out.events.begin(), out.events.end(), [](const ArrivalEvent& a, const ArrivalEvent& b) {
    if (a.time != b.time) return a.time < b.time;
    return a.type_id < b.type_id;
  });
}

}  // namespace

ArrivalSampler::ArrivalSampler(const Instance& instance) {
  full_chunks_.reserve(instance.types.size());
  remainder_limit_.reserve(instance.types.size());
  for (const OnlineType& type : instance.types) {
    double mu = type.rate;
    int full = 0;
    while (mu > 30.0) {
      mu -= 30.0;
      ++full;
    }
    full_chunks_.push_back(full);
    remainder_limit_.push_back(mu > 0.0 ? std::exp(-mu) : 1.0);
  }
}

namespace {

inline long knuth_count(Rng& rng, double limit) {
  double product = 1.0;
  long k = 0;
  do {
    product *= rng.next_double();
    ++k;
  } while (product > limit);
  return k - 1;
}

const double kChunkLimit = std::exp(-30.0);

}  // namespace

void ArrivalSampler::counts_with(Rng& rng, std::vector<long>& counts) const {
  counts.resize(full_chunks_.size());
  for (std::size_t j = 0; j < full_chunks_.size(); ++j) {
    long total = 0;
    for (int c = 0; c < full_chunks_[j]; ++c) total += knuth_count(rng, kChunkLimit);
    if (remainder_limit_[j] < 1.0) total += knuth_count(rng, remainder_limit_[j]);
    counts[j] = total;
  }
}

void ArrivalSampler::sample_counts(const RngStream& stream, std::vector<long>& counts) const {
  Rng rng(stream);
  counts_with(rng, counts);
}

void ArrivalSampler::sample(const RngStream& stream, ArrivalStream& out) const {
  Rng rng(stream);
  counts_with(rng, out.counts);
  fill_events(out.counts, rng, out);
}

void sample_stream_into(const Instance& instance, const RngStream& stream, ArrivalStream& out) {
  ArrivalSampler(instance).sample(stream, out);
}

ArrivalStream sample_stream(const Instance& instance, const RngStream& stream) {
  ArrivalStream out;
  sample_stream_into(instance, stream, out);
  return out;
}

void resample_order_into(const std::vector<long>& counts, const RngStream& stream,
                         ArrivalStream& out) {
  for (long c : counts) {
    if (c < 0) throw std::invalid_argument("resample_order: negative count");
  }
  Rng rng(stream);
  out.counts = counts;
  fill_events(counts, rng, out);
}

ArrivalStream resample_order(const std::vector<long>& counts, const RngStream& stream) {
  ArrivalStream out;
  resample_order_into(counts, stream, out);
  return out;
}

std::vector<int> dependent_round_vector(std::span<const double> fractions, Rng& rng) {
  const std::size_t n = fractions.size();
  std::vector<int> result(n, 0);
  std::vector<double> work(n);
  std::vector<std::size_t> fractional;  // indices still strictly inside (0,1)
  for (std::size_t k = 0; k < n; ++k) {
    const double f = fractions[k];
    if (f < -kIntegralTol || f > 1.0 + kIntegralTol) {
      throw std::invalid_argument("dependent_round_vector: entry outside [0,1]");
    }
    if (f <= kIntegralTol) {
      result[k] = 0;
    } else if (f >= 1.0 - kIntegralTol) {
      result[k] = 1;
    } else {
      work[k] = f;
      fractional.push_back(k);
    }
  }

  // Pipage on the two leftmost fractional entries; one of them becomes
  // integral each step, so the loop is linear. The direction probabilities
  // keep every marginal exact, and each step conserves the pair's sum.
  while (fractional.size() >= 2) {
    const std::size_t ia = fractional[0];
    const std::size_t ib = fractional[1];
    const double x = work[ia];
    const double y = work[ib];
    const double up = std::min(1.0 - x, y);    // raise x, lower y
    const double down = std::min(x, 1.0 - y);  // lower x, raise y
    double nx, ny;
    if (rng.next_double() * (up + down) < down) {
      nx = x + up;
      ny = y - up;
    } else {
      nx = x - down;
      ny = y + down;
    }
    auto settle = [&](std::size_t idx, double v, std::size_t pos) {
      if (v <= kIntegralTol) {
        result[idx] = 0;
        fractional.erase(fractional.begin() + static_cast<std::ptrdiff_t>(pos));
      } else if (v >= 1.0 - kIntegralTol) {
        result[idx] = 1;
        fractional.erase(fractional.begin() + static_cast<std::ptrdiff_t>(pos));
      } else {
        work[idx] = v;
      }
    };
    // Settle the second entry first so the first entry's position stays 0.
    settle(ib, ny, 1);
    settle(ia, nx, 0);
  }
  if (fractional.size() == 1) {
    const std::size_t k = fractional[0];
    result[k] = rng.next_double() < work[k] ? 1 : 0;
  }
  return result;
}

std::vector<int> dependent_round_vector(std::span<const double> fractions,
                                        const RngStream& stream) {
  Rng rng(stream);
  return dependent_round_vector(fractions, rng);
}

namespace {

// Pipage support graph over bipartite nodes (rows and columns interleaved as
// 2*row / 2*col+1). Works on the still-fractional edge set only.
class BipartiteRounder {
 public:
  BipartiteRounder(std::vector<FracEdge>& edges, Rng& rng) : edges_(edges), rng_(rng) {
    int max_node = -1;
    for (const FracEdge& e : edges_) {
      max_node = std::max(max_node, std::max(2 * e.row, 2 * e.col + 1));
    }
    incident_.resize(static_cast<std::size_t>(max_node + 1));
    state_.assign(edges_.size(), 0);
    for (int e = 0; e < static_cast<int>(edges_.size()); ++e) {
      if (edges_[e].value <= kIntegralTol) {
        state_[e] = -1;
      } else if (edges_[e].value >= 1.0 - kIntegralTol) {
        state_[e] = +1;
      } else {
        incident_[node(e, 0)].push_back(e);
        incident_[node(e, 1)].push_back(e);
        ++fractional_;
      }
    }
  }

  void run() {
    // Cancel cycles first; rounding only removes support edges, so after the
    // cycle phase the support is a forest and stays one.
    while (fractional_ > 0 && cancel_one_cycle()) {
    }
    while (fractional_ > 0) round_one_path();
  }

  int state(int e) const { return state_[e]; }

 private:
  std::size_t node(int e, int side) const {
    return side == 0 ? static_cast<std::size_t>(2 * edges_[e].row)
                     : static_cast<std::size_t>(2 * edges_[e].col + 1);
  }
  std::size_t opposite(int e, std::size_t n) const {
    return node(e, 0) == n ? node(e, 1) : node(e, 0);
  }
  int degree(std::size_t n) const {
    int d = 0;
    for (int e : incident_[n]) d += state_[e] == 0;
    return d;
  }
  int some_edge(std::size_t n, int avoid) const {
    for (int e : incident_[n]) {
      if (state_[e] == 0 && e != avoid) return e;
    }
    return -1;
  }

  // DFS for a cycle in the fractional support; pipage along it if found.
  bool cancel_one_cycle() {
    std::vector<signed char> visited(incident_.size(), 0);
    std::vector<int> via_edge(incident_.size(), -1);
    std::vector<std::size_t> parent(incident_.size(), 0);
    for (std::size_t root = 0; root < incident_.size(); ++root) {
      if (visited[root] || degree(root) == 0) continue;
      std::vector<std::size_t> stack{root};
      visited[root] = 1;
      while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        for (int e : incident_[u]) {
          if (state_[e] != 0 || e == via_edge[u]) continue;
          const std::size_t v = opposite(e, u);
          if (!visited[v]) {
            visited[v] = 1;
            via_edge[v] = e;
            parent[v] = u;
            stack.push_back(v);
          } else {
            // Found a cycle: u -> ... -> root-side ancestor of v, closed by e.
            // Recover both node paths to the root and splice them.
            std::vector<int> walk = splice_cycle(u, v, e, via_edge, parent);
            pipage(walk);
            return true;
          }
        }
      }
    }
    return false;
  }

  std::vector<int> splice_cycle(std::size_t u, std::size_t v, int closing,
                                const std::vector<int>& via_edge,
                                const std::vector<std::size_t>& parent) const {
    // Tree path u -> root and v -> root; the cycle is u..meet..v plus the
    // closing edge, where meet is the first common tree node.
    auto chain = [&](std::size_t x) {
      std::vector<std::size_t> path{x};
      while (via_edge[path.back()] >= 0) path.push_back(parent[path.back()]);
      return path;
    };
    const std::vector<std::size_t> up_u = chain(u);
    const std::vector<std::size_t> up_v = chain(v);
    std::vector<signed char> on_u(incident_.size(), 0);
    for (std::size_t x : up_u) on_u[x] = 1;
    std::size_t meet = up_v.front();
    std::size_t v_len = 0;  // edges from v up to (excluding) meet
    for (std::size_t k = 0; k < up_v.size(); ++k) {
      if (on_u[up_v[k]]) {
        meet = up_v[k];
        v_len = k;
        break;
      }
    }
    std::vector<int> cycle;  // edge walk: meet -> u, closing edge, v -> meet
    std::vector<int> down_u;
    for (std::size_t k = 0; k < up_u.size() && up_u[k] != meet; ++k) {
      down_u.push_back(via_edge[up_u[k]]);
    }
    cycle.assign(down_u.rbegin(), down_u.rend());
    cycle.push_back(closing);
    for (std::size_t k = 0; k < v_len; ++k) cycle.push_back(via_edge[up_v[k]]);
    return cycle;
  }

  // Walk from a leaf through the forest to the opposite leaf and pipage.
  void round_one_path() {
    std::size_t leaf = incident_.size();
    for (std::size_t n = 0; n < incident_.size(); ++n) {
      if (degree(n) == 1) {
        leaf = n;
        break;
      }
    }
    if (leaf == incident_.size()) {
      // No leaf but fractional edges remain: a cycle slipped through, which
      // cannot happen in a forest. Fall back to cycle cancelling.
      if (!cancel_one_cycle()) throw std::logic_error("bipartite rounding: stuck support");
      return;
    }
    std::vector<int> walk;
    std::size_t cur = leaf;
    int arrived = -1;
    for (;;) {
      const int e = some_edge(cur, arrived);
      if (e < 0) break;
      walk.push_back(e);
      cur = opposite(e, cur);
      arrived = e;
    }
    pipage(walk);
  }

  // Alternate walk edges into two matchings and shift until a bound is hit.
  void pipage(const std::vector<int>& walk) {
    double up = 2.0, down = 2.0;
    for (std::size_t idx = 0; idx < walk.size(); ++idx) {
      const double v = edges_[walk[idx]].value;
      if (idx % 2 == 0) {
        up = std::min(up, 1.0 - v);
        down = std::min(down, v);
      } else {
        up = std::min(up, v);
        down = std::min(down, 1.0 - v);
      }
    }
    int sign;
    double shift;
    if (rng_.next_double() * (up + down) < down) {
      shift = up;
      sign = +1;
    } else {
      shift = down;
      sign = -1;
    }
    for (std::size_t idx = 0; idx < walk.size(); ++idx) {
      const int e = walk[idx];
      const double v = edges_[e].value + (idx % 2 == 0 ? sign : -sign) * shift;
      if (v <= kIntegralTol) {
        settle(e, -1);
      } else if (v >= 1.0 - kIntegralTol) {
        settle(e, +1);
      } else {
        edges_[e].value = v;
      }
    }
  }

  void settle(int e, int to) {
    edges_[e].value = to == +1 ? 1.0 : 0.0;
    state_[e] = static_cast<signed char>(to);
    --fractional_;
  }

  std::vector<FracEdge>& edges_;
  Rng& rng_;
  std::vector<std::vector<int>> incident_;
  std::vector<signed char> state_;
  int fractional_ = 0;
};

}  // namespace

std::vector<FracEdge> dependent_round_bipartite(std::vector<FracEdge> edges, Rng& rng) {
  int max_row = -1;
  for (const FracEdge& e : edges) {
    if (e.value < -kIntegralTol || e.value > 1.0 + kIntegralTol) {
      throw std::invalid_argument("dependent_round_bipartite: edge value outside [0,1]");
    }
    max_row = std::max(max_row, e.row);
  }
  std::vector<double> row_sum(static_cast<std::size_t>(max_row + 1), 0.0);
  for (const FracEdge& e : edges) row_sum[static_cast<std::size_t>(e.row)] += e.value;
  for (double s : row_sum) {
    if (s > 1.0 + 1e-9) {
      throw std::invalid_argument("dependent_round_bipartite: row sum exceeds 1");
    }
  }

  BipartiteRounder rounder(edges, rng);
  rounder.run();

  std::vector<FracEdge> chosen;
  for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
    if (rounder.state(e) == +1) chosen.push_back(FracEdge{edges[e].row, edges[e].col, 1.0});
  }
  return chosen;
}

std::vector<FracEdge> dependent_round_bipartite(std::vector<FracEdge> edges,
                                                const RngStream& stream) {
  Rng rng(stream);
  return dependent_round_bipartite(std::move(edges), rng);
}

}  // namespace fairmatch
