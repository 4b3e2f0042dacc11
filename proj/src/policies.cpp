#include "fairmatch/policies.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fairmatch {

namespace {

constexpr double kProbTol = 1e-6;

void require_single_agent_covering(const Instance& instance, const char* who) {
  if (instance.num_agents() != 1) {
    throw std::invalid_argument(std::string(who) + ": needs exactly one offline agent");
  }
  for (const OnlineType& type : instance.types) {
    if (type.neighbors.size() != 1 || type.neighbors[0] != 0) {
      throw std::invalid_argument(std::string(who) + ": the agent must neighbor every type");
    }
  }
}

// Cumulative sampling table over the neighbors of one type.
struct SamplingColumn {
  std::vector<int> agents;
  std::vector<double> cumulative;  // same length; last entry = total mass <= 1
  double total = 0.0;

  int sample(double u) const {  // u in [0, total); caller handles rejection mass
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const std::size_t k = static_cast<std::size_t>(it - cumulative.begin());
    return agents[std::min(k, agents.size() - 1)];
  }
};

std::vector<SamplingColumn> build_columns(const Instance& instance, const LpSolution& sol,
                                          bool per_scale_rate, double s_star) {
  std::vector<SamplingColumn> columns(static_cast<std::size_t>(instance.num_types()));
  for (int j = 0; j < instance.num_types(); ++j) {
    SamplingColumn& col = columns[static_cast<std::size_t>(j)];
    const double denom = per_scale_rate ? s_star * instance.types[static_cast<std::size_t>(j)].rate
                                        : instance.types[static_cast<std::size_t>(j)].rate;
    std::vector<int> neighbors = instance.types[static_cast<std::size_t>(j)].neighbors;
    std::sort(neighbors.begin(), neighbors.end());
    double acc = 0.0;
    for (int i : neighbors) {
      const double p = sol.edge(i, j) / denom;
      if (p <= 0.0) continue;
      acc += p;
      col.agents.push_back(i);
      col.cumulative.push_back(acc);
    }
    col.total = acc;
  }
  return columns;
}

class FcfsPolicy final : public Policy {
 public:
  explicit FcfsPolicy(const Instance& instance) : capacity_(instance.agents.at(0).capacity) {
    require_single_agent_covering(instance, "fcfs");
  }
  void reset(const RngStream&) override { remaining_ = capacity_; }
  Decision decide(const ArrivalEvent&) override {
    if (remaining_ <= 0) return std::nullopt;
    --remaining_;
    return 0;
  }
  bool non_rejecting() const override { return true; }

  PolicyPtr clone() const override { return std::make_unique<FcfsPolicy>(*this); }

 private:
  int capacity_;
  int remaining_ = 0;
};

class NadapSPolicy final : public Policy {
 public:
  NadapSPolicy(const Instance& instance, const LpSolution& sol) : instance_(&instance) {
    if (sol.variant != LpVariant::kHomogeneous) {
      throw std::invalid_argument("nadap-s: needs a homogeneous LP solution");
    }
    if (!(sol.s_star > 0.0)) {
      throw std::invalid_argument("nadap-s: needs s* > 0");
    }
    columns_ = build_columns(instance, sol, /*per_scale_rate=*/true, sol.s_star);
    for (const SamplingColumn& col : columns_) {
      if (std::abs(col.total - 1.0) > kProbTol) {
        throw std::invalid_argument("nadap-s: LP solution is not normalized");
      }
    }
  }
  void reset(const RngStream& stream) override {
    rng_.emplace(stream);
    caps_.resize(instance_->agents.size());
    for (std::size_t i = 0; i < caps_.size(); ++i) caps_[i] = instance_->agents[i].capacity;
  }
  Decision decide(const ArrivalEvent& event) override {
    const SamplingColumn& col = columns_[static_cast<std::size_t>(event.type_id)];
    const int i = col.sample(rng_->next_double() * col.total);
    // No resampling: a sampled agent without capacity means rejection.
    if (caps_[static_cast<std::size_t>(i)] <= 0) return std::nullopt;
    --caps_[static_cast<std::size_t>(i)];
    return i;
  }

  PolicyPtr clone() const override { return std::make_unique<NadapSPolicy>(*this); }

 private:
  const Instance* instance_;
  std::vector<SamplingColumn> columns_;
  std::vector<int> caps_;
  std::optional<Rng> rng_;
};

class NadapPolicy final : public Policy {
 public:
  NadapPolicy(const Instance& instance, const LpSolution& sol) : instance_(&instance) {
    if (sol.variant != LpVariant::kGrouped) {
      throw std::invalid_argument("nadap: needs a grouped LP solution");
    }
    columns_ = build_columns(instance, sol, /*per_scale_rate=*/false, 0.0);
    for (const SamplingColumn& col : columns_) {
      if (col.total > 1.0 + kProbTol) {
        throw std::invalid_argument("nadap: column mass exceeds the arrival rate");
      }
    }
  }
  void reset(const RngStream& stream) override {
    rng_.emplace(stream);
    caps_.resize(instance_->agents.size());
    for (std::size_t i = 0; i < caps_.size(); ++i) caps_[i] = instance_->agents[i].capacity;
  }
  Decision decide(const ArrivalEvent& event) override {
    const SamplingColumn& col = columns_[static_cast<std::size_t>(event.type_id)];
    const double u = rng_->next_double();
    if (u >= col.total) return std::nullopt;  // immediate rejection mass
    const int i = col.sample(u);
    if (caps_[static_cast<std::size_t>(i)] <= 0) return std::nullopt;
    --caps_[static_cast<std::size_t>(i)];
    return i;
  }

  PolicyPtr clone() const override { return std::make_unique<NadapPolicy>(*this); }

 private:
  const Instance* instance_;
  std::vector<SamplingColumn> columns_;
  std::vector<int> caps_;
  std::optional<Rng> rng_;
};

class ReservePolicy final : public Policy {
 public:
  ReservePolicy(const Instance& instance, const LpSolution& sol) : instance_(&instance) {
    if (sol.variant != LpVariant::kGrouped) {
      throw std::invalid_argument("reserve: needs a grouped LP solution");
    }
    // Split every agent into unit-capacity copies and pour its x*_ij mass
    // greedily: fill copy 1 to 1.0, then copy 2, and so on. Any split with
    // row sums <= 1 preserves the column marginals; greedy is deterministic.
    int copy = 0;
    for (const OfflineAgent& agent : instance.agents) {
      const int first_copy = copy;
      const int last_copy = copy + agent.capacity - 1;
      copy += agent.capacity;
      for (int c = first_copy; c <= last_copy; ++c) copy_agent_.push_back(agent.id);
      std::vector<int> neighbors = agent.neighbors;
      std::sort(neighbors.begin(), neighbors.end());
      int cur = first_copy;
      double room = 1.0;
      for (int j : neighbors) {
        double v = sol.edge(agent.id, j);
        while (v > 1e-12) {
          if (room <= 1e-12) {
            if (cur == last_copy) {
              if (v > 1e-6) {
                throw std::logic_error("reserve: capacity split overflow (LP row violated)");
              }
              v = 0.0;
              break;
            }
            ++cur;
            room = 1.0;
          }
          const double take = std::min(v, room);
          template_edges_.push_back(FracEdge{cur, j, take});
          v -= take;
          room -= take;
        }
      }
    }
    serve_sets_.resize(static_cast<std::size_t>(instance.num_types()));
  }

  void reset(const RngStream& stream) override {
    Rng rng(stream);
    for (auto& set : serve_sets_) set.clear();
    const std::vector<FracEdge> chosen = dependent_round_bipartite(template_edges_, rng);
    for (const FracEdge& e : chosen) {
      serve_sets_[static_cast<std::size_t>(e.col)].push_back(e.row);
    }
    for (auto& set : serve_sets_) std::sort(set.begin(), set.end());
    copy_used_.assign(copy_agent_.size(), 0);
  }

  Decision decide(const ArrivalEvent& event) override {
    // Reserved copies only; lowest-index unused copy first (copies are
    // exchangeable, any rule works).
    for (int c : serve_sets_[static_cast<std::size_t>(event.type_id)]) {
      if (!copy_used_[static_cast<std::size_t>(c)]) {
        copy_used_[static_cast<std::size_t>(c)] = 1;
        return copy_agent_[static_cast<std::size_t>(c)];
      }
    }
    return std::nullopt;
  }

  PolicyPtr clone() const override { return std::make_unique<ReservePolicy>(*this); }

 private:
  const Instance* instance_;
  std::vector<FracEdge> template_edges_;
  std::vector<int> copy_agent_;
  std::vector<std::vector<int>> serve_sets_;
  std::vector<char> copy_used_;
};

class ProbRejectPolicy final : public Policy {
 public:
  ProbRejectPolicy(const Instance& instance, double epsilon) {
    require_single_agent_covering(instance, "prob-reject");
    capacity_ = instance.agents[0].capacity;
    const double lambda = instance.total_rate();
    if (!(epsilon >= 0.0)) throw std::invalid_argument("prob-reject: epsilon must be >= 0");
    schedule_len_ = static_cast<long>(std::floor(lambda * (1.0 + epsilon)));
    if (schedule_len_ < 1) {
      throw std::invalid_argument("prob-reject: K = floor(Lambda(1+eps)) must be >= 1");
    }
    const double fill = std::min(1.0, static_cast<double>(capacity_) / static_cast<double>(schedule_len_));
    fractions_.assign(static_cast<std::size_t>(schedule_len_), fill);
  }

  void reset(const RngStream& stream) override {
    Rng rng(stream);
    schedule_ = dependent_round_vector(fractions_, rng);
    arrivals_seen_ = 0;
    remaining_ = capacity_;
  }

  Decision decide(const ArrivalEvent&) override {
    const long k = ++arrivals_seen_;
    if (k > schedule_len_ || schedule_[static_cast<std::size_t>(k - 1)] == 0) return std::nullopt;
    if (remaining_ <= 0) return std::nullopt;
    --remaining_;
    return 0;
  }

  PolicyPtr clone() const override { return std::make_unique<ProbRejectPolicy>(*this); }

 private:
  int capacity_ = 0;
  long schedule_len_ = 0;
  std::vector<double> fractions_;
  std::vector<int> schedule_;
  long arrivals_seen_ = 0;
  int remaining_ = 0;
};

class GreedyPolicy final : public Policy {
 public:
  explicit GreedyPolicy(const Instance& instance) : instance_(&instance) {}
  void reset(const RngStream& stream) override {
    rng_.emplace(stream);
    caps_.resize(instance_->agents.size());
    for (std::size_t i = 0; i < caps_.size(); ++i) caps_[i] = instance_->agents[i].capacity;
  }
  Decision decide(const ArrivalEvent& event) override {
    const auto& neighbors = instance_->types[static_cast<std::size_t>(event.type_id)].neighbors;
    int best = -1;
    ties_.clear();
    for (int i : neighbors) {
      const int c = caps_[static_cast<std::size_t>(i)];
      if (c <= 0) continue;
      if (c > best) {
        best = c;
        ties_.clear();
        ties_.push_back(i);
      } else if (c == best) {
        ties_.push_back(i);
      }
    }
    if (ties_.empty()) return std::nullopt;
    const int i = ties_.size() == 1
                      ? ties_[0]
                      : ties_[static_cast<std::size_t>(rng_->next_below(ties_.size()))];
    --caps_[static_cast<std::size_t>(i)];
    return i;
  }
  bool non_rejecting() const override { return true; }

  PolicyPtr clone() const override { return std::make_unique<GreedyPolicy>(*this); }

 private:
  const Instance* instance_;
  std::vector<int> caps_;
  std::vector<int> ties_;
  std::optional<Rng> rng_;
};

class RankingPolicy final : public Policy {
 public:
  explicit RankingPolicy(const Instance& instance) : instance_(&instance) {}
  void reset(const RngStream& stream) override {
    Rng rng(stream);
    const std::size_t n = instance_->agents.size();
    priority_.resize(n);
    std::iota(priority_.begin(), priority_.end(), 0);
    for (std::size_t i = n; i > 1; --i) {  // Fisher-Yates
      std::swap(priority_[i - 1], priority_[static_cast<std::size_t>(rng.next_below(i))]);
    }
    rank_of_.resize(n);
    for (std::size_t r = 0; r < n; ++r) rank_of_[static_cast<std::size_t>(priority_[r])] = static_cast<int>(r);
    caps_.resize(n);
    for (std::size_t i = 0; i < n; ++i) caps_[i] = instance_->agents[i].capacity;
  }
  Decision decide(const ArrivalEvent& event) override {
    const auto& neighbors = instance_->types[static_cast<std::size_t>(event.type_id)].neighbors;
    int best = -1;
    int best_rank = 0;
    for (int i : neighbors) {
      if (caps_[static_cast<std::size_t>(i)] <= 0) continue;
      const int r = rank_of_[static_cast<std::size_t>(i)];
      if (best < 0 || r < best_rank) {
        best = i;
        best_rank = r;
      }
    }
    if (best < 0) return std::nullopt;
    --caps_[static_cast<std::size_t>(best)];
    return best;
  }
  bool non_rejecting() const override { return true; }

  PolicyPtr clone() const override { return std::make_unique<RankingPolicy>(*this); }

 private:
  const Instance* instance_;
  std::vector<int> priority_;
  std::vector<int> rank_of_;
  std::vector<int> caps_;
};

class MgsPolicy final : public Policy {
 public:
  MgsPolicy(const Instance& instance, const LpSolution& sol) : instance_(&instance) {
    if (sol.variant != LpVariant::kGrouped) {
      throw std::invalid_argument("mgs: needs a grouped LP solution (constraint x_j <= lambda_j)");
    }
    columns_ = build_columns(instance, sol, /*per_scale_rate=*/false, 0.0);
    for (const SamplingColumn& col : columns_) {
      if (col.total > 1.0 + kProbTol) {
        throw std::invalid_argument("mgs: column mass exceeds the arrival rate");
      }
    }
  }
  void reset(const RngStream& stream) override {
    rng_.emplace(stream);
    caps_.resize(instance_->agents.size());
    for (std::size_t i = 0; i < caps_.size(); ++i) caps_[i] = instance_->agents[i].capacity;
  }
  Decision decide(const ArrivalEvent& event) override {
    const SamplingColumn& col = columns_[static_cast<std::size_t>(event.type_id)];
    const double u1 = rng_->next_double();
    if (u1 >= col.total) return std::nullopt;
    const int first = col.sample(u1);

    // Second candidate: same rule conditioned on differing from the first,
    // i.e. renormalize the remaining mass (other neighbors plus the reject
    // mass). When the first candidate carries all of the mass there is
    // nothing to condition on and the two candidates coincide.
    int second = -1;
    double p_first = 0.0;
    for (std::size_t k = 0; k < col.agents.size(); ++k) {
      if (col.agents[k] == first) {
        p_first = col.cumulative[k] - (k == 0 ? 0.0 : col.cumulative[k - 1]);
        break;
      }
    }
    const double rest = 1.0 - p_first;
    if (rest > kProbTol) {
      double u2 = rng_->next_double() * rest;
      for (std::size_t k = 0; k < col.agents.size() && second < 0; ++k) {
        if (col.agents[k] == first) continue;
        const double p = col.cumulative[k] - (k == 0 ? 0.0 : col.cumulative[k - 1]);
        if (u2 < p) {
          second = col.agents[k];
        } else {
          u2 -= p;
        }
      }
      // Falling through leaves second = -1: the conditioned draw landed in
      // the rejection mass.
    } else {
      second = first;
    }

    int serve = -1;
    if (caps_[static_cast<std::size_t>(first)] > 0) {
      serve = first;
    } else if (second >= 0 && caps_[static_cast<std::size_t>(second)] > 0) {
      serve = second;
    }
    if (serve < 0) return std::nullopt;
    --caps_[static_cast<std::size_t>(serve)];
    return serve;
  }

  PolicyPtr clone() const override { return std::make_unique<MgsPolicy>(*this); }

 private:
  const Instance* instance_;
  std::vector<SamplingColumn> columns_;
  std::vector<int> caps_;
  std::optional<Rng> rng_;
};

class ThresholdPolicy final : public Policy {
 public:
  ThresholdPolicy(const Instance& instance, double tau) : instance_(&instance), tau_(tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("threshold: tau must be in [0,1]");
    const int n_agents = instance.num_agents();
    common_type_ = -1;
    dedicated_agent_.assign(static_cast<std::size_t>(instance.num_types()), -1);
    std::vector<char> agent_taken(static_cast<std::size_t>(n_agents), 0);
    for (const OnlineType& type : instance.types) {
      if (static_cast<int>(type.neighbors.size()) == n_agents && n_agents >= 2) {
        if (common_type_ >= 0) {
          throw std::invalid_argument("threshold: instance is not central-star shaped");
        }
        common_type_ = type.id;
      } else if (type.neighbors.size() == 1) {
        const int agent = type.neighbors[0];
        if (agent_taken[static_cast<std::size_t>(agent)]) {
          throw std::invalid_argument("threshold: two rare types share an agent");
        }
        agent_taken[static_cast<std::size_t>(agent)] = 1;
        dedicated_agent_[static_cast<std::size_t>(type.id)] = agent;
      } else {
        throw std::invalid_argument("threshold: instance is not central-star shaped");
      }
    }
    if (common_type_ < 0) {
      throw std::invalid_argument("threshold: no common type adjacent to every agent");
    }
    for (char taken : agent_taken) {
      if (!taken) {
        throw std::invalid_argument("threshold: an agent has no dedicated rare type");
      }
    }
  }

  void reset(const RngStream& stream) override {
    rng_.emplace(stream);
    caps_.resize(instance_->agents.size());
    for (std::size_t i = 0; i < caps_.size(); ++i) caps_[i] = instance_->agents[i].capacity;
    available_.resize(caps_.size());
  }

  Decision decide(const ArrivalEvent& event) override {
    if (event.type_id != common_type_) {
      const int agent = dedicated_agent_[static_cast<std::size_t>(event.type_id)];
      if (caps_[static_cast<std::size_t>(agent)] <= 0) return std::nullopt;
      --caps_[static_cast<std::size_t>(agent)];
      return agent;
    }
    if (event.time < tau_) return std::nullopt;  // hold back the common type
    int n_avail = 0;
    for (std::size_t i = 0; i < caps_.size(); ++i) {
      if (caps_[i] > 0) available_[static_cast<std::size_t>(n_avail++)] = static_cast<int>(i);
    }
    if (n_avail == 0) return std::nullopt;
    const int agent = available_[static_cast<std::size_t>(rng_->next_below(static_cast<std::uint64_t>(n_avail)))];
    --caps_[static_cast<std::size_t>(agent)];
    return agent;
  }

  PolicyPtr clone() const override { return std::make_unique<ThresholdPolicy>(*this); }

 private:
  const Instance* instance_;
  double tau_;
  int common_type_ = -1;
  std::vector<int> dedicated_agent_;
  std::vector<int> caps_;
  std::vector<int> available_;
  std::optional<Rng> rng_;
};

class ServeKthPolicy final : public Policy {
 public:
  ServeKthPolicy(const Instance& instance, long k) : k_(k) {
    require_single_agent_covering(instance, "serve-kth");
    if (k < 1) throw std::invalid_argument("serve-kth: k must be >= 1");
    capacity_ = instance.agents[0].capacity;
  }
  void reset(const RngStream&) override {
    seen_ = 0;
    remaining_ = capacity_;
  }
  Decision decide(const ArrivalEvent&) override {
    ++seen_;
    if (seen_ != k_ || remaining_ <= 0) return std::nullopt;
    --remaining_;
    return 0;
  }

  PolicyPtr clone() const override { return std::make_unique<ServeKthPolicy>(*this); }

 private:
  long k_;
  int capacity_ = 0;
  long seen_ = 0;
  int remaining_ = 0;
};

double param_or(const std::map<std::string, double>& params, const std::string& key,
                double fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

}  // namespace

PolicyPtr fcfs_policy(const Instance& instance) { return std::make_unique<FcfsPolicy>(instance); }

PolicyPtr nadap_s_policy(const Instance& instance, const LpSolution& sol) {
  return std::make_unique<NadapSPolicy>(instance, sol);
}

PolicyPtr nadap_policy(const Instance& instance, const LpSolution& sol) {
  return std::make_unique<NadapPolicy>(instance, sol);
}

PolicyPtr reserve_policy(const Instance& instance, const LpSolution& sol) {
  return std::make_unique<ReservePolicy>(instance, sol);
}

PolicyPtr prob_reject_policy(const Instance& instance, double epsilon) {
  return std::make_unique<ProbRejectPolicy>(instance, epsilon);
}

PolicyPtr greedy_policy(const Instance& instance) {
  return std::make_unique<GreedyPolicy>(instance);
}

PolicyPtr ranking_policy(const Instance& instance) {
  return std::make_unique<RankingPolicy>(instance);
}

PolicyPtr mgs_policy(const Instance& instance, const LpSolution& sol) {
  return std::make_unique<MgsPolicy>(instance, sol);
}

PolicyPtr threshold_policy(const Instance& instance, double tau) {
  return std::make_unique<ThresholdPolicy>(instance, tau);
}

PolicyPtr serve_kth_policy(const Instance& instance, long k) {
  return std::make_unique<ServeKthPolicy>(instance, k);
}

PolicyPtr make_policy(const std::string& name, const Instance& instance,
                      const std::map<std::string, double>& params) {
  if (name == "fcfs") return fcfs_policy(instance);
  if (name == "greedy") return greedy_policy(instance);
  if (name == "rank") return ranking_policy(instance);
  if (name == "nadap-s") return nadap_s_policy(instance, solve_homogeneous(instance));
  if (name == "nadap") return nadap_policy(instance, solve_grouped(instance));
  if (name == "reserve") return reserve_policy(instance, solve_grouped(instance));
  if (name == "mgs") return mgs_policy(instance, solve_grouped(instance));
  if (name == "threshold") {
    return threshold_policy(instance, param_or(params, "tau", 2.0 - std::sqrt(3.0)));
  }
  if (name == "prob-reject") {
    const double lambda = instance.total_rate();
    const double kappa =
        instance.num_agents() == 1 ? instance.agents[0].capacity / lambda : 0.0;
    const double fallback =
        kappa > 1.0 ? kappa - 1.0 : (lambda > 1.0 ? std::sqrt(std::log(lambda) / lambda) : 0.0);
    return prob_reject_policy(instance, param_or(params, "epsilon", fallback));
  }
  if (name == "serve-kth") {
    const double k = param_or(params, "k", 1.0);
    return serve_kth_policy(instance, static_cast<long>(k));
  }
  throw std::invalid_argument("unknown policy: " + name);
}

PolicyFactory policy_factory(const std::string& name,
                             const std::map<std::string, double>& params) {
  return [name, params](const Instance& instance) { return make_policy(name, instance, params); };
}

}  // namespace fairmatch
