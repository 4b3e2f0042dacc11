#include "fairmatch/instance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fairmatch/lp.hpp"
#include "json.hpp"

namespace fairmatch {

double Instance::total_rate() const {
  double sum = 0.0;
  for (const OnlineType& t : types) sum += t.rate;
  return sum;
}

int Instance::min_capacity() const {
  int m = 0;
  for (const OfflineAgent& a : agents) m = m == 0 ? a.capacity : std::min(m, a.capacity);
  return m;
}

double Instance::min_rate() const {
  double m = 0.0;
  for (const OnlineType& t : types) m = m == 0.0 ? t.rate : std::min(m, t.rate);
  return m;
}

ValidationReport validate(const Instance& instance) {
  ValidationReport report;
  const int n_agents = instance.num_agents();
  const int n_types = instance.num_types();
  auto err = [&report](const std::string& text) { report.errors.push_back(text); };
  auto warn = [&report](const std::string& text) { report.warnings.push_back(text); };

  for (int i = 0; i < n_agents; ++i) {
    const OfflineAgent& agent = instance.agents[i];
    if (agent.id != i) err("agent " + std::to_string(i) + ": id mismatch");
    if (agent.capacity < 1) err("agent " + std::to_string(i) + ": nonpositive capacity");
    std::set<int> seen;
    for (int j : agent.neighbors) {
      if (j < 0 || j >= n_types) {
        err("agent " + std::to_string(i) + ": neighbor index out of range");
      } else if (!seen.insert(j).second) {
        err("agent " + std::to_string(i) + ": duplicate neighbor");
      }
    }
    if (agent.neighbors.empty()) {
      warn("agent " + std::to_string(i) + " has no eligible types (unusable)");
    }
  }
  for (int j = 0; j < n_types; ++j) {
    const OnlineType& type = instance.types[j];
    if (type.id != j) err("type " + std::to_string(j) + ": id mismatch");
    if (!(type.rate > 0.0) || !std::isfinite(type.rate)) {
      err("type " + std::to_string(j) + ": nonpositive rate");
    }
    std::set<int> seen;
    for (int i : type.neighbors) {
      if (i < 0 || i >= n_agents) {
        err("type " + std::to_string(j) + ": neighbor index out of range");
      } else if (!seen.insert(i).second) {
        err("type " + std::to_string(j) + ": duplicate neighbor");
      }
    }
    if (type.neighbors.empty()) {
      warn("type " + std::to_string(j) + " has no eligible agents; its fairness is 0");
    }
  }

  // Adjacency symmetry: j in N_i iff i in N_j.
  for (int i = 0; i < n_agents; ++i) {
    for (int j : instance.agents[i].neighbors) {
      if (j < 0 || j >= n_types) continue;
      const auto& back = instance.types[j].neighbors;
      if (std::find(back.begin(), back.end(), i) == back.end()) {
        err("asymmetric adjacency: agent " + std::to_string(i) + " lists type " +
            std::to_string(j) + " but not the converse");
      }
    }
  }
  for (int j = 0; j < n_types; ++j) {
    for (int i : instance.types[j].neighbors) {
      if (i < 0 || i >= n_agents) continue;
      const auto& back = instance.agents[i].neighbors;
      if (std::find(back.begin(), back.end(), j) == back.end()) {
        err("asymmetric adjacency: type " + std::to_string(j) + " lists agent " +
            std::to_string(i) + " but not the converse");
      }
    }
  }

  std::vector<char> covered(static_cast<std::size_t>(n_types), 0);
  for (int k = 0; k < static_cast<int>(instance.groups.size()); ++k) {
    const Group& group = instance.groups[k];
    if (group.members.empty()) err("group " + std::to_string(k) + " is empty");
    for (int j : group.members) {
      if (j < 0 || j >= n_types) {
        err("group " + std::to_string(k) + ": member index out of range");
      } else {
        covered[static_cast<std::size_t>(j)] = 1;
      }
    }
  }
  for (int j = 0; j < n_types; ++j) {
    if (!covered[static_cast<std::size_t>(j)]) {
      err("uncovered type " + std::to_string(j) + ": not contained in any group");
    }
  }
  if (n_types == 0 || !(instance.total_rate() > 0.0)) {
    err("total arrival rate must be positive");
  }
  return report;
}

void require_valid(const Instance& instance) {
  const ValidationReport report = validate(instance);
  if (!report.ok()) {
    std::string message = "invalid instance";
    if (!instance.label.empty()) message += " '" + instance.label + "'";
    for (const std::string& e : report.errors) message += "; " + e;
    throw std::invalid_argument(message);
  }
}

namespace {

std::vector<Group> homogeneous_groups(int n_types) {
  std::vector<Group> groups(static_cast<std::size_t>(n_types));
  for (int j = 0; j < n_types; ++j) groups[static_cast<std::size_t>(j)] = Group{j, {j}};
  return groups;
}

}  // namespace

Instance central_star(int n) {
  if (n < 2) throw std::invalid_argument("central_star: n must be >= 2");
  Instance instance;
  instance.label = "central_star(" + std::to_string(n) + ")";
  const int common = n;  // types 0..n-1 are rare, type n is the common one
  instance.types.resize(static_cast<std::size_t>(n + 1));
  instance.agents.resize(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) {
    instance.types[static_cast<std::size_t>(t)] = OnlineType{t, 1.0 / n, {t}};
    instance.agents[static_cast<std::size_t>(t)] = OfflineAgent{t, 1, {t, common}};
    instance.types[static_cast<std::size_t>(common)].neighbors.push_back(t);
  }
  instance.types[static_cast<std::size_t>(common)].id = common;
  instance.types[static_cast<std::size_t>(common)].rate = static_cast<double>(n - 1);
  instance.groups = homogeneous_groups(n + 1);
  return instance;
}

Instance pool_supply(int n) {
  if (n < 1) throw std::invalid_argument("pool_supply: n must be >= 1");
  Instance instance;
  instance.label = "pool_supply(" + std::to_string(n) + ")";
  instance.types.push_back(OnlineType{0, static_cast<double>(n), {}});
  instance.agents.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    instance.agents[static_cast<std::size_t>(i)] = OfflineAgent{i, 1, {0}};
    instance.types[0].neighbors.push_back(i);
  }
  instance.groups = {Group{0, {0}}};
  return instance;
}

Instance single_agent(int b, const std::vector<double>& rates, std::vector<Group> groups) {
  if (b < 1) throw std::invalid_argument("single_agent: b must be >= 1");
  if (rates.empty()) throw std::invalid_argument("single_agent: rates must be nonempty");
  Instance instance;
  instance.label = "single_agent(b=" + std::to_string(b) + ")";
  instance.agents.push_back(OfflineAgent{0, b, {}});
  for (int j = 0; j < static_cast<int>(rates.size()); ++j) {
    instance.types.push_back(OnlineType{j, rates[static_cast<std::size_t>(j)], {0}});
    instance.agents[0].neighbors.push_back(j);
  }
  instance.groups = groups.empty() ? homogeneous_groups(instance.num_types()) : std::move(groups);
  return instance;
}

namespace {

Instance with_scaled_capacities(const Instance& instance, double alpha) {
  Instance scaled = instance;
  for (OfflineAgent& agent : scaled.agents) {
    const double raw = alpha * static_cast<double>(agent.capacity);
    agent.capacity = static_cast<int>(std::max(1L, std::lround(raw)));
  }
  return scaled;
}

}  // namespace

ScaleResult scale_to_target_s(const Instance& instance, double target_s) {
  require_valid(instance);
  if (!(target_s > 0.0)) throw std::invalid_argument("scale_to_target_s: target must be > 0");
  const double current = solve_homogeneous(instance).s_star;
  if (std::abs(current - target_s) <= 1e-12) {
    return ScaleResult{instance, current, 1.0};
  }

  constexpr double kLo = 1.0 / (1 << 20);
  constexpr double kHi = static_cast<double>(1 << 20);
  const auto s_at = [&instance](double alpha) {
    return solve_homogeneous(with_scaled_capacities(instance, alpha)).s_star;
  };
  // s* is a nondecreasing step function of alpha; bisect for the smallest
  // alpha whose s* reaches the target, then compare against the last alpha
  // below it and keep whichever lands closer.
  double lo = kLo, hi = kHi;
  if (s_at(lo) >= target_s) {
    hi = lo;
  } else if (s_at(hi) < target_s) {
    throw std::runtime_error("scale_to_target_s: target not reachable within alpha in [2^-20, 2^20]");
  } else {
    for (int iter = 0; iter < 80; ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (s_at(mid) >= target_s) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
  }
  const double s_hi = s_at(hi);
  const double s_lo = hi == kLo ? s_hi : s_at(lo);
  double alpha = hi, achieved = s_hi;
  if (hi != kLo && std::abs(s_lo - target_s) < std::abs(s_hi - target_s)) {
    alpha = lo;
    achieved = s_lo;
  }
  return ScaleResult{with_scaled_capacities(instance, alpha), achieved, alpha};
}

std::string instance_to_json(const Instance& instance) {
  nlohmann::json doc;
  doc["label"] = instance.label;
  doc["agents"] = nlohmann::json::array();
  for (const OfflineAgent& agent : instance.agents) {
    doc["agents"].push_back(
        {{"id", agent.id}, {"capacity", agent.capacity}, {"neighbors", agent.neighbors}});
  }
  doc["types"] = nlohmann::json::array();
  for (const OnlineType& type : instance.types) {
    doc["types"].push_back({{"id", type.id}, {"rate", type.rate}, {"neighbors", type.neighbors}});
  }
  doc["groups"] = nlohmann::json::array();
  for (const Group& group : instance.groups) {
    doc["groups"].push_back({{"id", group.id}, {"members", group.members}});
  }
  return doc.dump(2);
}

Instance instance_from_json(const std::string& text) {
  const nlohmann::json doc = nlohmann::json::parse(text);
  Instance instance;
  instance.label = doc.value("label", "");
  for (const auto& item : doc.at("agents")) {
    OfflineAgent agent;
    agent.id = item.at("id").get<int>();
    agent.capacity = item.at("capacity").get<int>();
    agent.neighbors = item.at("neighbors").get<std::vector<int>>();
    instance.agents.push_back(std::move(agent));
  }
  for (const auto& item : doc.at("types")) {
    OnlineType type;
    type.id = item.at("id").get<int>();
    type.rate = item.at("rate").get<double>();
    type.neighbors = item.at("neighbors").get<std::vector<int>>();
    instance.types.push_back(std::move(type));
  }
  for (const auto& item : doc.at("groups")) {
    Group group;
    group.id = item.at("id").get<int>();
    group.members = item.at("members").get<std::vector<int>>();
    instance.groups.push_back(std::move(group));
  }
  return instance;
}

void save_instance(const Instance& instance, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << instance_to_json(instance) << '\n';
}

Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return instance_from_json(buffer.str());
}

}  // namespace fairmatch
