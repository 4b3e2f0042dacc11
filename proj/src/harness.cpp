#include "fairmatch/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fairmatch/lp.hpp"
#include "json.hpp"

namespace fairmatch {

namespace {

constexpr long long kSecondsPerDay = 24 * 3600;

// Days since 1970-01-01 for a civil date (Howard Hinnant's algorithm).
long long days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const long long era = (y >= 0 ? y : y - 399) / 400;
  const long long yoe = y - era * 400;
  const long long doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const long long doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

long long parse_timestamp(const std::string& text) {
  int y, mo, d, h, mi, s = 0;
  if (std::sscanf(text.c_str(), "%d-%d-%d %d:%d:%d", &y, &mo, &d, &h, &mi, &s) >= 5) {
    return days_from_civil(y, mo, d) * kSecondsPerDay + h * 3600 + mi * 60 + s;
  }
  try {
    std::size_t used = 0;
    const long long epoch = std::stoll(text, &used);
    if (used == text.size()) return epoch;
  } catch (const std::exception&) {
  }
  throw std::runtime_error("unparseable timestamp: '" + text + "'");
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

std::vector<TripRecord> read_trips_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trips file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty trips file: " + path);
  const std::vector<std::string> header = split_csv_line(line);
  int col_start = -1, col_origin = -1, col_dest = -1;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    if (header[static_cast<std::size_t>(c)] == "start_ts") col_start = c;
    if (header[static_cast<std::size_t>(c)] == "origin_area") col_origin = c;
    if (header[static_cast<std::size_t>(c)] == "dest_area") col_dest = c;
  }
  if (col_start < 0 || col_origin < 0 || col_dest < 0) {
    throw std::runtime_error("trips file must have columns start_ts, origin_area, dest_area");
  }
  std::vector<TripRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    const int needed = std::max(col_start, std::max(col_origin, col_dest));
    if (static_cast<int>(fields.size()) <= needed) {
      throw std::runtime_error("short trips row: '" + line + "'");
    }
    TripRecord record;
    record.start_epoch = parse_timestamp(fields[static_cast<std::size_t>(col_start)]);
    record.origin_area = std::stoi(fields[static_cast<std::size_t>(col_origin)]);
    record.destination_area = std::stoi(fields[static_cast<std::size_t>(col_dest)]);
    records.push_back(record);
  }
  return records;
}

Instance ingest_trips(const std::vector<TripRecord>& records, const IngestOptions& options) {
  if (records.empty()) throw std::invalid_argument("ingest_trips: no records");
  if (options.top_k < 1) throw std::invalid_argument("ingest_trips: top_k must be >= 1");
  if (options.days < 0) throw std::invalid_argument("ingest_trips: days must be >= 0");

  std::map<std::pair<int, int>, long> pair_count;
  std::map<int, long> origin_count;
  std::set<long long> distinct_days;
  for (const TripRecord& record : records) {
    const long long day = record.start_epoch >= 0 ? record.start_epoch / kSecondsPerDay
                                                  : (record.start_epoch - kSecondsPerDay + 1) / kSecondsPerDay;
    distinct_days.insert(day);
    const int tod = static_cast<int>(((record.start_epoch % kSecondsPerDay) + kSecondsPerDay) %
                                     kSecondsPerDay);
    if (tod < options.window_begin_sec || tod >= options.window_end_sec) continue;
    ++pair_count[{record.origin_area, record.destination_area}];
    ++origin_count[record.origin_area];
  }
  if (pair_count.empty()) {
    throw std::runtime_error("ingest_trips: no record falls inside the time window");
  }
  const int days =
      options.days > 0 ? options.days : static_cast<int>(distinct_days.size());

  // Keep the top_k most frequent pairs; ties resolved by (origin, dest) so
  // the cut is deterministic.
  std::vector<std::pair<std::pair<int, int>, long>> ranked(pair_count.begin(), pair_count.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (static_cast<int>(ranked.size()) > options.top_k) {
    ranked.resize(static_cast<std::size_t>(options.top_k));
  }
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  Instance instance;
  instance.label = options.label.empty()
                       ? "trips(top" + std::to_string(options.top_k) + ")"
                       : options.label;
  std::map<int, int> agent_of_origin;
  for (const auto& [pair, count] : ranked) {
    if (!agent_of_origin.count(pair.first)) {
      const int id = static_cast<int>(agent_of_origin.size());
      agent_of_origin[pair.first] = id;
    }
  }
  instance.agents.resize(agent_of_origin.size());
  for (const auto& [origin, id] : agent_of_origin) {
    // Capacity: average in-window records per day from this origin (counting
    // pairs below the top_k cut too), rounded half up, floor 1.
    const double average =
        static_cast<double>(origin_count.at(origin)) / static_cast<double>(days);
    OfflineAgent agent;
    agent.id = id;
    agent.capacity = std::max(1, static_cast<int>(std::floor(average + 0.5)));
    instance.agents[static_cast<std::size_t>(id)] = std::move(agent);
  }
  std::map<int, std::vector<int>> types_of_destination;
  for (const auto& [pair, count] : ranked) {
    const int j = instance.num_types();
    const int agent = agent_of_origin.at(pair.first);
    OnlineType type;
    type.id = j;
    type.rate = static_cast<double>(count) / static_cast<double>(days);
    type.neighbors = {agent};
    instance.types.push_back(std::move(type));
    instance.agents[static_cast<std::size_t>(agent)].neighbors.push_back(j);
    types_of_destination[pair.second].push_back(j);
  }
  if (options.grouping == Grouping::kHomogeneous) {
    for (int j = 0; j < instance.num_types(); ++j) instance.groups.push_back(Group{j, {j}});
  } else {
    int id = 0;
    for (const auto& [dest, members] : types_of_destination) {
      instance.groups.push_back(Group{id++, members});
    }
  }
  require_valid(instance);
  return instance;
}

std::vector<TripRecord> synthetic_trips(int origins, int pairs_per_origin, int days,
                                        std::uint64_t seed, bool rare_origin) {
  if (origins < 1 || pairs_per_origin < 1 || days < 1) {
    throw std::invalid_argument("synthetic_trips: all dimensions must be >= 1");
  }
  // Base daily frequencies: a skewed ramp per origin, destination pool shared
  // across origins so per-destination groups span several origins.
  Rng rng(RngStream{seed, 0x7217});
  std::vector<TripRecord> records;
  const long long base_day = 18000;  // arbitrary fixed civil day
  auto emit = [&](int origin_area, int dest_area, double base_rate) {
    for (int d = 0; d < days; ++d) {
      const long n = rng.poisson(base_rate);
      for (long r = 0; r < n; ++r) {
        TripRecord record;
        record.origin_area = origin_area;
        record.destination_area = dest_area;
        const bool in_window = rng.next_double() < 0.9;  // some noise outside 18:00-19:00
        const int tod = in_window ? 18 * 3600 + static_cast<int>(rng.next_below(3600))
                                  : 12 * 3600 + static_cast<int>(rng.next_below(3600));
        record.start_epoch = (base_day + d) * kSecondsPerDay + tod;
        records.push_back(record);
      }
    }
  };
  for (int o = 0; o < origins; ++o) {
    if (rare_origin && o == 0) {
      emit(1, 99, 1.5);  // lone low-rate pair with its own destination area
      continue;
    }
    for (int p = 0; p < pairs_per_origin; ++p) {
      const int dest = 1 + (o + p) % (pairs_per_origin + 2);
      const double base = 1.5 + 5.5 * static_cast<double>((p * 7 + o * 3) % pairs_per_origin) /
                                    static_cast<double>(pairs_per_origin);
      emit(o + 1, dest, base);
    }
  }
  return records;
}

Instance scale_to_cell(const Instance& instance, int min_b, double min_rate) {
  require_valid(instance);
  if (min_b < 1 || !(min_rate > 0.0)) {
    throw std::invalid_argument("scale_to_cell: need min_b >= 1 and min_rate > 0");
  }
  const double rate_factor = min_rate / instance.min_rate();
  const double cap_factor = static_cast<double>(min_b) / static_cast<double>(instance.min_capacity());
  Instance scaled = instance;
  for (OnlineType& type : scaled.types) type.rate *= rate_factor;
  for (OfflineAgent& agent : scaled.agents) {
    agent.capacity = std::max(
        1, static_cast<int>(std::lround(cap_factor * static_cast<double>(agent.capacity))));
  }
  char cell[64];
  std::snprintf(cell, sizeof(cell), "[b=%d,l=%.6g]", min_b, min_rate);
  scaled.label += cell;
  return scaled;
}

namespace {

std::pair<int, int> parse_window(const std::string& text) {
  int h1, m1, h2, m2;
  if (std::sscanf(text.c_str(), "%d:%d-%d:%d", &h1, &m1, &h2, &m2) != 4) {
    throw std::runtime_error("window must look like 18:00-19:00, got '" + text + "'");
  }
  return {h1 * 3600 + m1 * 60, h2 * 3600 + m2 * 60};
}

Instance resolve_instance(const nlohmann::json& spec, const std::string& base_dir) {
  namespace fs = std::filesystem;
  auto resolve_path = [&base_dir](const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() || base_dir.empty() ? p : (fs::path(base_dir) / path).string();
  };
  if (spec.contains("file")) {
    return load_instance(resolve_path(spec.at("file").get<std::string>()));
  }
  if (spec.contains("builder")) {
    const std::string builder = spec.at("builder").get<std::string>();
    if (builder == "central-star") return central_star(spec.at("n").get<int>());
    if (builder == "pool-supply") return pool_supply(spec.at("n").get<int>());
    if (builder == "single-agent") {
      return single_agent(spec.at("b").get<int>(), spec.at("rates").get<std::vector<double>>());
    }
    throw std::runtime_error("unknown builder: " + builder);
  }
  if (spec.contains("trips")) {
    IngestOptions options;
    const auto window = parse_window(spec.value("window", std::string("00:00-24:00")));
    options.window_begin_sec = window.first;
    options.window_end_sec = window.second;
    options.top_k = spec.value("top_k", 484);
    options.days = spec.value("days", 0);
    const std::string grouping = spec.value("grouping", std::string("homogeneous"));
    options.grouping = grouping == "destination" ? Grouping::kDestination : Grouping::kHomogeneous;
    return ingest_trips(read_trips_csv(resolve_path(spec.at("trips").get<std::string>())), options);
  }
  throw std::runtime_error("instance spec needs one of: file, builder, trips");
}

bool groups_are_homogeneous(const Instance& instance) {
  for (const Group& group : instance.groups) {
    if (group.members.size() != 1) return false;
  }
  return true;
}

}  // namespace

std::string config_fingerprint(const std::string& canonical_json) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_json) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

ExperimentConfig parse_config(const std::string& json_text, const std::string& base_dir) {
  const nlohmann::json doc = nlohmann::json::parse(json_text);
  ExperimentConfig config;
  config.config_hash = config_fingerprint(doc.dump());
  config.label = doc.value("label", std::string("experiment"));
  config.seed = doc.value("seed", 1ULL);
  config.trials = doc.value("trials", 1000L);
  config.inner_trials = doc.value("inner_trials", 200L);
  if (config.trials < 1) throw std::runtime_error("config: trials must be >= 1");
  const std::string objective = doc.value("objective", std::string("fair-a"));
  if (objective == "fair-a") {
    config.objective = Objective::kFairA;
  } else if (objective == "fair-b") {
    config.objective = Objective::kFairB;
  } else {
    throw std::runtime_error("config: objective must be fair-a or fair-b");
  }
  config.instance = resolve_instance(doc.at("instance"), base_dir);
  require_valid(config.instance);
  if (doc.contains("benchmark")) {
    const std::string benchmark = doc.at("benchmark").get<std::string>();
    config.benchmark_variant =
        benchmark == "grouped" ? LpVariant::kGrouped : LpVariant::kHomogeneous;
  } else {
    config.benchmark_variant = groups_are_homogeneous(config.instance) ? LpVariant::kHomogeneous
                                                                       : LpVariant::kGrouped;
  }
  for (const auto& item : doc.at("policies")) {
    PolicySpec spec;
    spec.name = item.at("name").get<std::string>();
    for (const auto& [key, value] : item.items()) {
      if (key != "name") spec.params[key] = value.get<double>();
    }
    config.policies.push_back(std::move(spec));
  }
  if (config.policies.empty()) throw std::runtime_error("config: at least one policy required");
  if (doc.contains("sweep")) {
    const auto& sweep = doc.at("sweep");
    const std::string kind = sweep.at("kind").get<std::string>();
    if (kind == "scale-s") {
      config.sweep = SweepKind::kScaleS;
      config.scale_targets = sweep.at("targets").get<std::vector<double>>();
      if (config.scale_targets.empty()) throw std::runtime_error("config: empty sweep targets");
    } else if (kind == "b-lambda") {
      config.sweep = SweepKind::kBLambda;
      for (const auto& cell : sweep.at("cells")) {
        config.cells.emplace_back(cell.at(0).get<int>(), cell.at(1).get<double>());
      }
      if (config.cells.empty()) throw std::runtime_error("config: empty sweep cells");
    } else if (kind == "none") {
      config.sweep = SweepKind::kNone;
    } else {
      throw std::runtime_error("config: sweep kind must be scale-s, b-lambda or none");
    }
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), std::filesystem::path(path).parent_path().string());
}

namespace {

struct CellTask {
  std::string key;
  Instance instance;
  std::uint64_t seed = 0;
};

std::vector<SweepRow> run_cell(const ExperimentConfig& config, const CellTask& cell) {
  std::vector<SweepRow> rows;
  double benchmark = 0.0;
  std::string cell_error;
  try {
    const LpSolution sol = config.benchmark_variant == LpVariant::kHomogeneous
                               ? solve_homogeneous(cell.instance)
                               : solve_grouped(cell.instance);
    benchmark = opt_upper_bound(sol);
  } catch (const std::exception& e) {
    cell_error = std::string("benchmark LP failed: ") + e.what();
  }
  for (const PolicySpec& spec : config.policies) {
    SweepRow row;
    row.cell = cell.key;
    row.instance_label = cell.instance.label;
    row.policy = spec.name;
    row.objective = config.objective == Objective::kFairA ? "fair-a" : "fair-b";
    row.seed = cell.seed;
    row.config_hash = config.config_hash;
    if (!cell_error.empty()) {
      row.error = cell_error;
      rows.push_back(std::move(row));
      continue;
    }
    try {
      const PolicyFactory factory = policy_factory(spec.name, spec.params);
      // Same seed for every policy in the cell: identical arrival streams
      // make the cross-policy comparison a paired one.
      const FairnessEstimate estimate =
          config.objective == Objective::kFairA
              ? estimate_fair_a(factory, cell.instance, config.trials, cell.seed)
              : estimate_fair_b(factory, cell.instance, config.trials, config.inner_trials,
                                cell.seed);
      row.mean = estimate.mean;
      row.half_width_95 = estimate.half_width_95;
      row.trials = estimate.trials;
      row.benchmark = benchmark;
      row.ratio = competitive_ratio(estimate.mean, benchmark);
      if (benchmark == 0.0) row.error = "benchmark is zero: ratio not applicable";
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::vector<SweepRow> run_sweep(const ExperimentConfig& config) {
  std::vector<CellTask> cells;
  if (config.sweep == SweepKind::kNone) {
    cells.push_back(CellTask{"all", config.instance, 0});
  } else if (config.sweep == SweepKind::kScaleS) {
    for (double target : config.scale_targets) {
      char key[32];
      std::snprintf(key, sizeof(key), "s*=%.6g", target);
      CellTask cell;
      cell.key = key;
      cell.instance = scale_to_target_s(config.instance, target).instance;
      cells.push_back(std::move(cell));
    }
  } else {
    for (const auto& [min_b, min_rate] : config.cells) {
      char key[48];
      std::snprintf(key, sizeof(key), "b=%d,l=%.6g", min_b, min_rate);
      CellTask cell;
      cell.key = key;
      cell.instance = scale_to_cell(config.instance, min_b, min_rate);
      cells.push_back(std::move(cell));
    }
  }
  for (std::size_t c = 0; c < cells.size(); ++c) {
    cells[c].seed = config.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(c);
  }

  // Cells are independent; futures are collected in cell order so the row
  // order never depends on scheduling.
  std::vector<std::future<std::vector<SweepRow>>> futures;
  futures.reserve(cells.size());
  for (const CellTask& cell : cells) {
    futures.push_back(std::async(std::launch::async,
                                 [&config, &cell]() { return run_cell(config, cell); }));
  }
  std::vector<SweepRow> rows;
  for (auto& future : futures) {
    std::vector<SweepRow> cell_rows = future.get();
    rows.insert(rows.end(), std::make_move_iterator(cell_rows.begin()),
                std::make_move_iterator(cell_rows.end()));
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out =
      "cell,instance_label,policy,objective,mean,half_width_95,trials,benchmark,"
      "competitive_ratio,seed,config_hash,error\n";
  for (const SweepRow& row : rows) {
    out += row.cell + ',' + row.instance_label + ',' + row.policy + ',' + row.objective + ',';
    if (row.error.empty()) {
      out += format_double(row.mean) + ',' + format_double(row.half_width_95) + ',' +
             std::to_string(row.trials) + ',' + format_double(row.benchmark) + ',' +
             format_double(row.ratio) + ',';
    } else {
      out += ",,,,,";
    }
    out += std::to_string(row.seed) + ',' + row.config_hash + ',' + row.error + '\n';
  }
  return out;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << sweep_csv(rows);
}

}  // namespace fairmatch
