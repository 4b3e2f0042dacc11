#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fairmatch/instance.hpp"
#include "fairmatch/metrics.hpp"

namespace fairmatch {

struct TripRecord {
  long long start_epoch = 0;  // seconds
  int origin_area = 0;
  int destination_area = 0;
};

enum class Grouping { kHomogeneous, kDestination };

struct IngestOptions {
  int window_begin_sec = 0;      // time of day, inclusive
  int window_end_sec = 24 * 3600;  // exclusive
  int top_k = 484;
  int days = 0;  // 0 = derive from the records (number of distinct days)
  Grouping grouping = Grouping::kHomogeneous;
  std::string label;
};

// Aggregates trip records into an instance: one online type per
// (origin, destination) pair among the top_k most frequent within the
// daily window, with rate = count/days; one offline agent per origin area
// with capacity = round(average in-window records from that origin), at
// least 1; edges connect each origin agent to all of its pairs. Groups are
// per pair or per destination area.
Instance ingest_trips(const std::vector<TripRecord>& records, const IngestOptions& options);

// Trips CSV with header columns trip_id, start_ts, end_ts, origin_area,
// dest_area, fare (extra columns ignored; timestamps either epoch seconds
// or "YYYY-MM-DD HH:MM:SS").
std::vector<TripRecord> read_trips_csv(const std::string& path);

// Hermetic stand-in for the ride-hailing export: draws per-pair daily trip
// counts around skewed base frequencies so the aggregated instance has a
// few high-traffic pairs per origin and a long tail, balanced so supply
// roughly meets demand. Deterministic in the seed. With rare_origin set,
// origin area 1 carries a single low-rate pair to its own destination, which
// pins the instance's minimum rate and minimum capacity to one balanced
// agent (the regime the (b, lambda) grid scales around).
std::vector<TripRecord> synthetic_trips(int origins, int pairs_per_origin, int days,
                                        std::uint64_t seed, bool rare_origin = false);

struct PolicySpec {
  std::string name;
  std::map<std::string, double> params;
};

enum class SweepKind { kNone, kScaleS, kBLambda };

struct ExperimentConfig {
  std::string label = "experiment";
  std::uint64_t seed = 1;
  long trials = 1000;
  long inner_trials = 200;
  Objective objective = Objective::kFairA;
  LpVariant benchmark_variant = LpVariant::kHomogeneous;
  Instance instance;
  std::vector<PolicySpec> policies;
  SweepKind sweep = SweepKind::kNone;
  std::vector<double> scale_targets;                 // for kScaleS
  std::vector<std::pair<int, double>> cells;         // for kBLambda: (min b, min lambda)
  std::string config_hash;                           // filled by the parser
};

// Parses the JSON experiment description (see README for the schema) and
// resolves the instance source: "file", "builder" or "trips".
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text, const std::string& base_dir);

struct SweepRow {
  std::string cell;
  std::string instance_label;
  std::string policy;
  std::string objective;
  double mean = 0.0;
  double half_width_95 = 0.0;
  long trials = 0;
  double benchmark = 0.0;
  double ratio = 0.0;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string error;  // nonempty when this cell failed; numeric fields blank in CSV
};

// Runs every (instance point, policy) cell: estimates the objective, divides
// by the matching LP upper bound, and emits one row per cell. Cells run
// concurrently; rows come back sorted by (cell, policy order), so reruns with
// the same config are byte-identical. Per-cell failures land in the error
// column and the sweep continues.
std::vector<SweepRow> run_sweep(const ExperimentConfig& config);

std::string sweep_csv(const std::vector<SweepRow>& rows);
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);

// Rescales an instance for one (min capacity, min rate) grid cell: rates are
// scaled so the minimum rate hits min_rate, capacities so the minimum
// capacity hits min_b (rounded, floor 1).
Instance scale_to_cell(const Instance& instance, int min_b, double min_rate);

// Stable 64-bit FNV-1a of the canonical config text.
std::string config_fingerprint(const std::string& canonical_json);

}  // namespace fairmatch
