#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "whipflow/diagnostics.hpp"
#include "whipflow/state.hpp"
#include "whipflow/tension_bvp.hpp"

namespace whipflow {

inline constexpr const char* kSchemaVersion = "1";

/// One timeseries.csv row.
struct SeriesRow {
  EnergyReport report;
  double dt = 0.0;
  int newton_iters = 0;

  bool operator==(const SeriesRow&) const = default;
};

struct Snapshot {
  ArcState state;
  TensionProfile tension;
};

struct SolverStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::vector<double> dt_history;
  std::vector<int> newton_history;
  bool failed = false;
  std::string failure_message;

  bool operator==(const SolverStats&) const = default;
};

struct RunRecord {
  nlohmann::json config = nlohmann::json::object();
  std::vector<SeriesRow> rows;
  std::vector<Snapshot> snapshots;
  SolverStats stats;
  nlohmann::json summary = nlohmann::json::object();
};

/// Exact equality including every snapshot coordinate.
bool same_record(const RunRecord& a, const RunRecord& b);

/// Column names of timeseries.csv in order.
const std::vector<std::string>& timeseries_columns();

/// Throws IoError naming the path on failure. Existing files are replaced.
void write_run(const RunRecord& record, const std::filesystem::path& directory);

/// Throws ParseError (file and line) or SchemaVersionError.
RunRecord read_run(const std::filesystem::path& directory);

/// %.17g formatting.
std::string format_double(double x);

/// Name of the snapshot file for time t.
std::string snapshot_filename(double t);

}  // namespace whipflow
