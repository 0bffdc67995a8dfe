#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "srcsel/accumulate.hpp"
#include "srcsel/eval.hpp"
#include "srcsel/strategy.hpp"

namespace srcsel {

inline constexpr const char* kArtifactName = "srcsel";
inline constexpr const char* kArtifactVersion = "0.1.0";

struct PlotRow {
  std::string x;
  std::string series;
  double mean = 0.0;
  double std_error = 0.0;  // 0 when only one replicate exists
};

/// Long-format table written as `<name>.csv` with columns (x, series, mean, stderr).
/// The first two header names are configurable; the column order is not.
struct PlotTable {
  std::string name;
  std::string x_label = "x";
  std::string series_label = "series";
  std::vector<PlotRow> rows;
};

/// One trajectory per replicate (seed), all on the same grid. Rows are (n, series, mean, stderr).
PlotTable trajectory_table(std::string name, std::string series,
                           std::span<const std::vector<TrajectoryPoint>> replicates);

/// Mean and stderr of `values` across replicates, matching ExperimentResult's convention.
PlotRow summarize_replicates(std::string x, std::string series, std::span<const double> values);

/// One series per strategy, x = metric name, mean/stderr taken from each ExperimentResult.
PlotTable strategy_table(std::string name, std::span<const StrategyOutcome> outcomes);

/// Aggregates of one ExperimentResult: x = metric name, series = `series`.
PlotTable experiment_table(std::string name, std::string series, const ExperimentResult& result);

std::string to_csv(const PlotTable& table);

/// Writes every table under `dir` and returns the written paths in input order.
/// Throws EmptyResults when there is nothing to write.
std::vector<std::filesystem::path> emit_plot_tables(std::span<const PlotTable> tables,
                                                    const std::filesystem::path& dir);

/// Writes `dir/manifest.json`: artifact name and version, command, seed, the full
/// config and the sorted list of output files. No timestamps or host data.
void write_manifest(const std::filesystem::path& dir, const std::string& command, std::uint64_t seed,
                    const nlohmann::json& config, std::vector<std::string> outputs);

/// Pretty-printed JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace srcsel
