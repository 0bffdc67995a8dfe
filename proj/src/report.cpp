#include "srcsel/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "srcsel/error.hpp"
#include "text_util.hpp"

namespace srcsel {

namespace {

std::string format_cell(double v) {
  if (std::isnan(v)) return "nan";
  return detail::format_real(v);
}

}  // namespace

PlotRow summarize_replicates(std::string x, std::string series, std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyResults, "no replicates to summarize");
  PlotRow row{std::move(x), std::move(series), 0.0, 0.0};
  double sum = 0.0;
  for (double v : values) sum += v;
  const double n = static_cast<double>(values.size());
  row.mean = sum / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - row.mean) * (v - row.mean);
    row.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return row;
}

PlotTable trajectory_table(std::string name, std::string series,
                           std::span<const std::vector<TrajectoryPoint>> replicates) {
  if (replicates.empty() || replicates.front().empty()) {
    throw Error(ErrorCode::EmptyResults, "no trajectory points");
  }
  PlotTable table{std::move(name), "n", "metric", {}};
  const auto& grid = replicates.front();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<double> values;
    for (const auto& rep : replicates) {
      if (rep.size() != grid.size() || rep[i].n != grid[i].n) {
        throw Error(ErrorCode::DimensionMismatch, "trajectory replicates use different grids");
      }
      values.push_back(rep[i].estimate.value);
    }
    table.rows.push_back(summarize_replicates(std::to_string(grid[i].n), series, values));
  }
  return table;
}

PlotTable strategy_table(std::string name, std::span<const StrategyOutcome> outcomes) {
  if (outcomes.empty()) throw Error(ErrorCode::EmptyResults, "no strategy outcomes");
  PlotTable table{std::move(name), "metric", "strategy", {}};
  for (const auto& o : outcomes) {
    for (const auto& [metric, mean] : o.result.mean) {
      table.rows.push_back({std::string(to_string(metric)), std::string(to_string(o.strategy)), mean,
                            o.result.stderr_of(metric)});
    }
  }
  return table;
}

PlotTable experiment_table(std::string name, std::string series, const ExperimentResult& result) {
  if (result.mean.empty()) throw Error(ErrorCode::EmptyResults, "experiment has no aggregated metrics");
  PlotTable table{std::move(name), "metric", "series", {}};
  for (const auto& [metric, mean] : result.mean) {
    table.rows.push_back({std::string(to_string(metric)), series, mean, result.stderr_of(metric)});
  }
  return table;
}

std::string to_csv(const PlotTable& table) {
  std::string out = detail::csv_escape(table.x_label) + ',' + detail::csv_escape(table.series_label) + ",mean,stderr\n";
  for (const auto& r : table.rows) {
    out += detail::csv_escape(r.x) + ',' + detail::csv_escape(r.series) + ',' + format_cell(r.mean) + ',' +
           format_cell(r.std_error) + '\n';
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
  f << text;
  if (!f) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) { write_text(path, doc.dump(2) + "\n"); }

std::vector<std::filesystem::path> emit_plot_tables(std::span<const PlotTable> tables,
                                                    const std::filesystem::path& dir) {
  if (tables.empty()) throw Error(ErrorCode::EmptyResults, "no plot tables to write");
  for (const auto& t : tables) {
    if (t.rows.empty()) throw Error(ErrorCode::EmptyResults, "plot table '" + t.name + "' has no rows");
    if (t.name.empty()) throw Error(ErrorCode::BadConfig, "plot table needs a name");
  }
  std::vector<std::filesystem::path> written;
  for (const auto& t : tables) {
    written.push_back(dir / (t.name + ".csv"));
    write_text(written.back(), to_csv(t));
  }
  return written;
}

void write_manifest(const std::filesystem::path& dir, const std::string& command, std::uint64_t seed,
                    const nlohmann::json& config, std::vector<std::string> outputs) {
  std::sort(outputs.begin(), outputs.end());
  const nlohmann::json doc = {{"artifact", kArtifactName}, {"version", kArtifactVersion}, {"command", command},
                              {"seed", seed},              {"config", config},            {"outputs", outputs}};
  write_json(dir / "manifest.json", doc);
}

}  // namespace srcsel
