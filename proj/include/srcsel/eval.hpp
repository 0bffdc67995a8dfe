#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "srcsel/dataset.hpp"
#include "srcsel/models.hpp"

namespace srcsel {

enum class Metric { Auc, Accuracy, WorstGroupAccuracy, Disparity };

std::string_view to_string(Metric m);

/// Mann-Whitney AUC with ties counted as 1/2, via average ranks in O(n log n).
double auc(std::span<const double> scores, std::span<const int> labels);

/// Fraction of rows where (score >= threshold) agrees with the label.
double accuracy_at_threshold(std::span<const double> scores, std::span<const int> labels, double threshold);

double balanced_accuracy_at_threshold(std::span<const double> scores, std::span<const int> labels, double threshold);

inline constexpr std::size_t kDefaultMinGroupSize = 10;

struct GroupAccuracies {
  /// Groups with at least min_group_size rows, keyed (and so ordered) by id.
  std::map<std::string, double> accuracy;
  std::map<std::string, std::size_t> sizes;
  std::vector<std::string> excluded;
};

GroupAccuracies group_accuracies(std::span<const double> scores, std::span<const int> labels,
                                 std::span<const std::string> groups, double threshold,
                                 std::size_t min_group_size = kDefaultMinGroupSize);

struct WorstGroup {
  std::string group;
  double accuracy = 0.0;
  std::vector<std::string> excluded;
};

/// Lowest group accuracy; ties go to the lexicographically smallest id.
WorstGroup worst_group_accuracy(std::span<const double> scores, std::span<const int> labels,
                                std::span<const std::string> groups, double threshold,
                                std::size_t min_group_size = kDefaultMinGroupSize);

double disparity(std::span<const double> scores, std::span<const int> labels, std::span<const std::string> groups,
                 double threshold, std::size_t min_group_size = kDefaultMinGroupSize);

/// Grid search over {0.00, 0.01, ..., 1.00} for the best pooled balanced accuracy.
/// Ties resolve to the grid point closest to 0.5, then the smaller one.
double choose_threshold(std::span<const double> scores, std::span<const int> labels);

struct Correlation {
  double r = 0.0;
  double p = 1.0;
  std::size_t n = 0;
};

/// Sample Pearson r with a two-sided Student-t p-value on n - 2 degrees of freedom.
Correlation pearson(std::span<const double> x, std::span<const double> y);

struct MetricRecord {
  Metric metric = Metric::Auc;
  double value = 0.0;
  std::size_t fold = 0;
  std::size_t repeat = 0;
  std::optional<double> threshold;
  std::map<std::string, std::size_t> group_sizes;
};

struct ExperimentResult {
  std::vector<MetricRecord> records;
  std::map<Metric, double> mean;
  /// Standard error across repeat means, N = number of repeats.
  std::map<Metric, double> std_error;
  std::size_t n_repeats = 0;

  double mean_of(Metric m) const;
  double stderr_of(Metric m) const;
  /// Per-repeat means of a metric, in repeat order.
  std::vector<double> repeat_means(Metric m) const;
};

struct ExperimentConfig {
  LogisticOptions model;
  SplitSpec split;
  std::size_t min_group_size = kDefaultMinGroupSize;
};

/// Cross-validated protocol: for every (repeat, fold) fit on the training folds,
/// pick one threshold per repeat from the pooled validation folds, and score
/// the untouched test source.
ExperimentResult run_experiment(const Source& train_pool, const Source& test, const ExperimentConfig& config);

/// Mean and stderr (N = repeats) recomputed from records.
void aggregate(ExperimentResult& result);

nlohmann::json to_json(const ExperimentResult& result);

}  // namespace srcsel
