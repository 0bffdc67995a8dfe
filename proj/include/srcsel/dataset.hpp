#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace srcsel {

/// A named finite sample: feature matrix, binary labels and opaque group ids.
/// Immutable once constructed; the constructor enforces the shape and label invariants.
class Source {
 public:
  Source() = default;
  Source(std::string id, Eigen::MatrixXd features, std::vector<int> labels,
         std::vector<std::string> groups, std::vector<std::string> feature_names);

  const std::string& id() const noexcept { return id_; }
  const Eigen::MatrixXd& features() const noexcept { return features_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const std::vector<std::string>& groups() const noexcept { return groups_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }

  std::size_t rows() const noexcept { return labels_.size(); }
  std::size_t dims() const noexcept { return feature_names_.size(); }
  bool empty() const noexcept { return labels_.empty(); }

  /// Labels as a real vector, handy for the numeric code.
  Eigen::VectorXd label_vector() const;
  double positive_rate() const;

  /// Rows in the given order; indices may repeat.
  Source select(std::span<const std::size_t> rows, std::string id) const;
  Source with_id(std::string id) const;

 private:
  std::string id_;
  Eigen::MatrixXd features_;
  std::vector<int> labels_;
  std::vector<std::string> groups_;
  std::vector<std::string> feature_names_;
};

enum class MissingPolicy { Reject, IndicatorZeroFill };

struct SchemaConfig {
  std::string label_column = "label";
  /// Empty means the file has no group column; every row lands in group "all".
  std::string group_column = "group";
  /// Empty means "all-remaining".
  std::vector<std::string> feature_columns;
  MissingPolicy missing_policy = MissingPolicy::IndicatorZeroFill;
};

struct SplitSpec {
  std::size_t n_folds = 5;
  std::size_t n_repeats = 5;
  std::uint64_t seed = 42;
};

struct Fold {
  std::size_t repeat = 0;
  std::size_t fold = 0;
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

/// Flat key-value configuration file (`key = value`, `#` or `;` comments).
std::map<std::string, std::string> read_key_value_file(const std::filesystem::path& path);
SchemaConfig schema_from_key_values(const std::map<std::string, std::string>& kv);
SchemaConfig read_schema_config(const std::filesystem::path& path);

/// RFC-4180 records (quoted fields, doubled quotes, CRLF tolerated).
std::vector<std::vector<std::string>> parse_csv(std::istream& in);

Source load_csv(const std::filesystem::path& path, const SchemaConfig& schema);
/// Writes features, then `label`, then `group`; round-trips through load_csv with the default schema.
void write_csv(const Source& source, const std::filesystem::path& path);

/// All (train, validation) pairs, repeat-major. Folds are label-stratified and
/// partition the index set within each repeat.
std::vector<Fold> stratified_folds(const Source& source, const SplitSpec& spec);

Source subsample(const Source& source, std::size_t n, std::uint64_t seed);
Source concat(std::span<const Source> sources);

/// Uniformly shuffled split into (first n_first rows, remaining rows).
std::pair<Source, Source> split_rows(const Source& source, std::size_t n_first, std::uint64_t seed);

}  // namespace srcsel
