#include "srcsel/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "srcsel/error.hpp"
#include "srcsel/seed.hpp"
#include "text_util.hpp"

namespace srcsel {

Source::Source(std::string id, Eigen::MatrixXd features, std::vector<int> labels,
               std::vector<std::string> groups, std::vector<std::string> feature_names)
    : id_(std::move(id)),
      features_(std::move(features)),
      labels_(std::move(labels)),
      groups_(std::move(groups)),
      feature_names_(std::move(feature_names)) {
  if (feature_names_.empty()) {
    throw Error(ErrorCode::SchemaMismatch, "source '" + id_ + "' has no feature columns");
  }
  if (static_cast<std::size_t>(features_.cols()) != feature_names_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "feature matrix has " + std::to_string(features_.cols()) +
                                                  " columns but " + std::to_string(feature_names_.size()) +
                                                  " names");
  }
  if (static_cast<std::size_t>(features_.rows()) != labels_.size() || labels_.size() != groups_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "features, labels and groups disagree on row count");
  }
  for (int y : labels_) {
    if (y != 0 && y != 1) throw Error(ErrorCode::BadLabel, "label " + std::to_string(y) + " is not 0/1");
  }
}

Eigen::VectorXd Source::label_vector() const {
  Eigen::VectorXd y(static_cast<Eigen::Index>(labels_.size()));
  for (std::size_t i = 0; i < labels_.size(); ++i) y[static_cast<Eigen::Index>(i)] = labels_[i];
  return y;
}

double Source::positive_rate() const {
  if (labels_.empty()) return 0.0;
  return static_cast<double>(std::count(labels_.begin(), labels_.end(), 1)) / static_cast<double>(labels_.size());
}

Source Source::select(std::span<const std::size_t> rows, std::string id) const {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), features_.cols());
  std::vector<int> y;
  std::vector<std::string> g;
  y.reserve(rows.size());
  g.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= labels_.size()) throw Error(ErrorCode::NotEnoughRows, "row index out of range");
    x.row(static_cast<Eigen::Index>(i)) = features_.row(static_cast<Eigen::Index>(rows[i]));
    y.push_back(labels_[rows[i]]);
    g.push_back(groups_[rows[i]]);
  }
  return Source(std::move(id), std::move(x), std::move(y), std::move(g), feature_names_);
}

Source Source::with_id(std::string id) const {
  Source copy = *this;
  copy.id_ = std::move(id);
  return copy;
}

// ---------------------------------------------------------------------------
// Configuration

std::map<std::string, std::string> read_key_value_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path.string());
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorCode::BadConfig, path.string() + ": " + e.message());
  }
  std::map<std::string, std::string> kv;
  for (const auto& [key, node] : tree) {
    if (!node.empty()) throw Error(ErrorCode::BadConfig, "sections are not supported: [" + key + "]");
    kv[key] = std::string(detail::trim(node.data()));
  }
  return kv;
}

SchemaConfig schema_from_key_values(const std::map<std::string, std::string>& kv) {
  SchemaConfig schema;
  for (const auto& [key, value] : kv) {
    if (key == "label_column") {
      schema.label_column = value;
    } else if (key == "group_column") {
      schema.group_column = value;
    } else if (key == "feature_columns") {
      if (value != "all-remaining") schema.feature_columns = detail::split_list(value);
    } else if (key == "missing_policy") {
      if (value == "reject") {
        schema.missing_policy = MissingPolicy::Reject;
      } else if (value == "indicator_zero_fill") {
        schema.missing_policy = MissingPolicy::IndicatorZeroFill;
      } else {
        throw Error(ErrorCode::BadConfig, "missing_policy must be reject or indicator_zero_fill, got '" + value + "'");
      }
    } else {
      throw Error(ErrorCode::BadConfig, "unknown schema key '" + key + "'");
    }
  }
  if (schema.label_column.empty()) throw Error(ErrorCode::BadConfig, "label_column is required");
  for (const auto& f : schema.feature_columns) {
    if (f == schema.label_column || (!schema.group_column.empty() && f == schema.group_column)) {
      throw Error(ErrorCode::BadConfig, "column '" + f + "' cannot be both a feature and the label/group");
    }
  }
  return schema;
}

SchemaConfig read_schema_config(const std::filesystem::path& path) {
  return schema_from_key_values(read_key_value_file(path));
}

// ---------------------------------------------------------------------------
// CSV

std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  bool any = false;
  char c = 0;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // A bare newline (e.g. trailing) is not a record.
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };
  while (in.get(c)) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get(c);
      end_record();
    } else if (c == '\n') {
      end_record();
    } else {
      field += c;
      field_started = true;
    }
  }
  if (in_quotes) throw Error(ErrorCode::MalformedCsv, "unterminated quoted field");
  if (any && (field_started || !field.empty() || !record.empty())) end_record();
  return records;
}

namespace {

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw Error(ErrorCode::MissingColumn, "column '" + name + "' not in header");
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

Source load_csv(const std::filesystem::path& path, const SchemaConfig& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  auto records = parse_csv(in);
  if (records.empty()) throw Error(ErrorCode::MalformedCsv, path.string() + ": missing header row");
  const auto header = records.front();
  const std::size_t width = header.size();

  const std::size_t label_idx = column_index(header, schema.label_column);
  std::optional<std::size_t> group_idx;
  if (!schema.group_column.empty()) group_idx = column_index(header, schema.group_column);

  std::vector<std::size_t> feature_idx;
  if (schema.feature_columns.empty()) {
    for (std::size_t j = 0; j < width; ++j) {
      if (j != label_idx && (!group_idx || j != *group_idx)) feature_idx.push_back(j);
    }
  } else {
    for (const auto& name : schema.feature_columns) feature_idx.push_back(column_index(header, name));
  }
  if (feature_idx.empty()) throw Error(ErrorCode::MissingColumn, path.string() + ": no feature columns");

  const std::size_t n = records.size() - 1;
  std::vector<std::vector<double>> columns(feature_idx.size(), std::vector<double>(n, 0.0));
  std::vector<std::vector<char>> missing(feature_idx.size(), std::vector<char>(n, 0));
  std::vector<int> labels(n);
  std::vector<std::string> groups(n, "all");

  for (std::size_t r = 0; r < n; ++r) {
    const auto& rec = records[r + 1];
    const std::size_t line = r + 2;
    if (rec.size() != width) {
      throw Error(ErrorCode::MalformedCsv, path.string() + ":" + std::to_string(line) + ": expected " +
                                               std::to_string(width) + " fields, got " +
                                               std::to_string(rec.size()));
    }
    const auto label = detail::parse_real(rec[label_idx]);
    if (!label || (*label != 0.0 && *label != 1.0)) {
      throw Error(ErrorCode::BadLabel,
                  path.string() + ":" + std::to_string(line) + ": label '" + rec[label_idx] + "' is not 0 or 1");
    }
    labels[r] = static_cast<int>(*label);
    if (group_idx) groups[r] = rec[*group_idx];
    for (std::size_t j = 0; j < feature_idx.size(); ++j) {
      const auto& cell = rec[feature_idx[j]];
      if (detail::trim(cell).empty()) {
        if (schema.missing_policy == MissingPolicy::Reject) {
          throw Error(ErrorCode::MissingValueRejected, path.string() + ":" + std::to_string(line) +
                                                           ": missing value in '" + header[feature_idx[j]] + "'");
        }
        missing[j][r] = 1;
        continue;
      }
      const auto v = detail::parse_real(cell);
      if (!v || !std::isfinite(*v)) {
        throw Error(ErrorCode::MalformedCsv, path.string() + ":" + std::to_string(line) + ": '" + cell +
                                                 "' is not a finite number");
      }
      columns[j][r] = *v;
    }
  }

  // Expand: each column with any missing cell gets a 0/1 companion right after it.
  std::vector<std::string> names;
  std::vector<std::pair<std::size_t, bool>> layout;  // (column, is_indicator)
  for (std::size_t j = 0; j < feature_idx.size(); ++j) {
    names.push_back(header[feature_idx[j]]);
    layout.emplace_back(j, false);
    if (std::any_of(missing[j].begin(), missing[j].end(), [](char m) { return m != 0; })) {
      names.push_back(header[feature_idx[j]] + "_missing");
      layout.emplace_back(j, true);
    }
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(layout.size()));
  for (std::size_t c = 0; c < layout.size(); ++c) {
    const auto [j, is_indicator] = layout[c];
    for (std::size_t r = 0; r < n; ++r) {
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          is_indicator ? static_cast<double>(missing[j][r]) : columns[j][r];
    }
  }
  return Source(path.stem().string(), std::move(x), std::move(labels), std::move(groups), std::move(names));
}

void write_csv(const Source& source, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  for (const auto& name : source.feature_names()) out << detail::csv_escape(name) << ',';
  out << "label,group\n";
  const auto& x = source.features();
  for (std::size_t r = 0; r < source.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      out << detail::format_real(x(static_cast<Eigen::Index>(r), c)) << ',';
    }
    out << source.labels()[r] << ',' << detail::csv_escape(source.groups()[r]) << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// Splitting and sampling

std::vector<Fold> stratified_folds(const Source& source, const SplitSpec& spec) {
  if (spec.n_folds < 2) throw Error(ErrorCode::BadConfig, "n_folds must be at least 2");
  if (spec.n_repeats < 1) throw Error(ErrorCode::BadConfig, "n_repeats must be positive");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < source.rows(); ++i) by_class[source.labels()[i]].push_back(i);
  for (const auto& cls : by_class) {
    if (cls.size() < spec.n_folds) {
      throw Error(ErrorCode::TooFewExamples, "a label class has " + std::to_string(cls.size()) + " examples, need " +
                                                 std::to_string(spec.n_folds));
    }
  }

  std::vector<Fold> folds;
  folds.reserve(spec.n_folds * spec.n_repeats);
  for (std::size_t rep = 0; rep < spec.n_repeats; ++rep) {
    auto rng = make_rng(spec.seed, "stratified_folds", rep);
    std::vector<std::size_t> assignment(source.rows());
    // Round-robin over shuffled classes; the offset carries across classes so fold sizes differ by at most one.
    std::size_t offset = 0;
    for (auto cls : by_class) {
      std::shuffle(cls.begin(), cls.end(), rng);
      for (std::size_t i = 0; i < cls.size(); ++i) assignment[cls[i]] = (offset + i) % spec.n_folds;
      offset = (offset + cls.size()) % spec.n_folds;
    }
    for (std::size_t f = 0; f < spec.n_folds; ++f) {
      Fold fold{rep, f, {}, {}};
      for (std::size_t i = 0; i < source.rows(); ++i) {
        (assignment[i] == f ? fold.validation : fold.train).push_back(i);
      }
      folds.push_back(std::move(fold));
    }
  }
  return folds;
}

Source subsample(const Source& source, std::size_t n, std::uint64_t seed) {
  if (n > source.rows()) {
    throw Error(ErrorCode::NotEnoughRows, "cannot draw " + std::to_string(n) + " rows from '" + source.id() +
                                              "' with " + std::to_string(source.rows()));
  }
  std::vector<std::size_t> idx(source.rows());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto rng = make_rng(seed, "subsample");
  // Partial Fisher-Yates: the first n slots are a uniform sample without replacement.
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(n);
  return source.select(idx, source.id() + ":sub");
}

std::pair<Source, Source> split_rows(const Source& source, std::size_t n_first, std::uint64_t seed) {
  if (n_first > source.rows()) {
    throw Error(ErrorCode::NotEnoughRows, "cannot split " + std::to_string(n_first) + " rows from '" + source.id() + "'");
  }
  std::vector<std::size_t> idx(source.rows());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto rng = make_rng(seed, "split_rows");
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<std::size_t> first(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_first));
  std::vector<std::size_t> rest(idx.begin() + static_cast<std::ptrdiff_t>(n_first), idx.end());
  std::sort(first.begin(), first.end());
  std::sort(rest.begin(), rest.end());
  return {source.select(first, source.id() + ":a"), source.select(rest, source.id() + ":b")};
}

Source concat(std::span<const Source> sources) {
  if (sources.empty()) throw Error(ErrorCode::EmptySource, "concat needs at least one source");
  if (sources.size() == 1) return sources.front();
  const auto& names = sources.front().feature_names();
  Eigen::Index total = 0;
  std::string id;
  for (const auto& s : sources) {
    if (s.feature_names() != names) {
      throw Error(ErrorCode::SchemaMismatch, "'" + s.id() + "' does not share feature names with '" +
                                                 sources.front().id() + "'");
    }
    total += static_cast<Eigen::Index>(s.rows());
    if (!id.empty()) id += '+';
    id += s.id();
  }
  Eigen::MatrixXd x(total, static_cast<Eigen::Index>(names.size()));
  std::vector<int> y;
  std::vector<std::string> g;
  y.reserve(static_cast<std::size_t>(total));
  g.reserve(static_cast<std::size_t>(total));
  Eigen::Index at = 0;
  for (const auto& s : sources) {
    const auto r = static_cast<Eigen::Index>(s.rows());
    if (r > 0) x.middleRows(at, r) = s.features();
    at += r;
    y.insert(y.end(), s.labels().begin(), s.labels().end());
    g.insert(g.end(), s.groups().begin(), s.groups().end());
  }
  return Source(std::move(id), std::move(x), std::move(y), std::move(g), names);
}

}  // namespace srcsel
