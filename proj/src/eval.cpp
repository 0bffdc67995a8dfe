#include "srcsel/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "srcsel/error.hpp"

namespace srcsel {

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::Auc: return "auc";
    case Metric::Accuracy: return "accuracy";
    case Metric::WorstGroupAccuracy: return "worst_group_accuracy";
    case Metric::Disparity: return "disparity";
  }
  return "unknown";
}

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw Error(ErrorCode::DimensionMismatch, "scores and labels differ in length");
}

}  // namespace

double auc(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores.size(), labels.size());
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks i+1..j share their average.
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        rank_sum_pos += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw Error(ErrorCode::SingleClass, "AUC needs both classes");
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double accuracy_at_threshold(std::span<const double> scores, std::span<const int> labels, double threshold) {
  check_lengths(scores.size(), labels.size());
  if (scores.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const int pred = scores[i] >= threshold ? 1 : 0;
    correct += pred == labels[i] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

double balanced_accuracy_at_threshold(std::span<const double> scores, std::span<const int> labels, double threshold) {
  check_lengths(scores.size(), labels.size());
  std::size_t tp = 0, tn = 0, pos = 0, neg = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == 1) {
      ++pos;
      tp += predicted ? 1 : 0;
    } else {
      ++neg;
      tn += predicted ? 0 : 1;
    }
  }
  if (pos == 0 || neg == 0) throw Error(ErrorCode::SingleClass, "balanced accuracy needs both classes");
  return 0.5 * (static_cast<double>(tp) / static_cast<double>(pos) + static_cast<double>(tn) / static_cast<double>(neg));
}

GroupAccuracies group_accuracies(std::span<const double> scores, std::span<const int> labels,
                                 std::span<const std::string> groups, double threshold,
                                 std::size_t min_group_size) {
  check_lengths(scores.size(), labels.size());
  check_lengths(scores.size(), groups.size());
  std::map<std::string, std::pair<std::size_t, std::size_t>> tally;  // (correct, total)
  for (std::size_t i = 0; i < scores.size(); ++i) {
    auto& [correct, total] = tally[groups[i]];
    correct += ((scores[i] >= threshold ? 1 : 0) == labels[i]) ? 1 : 0;
    ++total;
  }
  GroupAccuracies out;
  for (const auto& [g, ct] : tally) {
    if (ct.second < min_group_size) {
      out.excluded.push_back(g);
      continue;
    }
    out.accuracy[g] = static_cast<double>(ct.first) / static_cast<double>(ct.second);
    out.sizes[g] = ct.second;
  }
  return out;
}

WorstGroup worst_group_accuracy(std::span<const double> scores, std::span<const int> labels,
                                std::span<const std::string> groups, double threshold,
                                std::size_t min_group_size) {
  auto ga = group_accuracies(scores, labels, groups, threshold, min_group_size);
  if (ga.accuracy.empty()) throw Error(ErrorCode::NoEligibleGroups, "no group reaches the minimum size");
  WorstGroup worst;
  worst.accuracy = 2.0;
  // std::map iterates in id order, so strict < keeps the smallest id on ties.
  for (const auto& [g, acc] : ga.accuracy) {
    if (acc < worst.accuracy) {
      worst.group = g;
      worst.accuracy = acc;
    }
  }
  worst.excluded = std::move(ga.excluded);
  return worst;
}

double disparity(std::span<const double> scores, std::span<const int> labels, std::span<const std::string> groups,
                 double threshold, std::size_t min_group_size) {
  const auto ga = group_accuracies(scores, labels, groups, threshold, min_group_size);
  if (ga.accuracy.empty()) throw Error(ErrorCode::NoEligibleGroups, "no group reaches the minimum size");
  const auto [lo, hi] = std::minmax_element(ga.accuracy.begin(), ga.accuracy.end(),
                                            [](const auto& a, const auto& b) { return a.second < b.second; });
  return hi->second - lo->second;
}

double choose_threshold(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores.size(), labels.size());
  if (scores.empty()) throw Error(ErrorCode::SingleClass, "empty validation set");
  double best_t = 0.5;
  double best_ba = -1.0;
  for (int k = 0; k <= 100; ++k) {
    const double t = k / 100.0;
    const double ba = balanced_accuracy_at_threshold(scores, labels, t);
    const bool better = ba > best_ba;
    const bool tie_closer = ba == best_ba && std::abs(t - 0.5) < std::abs(best_t - 0.5);
    if (better || tie_closer) {
      best_ba = ba;
      best_t = t;
    }
  }
  return best_t;
}

Correlation pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::DimensionMismatch, "pearson inputs differ in length");
  const std::size_t n = x.size();
  if (n < 3) throw Error(ErrorCode::DegenerateVariance, "pearson needs at least 3 points");
  const double nd = static_cast<double>(n);
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / nd;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / nd;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw Error(ErrorCode::DegenerateVariance, "an input has zero variance");
  Correlation c;
  c.n = n;
  c.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = nd - 2.0;
  const double denom = 1.0 - c.r * c.r;
  if (denom <= 0.0) {
    c.p = 0.0;
    return c;
  }
  const double t = c.r * std::sqrt(df / denom);
  boost::math::students_t dist(df);
  c.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
  return c;
}

// ---------------------------------------------------------------------------

double ExperimentResult::mean_of(Metric m) const {
  auto it = mean.find(m);
  if (it == mean.end()) throw Error(ErrorCode::EmptyResults, std::string("no records for ") + std::string(to_string(m)));
  return it->second;
}

double ExperimentResult::stderr_of(Metric m) const {
  auto it = std_error.find(m);
  if (it == std_error.end()) {
    throw Error(ErrorCode::EmptyResults, std::string("no records for ") + std::string(to_string(m)));
  }
  return it->second;
}

std::vector<double> ExperimentResult::repeat_means(Metric m) const {
  std::map<std::size_t, std::pair<double, std::size_t>> acc;
  for (const auto& r : records) {
    if (r.metric != m) continue;
    auto& [sum, count] = acc[r.repeat];
    sum += r.value;
    ++count;
  }
  std::vector<double> out;
  out.reserve(acc.size());
  for (const auto& [rep, sc] : acc) out.push_back(sc.first / static_cast<double>(sc.second));
  return out;
}

void aggregate(ExperimentResult& result) {
  result.mean.clear();
  result.std_error.clear();
  for (Metric m : {Metric::Auc, Metric::Accuracy, Metric::WorstGroupAccuracy, Metric::Disparity}) {
    const auto means = result.repeat_means(m);
    if (means.empty()) continue;
    const double n = static_cast<double>(means.size());
    const double mu = std::accumulate(means.begin(), means.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : means) ss += (v - mu) * (v - mu);
    result.mean[m] = mu;
    result.std_error[m] = means.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
  }
}

ExperimentResult run_experiment(const Source& train_pool, const Source& test, const ExperimentConfig& config) {
  if (train_pool.feature_names() != test.feature_names()) {
    throw Error(ErrorCode::SchemaMismatch, "train pool and test source have different features");
  }
  if (test.empty()) throw Error(ErrorCode::EmptySource, "test source is empty");
  const auto folds = stratified_folds(train_pool, config.split);
  const Eigen::VectorXd y = train_pool.label_vector();
  const auto& x = train_pool.features();

  ExperimentResult result;
  result.n_repeats = config.split.n_repeats;

  std::size_t at = 0;
  while (at < folds.size()) {
    const std::size_t rep = folds[at].repeat;
    std::vector<Eigen::VectorXd> test_scores;
    std::vector<double> val_scores;
    std::vector<int> val_labels;
    std::size_t end = at;
    for (; end < folds.size() && folds[end].repeat == rep; ++end) {
      const auto& fold = folds[end];
      const Eigen::Index nt = static_cast<Eigen::Index>(fold.train.size());
      Eigen::MatrixXd xt(nt, x.cols());
      Eigen::VectorXd yt(nt);
      for (Eigen::Index i = 0; i < nt; ++i) {
        xt.row(i) = x.row(static_cast<Eigen::Index>(fold.train[static_cast<std::size_t>(i)]));
        yt[i] = y[static_cast<Eigen::Index>(fold.train[static_cast<std::size_t>(i)])];
      }
      const auto model = fit_scaled_logistic(xt, yt, config.model);

      Eigen::MatrixXd xv(static_cast<Eigen::Index>(fold.validation.size()), x.cols());
      for (std::size_t i = 0; i < fold.validation.size(); ++i) {
        xv.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(fold.validation[i]));
        val_labels.push_back(train_pool.labels()[fold.validation[i]]);
      }
      const Eigen::VectorXd pv = model.predict_proba(xv);
      val_scores.insert(val_scores.end(), pv.data(), pv.data() + pv.size());
      test_scores.push_back(model.predict_proba(test.features()));
    }
    const double threshold = choose_threshold(val_scores, val_labels);

    for (std::size_t k = 0; k < test_scores.size(); ++k) {
      const std::size_t fold_idx = folds[at + k].fold;
      std::span<const double> s(test_scores[k].data(), static_cast<std::size_t>(test_scores[k].size()));
      result.records.push_back({Metric::Auc, auc(s, test.labels()), fold_idx, rep, std::nullopt, {}});
      result.records.push_back(
          {Metric::Accuracy, accuracy_at_threshold(s, test.labels(), threshold), fold_idx, rep, threshold, {}});
      const auto ga = group_accuracies(s, test.labels(), test.groups(), threshold, config.min_group_size);
      if (ga.accuracy.empty()) continue;  // no eligible group: group metrics are undefined for this test set
      double lo = 2.0, hi = -1.0;
      for (const auto& [g, a] : ga.accuracy) {
        lo = std::min(lo, a);
        hi = std::max(hi, a);
      }
      result.records.push_back({Metric::WorstGroupAccuracy, lo, fold_idx, rep, threshold, ga.sizes});
      result.records.push_back({Metric::Disparity, hi - lo, fold_idx, rep, threshold, ga.sizes});
    }
    at = end;
  }
  aggregate(result);
  return result;
}

nlohmann::json to_json(const ExperimentResult& result) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : result.records) {
    nlohmann::json rec = {{"metric", to_string(r.metric)}, {"value", r.value}, {"fold", r.fold}, {"repeat", r.repeat}};
    rec["threshold"] = r.threshold ? nlohmann::json(*r.threshold) : nlohmann::json(nullptr);
    if (!r.group_sizes.empty()) rec["group_sizes"] = r.group_sizes;
    records.push_back(std::move(rec));
  }
  nlohmann::json summary = nlohmann::json::object();
  for (const auto& [m, v] : result.mean) {
    summary[std::string(to_string(m))] = {{"mean", v}, {"stderr", result.std_error.at(m)}};
  }
  return {{"n_repeats", result.n_repeats}, {"summary", summary}, {"records", records}};
}

}  // namespace srcsel
