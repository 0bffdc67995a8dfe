#include "srcsel/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "srcsel/error.hpp"
#include "srcsel/eval.hpp"
#include "srcsel/seed.hpp"

namespace srcsel {

std::string_view to_string(DivergenceKind kind) {
  switch (kind) {
    case DivergenceKind::ScoreX: return "score_x";
    case DivergenceKind::ScoreXY: return "score_xy";
    case DivergenceKind::KlRatioX: return "kl_ratio_x";
    case DivergenceKind::KlRatioXY: return "kl_ratio_xy";
    case DivergenceKind::NormativeEuclidean: return "normative";
    case DivergenceKind::KdePcaKL: return "kde_pca_kl";
    case DivergenceKind::ExactKL: return "exact_kl";
  }
  return "unknown";
}

DivergenceKind parse_divergence_kind(std::string_view name) {
  for (auto k : {DivergenceKind::ScoreX, DivergenceKind::ScoreXY, DivergenceKind::KlRatioX, DivergenceKind::KlRatioXY,
                 DivergenceKind::NormativeEuclidean, DivergenceKind::KdePcaKL, DivergenceKind::ExactKL}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorCode::BadConfig, "unknown divergence metric '" + std::string(name) + "'");
}

std::string_view to_string(NormativeFacet facet) {
  switch (facet) {
    case NormativeFacet::Proportions: return "proportions";
    case NormativeFacet::OutcomeRates: return "outcome_rates";
    case NormativeFacet::Both: return "both";
  }
  return "unknown";
}

namespace {

Eigen::MatrixXd domain_features(const Source& s, bool uses_labels) {
  if (!uses_labels) return s.features();
  Eigen::MatrixXd x(s.features().rows(), s.features().cols() + 1);
  x.leftCols(s.features().cols()) = s.features();
  x.col(s.features().cols()) = s.label_vector();
  return x;
}

void require_compatible(const Source& p, const Source& q) {
  if (p.empty() || q.empty()) throw Error(ErrorCode::EmptySource, "domain classifier needs non-empty P and Q");
  if (p.feature_names() != q.feature_names()) {
    throw Error(ErrorCode::SchemaMismatch, "'" + p.id() + "' and '" + q.id() + "' have different features");
  }
}

}  // namespace

Eigen::VectorXd DomainClassifier::scores(const Source& source) const {
  Eigen::VectorXd s = classifier.predict_proba(domain_features(source, uses_labels));
  return s.cwiseMax(clip_low).cwiseMin(clip_high);
}

DomainClassifier fit_domain_classifier(const Source& p, const Source& q, bool uses_labels, std::uint64_t seed,
                                       const LogisticOptions& options) {
  require_compatible(p, q);
  const Eigen::Index np = static_cast<Eigen::Index>(p.rows());
  const Eigen::Index nq = static_cast<Eigen::Index>(q.rows());
  const Eigen::Index n = np + nq;
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(p.dims() + (uses_labels ? 1 : 0)));
  x.topRows(np) = domain_features(p, uses_labels);
  x.bottomRows(nq) = domain_features(q, uses_labels);
  Eigen::VectorXd y(n);
  y.head(np).setOnes();
  y.tail(nq).setZero();
  Eigen::VectorXd w(n);
  w.head(np).setConstant(static_cast<double>(n) / (2.0 * static_cast<double>(np)));
  w.tail(nq).setConstant(static_cast<double>(n) / (2.0 * static_cast<double>(nq)));

  DomainClassifier clf;
  clf.classifier = fit_scaled_logistic(x, y, options, w);
  clf.uses_labels = uses_labels;
  clf.n_p = p.rows();
  clf.n_q = q.rows();
  clf.seed = seed;
  return clf;
}

DivergenceEstimate score_distance(const DomainClassifier& clf, const Source& p) {
  if (p.empty()) throw Error(ErrorCode::EmptySource, "score over an empty sample");
  const Eigen::VectorXd s = clf.scores(p);
  return {clf.uses_labels ? DivergenceKind::ScoreXY : DivergenceKind::ScoreX, s.mean(), clf.n_p, clf.n_q, clf.seed};
}

DivergenceEstimate kl_ratio(const DomainClassifier& clf, const Source& p) {
  if (p.empty()) throw Error(ErrorCode::EmptySource, "KL over an empty sample");
  const Eigen::VectorXd s = clf.scores(p);
  const double value = (s.array() / (1.0 - s.array())).log().mean();
  return {clf.uses_labels ? DivergenceKind::KlRatioXY : DivergenceKind::KlRatioX, value, clf.n_p, clf.n_q, clf.seed};
}

double holdout_discrimination_auc(const Source& p, const Source& q, bool uses_labels, std::uint64_t seed,
                                  const LogisticOptions& options) {
  require_compatible(p, q);
  const auto [p_fit, p_eval] = split_rows(p, p.rows() / 2, derive_seed(seed, "holdout_p"));
  const auto [q_fit, q_eval] = split_rows(q, q.rows() / 2, derive_seed(seed, "holdout_q"));
  const auto clf = fit_domain_classifier(p_fit, q_fit, uses_labels, seed, options);
  const Eigen::VectorXd sp = clf.classifier.predict_proba(domain_features(p_eval, uses_labels));
  const Eigen::VectorXd sq = clf.classifier.predict_proba(domain_features(q_eval, uses_labels));
  std::vector<double> scores(sp.data(), sp.data() + sp.size());
  scores.insert(scores.end(), sq.data(), sq.data() + sq.size());
  std::vector<int> labels(static_cast<std::size_t>(sp.size()), 1);
  labels.insert(labels.end(), static_cast<std::size_t>(sq.size()), 0);
  return auc(scores, labels);
}

// ---------------------------------------------------------------------------

std::vector<std::string> group_vocabulary(std::span<const Source> sources) {
  std::set<std::string> all;
  for (const auto& s : sources) all.insert(s.groups().begin(), s.groups().end());
  return {all.begin(), all.end()};
}

GroupSummary summarize_groups(const Source& source, const std::vector<std::string>& vocabulary) {
  if (source.empty()) throw Error(ErrorCode::EmptySource, "cannot summarize an empty source");
  GroupSummary g;
  g.groups = vocabulary;
  std::sort(g.groups.begin(), g.groups.end());
  std::vector<double> count(g.groups.size(), 0.0), positives(g.groups.size(), 0.0);
  for (std::size_t i = 0; i < source.rows(); ++i) {
    auto it = std::lower_bound(g.groups.begin(), g.groups.end(), source.groups()[i]);
    if (it == g.groups.end() || *it != source.groups()[i]) {
      throw Error(ErrorCode::GroupVocabularyMismatch, "group '" + source.groups()[i] + "' not in vocabulary");
    }
    const auto k = static_cast<std::size_t>(it - g.groups.begin());
    count[k] += 1.0;
    positives[k] += source.labels()[i];
  }
  const double n = static_cast<double>(source.rows());
  g.overall_outcome_rate = source.positive_rate();
  for (std::size_t k = 0; k < g.groups.size(); ++k) {
    g.group_proportions.push_back(count[k] / n);
    g.group_outcome_rates.push_back(count[k] > 0 ? positives[k] / count[k] : g.overall_outcome_rate);
  }
  return g;
}

DivergenceEstimate normative_distance(const GroupSummary& a, const GroupSummary& b, NormativeFacet facet) {
  if (a.groups != b.groups) throw Error(ErrorCode::GroupVocabularyMismatch, "summaries use different group sets");
  double ss = 0.0;
  auto add = [&ss](const std::vector<double>& u, const std::vector<double>& v) {
    for (std::size_t i = 0; i < u.size(); ++i) ss += (u[i] - v[i]) * (u[i] - v[i]);
  };
  if (facet != NormativeFacet::OutcomeRates) add(a.group_proportions, b.group_proportions);
  if (facet != NormativeFacet::Proportions) {
    add(a.group_outcome_rates, b.group_outcome_rates);
    if (facet == NormativeFacet::Both) {
      ss += (a.overall_outcome_rate - b.overall_outcome_rate) * (a.overall_outcome_rate - b.overall_outcome_rate);
    }
  }
  return {DivergenceKind::NormativeEuclidean, std::sqrt(ss), 0, 0, 0};
}

// ---------------------------------------------------------------------------

namespace {

struct DiagonalKde {
  const Eigen::MatrixXd* points = nullptr;  // rows = samples
  Eigen::VectorXd inv_bandwidth;
  double log_norm = 0.0;  // -log((2 pi)^{c/2} prod h)

  static DiagonalKde fit(const Eigen::MatrixXd& pts) {
    DiagonalKde k;
    k.points = &pts;
    const Eigen::Index c = pts.cols();
    const double n = static_cast<double>(pts.rows());
    const double factor = std::pow(n, -1.0 / (static_cast<double>(c) + 4.0));
    k.inv_bandwidth.resize(c);
    double log_h = 0.0;
    for (Eigen::Index j = 0; j < c; ++j) {
      const double mu = pts.col(j).mean();
      double sd = std::sqrt((pts.col(j).array() - mu).square().sum() / std::max(1.0, n - 1.0));
      if (!(sd > 1e-12)) sd = 1.0;
      const double h = sd * factor;
      k.inv_bandwidth[j] = 1.0 / h;
      log_h += std::log(h);
    }
    k.log_norm = -0.5 * static_cast<double>(c) * std::log(2.0 * std::numbers::pi) - log_h;
    return k;
  }

  /// Mean kernel value at x, skipping row `skip` (pass -1 to keep every row).
  double density(const Eigen::RowVectorXd& x, Eigen::Index skip) const {
    const auto& pts = *points;
    double total = 0.0;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      if (i == skip) continue;
      const double q = ((pts.row(i) - x).array() * inv_bandwidth.transpose().array()).square().sum();
      total += std::exp(-0.5 * q);
    }
    const double count = static_cast<double>(pts.rows() - (skip >= 0 ? 1 : 0));
    if (count <= 0) return 0.0;
    return std::exp(log_norm) * total / count;
  }

  /// Index of the first row equal to x, or -1.
  Eigen::Index first_match(const Eigen::RowVectorXd& x) const {
    for (Eigen::Index i = 0; i < points->rows(); ++i) {
      if (points->row(i) == x) return i;
    }
    return -1;
  }
};

}  // namespace

KdePcaResult kde_pca_kl(const Source& p, const Source& q, std::size_t n_components, double density_floor) {
  require_compatible(p, q);
  if (n_components < 1) throw Error(ErrorCode::BadConfig, "n_components must be positive");
  const Eigen::Index np = static_cast<Eigen::Index>(p.rows());
  const Eigen::Index nq = static_cast<Eigen::Index>(q.rows());
  if (static_cast<std::size_t>(np + nq) < 10 * n_components) {
    throw Error(ErrorCode::TooFewExamples, "KDE-PCA needs at least 10 pooled rows per component");
  }
  if (np < 2) throw Error(ErrorCode::TooFewExamples, "KDE-PCA needs at least two P rows");

  Eigen::MatrixXd pooled(np + nq, static_cast<Eigen::Index>(p.dims()));
  pooled.topRows(np) = p.features();
  pooled.bottomRows(nq) = q.features();
  const Eigen::MatrixXd z = apply_scaler(fit_scaler(pooled), pooled);
  const Eigen::MatrixXd cov = (z.transpose() * z) / static_cast<double>(z.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd& values = eig.eigenvalues();  // ascending
  const double top = values.maxCoeff();
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i) rank += values[i] > 1e-9 * std::max(top, 1e-300) ? 1 : 0;
  if (rank == 0 || !(top > 0.0)) throw Error(ErrorCode::DegenerateCovariance, "pooled features have zero variance");

  KdePcaResult result;
  result.components_used = std::min(n_components, rank);
  result.reduced_components = result.components_used < n_components;
  const auto c = static_cast<Eigen::Index>(result.components_used);
  Eigen::MatrixXd basis(z.cols(), c);
  for (Eigen::Index k = 0; k < c; ++k) {
    const Eigen::Index src = values.size() - 1 - k;
    basis.col(k) = eig.eigenvectors().col(src) / std::sqrt(values[src]);
  }
  const Eigen::MatrixXd proj = z * basis;
  const Eigen::MatrixXd proj_p = proj.topRows(np);
  const Eigen::MatrixXd proj_q = proj.bottomRows(nq);
  const auto kde_p = DiagonalKde::fit(proj_p);
  const auto kde_q = DiagonalKde::fit(proj_q);

  double total = 0.0;
  for (Eigen::Index i = 0; i < np; ++i) {
    const Eigen::RowVectorXd x = proj_p.row(i);
    const double dp = std::max(kde_p.density(x, i), density_floor);
    // A Q row sitting exactly on x is the evaluation point itself (P and Q share
    // rows); drop it as well so both densities exclude the self-kernel.
    const double dq = std::max(kde_q.density(x, kde_q.first_match(x)), density_floor);
    total += std::log(dp / dq);
  }
  result.estimate = {DivergenceKind::KdePcaKL, total / static_cast<double>(np), p.rows(), q.rows(), 0};
  return result;
}

double exact_kl(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error(ErrorCode::DimensionMismatch, "pmfs have different support sizes");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) {
      throw Error(ErrorCode::AbsoluteContinuityViolation, "p has mass on atom " + std::to_string(i) + " where q = 0");
    }
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

double excess_kl(const Source& big, const Source& small, const Source& ref, KlEstimator estimator,
                 std::uint64_t seed) {
  const auto kind = estimator == KlEstimator::KlRatio ? DivergenceKind::KlRatioX : DivergenceKind::KdePcaKL;
  const double kl_big = estimate_divergence(kind, big, ref, derive_seed(seed, "excess_kl")).value;
  const double kl_small = estimate_divergence(kind, small, ref, derive_seed(seed, "excess_kl")).value;
  return kl_big - kl_small;
}

DivergenceEstimate estimate_divergence(DivergenceKind kind, const Source& p, const Source& q, std::uint64_t seed,
                                       const EstimatorOptions& options) {
  switch (kind) {
    case DivergenceKind::ScoreX:
    case DivergenceKind::ScoreXY: {
      const auto clf = fit_domain_classifier(p, q, kind == DivergenceKind::ScoreXY, seed, options.domain);
      return score_distance(clf, p);
    }
    case DivergenceKind::KlRatioX:
    case DivergenceKind::KlRatioXY: {
      const auto clf = fit_domain_classifier(p, q, kind == DivergenceKind::KlRatioXY, seed, options.domain);
      return kl_ratio(clf, p);
    }
    case DivergenceKind::NormativeEuclidean: {
      const Source both[] = {p, q};
      const auto vocab = group_vocabulary(both);
      auto est = normative_distance(summarize_groups(p, vocab), summarize_groups(q, vocab), options.facet);
      est.n_p = p.rows();
      est.n_q = q.rows();
      est.seed = seed;
      return est;
    }
    case DivergenceKind::KdePcaKL: {
      auto est = kde_pca_kl(p, q, options.kde_components).estimate;
      est.seed = seed;
      return est;
    }
    case DivergenceKind::ExactKL:
      break;
  }
  throw Error(ErrorCode::BadConfig, "exact_kl needs probability vectors, not samples");
}

}  // namespace srcsel
