#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "srcsel/dataset.hpp"
#include "srcsel/models.hpp"
#include "srcsel/synth.hpp"

namespace srcsel {

enum class DivergenceKind { ScoreX, ScoreXY, KlRatioX, KlRatioXY, NormativeEuclidean, KdePcaKL, ExactKL };

std::string_view to_string(DivergenceKind kind);
/// Accepts the CLI spellings: score_x, score_xy, kl_ratio_x, kl_ratio_xy, normative, kde_pca_kl, exact_kl.
DivergenceKind parse_divergence_kind(std::string_view name);

struct DivergenceEstimate {
  DivergenceKind kind = DivergenceKind::ScoreX;
  double value = 0.0;
  std::size_t n_p = 0;
  std::size_t n_q = 0;
  std::uint64_t seed = 0;
};

inline constexpr double kClipLow = 0.01;
inline constexpr double kClipHigh = 0.99;

/// Domain classifier options. The penalty is deliberately light: the fitted
/// logit is read as a log density ratio, and shrinkage biases it toward zero.
inline LogisticOptions domain_classifier_options() { return LogisticOptions{1e-3, 1e-6, 1000}; }

/// Probabilistic discriminator s_PQ: P rows are class 1, Q rows class 0.
/// When `uses_labels` the task label is appended as an extra feature column.
struct DomainClassifier {
  ScaledLogistic classifier;
  bool uses_labels = false;
  double clip_low = kClipLow;
  double clip_high = kClipHigh;
  std::size_t n_p = 0;
  std::size_t n_q = 0;
  std::uint64_t seed = 0;

  /// Clipped s(x) for every row of `source`.
  Eigen::VectorXd scores(const Source& source) const;
};

/// Classes are reweighted by inverse frequency so s targets the balanced posterior
/// P / (P + Q) even when |P| != |Q|.
DomainClassifier fit_domain_classifier(const Source& p, const Source& q, bool uses_labels, std::uint64_t seed,
                                       const LogisticOptions& options = domain_classifier_options());

/// E_{x in P}[s(x)], in [0.01, 0.99].
DivergenceEstimate score_distance(const DomainClassifier& clf, const Source& p);
/// E_{x in P}[log(s / (1 - s))], bounded by +-ln 99.
DivergenceEstimate kl_ratio(const DomainClassifier& clf, const Source& p);

/// Discrimination AUC of a domain classifier fitted on a random half of each
/// sample and scored on the other half.
double holdout_discrimination_auc(const Source& p, const Source& q, bool uses_labels, std::uint64_t seed,
                                  const LogisticOptions& options = domain_classifier_options());

// Normative summaries --------------------------------------------------------

struct GroupSummary {
  std::vector<std::string> groups;  // vocabulary, sorted
  std::vector<double> group_proportions;
  /// Mean label per group; groups absent from the sample take the overall rate.
  std::vector<double> group_outcome_rates;
  double overall_outcome_rate = 0.0;
};

/// Sorted union of the group ids appearing in the sources.
std::vector<std::string> group_vocabulary(std::span<const Source> sources);
GroupSummary summarize_groups(const Source& source, const std::vector<std::string>& vocabulary);

enum class NormativeFacet { Proportions, OutcomeRates, Both };

std::string_view to_string(NormativeFacet facet);

/// Euclidean distance over the chosen facet vector; `Both` concatenates the
/// proportions, the per-group outcome rates and the overall rate.
DivergenceEstimate normative_distance(const GroupSummary& a, const GroupSummary& b, NormativeFacet facet);

// Density-based KL -----------------------------------------------------------

struct KdePcaResult {
  DivergenceEstimate estimate;
  std::size_t components_used = 0;
  /// True when the pooled data had rank below the requested component count.
  bool reduced_components = false;
};

/// KL(P || Q) from Gaussian-kernel densities on whitened PCA projections of the
/// pooled standardized features. Bandwidths follow Scott's rule per projected
/// dimension and per sample. Both densities leave out the evaluation point: P's
/// own row, and in Q one row exactly equal to it if there is one.
KdePcaResult kde_pca_kl(const Source& p, const Source& q, std::size_t n_components = 3,
                        double density_floor = 1e-12);

enum class KlEstimator { KlRatio, KdePca };

/// KL(big || ref) - KL(small || ref); positive values argue against the addition.
double excess_kl(const Source& big, const Source& small, const Source& ref, KlEstimator estimator,
                 std::uint64_t seed);

/// sum p_i ln(p_i / q_i) with 0 ln 0 = 0.
double exact_kl(std::span<const double> p, std::span<const double> q);

struct EstimatorOptions {
  LogisticOptions domain = domain_classifier_options();
  NormativeFacet facet = NormativeFacet::Both;
  std::size_t kde_components = 3;
};

/// delta(P, Q) for any sample-based kind. The normative kind uses the union of
/// both samples' group ids as vocabulary.
DivergenceEstimate estimate_divergence(DivergenceKind kind, const Source& p, const Source& q, std::uint64_t seed,
                                       const EstimatorOptions& options = {});

}  // namespace srcsel
