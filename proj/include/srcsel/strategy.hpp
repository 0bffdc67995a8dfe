#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "srcsel/dataset.hpp"
#include "srcsel/divergence.hpp"
#include "srcsel/eval.hpp"

namespace srcsel {

struct StrategyConfig {
  ExperimentConfig experiment;
  EstimatorOptions estimator;
  /// Rows held out from each source as its test set.
  std::size_t test_size = 400;
  /// If non-zero, the reference's training split is subsampled to this many rows.
  std::size_t reference_train_size = 0;
  /// Re-rank the remaining candidates against the growing training pool after every pick.
  bool recompute_heuristic = false;
  std::uint64_t seed = 42;
};

struct SourceSplit {
  Source train;
  Source test;
};

/// Holds out `test_size` rows (id suffix ":test") and keeps the rest for training (":train").
/// At least one training row must remain.
SourceSplit split_source(const Source& source, std::size_t test_size, std::uint64_t seed);

struct AdditionOutcome {
  double delta_auc = 0.0;
  ExperimentResult base;
  ExperimentResult augmented;
};

/// AUC(train = reference_train + candidate) - AUC(train = reference_train), both on
/// reference_test with the same folds and seeds.
AdditionOutcome evaluate_addition(const Source& reference_train, const Source& candidate,
                                  const Source& reference_test, const ExperimentConfig& config);

/// AUC(train = candidate) - AUC(train = reference_train), both on reference_test.
AdditionOutcome ood_auc_delta(const Source& candidate, const Source& reference_train, const Source& reference_test,
                              const ExperimentConfig& config);

struct RankingEntry {
  std::string id;
  double value = 0.0;
  std::size_t rank = 0;  // 1-based
};

struct CandidateRanking {
  std::string reference_id;
  std::vector<RankingEntry> entries;  // ascending by value, ties by id
  DivergenceKind metric = DivergenceKind::ScoreXY;
  std::uint64_t seed = 0;
};

/// delta(candidate, reference) for every candidate (candidate is P, reference is Q), sorted ascending.
CandidateRanking rank_candidates(const Source& reference, std::span<const Source> candidates, DivergenceKind metric,
                                 std::uint64_t seed, const EstimatorOptions& options = {});

/// Orders the entries by value then id and assigns ranks. Exposed for the invariance tests.
void sort_ranking(CandidateRanking& ranking);

enum class Strategy { ReferenceOnly, BestK, WorstK, MixtureBaseline };

std::string_view to_string(Strategy s);

struct StrategyOutcome {
  Strategy strategy = Strategy::ReferenceOnly;
  std::size_t k = 0;
  std::vector<std::string> added_ids;
  std::size_t added_rows = 0;
  ExperimentResult result;
};

/// Greedy picks: BestK repeatedly adds the closest remaining candidate, WorstK
/// the furthest. The mixture arm samples the same number of added rows evenly
/// across all candidates. Every arm is evaluated on the same reference test set.
std::vector<StrategyOutcome> compare_strategies(const Source& reference_train, const Source& reference_test,
                                                std::span<const Source> candidates, std::size_t k,
                                                DivergenceKind metric, const StrategyConfig& config);

/// Heuristic identity used in the correlation study.
struct HeuristicSpec {
  DivergenceKind kind = DivergenceKind::ScoreXY;
  NormativeFacet facet = NormativeFacet::Both;

  std::string label() const;
};

struct PairRecord {
  std::string candidate;
  std::string reference;
  double ood_delta = 0.0;
  std::optional<double> addition_delta;
  std::vector<double> heuristics;  // aligned with CorrelationStudy::heuristics
};

struct CorrelationRow {
  std::string metric;
  Correlation correlation;
};

struct CorrelationStudy {
  std::vector<HeuristicSpec> heuristics;
  std::vector<PairRecord> pairs;
  /// One row per heuristic: Pearson(heuristic, ood_delta) over all ordered pairs.
  std::vector<CorrelationRow> table;
  /// Pearson(ood_delta, addition_delta) when additions were evaluated.
  std::optional<Correlation> ood_vs_addition;
};

/// For every ordered pair (candidate i, reference j), i != j: the OOD AUC delta
/// of training on i's split instead of j's, every heuristic delta(train_i, train_j),
/// and optionally the data-addition delta.
CorrelationStudy correlation_study(std::span<const Source> sources, std::span<const HeuristicSpec> heuristics,
                                   const StrategyConfig& config, bool with_addition = false);

struct DistanceMatrix {
  std::vector<std::string> ids;
  DivergenceKind metric = DivergenceKind::ScoreXY;
  /// values[i][j] = delta(P = source i, Q = source j); the diagonal is not estimated (NaN).
  std::vector<std::vector<double>> values;
  std::vector<DivergenceEstimate> estimates;  // off-diagonal, row-major
};

DistanceMatrix pairwise_distances(std::span<const Source> sources, DivergenceKind metric, std::uint64_t seed,
                                  const EstimatorOptions& options = {});

nlohmann::json to_json(const CandidateRanking& ranking);
nlohmann::json to_json(const StrategyOutcome& outcome);

}  // namespace srcsel
