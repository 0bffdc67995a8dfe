#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "srcsel/dataset.hpp"
#include "srcsel/divergence.hpp"
#include "srcsel/synth.hpp"

namespace srcsel {

enum class AccumulationMode { Sequential, Mixture };

struct AccumulationPlan {
  AccumulationMode mode = AccumulationMode::Sequential;
  /// Sequential: source ids in the order they are exhausted.
  /// Mixture: ids the weights refer to; empty means the order of `sources`.
  std::vector<std::string> order;
  std::vector<double> weights;
  std::size_t target_n = 0;
  std::uint64_t seed = 42;
};

struct TrainingSet {
  Source data;
  /// Rows contributed by each source, aligned with the `sources` argument.
  std::vector<std::size_t> contributed;
  /// Realized mixture weights contributed / target_n, aligned with `sources`.
  std::vector<double> alpha;
};

/// Sequential plans exhaust sources in order and take a seeded uniform subset
/// of the last one; mixture plans allocate target_n by largest remainder and
/// sample without replacement inside each source. Both draw prefixes of a fixed
/// per-source permutation, so training sets are nested as target_n grows.
TrainingSet build_training_set(std::span<const Source> sources, const AccumulationPlan& plan);

struct TrajectoryPoint {
  std::size_t n = 0;
  DivergenceEstimate estimate;
};

std::vector<TrajectoryPoint> divergence_trajectory(std::span<const Source> sources, const AccumulationPlan& plan,
                                                   const Source& test, DivergenceKind metric,
                                                   std::span<const std::size_t> grid,
                                                   const EstimatorOptions& options = {});

struct LemmaCheckResult {
  std::size_t n = 0;
  std::size_t k = 0;  // number of sources in use (1-based index of the last one)
  double delta_train_n = 0.0;
  double delta_train_prev = 0.0;  // training set without source k
  double delta_source_k = 0.0;
  double c = 0.0;  // Jensen gap: sum alpha_i delta_i - delta_train_n
  bool condition_holds = false;
  bool divergence_increased = false;
};

/// sum_i weights[i] * pmfs[i].
Pmf mixture_pmf(std::span<const Pmf> pmfs, std::span<const double> weights);

/// Evaluates the sufficient condition for train/test KL to grow when the k-th
/// source is added sequentially, with exact pmfs:
///   condition:  delta(S_k) - c n / n_k >= delta(train_n)
///   conclusion: delta(train_n) >= delta(train_{n - n_k})
/// `order` indexes scenario.source_pmfs; n must reach into at least the second source.
LemmaCheckResult check_lemma_condition(const DiscreteScenario& scenario, std::span<const std::size_t> order,
                                       std::size_t n);

/// Train/test divergence under the linear-composition toy model of two sources.
double example1_linear_composition(double delta_s1, double delta_s2, std::size_t n1, std::size_t n);

}  // namespace srcsel
