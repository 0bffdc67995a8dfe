#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "srcsel/dataset.hpp"

namespace srcsel {

/// Multi-source Gaussian generator with independently controllable covariate
/// shift (mean_shifts, cov_scale) and concept shift (label_flip_rate).
///
/// Source i draws x ~ N(mean_shifts[i], cov_scale[i] * I), then
///   logit = label_weights . x + label_intercept + interaction_coef * x[a] * x[b]
/// with (a, b) = interaction_features, y ~ Bernoulli(sigmoid(logit)), and each
/// label is flipped with probability label_flip_rate[i]. The interaction term
/// makes the best linear model depend on where a source sits, so covariate
/// shift can hurt a linear task model.
///
/// Groups come from feature `group_feature`, cut at the standard-normal
/// quantiles k / n_groups; ids are "g0", "g1", ...
struct GaussianScenario {
  std::size_t d = 2;
  std::vector<std::vector<double>> mean_shifts;  // one row per source; empty row = no shift
  std::vector<double> cov_scale{1.0};            // size 1 (broadcast) or n_sources
  std::vector<double> label_weights;             // size d
  double label_intercept = 0.0;
  double interaction_coef = 0.0;
  std::pair<std::size_t, std::size_t> interaction_features{0, 1};
  std::vector<double> label_flip_rate{0.0};  // size 1 (broadcast) or n_sources
  std::size_t n_groups = 2;
  std::size_t group_feature = 0;
  std::vector<std::size_t> sizes;  // one per source
  std::uint64_t seed = 42;
  /// Source ids; defaults to S00, S01, ...
  std::vector<std::string> ids;

  std::size_t n_sources() const noexcept { return sizes.size(); }
};

void validate(const GaussianScenario& scenario);
std::vector<Source> generate_gaussian_sources(const GaussianScenario& scenario);
/// One extra draw of `n` rows from source `index`'s process, independent of the main draw.
Source draw_gaussian_source(const GaussianScenario& scenario, std::size_t index, std::size_t n, std::uint64_t seed,
                            std::string id);

struct SineToy {
  std::vector<Source> train_sequence;  // {A, B}
  Source test;                         // drawn from A's process
};

/// Features are the degree-5 polynomial expansion of x ~ U[0, pi]; labels are
/// 1[y > 0] with y_A = sin(x) + noise and y_B = -sin(x) + noise.
SineToy generate_sine_toy(std::size_t n_a, std::size_t n_b, double noise_sd, std::uint64_t seed,
                          std::size_t n_test = 200);

using Pmf = std::vector<double>;

struct DiscreteScenario {
  std::size_t support_size = 2;
  std::vector<Pmf> source_pmfs;
  Pmf test_pmf;
  std::vector<std::size_t> sizes;
  std::size_t test_size = 1000;
};

void validate(const DiscreteScenario& scenario);

struct DiscreteSources {
  std::vector<Source> sources;
  Source test;
  std::vector<Pmf> source_pmfs;
  Pmf test_pmf;
};

/// One-hot features over the atoms; the label of atom j is j % 2.
DiscreteSources generate_discrete_sources(const DiscreteScenario& scenario, std::uint64_t seed);

// Scenario files -------------------------------------------------------------

enum class ScenarioKind { Gaussian, Discrete, Sine };

struct ScenarioFile {
  ScenarioKind kind = ScenarioKind::Gaussian;
  GaussianScenario gaussian;
  DiscreteScenario discrete;
  std::size_t sine_n_a = 10;
  std::size_t sine_n_b = 90;
  double sine_noise_sd = 0.1;
  std::size_t sine_test_size = 200;
  std::uint64_t seed = 42;
};

/// Flat key-value scenario. Lists are comma separated; per-source lists of
/// vectors (mean_shifts, source_pmfs) separate sources with ';'.
ScenarioFile scenario_from_key_values(const std::map<std::string, std::string>& kv);
ScenarioFile read_scenario_file(const std::filesystem::path& path);

/// Every source of the scenario plus, where the scenario defines one, a held-out test source (id "test").
std::vector<Source> generate_scenario(const ScenarioFile& scenario);

}  // namespace srcsel
