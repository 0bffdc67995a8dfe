#include "srcsel/accumulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "srcsel/error.hpp"
#include "srcsel/seed.hpp"

namespace srcsel {

namespace {

std::size_t find_source(std::span<const Source> sources, const std::string& id) {
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (sources[i].id() == id) return i;
  }
  throw Error(ErrorCode::BadConfig, "plan refers to unknown source '" + id + "'");
}

/// First `count` entries of a permutation of `source` that depends only on (seed, index).
std::vector<std::size_t> permutation_prefix(const Source& source, std::size_t index, std::uint64_t seed,
                                            std::size_t count) {
  std::vector<std::size_t> idx(source.rows());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto rng = make_rng(seed, "accumulate_permutation", index);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(count);
  return idx;
}

}  // namespace

TrainingSet build_training_set(std::span<const Source> sources, const AccumulationPlan& plan) {
  if (sources.empty()) throw Error(ErrorCode::EmptySource, "no sources to accumulate");
  if (plan.target_n == 0) throw Error(ErrorCode::BadConfig, "target_n must be positive");

  TrainingSet out;
  out.contributed.assign(sources.size(), 0);
  std::vector<Source> parts;

  if (plan.mode == AccumulationMode::Sequential) {
    if (plan.order.empty()) throw Error(ErrorCode::BadConfig, "sequential plan needs a source order");
    std::vector<std::size_t> order;
    std::size_t available = 0;
    for (const auto& id : plan.order) {
      order.push_back(find_source(sources, id));
      available += sources[order.back()].rows();
    }
    if (plan.target_n > available) {
      throw Error(ErrorCode::PlanExceedsData, "target_n " + std::to_string(plan.target_n) + " exceeds the " +
                                                  std::to_string(available) + " rows in the plan");
    }
    std::size_t remaining = plan.target_n;
    for (std::size_t idx : order) {
      if (remaining == 0) break;
      const Source& s = sources[idx];
      if (s.rows() <= remaining) {
        parts.push_back(s);
        out.contributed[idx] += s.rows();
        remaining -= s.rows();
      } else {
        const auto rows = permutation_prefix(s, idx, plan.seed, remaining);
        parts.push_back(s.select(rows, s.id() + ":part"));
        out.contributed[idx] += remaining;
        remaining = 0;
      }
    }
  } else {
    std::vector<std::size_t> members;
    if (plan.order.empty()) {
      members.resize(sources.size());
      std::iota(members.begin(), members.end(), std::size_t{0});
    } else {
      for (const auto& id : plan.order) members.push_back(find_source(sources, id));
    }
    if (plan.weights.size() != members.size()) {
      throw Error(ErrorCode::BadConfig, "mixture plan needs one weight per source");
    }
    double total = 0.0;
    for (double w : plan.weights) {
      if (!(w >= 0.0)) throw Error(ErrorCode::BadConfig, "mixture weights must be non-negative");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorCode::BadConfig, "mixture weights must sum to 1");

    // Largest-remainder allocation; ties go to the earlier source.
    std::vector<std::size_t> counts(members.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t allocated = 0;
    for (std::size_t i = 0; i < members.size(); ++i) {
      const double quota = plan.weights[i] * static_cast<double>(plan.target_n);
      counts[i] = static_cast<std::size_t>(std::floor(quota + 1e-9));
      allocated += counts[i];
      remainders.emplace_back(quota - static_cast<double>(counts[i]), i);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; allocated < plan.target_n && r < remainders.size(); ++r, ++allocated) {
      ++counts[remainders[r].second];
    }
    for (std::size_t i = 0; i < members.size(); ++i) {
      const std::size_t idx = members[i];
      const Source& s = sources[idx];
      if (counts[i] > s.rows()) {
        throw Error(ErrorCode::PlanExceedsData, "mixture asks " + std::to_string(counts[i]) + " rows of '" + s.id() +
                                                    "' which has " + std::to_string(s.rows()));
      }
      if (counts[i] == 0) continue;
      const auto rows = permutation_prefix(s, idx, plan.seed, counts[i]);
      parts.push_back(s.select(rows, s.id() + ":mix"));
      out.contributed[idx] += counts[i];
    }
  }

  out.data = concat(parts).with_id("train_n" + std::to_string(plan.target_n));
  out.alpha.resize(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    out.alpha[i] = static_cast<double>(out.contributed[i]) / static_cast<double>(plan.target_n);
  }
  return out;
}

std::vector<TrajectoryPoint> divergence_trajectory(std::span<const Source> sources, const AccumulationPlan& plan,
                                                   const Source& test, DivergenceKind metric,
                                                   std::span<const std::size_t> grid,
                                                   const EstimatorOptions& options) {
  if (!std::is_sorted(grid.begin(), grid.end()) ||
      std::adjacent_find(grid.begin(), grid.end()) != grid.end()) {
    throw Error(ErrorCode::BadConfig, "trajectory grid must be strictly increasing");
  }
  std::vector<TrajectoryPoint> out;
  out.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    AccumulationPlan at = plan;
    at.target_n = grid[i];
    const auto train = build_training_set(sources, at);
    out.push_back({grid[i], estimate_divergence(metric, train.data, test, derive_seed(plan.seed, "trajectory", i),
                                                options)});
  }
  return out;
}

Pmf mixture_pmf(std::span<const Pmf> pmfs, std::span<const double> weights) {
  if (pmfs.size() != weights.size() || pmfs.empty()) {
    throw Error(ErrorCode::DimensionMismatch, "one weight per pmf is required");
  }
  Pmf out(pmfs.front().size(), 0.0);
  for (std::size_t i = 0; i < pmfs.size(); ++i) {
    if (pmfs[i].size() != out.size()) throw Error(ErrorCode::DimensionMismatch, "pmfs differ in support size");
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += weights[i] * pmfs[i][j];
  }
  return out;
}

LemmaCheckResult check_lemma_condition(const DiscreteScenario& scenario, std::span<const std::size_t> order,
                                       std::size_t n) {
  validate(scenario);
  if (order.size() < 2) throw Error(ErrorCode::BadConfig, "the growth condition needs at least two sources in the order");
  std::vector<std::size_t> used;  // rows taken from each ordered source
  std::size_t remaining = n;
  for (std::size_t idx : order) {
    if (idx >= scenario.source_pmfs.size()) throw Error(ErrorCode::BadConfig, "order index out of range");
    if (remaining == 0) break;
    const std::size_t take = std::min(remaining, scenario.sizes[idx]);
    if (take == 0) continue;
    used.push_back(take);
    remaining -= take;
  }
  if (remaining > 0) throw Error(ErrorCode::PlanExceedsData, "n exceeds the rows of the ordered sources");
  if (used.size() < 2) throw Error(ErrorCode::BadConfig, "n must reach into at least the second source");

  std::vector<Pmf> pmfs;
  for (std::size_t i = 0, u = 0; u < used.size(); ++i) {
    if (scenario.sizes[order[i]] == 0) continue;
    pmfs.push_back(scenario.source_pmfs[order[i]]);
    ++u;
  }
  const std::size_t k = used.size();
  const double nd = static_cast<double>(n);
  const double n_k = static_cast<double>(used.back());
  const double n_prev = nd - n_k;

  std::vector<double> alpha(k), alpha_prev(k - 1);
  for (std::size_t i = 0; i < k; ++i) alpha[i] = static_cast<double>(used[i]) / nd;
  for (std::size_t i = 0; i + 1 < k; ++i) alpha_prev[i] = static_cast<double>(used[i]) / n_prev;

  LemmaCheckResult r;
  r.n = n;
  r.k = k;
  r.delta_train_n = exact_kl(mixture_pmf(pmfs, alpha), scenario.test_pmf);
  r.delta_train_prev =
      exact_kl(mixture_pmf(std::span<const Pmf>(pmfs.data(), k - 1), alpha_prev), scenario.test_pmf);
  double weighted = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double d = exact_kl(pmfs[i], scenario.test_pmf);
    weighted += alpha[i] * d;
    if (i + 1 == k) r.delta_source_k = d;
  }
  r.c = weighted - r.delta_train_n;
  r.condition_holds = r.delta_source_k - r.c * nd / n_k >= r.delta_train_n;
  // Round-off tolerance only; the comparison is exact up to a few ulps of O(1) quantities.
  r.divergence_increased = r.delta_train_n >= r.delta_train_prev - 1e-12;
  return r;
}

double example1_linear_composition(double delta_s1, double delta_s2, std::size_t n1, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::BadConfig, "n must be at least 1");
  if (n <= n1) return delta_s1;
  const double a = static_cast<double>(n1) / static_cast<double>(n);
  return a * delta_s1 + (1.0 - a) * delta_s2;
}

}  // namespace srcsel
