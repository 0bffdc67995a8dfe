#include "srcsel/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "srcsel/accumulate.hpp"
#include "srcsel/error.hpp"
#include "srcsel/seed.hpp"

namespace srcsel {

SourceSplit split_source(const Source& source, std::size_t test_size, std::uint64_t seed) {
  if (test_size >= source.rows()) {
    throw Error(ErrorCode::NotEnoughRows, "holding out " + std::to_string(test_size) + " rows leaves no training rows in '" +
                                              source.id() + "'");
  }
  auto [test, train] = split_rows(source, test_size, derive_seed(seed, "split_source"));
  return {train.with_id(source.id() + ":train"), test.with_id(source.id() + ":test")};
}

AdditionOutcome evaluate_addition(const Source& reference_train, const Source& candidate,
                                  const Source& reference_test, const ExperimentConfig& config) {
  AdditionOutcome out;
  out.base = run_experiment(reference_train, reference_test, config);
  const Source parts[] = {reference_train, candidate};
  out.augmented = run_experiment(concat(parts), reference_test, config);
  out.delta_auc = out.augmented.mean_of(Metric::Auc) - out.base.mean_of(Metric::Auc);
  return out;
}

AdditionOutcome ood_auc_delta(const Source& candidate, const Source& reference_train, const Source& reference_test,
                              const ExperimentConfig& config) {
  AdditionOutcome out;
  out.base = run_experiment(reference_train, reference_test, config);
  out.augmented = run_experiment(candidate, reference_test, config);
  out.delta_auc = out.augmented.mean_of(Metric::Auc) - out.base.mean_of(Metric::Auc);
  return out;
}

void sort_ranking(CandidateRanking& ranking) {
  std::sort(ranking.entries.begin(), ranking.entries.end(), [](const RankingEntry& a, const RankingEntry& b) {
    if (a.value != b.value) return a.value < b.value;
    return a.id < b.id;
  });
  for (std::size_t i = 0; i < ranking.entries.size(); ++i) ranking.entries[i].rank = i + 1;
}

CandidateRanking rank_candidates(const Source& reference, std::span<const Source> candidates, DivergenceKind metric,
                                 std::uint64_t seed, const EstimatorOptions& options) {
  if (candidates.empty()) throw Error(ErrorCode::EmptySource, "no candidates to rank");
  CandidateRanking ranking;
  ranking.reference_id = reference.id();
  ranking.metric = metric;
  ranking.seed = seed;
  for (const auto& c : candidates) {
    const auto est = estimate_divergence(metric, c, reference, derive_seed(seed, "rank:" + c.id()), options);
    ranking.entries.push_back({c.id(), est.value, 0});
  }
  sort_ranking(ranking);
  return ranking;
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::ReferenceOnly: return "reference_only";
    case Strategy::BestK: return "best_k";
    case Strategy::WorstK: return "worst_k";
    case Strategy::MixtureBaseline: return "mixture";
  }
  return "unknown";
}

namespace {

const Source& by_id(std::span<const Source> sources, const std::string& id) {
  for (const auto& s : sources) {
    if (s.id() == id) return s;
  }
  throw Error(ErrorCode::BadConfig, "unknown source '" + id + "'");
}

std::vector<std::string> greedy_pick(const Source& reference_train, std::span<const Source> candidates, std::size_t k,
                                     bool closest, DivergenceKind metric, const StrategyConfig& config) {
  std::vector<std::string> picked;
  if (k == 0) return picked;
  if (!config.recompute_heuristic) {
    const auto ranking = rank_candidates(reference_train, candidates, metric, config.seed, config.estimator);
    for (std::size_t i = 0; i < k; ++i) {
      picked.push_back(closest ? ranking.entries[i].id : ranking.entries[ranking.entries.size() - 1 - i].id);
    }
    return picked;
  }
  std::vector<Source> remaining(candidates.begin(), candidates.end());
  Source pool = reference_train;
  for (std::size_t step = 0; step < k; ++step) {
    const auto ranking = rank_candidates(pool, remaining, metric, derive_seed(config.seed, "greedy", step),
                                         config.estimator);
    const auto& choice = closest ? ranking.entries.front().id : ranking.entries.back().id;
    picked.push_back(choice);
    const Source parts[] = {pool, by_id(remaining, choice)};
    pool = concat(parts);
    remaining.erase(std::find_if(remaining.begin(), remaining.end(), [&](const Source& s) { return s.id() == choice; }));
  }
  return picked;
}

}  // namespace

std::vector<StrategyOutcome> compare_strategies(const Source& reference_train, const Source& reference_test,
                                                std::span<const Source> candidates, std::size_t k,
                                                DivergenceKind metric, const StrategyConfig& config) {
  if (k > candidates.size()) throw Error(ErrorCode::BadConfig, "k exceeds the number of candidates");
  std::vector<StrategyOutcome> out;

  StrategyOutcome ref{Strategy::ReferenceOnly, 0, {}, 0, run_experiment(reference_train, reference_test,
                                                                        config.experiment)};
  out.push_back(ref);

  auto arm = [&](Strategy which, const std::vector<std::string>& ids) {
    StrategyOutcome o{which, k, ids, 0, {}};
    std::vector<Source> parts{reference_train};
    for (const auto& id : ids) {
      parts.push_back(by_id(candidates, id));
      o.added_rows += parts.back().rows();
    }
    o.result = ids.empty() ? ref.result : run_experiment(concat(parts), reference_test, config.experiment);
    return o;
  };

  const auto best = greedy_pick(reference_train, candidates, k, true, metric, config);
  const auto worst = greedy_pick(reference_train, candidates, k, false, metric, config);
  out.push_back(arm(Strategy::BestK, best));
  out.push_back(arm(Strategy::WorstK, worst));

  StrategyOutcome mix{Strategy::MixtureBaseline, k, {}, out[1].added_rows, {}};
  if (mix.added_rows == 0) {
    mix.result = ref.result;
  } else {
    AccumulationPlan plan;
    plan.mode = AccumulationMode::Mixture;
    plan.weights.assign(candidates.size(), 1.0 / static_cast<double>(candidates.size()));
    plan.target_n = mix.added_rows;
    plan.seed = derive_seed(config.seed, "mixture_baseline");
    const auto sample = build_training_set(candidates, plan);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (sample.contributed[i] > 0) mix.added_ids.push_back(candidates[i].id());
    }
    const Source parts[] = {reference_train, sample.data};
    mix.result = run_experiment(concat(parts), reference_test, config.experiment);
  }
  out.push_back(std::move(mix));
  return out;
}

std::string HeuristicSpec::label() const {
  if (kind == DivergenceKind::NormativeEuclidean) return "normative_" + std::string(to_string(facet));
  return std::string(to_string(kind));
}

CorrelationStudy correlation_study(std::span<const Source> sources, std::span<const HeuristicSpec> heuristics,
                                   const StrategyConfig& config, bool with_addition) {
  if (sources.size() < 3) throw Error(ErrorCode::TooFewExamples, "the correlation study needs at least 3 sources");
  CorrelationStudy study;
  study.heuristics.assign(heuristics.begin(), heuristics.end());

  std::vector<SourceSplit> splits;
  splits.reserve(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    splits.push_back(split_source(sources[i], config.test_size, derive_seed(config.seed, "study_split", i)));
  }
  const auto vocab = group_vocabulary(sources);
  std::vector<GroupSummary> summaries;
  for (const auto& s : splits) summaries.push_back(summarize_groups(s.train, vocab));

  for (std::size_t j = 0; j < sources.size(); ++j) {
    Source ref_train = splits[j].train;
    if (config.reference_train_size > 0) {
      ref_train = subsample(ref_train, config.reference_train_size, derive_seed(config.seed, "study_ref", j));
    }
    const auto in_dist = run_experiment(splits[j].train, splits[j].test, config.experiment);
    const double in_auc = in_dist.mean_of(Metric::Auc);
    std::optional<double> base_auc;
    if (with_addition) base_auc = run_experiment(ref_train, splits[j].test, config.experiment).mean_of(Metric::Auc);

    for (std::size_t i = 0; i < sources.size(); ++i) {
      if (i == j) continue;
      PairRecord rec;
      rec.candidate = sources[i].id();
      rec.reference = sources[j].id();
      rec.ood_delta = run_experiment(splits[i].train, splits[j].test, config.experiment).mean_of(Metric::Auc) - in_auc;
      if (with_addition) {
        const Source parts[] = {ref_train, splits[i].train};
        rec.addition_delta =
            run_experiment(concat(parts), splits[j].test, config.experiment).mean_of(Metric::Auc) - *base_auc;
      }
      for (const auto& h : heuristics) {
        if (h.kind == DivergenceKind::NormativeEuclidean) {
          rec.heuristics.push_back(normative_distance(summaries[i], summaries[j], h.facet).value);
        } else {
          const auto seed = derive_seed(config.seed, "study_pair", i * sources.size() + j);
          rec.heuristics.push_back(estimate_divergence(h.kind, splits[i].train, splits[j].train, seed,
                                                       config.estimator).value);
        }
      }
      study.pairs.push_back(std::move(rec));
    }
  }

  std::vector<double> ood;
  for (const auto& p : study.pairs) ood.push_back(p.ood_delta);
  for (std::size_t h = 0; h < heuristics.size(); ++h) {
    std::vector<double> values;
    for (const auto& p : study.pairs) values.push_back(p.heuristics[h]);
    CorrelationRow row{heuristics[h].label(), {}};
    try {
      row.correlation = pearson(values, ood);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateVariance) throw;
      row.correlation = {std::numeric_limits<double>::quiet_NaN(), 1.0, values.size()};
    }
    study.table.push_back(std::move(row));
  }
  if (with_addition) {
    std::vector<double> add;
    for (const auto& p : study.pairs) add.push_back(*p.addition_delta);
    study.ood_vs_addition = pearson(ood, add);
  }
  return study;
}

DistanceMatrix pairwise_distances(std::span<const Source> sources, DivergenceKind metric, std::uint64_t seed,
                                  const EstimatorOptions& options) {
  DistanceMatrix m;
  m.metric = metric;
  const std::size_t n = sources.size();
  m.values.assign(n, std::vector<double>(n, std::numeric_limits<double>::quiet_NaN()));
  for (const auto& s : sources) m.ids.push_back(s.id());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      auto est = estimate_divergence(metric, sources[i], sources[j], derive_seed(seed, "pairwise", i * n + j), options);
      m.values[i][j] = est.value;
      m.estimates.push_back(est);
    }
  }
  return m;
}

nlohmann::json to_json(const CandidateRanking& ranking) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : ranking.entries) entries.push_back({{"id", e.id}, {"value", e.value}, {"rank", e.rank}});
  return {{"reference_id", ranking.reference_id},
          {"metric", to_string(ranking.metric)},
          {"seed", ranking.seed},
          {"entries", entries}};
}

nlohmann::json to_json(const StrategyOutcome& o) {
  return {{"strategy", to_string(o.strategy)},
          {"k", o.k},
          {"added_ids", o.added_ids},
          {"added_rows", o.added_rows},
          {"result", to_json(o.result)}};
}

}  // namespace srcsel
