#include "srcsel/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>

#include <CLI11.hpp>
#include <json.hpp>

#include "srcsel/accumulate.hpp"
#include "srcsel/divergence.hpp"
#include "srcsel/error.hpp"
#include "srcsel/eval.hpp"
#include "srcsel/report.hpp"
#include "srcsel/seed.hpp"
#include "srcsel/strategy.hpp"
#include "srcsel/synth.hpp"
#include "text_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace srcsel {

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, std::optional<std::uint64_t> config_seed) {
  if (flag) return *flag;
  if (const char* env = std::getenv(kSeedEnvVar); env != nullptr && *env != '\0') {
    std::uint64_t v = 0;
    const std::string_view s = detail::trim(env);
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw Error(ErrorCode::BadConfig, std::string(kSeedEnvVar) + " must be an unsigned integer, got '" + env + "'");
    }
    return v;
  }
  return config_seed.value_or(kDefaultSeed);
}

std::vector<Source> load_source_dir(const fs::path& dir, const SchemaConfig& schema) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, "not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorCode::EmptySource, "no CSV sources in " + dir.string());
  std::vector<Source> out;
  for (const auto& f : files) out.push_back(load_csv(f, schema));
  return out;
}

namespace {

struct Common {
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string schema;
  std::string format = "both";

  bool want_json() const { return format != "csv"; }
  bool want_csv() const { return format != "json"; }
};

void add_common(CLI::App* cmd, Common& c, bool with_schema) {
  cmd->add_option("--out", c.out, "Output directory")->required();
  cmd->add_option("--seed", c.seed, "Root seed (overrides SOURCE_SELECT_SEED)");
  cmd->add_option("--format", c.format, "Which tables to write")
      ->check(CLI::IsMember({"json", "csv", "both"}))
      ->capture_default_str();
  if (with_schema) cmd->add_option("--schema", c.schema, "Schema key-value file for loading CSVs");
}

json common_json(const Common& c) {
  json j = {{"out", c.out}, {"format", c.format}};
  if (!c.schema.empty()) j["schema"] = c.schema;
  return j;
}

SchemaConfig schema_of(const Common& c) { return c.schema.empty() ? SchemaConfig{} : read_schema_config(c.schema); }

const Source& find_by_id(std::span<const Source> sources, const std::string& id) {
  for (const auto& s : sources) {
    if (s.id() == id) return s;
  }
  throw Error(ErrorCode::BadConfig, "no source with id '" + id + "'");
}

std::vector<std::string> ids_of(std::span<const Source> sources) {
  std::vector<std::string> ids;
  for (const auto& s : sources) ids.push_back(s.id());
  return ids;
}

NormativeFacet parse_facet(const std::string& s) {
  if (s == "proportions") return NormativeFacet::Proportions;
  if (s == "outcome_rates") return NormativeFacet::OutcomeRates;
  return NormativeFacet::Both;
}

const std::vector<std::string> kMetricNames = {"score_x",   "score_xy",   "kl_ratio_x", "kl_ratio_xy",
                                               "normative", "kde_pca_kl", "exact_kl"};

// gen ------------------------------------------------------------------------

struct GenArgs {
  Common common;
  std::string scenario;
};

void run_gen(const GenArgs& a, std::ostream& out) {
  const auto kv = read_key_value_file(a.scenario);
  auto sf = scenario_from_key_values(kv);
  const std::uint64_t seed = resolve_seed(a.common.seed, kv.count("seed") ? std::optional(sf.seed) : std::nullopt);
  sf.seed = seed;
  sf.gaussian.seed = seed;
  const auto sources = generate_scenario(sf);

  const fs::path dir = a.common.out;
  std::vector<std::string> outputs;
  for (const auto& s : sources) {
    write_csv(s, dir / (s.id() + ".csv"));
    outputs.push_back(s.id() + ".csv");
  }
  json config = common_json(a.common);
  config["scenario"] = a.scenario;
  config["scenario_values"] = kv;
  write_manifest(dir, "gen", seed, config, outputs);
  out << "wrote " << sources.size() << " sources to " << dir.string() << "\n";
}

// distance -------------------------------------------------------------------

struct DistanceArgs {
  Common common;
  std::string data;
  std::string metric = "score_xy";
  std::string facet = "both";
  std::size_t kde_components = 3;
};

void run_distance(const DistanceArgs& a, std::ostream& out) {
  const std::uint64_t seed = resolve_seed(a.common.seed, std::nullopt);
  const auto sources = load_source_dir(a.data, schema_of(a.common));
  EstimatorOptions opts;
  opts.facet = parse_facet(a.facet);
  opts.kde_components = a.kde_components;
  const auto m = pairwise_distances(sources, parse_divergence_kind(a.metric), seed, opts);

  const fs::path dir = a.common.out;
  std::vector<std::string> outputs;
  if (a.common.want_csv()) {
    std::string csv = "p\\q";
    for (const auto& id : m.ids) csv += "," + detail::csv_escape(id);
    csv += "\n";
    for (std::size_t i = 0; i < m.ids.size(); ++i) {
      csv += detail::csv_escape(m.ids[i]);
      for (std::size_t j = 0; j < m.ids.size(); ++j) {
        csv += ",";
        if (i != j) csv += detail::format_real(m.values[i][j]);
      }
      csv += "\n";
    }
    write_text(dir / "distances.csv", csv);
    outputs.push_back("distances.csv");
  }
  if (a.common.want_json()) {
    json records = json::array();
    std::size_t e = 0;
    for (std::size_t i = 0; i < m.ids.size(); ++i) {
      for (std::size_t j = 0; j < m.ids.size(); ++j) {
        if (i == j) continue;
        const auto& est = m.estimates[e++];
        records.push_back({{"p", m.ids[i]},
                           {"q", m.ids[j]},
                           {"kind", to_string(est.kind)},
                           {"value", est.value},
                           {"n_p", est.n_p},
                           {"n_q", est.n_q},
                           {"seed", est.seed}});
      }
    }
    write_json(dir / "estimates.json", records);
    outputs.push_back("estimates.json");
  }
  json config = common_json(a.common);
  config.update({{"data", a.data}, {"metric", a.metric}, {"facet", a.facet}, {"kde_components", a.kde_components}});
  write_manifest(dir, "distance", seed, config, outputs);
  out << "wrote " << m.ids.size() << "x" << m.ids.size() << " " << a.metric << " matrix to " << dir.string() << "\n";
}

// simulate -------------------------------------------------------------------

struct SimulateArgs {
  Common common;
  std::string scenario;
  std::string mode = "sequential";
  std::vector<std::string> order;
  std::vector<double> weights;
  std::vector<std::size_t> grid;
  std::string metric = "kl_ratio_x";
  std::string test = "test";
  std::size_t replicates = 5;
  std::size_t folds = 5;
  double l2 = LogisticOptions{}.l2;
  std::size_t repeats = 1;
};

void run_simulate(const SimulateArgs& a, std::ostream& out) {
  const auto kv = read_key_value_file(a.scenario);
  auto sf = scenario_from_key_values(kv);
  const std::uint64_t seed = resolve_seed(a.common.seed, kv.count("seed") ? std::optional(sf.seed) : std::nullopt);
  const DivergenceKind metric = parse_divergence_kind(a.metric);
  if (a.replicates == 0) throw Error(ErrorCode::BadConfig, "replicates must be positive");

  std::vector<std::vector<TrajectoryPoint>> trajectories;
  std::vector<std::vector<double>> aucs(a.grid.size());
  std::vector<std::string> train_ids;
  for (std::size_t r = 0; r < a.replicates; ++r) {
    sf.seed = derive_seed(seed, "simulate_scenario", r);
    sf.gaussian.seed = sf.seed;
    const auto all = generate_scenario(sf);
    const Source& test = find_by_id(all, a.test);
    std::vector<Source> train;
    for (const auto& s : all) {
      if (s.id() != a.test) train.push_back(s);
    }
    train_ids = ids_of(train);

    AccumulationPlan plan;
    plan.seed = derive_seed(seed, "simulate_plan", r);
    if (a.mode == "sequential") {
      plan.mode = AccumulationMode::Sequential;
      plan.order = a.order.empty() ? train_ids : a.order;
    } else {
      plan.mode = AccumulationMode::Mixture;
      plan.order = a.order;
      const std::size_t members = a.order.empty() ? train.size() : a.order.size();
      plan.weights = a.weights.empty() ? std::vector<double>(members, 1.0 / static_cast<double>(members)) : a.weights;
    }
    trajectories.push_back(divergence_trajectory(train, plan, test, metric, a.grid));

    ExperimentConfig ec;
    ec.split = {a.folds, a.repeats, derive_seed(seed, "simulate_cv", r)};
    ec.model.l2 = a.l2;
    for (std::size_t i = 0; i < a.grid.size(); ++i) {
      AccumulationPlan at = plan;
      at.target_n = a.grid[i];
      aucs[i].push_back(run_experiment(build_training_set(train, at).data, test, ec).mean_of(Metric::Auc));
    }
  }

  PlotTable table = trajectory_table("trajectory", "divergence:" + a.metric, trajectories);
  for (std::size_t i = 0; i < a.grid.size(); ++i) {
    table.rows.push_back(summarize_replicates(std::to_string(a.grid[i]), "auc", aucs[i]));
  }
  const fs::path dir = a.common.out;
  const PlotTable tables[] = {table};
  emit_plot_tables(tables, dir);

  json config = common_json(a.common);
  config.update({{"scenario", a.scenario},
                 {"scenario_values", kv},
                 {"mode", a.mode},
                 {"order", a.order},
                 {"weights", a.weights},
                 {"grid", a.grid},
                 {"metric", a.metric},
                 {"test", a.test},
                 {"replicates", a.replicates},
                 {"folds", a.folds},
                 {"l2", a.l2},
                 {"repeats", a.repeats}});
  write_manifest(dir, "simulate", seed, config, {"trajectory.csv"});
  out << "wrote " << a.grid.size() << "-point trajectory over " << a.replicates << " replicates to " << dir.string()
      << "\n";
}

// recommend ------------------------------------------------------------------

struct RecommendArgs {
  Common common;
  std::string data;
  std::string reference;
  std::string metric = "score_xy";
  std::string facet = "both";
  std::size_t k = 3;
  bool compare = false;
  bool recompute = false;
  std::size_t test_size = 400;
  std::size_t reference_train_size = 0;
  std::size_t folds = 5;
  double l2 = LogisticOptions{}.l2;
  std::size_t repeats = 5;
};

void run_recommend(const RecommendArgs& a, std::ostream& out) {
  const std::uint64_t seed = resolve_seed(a.common.seed, std::nullopt);
  const auto sources = load_source_dir(a.data, schema_of(a.common));
  const Source& reference = find_by_id(sources, a.reference);
  std::vector<Source> candidates;
  for (const auto& s : sources) {
    if (s.id() != a.reference) candidates.push_back(s);
  }
  if (a.k > candidates.size()) throw Error(ErrorCode::BadConfig, "k exceeds the number of candidates");
  const DivergenceKind metric = parse_divergence_kind(a.metric);

  StrategyConfig cfg;
  cfg.experiment.split = {a.folds, a.repeats, seed};
  cfg.experiment.model.l2 = a.l2;
  cfg.estimator.facet = parse_facet(a.facet);
  cfg.test_size = a.test_size;
  cfg.reference_train_size = a.reference_train_size;
  cfg.recompute_heuristic = a.recompute;
  cfg.seed = seed;

  // With a comparison the reference is split first and ranking only sees the training part.
  std::optional<SourceSplit> split;
  Source ranked_against = reference;
  if (a.compare) {
    split = split_source(reference, a.test_size, seed);
    if (a.reference_train_size > 0) {
      split->train = subsample(split->train, a.reference_train_size, derive_seed(seed, "reference_train"));
    }
    ranked_against = split->train;
  }
  auto ranking = rank_candidates(ranked_against, candidates, metric, seed, cfg.estimator);
  ranking.reference_id = a.reference;

  const fs::path dir = a.common.out;
  std::vector<std::string> outputs;
  json doc = to_json(ranking);
  std::vector<std::string> recommended;
  for (std::size_t i = 0; i < a.k; ++i) recommended.push_back(ranking.entries[i].id);
  doc["k"] = a.k;
  doc["recommended"] = recommended;
  write_json(dir / "ranking.json", doc);
  outputs.push_back("ranking.json");

  if (a.compare) {
    const auto outcomes = compare_strategies(split->train, split->test, candidates, a.k, metric, cfg);
    if (a.common.want_json()) {
      json arr = json::array();
      for (const auto& o : outcomes) arr.push_back(to_json(o));
      write_json(dir / "strategies.json", arr);
      outputs.push_back("strategies.json");
    }
    if (a.common.want_csv()) {
      const PlotTable tables[] = {strategy_table("strategies", outcomes)};
      emit_plot_tables(tables, dir);
      outputs.push_back("strategies.csv");
    }
  }

  json config = common_json(a.common);
  config.update({{"data", a.data},
                 {"reference", a.reference},
                 {"metric", a.metric},
                 {"facet", a.facet},
                 {"k", a.k},
                 {"compare", a.compare},
                 {"recompute", a.recompute},
                 {"test_size", a.test_size},
                 {"reference_train_size", a.reference_train_size},
                 {"folds", a.folds},
                 {"l2", a.l2},
                 {"repeats", a.repeats}});
  write_manifest(dir, "recommend", seed, config, outputs);
  out << "recommended for " << a.reference << ":";
  for (const auto& id : recommended) out << " " << id;
  out << "\n";
}

// report ---------------------------------------------------------------------

struct ReportArgs {
  Common common;
  std::string data;
  std::string reference;
  std::vector<std::string> add;
  std::string test;
  std::size_t test_size = 400;
  std::size_t folds = 5;
  double l2 = LogisticOptions{}.l2;
  std::size_t repeats = 5;
};

void run_report(const ReportArgs& a, std::ostream& out) {
  const std::uint64_t seed = resolve_seed(a.common.seed, std::nullopt);
  const auto sources = load_source_dir(a.data, schema_of(a.common));
  const Source& reference = find_by_id(sources, a.reference);

  std::vector<Source> parts;
  Source test;
  if (a.test.empty()) {
    auto split = split_source(reference, a.test_size, seed);
    parts.push_back(std::move(split.train));
    test = std::move(split.test);
  } else {
    if (a.test == a.reference) throw Error(ErrorCode::BadConfig, "test source must differ from the reference");
    parts.push_back(reference);
    test = find_by_id(sources, a.test);
  }
  for (const auto& id : a.add) {
    if (id == a.reference || id == a.test) throw Error(ErrorCode::BadConfig, "cannot add '" + id + "' to itself");
    parts.push_back(find_by_id(sources, id));
  }
  ExperimentConfig ec;
  ec.split = {a.folds, a.repeats, seed};
  ec.model.l2 = a.l2;
  const auto result = run_experiment(concat(parts), test, ec);

  std::string series = a.reference;
  for (const auto& id : a.add) series += "+" + id;

  const fs::path dir = a.common.out;
  std::vector<std::string> outputs;
  if (a.common.want_json()) {
    json doc = to_json(result);
    doc["train"] = ids_of(parts);
    doc["test"] = test.id();
    write_json(dir / "result.json", doc);
    outputs.push_back("result.json");
  }
  if (a.common.want_csv()) {
    const PlotTable tables[] = {experiment_table("summary", series, result)};
    emit_plot_tables(tables, dir);
    outputs.push_back("summary.csv");
  }
  json config = common_json(a.common);
  config.update({{"data", a.data},
                 {"reference", a.reference},
                 {"add", a.add},
                 {"test", a.test},
                 {"test_size", a.test_size},
                 {"folds", a.folds},
                 {"l2", a.l2},
                 {"repeats", a.repeats}});
  write_manifest(dir, "report", seed, config, outputs);
  out << series << " auc " << detail::format_real(result.mean_of(Metric::Auc)) << "\n";
}

}  // namespace

int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Select external data sources by estimated train/test divergence", "srcsel"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic scenario as one CSV per source");
  add_common(gen_cmd, gen.common, false);
  gen_cmd->add_option("--scenario", gen.scenario, "Scenario key-value file")->required()->check(CLI::ExistingFile);

  DistanceArgs dist;
  auto* dist_cmd = app.add_subcommand("distance", "Pairwise divergence matrix between all sources in a directory");
  add_common(dist_cmd, dist.common, true);
  dist_cmd->add_option("--data", dist.data, "Directory of source CSVs")->required();
  dist_cmd->add_option("--metric", dist.metric)->check(CLI::IsMember(kMetricNames))->capture_default_str();
  dist_cmd->add_option("--facet", dist.facet, "Normative facet")
      ->check(CLI::IsMember({"proportions", "outcome_rates", "both"}))
      ->capture_default_str();
  dist_cmd->add_option("--kde-components", dist.kde_components)->capture_default_str();

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Divergence and AUC as a training set accumulates");
  add_common(sim_cmd, sim.common, false);
  sim_cmd->add_option("--scenario", sim.scenario, "Scenario key-value file")->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("--mode", sim.mode)->check(CLI::IsMember({"sequential", "mixture"}))->capture_default_str();
  sim_cmd->add_option("--order", sim.order, "Source ids in accumulation order")->delimiter(',');
  sim_cmd->add_option("--weights", sim.weights, "Mixture weights aligned with --order")->delimiter(',');
  sim_cmd->add_option("--grid", sim.grid, "Training-set sizes, strictly increasing")->delimiter(',')->required();
  sim_cmd->add_option("--metric", sim.metric)->check(CLI::IsMember(kMetricNames))->capture_default_str();
  sim_cmd->add_option("--test", sim.test, "Id of the scenario source used as test")->capture_default_str();
  sim_cmd->add_option("--replicates", sim.replicates, "Independent scenario draws")->capture_default_str();
  sim_cmd->add_option("--folds", sim.folds)->capture_default_str();
  sim_cmd->add_option("--l2", sim.l2, "Task-model ridge penalty")->check(CLI::NonNegativeNumber)->capture_default_str();
  sim_cmd->add_option("--repeats", sim.repeats)->capture_default_str();

  RecommendArgs rec;
  auto* rec_cmd = app.add_subcommand("recommend", "Rank candidate sources for a reference and pick the closest k");
  add_common(rec_cmd, rec.common, true);
  rec_cmd->add_option("--data", rec.data, "Directory of source CSVs")->required();
  rec_cmd->add_option("--reference", rec.reference, "Reference source id")->required();
  rec_cmd->add_option("--metric", rec.metric)->check(CLI::IsMember(kMetricNames))->capture_default_str();
  rec_cmd->add_option("--facet", rec.facet)
      ->check(CLI::IsMember({"proportions", "outcome_rates", "both"}))
      ->capture_default_str();
  rec_cmd->add_option("--k", rec.k)->capture_default_str();
  rec_cmd->add_flag("--compare", rec.compare, "Also run the best-k / worst-k / mixture comparison");
  rec_cmd->add_flag("--recompute", rec.recompute, "Re-rank against the growing pool after every pick");
  rec_cmd->add_option("--test-size", rec.test_size)->capture_default_str();
  rec_cmd->add_option("--reference-train-size", rec.reference_train_size, "0 keeps the whole training split")
      ->capture_default_str();
  rec_cmd->add_option("--folds", rec.folds)->capture_default_str();
  rec_cmd->add_option("--l2", rec.l2, "Task-model ridge penalty")->check(CLI::NonNegativeNumber)->capture_default_str();
  rec_cmd->add_option("--repeats", rec.repeats)->capture_default_str();

  ReportArgs rep;
  auto* rep_cmd = app.add_subcommand("report", "Cross-validated metrics for a reference plus added sources");
  add_common(rep_cmd, rep.common, true);
  rep_cmd->add_option("--data", rep.data, "Directory of source CSVs")->required();
  rep_cmd->add_option("--reference", rep.reference, "Reference source id")->required();
  rep_cmd->add_option("--add", rep.add, "Source ids added to the training pool")->delimiter(',');
  rep_cmd->add_option("--test", rep.test, "Separate test source id; default splits the reference");
  rep_cmd->add_option("--test-size", rep.test_size)->capture_default_str();
  rep_cmd->add_option("--folds", rep.folds)->capture_default_str();
  rep_cmd->add_option("--l2", rep.l2, "Task-model ridge penalty")->check(CLI::NonNegativeNumber)->capture_default_str();
  rep_cmd->add_option("--repeats", rep.repeats)->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) run_gen(gen, out);
    if (dist_cmd->parsed()) run_distance(dist, out);
    if (sim_cmd->parsed()) run_simulate(sim, out);
    if (rec_cmd->parsed()) run_recommend(rec, out);
    if (rep_cmd->parsed()) run_report(rep, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDataError;
  }
  return kExitOk;
}

}  // namespace srcsel
