#include "srcsel/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include <boost/math/distributions/normal.hpp>

#include "srcsel/error.hpp"
#include "srcsel/models.hpp"
#include "srcsel/seed.hpp"
#include "text_util.hpp"

namespace srcsel {

namespace {

double broadcast(const std::vector<double>& v, std::size_t i) { return v.size() == 1 ? v[0] : v[i]; }

std::string default_id(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "S%02zu", i);
  return buf;
}

}  // namespace

void validate(const GaussianScenario& s) {
  const std::size_t m = s.n_sources();
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidScenario, msg); };
  if (s.d < 1) fail("d must be at least 1");
  if (m == 0) fail("at least one source is required");
  if (s.mean_shifts.size() != m) fail("mean_shifts needs one entry per source");
  for (const auto& row : s.mean_shifts) {
    if (!row.empty() && row.size() != s.d) fail("each mean shift must have d entries");
  }
  if (s.cov_scale.size() != 1 && s.cov_scale.size() != m) fail("cov_scale must have 1 or n_sources entries");
  for (double c : s.cov_scale) {
    if (!(c > 0.0) || !std::isfinite(c)) fail("cov_scale must be positive");
  }
  if (s.label_weights.size() != s.d) fail("label_weights must have d entries");
  if (s.label_flip_rate.size() != 1 && s.label_flip_rate.size() != m) {
    fail("label_flip_rate must have 1 or n_sources entries");
  }
  for (double f : s.label_flip_rate) {
    if (!(f >= 0.0 && f <= 1.0)) fail("label_flip_rate must lie in [0, 1]");
  }
  if (s.n_groups < 1) fail("n_groups must be at least 1");
  if (s.group_feature >= s.d) fail("group_feature out of range");
  if (s.interaction_coef != 0.0 && (s.interaction_features.first >= s.d || s.interaction_features.second >= s.d)) {
    fail("interaction_features out of range");
  }
  if (!s.ids.empty() && s.ids.size() != m) fail("ids must have one entry per source");
}

Source draw_gaussian_source(const GaussianScenario& s, std::size_t index, std::size_t n, std::uint64_t seed,
                            std::string id) {
  validate(s);
  if (index >= s.n_sources()) throw Error(ErrorCode::InvalidScenario, "source index out of range");
  auto rng = make_rng(seed, "gaussian_source", index);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  const double sd = std::sqrt(broadcast(s.cov_scale, index));
  const double flip = broadcast(s.label_flip_rate, index);
  const auto& shift = s.mean_shifts[index];

  std::vector<double> cuts;
  const boost::math::normal_distribution<double> std_normal;
  for (std::size_t k = 1; k < s.n_groups; ++k) {
    cuts.push_back(boost::math::quantile(std_normal, static_cast<double>(k) / static_cast<double>(s.n_groups)));
  }

  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(s.d));
  std::vector<int> labels(n);
  std::vector<std::string> groups(n);
  const auto ia = std::min(s.interaction_features.first, s.d - 1);
  const auto ib = std::min(s.interaction_features.second, s.d - 1);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    double logit = s.label_intercept;
    for (std::size_t j = 0; j < s.d; ++j) {
      const double v = (shift.empty() ? 0.0 : shift[j]) + sd * normal(rng);
      x(row, static_cast<Eigen::Index>(j)) = v;
      logit += s.label_weights[j] * v;
    }
    logit += s.interaction_coef * x(row, static_cast<Eigen::Index>(ia)) * x(row, static_cast<Eigen::Index>(ib));
    int y = unif(rng) < sigmoid(logit) ? 1 : 0;
    if (unif(rng) < flip) y = 1 - y;
    labels[r] = y;
    const double gv = x(row, static_cast<Eigen::Index>(s.group_feature));
    std::size_t g = 0;
    while (g < cuts.size() && gv >= cuts[g]) ++g;
    groups[r] = "g" + std::to_string(g);
  }
  std::vector<std::string> names;
  for (std::size_t j = 0; j < s.d; ++j) names.push_back("x" + std::to_string(j + 1));
  return Source(std::move(id), std::move(x), std::move(labels), std::move(groups), std::move(names));
}

std::vector<Source> generate_gaussian_sources(const GaussianScenario& s) {
  validate(s);
  std::vector<Source> out;
  out.reserve(s.n_sources());
  for (std::size_t i = 0; i < s.n_sources(); ++i) {
    out.push_back(draw_gaussian_source(s, i, s.sizes[i], s.seed, s.ids.empty() ? default_id(i) : s.ids[i]));
  }
  return out;
}

SineToy generate_sine_toy(std::size_t n_a, std::size_t n_b, double noise_sd, std::uint64_t seed, std::size_t n_test) {
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw Error(ErrorCode::InvalidScenario, "noise_sd must be >= 0");
  constexpr int kDegree = 5;
  std::vector<std::string> names;
  for (int p = 1; p <= kDegree; ++p) names.push_back(p == 1 ? "x" : "x^" + std::to_string(p));

  auto draw = [&](std::size_t n, double sign, std::string_view tag, std::string id) {
    auto rng = make_rng(seed, tag);
    std::uniform_real_distribution<double> ux(0.0, std::numbers::pi);
    std::normal_distribution<double> noise(0.0, noise_sd > 0.0 ? noise_sd : 1.0);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), kDegree);
    std::vector<int> labels(n);
    for (std::size_t r = 0; r < n; ++r) {
      const double v = ux(rng);
      const double eps = noise_sd > 0.0 ? noise(rng) : 0.0;
      double pw = 1.0;
      for (int p = 0; p < kDegree; ++p) {
        pw *= v;
        x(static_cast<Eigen::Index>(r), p) = pw;
      }
      labels[r] = sign * std::sin(v) + eps > 0.0 ? 1 : 0;
    }
    return Source(std::move(id), std::move(x), std::move(labels), std::vector<std::string>(n, "all"), names);
  };

  SineToy toy;
  toy.train_sequence.push_back(draw(n_a, 1.0, "sine_a", "A"));
  toy.train_sequence.push_back(draw(n_b, -1.0, "sine_b", "B"));
  toy.test = draw(n_test, 1.0, "sine_test", "test");
  return toy;
}

void validate(const DiscreteScenario& s) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidScenario, msg); };
  if (s.support_size < 1) fail("support_size must be at least 1");
  auto check_pmf = [&](const Pmf& p, const std::string& what) {
    if (p.size() != s.support_size) fail(what + " has " + std::to_string(p.size()) + " atoms, expected " +
                                         std::to_string(s.support_size));
    double total = 0.0;
    for (double v : p) {
      if (!(v >= 0.0) || !std::isfinite(v)) fail(what + " has a negative or non-finite entry");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-12) fail(what + " sums to " + detail::format_real(total));
  };
  if (s.source_pmfs.empty()) fail("at least one source pmf is required");
  for (std::size_t i = 0; i < s.source_pmfs.size(); ++i) check_pmf(s.source_pmfs[i], "source pmf " + std::to_string(i));
  check_pmf(s.test_pmf, "test pmf");
  if (s.sizes.size() != s.source_pmfs.size()) fail("sizes needs one entry per source pmf");
}

DiscreteSources generate_discrete_sources(const DiscreteScenario& s, std::uint64_t seed) {
  validate(s);
  std::vector<std::string> names;
  for (std::size_t j = 0; j < s.support_size; ++j) names.push_back("atom" + std::to_string(j));

  auto draw = [&](const Pmf& pmf, std::size_t n, std::uint64_t index, std::string id) {
    auto rng = make_rng(seed, "discrete_source", index);
    std::discrete_distribution<std::size_t> atom(pmf.begin(), pmf.end());
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(s.support_size));
    std::vector<int> labels(n);
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t a = atom(rng);
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(a)) = 1.0;
      labels[r] = static_cast<int>(a % 2);
    }
    return Source(std::move(id), std::move(x), std::move(labels), std::vector<std::string>(n, "all"), names);
  };

  DiscreteSources out;
  for (std::size_t i = 0; i < s.source_pmfs.size(); ++i) {
    out.sources.push_back(draw(s.source_pmfs[i], s.sizes[i], i, default_id(i)));
  }
  out.test = draw(s.test_pmf, s.test_size, s.source_pmfs.size(), "test");
  out.source_pmfs = s.source_pmfs;
  out.test_pmf = s.test_pmf;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> real_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& item : detail::split_list(value)) {
    auto v = detail::parse_real(item);
    if (!v) throw Error(ErrorCode::BadConfig, key + ": '" + item + "' is not a number");
    out.push_back(*v);
  }
  return out;
}

std::vector<std::vector<double>> real_rows(const std::string& key, const std::string& value) {
  std::vector<std::vector<double>> rows;
  for (const auto& row : detail::split_list(value, ';')) rows.push_back(real_list(key, row));
  return rows;
}

std::size_t count_value(const std::string& key, const std::string& value) {
  auto v = detail::parse_real(value);
  if (!v || *v < 0 || std::floor(*v) != *v) throw Error(ErrorCode::BadConfig, key + " must be a non-negative integer");
  return static_cast<std::size_t>(*v);
}

std::vector<std::size_t> count_list(const std::string& key, const std::string& value) {
  std::vector<std::size_t> out;
  for (const auto& item : detail::split_list(value)) out.push_back(count_value(key, item));
  return out;
}

double real_value(const std::string& key, const std::string& value) {
  auto v = detail::parse_real(value);
  if (!v) throw Error(ErrorCode::BadConfig, key + " must be a number");
  return *v;
}

}  // namespace

ScenarioFile scenario_from_key_values(const std::map<std::string, std::string>& kv) {
  ScenarioFile sf;
  auto kind_it = kv.find("kind");
  const std::string kind = kind_it == kv.end() ? "gaussian" : kind_it->second;
  if (kind == "gaussian") {
    sf.kind = ScenarioKind::Gaussian;
  } else if (kind == "discrete") {
    sf.kind = ScenarioKind::Discrete;
  } else if (kind == "sine") {
    sf.kind = ScenarioKind::Sine;
  } else {
    throw Error(ErrorCode::BadConfig, "unknown scenario kind '" + kind + "'");
  }

  auto& g = sf.gaussian;
  auto& dsc = sf.discrete;
  std::size_t n_sources = 0;
  for (const auto& [key, value] : kv) {
    if (key == "kind") continue;
    if (key == "seed") {
      auto v = detail::parse_real(value);
      if (!v || *v < 0) throw Error(ErrorCode::BadConfig, "seed must be a non-negative integer");
      sf.seed = std::stoull(value);
    } else if (key == "d") {
      g.d = count_value(key, value);
    } else if (key == "n_sources") {
      n_sources = count_value(key, value);
    } else if (key == "mean_shifts") {
      g.mean_shifts = real_rows(key, value);
    } else if (key == "cov_scale") {
      g.cov_scale = real_list(key, value);
    } else if (key == "label_weights") {
      g.label_weights = real_list(key, value);
    } else if (key == "label_intercept") {
      g.label_intercept = real_value(key, value);
    } else if (key == "interaction_coef") {
      g.interaction_coef = real_value(key, value);
    } else if (key == "interaction_features") {
      auto f = count_list(key, value);
      if (f.size() != 2) throw Error(ErrorCode::BadConfig, "interaction_features needs two indices");
      g.interaction_features = {f[0], f[1]};
    } else if (key == "label_flip_rate") {
      g.label_flip_rate = real_list(key, value);
    } else if (key == "n_groups") {
      g.n_groups = count_value(key, value);
    } else if (key == "group_feature") {
      g.group_feature = count_value(key, value);
    } else if (key == "sizes") {
      g.sizes = count_list(key, value);
      dsc.sizes = g.sizes;
    } else if (key == "ids") {
      g.ids = detail::split_list(value);
    } else if (key == "support_size") {
      dsc.support_size = count_value(key, value);
    } else if (key == "source_pmfs") {
      dsc.source_pmfs = real_rows(key, value);
    } else if (key == "test_pmf") {
      dsc.test_pmf = real_list(key, value);
    } else if (key == "test_size") {
      dsc.test_size = count_value(key, value);
      sf.sine_test_size = dsc.test_size;
    } else if (key == "n_a") {
      sf.sine_n_a = count_value(key, value);
    } else if (key == "n_b") {
      sf.sine_n_b = count_value(key, value);
    } else if (key == "noise_sd") {
      sf.sine_noise_sd = real_value(key, value);
    } else {
      throw Error(ErrorCode::BadConfig, "unknown scenario key '" + key + "'");
    }
  }
  g.seed = sf.seed;
  if (sf.kind == ScenarioKind::Gaussian) {
    if (n_sources != 0 && n_sources != g.sizes.size()) {
      throw Error(ErrorCode::InvalidScenario, "n_sources disagrees with sizes");
    }
    if (g.mean_shifts.empty()) g.mean_shifts.assign(g.sizes.size(), {});
    if (g.cov_scale.empty()) g.cov_scale = {1.0};
    if (g.label_flip_rate.empty()) g.label_flip_rate = {0.0};
    if (g.label_weights.empty()) g.label_weights.assign(g.d, 1.0);
    validate(g);
  } else if (sf.kind == ScenarioKind::Discrete) {
    validate(dsc);
  }
  return sf;
}

ScenarioFile read_scenario_file(const std::filesystem::path& path) {
  return scenario_from_key_values(read_key_value_file(path));
}

std::vector<Source> generate_scenario(const ScenarioFile& sf) {
  switch (sf.kind) {
    case ScenarioKind::Gaussian:
      return generate_gaussian_sources(sf.gaussian);
    case ScenarioKind::Discrete: {
      auto ds = generate_discrete_sources(sf.discrete, sf.seed);
      auto out = std::move(ds.sources);
      out.push_back(std::move(ds.test));
      return out;
    }
    case ScenarioKind::Sine: {
      auto toy = generate_sine_toy(sf.sine_n_a, sf.sine_n_b, sf.sine_noise_sd, sf.seed, sf.sine_test_size);
      auto out = std::move(toy.train_sequence);
      out.push_back(std::move(toy.test));
      return out;
    }
  }
  return {};
}

}  // namespace srcsel
