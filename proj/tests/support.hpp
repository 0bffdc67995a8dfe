#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "srcsel/dataset.hpp"
#include "srcsel/synth.hpp"

namespace testing {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("srcsel_" + tag + "_" + std::to_string(rd()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

/// O(n^2) Mann-Whitney over every (negative, positive) pair, ties count 1/2.
inline double brute_force_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 0) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 1) continue;
      pairs += 1.0;
      if (scores[i] < scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

/// KL(N(mu_p, I) || N(mu_q, I)) = |mu_p - mu_q|^2 / 2.
inline double gaussian_kl_unit_cov(const std::vector<double>& mu_p, const std::vector<double>& mu_q) {
  double s = 0.0;
  for (std::size_t i = 0; i < mu_p.size(); ++i) s += (mu_p[i] - mu_q[i]) * (mu_p[i] - mu_q[i]);
  return 0.5 * s;
}

/// n rows of N(mean, sd^2 I) with labels from a fixed logistic rule and a single group.
inline srcsel::Source gaussian_source(const std::string& id, std::size_t n, std::vector<double> mean, std::uint64_t seed,
                                      double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t d = mean.size();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::vector<int> y(n);
  for (std::size_t r = 0; r < n; ++r) {
    double logit = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double v = mean[c] + sd * z(rng);
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
      logit += v;
    }
    y[r] = u(rng) < 1.0 / (1.0 + std::exp(-logit)) ? 1 : 0;
  }
  std::vector<std::string> names;
  for (std::size_t c = 0; c < d; ++c) names.push_back("x" + std::to_string(c + 1));
  return srcsel::Source(id, std::move(x), std::move(y), std::vector<std::string>(n, "all"), std::move(names));
}

inline fs::path scenario_path(const std::string& name) { return fs::path(SRCSEL_SCENARIO_DIR) / name; }

/// The twelve-source suite from scenarios/hospital_suite.cfg with a new seed and, optionally, new sizes.
inline srcsel::GaussianScenario hospital_suite(std::uint64_t seed, std::size_t size = 0) {
  auto sf = srcsel::read_scenario_file(scenario_path("hospital_suite.cfg"));
  sf.gaussian.seed = seed;
  if (size > 0) sf.gaussian.sizes.assign(sf.gaussian.sizes.size(), size);
  return sf.gaussian;
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Standard error of the mean with the n - 1 sample variance.
inline double stderr_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double n = static_cast<double>(v.size());
  return std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

}  // namespace testing
