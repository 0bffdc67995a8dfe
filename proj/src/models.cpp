#include "srcsel/models.hpp"

#include <cmath>
#include <limits>

#include "srcsel/error.hpp"

namespace srcsel {

Scaler fit_scaler(const Eigen::MatrixXd& features) {
  if (features.rows() == 0) throw Error(ErrorCode::EmptyMatrix, "cannot fit a scaler on zero rows");
  Scaler s;
  const double n = static_cast<double>(features.rows());
  s.means = features.colwise().mean().transpose();
  s.stds.resize(features.cols());
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    const double var = (features.col(j).array() - s.means[j]).square().sum() / n;
    const double sd = std::sqrt(var);
    s.stds[j] = (sd > 1e-12 && std::isfinite(sd)) ? sd : 1.0;
  }
  return s;
}

Eigen::MatrixXd apply_scaler(const Scaler& scaler, const Eigen::MatrixXd& features) {
  if (features.cols() != scaler.means.size()) {
    throw Error(ErrorCode::DimensionMismatch, "scaler expects " + std::to_string(scaler.means.size()) +
                                                  " columns, got " + std::to_string(features.cols()));
  }
  return ((features.rowwise() - scaler.means.transpose()).array().rowwise() / scaler.stds.transpose().array())
      .matrix();
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double log1p_exp(double z) {
  if (z > 0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

namespace {

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd aug(x.rows(), x.cols() + 1);
  aug.leftCols(x.cols()) = x;
  aug.col(x.cols()).setOnes();
  return aug;
}

Eigen::VectorXd resolve_weights(const Eigen::VectorXd& sample_weights, Eigen::Index n) {
  if (sample_weights.size() == 0) return Eigen::VectorXd::Ones(n);
  if (sample_weights.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "sample weights length does not match rows");
  }
  return sample_weights;
}

struct Objective {
  const Eigen::MatrixXd& xa;  // with intercept column
  const Eigen::VectorXd& y;
  const Eigen::VectorXd& w;
  double weight_sum;
  double l2;

  double loss(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd z = xa * theta;
    double total = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) total += w[i] * (log1p_exp(z[i]) - y[i] * z[i]);
    return total / weight_sum + 0.5 * l2 * theta.squaredNorm();
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& theta, Eigen::VectorXd* curvature = nullptr) const {
    const Eigen::VectorXd z = xa * theta;
    Eigen::VectorXd resid(z.size());
    if (curvature) curvature->resize(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double p = sigmoid(z[i]);
      resid[i] = w[i] * (p - y[i]);
      if (curvature) (*curvature)[i] = w[i] * p * (1.0 - p);
    }
    return xa.transpose() * resid / weight_sum + l2 * theta;
  }
};

}  // namespace

double logistic_loss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& sample_weights,
                     double l2, const Eigen::VectorXd& params) {
  const Eigen::MatrixXd xa = with_intercept(x);
  const Eigen::VectorXd w = resolve_weights(sample_weights, x.rows());
  return Objective{xa, y, w, w.sum(), l2}.loss(params);
}

Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& sample_weights, double l2, const Eigen::VectorXd& params) {
  const Eigen::MatrixXd xa = with_intercept(x);
  const Eigen::VectorXd w = resolve_weights(sample_weights, x.rows());
  return Objective{xa, y, w, w.sum(), l2}.gradient(params);
}

LogisticModel fit_logistic(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                           const LogisticOptions& options, const Eigen::VectorXd& sample_weights) {
  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  if (n == 0) throw Error(ErrorCode::EmptyMatrix, "cannot fit on zero rows");
  if (labels.size() != n) throw Error(ErrorCode::DimensionMismatch, "labels length does not match rows");
  if (!features.allFinite()) throw Error(ErrorCode::NonFinite, "features contain non-finite values");
  if (options.l2 < 0) throw Error(ErrorCode::BadConfig, "l2 must be non-negative");
  const bool has_pos = (labels.array() > 0.5).any();
  const bool has_neg = (labels.array() < 0.5).any();
  if (options.l2 == 0.0 && !(has_pos && has_neg)) {
    throw Error(ErrorCode::SingleClassUnregularized, "both classes are required when l2 = 0");
  }

  const Eigen::MatrixXd xa = with_intercept(features);
  const Eigen::VectorXd w = resolve_weights(sample_weights, n);
  const Objective obj{xa, labels, w, w.sum(), options.l2};

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
  double loss = obj.loss(theta);
  LogisticModel model;
  model.l2 = options.l2;

  Eigen::VectorXd curvature;
  std::size_t iter = 0;
  for (;; ++iter) {
    const Eigen::VectorXd grad = obj.gradient(theta, &curvature);
    model.grad_inf_norm = grad.lpNorm<Eigen::Infinity>();
    if (!std::isfinite(model.grad_inf_norm)) throw Error(ErrorCode::NonFinite, "gradient overflowed");
    if (model.grad_inf_norm <= options.tol) {
      model.converged = true;
      break;
    }
    if (iter >= options.max_iters) break;

    Eigen::MatrixXd hessian = xa.transpose() * curvature.asDiagonal() * xa / obj.weight_sum;
    hessian.diagonal().array() += options.l2 + 1e-10;
    const Eigen::VectorXd step = hessian.ldlt().solve(grad);

    // Armijo backtracking keeps the iteration monotone when far from the optimum.
    const double slope = grad.dot(step);
    double t = 1.0;
    Eigen::VectorXd candidate;
    double candidate_loss = loss;
    for (int k = 0; k < 50; ++k) {
      candidate = theta - t * step;
      candidate_loss = obj.loss(candidate);
      if (std::isfinite(candidate_loss) && candidate_loss <= loss - 1e-4 * t * slope) break;
      t *= 0.5;
    }
    if (!std::isfinite(candidate_loss)) throw Error(ErrorCode::NonFinite, "loss overflowed");
    if (candidate_loss > loss) break;  // no descent possible at machine precision
    theta = std::move(candidate);
    loss = candidate_loss;
  }
  model.n_iters = iter;
  model.weights = theta.head(d);
  model.intercept = theta[d];
  if (!model.weights.allFinite() || !std::isfinite(model.intercept)) {
    throw Error(ErrorCode::NonFinite, "parameters are not finite");
  }
  return model;
}

Eigen::VectorXd predict_logit(const LogisticModel& model, const Eigen::MatrixXd& features) {
  if (features.cols() != model.weights.size()) {
    throw Error(ErrorCode::DimensionMismatch, "model expects " + std::to_string(model.weights.size()) +
                                                  " features, got " + std::to_string(features.cols()));
  }
  return (features * model.weights).array() + model.intercept;
}

Eigen::VectorXd predict_proba(const LogisticModel& model, const Eigen::MatrixXd& features) {
  return predict_logit(model, features).unaryExpr([](double z) { return sigmoid(z); });
}

Eigen::VectorXd ScaledLogistic::predict_proba(const Eigen::MatrixXd& raw_features) const {
  return srcsel::predict_proba(model, apply_scaler(scaler, raw_features));
}

ScaledLogistic fit_scaled_logistic(const Eigen::MatrixXd& raw_features, const Eigen::VectorXd& labels,
                                   const LogisticOptions& options, const Eigen::VectorXd& sample_weights) {
  ScaledLogistic out;
  out.scaler = fit_scaler(raw_features);
  out.model = fit_logistic(apply_scaler(out.scaler, raw_features), labels, options, sample_weights);
  return out;
}

namespace {

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

nlohmann::json to_json(const ScaledLogistic& m) {
  return {
      {"weights", to_vec(m.model.weights)},
      {"intercept", m.model.intercept},
      {"l2", m.model.l2},
      {"converged", m.model.converged},
      {"n_iters", m.model.n_iters},
      {"grad_inf_norm", m.model.grad_inf_norm},
      {"scaler", {{"means", to_vec(m.scaler.means)}, {"stds", to_vec(m.scaler.stds)}}},
  };
}

ScaledLogistic scaled_logistic_from_json(const nlohmann::json& doc) {
  ScaledLogistic m;
  try {
    m.model.weights = from_vec(doc.at("weights").get<std::vector<double>>());
    m.model.intercept = doc.at("intercept").get<double>();
    m.model.l2 = doc.at("l2").get<double>();
    m.model.converged = doc.at("converged").get<bool>();
    m.model.n_iters = doc.at("n_iters").get<std::size_t>();
    m.model.grad_inf_norm = doc.value("grad_inf_norm", 0.0);
    m.scaler.means = from_vec(doc.at("scaler").at("means").get<std::vector<double>>());
    m.scaler.stds = from_vec(doc.at("scaler").at("stds").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("model document: ") + e.what());
  }
  if (m.scaler.means.size() != m.model.weights.size() || m.scaler.stds.size() != m.model.weights.size()) {
    throw Error(ErrorCode::DimensionMismatch, "model document: scaler and weights disagree");
  }
  return m;
}

}  // namespace srcsel
