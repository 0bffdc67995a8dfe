#pragma once

#include <cstddef>

#include <Eigen/Dense>
#include <json.hpp>

namespace srcsel {

/// Per-column standardization. Constant columns keep std = 1 so they map to zero.
struct Scaler {
  Eigen::VectorXd means;
  Eigen::VectorXd stds;
};

Scaler fit_scaler(const Eigen::MatrixXd& features);
Eigen::MatrixXd apply_scaler(const Scaler& scaler, const Eigen::MatrixXd& features);

struct LogisticOptions {
  double l2 = 1.0;
  double tol = 1e-6;
  std::size_t max_iters = 1000;
};

struct LogisticModel {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  double l2 = 0.0;
  bool converged = false;
  std::size_t n_iters = 0;
  double grad_inf_norm = 0.0;
};

/// Objective being minimised:
///   (1 / sum w) * sum_i w_i * [log(1 + exp(z_i)) - y_i z_i] + (l2 / 2) * (|weights|^2 + intercept^2)
/// with z = X weights + intercept. `params` packs (weights..., intercept).
/// Sample weights may be empty (all ones).
double logistic_loss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& sample_weights,
                     double l2, const Eigen::VectorXd& params);
Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& sample_weights, double l2, const Eigen::VectorXd& params);

/// Damped Newton from zero initialisation. Deterministic; `converged` is set only
/// when the gradient inf-norm drops to `tol`.
LogisticModel fit_logistic(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                           const LogisticOptions& options = {}, const Eigen::VectorXd& sample_weights = {});

Eigen::VectorXd predict_logit(const LogisticModel& model, const Eigen::MatrixXd& features);
Eigen::VectorXd predict_proba(const LogisticModel& model, const Eigen::MatrixXd& features);

double sigmoid(double z);
/// log(1 + exp(z)) without overflow.
double log1p_exp(double z);

/// A scaler and model fitted together; the task-model unit used by evaluation.
struct ScaledLogistic {
  Scaler scaler;
  LogisticModel model;

  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& raw_features) const;
};

ScaledLogistic fit_scaled_logistic(const Eigen::MatrixXd& raw_features, const Eigen::VectorXd& labels,
                                   const LogisticOptions& options = {},
                                   const Eigen::VectorXd& sample_weights = {});

nlohmann::json to_json(const ScaledLogistic& model);
ScaledLogistic scaled_logistic_from_json(const nlohmann::json& doc);

}  // namespace srcsel
