#pragma once

// The model contract shared by every selection method: fit on a (reweighted)
// training sample, evaluate on the target.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "srcsel/dataset.hpp"
#include "srcsel/error.hpp"

namespace srcsel {

enum class LearnerFamily { least_squares, logistic };

inline std::string_view to_string(LearnerFamily f) {
  return f == LearnerFamily::least_squares ? "least-squares" : "logistic";
}

struct LearnerSpec {
  LearnerFamily family = LearnerFamily::least_squares;
  bool intercept = true;
  /// Ridge penalty applied only when the design is rank deficient. Zero
  /// selects the minimum-norm least-squares solution instead.
  double ridge_epsilon = 0.0;
  int max_iters = 100;      // logistic only
  double tolerance = 1e-10; // logistic only

  void validate() const {
    if (!(ridge_epsilon >= 0.0) || !std::isfinite(ridge_epsilon)) {
      throw ConfigError("learner ridge_epsilon must be finite and >= 0");
    }
    if (max_iters < 1) throw ConfigError("learner max_iters must be >= 1");
    if (!(tolerance > 0.0)) throw ConfigError("learner tolerance must be > 0");
  }
};

struct FittedModel {
  LearnerFamily family = LearnerFamily::least_squares;
  bool intercept = true;
  Vector coefficients;  // intercept first when present
  int rank = 0;
  bool ridge_used = false;
  bool converged = true;
  int iterations = 0;
  /// Logistic negative log-likelihood after each accepted Newton step,
  /// starting with the value at zero coefficients.
  std::vector<double> objective_history;

  std::size_t n_features() const {
    return static_cast<std::size_t>(coefficients.size()) - (intercept ? 1 : 0);
  }

  /// Linear predictor for least squares, probability of class 1 for logistic.
  Vector predict(const Matrix& x) const {
    if (static_cast<std::size_t>(x.cols()) != n_features()) {
      throw LearnerError("feature dimension mismatch: model expects " +
                         std::to_string(n_features()) + ", got " + std::to_string(x.cols()));
    }
    Vector eta = x * coefficients.tail(static_cast<Eigen::Index>(n_features()));
    if (intercept) eta.array() += coefficients(0);
    if (family == LearnerFamily::logistic) {
      eta = eta.unaryExpr([](double t) { return 1.0 / (1.0 + std::exp(-t)); });
    }
    return eta;
  }
};

enum class Metric { mse, error_rate };

inline std::string_view to_string(Metric m) { return m == Metric::mse ? "mse" : "error-rate"; }

/// Always a loss: lower is better.
struct LossValue {
  double value = 0.0;
  Metric metric = Metric::mse;

  double accuracy() const { return 1.0 - value; }
};

namespace detail {

inline Matrix design_matrix(const Matrix& x, bool intercept) {
  if (!intercept) return x;
  Matrix d(x.rows(), x.cols() + 1);
  d.col(0).setOnes();
  d.rightCols(x.cols()) = x;
  return d;
}

/// Ridge solution (D'D + eps I)^-1 D'y evaluated through the SVD of D.
inline Vector ridge_solve(const Matrix& d, const Vector& y, double eps) {
  Eigen::BDCSVD<Matrix> svd(d, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector s = svd.singularValues();
  const Vector shrink = s.array() / (s.array().square() + eps);
  return svd.matrixV() * (shrink.asDiagonal() * (svd.matrixU().transpose() * y));
}

inline double log1pexp(double t) {
  return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

inline double logistic_nll(const Matrix& d, const Vector& y, const Vector& beta) {
  const Vector eta = d * beta;
  double nll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) nll += log1pexp(eta(i)) - y(i) * eta(i);
  return nll;
}

}  // namespace detail

inline FittedModel fit_least_squares(const LearnerSpec& spec, const Matrix& d, const Vector& y) {
  FittedModel model;
  model.family = LearnerFamily::least_squares;
  model.intercept = spec.intercept;
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(d);
  model.rank = static_cast<int>(cod.rank());
  if (model.rank < d.cols() && spec.ridge_epsilon > 0.0) {
    model.coefficients = detail::ridge_solve(d, y, spec.ridge_epsilon);
    model.ridge_used = true;
  } else {
    model.coefficients = cod.solve(y);
  }
  return model;
}

/// Damped Newton iterations on the logistic negative log-likelihood. Step
/// halving guarantees the objective never increases. When the Hessian is
/// singular the minimum-norm Newton direction is used (plus ridge_epsilon on
/// the diagonal when set).
inline FittedModel fit_logistic(const LearnerSpec& spec, const Matrix& d, const Vector& y) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) != 0.0 && y(i) != 1.0) throw LearnerError("logistic response must be 0 or 1");
  }
  FittedModel model;
  model.family = LearnerFamily::logistic;
  model.intercept = spec.intercept;
  model.converged = false;
  Vector beta = Vector::Zero(d.cols());
  double nll = detail::logistic_nll(d, y, beta);
  model.objective_history.push_back(nll);
  {
    Eigen::ColPivHouseholderQR<Matrix> qr(d);
    model.rank = static_cast<int>(qr.rank());
  }

  for (int iter = 0; iter < spec.max_iters; ++iter) {
    const Vector eta = d * beta;
    const Vector prob = eta.unaryExpr([](double t) { return 1.0 / (1.0 + std::exp(-t)); });
    const Vector grad = d.transpose() * (prob - y);
    const Vector w = prob.array() * (1.0 - prob.array());
    Matrix hess = d.transpose() * w.asDiagonal() * d;

    if (grad.lpNorm<Eigen::Infinity>() <= spec.tolerance) {
      model.converged = true;
      break;
    }

    Eigen::LDLT<Matrix> ldlt(hess);
    Vector step;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
        ldlt.vectorD().minCoeff() > 1e-12 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
      step = ldlt.solve(grad);
    } else {
      if (spec.ridge_epsilon > 0.0) {
        hess.diagonal().array() += spec.ridge_epsilon;
        model.ridge_used = true;
      }
      step = hess.completeOrthogonalDecomposition().solve(grad);
    }

    double t = 1.0;
    bool accepted = false;
    Vector candidate;
    double candidate_nll = nll;
    for (int halving = 0; halving < 60; ++halving) {
      candidate = beta - t * step;
      candidate_nll = detail::logistic_nll(d, y, candidate);
      if (std::isfinite(candidate_nll) && candidate_nll <= nll) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    model.iterations = iter + 1;
    if (!accepted) {
      model.converged = grad.lpNorm<Eigen::Infinity>() <= std::sqrt(spec.tolerance);
      break;
    }
    const double decrease = nll - candidate_nll;
    beta = candidate;
    nll = candidate_nll;
    model.objective_history.push_back(nll);
    if (decrease <= spec.tolerance * (1.0 + std::abs(nll))) {
      model.converged = true;
      break;
    }
  }
  model.coefficients = beta;
  return model;
}

/// Fits the learner. Logistic fits that exhaust max_iters return the best
/// iterate with converged = false.
inline FittedModel fit(const LearnerSpec& spec, const Matrix& x, const Vector& y) {
  spec.validate();
  if (x.rows() == 0) throw LearnerError("empty training set");
  if (x.rows() != y.size()) throw LearnerError("training features and response lengths differ");
  if (!x.allFinite() || !y.allFinite()) throw LearnerError("training data contains non-finite values");
  const Matrix d = detail::design_matrix(x, spec.intercept);
  FittedModel model = spec.family == LearnerFamily::least_squares ? fit_least_squares(spec, d, y)
                                                                  : fit_logistic(spec, d, y);
  if (!model.coefficients.allFinite()) throw LearnerError("fit produced non-finite coefficients");
  return model;
}

inline FittedModel fit(const LearnerSpec& spec, const Dataset& train) {
  return fit(spec, train.features, train.response);
}

inline LossValue evaluate(const FittedModel& model, const Matrix& x, const Vector& y) {
  if (x.rows() == 0) throw LearnerError("empty evaluation set");
  if (x.rows() != y.size()) throw LearnerError("evaluation features and response lengths differ");
  const Vector pred = model.predict(x);
  if (model.family == LearnerFamily::least_squares) {
    return {(pred - y).squaredNorm() / static_cast<double>(y.size()), Metric::mse};
  }
  std::size_t wrong = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double label = pred(i) >= 0.5 ? 1.0 : 0.0;
    if (label != y(i)) ++wrong;
  }
  return {static_cast<double>(wrong) / static_cast<double>(y.size()), Metric::error_rate};
}

inline LossValue evaluate(const FittedModel& model, const Dataset& target) {
  return evaluate(model, target.features, target.response);
}

}  // namespace srcsel
