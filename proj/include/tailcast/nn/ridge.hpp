#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "tailcast/embedding.hpp"
#include "tailcast/nn/layers.hpp"
#include "tailcast/nn/train.hpp"

namespace tailcast::nn {

/// Linear autoregressor: forecast = coefficients * window + intercept.
struct RidgeModel {
  Matrix coefficients;  // P x D
  Matrix intercept;     // P x 1
  double lambda = 0.0;

  std::size_t window() const { return static_cast<std::size_t>(coefficients.cols()); }
  std::size_t horizon() const { return static_cast<std::size_t>(coefficients.rows()); }

  Matrix predict(const Matrix& windows) const {
    if (windows.rows() != coefficients.cols())
      throw Error("ridge: expected windows of length " + std::to_string(coefficients.cols()) + ", got " +
                  std::to_string(windows.rows()));
    return (coefficients * windows).colwise() + intercept.col(0);
  }
};

/// Closed-form ridge per horizon step with an unpenalised intercept:
/// minimises |X b + c - y|^2 + lambda |b|^2.
inline RidgeModel ridge_fit(const Matrix& inputs, const Matrix& targets, double lambda) {
  if (!(lambda >= 0.0)) throw Error("ridge: lambda must be >= 0");
  if (inputs.cols() == 0 || inputs.cols() != targets.cols()) throw Error("ridge: bad sample count");
  const Eigen::Index d = inputs.rows();
  const Eigen::Index n = inputs.cols();
  Matrix design(n, d + 1);
  design.leftCols(d) = inputs.transpose();
  design.col(d).setOnes();
  const Matrix y = targets.transpose();  // n x P

  Matrix gram = design.transpose() * design;
  gram.diagonal().head(d).array() += lambda;
  const Matrix rhs = design.transpose() * y;
  Matrix beta;
  if (lambda == 0.0) {
    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    if (qr.rank() < d + 1) throw Error("ridge: design matrix is rank deficient with lambda = 0");
    beta = qr.solve(y);
  } else {
    Eigen::LDLT<Matrix> ldlt(gram);
    if (ldlt.info() != Eigen::Success) throw Error("ridge: normal equations are singular");
    beta = ldlt.solve(rhs);
  }
  RidgeModel m;
  m.coefficients = beta.topRows(d).transpose();
  m.intercept = beta.row(d).transpose();
  m.lambda = lambda;
  return m;
}

inline RidgeModel ridge_ar_fit(const WindowDataset& ds, double lambda) {
  const Batch b = to_matrices(ds);
  return ridge_fit(b.inputs, b.targets, lambda);
}

inline std::vector<double> ridge_predict(const RidgeModel& model, std::span<const double> window) {
  Matrix x(static_cast<Eigen::Index>(window.size()), 1);
  for (std::size_t i = 0; i < window.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = window[i];
  const Matrix y = model.predict(x);
  return std::vector<double>(y.data(), y.data() + y.size());
}

}  // namespace tailcast::nn
