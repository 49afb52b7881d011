#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "tailcast/nn/layers.hpp"

namespace tailcast::nn {

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t step = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
};

/// One bias-corrected Adam update over every parameter in `params`.
inline void adam_step(std::span<const ParamRef> params, AdamState& st) {
  if (st.m.empty()) {
    for (const auto& p : params) {
      st.m.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
      st.v.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
    }
  }
  if (st.m.size() != params.size()) throw Error("adam: parameter list changed shape");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k].grad->allFinite()) throw Error("adam: non-finite gradient in parameter " + std::to_string(k));
    if (st.m[k].rows() != params[k].value->rows() || st.m[k].cols() != params[k].value->cols())
      throw Error("adam: moment shape mismatch for parameter " + std::to_string(k));
  }
  ++st.step;
  const double t = static_cast<double>(st.step);
  const double c1 = 1.0 - std::pow(st.beta1, t);
  const double c2 = 1.0 - std::pow(st.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Matrix& g = *params[k].grad;
    st.m[k] = st.beta1 * st.m[k] + (1.0 - st.beta1) * g;
    st.v[k] = st.beta2 * st.v[k] + (1.0 - st.beta2) * g.cwiseProduct(g);
    params[k].value->array() -= st.lr * (st.m[k].array() / c1) / ((st.v[k].array() / c2).sqrt() + st.eps);
  }
}

/// Rescales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
inline double clip_global_norm(std::span<const ParamRef> params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) sq += p.grad->squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0)
    for (const auto& p : params) *p.grad *= max_norm / norm;
  return norm;
}

struct LossValue {
  double value;
  Matrix grad;  // dL/dprediction
};

/// Mean of squared errors over every entry.
inline LossValue mse_loss(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) throw Error("mse: shape mismatch");
  const Matrix diff = pred - target;
  const double n = static_cast<double>(diff.size());
  return {diff.squaredNorm() / n, (2.0 / n) * diff};
}

inline constexpr double kProbabilityClamp = 1e-7;

/// Binary cross-entropy, averaged over entries. Probabilities are clamped to
/// [1e-7, 1-1e-7]; the gradient is zero where the clamp is active.
inline LossValue bce_loss(const Matrix& prob, const Matrix& label) {
  if (prob.rows() != label.rows() || prob.cols() != label.cols()) throw Error("bce: shape mismatch");
  const double n = static_cast<double>(prob.size());
  LossValue out{0.0, Matrix::Zero(prob.rows(), prob.cols())};
  for (Eigen::Index j = 0; j < prob.cols(); ++j) {
    for (Eigen::Index i = 0; i < prob.rows(); ++i) {
      const double raw = prob(i, j);
      const double p = std::clamp(raw, kProbabilityClamp, 1.0 - kProbabilityClamp);
      const double y = label(i, j);
      out.value -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
      if (raw == p) out.grad(i, j) = (-y / p + (1.0 - y) / (1.0 - p)) / n;
    }
  }
  out.value /= n;
  return out;
}

inline double bce_loss(double p, double label) {
  Matrix pm(1, 1), lm(1, 1);
  pm(0, 0) = p;
  lm(0, 0) = label;
  return bce_loss(pm, lm).value;
}

}  // namespace tailcast::nn
