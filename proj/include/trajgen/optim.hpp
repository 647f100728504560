#ifndef TRAJGEN_OPTIM_HPP_
#define TRAJGEN_OPTIM_HPP_

#include "trajgen/core.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace trajgen {

template <typename Scalar>
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;
  std::vector<Matrix<Scalar>> first_moment;
  std::vector<Matrix<Scalar>> second_moment;
};

/// Bias-corrected Adam update applied in place to every parameter.
template <typename Scalar>
void adam_step(std::span<Parameter<Scalar>* const> params, AdamState<Scalar>& state, double lr) {
  if (!(lr > 0.0)) throw Error("adam_step: learning rate must be positive");
  if (state.first_moment.empty()) {
    for (const auto* p : params) {
      state.first_moment.push_back(Matrix<Scalar>::Zero(p->value.rows(), p->value.cols()));
      state.second_moment.push_back(Matrix<Scalar>::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ShapeError("adam_step: optimizer state tracks " +
                     std::to_string(state.first_moment.size()) + " parameters, got " +
                     std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = *params[i];
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols() ||
        state.first_moment[i].rows() != p.value.rows() ||
        state.first_moment[i].cols() != p.value.cols()) {
      throw ShapeError("adam_step: shape mismatch for parameter '" + p.name + "'");
    }
    if (!p.grad.allFinite()) throw NumericError("adam_step: non-finite gradient in '" + p.name + "'");
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const Scalar b1 = static_cast<Scalar>(state.beta1);
  const Scalar b2 = static_cast<Scalar>(state.beta2);
  const Scalar correction1 = static_cast<Scalar>(1.0 - std::pow(state.beta1, t));
  const Scalar correction2 = static_cast<Scalar>(1.0 - std::pow(state.beta2, t));
  const Scalar rate = static_cast<Scalar>(lr);
  const Scalar eps = static_cast<Scalar>(state.epsilon);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    auto m = state.first_moment[i].array();
    auto v = state.second_moment[i].array();
    const auto g = p.grad.array();
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.square();
    p.value.array() -= rate * (m / correction1) / ((v / correction2).sqrt() + eps);
  }
}

/// Rescales all gradients so their global L2 norm is at most `max_norm`.
/// Returns the applied scale (1 when no clipping happened).
template <typename Scalar>
double clip_grad_norm(std::span<Parameter<Scalar>* const> params, double max_norm,
                      double* norm_out = nullptr) {
  if (!(max_norm > 0.0)) throw Error("clip_grad_norm: max_norm must be positive");
  double squared = 0.0;
  for (const auto* p : params) squared += p->grad.template cast<double>().squaredNorm();
  const double norm = std::sqrt(squared);
  if (!std::isfinite(norm)) throw NumericError("clip_grad_norm: non-finite gradient norm");
  if (norm_out != nullptr) *norm_out = norm;
  if (norm <= max_norm) return 1.0;
  const double scale = max_norm / norm;
  for (auto* p : params) p->grad *= static_cast<Scalar>(scale);
  return scale;
}

}  // namespace trajgen

#endif  // TRAJGEN_OPTIM_HPP_
