#ifndef TRAJGEN_DESTINATION_HPP_
#define TRAJGEN_DESTINATION_HPP_

#include "trajgen/cells.hpp"
#include "trajgen/config.hpp"

#include <numbers>
#include <vector>

namespace trajgen {

/// K-component bivariate Gaussian mixture over one agent's destination.
/// `means` and `sigma` are K x 2 (x, y); all values in the agent frame.
struct DestinationMixture {
  Eigen::VectorXd weights;
  Eigen::Matrix<double, Eigen::Dynamic, 2> means;
  Eigen::Matrix<double, Eigen::Dynamic, 2> sigma;
  Eigen::VectorXd rho;

  int components() const { return static_cast<int>(weights.size()); }
  /// Log density via log-sum-exp over components.
  double log_density(const Eigen::Vector2d& d) const;
  /// Throws Error unless weights form a simplex point, sigma > 0, |rho| < 1.
  void validate() const;
};

/// [[sx^2, rho sx sy], [rho sx sy, sy^2]]; requires sigma > 0 and |rho| < 1.
Eigen::Matrix2d component_covariance(const Eigen::Vector2d& sigma, double rho);

/// Component k ~ Categorical(weights), then mu_k + L z with L the Cholesky
/// factor of the component covariance and z two standard normals.
Eigen::Vector2d sample_destination(const DestinationMixture& mixture, Rng& rng);

inline double hinge(double x) { return x > 0.0 ? x : 0.0; }

/// The four affine heads mapping a context vector to mixture parameters:
/// logits (K), means (2K), log std devs (2K) and pre-tanh correlations (K).
/// Two-column blocks are laid out [x_1..x_K, y_1..y_K].
template <typename Scalar>
struct MixtureHeads {
  Linear<Scalar> logits;
  Linear<Scalar> means;
  Linear<Scalar> log_sigma;
  Linear<Scalar> correlation;

  MixtureHeads() = default;
  MixtureHeads(int context, int k)
      : logits("gmm.logits", context, k),
        means("gmm.means", context, 2 * k),
        log_sigma("gmm.log_sigma", context, 2 * k),
        correlation("gmm.correlation", context, k) {}

  int components() const { return static_cast<int>(logits.bias.value.cols()); }

  void init(Rng& rng) {
    logits.init(rng);
    means.init(rng);
    log_sigma.init(rng);
    correlation.init(rng);
  }

  template <typename F>
  void for_each_parameter(F&& f) {
    logits.for_each_parameter(f);
    means.for_each_parameter(f);
    log_sigma.for_each_parameter(f);
    correlation.for_each_parameter(f);
  }
  template <typename F>
  void for_each_parameter(F&& f) const {
    logits.for_each_parameter(f);
    means.for_each_parameter(f);
    log_sigma.for_each_parameter(f);
    correlation.for_each_parameter(f);
  }
};

template <typename Scalar>
struct BoundHeads {
  BoundLinear<Scalar> logits, means, log_sigma, correlation;
};

template <typename Scalar>
BoundHeads<Scalar> bind(Tape<Scalar>& tape, MixtureHeads<Scalar>& heads) {
  return {bind(tape, heads.logits), bind(tape, heads.means), bind(tape, heads.log_sigma),
          bind(tape, heads.correlation)};
}

/// Mixture parameters for N agents as tape nodes (rows = agents).
template <typename Scalar>
struct MixtureVars {
  int k = 0;
  Var<Scalar> logits;   // N x K
  Var<Scalar> weights;  // N x K, softmax(logits)
  Var<Scalar> means;    // N x 2K
  Var<Scalar> sigma;    // N x 2K, exp(log_sigma)
  Var<Scalar> rho;      // N x K, tanh(raw)
};

/// c = softmax(pi), sigma = exp(.), rho = tanh(.).
template <typename Scalar>
MixtureVars<Scalar> make_mixture(Var<Scalar> logits, Var<Scalar> means, Var<Scalar> log_sigma,
                                 Var<Scalar> raw_correlation) {
  const auto k = logits.cols();
  if (means.cols() != 2 * k || log_sigma.cols() != 2 * k || raw_correlation.cols() != k) {
    throw ShapeError("make_mixture: head widths inconsistent with K=" + std::to_string(k));
  }
  MixtureVars<Scalar> m;
  m.k = static_cast<int>(k);
  m.logits = logits;
  m.weights = softmax(logits);
  m.means = means;
  m.sigma = exp(log_sigma);
  m.rho = tanh(raw_correlation);
  return m;
}

template <typename Scalar>
MixtureVars<Scalar> predict_mixture(const BoundHeads<Scalar>& heads, Var<Scalar> context) {
  return make_mixture(apply(heads.logits, context), apply(heads.means, context),
                      apply(heads.log_sigma, context), apply(heads.correlation, context));
}

/// log P(d) per agent (N x 1) for destinations d (N x 2).
template <typename Scalar>
Var<Scalar> mixture_log_density(const MixtureVars<Scalar>& m, Var<Scalar> d) {
  const int k = m.k;
  if (d.cols() != 2 || d.rows() != m.means.rows()) {
    throw ShapeError("mixture_log_density: destinations " + shape_string(d.value()) +
                     " do not match " + std::to_string(m.means.rows()) + " agents");
  }
  Var<Scalar> dx = sub(broadcast_cols(slice(d, 0, 1), k), slice(m.means, 0, k));
  Var<Scalar> dy = sub(broadcast_cols(slice(d, 1, 1), k), slice(m.means, k, k));
  Var<Scalar> sx = slice(m.sigma, 0, k);
  Var<Scalar> sy = slice(m.sigma, k, k);
  Var<Scalar> zx = div(dx, sx);
  Var<Scalar> zy = div(dy, sy);
  Var<Scalar> one_minus_rho2 = add_scalar(scale(square(m.rho), Scalar(-1)), Scalar(1));
  Var<Scalar> quad = div(sub(add(square(zx), square(zy)), scale(mul(m.rho, mul(zx, zy)), Scalar(2))),
                         one_minus_rho2);
  // log N_k = -log(2 pi) - log sx - log sy - 0.5 log(1 - rho^2) - 0.5 quad
  Var<Scalar> log_norm = add_scalar(
      scale(add(add(add(log(sx), log(sy)), scale(log(one_minus_rho2), Scalar(0.5))),
                scale(quad, Scalar(0.5))),
            Scalar(-1)),
      static_cast<Scalar>(-std::log(2.0 * std::numbers::pi)));
  Var<Scalar> log_weights = sub(m.logits, broadcast_cols(logsumexp(m.logits), k));
  return logsumexp(add(log_weights, log_norm));
}

/// -(1/N) sum_i log P(d_i).
template <typename Scalar>
Var<Scalar> destination_nll(const MixtureVars<Scalar>& m, Var<Scalar> d) {
  if (d.rows() == 0) throw Error("destination_nll: empty agent set");
  return scale(mean(mixture_log_density(m, d)), Scalar(-1));
}

/// Hinge penalties on close centres (ordered pairs), heavy weights and wide
/// components, summed over agents.
template <typename Scalar>
Var<Scalar> mode_collapse_loss(const MixtureVars<Scalar>& m, const RegularizerConfig& cfg) {
  Tape<Scalar>& tape = *m.means.tape();
  const int k = m.k;
  std::vector<Var<Scalar>> terms;
  if (cfg.alpha1 != 0.0) {
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) {
        if (a == b) continue;
        Var<Scalar> diff = concat<Scalar>({sub(slice(m.means, a, 1), slice(m.means, b, 1)),
                                           sub(slice(m.means, k + a, 1), slice(m.means, k + b, 1))});
        Var<Scalar> h =
            hinge(add_scalar(scale(row_norm(diff), static_cast<Scalar>(-cfg.beta1)), Scalar(1)));
        terms.push_back(scale(sum(h), static_cast<Scalar>(cfg.alpha1)));
      }
    }
  }
  if (cfg.alpha2 != 0.0) {
    Var<Scalar> h = hinge(add_scalar(scale(m.weights, static_cast<Scalar>(cfg.beta2)), Scalar(-1)));
    terms.push_back(scale(sum(h), static_cast<Scalar>(cfg.alpha2)));
  }
  if (cfg.alpha3 != 0.0) {
    for (int c = 0; c < k; ++c) {
      Var<Scalar> norm = row_norm(concat<Scalar>({slice(m.sigma, c, 1), slice(m.sigma, k + c, 1)}));
      Var<Scalar> h = hinge(add_scalar(scale(norm, static_cast<Scalar>(cfg.beta3)), Scalar(-1)));
      terms.push_back(scale(sum(h), static_cast<Scalar>(cfg.alpha3)));
    }
  }
  if (terms.empty()) return tape.constant(Matrix<Scalar>::Zero(1, 1));
  Var<Scalar> total = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) total = add(total, terms[i]);
  return total;
}

/// Per-agent mixtures read out of the tape values.
template <typename Scalar>
std::vector<DestinationMixture> extract_mixtures(const MixtureVars<Scalar>& m) {
  const auto& w = m.weights.value();
  const auto& mu = m.means.value();
  const auto& s = m.sigma.value();
  const auto& r = m.rho.value();
  std::vector<DestinationMixture> out;
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    DestinationMixture mix;
    mix.weights = w.row(i).transpose().template cast<double>();
    mix.means.resize(m.k, 2);
    mix.sigma.resize(m.k, 2);
    for (int c = 0; c < m.k; ++c) {
      mix.means(c, 0) = static_cast<double>(mu(i, c));
      mix.means(c, 1) = static_cast<double>(mu(i, m.k + c));
      mix.sigma(c, 0) = static_cast<double>(s(i, c));
      mix.sigma(c, 1) = static_cast<double>(s(i, m.k + c));
    }
    mix.rho = r.row(i).transpose().template cast<double>();
    out.push_back(std::move(mix));
  }
  return out;
}

}  // namespace trajgen

#endif  // TRAJGEN_DESTINATION_HPP_
