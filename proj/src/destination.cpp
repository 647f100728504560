#include "trajgen/destination.hpp"

#include <cmath>
#include <limits>

namespace trajgen {

Eigen::Matrix2d component_covariance(const Eigen::Vector2d& sigma, double rho) {
  if (!(sigma.x() > 0.0) || !(sigma.y() > 0.0) || !(std::abs(rho) < 1.0)) {
    throw Error("component_covariance: need sigma > 0 and |rho| < 1");
  }
  const double off = rho * sigma.x() * sigma.y();
  Eigen::Matrix2d cov;
  cov << sigma.x() * sigma.x(), off, off, sigma.y() * sigma.y();
  return cov;
}

void DestinationMixture::validate() const {
  const auto k = weights.size();
  if (k == 0 || means.rows() != k || sigma.rows() != k || rho.size() != k) {
    throw Error("DestinationMixture: inconsistent component counts");
  }
  if ((weights.array() <= 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-5) {
    throw Error("DestinationMixture: weights are not a probability vector");
  }
  if ((sigma.array() <= 0.0).any()) throw Error("DestinationMixture: non-positive sigma");
  if ((rho.array().abs() >= 1.0).any()) throw Error("DestinationMixture: |rho| >= 1");
}

double DestinationMixture::log_density(const Eigen::Vector2d& d) const {
  const int k = components();
  Eigen::VectorXd terms(k);
  for (int c = 0; c < k; ++c) {
    const double zx = (d.x() - means(c, 0)) / sigma(c, 0);
    const double zy = (d.y() - means(c, 1)) / sigma(c, 1);
    const double r = rho(c);
    const double one_minus = 1.0 - r * r;
    const double quad = (zx * zx + zy * zy - 2.0 * r * zx * zy) / one_minus;
    terms(c) = std::log(weights(c)) - std::log(2.0 * std::numbers::pi) - std::log(sigma(c, 0)) -
               std::log(sigma(c, 1)) - 0.5 * std::log(one_minus) - 0.5 * quad;
  }
  const double m = terms.maxCoeff();
  if (!std::isfinite(m)) return -std::numeric_limits<double>::infinity();
  return m + std::log((terms.array() - m).exp().sum());
}

Eigen::Vector2d sample_destination(const DestinationMixture& mixture, Rng& rng) {
  const int k = mixture.components();
  const double u = rng.uniform() * mixture.weights.sum();
  int chosen = k - 1;
  double cumulative = 0.0;
  for (int c = 0; c < k; ++c) {
    cumulative += mixture.weights(c);
    if (u < cumulative) {
      chosen = c;
      break;
    }
  }
  const double sx = mixture.sigma(chosen, 0);
  const double sy = mixture.sigma(chosen, 1);
  const double r = mixture.rho(chosen);
  const double z1 = rng.normal();
  const double z2 = rng.normal();
  // Cholesky factor of the covariance: [[sx, 0], [r sy, sy sqrt(1 - r^2)]].
  return {mixture.means(chosen, 0) + sx * z1,
          mixture.means(chosen, 1) + sy * (r * z1 + std::sqrt(1.0 - r * r) * z2)};
}

}  // namespace trajgen
