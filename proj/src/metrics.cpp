#include "trajgen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

namespace trajgen {

namespace {

void check_pair(const char* op, std::span<const Trajectory> a, std::span<const Trajectory> b) {
  if (a.size() != b.size() || a.empty()) {
    throw ShapeError(std::string(op) + ": agent counts " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].rows() != b[i].rows() || a[i].rows() == 0) {
      throw ShapeError(std::string(op) + ": agent " + std::to_string(i) + " has " +
                       std::to_string(a[i].rows()) + " vs " + std::to_string(b[i].rows()) +
                       " steps");
    }
  }
}

double agent_ade(const Trajectory& p, const Trajectory& t) {
  return (p - t).rowwise().norm().mean();
}

double agent_fde(const Trajectory& p, const Trajectory& t) {
  return (p.row(p.rows() - 1) - t.row(t.rows() - 1)).norm();
}

}  // namespace

double ade(std::span<const Trajectory> predicted, std::span<const Trajectory> truth) {
  check_pair("ade", predicted, truth);
  double total = 0.0;
  Eigen::Index count = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    total += (predicted[i] - truth[i]).rowwise().norm().sum();
    count += predicted[i].rows();
  }
  return total / static_cast<double>(count);
}

double fde(std::span<const Trajectory> predicted, std::span<const Trajectory> truth) {
  check_pair("fde", predicted, truth);
  double total = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) total += agent_fde(predicted[i], truth[i]);
  return total / static_cast<double>(predicted.size());
}

double best_of(const std::vector<std::vector<Trajectory>>& samples,
               std::span<const Trajectory> truth, Displacement metric) {
  if (samples.empty()) throw Error("best_of: empty sample set");
  for (const auto& s : samples) check_pair("best_of", s, truth);
  double total = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) {
      const double v = metric == Displacement::kAde ? agent_ade(s[i], truth[i])
                                                    : agent_fde(s[i], truth[i]);
      best = std::min(best, v);
    }
    total += best;
  }
  return total / static_cast<double>(truth.size());
}

double asd_agent(std::span<const Trajectory> samples, AsdMode mode) {
  if (samples.size() < 2) throw Error("asd: need at least two samples");
  double best = 0.0;
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < samples.size(); ++a) {
    for (std::size_t b = a + 1; b < samples.size(); ++b) {
      if (samples[a].rows() != samples[b].rows()) throw ShapeError("asd: samples differ in length");
      const double d = (samples[a] - samples[b]).rowwise().norm().mean();
      best = std::max(best, d);
      total += d;
      ++pairs;
    }
  }
  return mode == AsdMode::kMaxPair ? best : total / static_cast<double>(pairs);
}

double asd(const std::vector<std::vector<Trajectory>>& samples, AsdMode mode) {
  if (samples.size() < 2) throw Error("asd: need at least two samples");
  const std::size_t agents = samples.front().size();
  if (agents == 0) throw Error("asd: no agents");
  double total = 0.0;
  std::vector<Trajectory> per_agent(samples.size());
  for (std::size_t i = 0; i < agents; ++i) {
    for (std::size_t l = 0; l < samples.size(); ++l) {
      if (samples[l].size() != agents) throw ShapeError("asd: samples differ in agent count");
      per_agent[l] = samples[l][i];
    }
    total += asd_agent(per_agent, mode);
  }
  return total / static_cast<double>(agents);
}

const char* primitive_name(Primitive p) {
  switch (p) {
    case Primitive::kVelocity:
      return "velocity";
    case Primitive::kAcceleration:
      return "acceleration";
    case Primitive::kAngularVelocity:
      return "angular_velocity";
    case Primitive::kAngularAcceleration:
      return "angular_acceleration";
  }
  return "unknown";
}

std::vector<double>& PrimitiveSeries::operator[](Primitive p) {
  switch (p) {
    case Primitive::kVelocity:
      return velocity;
    case Primitive::kAcceleration:
      return acceleration;
    case Primitive::kAngularVelocity:
      return angular_velocity;
    case Primitive::kAngularAcceleration:
      break;
  }
  return angular_acceleration;
}

const std::vector<double>& PrimitiveSeries::operator[](Primitive p) const {
  return const_cast<PrimitiveSeries&>(*this)[p];
}

void PrimitiveSeries::append(const PrimitiveSeries& other) {
  for (Primitive p : kPrimitives) (*this)[p].insert((*this)[p].end(), other[p].begin(), other[p].end());
}

double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * std::numbers::pi);
  if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
  return r;
}

PrimitiveSeries motion_primitives(const Trajectory& positions, double dt, double v_min) {
  if (positions.rows() < 4) {
    throw Error("motion_primitives: need at least 4 points, got " + std::to_string(positions.rows()));
  }
  if (!(dt > 0.0)) throw Error("motion_primitives: dt must be positive");
  PrimitiveSeries out;
  const Eigen::Index n = positions.rows() - 1;
  Trajectory v(n, 2);
  for (Eigen::Index k = 0; k < n; ++k) v.row(k) = (positions.row(k + 1) - positions.row(k)) / dt;
  for (Eigen::Index k = 0; k < n; ++k) out.velocity.push_back(v.row(k).norm());
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    out.acceleration.push_back(((v.row(k + 1) - v.row(k)) / dt).norm());
  }

  std::vector<std::optional<double>> heading(static_cast<std::size_t>(n));
  std::optional<double> last;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (v.row(k).norm() >= v_min) last = std::atan2(v(k, 1), v(k, 0));
    heading[static_cast<std::size_t>(k)] = last;
  }
  std::vector<std::optional<double>> omega;
  for (std::size_t k = 0; k + 1 < heading.size(); ++k) {
    if (heading[k] && heading[k + 1]) {
      omega.push_back(wrap_angle(*heading[k + 1] - *heading[k]) / dt);
      out.angular_velocity.push_back(*omega.back());
    } else {
      omega.push_back(std::nullopt);
    }
  }
  for (std::size_t k = 0; k + 1 < omega.size(); ++k) {
    if (omega[k] && omega[k + 1]) out.angular_acceleration.push_back((*omega[k + 1] - *omega[k]) / dt);
  }
  return out;
}

PrimitiveSeries motion_primitives(std::span<const Trajectory> trajectories, double dt,
                                  double v_min) {
  PrimitiveSeries out;
  for (const auto& t : trajectories) out.append(motion_primitives(t, dt, v_min));
  return out;
}

double Histogram::edge(std::size_t i) const {
  const std::size_t bins = density.size();
  if (i == bins) return hi;
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
}

Histogram histogram(std::span<const double> values, double lo, double hi, int bins) {
  if (bins < 1) throw Error("histogram: need at least one bin");
  if (!(hi >= lo)) throw Error("histogram: empty range");
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.density.assign(static_cast<std::size_t>(bins), 0.0);
  h.count = values.size();
  if (values.empty()) return h;
  const double width = hi - lo;
  for (double x : values) {
    if (!std::isfinite(x)) throw NumericError("histogram: non-finite value");
    if (x < lo || x > hi) throw Error("histogram: value outside [lo, hi]");
    int b = width > 0.0 ? static_cast<int>(std::floor((x - lo) / width * bins)) : 0;
    b = std::clamp(b, 0, bins - 1);
    h.density[static_cast<std::size_t>(b)] += 1.0;
  }
  for (double& d : h.density) d /= static_cast<double>(values.size());
  return h;
}

double chi_square_distance(const Histogram& x, const Histogram& y) {
  if (x.density.size() != y.density.size()) throw ShapeError("chi_square: bin counts differ");
  double total = 0.0;
  for (std::size_t i = 0; i < x.density.size(); ++i) {
    const double s = x.density[i] + y.density[i];
    if (s > 0.0) total += (x.density[i] - y.density[i]) * (x.density[i] - y.density[i]) / s;
  }
  return total;
}

std::array<PrimitiveComparison, 4> chi_square(const PrimitiveSeries& generated,
                                              const PrimitiveSeries& reference, int bins) {
  std::array<PrimitiveComparison, 4> out;
  for (std::size_t i = 0; i < kPrimitives.size(); ++i) {
    const Primitive p = kPrimitives[i];
    const auto& g = generated[p];
    const auto& r = reference[p];
    if (g.empty() || r.empty()) {
      throw Error(std::string("chi_square: empty ") + primitive_name(p) + " series");
    }
    const auto [glo, ghi] = std::minmax_element(g.begin(), g.end());
    const auto [rlo, rhi] = std::minmax_element(r.begin(), r.end());
    const double lo = std::min(*glo, *rlo);
    const double hi = std::max(*ghi, *rhi);
    out[i].primitive = p;
    out[i].generated = histogram(g, lo, hi, bins);
    out[i].reference = histogram(r, lo, hi, bins);
    out[i].chi_square = chi_square_distance(out[i].generated, out[i].reference);
  }
  return out;
}

}  // namespace trajgen
