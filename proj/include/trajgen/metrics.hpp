#ifndef TRAJGEN_METRICS_HPP_
#define TRAJGEN_METRICS_HPP_

#include "trajgen/config.hpp"
#include "trajgen/core.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace trajgen {

// Displacement metrics take one F x 2 trajectory per agent.

/// Mean over agents and steps of the Euclidean error.
double ade(std::span<const Trajectory> predicted, std::span<const Trajectory> truth);
/// Mean over agents of the final-step Euclidean error.
double fde(std::span<const Trajectory> predicted, std::span<const Trajectory> truth);

enum class Displacement { kAde, kFde };

/// samples[l][i] is agent i in sample l. The best sample is chosen per agent,
/// then averaged over agents.
double best_of(const std::vector<std::vector<Trajectory>>& samples,
               std::span<const Trajectory> truth, Displacement metric);

/// Time-averaged distance between every pair of one agent's samples, reduced
/// by the max (or the mean) over unordered pairs.
double asd_agent(std::span<const Trajectory> samples, AsdMode mode = AsdMode::kMaxPair);
/// asd_agent averaged over the agents of a sample set laid out as in best_of.
double asd(const std::vector<std::vector<Trajectory>>& samples, AsdMode mode = AsdMode::kMaxPair);

enum class Primitive { kVelocity, kAcceleration, kAngularVelocity, kAngularAcceleration };
inline constexpr std::array<Primitive, 4> kPrimitives{
    Primitive::kVelocity, Primitive::kAcceleration, Primitive::kAngularVelocity,
    Primitive::kAngularAcceleration};
const char* primitive_name(Primitive p);

/// Pooled motion-primitive samples: speed and acceleration magnitudes,
/// signed angular velocity and angular acceleration.
struct PrimitiveSeries {
  std::vector<double> velocity;
  std::vector<double> acceleration;
  std::vector<double> angular_velocity;
  std::vector<double> angular_acceleration;

  std::vector<double>& operator[](Primitive p);
  const std::vector<double>& operator[](Primitive p) const;
  void append(const PrimitiveSeries& other);
};

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

/// Primitives of one trajectory (at least 4 points). Headings are only taken
/// where the speed is at least `v_min`; otherwise the last valid heading is
/// carried forward, and turn rates before the first valid heading are dropped.
PrimitiveSeries motion_primitives(const Trajectory& positions, double dt, double v_min = 0.05);
PrimitiveSeries motion_primitives(std::span<const Trajectory> trajectories, double dt,
                                  double v_min = 0.05);

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> density;  // sums to 1, or all zero for empty input
  std::size_t count = 0;

  bool empty() const { return count == 0; }
  double edge(std::size_t i) const;
};

/// Equal-width bins over [lo, hi]; values at hi fall in the last bin.
Histogram histogram(std::span<const double> values, double lo, double hi, int bins);

/// Sum over bins of (x - y)^2 / (x + y), skipping bins where both are empty.
double chi_square_distance(const Histogram& x, const Histogram& y);

struct PrimitiveComparison {
  Primitive primitive = Primitive::kVelocity;
  double chi_square = 0.0;
  Histogram generated;
  Histogram reference;
};

/// Per primitive: both series binned over the union of their ranges.
std::array<PrimitiveComparison, 4> chi_square(const PrimitiveSeries& generated,
                                              const PrimitiveSeries& reference, int bins = 20);

}  // namespace trajgen

#endif  // TRAJGEN_METRICS_HPP_
