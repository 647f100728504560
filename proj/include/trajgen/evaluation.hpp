#ifndef TRAJGEN_EVALUATION_HPP_
#define TRAJGEN_EVALUATION_HPP_

#include "trajgen/generation.hpp"
#include "trajgen/metrics.hpp"

#include <map>
#include <string>
#include <vector>

namespace trajgen {

inline constexpr int kReportFormatVersion = 1;

/// Ground-truth futures of every window, as single-sample sets (step 0 is s^t).
std::vector<WindowSamples> windows_as_samples(const std::vector<Scene>& scenes, int history,
                                              int future);

struct SubsetChiSquare {
  std::string subset;
  std::array<PrimitiveComparison, 4> comparisons;
};

struct MetricReport {
  int windows = 0;           // generated windows
  int matched_windows = 0;   // with a reference window of the same source and anchor
  int agents = 0;            // agents of matched windows
  int min_samples = 0;
  int max_samples = 0;
  int degraded_windows = 0;
  double ade = 0.0;          // best-of, averaged over matched agents
  double fde = 0.0;
  double asd = 0.0;          // mean over windows with at least two samples
  bool asd_defined = false;
  AsdMode asd_mode = AsdMode::kMaxPair;
  std::vector<SubsetChiSquare> subsets;
  std::array<double, 4> chi_square_mean{};  // averaged over subsets
};

/// Compares generated sample sets against the reference scenes. Primitives
/// are pooled per subset over the windows' s^t .. s^{t+F} positions.
MetricReport evaluate(const std::vector<Scene>& reference, const std::vector<WindowSamples>& generated,
                      const Config& cfg);

/// `key value` lines in a fixed order under a `#` header echoing the config.
std::string serialize_report(const MetricReport& report, const Config& cfg);

/// One row per (subset, primitive, bin): edges and both densities.
std::string serialize_histograms(const MetricReport& report);

}  // namespace trajgen

#endif  // TRAJGEN_EVALUATION_HPP_
