#include "trajgen/evaluation.hpp"

#include "trajgen/text.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace trajgen {

std::vector<WindowSamples> windows_as_samples(const std::vector<Scene>& scenes, int history,
                                              int future) {
  std::vector<WindowSamples> out;
  for (const auto& scene : scenes) {
    for (const auto& w : build_windows(scene, history, future)) {
      WindowSamples ws;
      ws.source = w.source;
      ws.anchor = w.anchor;
      ws.agents = w.agents;
      ws.accepted = 1;
      std::vector<Trajectory> sample;
      for (std::size_t i = 0; i < w.size(); ++i) {
        Trajectory t(future + 1, 2);
        t.row(0) = w.past[i].row(history - 1);
        t.bottomRows(future) = w.future[i];
        sample.push_back(std::move(t));
      }
      ws.trajectories.push_back(std::move(sample));
      out.push_back(std::move(ws));
    }
  }
  return out;
}

namespace {

std::vector<Trajectory> drop_first_step(const std::vector<Trajectory>& trajectories) {
  std::vector<Trajectory> out;
  for (const auto& t : trajectories) out.push_back(t.bottomRows(t.rows() - 1));
  return out;
}

}  // namespace

MetricReport evaluate(const std::vector<Scene>& reference, const std::vector<WindowSamples>& generated,
                      const Config& cfg) {
  const int history = cfg.data.history;
  const int future = cfg.data.future;
  const double dt = cfg.data.dt;
  if (generated.empty()) throw Error("evaluate: no generated windows");

  std::map<std::pair<std::string, int>, WindowSamples> truth;
  std::map<std::string, PrimitiveSeries> ref_series;
  for (auto& ws : windows_as_samples(reference, history, future)) {
    ref_series[ws.source].append(motion_primitives(ws.trajectories.front(), dt, cfg.metrics.v_min));
    truth.emplace(std::make_pair(ws.source, ws.anchor), std::move(ws));
  }

  MetricReport report;
  report.asd_mode = cfg.metrics.asd_mode;
  report.min_samples = std::numeric_limits<int>::max();
  std::map<std::string, PrimitiveSeries> gen_series;
  double ade_total = 0.0, fde_total = 0.0, asd_total = 0.0;
  int asd_windows = 0;
  for (const auto& ws : generated) {
    ++report.windows;
    const int samples = static_cast<int>(ws.trajectories.size());
    report.min_samples = std::min(report.min_samples, samples);
    report.max_samples = std::max(report.max_samples, samples);
    if (ws.degraded) ++report.degraded_windows;
    for (const auto& sample : ws.trajectories) {
      if (!sample.empty() && sample.front().rows() != future + 1) {
        throw ShapeError("evaluate: " + ws.source + "@" + std::to_string(ws.anchor) + " has " +
                         std::to_string(sample.front().rows() - 1) + " future steps, expected " +
                         std::to_string(future));
      }
      gen_series[ws.source].append(motion_primitives(sample, dt, cfg.metrics.v_min));
    }

    std::vector<std::vector<Trajectory>> futures;
    for (const auto& sample : ws.trajectories) futures.push_back(drop_first_step(sample));
    if (samples >= 2) {
      asd_total += asd(futures, cfg.metrics.asd_mode);
      ++asd_windows;
    }

    const auto it = truth.find({ws.source, ws.anchor});
    if (it == truth.end()) continue;
    if (it->second.agents != ws.agents) {
      throw Error("evaluate: agents of " + ws.source + "@" + std::to_string(ws.anchor) +
                  " differ from the reference window");
    }
    ++report.matched_windows;
    const auto gt = drop_first_step(it->second.trajectories.front());
    const auto n = static_cast<int>(gt.size());
    report.agents += n;
    ade_total += best_of(futures, gt, Displacement::kAde) * n;
    fde_total += best_of(futures, gt, Displacement::kFde) * n;
  }
  if (report.agents > 0) {
    report.ade = ade_total / report.agents;
    report.fde = fde_total / report.agents;
  }
  report.asd_defined = asd_windows > 0;
  if (report.asd_defined) report.asd = asd_total / asd_windows;

  for (const auto& [subset, series] : gen_series) {
    const auto ref = ref_series.find(subset);
    if (ref == ref_series.end()) {
      throw Error("evaluate: no reference windows for subset '" + subset + "'");
    }
    report.subsets.push_back({subset, chi_square(series, ref->second, cfg.metrics.bins)});
  }
  for (std::size_t p = 0; p < kPrimitives.size(); ++p) {
    double total = 0.0;
    for (const auto& s : report.subsets) total += s.comparisons[p].chi_square;
    report.chi_square_mean[p] = total / static_cast<double>(report.subsets.size());
  }
  return report;
}

std::string serialize_report(const MetricReport& r, const Config& cfg) {
  using text::format_double;
  std::ostringstream out;
  out << "# trajgen-report " << kReportFormatVersion << '\n';
  std::istringstream config_lines(serialize_config(cfg));
  for (std::string line; std::getline(config_lines, line);) {
    if (!line.empty()) out << "# " << line << '\n';
  }
  out << "windows " << r.windows << '\n'
      << "matched_windows " << r.matched_windows << '\n'
      << "agents " << r.agents << '\n'
      << "min_samples " << r.min_samples << '\n'
      << "max_samples " << r.max_samples << '\n'
      << "degraded_windows " << r.degraded_windows << '\n'
      << "ade " << format_double(r.ade) << '\n'
      << "fde " << format_double(r.fde) << '\n'
      << "asd " << format_double(r.asd) << '\n'
      << "asd_defined " << (r.asd_defined ? 1 : 0) << '\n'
      << "asd_mode " << (r.asd_mode == AsdMode::kMaxPair ? "max_pair" : "mean_pair") << '\n';
  for (const auto& s : r.subsets) {
    for (const auto& c : s.comparisons) {
      out << "chi2 " << s.subset << ' ' << primitive_name(c.primitive) << ' '
          << format_double(c.chi_square) << '\n';
    }
  }
  for (std::size_t p = 0; p < kPrimitives.size(); ++p) {
    out << "chi2_mean " << primitive_name(kPrimitives[p]) << ' '
        << format_double(r.chi_square_mean[p]) << '\n';
  }
  return out.str();
}

std::string serialize_histograms(const MetricReport& r) {
  using text::format_double;
  std::ostringstream out;
  out << "# trajgen-histograms " << kReportFormatVersion << '\n'
      << "# subset primitive bin lo hi generated reference\n";
  for (const auto& s : r.subsets) {
    for (const auto& c : s.comparisons) {
      for (std::size_t b = 0; b < c.generated.density.size(); ++b) {
        out << s.subset << ' ' << primitive_name(c.primitive) << ' ' << b << ' '
            << format_double(c.generated.edge(b)) << ' ' << format_double(c.generated.edge(b + 1))
            << ' ' << format_double(c.generated.density[b]) << ' '
            << format_double(c.reference.density[b]) << '\n';
      }
    }
  }
  return out.str();
}

}  // namespace trajgen
