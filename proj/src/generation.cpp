#include "trajgen/generation.hpp"

#include "trajgen/text.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>
#include <tuple>

namespace trajgen {

namespace {

// Inference tapes never call backward, so binding never writes the model.
Model<float>& readonly(const Model<float>& model) { return const_cast<Model<float>&>(model); }

}  // namespace

WindowEncoding encode_window(const TrajectoryWindow& window, const Model<float>& model) {
  const AgentBatch batch = make_batch(std::span<const TrajectoryWindow>(&window, 1), model.config);
  Tape<float> tape(false);
  BoundEncoder<float> enc = bind(tape, readonly(model).encoder);
  BoundHeads<float> heads = bind(tape, readonly(model).heads);
  const Var<float> context = encode_scene(enc, tape, batch);
  WindowEncoding out;
  out.context = context.value();
  out.mixtures = extract_mixtures(predict_mixture(heads, context));
  for (Eigen::Index i = 0; i < batch.origin.rows(); ++i) out.origin.push_back(batch.origin.row(i));
  out.future = batch.future;
  return out;
}

GeneratedSample rollout_to(const WindowEncoding& encoding, const Model<float>& model,
                           const Matrix<double>& destinations) {
  const auto n = static_cast<Eigen::Index>(encoding.origin.size());
  if (destinations.rows() != n || destinations.cols() != 2) {
    throw ShapeError("rollout_to: destinations " + shape_string(destinations) + " for " +
                     std::to_string(n) + " agents");
  }
  Tape<float> tape(false);
  const BoundDecoder<float> dec = bind(tape, readonly(model).decoder);
  const auto r = rollout(dec, tape.constant(encoding.context),
                         tape.constant(destinations.cast<float>()), encoding.future);
  GeneratedSample s;
  for (Eigen::Index i = 0; i < n; ++i) {
    Trajectory rel(encoding.future, 2);
    Trajectory res(encoding.future, 2);
    for (int k = 0; k < encoding.future; ++k) {
      rel.row(k) = r.positions[k + 1].value().row(i).cast<double>();
      res.row(k) = r.residuals[k].value().row(i).cast<double>();
    }
    s.trajectory.push_back(denormalize(rel, encoding.origin[i]));
    s.residuals.push_back(std::move(res));
    s.destination.push_back(destinations.row(i).transpose() + encoding.origin[i]);
  }
  return s;
}

GeneratedSample generate_sample(const WindowEncoding& encoding, const Model<float>& model,
                                Rng& rng) {
  Matrix<double> d(static_cast<Eigen::Index>(encoding.mixtures.size()), 2);
  for (std::size_t i = 0; i < encoding.mixtures.size(); ++i) {
    d.row(static_cast<Eigen::Index>(i)) = sample_destination(encoding.mixtures[i], rng).transpose();
  }
  return rollout_to(encoding, model, d);
}

GeneratedSample generate_sample(const TrajectoryWindow& window, const Model<float>& model,
                                Rng& rng) {
  return generate_sample(encode_window(window, model), model, rng);
}

int colliding_steps(const GeneratedSample& sample, double radius) {
  const std::size_t n = sample.agents();
  if (n < 2) return 0;
  const Eigen::Index steps = sample.trajectory.front().rows();
  int count = 0;
  for (Eigen::Index k = 0; k < steps; ++k) {
    bool hit = false;
    for (std::size_t i = 0; i < n && !hit; ++i) {
      for (std::size_t j = i + 1; j < n && !hit; ++j) {
        hit = (sample.trajectory[i].row(k) - sample.trajectory[j].row(k)).norm() < radius;
      }
    }
    count += hit ? 1 : 0;
  }
  return count;
}

bool has_collision(const GeneratedSample& sample, double radius) {
  return colliding_steps(sample, radius) > 0;
}

SampleSet sample_set(const WindowEncoding& encoding, const Model<float>& model, int count,
                     double radius, int max_attempts, Rng& rng) {
  if (count < 1) throw Error("sample_set: need at least one sample");
  if (max_attempts < count) throw Error("sample_set: max_attempts must be at least the sample count");
  const std::uint64_t base = rng.next();
  SampleSet set;
  std::vector<GeneratedSample> all;
  std::vector<int> collisions;
  for (int a = 0; a < max_attempts && set.accepted < count; ++a) {
    Rng stream = Rng::substream(base, static_cast<std::uint64_t>(a));
    GeneratedSample s = generate_sample(encoding, model, stream);
    s.sample_index = a;
    s.stream = static_cast<std::uint64_t>(a);
    ++set.attempts;
    const int hits = colliding_steps(s, radius);
    if (hits == 0) {
      ++set.accepted;
      set.samples.push_back(s);
    } else {
      ++set.rejected;
    }
    all.push_back(std::move(s));
    collisions.push_back(hits);
  }
  if (set.accepted < count) {
    set.degraded = true;
    std::vector<std::size_t> order(all.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return collisions[a] < collisions[b]; });
    order.resize(static_cast<std::size_t>(count));
    std::sort(order.begin(), order.end());
    set.samples.clear();
    for (std::size_t i : order) set.samples.push_back(all[i]);
  }
  for (std::size_t i = 0; i < set.samples.size(); ++i) set.samples[i].sample_index = static_cast<int>(i);
  return set;
}

SampleSet sample_set(const TrajectoryWindow& window, const Model<float>& model, int count,
                     double radius, int max_attempts, Rng& rng) {
  return sample_set(encode_window(window, model), model, count, radius, max_attempts, rng);
}

std::vector<SampleSet> generate_sets(std::span<const TrajectoryWindow> windows,
                                     const Model<float>& model, const GenerationConfig& cfg,
                                     std::uint64_t seed, int threads) {
  std::vector<SampleSet> out(windows.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < windows.size(); i = next++) {
      try {
        Rng rng = Rng::substream(seed, kGenerationStream, i);
        out[i] = sample_set(windows[i], model, cfg.samples, cfg.collision_radius, cfg.max_attempts,
                            rng);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = windows.size();
      }
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(windows.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::string samples_file_name(const std::string& source, int anchor) {
  return source + "__t" + std::to_string(anchor) + ".samples";
}

std::string serialize_samples(const TrajectoryWindow& window, const SampleSet& set,
                              const std::string& config_text) {
  std::ostringstream out;
  out << "# trajgen-samples " << kSamplesFormatVersion << '\n'
      << "# source " << window.source << '\n'
      << "# anchor " << window.anchor << '\n'
      << "# samples " << set.samples.size() << '\n'
      << "# accepted " << set.accepted << '\n'
      << "# rejected " << set.rejected << '\n'
      << "# attempts " << set.attempts << '\n'
      << "# degraded " << (set.degraded ? 1 : 0) << '\n';
  std::istringstream cfg(config_text);
  for (std::string line; std::getline(cfg, line);) {
    if (!line.empty()) out << "# config " << line << '\n';
  }
  out << "# columns sample agent step x y\n";
  for (std::size_t l = 0; l < set.samples.size(); ++l) {
    const auto& s = set.samples[l];
    for (std::size_t i = 0; i < s.agents(); ++i) {
      const Eigen::Vector2d origin = window.past[i].row(window.past[i].rows() - 1).transpose();
      out << l << ' ' << window.agents[i] << " 0 " << text::format_double(origin.x()) << ' '
          << text::format_double(origin.y()) << '\n';
      for (Eigen::Index k = 0; k < s.trajectory[i].rows(); ++k) {
        out << l << ' ' << window.agents[i] << ' ' << k + 1 << ' '
            << text::format_double(s.trajectory[i](k, 0)) << ' '
            << text::format_double(s.trajectory[i](k, 1)) << '\n';
      }
    }
  }
  return out.str();
}

WindowSamples parse_samples(std::string_view contents, const std::string& origin) {
  WindowSamples ws;
  bool have_source = false, have_anchor = false;
  // (sample, agent) -> rows keyed by step
  std::map<std::pair<int, int>, std::map<int, Eigen::Vector2d>> points;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto fail = [&](const std::string& what) {
    throw ParseError(origin + ":" + std::to_string(line_no) + ": " + what);
  };
  while (pos <= contents.size()) {
    const std::size_t end = std::min(contents.find('\n', pos), contents.size());
    const std::string_view line = text::trim(contents.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto f = text::split_whitespace(line);
    if (line.front() == '#') {
      if (f.size() == 3 && f[1] == "source") {
        ws.source = std::string(f[2]);
        have_source = true;
      } else if (f.size() == 3 && (f[1] == "anchor" || f[1] == "accepted" || f[1] == "rejected" ||
                                   f[1] == "degraded")) {
        const auto v = text::parse_int(f[2]);
        if (!v) fail("bad header value");
        if (f[1] == "anchor") {
          ws.anchor = static_cast<int>(*v);
          have_anchor = true;
        } else if (f[1] == "accepted") {
          ws.accepted = static_cast<int>(*v);
        } else if (f[1] == "rejected") {
          ws.rejected = static_cast<int>(*v);
        } else {
          ws.degraded = *v != 0;
        }
      }
      continue;
    }
    if (f.size() != 5) fail("expected 'sample agent step x y'");
    const auto sample = text::parse_int(f[0]);
    const auto agent = text::parse_int(f[1]);
    const auto step = text::parse_int(f[2]);
    const auto x = text::parse_double(f[3]);
    const auto y = text::parse_double(f[4]);
    if (!sample || !agent || !step || !x || !y || *sample < 0 || *step < 0) fail("malformed record");
    auto& rows = points[{static_cast<int>(*sample), static_cast<int>(*agent)}];
    if (!rows.emplace(static_cast<int>(*step), Eigen::Vector2d(*x, *y)).second) {
      fail("duplicate record");
    }
  }
  if (!have_source || !have_anchor) throw ParseError(origin + ": missing source or anchor header");
  if (points.empty()) throw ParseError(origin + ": no samples");

  std::map<int, std::map<int, Trajectory>> by_sample;
  std::size_t steps = 0;
  for (const auto& [key, rows] : points) {
    if (steps == 0) steps = rows.size();
    if (rows.size() != steps || rows.begin()->first != 0 ||
        rows.rbegin()->first != static_cast<int>(steps) - 1) {
      throw ParseError(origin + ": sample " + std::to_string(key.first) + " agent " +
                       std::to_string(key.second) + " has inconsistent steps");
    }
    Trajectory t(static_cast<Eigen::Index>(steps), 2);
    for (const auto& [k, p] : rows) t.row(k) = p.transpose();
    by_sample[key.first][key.second] = std::move(t);
  }
  for (const auto& [agent, t] : by_sample.begin()->second) ws.agents.push_back(agent);
  int expected = 0;
  for (auto& [sample, agents] : by_sample) {
    if (sample != expected++) throw ParseError(origin + ": sample indices are not contiguous");
    std::vector<int> ids;
    std::vector<Trajectory> trajs;
    for (auto& [agent, t] : agents) {
      ids.push_back(agent);
      trajs.push_back(std::move(t));
    }
    if (ids != ws.agents) throw ParseError(origin + ": samples cover different agents");
    ws.trajectories.push_back(std::move(trajs));
  }
  return ws;
}

std::vector<WindowSamples> load_samples_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw Error("not a directory: '" + dir + "'");
  std::vector<WindowSamples> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".samples") {
      out.push_back(parse_samples(text::read_file(entry.path().string()), entry.path().string()));
    }
  }
  std::sort(out.begin(), out.end(), [](const WindowSamples& a, const WindowSamples& b) {
    return std::tie(a.source, a.anchor) < std::tie(b.source, b.anchor);
  });
  return out;
}

}  // namespace trajgen
