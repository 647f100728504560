#include "trajgen/trajdata.hpp"

#include "trajgen/rng.hpp"
#include "trajgen/text.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <numbers>
#include <set>
#include <tuple>

namespace trajgen {

std::vector<int> Scene::agent_ids() const {
  std::set<int> ids;
  for (const auto& f : frames) {
    for (const auto& [id, pos] : f.positions) ids.insert(id);
  }
  return {ids.begin(), ids.end()};
}

std::size_t Scene::observation_count() const {
  std::size_t n = 0;
  for (const auto& f : frames) n += f.positions.size();
  return n;
}

namespace {

long long integral_field(std::string_view token, std::size_t line_no, const char* what) {
  auto value = text::parse_double(token);
  if (!value || std::floor(*value) != *value || std::abs(*value) > 9.0e15) {
    throw ParseError("line " + std::to_string(line_no) + ": malformed " + what + " '" +
                     std::string(token) + "'");
  }
  return static_cast<long long>(*value);
}

}  // namespace

Scene parse_dataset(std::string_view contents, std::string source, double dt) {
  struct Row {
    long long frame;
    long long agent;
    double x, y;
  };
  std::vector<Row> rows;
  std::size_t line_no = 0;
  while (!contents.empty()) {
    const auto nl = contents.find('\n');
    std::string_view line = contents.substr(0, nl);
    contents = nl == std::string_view::npos ? std::string_view{} : contents.substr(nl + 1);
    ++line_no;
    const auto trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto fields = text::split_whitespace(trimmed);
    if (fields.size() < 4) {
      throw ParseError("line " + std::to_string(line_no) + ": expected at least 4 fields, got " +
                       std::to_string(fields.size()));
    }
    Row row{};
    row.frame = integral_field(fields[0], line_no, "frame id");
    row.agent = integral_field(fields[1], line_no, "agent id");
    auto x = text::parse_double(fields[2]);
    auto y = text::parse_double(fields[3]);
    if (!x || !y) {
      throw ParseError("line " + std::to_string(line_no) + ": malformed position '" +
                       std::string(!x ? fields[2] : fields[3]) + "'");
    }
    row.x = *x;
    row.y = *y;
    rows.push_back(row);
  }
  if (rows.empty()) throw ParseError("dataset '" + source + "' contains no observations");

  std::vector<long long> ids;
  ids.reserve(rows.size());
  for (const auto& r : rows) ids.push_back(r.frame);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  long long stride = 0;
  for (std::size_t i = 1; i < ids.size(); ++i) stride = std::gcd(stride, ids[i] - ids[i - 1]);
  if (stride == 0) stride = 1;

  Scene scene;
  scene.source = std::move(source);
  scene.dt = dt;
  scene.first_frame_id = ids.front();
  scene.stride = stride;
  scene.frames.resize(static_cast<std::size_t>((ids.back() - ids.front()) / stride + 1));
  for (const auto& r : rows) {
    auto& frame = scene.frames[static_cast<std::size_t>((r.frame - ids.front()) / stride)];
    const int agent = static_cast<int>(r.agent);
    if (!frame.positions.emplace(agent, Eigen::Vector2d(r.x, r.y)).second) {
      throw ParseError("duplicate observation for frame " + std::to_string(r.frame) + ", agent " +
                       std::to_string(r.agent));
    }
  }
  return scene;
}

Scene parse_dataset_file(const std::string& path, double dt) {
  const std::filesystem::path p(path);
  try {
    return parse_dataset(text::read_file(path), p.stem().string(), dt);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::string serialize_scene(const Scene& scene, std::string_view header_comment) {
  std::string out;
  if (!header_comment.empty()) {
    std::string_view rest = header_comment;
    while (!rest.empty()) {
      const auto nl = rest.find('\n');
      out += "# ";
      out += rest.substr(0, nl);
      out += '\n';
      rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    }
  }
  for (std::size_t i = 0; i < scene.frames.size(); ++i) {
    const long long id = scene.first_frame_id + static_cast<long long>(i) * scene.stride;
    for (const auto& [agent, pos] : scene.frames[i].positions) {
      out += std::to_string(id) + ' ' + std::to_string(agent) + ' ' + text::format_double(pos.x()) +
             ' ' + text::format_double(pos.y()) + '\n';
    }
  }
  return out;
}

std::vector<Scene> load_dataset_dir(const std::string& dir, double dt) {
  if (!std::filesystem::is_directory(dir)) throw Error("dataset directory '" + dir + "' not found");
  std::vector<std::string> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error("dataset directory '" + dir + "' has no .txt files");
  std::vector<Scene> scenes;
  for (const auto& f : files) scenes.push_back(parse_dataset_file(f, dt));
  return scenes;
}

std::vector<TrajectoryWindow> build_windows(const Scene& scene, int history, int future) {
  if (history < 2 || future < 1) throw Error("build_windows: need history >= 2 and future >= 1");
  const int span = history + future;
  const int n_frames = static_cast<int>(scene.frames.size());

  // anchor -> agents with full coverage, from contiguous presence runs.
  std::map<int, std::vector<int>> by_anchor;
  for (int agent : scene.agent_ids()) {
    int run_start = -1;
    for (int f = 0; f <= n_frames; ++f) {
      const bool present = f < n_frames && scene.frames[f].positions.count(agent) > 0;
      if (present && run_start < 0) run_start = f;
      if (!present && run_start >= 0) {
        const int run_end = f - 1;
        for (int t = run_start + history - 1; t + future <= run_end; ++t) {
          by_anchor[t].push_back(agent);
        }
        run_start = -1;
      }
    }
  }

  std::vector<TrajectoryWindow> windows;
  for (auto& [anchor, agents] : by_anchor) {
    std::sort(agents.begin(), agents.end());
    TrajectoryWindow w;
    w.source = scene.source;
    w.anchor = anchor;
    w.agents = agents;
    for (int agent : agents) {
      Trajectory past(history, 2), fut(future, 2);
      for (int k = 0; k < span; ++k) {
        const auto& pos = scene.frames[anchor - history + 1 + k].positions.at(agent);
        if (k < history) {
          past.row(k) = pos.transpose();
        } else {
          fut.row(k - history) = pos.transpose();
        }
      }
      w.past.push_back(std::move(past));
      w.future.push_back(std::move(fut));
    }
    windows.push_back(std::move(w));
  }
  return windows;
}

Trajectory finite_difference_velocity(const Trajectory& positions, double dt) {
  const Eigen::Index n = positions.rows();
  Trajectory v = Trajectory::Zero(n, 2);
  for (Eigen::Index k = 1; k < n; ++k) v.row(k) = (positions.row(k) - positions.row(k - 1)) / dt;
  if (n >= 2) v.row(0) = v.row(1);
  return v;
}

std::vector<NormalizedAgent> normalize_window(const TrajectoryWindow& window, double dt) {
  std::vector<NormalizedAgent> out;
  out.reserve(window.size());
  for (std::size_t i = 0; i < window.size(); ++i) {
    const Trajectory& past = window.past[i];
    NormalizedAgent a;
    a.origin = past.row(past.rows() - 1).transpose();
    a.past_velocity = finite_difference_velocity(past, dt);
    a.node_features.resize(past.rows(), 4);
    a.node_features.leftCols(2) = past.rowwise() - a.origin.transpose();
    a.node_features.rightCols(2) = a.past_velocity;
    a.future = window.future[i].rowwise() - a.origin.transpose();
    a.destination = a.future.row(a.future.rows() - 1).transpose();
    out.push_back(std::move(a));
  }
  return out;
}

Trajectory denormalize(const Trajectory& relative, const Eigen::Vector2d& origin) {
  return relative.rowwise() + origin.transpose();
}

SplitPlan leave_one_out(const std::vector<std::string>& subsets, const std::string& held_out) {
  if (std::find(subsets.begin(), subsets.end(), held_out) == subsets.end()) {
    throw Error("leave_one_out: unknown subset '" + held_out + "'");
  }
  SplitPlan plan;
  plan.held_out = held_out;
  for (const auto& s : subsets) {
    if (s != held_out) plan.training.push_back(s);
  }
  return plan;
}

Scene synth_scene(const SynthSpec& spec) {
  if (!(spec.speed > 0)) throw Error("synth_scene: speed must be positive");
  if (spec.n_agents < 1 || spec.goals.empty() || spec.frames < 1 || spec.group_size < 1) {
    throw Error("synth_scene: need agents, goals, frames and a positive group size");
  }
  const int lifetime = spec.lifetime > 0 ? std::min(spec.lifetime, spec.frames) : spec.frames;
  const int entry_slots = spec.frames - lifetime + 1;
  const Eigen::Rotation2Dd rot(spec.heading);
  const Eigen::Vector2d dir = rot * Eigen::Vector2d::UnitX();
  const Eigen::Vector2d lateral = rot * Eigen::Vector2d::UnitY();
  const double step = spec.speed * spec.dt;
  Rng rng(spec.seed);

  Scene scene;
  scene.source = spec.source;
  scene.dt = spec.dt;
  scene.frames.resize(static_cast<std::size_t>(spec.frames));
  for (int a = 0; a < spec.n_agents; ++a) {
    const int group = a / spec.group_size;
    const int entry = (group * spec.entry_stride) % entry_slots;
    const Eigen::Vector2d start = lateral * (a * spec.lane_spacing);
    const Eigen::Vector2d turn = start + dir * (step * spec.approach_steps);
    const Eigen::Vector2d goal = turn + rot * spec.goals[static_cast<std::size_t>(a) % spec.goals.size()];
    Eigen::Vector2d pos = start;
    for (int k = 0; k < lifetime; ++k) {
      if (k > 0) {
        if (k <= spec.approach_steps) {
          pos = start + dir * (step * k);
        } else {
          const Eigen::Vector2d to_goal = goal - pos;
          const double dist = to_goal.norm();
          pos = dist <= step ? goal : Eigen::Vector2d(pos + to_goal * (step / dist));
        }
      }
      Eigen::Vector2d observed = pos;
      if (spec.noise > 0) {
        observed.x() += spec.noise * rng.normal();
        observed.y() += spec.noise * rng.normal();
      }
      scene.frames[static_cast<std::size_t>(entry + k)].positions.emplace(a, observed);
    }
  }
  // Raw ids follow the ETH/UCY convention of annotating every 10th frame.
  scene.first_frame_id = 0;
  scene.stride = 10;
  return scene;
}

SynthSpec two_goal_spec(int n_agents, std::uint64_t seed, int history, int future) {
  SynthSpec spec;
  spec.n_agents = n_agents;
  spec.goals = {Eigen::Vector2d(2.0, 2.0), Eigen::Vector2d(2.0, -2.0)};
  spec.speed = 0.6;
  spec.noise = 0.02;
  spec.seed = seed;
  spec.approach_steps = history - 1;
  spec.lifetime = history + future;
  spec.group_size = 4;
  spec.entry_stride = 1;
  const int groups = (n_agents + spec.group_size - 1) / spec.group_size;
  spec.frames = spec.lifetime + groups - 1;
  spec.lane_spacing = 6.0;
  spec.source = "two_goal";
  return spec;
}

SynthSpec straight_spec(int n_agents, std::uint64_t seed, int history, int future) {
  SynthSpec spec;
  spec.n_agents = n_agents;
  spec.goals = {Eigen::Vector2d(1000.0, 0.0)};
  spec.speed = 1.0;
  spec.seed = seed;
  spec.lifetime = history + future;
  spec.group_size = 1;
  spec.entry_stride = 1;
  spec.frames = spec.lifetime + n_agents - 1;
  spec.source = "straight";
  return spec;
}

namespace {

struct Walker {
  Eigen::Vector2d start;
  double heading, speed, accel, turn_rate;
  double turn_sway, turn_freq, turn_phase;
  double speed_sway, speed_freq, speed_phase;

  // Integral of turn_rate + turn_sway sin(turn_freq t + turn_phase).
  double theta(double t) const {
    return heading + turn_rate * t +
           turn_sway / turn_freq * (std::cos(turn_phase) - std::cos(turn_freq * t + turn_phase));
  }
  double v(double t) const {
    return speed + accel * t + speed_sway * std::sin(speed_freq * t + speed_phase);
  }
};

Trajectory integrate_walker(const Walker& w, int steps, double dt) {
  constexpr int kSub = 40;
  Trajectory path(steps, 2);
  Eigen::Vector2d pos = w.start;
  path.row(0) = pos.transpose();
  const double h = dt / kSub;
  for (int k = 1; k < steps; ++k) {
    for (int s = 0; s < kSub; ++s) {
      const double t = (k - 1) * dt + (s + 0.5) * h;
      const double theta = w.theta(t);
      pos += h * w.v(t) * Eigen::Vector2d(std::cos(theta), std::sin(theta));
    }
    path.row(k) = pos.transpose();
  }
  return path;
}

}  // namespace

Scene synth_curvy_scene(const CurvySpec& spec) {
  const int lifetime = spec.history + spec.future;
  const double duration = (lifetime - 1) * spec.dt;
  Rng rng(spec.seed);

  Scene scene;
  scene.source = spec.source;
  scene.dt = spec.dt;
  scene.frames.resize(static_cast<std::size_t>(lifetime + spec.windows - 1));
  int next_id = 0;
  for (int g = 0; g < spec.windows; ++g) {
    const Eigen::Vector2d base(0.0, 25.0 * g);
    std::vector<Trajectory> paths;
    // Redraw a group until speeds stay above 0.4 m/s and agents keep 1 m apart.
    for (int attempt = 0;; ++attempt) {
      if (attempt > 1000) throw Error("synth_curvy_scene: cannot place a separated group");
      paths.clear();
      const double group_heading = rng.uniform(-0.4, 0.4);
      bool ok = true;
      for (int m = 0; m < spec.agents_per_window && ok; ++m) {
        Walker w;
        w.start = base + Eigen::Vector2d(rng.uniform(-0.5, 0.5), m * spec.spacing);
        w.heading = group_heading + rng.uniform(-0.2, 0.2);
        w.speed = rng.uniform(spec.min_speed, spec.max_speed);
        w.accel = rng.uniform(-spec.max_accel, spec.max_accel);
        w.turn_rate = rng.uniform(-spec.max_turn_rate, spec.max_turn_rate);
        w.turn_sway = rng.uniform(spec.min_turn_sway, spec.max_turn_sway);
        w.turn_freq = 2.0 * std::numbers::pi / rng.uniform(spec.min_sway_period, spec.max_sway_period);
        w.turn_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        w.speed_sway = rng.uniform(0.0, spec.max_speed_sway);
        w.speed_freq = 2.0 * std::numbers::pi / rng.uniform(spec.min_sway_period, spec.max_sway_period);
        w.speed_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double end_speed = w.speed + w.accel * duration - w.speed_sway;
        if (end_speed < 0.4) ok = false;
        paths.push_back(integrate_walker(w, lifetime, spec.dt));
      }
      for (std::size_t i = 0; i < paths.size() && ok; ++i) {
        for (std::size_t j = i + 1; j < paths.size() && ok; ++j) {
          if ((paths[i] - paths[j]).rowwise().norm().minCoeff() < 1.0) ok = false;
        }
      }
      if (ok) break;
    }
    for (const auto& path : paths) {
      const int id = next_id++;
      for (int k = 0; k < lifetime; ++k) {
        scene.frames[static_cast<std::size_t>(g + k)].positions.emplace(id, path.row(k).transpose());
      }
    }
  }
  scene.first_frame_id = 0;
  scene.stride = 10;
  return scene;
}

}  // namespace trajgen
