#ifndef TRAJGEN_TRAJDATA_HPP_
#define TRAJGEN_TRAJDATA_HPP_

#include "trajgen/core.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace trajgen {

struct Frame {
  std::map<int, Eigen::Vector2d> positions;  // agent id -> meters
};

/// Observations resampled onto a contiguous frame index; frame i was raw
/// frame id `first_frame_id + i * stride` in the source file.
struct Scene {
  std::string source;
  double dt = 0.4;
  long long first_frame_id = 0;
  long long stride = 1;
  std::vector<Frame> frames;

  std::vector<int> agent_ids() const;
  std::size_t observation_count() const;
};

/// Lines of `frame-id agent-id x y [...]`; '#' comments and blank lines are
/// skipped. The frame stride is the GCD of the gaps between frame ids.
Scene parse_dataset(std::string_view contents, std::string source, double dt = 0.4);
Scene parse_dataset_file(const std::string& path, double dt = 0.4);

/// Same whitespace format, raw frame ids, frames ascending, agents ascending.
std::string serialize_scene(const Scene& scene, std::string_view header_comment = {});

/// Every `*.txt` file in `dir`, sorted by name; the subset name is the file stem.
std::vector<Scene> load_dataset_dir(const std::string& dir, double dt = 0.4);

struct TrajectoryWindow {
  std::string source;
  int anchor = 0;                   // frame index of the last observed step
  std::vector<int> agents;          // ascending ids
  std::vector<Trajectory> past;     // per agent, H x 2, world meters
  std::vector<Trajectory> future;   // per agent, F x 2, world meters

  std::size_t size() const { return agents.size(); }
};

/// One window per anchor with every agent observed on all of
/// [anchor - H + 1, anchor + F]; anchors with no such agent are skipped.
std::vector<TrajectoryWindow> build_windows(const Scene& scene, int history, int future);

/// Finite-difference velocities; the first row repeats the second.
Trajectory finite_difference_velocity(const Trajectory& positions, double dt);

/// Per-agent features in a frame centred on the agent's last observed position.
struct NormalizedAgent {
  Eigen::Vector2d origin;             // world position s^t
  Matrix<double> node_features;       // H x 4: relative position, velocity
  Trajectory past_velocity;           // H x 2, world-frame velocities
  Trajectory future;                  // F x 2 relative to origin
  Eigen::Vector2d destination;        // future endpoint relative to origin
};

std::vector<NormalizedAgent> normalize_window(const TrajectoryWindow& window, double dt);

/// Maps an agent-frame trajectory back to world coordinates.
Trajectory denormalize(const Trajectory& relative, const Eigen::Vector2d& origin);

struct SplitPlan {
  std::string held_out;
  std::vector<std::string> training;
};

SplitPlan leave_one_out(const std::vector<std::string>& subsets, const std::string& held_out);

/// Goal-directed walkers. Each agent walks straight along `heading` for
/// `approach_steps` steps, then at constant speed toward its goal (goal
/// offsets are relative to that turn point, in the heading frame) and idles on
/// arrival. Agent a takes goal a % goals.size(), enters with its group
/// (a / group_size) and walks its own lane a * lane_spacing to the side.
struct SynthSpec {
  int n_agents = 1;
  std::vector<Eigen::Vector2d> goals{Eigen::Vector2d(4.8, 0.0)};
  double speed = 1.0;
  double noise = 0.0;
  int frames = 20;
  std::uint64_t seed = 0;
  int approach_steps = 0;
  int lifetime = 0;             // 0: present for the whole scene
  int group_size = 1;
  int entry_stride = 0;         // frames between successive groups
  double lane_spacing = 6.0;
  double heading = 0.0;
  double dt = 0.4;
  std::string source = "synthetic";
};

Scene synth_scene(const SynthSpec& spec);

/// Two goals 4 m apart at +/-45 degrees from the walking direction, past
/// trajectories identical across the two groups.
SynthSpec two_goal_spec(int n_agents, std::uint64_t seed, int history = 8, int future = 12);

/// Constant-velocity walkers heading straight along +x at 1 m/s, one agent
/// per window.
SynthSpec straight_spec(int n_agents, std::uint64_t seed, int history = 8, int future = 12);

/// Smooth unicycle walkers with per-agent speed, acceleration and turn rate,
/// plus a sinusoidal sway of both speed and turn rate with random amplitude,
/// period and phase. `windows` groups of `agents_per_window` agents, each
/// present for exactly history + future frames.
struct CurvySpec {
  int windows = 10;
  int agents_per_window = 3;
  int history = 8;
  int future = 12;
  double dt = 0.4;
  std::uint64_t seed = 0;
  double min_speed = 0.7;
  double max_speed = 1.5;
  double max_accel = 0.12;
  double max_turn_rate = 0.25;
  double min_turn_sway = 0.2;     // rad/s
  double max_turn_sway = 0.6;
  double max_speed_sway = 0.2;    // m/s
  double min_sway_period = 3.0;   // s
  double max_sway_period = 6.0;
  double spacing = 2.5;
  std::string source = "curvy";
};

Scene synth_curvy_scene(const CurvySpec& spec);

}  // namespace trajgen

#endif  // TRAJGEN_TRAJDATA_HPP_
