#ifndef TRAJGEN_GENERATION_HPP_
#define TRAJGEN_GENERATION_HPP_

#include "trajgen/model.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace trajgen {

/// One joint draw for every agent of a window, in world coordinates.
struct GeneratedSample {
  int sample_index = 0;
  std::uint64_t stream = 0;               // attempt index a of Rng::substream(base, a)
  std::vector<Eigen::Vector2d> destination;
  std::vector<Trajectory> trajectory;     // per agent, F x 2, steps t+1 .. t+F
  std::vector<Trajectory> residuals;      // per agent, F x 2 displacements

  std::size_t agents() const { return trajectory.size(); }
};

/// Encoder output and mixtures of one window; shared by all its samples.
struct WindowEncoding {
  Matrix<float> context;                       // N x D_e
  std::vector<DestinationMixture> mixtures;    // agent frame
  std::vector<Eigen::Vector2d> origin;         // world s^t
  int future = 0;
};

/// Evaluates the model without recording gradients.
WindowEncoding encode_window(const TrajectoryWindow& window, const Model<float>& model);

/// Draws one destination per agent from its mixture, rolls out the decoder
/// towards it and maps the result to world coordinates.
GeneratedSample generate_sample(const WindowEncoding& encoding, const Model<float>& model, Rng& rng);
GeneratedSample generate_sample(const TrajectoryWindow& window, const Model<float>& model, Rng& rng);

/// Rollout for given agent-frame destinations (N x 2); used by generation and
/// by tests that steer the decoder directly.
GeneratedSample rollout_to(const WindowEncoding& encoding, const Model<float>& model,
                           const Matrix<double>& destinations);

/// True iff two distinct agents are strictly closer than `radius` at some step.
bool has_collision(const GeneratedSample& sample, double radius);

/// Number of steps with at least one pair closer than `radius`.
int colliding_steps(const GeneratedSample& sample, double radius);

struct SampleSet {
  std::vector<GeneratedSample> samples;
  int accepted = 0;   // collision-free draws
  int rejected = 0;   // colliding draws
  int attempts = 0;
  bool degraded = false;
};

/// Draws until `count` collision-free samples are found or `max_attempts` is
/// reached. Attempt a uses Rng::substream(base, a) where `base` is one draw
/// from `rng`, so a smaller set is a prefix of a larger one. When attempts
/// run out the set holds the `count` attempts with the fewest colliding steps
/// and is flagged degraded.
SampleSet sample_set(const WindowEncoding& encoding, const Model<float>& model, int count,
                     double radius, int max_attempts, Rng& rng);
SampleSet sample_set(const TrajectoryWindow& window, const Model<float>& model, int count,
                     double radius, int max_attempts, Rng& rng);

/// Sample sets for many windows. Window i draws from
/// Rng::substream(seed, kGenerationStream, i); results do not depend on `threads`.
inline constexpr std::uint64_t kGenerationStream = 0x6e6e;
std::vector<SampleSet> generate_sets(std::span<const TrajectoryWindow> windows,
                                     const Model<float>& model, const GenerationConfig& cfg,
                                     std::uint64_t seed, int threads);

inline constexpr int kSamplesFormatVersion = 1;

/// Samples for one window as read back from disk. Trajectories include the
/// observed anchor position as step 0, so each is (F + 1) x 2.
struct WindowSamples {
  std::string source;
  int anchor = 0;
  std::vector<int> agents;
  std::vector<std::vector<Trajectory>> trajectories;  // [sample][agent]
  int accepted = 0;
  int rejected = 0;
  bool degraded = false;
};

/// `sample agent step x y` lines under a `#` header with source, anchor,
/// bookkeeping and the resolved config. Step 0 is the observed anchor.
std::string serialize_samples(const TrajectoryWindow& window, const SampleSet& set,
                              const std::string& config_text);
WindowSamples parse_samples(std::string_view contents, const std::string& origin);

/// `<source>__t<anchor>.samples`
std::string samples_file_name(const std::string& source, int anchor);

/// Every `*.samples` file in `dir`, ordered by (source, anchor).
std::vector<WindowSamples> load_samples_dir(const std::string& dir);

}  // namespace trajgen

#endif  // TRAJGEN_GENERATION_HPP_
