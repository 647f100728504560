#include "trajgen/checkpoint.hpp"
#include "trajgen/generation.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace trajgen {
namespace {

Config tiny_config() {
  Config cfg;
  cfg.data.history = 4;
  cfg.data.future = 5;
  cfg.encoder.node_hidden = 4;
  cfg.encoder.edge_hidden = 3;
  cfg.gmm_k = 2;
  cfg.decoder.hidden = 6;
  return cfg;
}

struct Fixture {
  Config cfg = tiny_config();
  Model<float> model{cfg};
  std::vector<TrajectoryWindow> windows;

  explicit Fixture(int agents = 3) {
    model.initialize(3);
    CurvySpec spec;
    spec.windows = 4;
    spec.agents_per_window = agents;
    spec.history = cfg.data.history;
    spec.future = cfg.data.future;
    windows = build_windows(synth_curvy_scene(spec), cfg.data.history, cfg.data.future);
  }
};

GeneratedSample two_walkers(const Eigen::Vector2d& a0, const Eigen::Vector2d& va,
                            const Eigen::Vector2d& b0, const Eigen::Vector2d& vb, int steps) {
  GeneratedSample s;
  for (const auto& [p0, v] : {std::pair{a0, va}, std::pair{b0, vb}}) {
    Trajectory t(steps, 2);
    for (int k = 0; k < steps; ++k) t.row(k) = (p0 + v * (k + 1)).transpose();
    s.trajectory.push_back(t);
  }
  return s;
}

TEST(Collision, ParallelWalkersAreSafe) {
  const auto s = two_walkers({0, 0}, {0.4, 0}, {0, 1}, {0.4, 0}, 12);
  EXPECT_FALSE(has_collision(s, 0.2));
  EXPECT_EQ(colliding_steps(s, 1.5), 12);
}

TEST(Collision, CrossingWalkersCollide) {
  // Both reach (2, 0) at step 5.
  const auto s = two_walkers({-2, 0}, {0.8, 0}, {2, -4}, {0, 0.8}, 12);
  EXPECT_TRUE(has_collision(s, 0.2));
  EXPECT_EQ(colliding_steps(s, 0.2), 1);
}

TEST(Collision, ThresholdIsStrict) {
  const auto s = two_walkers({0, 0}, {0.5, 0}, {0, 0.25}, {0.5, 0}, 4);
  EXPECT_FALSE(has_collision(s, 0.25));
  EXPECT_TRUE(has_collision(s, 0.2500001));
  EXPECT_FALSE(has_collision(s, 0.0));
}

TEST(Collision, SingleAgentNeverCollides) {
  GeneratedSample s;
  s.trajectory.push_back(Trajectory::Zero(5, 2));
  EXPECT_EQ(colliding_steps(s, 10.0), 0);
}

TEST(SampleSet, BookkeepingAddsUp) {
  Fixture setup(3);
  for (double radius : {0.0, 0.5, 3.0}) {
    Rng rng(1);
    const SampleSet set = sample_set(setup.windows[0], setup.model, 5, radius, 40, rng);
    EXPECT_EQ(set.accepted + set.rejected, set.attempts);
    EXPECT_EQ(set.samples.size(), 5u);
    for (std::size_t i = 0; i < set.samples.size(); ++i) EXPECT_EQ(set.samples[i].sample_index, static_cast<int>(i));
    if (!set.degraded) {
      EXPECT_EQ(set.accepted, 5);
      for (const auto& s : set.samples) EXPECT_FALSE(has_collision(s, radius));
    } else {
      EXPECT_EQ(set.attempts, 40);
      EXPECT_LT(set.accepted, 5);
    }
    if (radius == 0.0) {
      EXPECT_EQ(set.attempts, 5);
      EXPECT_FALSE(set.degraded);
    }
  }
}

TEST(SampleSet, DegradedSetKeepsLeastCollidingAttempts) {
  Fixture setup(3);
  Rng rng(2);
  const SampleSet set = sample_set(setup.windows[0], setup.model, 3, 100.0, 8, rng);
  EXPECT_TRUE(set.degraded);
  EXPECT_EQ(set.attempts, 8);
  EXPECT_EQ(set.rejected, 8);
  ASSERT_EQ(set.samples.size(), 3u);
  EXPECT_LT(set.samples[0].stream, set.samples[1].stream);
  EXPECT_LT(set.samples[1].stream, set.samples[2].stream);
}

TEST(SampleSet, SingleAgentWindowsAlwaysAccept) {
  Fixture setup(1);
  Rng rng(3);
  const SampleSet set = sample_set(setup.windows[1], setup.model, 7, 0.2, 7, rng);
  EXPECT_EQ(set.accepted, 7);
  EXPECT_EQ(set.rejected, 0);
  EXPECT_FALSE(set.degraded);
}

TEST(SampleSet, SmallerSetIsPrefixOfLarger) {
  Fixture setup(2);
  Rng r1(4), r2(4);
  const SampleSet small = sample_set(setup.windows[0], setup.model, 4, 0.2, 100, r1);
  const SampleSet large = sample_set(setup.windows[0], setup.model, 9, 0.2, 100, r2);
  ASSERT_FALSE(small.degraded);
  ASSERT_FALSE(large.degraded);
  for (std::size_t l = 0; l < small.samples.size(); ++l) {
    EXPECT_EQ(small.samples[l].stream, large.samples[l].stream);
    for (std::size_t i = 0; i < small.samples[l].agents(); ++i) {
      EXPECT_EQ(small.samples[l].trajectory[i], large.samples[l].trajectory[i]);
    }
  }
}

TEST(SampleSet, RejectsBadCounts) {
  Fixture setup;
  Rng rng(5);
  EXPECT_THROW(sample_set(setup.windows[0], setup.model, 0, 0.2, 10, rng), Error);
  EXPECT_THROW(sample_set(setup.windows[0], setup.model, 5, 0.2, 4, rng), Error);
}

TEST(Sample, ResidualsAccumulateFromTheAnchor) {
  Fixture setup;
  Rng rng(6);
  const GeneratedSample s = generate_sample(setup.windows[0], setup.model, rng);
  ASSERT_EQ(s.agents(), 3u);
  for (std::size_t i = 0; i < s.agents(); ++i) {
    const Trajectory& past = setup.windows[0].past[i];
    Eigen::RowVector2d prev = past.row(past.rows() - 1);
    ASSERT_EQ(s.trajectory[i].rows(), 5);
    for (Eigen::Index k = 0; k < 5; ++k) {
      EXPECT_LT((s.trajectory[i].row(k) - prev - s.residuals[i].row(k)).norm(), 1e-5);
      prev = s.trajectory[i].row(k);
    }
  }
}

TEST(Sample, RolloutToSteersTowardGivenDestinations) {
  Fixture setup;
  const WindowEncoding enc = encode_window(setup.windows[0], setup.model);
  ASSERT_EQ(enc.mixtures.size(), 3u);
  Matrix<double> d = Matrix<double>::Zero(3, 2);
  const GeneratedSample a = rollout_to(enc, setup.model, d);
  d(0, 0) = 5.0;
  const GeneratedSample b = rollout_to(enc, setup.model, d);
  EXPECT_NE(a.trajectory[0], b.trajectory[0]);
  EXPECT_EQ(b.destination[0], enc.origin[0] + Eigen::Vector2d(5, 0));
  EXPECT_THROW(rollout_to(enc, setup.model, Matrix<double>::Zero(2, 2)), ShapeError);
}

TEST(Generate, ThreadCountDoesNotChangeResults) {
  Fixture setup;
  GenerationConfig gen;
  gen.samples = 4;
  gen.max_attempts = 40;
  const auto one = generate_sets(setup.windows, setup.model, gen, 9, 1);
  const auto many = generate_sets(setup.windows, setup.model, gen, 9, 3);
  ASSERT_EQ(one.size(), setup.windows.size());
  for (std::size_t w = 0; w < one.size(); ++w) {
    EXPECT_EQ(serialize_samples(setup.windows[w], one[w], ""),
              serialize_samples(setup.windows[w], many[w], ""));
  }
}

TEST(Generate, DoesNotModifyTheModel) {
  Fixture setup;
  const std::string before = serialize_checkpoint(setup.model, 0);
  GenerationConfig gen;
  gen.samples = 3;
  gen.max_attempts = 30;
  generate_sets(setup.windows, setup.model, gen, 1, 2);
  EXPECT_EQ(serialize_checkpoint(setup.model, 0), before);
}

TEST(SamplesFile, RoundTrip) {
  Fixture setup;
  Rng rng(7);
  const SampleSet set = sample_set(setup.windows[2], setup.model, 3, 0.2, 30, rng);
  const std::string text = serialize_samples(setup.windows[2], set, "gmm.k=2\n");
  EXPECT_NE(text.find("# config gmm.k=2"), std::string::npos);
  const WindowSamples ws = parse_samples(text, "mem");
  EXPECT_EQ(ws.source, setup.windows[2].source);
  EXPECT_EQ(ws.anchor, setup.windows[2].anchor);
  EXPECT_EQ(ws.agents, setup.windows[2].agents);
  EXPECT_EQ(ws.accepted, set.accepted);
  EXPECT_EQ(ws.rejected, set.rejected);
  EXPECT_EQ(ws.degraded, set.degraded);
  ASSERT_EQ(ws.trajectories.size(), 3u);
  for (std::size_t l = 0; l < 3; ++l) {
    for (std::size_t i = 0; i < ws.agents.size(); ++i) {
      const Trajectory& t = ws.trajectories[l][i];
      ASSERT_EQ(t.rows(), 6);
      const Trajectory& past = setup.windows[2].past[i];
      EXPECT_EQ(t.row(0), past.row(past.rows() - 1));
      EXPECT_EQ(t.bottomRows(5), set.samples[l].trajectory[i]);
    }
  }
  EXPECT_EQ(samples_file_name("zara1", 42), "zara1__t42.samples");
}

TEST(SamplesFile, RejectsMalformedInput) {
  EXPECT_THROW(parse_samples("# anchor 3\n0 1 0 0 0\n", "x"), ParseError);
  EXPECT_THROW(parse_samples("# source a\n# anchor 3\n0 1 0 0\n", "x"), ParseError);
  EXPECT_THROW(parse_samples("# source a\n# anchor 3\n0 1 0 0 0\n0 1 0 1 1\n", "x"), ParseError);
  EXPECT_THROW(parse_samples("# source a\n# anchor 3\n0 1 0 0 0\n0 1 2 0 0\n", "x"), ParseError);
  EXPECT_THROW(parse_samples("# source a\n# anchor 3\n1 1 0 0 0\n", "x"), ParseError);
}

TEST(SamplesFile, DirectoryIsSortedBySourceThenAnchor) {
  const auto dir = std::filesystem::temp_directory_path() / "trajgen_test_samples";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  Fixture setup;
  GenerationConfig gen;
  gen.samples = 2;
  gen.max_attempts = 20;
  const auto sets = generate_sets(setup.windows, setup.model, gen, 2, 1);
  for (std::size_t w = setup.windows.size(); w-- > 0;) {
    std::ofstream(dir / samples_file_name(setup.windows[w].source, setup.windows[w].anchor))
        << serialize_samples(setup.windows[w], sets[w], "");
  }
  const auto loaded = load_samples_dir(dir.string());
  ASSERT_EQ(loaded.size(), setup.windows.size());
  for (std::size_t w = 0; w < loaded.size(); ++w) EXPECT_EQ(loaded[w].anchor, setup.windows[w].anchor);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace trajgen
