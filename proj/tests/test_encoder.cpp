#include "trajgen/encoder.hpp"
#include "trajgen/gradcheck.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

namespace trajgen {
namespace {

TrajectoryWindow window_of(const std::vector<Eigen::Vector2d>& starts, const std::vector<Eigen::Vector2d>& vel,
                           int history = 8, int future = 12) {
  TrajectoryWindow w;
  w.source = "t";
  w.anchor = history - 1;
  for (std::size_t a = 0; a < starts.size(); ++a) {
    w.agents.push_back(static_cast<int>(a));
    Trajectory past(history, 2), fut(future, 2);
    for (int k = 0; k < history + future; ++k) {
      const Eigen::Vector2d p = starts[a] + vel[a] * (0.4 * k);
      if (k < history) {
        past.row(k) = p.transpose();
      } else {
        fut.row(k - history) = p.transpose();
      }
    }
    w.past.push_back(past);
    w.future.push_back(fut);
  }
  return w;
}

TEST(Neighbors, SumIsOrderInvariant) {
  Rng rng(2);
  std::vector<NeighborState> states;
  for (int i = 0; i < 9; ++i) {
    states.emplace_back(rng.normal() * 1e3, rng.normal() * 1e-3, rng.normal(), rng.normal() * 1e7);
  }
  const Eigen::Vector4d base = aggregate_neighbors(states);
  for (int trial = 0; trial < 50; ++trial) {
    for (int i = static_cast<int>(states.size()) - 1; i > 0; --i) {
      std::swap(states[i], states[rng.below(static_cast<std::uint64_t>(i) + 1)]);
    }
    EXPECT_EQ(aggregate_neighbors(states), base);
  }
  EXPECT_EQ(aggregate_neighbors({}), Eigen::Vector4d::Zero());
}

TEST(Neighbors, RadiusIsInclusiveAndStatesAreRelative) {
  // Agent 1 sits exactly 3 m away, agent 2 sits 3.5 m away.
  const auto w = window_of({{0, 0}, {3, 0}, {0, 3.5}}, {{1, 0}, {1, 0.5}, {1, 0}});
  const auto agents = normalize_window(w, 0.4);
  const auto n = neighbor_states(w, agents, 3.0);
  ASSERT_EQ(n.size(), 3u);
  ASSERT_EQ(n[0][0].size(), 1u);
  EXPECT_NEAR(n[0][0][0](0), 3.0, 1e-12);
  EXPECT_NEAR(n[0][0][0](3), 0.5, 1e-12);
  EXPECT_TRUE(n[2][0].empty());
  for (const auto& per_agent : n) {
    for (const auto& step : per_agent) {
      for (const auto& s : step) EXPECT_LE(s.head<2>().norm(), 3.0);
    }
  }
  EXPECT_TRUE(neighbor_states(w, agents, 0.0)[0][0].empty());
}

TEST(Batch, ShapesAndLayout) {
  const std::vector<TrajectoryWindow> ws{window_of({{0, 0}, {1, 0}}, {{1, 0}, {0, 1}}),
                                         window_of({{5, 5}}, {{0.5, 0}})};
  const Config cfg;
  const AgentBatch b = make_batch(ws, cfg);
  EXPECT_EQ(b.rows(), 3);
  ASSERT_EQ(b.node_steps.size(), 8u);
  EXPECT_EQ(b.node_steps[0].rows(), 3);
  EXPECT_EQ(b.node_steps[0].cols(), 4);
  EXPECT_EQ(b.future_positions.cols(), 24);
  EXPECT_EQ(b.window_index, (std::vector<int>{0, 0, 1}));
  EXPECT_EQ(b.window_labels, (std::vector<std::string>{"t@7", "t@7"}));
  EXPECT_NEAR(b.destination(2, 0), 0.5 * 0.4 * 12, 1e-12);
  EXPECT_NEAR(b.future_positions(1, 23), 0.4 * 12, 1e-12);
  EXPECT_EQ(b.future_positions(1, 22), 0.0);
  EXPECT_EQ(b.edge_steps[3].row(2), Eigen::RowVector4d::Zero());
  EXPECT_EQ(b.origin.row(2), Eigen::RowVector2d(5 + 0.5 * 0.4 * 7, 5));

  Config other;
  other.data.future = 10;
  EXPECT_THROW(make_batch(ws, other), ShapeError);
}

TEST(Encoder, ContextIsPermutationEquivariant) {
  Config cfg;
  cfg.encoder.node_hidden = 6;
  cfg.encoder.edge_hidden = 5;
  Encoder<double> enc(cfg.encoder);
  Rng rng(8);
  enc.init(rng);
  const auto w = window_of({{0, 0}, {1, 0}, {0, 2}}, {{1, 0}, {0.8, 0.1}, {1, -0.2}});
  TrajectoryWindow swapped = w;
  std::swap(swapped.past[0], swapped.past[2]);
  std::swap(swapped.future[0], swapped.future[2]);

  auto encode = [&](const TrajectoryWindow& win) {
    Tape<double> t(false);
    const std::vector<TrajectoryWindow> one{win};
    return encode_scene(bind(t, enc), t, make_batch(one, cfg)).value();
  };
  const Matrix<double> a = encode(w), b = encode(swapped);
  EXPECT_EQ(a.cols(), 11);
  // Equal up to rounding: the batched products block rows differently.
  EXPECT_TRUE(a.row(0).isApprox(b.row(2), 1e-12));
  EXPECT_TRUE(a.row(1).isApprox(b.row(1), 1e-12));
  EXPECT_TRUE(a.row(2).isApprox(b.row(0), 1e-12));
}

TEST(Encoder, RejectsWrongStepCount) {
  LstmCell<double> cell("c", 4, 3);
  Tape<double> t;
  const auto b = bind(t, cell);
  std::vector<Var<double>> steps(3, t.constant(Matrix<double>::Zero(2, 4)));
  EXPECT_THROW(encode_node_history<double>(b, steps, 8), ShapeError);
  EXPECT_THROW(encode_edge_history<double>(b, std::span<const Var<double>>{}), ShapeError);
}

TEST(Encoder, GradientsPassFiniteDifferences) {
  Config cfg;
  cfg.data.history = 4;
  cfg.data.future = 2;
  cfg.encoder.node_hidden = 3;
  cfg.encoder.edge_hidden = 2;
  Encoder<double> enc(cfg.encoder);
  Rng rng(9);
  enc.init(rng);
  const std::vector<TrajectoryWindow> ws{window_of({{0, 0}, {1, 1}}, {{1, 0}, {0.5, 0.5}}, 4, 2)};
  const AgentBatch batch = make_batch(ws, cfg);
  std::vector<Parameter<double>*> params;
  enc.for_each_parameter([&](Parameter<double>& p) { params.push_back(&p); });
  auto loss = [&](Tape<double>& t) { return sum(square(encode_scene(bind(t, enc), t, batch))); };
  const auto report = finite_difference_check<double>(loss, params, 1e-6);
  EXPECT_LT(report.max_relative_error, 1e-6) << report.worst_parameter;
}

}  // namespace
}  // namespace trajgen
