#include "trajgen/encoder.hpp"

#include <algorithm>

namespace trajgen {

Eigen::Vector4d aggregate_neighbors(std::span<const NeighborState> states) {
  std::vector<NeighborState> sorted(states.begin(), states.end());
  std::sort(sorted.begin(), sorted.end(), [](const NeighborState& a, const NeighborState& b) {
    return std::lexicographical_compare(a.data(), a.data() + 4, b.data(), b.data() + 4);
  });
  Eigen::Vector4d total = Eigen::Vector4d::Zero();
  for (const auto& s : sorted) total += s;
  return total;
}

std::vector<std::vector<std::vector<NeighborState>>> neighbor_states(
    const TrajectoryWindow& window, std::span<const NormalizedAgent> agents, double radius) {
  const std::size_t n = window.size();
  const Eigen::Index history = n == 0 ? 0 : window.past.front().rows();
  std::vector<std::vector<std::vector<NeighborState>>> out(
      n, std::vector<std::vector<NeighborState>>(static_cast<std::size_t>(history)));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      for (Eigen::Index k = 0; k < history; ++k) {
        const Eigen::Vector2d dp = (window.past[j].row(k) - window.past[i].row(k)).transpose();
        if (dp.norm() > radius) continue;
        const Eigen::Vector2d dv =
            (agents[j].past_velocity.row(k) - agents[i].past_velocity.row(k)).transpose();
        out[i][static_cast<std::size_t>(k)].push_back(NeighborState(dp.x(), dp.y(), dv.x(), dv.y()));
      }
    }
  }
  return out;
}

AgentBatch make_batch(std::span<const TrajectoryWindow> windows, const Config& config) {
  const int history = config.data.history;
  const int future = config.data.future;
  int total = 0;
  for (const auto& w : windows) total += static_cast<int>(w.size());

  AgentBatch batch;
  batch.history = history;
  batch.future = future;
  batch.node_steps.assign(static_cast<std::size_t>(history), Matrix<double>::Zero(total, kNodeFeatures));
  batch.edge_steps.assign(static_cast<std::size_t>(history), Matrix<double>::Zero(total, kEdgeFeatures));
  batch.destination.resize(total, 2);
  batch.future_positions.resize(total, 2 * future);
  batch.origin.resize(total, 2);

  int row = 0;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const auto& window = windows[w];
    batch.window_labels.push_back(window.source + "@" + std::to_string(window.anchor));
    for (std::size_t i = 0; i < window.size(); ++i) {
      if (window.past[i].rows() != history || window.future[i].rows() != future) {
        throw ShapeError("make_batch: window at anchor " + std::to_string(window.anchor) +
                         " does not match horizons H=" + std::to_string(history) +
                         ", F=" + std::to_string(future));
      }
    }
    const auto agents = normalize_window(window, config.data.dt);
    const auto neighbors = neighbor_states(window, agents, config.encoder.radius);
    for (std::size_t i = 0; i < window.size(); ++i, ++row) {
      for (int k = 0; k < history; ++k) {
        batch.node_steps[k].row(row) = agents[i].node_features.row(k);
        batch.edge_steps[k].row(row) = aggregate_neighbors(neighbors[i][k]).transpose();
      }
      batch.destination.row(row) = agents[i].destination.transpose();
      for (int k = 0; k < future; ++k) {
        batch.future_positions(row, 2 * k) = agents[i].future(k, 0);
        batch.future_positions(row, 2 * k + 1) = agents[i].future(k, 1);
      }
      batch.origin.row(row) = agents[i].origin.transpose();
      batch.window_index.push_back(static_cast<int>(w));
      batch.agent_id.push_back(window.agents[i]);
    }
  }
  return batch;
}

}  // namespace trajgen
