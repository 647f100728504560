#ifndef TRAJGEN_ENCODER_HPP_
#define TRAJGEN_ENCODER_HPP_

#include "trajgen/cells.hpp"
#include "trajgen/config.hpp"
#include "trajgen/trajdata.hpp"

#include <span>
#include <string>
#include <vector>

namespace trajgen {

inline constexpr int kNodeFeatures = 4;
inline constexpr int kEdgeFeatures = 4;

/// Relative state (dx, dy, dvx, dvy) of a neighbour with respect to the ego agent.
using NeighborState = Eigen::Vector4d;

/// Sum of neighbour states. States are summed in lexicographic order so the
/// result does not depend on the order they are listed in.
Eigen::Vector4d aggregate_neighbors(std::span<const NeighborState> states);

/// For every agent and past step, the states of the other agents within
/// `radius` meters at that step: result[agent][step] is a list.
std::vector<std::vector<std::vector<NeighborState>>> neighbor_states(
    const TrajectoryWindow& window, std::span<const NormalizedAgent> agents, double radius);

/// Model inputs for a set of windows with agents stacked as rows.
struct AgentBatch {
  int history = 0;
  int future = 0;
  std::vector<Matrix<double>> node_steps;  // history x (N x 4)
  std::vector<Matrix<double>> edge_steps;  // history x (N x 4), aggregated neighbours
  Matrix<double> destination;              // N x 2, agent frame
  Matrix<double> future_positions;         // N x 2F, agent frame, step-major (x, y) pairs
  Matrix<double> origin;                   // N x 2, world
  std::vector<int> window_index;           // row -> position in the input span
  std::vector<int> agent_id;
  std::vector<std::string> window_labels;  // `source@anchor` per input window

  int rows() const { return static_cast<int>(agent_id.size()); }
};

AgentBatch make_batch(std::span<const TrajectoryWindow> windows, const Config& config);

template <typename Scalar>
struct Encoder {
  LstmCell<Scalar> node;
  LstmCell<Scalar> edge;

  Encoder() = default;
  explicit Encoder(const EncoderConfig& cfg)
      : node("encoder.node", kNodeFeatures, cfg.node_hidden),
        edge("encoder.edge", kEdgeFeatures, cfg.edge_hidden) {}

  int context_size() const { return node.hidden_size() + edge.hidden_size(); }

  void init(Rng& rng) {
    node.init(rng);
    edge.init(rng);
  }

  template <typename F>
  void for_each_parameter(F&& f) {
    node.for_each_parameter(f);
    edge.for_each_parameter(f);
  }
  template <typename F>
  void for_each_parameter(F&& f) const {
    node.for_each_parameter(f);
    edge.for_each_parameter(f);
  }
};

template <typename Scalar>
struct BoundEncoder {
  BoundLstm<Scalar> node, edge;
};

template <typename Scalar>
BoundEncoder<Scalar> bind(Tape<Scalar>& tape, Encoder<Scalar>& enc) {
  return {bind(tape, enc.node), bind(tape, enc.edge)};
}

namespace detail {

template <typename Scalar>
Var<Scalar> run_lstm(const BoundLstm<Scalar>& cell, std::span<const Var<Scalar>> steps) {
  Tape<Scalar>& tape = *steps.front().tape();
  const auto rows = steps.front().rows();
  LstmState<Scalar> state{tape.constant(Matrix<Scalar>::Zero(rows, cell.hidden)),
                          tape.constant(Matrix<Scalar>::Zero(rows, cell.hidden))};
  for (const auto& x : steps) state = lstm_cell_step(cell, x, state);
  return state.h;
}

}  // namespace detail

/// Final node-LSTM hidden state after the history, from a zero state.
template <typename Scalar>
Var<Scalar> encode_node_history(const BoundLstm<Scalar>& cell, std::span<const Var<Scalar>> steps,
                                int history) {
  if (static_cast<int>(steps.size()) != history || steps.empty()) {
    throw ShapeError("encode_node_history: expected " + std::to_string(history) + " steps, got " +
                     std::to_string(steps.size()));
  }
  return detail::run_lstm(cell, steps);
}

/// Final edge-LSTM hidden state over the aggregated neighbour inputs.
template <typename Scalar>
Var<Scalar> encode_edge_history(const BoundLstm<Scalar>& cell, std::span<const Var<Scalar>> steps) {
  if (steps.empty()) throw ShapeError("encode_edge_history: no steps");
  return detail::run_lstm(cell, steps);
}

/// Context e = [node hidden, edge hidden] for every row of the batch.
template <typename Scalar>
Var<Scalar> encode_scene(const BoundEncoder<Scalar>& enc, Tape<Scalar>& tape,
                         const AgentBatch& batch) {
  std::vector<Var<Scalar>> node_in, edge_in;
  for (int k = 0; k < batch.history; ++k) {
    node_in.push_back(tape.constant(batch.node_steps[k].cast<Scalar>()));
    edge_in.push_back(tape.constant(batch.edge_steps[k].cast<Scalar>()));
  }
  Var<Scalar> node_h = encode_node_history<Scalar>(enc.node, node_in, batch.history);
  Var<Scalar> edge_h = encode_edge_history<Scalar>(enc.edge, edge_in);
  return concat<Scalar>({node_h, edge_h});
}

}  // namespace trajgen

#endif  // TRAJGEN_ENCODER_HPP_
