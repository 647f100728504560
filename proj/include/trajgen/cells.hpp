#ifndef TRAJGEN_CELLS_HPP_
#define TRAJGEN_CELLS_HPP_

#include "trajgen/rng.hpp"
#include "trajgen/tape.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace trajgen {

/// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], fan_in = rows.
template <typename Scalar>
void init_uniform(Parameter<Scalar>& p, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(p.value.rows()));
  for (Eigen::Index i = 0; i < p.value.size(); ++i) {
    p.value.data()[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
  }
}

/// y = x W + b, W is (in x out), b is (1 x out).
template <typename Scalar>
struct Linear {
  Parameter<Scalar> weight;
  Parameter<Scalar> bias;

  Linear() = default;
  Linear(const std::string& name, int in, int out)
      : weight(name + ".weight", in, out), bias(name + ".bias", 1, out) {}

  void init(Rng& rng) {
    init_uniform(weight, rng);
    bias.value.setZero();
  }

  template <typename F>
  void for_each_parameter(F&& f) {
    f(weight);
    f(bias);
  }
  template <typename F>
  void for_each_parameter(F&& f) const {
    f(weight);
    f(bias);
  }
};

template <typename Scalar>
struct BoundLinear {
  Var<Scalar> weight, bias;
};

template <typename Scalar>
BoundLinear<Scalar> bind(Tape<Scalar>& tape, Linear<Scalar>& l) {
  return {tape.parameter(l.weight), tape.parameter(l.bias)};
}

template <typename Scalar>
Var<Scalar> apply(const BoundLinear<Scalar>& l, Var<Scalar> x) {
  return add(matmul(x, l.weight), l.bias);
}

/// LSTM with gate blocks ordered [input, forget, candidate, output]:
///   z = x W + h U + b
///   c' = sigmoid(f) * c + sigmoid(i) * tanh(g)
///   h' = sigmoid(o) * tanh(c')
template <typename Scalar>
struct LstmCell {
  Parameter<Scalar> input_weight;   // in x 4h
  Parameter<Scalar> hidden_weight;  // h x 4h
  Parameter<Scalar> bias;           // 1 x 4h

  LstmCell() = default;
  LstmCell(const std::string& name, int in, int hidden)
      : input_weight(name + ".input_weight", in, 4 * hidden),
        hidden_weight(name + ".hidden_weight", hidden, 4 * hidden),
        bias(name + ".bias", 1, 4 * hidden) {}

  int input_size() const { return static_cast<int>(input_weight.value.rows()); }
  int hidden_size() const { return static_cast<int>(hidden_weight.value.rows()); }

  void init(Rng& rng) {
    init_uniform(input_weight, rng);
    init_uniform(hidden_weight, rng);
    bias.value.setZero();
  }

  template <typename F>
  void for_each_parameter(F&& f) {
    f(input_weight);
    f(hidden_weight);
    f(bias);
  }
  template <typename F>
  void for_each_parameter(F&& f) const {
    f(input_weight);
    f(hidden_weight);
    f(bias);
  }
};

template <typename Scalar>
struct BoundLstm {
  Var<Scalar> input_weight, hidden_weight, bias;
  int hidden = 0;
};

template <typename Scalar>
BoundLstm<Scalar> bind(Tape<Scalar>& tape, LstmCell<Scalar>& cell) {
  return {tape.parameter(cell.input_weight), tape.parameter(cell.hidden_weight),
          tape.parameter(cell.bias), cell.hidden_size()};
}

template <typename Scalar>
struct LstmState {
  Var<Scalar> h, c;
};

template <typename Scalar>
LstmState<Scalar> lstm_cell_step(const BoundLstm<Scalar>& cell, Var<Scalar> x,
                                 LstmState<Scalar> state) {
  const int n = cell.hidden;
  if (x.cols() != cell.input_weight.rows()) {
    throw ShapeError("lstm_cell_step: input width " + std::to_string(x.cols()) +
                     " does not match cell input size " +
                     std::to_string(cell.input_weight.rows()));
  }
  if (state.h.cols() != n || state.c.cols() != n || state.h.rows() != x.rows() ||
      state.c.rows() != x.rows()) {
    throw ShapeError("lstm_cell_step: state shapes " + shape_string(state.h.value()) + " / " +
                     shape_string(state.c.value()) + " do not match hidden size " +
                     std::to_string(n));
  }
  Var<Scalar> z = add(add(matmul(x, cell.input_weight), matmul(state.h, cell.hidden_weight)),
                      cell.bias);
  Var<Scalar> i = sigmoid(slice(z, 0, n));
  Var<Scalar> f = sigmoid(slice(z, n, n));
  Var<Scalar> g = tanh(slice(z, 2 * n, n));
  Var<Scalar> o = sigmoid(slice(z, 3 * n, n));
  Var<Scalar> c = add(mul(f, state.c), mul(i, g));
  Var<Scalar> h = mul(o, tanh(c));
  return {h, c};
}

/// GRU with gate blocks ordered [reset, update, candidate] and separate
/// input/hidden biases:
///   r = sigmoid(x Wr + bWr + h Ur + bUr)
///   z = sigmoid(x Wz + bWz + h Uz + bUz)
///   n = tanh(x Wn + bWn + r * (h Un + bUn))
///   h' = n + z * (h - n)
template <typename Scalar>
struct GruCell {
  Parameter<Scalar> input_weight;   // in x 3h
  Parameter<Scalar> hidden_weight;  // h x 3h
  Parameter<Scalar> input_bias;     // 1 x 3h
  Parameter<Scalar> hidden_bias;    // 1 x 3h

  GruCell() = default;
  GruCell(const std::string& name, int in, int hidden)
      : input_weight(name + ".input_weight", in, 3 * hidden),
        hidden_weight(name + ".hidden_weight", hidden, 3 * hidden),
        input_bias(name + ".input_bias", 1, 3 * hidden),
        hidden_bias(name + ".hidden_bias", 1, 3 * hidden) {}

  int input_size() const { return static_cast<int>(input_weight.value.rows()); }
  int hidden_size() const { return static_cast<int>(hidden_weight.value.rows()); }

  void init(Rng& rng) {
    init_uniform(input_weight, rng);
    init_uniform(hidden_weight, rng);
    input_bias.value.setZero();
    hidden_bias.value.setZero();
  }

  template <typename F>
  void for_each_parameter(F&& f) {
    f(input_weight);
    f(hidden_weight);
    f(input_bias);
    f(hidden_bias);
  }
  template <typename F>
  void for_each_parameter(F&& f) const {
    f(input_weight);
    f(hidden_weight);
    f(input_bias);
    f(hidden_bias);
  }
};

template <typename Scalar>
struct BoundGru {
  Var<Scalar> input_weight, hidden_weight, input_bias, hidden_bias;
  int hidden = 0;
};

template <typename Scalar>
BoundGru<Scalar> bind(Tape<Scalar>& tape, GruCell<Scalar>& cell) {
  return {tape.parameter(cell.input_weight), tape.parameter(cell.hidden_weight),
          tape.parameter(cell.input_bias), tape.parameter(cell.hidden_bias), cell.hidden_size()};
}

/// One GRU step given the precomputed input projection `xw = x W + bW`.
/// Lets callers split a wide input into a constant part projected once.
template <typename Scalar>
Var<Scalar> gru_cell_step_projected(const BoundGru<Scalar>& cell, Var<Scalar> xw, Var<Scalar> h) {
  const int n = cell.hidden;
  if (xw.cols() != 3 * n || h.cols() != n || h.rows() != xw.rows()) {
    throw ShapeError("gru_cell_step: hidden state " + shape_string(h.value()) +
                     " inconsistent with projected input " + shape_string(xw.value()));
  }
  Var<Scalar> hu = add(matmul(h, cell.hidden_weight), cell.hidden_bias);
  Var<Scalar> r = sigmoid(add(slice(xw, 0, n), slice(hu, 0, n)));
  Var<Scalar> z = sigmoid(add(slice(xw, n, n), slice(hu, n, n)));
  Var<Scalar> cand = tanh(add(slice(xw, 2 * n, n), mul(r, slice(hu, 2 * n, n))));
  return add(cand, mul(z, sub(h, cand)));
}

template <typename Scalar>
Var<Scalar> gru_cell_step(const BoundGru<Scalar>& cell, Var<Scalar> x, Var<Scalar> h) {
  if (x.cols() != cell.input_weight.rows()) {
    throw ShapeError("gru_cell_step: input width " + std::to_string(x.cols()) +
                     " does not match cell input size " +
                     std::to_string(cell.input_weight.rows()));
  }
  return gru_cell_step_projected(cell, add(matmul(x, cell.input_weight), cell.input_bias), h);
}

}  // namespace trajgen

#endif  // TRAJGEN_CELLS_HPP_
