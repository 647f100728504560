#ifndef TRAJGEN_DECODER_HPP_
#define TRAJGEN_DECODER_HPP_

#include "trajgen/cells.hpp"
#include "trajgen/config.hpp"

#include <vector>

namespace trajgen {

/// Recurrent residual decoder. Each step the GRU reads [e, d, s] and a linear
/// map turns its hidden state into a displacement added to the position.
template <typename Scalar>
struct Decoder {
  GruCell<Scalar> gru;
  Linear<Scalar> init;
  Linear<Scalar> residual;
  bool init_from_context = true;

  Decoder() = default;
  Decoder(int context, const DecoderConfig& cfg)
      : gru("decoder.gru", context + 4, cfg.hidden),
        init("decoder.init", context, cfg.hidden),
        residual("decoder.residual", cfg.hidden, 2),
        init_from_context(cfg.init_from_context) {}

  int context_size() const { return gru.input_size() - 4; }

  void init_parameters(Rng& rng) {
    gru.init(rng);
    init.init(rng);
    residual.init(rng);
  }

  template <typename F>
  void for_each_parameter(F&& f) {
    gru.for_each_parameter(f);
    init.for_each_parameter(f);
    residual.for_each_parameter(f);
  }
  template <typename F>
  void for_each_parameter(F&& f) const {
    gru.for_each_parameter(f);
    init.for_each_parameter(f);
    residual.for_each_parameter(f);
  }
};

template <typename Scalar>
struct BoundDecoder {
  BoundGru<Scalar> gru;
  BoundLinear<Scalar> init, residual;
  bool init_from_context = true;
};

template <typename Scalar>
BoundDecoder<Scalar> bind(Tape<Scalar>& tape, Decoder<Scalar>& dec) {
  return {bind(tape, dec.gru), bind(tape, dec.init), bind(tape, dec.residual),
          dec.init_from_context};
}

/// positions[0] is the origin (zeros); positions[k + 1] = positions[k] + residuals[k].
template <typename Scalar>
struct RolloutVars {
  std::vector<Var<Scalar>> positions;  // F + 1 nodes, N x 2
  std::vector<Var<Scalar>> residuals;  // F nodes, N x 2

  /// Steps 1..F as N x 2F, step-major (x, y) pairs.
  Var<Scalar> future() const {
    return concat<Scalar>(std::vector<Var<Scalar>>(positions.begin() + 1, positions.end()));
  }
};

template <typename Scalar>
RolloutVars<Scalar> rollout(const BoundDecoder<Scalar>& dec, Var<Scalar> context,
                            Var<Scalar> destination, int future) {
  if (future <= 0) throw Error("rollout: horizon must be positive, got " + std::to_string(future));
  const auto ctx = context.cols();
  if (dec.gru.input_weight.rows() != ctx + 4) {
    throw ShapeError("rollout: context width " + std::to_string(ctx) +
                     " does not match decoder input " +
                     std::to_string(dec.gru.input_weight.rows() - 4));
  }
  if (destination.cols() != 2 || destination.rows() != context.rows()) {
    throw ShapeError("rollout: destinations " + shape_string(destination.value()) +
                     " do not match context " + shape_string(context.value()));
  }
  Tape<Scalar>& tape = *context.tape();
  const auto rows = context.rows();
  const auto& w = dec.gru.input_weight;

  // [e, d] is fixed across steps, so its projection is computed once.
  Var<Scalar> fixed = add(add(matmul(context, slice_rows(w, 0, ctx)),
                              matmul(destination, slice_rows(w, ctx, 2))),
                          dec.gru.input_bias);
  Var<Scalar> w_pos = slice_rows(w, ctx + 2, 2);

  Var<Scalar> h = dec.init_from_context
                      ? apply(dec.init, context)
                      : tape.constant(Matrix<Scalar>::Zero(rows, dec.gru.hidden));
  RolloutVars<Scalar> out;
  out.positions.push_back(tape.constant(Matrix<Scalar>::Zero(rows, 2)));
  for (int k = 0; k < future; ++k) {
    const Var<Scalar> s = out.positions.back();
    h = gru_cell_step_projected(dec.gru, add(fixed, matmul(s, w_pos)), h);
    Var<Scalar> delta = apply(dec.residual, h);
    out.residuals.push_back(delta);
    out.positions.push_back(add(s, delta));
  }
  return out;
}

/// (1/(N F)) sum over agents and steps of the per-coordinate Huber error,
/// summed over x and y. `target` is N x 2F like RolloutVars::future().
template <typename Scalar>
Var<Scalar> huber_reconstruction_loss(const RolloutVars<Scalar>& r, Var<Scalar> target,
                                      Scalar delta) {
  const auto steps = static_cast<Eigen::Index>(r.residuals.size());
  Var<Scalar> predicted = r.future();
  if (target.rows() != predicted.rows() || target.cols() != 2 * steps) {
    throw ShapeError("huber_reconstruction_loss: target " + shape_string(target.value()) +
                     " does not match rollout " + shape_string(predicted.value()));
  }
  if (!(delta > Scalar(0))) throw Error("huber_reconstruction_loss: delta must be positive");
  const Scalar count = static_cast<Scalar>(predicted.rows() * steps);
  return scale(sum(huber(sub(predicted, target), delta)), Scalar(1) / count);
}

}  // namespace trajgen

#endif  // TRAJGEN_DECODER_HPP_
