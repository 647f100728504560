#ifndef TRAJGEN_TRAINING_HPP_
#define TRAJGEN_TRAINING_HPP_

#include "trajgen/model.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace trajgen {

/// Loss nodes of one batch: the weighted total and the three unweighted terms.
template <typename Scalar>
struct LossVars {
  Var<Scalar> total;
  Var<Scalar> destination;
  Var<Scalar> mode_collapse;
  Var<Scalar> reconstruction;
};

struct LossTerms {
  double destination = 0.0;
  double mode_collapse = 0.0;
  double reconstruction = 0.0;
  double total = 0.0;
};

template <typename Scalar>
LossTerms loss_terms(const LossVars<Scalar>& v) {
  return {static_cast<double>(v.destination.item()), static_cast<double>(v.mode_collapse.item()),
          static_cast<double>(v.reconstruction.item()), static_cast<double>(v.total.item())};
}

namespace detail {

template <typename Scalar, typename F>
Var<Scalar> named_term(const char* name, const AgentBatch& batch, F&& compute) {
  try {
    return compute();
  } catch (const NumericError& e) {
    std::string where;
    for (const auto& label : batch.window_labels) where += (where.empty() ? "" : ",") + label;
    throw NumericError(std::string("loss term '") + name + "' in windows [" + where + "]: " +
                       e.what());
  }
}

}  // namespace detail

/// lambda1 * destination NLL + lambda2 * mode collapse + lambda3 * reconstruction,
/// with the decoder conditioned on the ground-truth destinations.
template <typename Scalar>
LossVars<Scalar> combined_loss(Tape<Scalar>& tape, const BoundModel<Scalar>& model,
                               const AgentBatch& batch, const Config& cfg) {
  if (batch.rows() == 0) throw Error("combined_loss: empty batch");
  LossVars<Scalar> v;
  const Var<Scalar> context = detail::named_term<Scalar>(
      "encoder", batch, [&] { return encode_scene(model.encoder, tape, batch); });
  const Var<Scalar> destination = tape.constant(batch.destination.cast<Scalar>());
  MixtureVars<Scalar> mix;
  v.destination = detail::named_term<Scalar>("destination", batch, [&] {
    mix = predict_mixture(model.heads, context);
    return destination_nll(mix, destination);
  });
  v.mode_collapse = detail::named_term<Scalar>(
      "mode_collapse", batch, [&] { return mode_collapse_loss(mix, cfg.reg); });
  v.reconstruction = detail::named_term<Scalar>("reconstruction", batch, [&] {
    const auto r = rollout(model.decoder, context, destination, batch.future);
    return huber_reconstruction_loss(r, tape.constant(batch.future_positions.cast<Scalar>()),
                                     static_cast<Scalar>(cfg.decoder.huber_delta));
  });
  v.total = add(add(scale(v.destination, static_cast<Scalar>(cfg.train.lambda1)),
                    scale(v.mode_collapse, static_cast<Scalar>(cfg.train.lambda2))),
                scale(v.reconstruction, static_cast<Scalar>(cfg.train.lambda3)));
  return v;
}

/// lr0 * decay^epoch.
double lr_at(int epoch, const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  LossTerms loss;            // mean over batches
  double lr = 0.0;
  double grad_norm = 0.0;    // mean pre-clip global norm over batches
  double grad_norm_max = 0.0;
  int clipped_batches = 0;
  int batches = 0;
  double wall_seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
};

inline constexpr int kTrainLogFormatVersion = 1;

/// One whitespace-separated record per epoch under a `#` header that echoes
/// the config. Wall time is written only when `include_wall_time` is set, so
/// the default log is reproducible byte for byte.
std::string serialize_train_log(const TrainLog& log, const Config& cfg,
                                bool include_wall_time = false);

struct TrainOptions {
  /// Written every `train.checkpoint_every` epochs when non-empty.
  std::string checkpoint_path;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  Model<float> model;
  TrainLog log;
};

/// Seeded initialization, per-epoch seeded shuffle of whole windows, Adam with
/// global-norm clipping and per-epoch exponential learning-rate decay.
TrainResult train(std::span<const TrajectoryWindow> windows, const Config& cfg,
                  const TrainOptions& options = {});

}  // namespace trajgen

#endif  // TRAJGEN_TRAINING_HPP_
