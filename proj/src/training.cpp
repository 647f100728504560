#include "trajgen/training.hpp"

#include "trajgen/checkpoint.hpp"
#include "trajgen/optim.hpp"
#include "trajgen/text.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

namespace trajgen {

double lr_at(int epoch, const TrainConfig& cfg) {
  if (epoch < 0) throw Error("lr_at: epoch must be non-negative");
  return cfg.lr * std::pow(cfg.decay, static_cast<double>(epoch));
}

std::string serialize_train_log(const TrainLog& log, const Config& cfg, bool include_wall_time) {
  std::ostringstream out;
  out << "# trajgen-trainlog " << kTrainLogFormatVersion << '\n';
  std::istringstream config_lines(serialize_config(cfg));
  for (std::string line; std::getline(config_lines, line);) {
    if (!line.empty()) out << "# " << line << '\n';
  }
  out << "epoch destination mode_collapse reconstruction total lr grad_norm grad_norm_max "
         "clipped_batches batches";
  if (include_wall_time) out << " wall_seconds";
  out << '\n';
  for (const auto& r : log.epochs) {
    out << r.epoch << ' ' << text::format_double(r.loss.destination) << ' '
        << text::format_double(r.loss.mode_collapse) << ' '
        << text::format_double(r.loss.reconstruction) << ' ' << text::format_double(r.loss.total)
        << ' ' << text::format_double(r.lr) << ' ' << text::format_double(r.grad_norm) << ' '
        << text::format_double(r.grad_norm_max) << ' ' << r.clipped_batches << ' ' << r.batches;
    if (include_wall_time) out << ' ' << text::format_double(r.wall_seconds);
    out << '\n';
  }
  return out.str();
}

TrainResult train(std::span<const TrajectoryWindow> windows, const Config& cfg,
                  const TrainOptions& options) {
  cfg.validate();
  if (windows.empty()) throw Error("train: no training windows");

  TrainResult result;
  result.model = Model<float>(cfg);
  result.model.initialize(cfg.seed);
  auto params = result.model.parameters();
  AdamState<float> adam;

  std::vector<std::size_t> order(windows.size());
  const auto batch_size = static_cast<std::size_t>(cfg.train.batch_size);

  for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = Rng::substream(cfg.seed, 0x5eed, static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.below(i)]);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.lr = lr_at(epoch, cfg.train);
    for (std::size_t first = 0; first < order.size(); first += batch_size) {
      std::vector<TrajectoryWindow> chunk;
      for (std::size_t i = first; i < std::min(order.size(), first + batch_size); ++i) {
        chunk.push_back(windows[order[i]]);
      }
      const AgentBatch batch = make_batch(chunk, cfg);

      LossTerms terms;
      double norm = 0.0;
      try {
        result.model.zero_grad();
        Tape<float> tape;
        const auto bound = bind(tape, result.model);
        const auto loss = combined_loss(tape, bound, batch, cfg);
        terms = loss_terms(loss);
        tape.backward(loss.total);
        const double scale = clip_grad_norm<float>(params, cfg.train.clip, &norm);
        if (scale < 1.0) ++record.clipped_batches;
        adam_step<float>(params, adam, record.lr);
      } catch (const NumericError& e) {
        throw NumericError("train: epoch " + std::to_string(epoch) + " batch " +
                           std::to_string(record.batches) + ": " + e.what());
      }
      record.loss.destination += terms.destination;
      record.loss.mode_collapse += terms.mode_collapse;
      record.loss.reconstruction += terms.reconstruction;
      record.loss.total += terms.total;
      record.grad_norm += norm;
      record.grad_norm_max = std::max(record.grad_norm_max, norm);
      ++record.batches;
    }
    const double n = static_cast<double>(record.batches);
    record.loss.destination /= n;
    record.loss.mode_collapse /= n;
    record.loss.reconstruction /= n;
    record.loss.total /= n;
    record.grad_norm /= n;
    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.epochs.push_back(record);
    if (options.on_epoch) options.on_epoch(record);

    const int every = cfg.train.checkpoint_every;
    if (!options.checkpoint_path.empty() && every > 0 && (epoch + 1) % every == 0) {
      save_checkpoint(options.checkpoint_path, result.model, epoch + 1);
    }
  }
  result.model.zero_grad();
  return result;
}

}  // namespace trajgen
