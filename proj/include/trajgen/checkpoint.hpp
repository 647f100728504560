#ifndef TRAJGEN_CHECKPOINT_HPP_
#define TRAJGEN_CHECKPOINT_HPP_

#include "trajgen/model.hpp"

#include <string>
#include <string_view>

namespace trajgen {

inline constexpr int kCheckpointFormatVersion = 1;

/// A text header (magic, version, epochs, resolved config, one `param name
/// rows cols` line per parameter) terminated by `end_header`, followed by the
/// parameter values as little-endian float32 in header order.
struct Checkpoint {
  Model<float> model;
  int epochs_trained = 0;
};

std::string serialize_checkpoint(const Model<float>& model, int epochs_trained);
Checkpoint parse_checkpoint(std::string_view bytes);

void save_checkpoint(const std::string& path, const Model<float>& model, int epochs_trained);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace trajgen

#endif  // TRAJGEN_CHECKPOINT_HPP_
