#ifndef TRAJGEN_CONFIG_HPP_
#define TRAJGEN_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace trajgen {

struct DataConfig {
  int history = 8;   // data.h
  int future = 12;   // data.f
  double dt = 0.4;   // data.dt
};

struct EncoderConfig {
  int node_hidden = 128;
  int edge_hidden = 128;
  double radius = 3.0;
};

/// Hinge weights (alpha) and scales (beta) of the mode-collapse regularizer.
struct RegularizerConfig {
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  double alpha3 = 1.0;
  double beta1 = 1.0;
  double beta2 = 2.0;
  double beta3 = 0.5;
};

struct DecoderConfig {
  int hidden = 128;
  double huber_delta = 1.0;
  bool init_from_context = true;
};

struct TrainConfig {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double lambda3 = 1.0;
  int epochs = 100;
  int batch_size = 256;
  double lr = 0.001;
  double decay = 0.9999;
  double clip = 1.0;
  int checkpoint_every = 0;
};

struct GenerationConfig {
  int samples = 20;
  double collision_radius = 0.2;
  int max_attempts = 200;
};

enum class AsdMode { kMaxPair, kMeanPair };

struct MetricsConfig {
  int bins = 20;
  double v_min = 0.05;
  AsdMode asd_mode = AsdMode::kMaxPair;
};

/// Every tunable of the pipeline. Text form is one `key=value` per line,
/// `#` starts a comment, unknown keys are rejected.
struct Config {
  DataConfig data;
  EncoderConfig encoder;
  int gmm_k = 4;
  RegularizerConfig reg;
  DecoderConfig decoder;
  TrainConfig train;
  GenerationConfig gen;
  MetricsConfig metrics;
  std::uint64_t seed = 0;
  std::string rng_algorithm = "xoshiro256**";

  /// Throws ConfigError naming the first offending key.
  void validate() const;

  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;

  static const std::vector<std::string>& keys();
};

Config parse_config(std::string_view text);
Config load_config(const std::string& path);
/// Lines in `keys()` order; parse_config(serialize_config(c)) reproduces c.
std::string serialize_config(const Config& config);

/// Applies a `key=value` override.
void apply_override(Config& config, std::string_view assignment);

}  // namespace trajgen

#endif  // TRAJGEN_CONFIG_HPP_
