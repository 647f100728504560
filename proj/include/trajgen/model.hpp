#ifndef TRAJGEN_MODEL_HPP_
#define TRAJGEN_MODEL_HPP_

#include "trajgen/decoder.hpp"
#include "trajgen/destination.hpp"
#include "trajgen/encoder.hpp"

#include <cstdint>
#include <vector>

namespace trajgen {

/// Encoder, mixture heads and decoder. Parameter order is fixed: encoder
/// node and edge cells, the four mixture heads, then decoder GRU, initializer
/// and residual map.
template <typename Scalar>
struct Model {
  Config config;
  Encoder<Scalar> encoder;
  MixtureHeads<Scalar> heads;
  Decoder<Scalar> decoder;

  Model() = default;
  explicit Model(const Config& cfg)
      : config(cfg),
        encoder(cfg.encoder),
        heads(encoder.context_size(), cfg.gmm_k),
        decoder(encoder.context_size(), cfg.decoder) {}

  /// Fresh weights from `seed`; biases start at zero.
  void initialize(std::uint64_t seed) {
    Rng rng = Rng::substream(seed, 0x1417);
    encoder.init(rng);
    heads.init(rng);
    decoder.init_parameters(rng);
    zero_grad();
  }

  template <typename F>
  void for_each_parameter(F&& f) {
    encoder.for_each_parameter(f);
    heads.for_each_parameter(f);
    decoder.for_each_parameter(f);
  }
  template <typename F>
  void for_each_parameter(F&& f) const {
    encoder.for_each_parameter(f);
    heads.for_each_parameter(f);
    decoder.for_each_parameter(f);
  }

  std::vector<Parameter<Scalar>*> parameters() {
    std::vector<Parameter<Scalar>*> out;
    for_each_parameter([&](Parameter<Scalar>& p) { out.push_back(&p); });
    return out;
  }
  std::vector<const Parameter<Scalar>*> parameters() const {
    std::vector<const Parameter<Scalar>*> out;
    for_each_parameter([&](const Parameter<Scalar>& p) { out.push_back(&p); });
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each_parameter([&](const Parameter<Scalar>& p) { n += static_cast<std::size_t>(p.value.size()); });
    return n;
  }

  void zero_grad() {
    for_each_parameter([](Parameter<Scalar>& p) { p.zero_grad(); });
  }

  template <typename T>
  Model<T> cast() const {
    Model<T> out(config);
    auto dst = out.parameters();
    auto src = parameters();
    for (std::size_t i = 0; i < src.size(); ++i) {
      dst[i]->value = src[i]->value.template cast<T>();
      dst[i]->zero_grad();
    }
    return out;
  }
};

template <typename Scalar>
struct BoundModel {
  BoundEncoder<Scalar> encoder;
  BoundHeads<Scalar> heads;
  BoundDecoder<Scalar> decoder;
};

template <typename Scalar>
BoundModel<Scalar> bind(Tape<Scalar>& tape, Model<Scalar>& model) {
  BoundModel<Scalar> b;
  b.encoder = bind(tape, model.encoder);
  b.heads = bind(tape, model.heads);
  b.decoder = bind(tape, model.decoder);
  return b;
}

}  // namespace trajgen

#endif  // TRAJGEN_MODEL_HPP_
