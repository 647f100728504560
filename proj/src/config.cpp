#include "trajgen/config.hpp"

#include "trajgen/core.hpp"
#include "trajgen/rng.hpp"
#include "trajgen/text.hpp"

#include <functional>
#include <limits>

namespace trajgen {
namespace {

struct KeyDef {
  std::function<std::string(const Config&)> get;
  std::function<void(Config&, std::string_view)> set;
};

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view want) {
  throw ConfigError("config: key '" + std::string(key) + "' expects " + std::string(want) +
                    ", got '" + std::string(value) + "'");
}

template <typename Getter>
KeyDef real_key(std::string key, Getter field) {
  return {[field](const Config& c) { return text::format_double(field(c)); },
          [field, key](Config& c, std::string_view v) {
            auto parsed = text::parse_double(v);
            if (!parsed) bad_value(key, v, "a finite number");
            field(c) = *parsed;
          }};
}

template <typename Getter>
KeyDef int_key(std::string key, Getter field) {
  return {[field](const Config& c) { return std::to_string(field(c)); },
          [field, key](Config& c, std::string_view v) {
            auto parsed = text::parse_int(v);
            if (!parsed || *parsed < std::numeric_limits<int>::min() ||
                *parsed > std::numeric_limits<int>::max()) {
              bad_value(key, v, "an integer");
            }
            field(c) = static_cast<int>(*parsed);
          }};
}

// Declaration order here is the serialization order.
const std::vector<std::pair<std::string, KeyDef>>& key_table() {
  static const std::vector<std::pair<std::string, KeyDef>> table = [] {
    std::vector<std::pair<std::string, KeyDef>> t;
    auto add = [&t](std::string key, KeyDef def) { t.emplace_back(std::move(key), std::move(def)); };
    add("data.h", int_key("data.h", [](auto& c) -> auto& { return c.data.history; }));
    add("data.f", int_key("data.f", [](auto& c) -> auto& { return c.data.future; }));
    add("data.dt", real_key("data.dt", [](auto& c) -> auto& { return c.data.dt; }));
    add("encoder.node_hidden",
        int_key("encoder.node_hidden", [](auto& c) -> auto& { return c.encoder.node_hidden; }));
    add("encoder.edge_hidden",
        int_key("encoder.edge_hidden", [](auto& c) -> auto& { return c.encoder.edge_hidden; }));
    add("encoder.radius",
        real_key("encoder.radius", [](auto& c) -> auto& { return c.encoder.radius; }));
    add("gmm.k", int_key("gmm.k", [](auto& c) -> auto& { return c.gmm_k; }));
    add("reg.alpha1", real_key("reg.alpha1", [](auto& c) -> auto& { return c.reg.alpha1; }));
    add("reg.alpha2", real_key("reg.alpha2", [](auto& c) -> auto& { return c.reg.alpha2; }));
    add("reg.alpha3", real_key("reg.alpha3", [](auto& c) -> auto& { return c.reg.alpha3; }));
    add("reg.beta1", real_key("reg.beta1", [](auto& c) -> auto& { return c.reg.beta1; }));
    add("reg.beta2", real_key("reg.beta2", [](auto& c) -> auto& { return c.reg.beta2; }));
    add("reg.beta3", real_key("reg.beta3", [](auto& c) -> auto& { return c.reg.beta3; }));
    add("decoder.hidden",
        int_key("decoder.hidden", [](auto& c) -> auto& { return c.decoder.hidden; }));
    add("decoder.huber_delta",
        real_key("decoder.huber_delta", [](auto& c) -> auto& { return c.decoder.huber_delta; }));
    add("decoder.init_from_context",
        KeyDef{[](const Config& c) { return std::string(c.decoder.init_from_context ? "true" : "false"); },
               [](Config& c, std::string_view v) {
                 if (v == "true" || v == "1") {
                   c.decoder.init_from_context = true;
                 } else if (v == "false" || v == "0") {
                   c.decoder.init_from_context = false;
                 } else {
                   bad_value("decoder.init_from_context", v, "true or false");
                 }
               }});
    add("train.lambda1",
        real_key("train.lambda1", [](auto& c) -> auto& { return c.train.lambda1; }));
    add("train.lambda2",
        real_key("train.lambda2", [](auto& c) -> auto& { return c.train.lambda2; }));
    add("train.lambda3",
        real_key("train.lambda3", [](auto& c) -> auto& { return c.train.lambda3; }));
    add("train.epochs", int_key("train.epochs", [](auto& c) -> auto& { return c.train.epochs; }));
    add("train.batch_size",
        int_key("train.batch_size", [](auto& c) -> auto& { return c.train.batch_size; }));
    add("train.lr", real_key("train.lr", [](auto& c) -> auto& { return c.train.lr; }));
    add("train.decay", real_key("train.decay", [](auto& c) -> auto& { return c.train.decay; }));
    add("train.clip", real_key("train.clip", [](auto& c) -> auto& { return c.train.clip; }));
    add("train.checkpoint_every", int_key("train.checkpoint_every", [](auto& c) -> auto& {
          return c.train.checkpoint_every;
        }));
    add("gen.samples", int_key("gen.samples", [](auto& c) -> auto& { return c.gen.samples; }));
    add("gen.collision_radius", real_key("gen.collision_radius", [](auto& c) -> auto& {
          return c.gen.collision_radius;
        }));
    add("gen.max_attempts",
        int_key("gen.max_attempts", [](auto& c) -> auto& { return c.gen.max_attempts; }));
    add("metrics.bins", int_key("metrics.bins", [](auto& c) -> auto& { return c.metrics.bins; }));
    add("metrics.v_min",
        real_key("metrics.v_min", [](auto& c) -> auto& { return c.metrics.v_min; }));
    add("metrics.asd_mode",
        KeyDef{[](const Config& c) {
                 return std::string(c.metrics.asd_mode == AsdMode::kMaxPair ? "max" : "mean");
               },
               [](Config& c, std::string_view v) {
                 if (v == "max") {
                   c.metrics.asd_mode = AsdMode::kMaxPair;
                 } else if (v == "mean") {
                   c.metrics.asd_mode = AsdMode::kMeanPair;
                 } else {
                   bad_value("metrics.asd_mode", v, "max or mean");
                 }
               }});
    add("rng.seed", KeyDef{[](const Config& c) { return std::to_string(c.seed); },
                           [](Config& c, std::string_view v) {
                             auto parsed = text::parse_int(v);
                             if (!parsed || *parsed < 0) bad_value("rng.seed", v, "a non-negative integer");
                             c.seed = static_cast<std::uint64_t>(*parsed);
                           }});
    add("rng.algorithm", KeyDef{[](const Config& c) { return c.rng_algorithm; },
                                [](Config& c, std::string_view v) { c.rng_algorithm = std::string(v); }});
    return t;
  }();
  return table;
}

const KeyDef& find_key(std::string_view key) {
  for (const auto& [name, def] : key_table()) {
    if (name == key) return def;
  }
  throw ConfigError("config: unknown key '" + std::string(key) + "'");
}

void require(bool ok, std::string_view key, std::string_view rule) {
  if (!ok) throw ConfigError("config: key '" + std::string(key) + "' must be " + std::string(rule));
}

}  // namespace

void Config::set(std::string_view key, std::string_view value) { find_key(key).set(*this, value); }

std::string Config::get(std::string_view key) const { return find_key(key).get(*this); }

const std::vector<std::string>& Config::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& entry : key_table()) out.push_back(entry.first);
    return out;
  }();
  return names;
}

void Config::validate() const {
  require(data.history >= 2, "data.h", ">= 2");
  require(data.future >= 1, "data.f", ">= 1");
  require(data.dt > 0, "data.dt", "> 0");
  require(encoder.node_hidden >= 1, "encoder.node_hidden", ">= 1");
  require(encoder.edge_hidden >= 1, "encoder.edge_hidden", ">= 1");
  require(encoder.radius >= 0, "encoder.radius", ">= 0");
  require(gmm_k >= 1, "gmm.k", ">= 1");
  require(reg.alpha1 >= 0, "reg.alpha1", ">= 0");
  require(reg.alpha2 >= 0, "reg.alpha2", ">= 0");
  require(reg.alpha3 >= 0, "reg.alpha3", ">= 0");
  require(reg.beta1 > 0, "reg.beta1", "> 0");
  require(reg.beta2 > 0, "reg.beta2", "> 0");
  require(reg.beta3 > 0, "reg.beta3", "> 0");
  require(decoder.hidden >= 1, "decoder.hidden", ">= 1");
  require(decoder.huber_delta > 0, "decoder.huber_delta", "> 0");
  require(train.lambda1 >= 0, "train.lambda1", ">= 0");
  require(train.lambda2 >= 0, "train.lambda2", ">= 0");
  require(train.lambda3 >= 0, "train.lambda3", ">= 0");
  require(train.epochs >= 0, "train.epochs", ">= 0");
  require(train.batch_size >= 1, "train.batch_size", ">= 1");
  require(train.lr > 0, "train.lr", "> 0");
  require(train.decay > 0 && train.decay <= 1, "train.decay", "in (0, 1]");
  require(train.clip > 0, "train.clip", "> 0");
  require(train.checkpoint_every >= 0, "train.checkpoint_every", ">= 0");
  require(gen.samples >= 1, "gen.samples", ">= 1");
  require(gen.collision_radius >= 0, "gen.collision_radius", ">= 0");
  require(gen.max_attempts >= gen.samples, "gen.max_attempts", ">= gen.samples");
  require(metrics.bins >= 1, "metrics.bins", ">= 1");
  require(metrics.v_min >= 0, "metrics.v_min", ">= 0");
  require(rng_algorithm == Rng::kAlgorithm, "rng.algorithm", Rng::kAlgorithm);
}

Config parse_config(std::string_view text) {
  Config config;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config: line " + std::to_string(line_no) + ": expected key=value");
    }
    config.set(text::trim(line.substr(0, eq)), text::trim(line.substr(eq + 1)));
  }
  config.validate();
  return config;
}

Config load_config(const std::string& path) { return parse_config(text::read_file(path)); }

std::string serialize_config(const Config& config) {
  std::string out;
  for (const auto& [name, def] : key_table()) out += name + "=" + def.get(config) + "\n";
  return out;
}

void apply_override(Config& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("config: override '" + std::string(assignment) + "' is not key=value");
  }
  config.set(text::trim(assignment.substr(0, eq)), text::trim(assignment.substr(eq + 1)));
}

}  // namespace trajgen
