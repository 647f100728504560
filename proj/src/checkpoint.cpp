#include "trajgen/checkpoint.hpp"

#include "trajgen/text.hpp"

#include <bit>
#include <cstring>
#include <sstream>

namespace trajgen {

static_assert(std::endian::native == std::endian::little, "checkpoints assume a little-endian host");

namespace {

constexpr std::string_view kMagic = "trajgen-checkpoint";
constexpr std::string_view kEndHeader = "end_header\n";

std::string_view next_line(std::string_view bytes, std::size_t& pos) {
  const std::size_t end = bytes.find('\n', pos);
  if (end == std::string_view::npos) throw ParseError("checkpoint: truncated header");
  std::string_view line = bytes.substr(pos, end - pos);
  pos = end + 1;
  return line;
}

long long header_int(std::string_view token, std::string_view what) {
  const auto v = text::parse_int(token);
  if (!v) throw ParseError("checkpoint: bad " + std::string(what) + " '" + std::string(token) + "'");
  return *v;
}

}  // namespace

std::string serialize_checkpoint(const Model<float>& model, int epochs_trained) {
  std::ostringstream header;
  header << kMagic << '\n'
         << "format_version " << kCheckpointFormatVersion << '\n'
         << "epochs " << epochs_trained << '\n';
  std::istringstream cfg(serialize_config(model.config));
  for (std::string line; std::getline(cfg, line);) {
    if (!line.empty()) header << "config " << line << '\n';
  }
  const auto params = model.parameters();
  for (const auto* p : params) {
    header << "param " << p->name << ' ' << p->value.rows() << ' ' << p->value.cols() << '\n';
  }
  header << kEndHeader;

  std::string out = header.str();
  for (const auto* p : params) {
    const auto bytes = static_cast<std::size_t>(p->value.size()) * sizeof(float);
    const std::size_t at = out.size();
    out.resize(at + bytes);
    std::memcpy(out.data() + at, p->value.data(), bytes);
  }
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  std::size_t pos = 0;
  if (next_line(bytes, pos) != kMagic) throw ParseError("checkpoint: not a trajgen checkpoint");

  auto fields = text::split_whitespace(next_line(bytes, pos));
  if (fields.size() != 2 || fields[0] != "format_version") {
    throw ParseError("checkpoint: missing format_version");
  }
  if (header_int(fields[1], "format_version") != kCheckpointFormatVersion) {
    throw ParseError("checkpoint: unsupported format_version " + std::string(fields[1]));
  }
  fields = text::split_whitespace(next_line(bytes, pos));
  if (fields.size() != 2 || fields[0] != "epochs") throw ParseError("checkpoint: missing epochs");
  const long long epochs = header_int(fields[1], "epochs");

  std::string config_text;
  struct Shape {
    std::string name;
    long long rows, cols;
  };
  std::vector<Shape> shapes;
  for (;;) {
    const std::string_view line = next_line(bytes, pos);
    if (line == "end_header") break;
    if (line.starts_with("config ")) {
      config_text.append(line.substr(7));
      config_text.push_back('\n');
      continue;
    }
    fields = text::split_whitespace(line);
    if (fields.size() != 4 || fields[0] != "param") {
      throw ParseError("checkpoint: unexpected header line '" + std::string(line) + "'");
    }
    shapes.push_back({std::string(fields[1]), header_int(fields[2], "rows"),
                      header_int(fields[3], "cols")});
  }

  Checkpoint ckpt;
  ckpt.epochs_trained = static_cast<int>(epochs);
  ckpt.model = Model<float>(parse_config(config_text));
  auto params = ckpt.model.parameters();
  if (params.size() != shapes.size()) {
    throw ParseError("checkpoint: expected " + std::to_string(params.size()) +
                     " parameters for this config, found " + std::to_string(shapes.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    if (p.name != shapes[i].name || p.value.rows() != shapes[i].rows ||
        p.value.cols() != shapes[i].cols) {
      throw ParseError("checkpoint: parameter '" + shapes[i].name + "' does not match '" + p.name +
                       "' " + shape_string(p.value));
    }
    const auto size = static_cast<std::size_t>(p.value.size()) * sizeof(float);
    if (pos + size > bytes.size()) throw ParseError("checkpoint: truncated data for '" + p.name + "'");
    std::memcpy(p.value.data(), bytes.data() + pos, size);
    pos += size;
    if (!p.value.allFinite()) throw ParseError("checkpoint: non-finite values in '" + p.name + "'");
    p.zero_grad();
  }
  if (pos != bytes.size()) throw ParseError("checkpoint: trailing bytes after parameter data");
  return ckpt;
}

void save_checkpoint(const std::string& path, const Model<float>& model, int epochs_trained) {
  text::write_file(path, serialize_checkpoint(model, epochs_trained));
}

Checkpoint load_checkpoint(const std::string& path) { return parse_checkpoint(text::read_file(path)); }

}  // namespace trajgen
