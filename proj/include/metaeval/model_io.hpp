#pragma once

// Model files: a line-oriented text header describing the layer stack,
// followed by the dense parameters as base64-encoded little-endian doubles.
//
//   metaeval-net 1
//   seed 42
//   note trained on blobs
//   layers 3
//   dense 4 8
//   relu 8
//   dense 8 3
//   parameters 67
//   fnv1a64 0123456789abcdef
//   payload 716
//   <base64, one line>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "metaeval/error.hpp"
#include "metaeval/net.hpp"

namespace metaeval {

struct ModelProvenance {
  std::uint64_t seed = 0;
  std::string note;

  bool operator==(const ModelProvenance&) const = default;
};

struct ModelFile {
  Net net;
  ModelProvenance provenance;
};

namespace model_io_detail {

inline constexpr std::string_view kMagic = "metaeval-net";
inline constexpr int kVersion = 1;
inline constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

inline std::uint64_t fnv1a64(const std::vector<std::uint8_t>& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string base64_encode(const std::vector<std::uint8_t>& in) {
  std::string out;
  out.reserve((in.size() + 2) / 3 * 4);
  for (std::size_t i = 0; i < in.size(); i += 3) {
    const std::uint32_t n = (std::uint32_t{in[i]} << 16) |
                            (i + 1 < in.size() ? std::uint32_t{in[i + 1]} << 8 : 0u) |
                            (i + 2 < in.size() ? std::uint32_t{in[i + 2]} : 0u);
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += i + 1 < in.size() ? kAlphabet[(n >> 6) & 63] : '=';
    out += i + 2 < in.size() ? kAlphabet[n & 63] : '=';
  }
  return out;
}

inline std::vector<std::uint8_t> base64_decode(std::string_view in) {
  if (in.size() % 4 != 0) throw FormatError("model: base64 payload length is not a multiple of 4");
  auto value = [](char c, std::size_t pos) -> std::uint32_t {
    if (c >= 'A' && c <= 'Z') return static_cast<std::uint32_t>(c - 'A');
    if (c >= 'a' && c <= 'z') return static_cast<std::uint32_t>(c - 'a' + 26);
    if (c >= '0' && c <= '9') return static_cast<std::uint32_t>(c - '0' + 52);
    if (c == '+') return 62;
    if (c == '/') return 63;
    throw FormatError("model: invalid base64 character at payload offset " + std::to_string(pos));
  };
  std::vector<std::uint8_t> out;
  out.reserve(in.size() / 4 * 3);
  for (std::size_t i = 0; i < in.size(); i += 4) {
    const bool last = i + 4 == in.size();
    const int pad = last ? (in[i + 3] == '=') + (in[i + 2] == '=') : 0;
    if (pad == 1 && in[i + 2] == '=') throw FormatError("model: malformed base64 padding");
    std::uint32_t n = (value(in[i], i) << 18) | (value(in[i + 1], i + 1) << 12);
    if (pad < 2) n |= value(in[i + 2], i + 2) << 6;
    if (pad < 1) n |= value(in[i + 3], i + 3);
    out.push_back(static_cast<std::uint8_t>(n >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(n >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(n));
  }
  return out;
}

inline std::vector<std::uint8_t> to_bytes(const Vector& w) {
  std::vector<std::uint8_t> bytes(w.size() * 8);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(w[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + static_cast<std::size_t>(b)] = static_cast<std::uint8_t>(bits >> (8 * b));
  }
  return bytes;
}

inline Vector from_bytes(const std::vector<std::uint8_t>& bytes) {
  Vector w(bytes.size() / 8);
  for (std::size_t i = 0; i < w.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= std::uint64_t{bytes[i * 8 + static_cast<std::size_t>(b)]} << (8 * b);
    w[i] = std::bit_cast<double>(bits);
  }
  return w;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

class LineReader {
 public:
  explicit LineReader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

  std::istringstream next(std::string_view key) {
    std::string line;
    if (!std::getline(in_, line)) throw FormatError(path_ + ": unexpected end of file, expected '" + std::string(key) + "'");
    ++line_no_;
    std::istringstream fields(line);
    std::string k;
    fields >> k;
    if (k != key) {
      throw FormatError(path_ + ": line " + std::to_string(line_no_) + ": expected '" + std::string(key) +
                        "', found '" + k + "'");
    }
    return fields;
  }

  std::string raw_line(std::string_view what) {
    std::string line;
    if (!std::getline(in_, line)) throw FormatError(path_ + ": missing " + std::string(what));
    ++line_no_;
    return line;
  }

  std::string where() const { return path_ + ": line " + std::to_string(line_no_); }

 private:
  std::istream& in_;
  std::string path_;
  int line_no_ = 0;
};

template <typename T>
T field(std::istringstream& fields, const LineReader& r) {
  T v{};
  if (!(fields >> v)) throw FormatError(r.where() + ": malformed value");
  return v;
}

}  // namespace model_io_detail

inline std::string serialize_model(const Net& net, const ModelProvenance& prov = {}) {
  using namespace model_io_detail;
  const auto bytes = to_bytes(get_weights(net));
  const std::string payload = base64_encode(bytes);
  std::ostringstream os;
  os << kMagic << ' ' << kVersion << '\n';
  os << "seed " << prov.seed << '\n';
  std::string note = prov.note;
  for (char& c : note) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  os << "note " << note << '\n';
  os << "layers " << net.layers().size() << '\n';
  for (const Layer& l : net.layers()) {
    if (l.kind == LayerKind::kDense) os << "dense " << l.in << ' ' << l.out << '\n';
    else os << "relu " << l.in << '\n';
  }
  os << "parameters " << net.parameter_count() << '\n';
  os << "fnv1a64 " << hex64(fnv1a64(bytes)) << '\n';
  os << "payload " << payload.size() << '\n';
  os << payload << '\n';
  return os.str();
}

inline ModelFile parse_model(std::istream& in, const std::string& path = "<model>") {
  using namespace model_io_detail;
  LineReader r(in, path);
  {
    auto f = r.next(kMagic);
    if (field<int>(f, r) != kVersion) throw FormatError(r.where() + ": unsupported model version");
  }
  ModelFile out;
  {
    auto f = r.next("seed");
    out.provenance.seed = field<std::uint64_t>(f, r);
  }
  {
    auto f = r.next("note");
    std::string rest;
    std::getline(f, rest);
    if (!rest.empty() && rest.front() == ' ') rest.erase(0, 1);
    out.provenance.note = rest;
  }
  std::size_t count = 0;
  {
    auto f = r.next("layers");
    count = field<std::size_t>(f, r);
  }
  std::vector<Layer> layers;
  for (std::size_t i = 0; i < count; ++i) {
    std::istringstream f(r.raw_line("layer line"));
    std::string kind;
    f >> kind;
    if (kind == "dense") {
      const auto a = field<std::size_t>(f, r);
      const auto b = field<std::size_t>(f, r);
      layers.push_back(Layer::dense(a, b));
    } else if (kind == "relu") {
      layers.push_back(Layer::relu(field<std::size_t>(f, r)));
    } else {
      throw FormatError(r.where() + ": unknown layer kind '" + kind + "'");
    }
  }
  std::size_t params = 0;
  {
    auto f = r.next("parameters");
    params = field<std::size_t>(f, r);
  }
  std::string checksum;
  {
    auto f = r.next("fnv1a64");
    checksum = field<std::string>(f, r);
  }
  std::size_t payload_len = 0;
  {
    auto f = r.next("payload");
    payload_len = field<std::size_t>(f, r);
  }
  const std::string payload = r.raw_line("payload");
  if (payload.size() != payload_len) {
    throw FormatError(r.where() + ": payload has " + std::to_string(payload.size()) + " characters, header declares " +
                      std::to_string(payload_len));
  }
  const auto bytes = base64_decode(payload);
  if (bytes.size() != params * 8) {
    throw FormatError(r.where() + ": payload decodes to " + std::to_string(bytes.size()) + " bytes, expected " +
                      std::to_string(params * 8));
  }
  if (hex64(fnv1a64(bytes)) != checksum) throw FormatError(r.where() + ": payload checksum mismatch");

  std::size_t declared = 0;
  for (const Layer& l : layers) declared += l.parameter_count();
  if (declared != params) throw FormatError(path + ": layer shapes imply " + std::to_string(declared) + " parameters");
  try {
    out.net = set_weights(Net(std::move(layers)), from_bytes(bytes));
  } catch (const Error& e) {
    throw FormatError(path + ": " + e.what());
  }
  return out;
}

inline void save_model(const Net& net, const std::string& path, const ModelProvenance& prov = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RunError("cannot write model file '" + path + "'");
  out << serialize_model(net, prov);
  if (!out) throw RunError("failed writing model file '" + path + "'");
}

inline ModelFile load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model file '" + path + "'");
  return parse_model(in, path);
}

inline Net load_model(const std::string& path) { return load_model_file(path).net; }

}  // namespace metaeval
