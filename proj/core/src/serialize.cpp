// Model container:
//   "RCNN" | u32 version | u32 metadata length | metadata (key = value text)
//   | u32 tensor count | per tensor: u32 rank, u32 dims[rank], f64 values
//   | u32 CRC-32 of every preceding byte
// All integers and floats are little-endian.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <zlib.h>

#include "recnn/config.hpp"
#include "recnn/error.hpp"
#include "recnn/model.hpp"

namespace recnn {

namespace {

constexpr char kMagic[4] = {'R', 'C', 'N', 'N'};
constexpr std::uint32_t kVersion = 1;

std::string join(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(values[i]);
  }
  return out;
}

std::uint32_t crc32_of(std::span<const unsigned char> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) bytes_.push_back(static_cast<unsigned char>(v >> s));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int s = 0; s < 64; s += 8) bytes_.push_back(static_cast<unsigned char>(bits >> s));
  }
  void raw(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    bytes_.insert(bytes_.end(), c, c + n);
  }
  std::vector<unsigned char>& bytes() { return bytes_; }

 private:
  std::vector<unsigned char> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(bytes_[pos_ + k]) << (8 * k);
    pos_ += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(bytes_[pos_ + k]) << (8 * k);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }
  std::string text(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("model file is truncated");
  }
  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string model_metadata(const ModelConfig& c) {
  std::ostringstream out;
  out << "format = recnn-model\n"
      << "cell = " << to_string(c.cell) << "\n"
      << "mode = " << (c.mode == TaskMode::binary ? "binary" : "multiclass") << "\n"
      << "bands = " << c.bands << "\n"
      << "patch = " << c.patch << "\n"
      << "conv_channels = " << join(c.conv_channels) << "\n"
      << "conv_dilations = " << join(c.conv_dilations) << "\n"
      << "kernel_radius = " << c.kernel_radius << "\n"
      << "hidden = " << c.hidden << "\n"
      << "fc_hidden = " << c.fc_hidden << "\n"
      << "classes = " << c.classes << "\n"
      << "share_branches = " << (c.share_branches ? "true" : "false") << "\n"
      << "biases = " << (c.biases ? "true" : "false") << "\n"
      << "rnn_activation = " << to_string(c.rnn_activation) << "\n"
      << "normalize_inputs = " << (c.normalize_inputs ? "true" : "false") << "\n";
  return out.str();
}

ModelConfig parse_model_metadata(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw FormatError("model metadata: " + std::string(e.what()));
  }
  const ConfigSection s(tree, "model");
  if (s.get_string("format", "") != "recnn-model") {
    throw FormatError("model metadata does not describe a recnn model");
  }
  ModelConfig c;
  c.cell = parse_cell_type(s.get_string("cell"));
  const std::string mode = s.get_string("mode");
  if (mode != "binary" && mode != "multiclass") throw FormatError("model: unknown mode " + mode);
  c.mode = mode == "binary" ? TaskMode::binary : TaskMode::multiclass;
  c.bands = s.get_size("bands");
  c.patch = s.get_size("patch");
  c.conv_channels = s.get_sizes("conv_channels", {});
  c.conv_dilations = s.get_sizes("conv_dilations", {});
  c.kernel_radius = s.get_size("kernel_radius", 1);
  c.hidden = s.get_size("hidden");
  c.fc_hidden = s.get_size("fc_hidden");
  c.classes = s.get_size("classes");
  c.share_branches = s.get_bool("share_branches", true);
  c.biases = s.get_bool("biases", true);
  c.rnn_activation = parse_activation(s.get_string("rnn_activation", "tanh"));
  c.normalize_inputs = s.get_bool("normalize_inputs", false);
  return c;
}

std::vector<unsigned char> serialize_model(const ReCNNModel& model) {
  auto copy = model;
  const auto params = copy.parameters();
  const std::string meta = model_metadata(model.config());
  Writer w;
  w.raw(kMagic, 4);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(meta.size()));
  w.raw(meta.data(), meta.size());
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    w.u32(static_cast<std::uint32_t>(p.tensor->rank()));
    for (auto d : p.tensor->shape()) w.u32(static_cast<std::uint32_t>(d));
    for (double v : p.tensor->data()) w.f64(v);
  }
  const std::uint32_t crc = crc32_of(w.bytes());
  w.u32(crc);
  return std::move(w.bytes());
}

ReCNNModel deserialize_model(std::span<const unsigned char> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("not a recnn model file (bad magic)");
  }
  if (bytes.size() < 12) throw FormatError("model file is truncated");
  const auto body = bytes.first(bytes.size() - 4);
  Reader tail(bytes.last(4));
  const std::uint32_t stored = tail.u32();

  Reader r(body);
  r.text(4);
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw FormatError("unsupported model format version " + std::to_string(version) +
                      " (expected " + std::to_string(kVersion) + ")");
  }
  if (crc32_of(body) != stored) throw FormatError("model file checksum mismatch");

  const std::string meta = r.text(r.u32());
  Rng unused(0);
  ReCNNModel model = ReCNNModel::create(parse_model_metadata(meta), unused);
  auto params = model.parameters();
  const std::uint32_t count = r.u32();
  if (count != params.size()) {
    throw FormatError("model declares " + std::to_string(params.size()) +
                      " parameter tensors but file holds " + std::to_string(count));
  }
  for (auto& p : params) {
    const std::uint32_t rank = r.u32();
    Shape shape(rank);
    for (auto& d : shape) d = r.u32();
    if (shape != p.tensor->shape()) {
      throw FormatError("parameter " + p.name + ": declared shape " +
                        to_string(p.tensor->shape()) + " but file holds " + to_string(shape));
    }
    for (auto& v : p.tensor->data()) v = r.f64();
  }
  if (r.position() != body.size()) throw FormatError("trailing bytes in model file");
  return model;
}

void save_model(const ReCNNModel& model, const std::filesystem::path& path) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write model to " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ValidationError("failed writing model " + path.string());
}

ReCNNModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model file " + path.string());
  std::vector<unsigned char> bytes(std::istreambuf_iterator<char>(in), {});
  return deserialize_model(bytes);
}

}  // namespace recnn
