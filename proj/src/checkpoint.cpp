#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cot/errors.hpp"
#include "cot/model.hpp"

namespace cot {
namespace {

constexpr char kMagic[4] = {'C', 'O', 'T', 'K'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  }

  void bytes(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  }

  void u8(std::uint8_t v) { bytes(&v, 1); }

  void u32(std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 4);
  }

  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 8);
  }

  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  void finish() {
    out_.flush();
    if (!out_) throw IoError("failed writing " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path)
      : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open " + path.string() + " for reading");
  }

  void bytes(void* data, std::size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw FormatError("checkpoint " + path_.string() +
                        ": unexpected end of file");
    }
  }

  std::uint8_t u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
  }

  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }

  std::uint64_t u64() {
    unsigned char b[8];
    bytes(b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  bool at_eof() {
    in_.peek();
    return in_.eof();
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
};

std::size_t param_count(const MlpArchitecture& arch) {
  std::size_t count = 0;
  std::size_t fan_in = arch.input_dim;
  std::vector<std::size_t> outs = arch.hidden_dims;
  outs.push_back(arch.num_classes);
  for (std::size_t out : outs) {
    count += fan_in * out + out;
    fan_in = out;
  }
  return count;
}

}  // namespace

void save_checkpoint(const ModelState& model, const CheckpointMeta& meta,
                     const std::filesystem::path& path) {
  model.architecture.validate();
  if (meta.mode_tag.size() > 255) {
    throw InputError("checkpoint: mode tag longer than 255 bytes");
  }
  Writer w(path);
  w.bytes(kMagic, 4);
  w.u32(kVersion);
  w.u64(meta.config_hash);
  w.u64(meta.seed);
  w.u8(static_cast<std::uint8_t>(meta.mode_tag.size()));
  w.bytes(meta.mode_tag.data(), meta.mode_tag.size());
  w.u8(0);  // activation: ReLU
  w.u64(model.architecture.input_dim);
  w.u64(model.architecture.hidden_dims.size());
  for (std::size_t d : model.architecture.hidden_dims) w.u64(d);
  w.u64(model.architecture.num_classes);
  w.u64(param_count(model.architecture));
  for (const Layer& layer : model.layers) {
    for (double v : layer.weight.data()) w.f64(v);
    for (double v : layer.bias.data()) w.f64(v);
  }
  w.finish();
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  Reader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::string(magic, 4) != std::string(kMagic, 4)) {
    std::ostringstream msg;
    msg << "checkpoint " << path.string() << ": bad magic \"";
    for (char c : magic) {
      if (c >= 0x20 && c < 0x7f) {
        msg << c;
      } else {
        char buf[8];
        std::snprintf(buf, sizeof buf, "\\x%02x",
                      static_cast<unsigned>(static_cast<unsigned char>(c)));
        msg << buf;
      }
    }
    msg << "\", expected \"COTK\"";
    throw FormatError(msg.str());
  }
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw FormatError("checkpoint " + path.string() + ": unsupported version " +
                      std::to_string(version));
  }
  LoadedCheckpoint loaded;
  loaded.meta.config_hash = r.u64();
  loaded.meta.seed = r.u64();
  const std::uint8_t tag_len = r.u8();
  loaded.meta.mode_tag.resize(tag_len);
  if (tag_len > 0) r.bytes(loaded.meta.mode_tag.data(), tag_len);
  const std::uint8_t activation = r.u8();
  if (activation != 0) {
    throw FormatError("checkpoint " + path.string() +
                      ": unknown activation code " + std::to_string(activation));
  }
  MlpArchitecture arch;
  arch.input_dim = r.u64();
  const std::uint64_t hidden_count = r.u64();
  if (hidden_count > 64) {
    throw FormatError("checkpoint " + path.string() +
                      ": implausible hidden layer count " +
                      std::to_string(hidden_count));
  }
  for (std::uint64_t i = 0; i < hidden_count; ++i) arch.hidden_dims.push_back(r.u64());
  arch.num_classes = r.u64();
  arch.validate();
  const std::uint64_t declared = r.u64();
  if (declared != param_count(arch)) {
    throw FormatError("checkpoint " + path.string() +
                      ": parameter count mismatch, header declares " +
                      std::to_string(declared) + " but dimensions imply " +
                      std::to_string(param_count(arch)));
  }
  loaded.model.architecture = arch;
  std::size_t fan_in = arch.input_dim;
  std::vector<std::size_t> outs = arch.hidden_dims;
  outs.push_back(arch.num_classes);
  for (std::size_t out : outs) {
    std::vector<double> w(out * fan_in);
    for (double& v : w) v = r.f64();
    std::vector<double> b(out);
    for (double& v : b) v = r.f64();
    loaded.model.layers.push_back(Layer{Tensor({out, fan_in}, std::move(w)),
                                        Tensor({out}, std::move(b))});
    fan_in = out;
  }
  if (!r.at_eof()) {
    throw FormatError("checkpoint " + path.string() +
                      ": trailing bytes after parameter block");
  }
  return loaded;
}

}  // namespace cot
