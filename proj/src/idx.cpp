#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "cot/dataset.hpp"
#include "cot/errors.hpp"

namespace cot {
namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;  // 2051
constexpr std::uint32_t kLabelsMagic = 0x00000801;  // 2049

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

class BigEndianReader {
 public:
  explicit BigEndianReader(const std::filesystem::path& path)
      : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open " + path.string() + " for reading");
  }

  std::uint32_t u32() {
    unsigned char b[4];
    read(b, 4);
    return (static_cast<std::uint32_t>(b[0]) << 24) |
           (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) |
           static_cast<std::uint32_t>(b[3]);
  }

  void read(void* dst, std::size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw FormatError(path_.string() + ": unexpected end of file");
    }
  }

  bool at_eof() {
    in_.peek();
    return in_.eof();
  }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
};

class BigEndianWriter {
 public:
  explicit BigEndianWriter(const std::filesystem::path& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  }

  void u32(std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v)};
    write(b, 4);
  }

  void write(const void* src, std::size_t n) {
    out_.write(static_cast<const char*>(src), static_cast<std::streamsize>(n));
  }

  void finish() {
    out_.flush();
    if (!out_) throw IoError("failed writing " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

}  // namespace

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path) {
  BigEndianReader images(images_path);
  const std::uint32_t imagic = images.u32();
  if (imagic != kImagesMagic) {
    throw FormatError(images_path.string() + ": bad magic " + hex32(imagic) +
                      ", expected " + hex32(kImagesMagic) + " for images");
  }
  const std::uint32_t m = images.u32();
  const std::uint32_t rows = images.u32();
  const std::uint32_t cols = images.u32();
  if (m == 0 || rows == 0 || cols == 0) {
    throw FormatError(images_path.string() + ": zero dimension in header");
  }
  const std::size_t d = static_cast<std::size_t>(rows) * cols;
  std::vector<unsigned char> pixels(static_cast<std::size_t>(m) * d);
  images.read(pixels.data(), pixels.size());
  if (!images.at_eof()) {
    throw FormatError(images_path.string() + ": trailing bytes after pixel data");
  }

  BigEndianReader labels(labels_path);
  const std::uint32_t lmagic = labels.u32();
  if (lmagic != kLabelsMagic) {
    throw FormatError(labels_path.string() + ": bad magic " + hex32(lmagic) +
                      ", expected " + hex32(kLabelsMagic) + " for labels");
  }
  const std::uint32_t lm = labels.u32();
  if (lm != m) {
    throw FormatError(labels_path.string() + ": " + std::to_string(lm) +
                      " labels but " + images_path.string() + " holds " +
                      std::to_string(m) + " images");
  }
  std::vector<unsigned char> raw_labels(lm);
  labels.read(raw_labels.data(), raw_labels.size());
  if (!labels.at_eof()) {
    throw FormatError(labels_path.string() + ": trailing bytes after labels");
  }

  Dataset ds;
  std::vector<double> features(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    features[i] = static_cast<double>(pixels[i]) / 255.0;
  }
  ds.features = Tensor({m, d}, std::move(features));
  ds.labels.reserve(lm);
  int max_label = 0;
  for (unsigned char y : raw_labels) {
    ds.labels.push_back(static_cast<int>(y));
    max_label = std::max(max_label, static_cast<int>(y));
  }
  ds.num_classes = static_cast<std::size_t>(max_label) + 1;
  ds.name = "idx";
  ds.generation_params = "images=" + images_path.string() +
                         " labels=" + labels_path.string();
  ds.value_range = {0.0, 1.0};
  ds.validate();
  return ds;
}

void write_idx(const Dataset& dataset, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path, std::size_t rows,
               std::size_t cols) {
  const std::size_t d = dataset.dim();
  if (rows == 0 || cols == 0) {
    const auto side = static_cast<std::size_t>(std::lround(std::sqrt(
        static_cast<double>(d))));
    if (side * side == d) {
      rows = cols = side;
    } else {
      rows = 1;
      cols = d;
    }
  }
  if (rows * cols != d) {
    throw InputError("write_idx: rows*cols = " + std::to_string(rows * cols) +
                     " does not match feature dimension " + std::to_string(d));
  }
  for (int y : dataset.labels) {
    if (y < 0 || y > 255) {
      throw InputError("write_idx: label " + std::to_string(y) +
                       " does not fit in one byte");
    }
  }

  BigEndianWriter images(images_path);
  images.u32(kImagesMagic);
  images.u32(static_cast<std::uint32_t>(dataset.size()));
  images.u32(static_cast<std::uint32_t>(rows));
  images.u32(static_cast<std::uint32_t>(cols));
  std::vector<unsigned char> bytes(dataset.features.size());
  auto data = dataset.features.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double v = data[i];
    if (!(v >= 0.0 && v <= 1.0)) {
      throw InputError("write_idx: feature value " + std::to_string(v) +
                       " outside [0,1]; IDX export needs unit-range data");
    }
    bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  images.write(bytes.data(), bytes.size());
  images.finish();

  BigEndianWriter labels(labels_path);
  labels.u32(kLabelsMagic);
  labels.u32(static_cast<std::uint32_t>(dataset.size()));
  std::vector<unsigned char> lbytes(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    lbytes[i] = static_cast<unsigned char>(dataset.labels[i]);
  }
  labels.write(lbytes.data(), lbytes.size());
  labels.finish();
}

}  // namespace cot
