#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <zlib.h>

#include "dmn/atomic_file.hpp"
#include "dmn/error.hpp"
#include "dmn/model.hpp"

namespace dmn {

// Layout (all integers and doubles little-endian, matrices row-major):
//   "DMNMODEL" | u32 version | u64 N | u64 d | u32 layers | u32 units per layer...
//   f64[N*d] anchor samples
//   per unit: u8 kernel kind | i32 degree | f64 offset | f64 gamma | u8 activation
//             matrix weights (as a column) | matrix anchors | matrix projection
//   head: matrix normals | matrix trade-offs (as a column)
//   u32 CRC-32 of every preceding byte
// A matrix is u64 rows | u64 cols | f64[rows*cols]. See docs/model_format.md.

inline constexpr std::array<char, 8> kModelMagic{'D', 'M', 'N', 'M', 'O', 'D', 'E', 'L'};
inline constexpr std::uint32_t kModelVersion = 1;

namespace detail {

static_assert(std::numeric_limits<double>::is_iec559, "IEEE-754 doubles required");

class ByteWriter {
 public:
  template <class T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<unsigned char, sizeof(T)> raw;
    std::memcpy(raw.data(), &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
    buf_.insert(buf_.end(), raw.begin(), raw.end());
  }

  void put_matrix(const Eigen::MatrixXd& m) {
    put<std::uint64_t>(static_cast<std::uint64_t>(m.rows()));
    put<std::uint64_t>(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) put<double>(m(i, j));
  }

  void put_bytes(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }

  std::vector<unsigned char>& bytes() { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class ByteReader {
 public:
  ByteReader(const unsigned char* data, std::size_t size) : p_(data), end_(data + size) {}

  template <class T>
  T get() {
    need(sizeof(T));
    std::array<unsigned char, sizeof(T)> raw;
    std::memcpy(raw.data(), p_, sizeof(T));
    p_ += sizeof(T);
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
    T v;
    std::memcpy(&v, raw.data(), sizeof(T));
    return v;
  }

  Eigen::MatrixXd get_matrix(const char* what) {
    const auto rows = get<std::uint64_t>();
    const auto cols = get<std::uint64_t>();
    constexpr std::uint64_t limit = std::uint64_t{1} << 32;
    if (rows > limit || cols > limit || (rows && cols > remaining() / 8 / rows))
      throw FormatError(FormatError::Kind::truncated,
                        std::string("model file too short for ") + what + " matrix");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = get<double>();
    return m;
  }

  std::size_t remaining() const { return static_cast<std::size_t>(end_ - p_); }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw FormatError(FormatError::Kind::truncated, "model file is truncated");
  }
  const unsigned char* p_;
  const unsigned char* end_;
};

inline std::uint32_t crc32_of(const unsigned char* data, std::size_t n) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = ::crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace detail

/// Serialized model and head; bitwise-exact for every stored double.
inline std::vector<unsigned char> encode_model(const DmnModel& model, const ClassifierHead& head) {
  model.validate();
  detail::ByteWriter w;
  w.put_bytes(kModelMagic.data(), kModelMagic.size());
  w.put<std::uint32_t>(kModelVersion);
  w.put<std::uint64_t>(static_cast<std::uint64_t>(model.anchor_count()));
  w.put<std::uint64_t>(static_cast<std::uint64_t>(model.input_dim()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.layers.size()));
  for (const auto& layer : model.layers) w.put<std::uint32_t>(static_cast<std::uint32_t>(layer.size()));
  for (Eigen::Index i = 0; i < model.anchor_samples.rows(); ++i)
    for (Eigen::Index j = 0; j < model.anchor_samples.cols(); ++j)
      w.put<double>(model.anchor_samples(i, j));
  for (const auto& layer : model.layers)
    for (const auto& u : layer) {
      w.put<std::uint8_t>(static_cast<std::uint8_t>(u.kernel.kind));
      w.put<std::int32_t>(u.kernel.degree);
      w.put<double>(u.kernel.offset);
      w.put<double>(u.kernel.gamma);
      w.put<std::uint8_t>(static_cast<std::uint8_t>(u.activation));
      w.put_matrix(u.weights);
      w.put_matrix(u.anchors);
      w.put_matrix(u.projection);
    }
  w.put_matrix(head.normals);
  w.put_matrix(head.trade_offs);
  const std::uint32_t crc = detail::crc32_of(w.bytes().data(), w.bytes().size());
  w.put<std::uint32_t>(crc);
  return std::move(w.bytes());
}

inline std::pair<DmnModel, ClassifierHead> decode_model(const std::vector<unsigned char>& bytes) {
  using Kind = FormatError::Kind;
  if (bytes.size() < kModelMagic.size() ||
      std::memcmp(bytes.data(), kModelMagic.data(), kModelMagic.size()) != 0)
    throw FormatError(Kind::bad_magic, "not a DMN model file");
  if (bytes.size() < kModelMagic.size() + 4 + 4)
    throw FormatError(Kind::truncated, "model file is truncated");

  detail::ByteReader version_reader(bytes.data() + kModelMagic.size(), 4);
  const auto version = version_reader.get<std::uint32_t>();
  if (version != kModelVersion)
    throw FormatError(Kind::version, "model file version " + std::to_string(version) +
                                         " is not supported (expected " +
                                         std::to_string(kModelVersion) + ")");

  const std::size_t body = bytes.size() - 4;
  detail::ByteReader crc_reader(bytes.data() + body, 4);
  if (crc_reader.get<std::uint32_t>() != detail::crc32_of(bytes.data(), body))
    throw FormatError(Kind::checksum, "model file checksum mismatch");

  detail::ByteReader r(bytes.data() + kModelMagic.size() + 4, body - kModelMagic.size() - 4);
  const auto N = r.get<std::uint64_t>();
  const auto d = r.get<std::uint64_t>();
  const auto L = r.get<std::uint32_t>();
  if (L < 2 || L > 1024) throw FormatError(Kind::malformed, "implausible layer count");
  std::vector<std::uint32_t> widths(L);
  for (auto& wdt : widths) {
    wdt = r.get<std::uint32_t>();
    if (wdt == 0 || wdt > 1u << 20) throw FormatError(Kind::malformed, "implausible layer width");
  }
  if (N == 0 || d == 0 || (N * d) / N != d || N * d > r.remaining() / 8)
    throw FormatError(Kind::truncated, "model file too short for anchor samples");

  DmnModel model;
  model.anchor_samples.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < model.anchor_samples.rows(); ++i)
    for (Eigen::Index j = 0; j < model.anchor_samples.cols(); ++j)
      model.anchor_samples(i, j) = r.get<double>();

  for (std::uint32_t l = 0; l < L; ++l) {
    std::vector<DmnUnit> units;
    for (std::uint32_t p = 0; p < widths[l]; ++p) {
      DmnUnit u;
      const auto kind = r.get<std::uint8_t>();
      if (kind > static_cast<std::uint8_t>(KernelKind::histogram_intersection))
        throw FormatError(Kind::malformed, "unknown kernel kind");
      u.kernel.kind = static_cast<KernelKind>(kind);
      u.kernel.degree = r.get<std::int32_t>();
      u.kernel.offset = r.get<double>();
      u.kernel.gamma = r.get<double>();
      const auto act = r.get<std::uint8_t>();
      if (act > static_cast<std::uint8_t>(Activation::exp))
        throw FormatError(Kind::malformed, "unknown activation");
      u.activation = static_cast<Activation>(act);
      const Eigen::MatrixXd wcol = r.get_matrix("weight");
      if (wcol.cols() > 1) throw FormatError(Kind::malformed, "weights must be stored as a column");
      u.weights = wcol.size() ? Eigen::VectorXd(wcol.col(0)) : Eigen::VectorXd();
      u.anchors = r.get_matrix("anchor");
      u.projection = r.get_matrix("projection");
      units.push_back(std::move(u));
    }
    model.layers.push_back(std::move(units));
  }

  ClassifierHead head;
  head.normals = r.get_matrix("normal");
  const Eigen::MatrixXd ccol = r.get_matrix("trade-off");
  if (ccol.cols() > 1) throw FormatError(Kind::malformed, "trade-offs must be stored as a column");
  head.trade_offs = ccol.size() ? Eigen::VectorXd(ccol.col(0)) : Eigen::VectorXd();
  if (r.remaining() != 0) throw FormatError(Kind::malformed, "trailing bytes after the head");

  try {
    model.validate();
    if (head.normals.rows() > 0) check_head_compatible(model, head);
  } catch (const Error& e) {
    throw FormatError(Kind::malformed, std::string("inconsistent model file: ") + e.what());
  }
  return {std::move(model), std::move(head)};
}

/// Writes model and head (an empty head stores K = 0) atomically.
inline void save_model(const DmnModel& model, const ClassifierHead& head,
                       const std::filesystem::path& path) {
  const std::vector<unsigned char> bytes = encode_model(model, head);
  write_atomically(
      path,
      [&](std::ostream& os) {
        os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
      },
      true);
}

inline std::pair<DmnModel, ClassifierHead> load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open model '" + path.string() + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_model(bytes);
}

}  // namespace dmn
