/**
 * @file tensor_io.hpp
 * @brief Tensor file formats.
 *
 * DTNS: self-describing binary.  Layout: magic bytes "DTNS", u32 order,
 * then order u64 extents, then f64 payload in linearization order
 * (first index fastest).  All integers and doubles little-endian.
 *
 * CSV: one entry per row, "i_1,...,i_N,value" with 0-based indices;
 * missing entries are zero, duplicate indices are an error.
 *
 * IDX: the common image-database byte format.  Magic 0x00000803
 * (big-endian), then three big-endian u32 dims (count, rows, cols),
 * then u8 pixels scaled to [0,1].  Images are stacked into an order-3
 * tensor of shape rows x cols x count.
 */
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "accel/tensor.hpp"

namespace accel {

enum class TensorFormat { DTNS, CSV, IDX };

namespace detail {

inline void io_fail(const std::string& path, const std::string& what,
                    std::streamoff offset = -1) {
  std::ostringstream os;
  os << path << ": " << what;
  if (offset >= 0) os << " (byte offset " << offset << ")";
  throw std::runtime_error(os.str());
}

inline void write_u32_le(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64_le(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline void write_f64_le(std::ostream& os, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  write_u64_le(os, bits);
}

inline bool read_bytes(std::istream& is, unsigned char* buf, std::size_t n) {
  is.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(is.gcount()) == n;
}

inline std::uint32_t u32_le(const unsigned char* b) {
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
         (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
}
inline std::uint64_t u64_le(const unsigned char* b) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}
inline std::uint32_t u32_be(const unsigned char* b) {
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace detail

inline void save_tensor_dtns(const DenseTensor& t, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) detail::io_fail(path, "cannot open for writing");
  os.write("DTNS", 4);
  detail::write_u32_le(os, static_cast<std::uint32_t>(t.order()));
  for (std::size_t e : t.shape()) detail::write_u64_le(os, e);
  for (double v : t.data()) detail::write_f64_le(os, v);
  if (!os) detail::io_fail(path, "write failed");
}

inline DenseTensor load_tensor_dtns(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) detail::io_fail(path, "cannot open");
  unsigned char hdr[8];
  if (!detail::read_bytes(is, hdr, 8)) detail::io_fail(path, "truncated header", 0);
  if (std::memcmp(hdr, "DTNS", 4) != 0) detail::io_fail(path, "bad magic", 0);
  const std::uint32_t order = detail::u32_le(hdr + 4);
  if (order == 0 || order > 64) detail::io_fail(path, "implausible order", 4);
  std::vector<std::size_t> shape(order);
  for (std::uint32_t n = 0; n < order; ++n) {
    unsigned char eb[8];
    if (!detail::read_bytes(is, eb, 8))
      detail::io_fail(path, "truncated extents", 8 + 8 * n);
    shape[n] = static_cast<std::size_t>(detail::u64_le(eb));
  }
  DenseTensor t(shape);
  const std::streamoff payload = 8 + 8 * static_cast<std::streamoff>(order);
  for (std::size_t i = 0; i < t.numel(); ++i) {
    unsigned char db[8];
    if (!detail::read_bytes(is, db, 8))
      detail::io_fail(path, "truncated payload", payload + 8 * static_cast<std::streamoff>(i));
    std::uint64_t bits = detail::u64_le(db);
    std::memcpy(&t.data()[i], &bits, 8);
  }
  return t;
}

/// CSV import: rows "i_1,...,i_N,value", 0-based.  Shape must be supplied.
inline DenseTensor load_tensor_csv(const std::string& path,
                                   const std::vector<std::size_t>& shape) {
  std::ifstream is(path);
  if (!is) detail::io_fail(path, "cannot open");
  DenseTensor t(shape);
  std::vector<bool> seen(t.numel(), false);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<std::size_t> idx(shape.size());
    std::string tok;
    for (std::size_t n = 0; n < shape.size(); ++n) {
      if (!std::getline(ls, tok, ','))
        detail::io_fail(path, "line " + std::to_string(lineno) + ": too few fields");
      idx[n] = static_cast<std::size_t>(std::stoull(tok));
      if (idx[n] >= shape[n])
        detail::io_fail(path, "line " + std::to_string(lineno) + ": index out of range");
    }
    if (!std::getline(ls, tok, ','))
      detail::io_fail(path, "line " + std::to_string(lineno) + ": missing value");
    const std::size_t off = t.offset(idx);
    if (seen[off])
      detail::io_fail(path, "line " + std::to_string(lineno) + ": duplicate index");
    seen[off] = true;
    t.data()[off] = std::stod(tok);
  }
  return t;
}

/// IDX image stack -> rows x cols x count tensor, pixels scaled to [0,1].
inline DenseTensor load_tensor_idx(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) detail::io_fail(path, "cannot open");
  unsigned char hdr[16];
  if (!detail::read_bytes(is, hdr, 16)) detail::io_fail(path, "truncated header", 0);
  const std::uint32_t magic = detail::u32_be(hdr);
  if (magic != 0x00000803u) detail::io_fail(path, "bad magic", 0);
  const std::size_t count = detail::u32_be(hdr + 4);
  const std::size_t rows = detail::u32_be(hdr + 8);
  const std::size_t cols = detail::u32_be(hdr + 12);
  if (count == 0 || rows == 0 || cols == 0)
    detail::io_fail(path, "zero dimension", 4);
  DenseTensor t({rows, cols, count});
  std::vector<unsigned char> img(rows * cols);
  for (std::size_t k = 0; k < count; ++k) {
    if (!detail::read_bytes(is, img.data(), img.size()))
      detail::io_fail(path, "truncated pixel data",
                      16 + static_cast<std::streamoff>(k * rows * cols));
    // pixels are row-major within each image
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        t.at({r, c, k}) = static_cast<double>(img[r * cols + c]) / 255.0;
  }
  return t;
}

inline DenseTensor load_tensor(const std::string& path, TensorFormat fmt,
                               const std::vector<std::size_t>& csv_shape = {}) {
  switch (fmt) {
    case TensorFormat::DTNS: return load_tensor_dtns(path);
    case TensorFormat::CSV: return load_tensor_csv(path, csv_shape);
    case TensorFormat::IDX: return load_tensor_idx(path);
  }
  throw std::invalid_argument("load_tensor: unknown format");
}

}  // namespace accel
