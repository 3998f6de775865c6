#pragma once

// Binary field snapshot ("NFPE" format, version 1):
//
//   offset  size  content
//   0       4     magic "NFPE"
//   4       1     u8 version = 1
//   5       1     u8 dim
//   6       1     u8 components
//   7       4     u32 n (little-endian)
//   11      8*d   f64 extent per axis (little-endian)
//   ...     8*N   f64 values, row-major over (cell..., component), little-endian
//
// All multi-byte values are little-endian regardless of host order.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "nfpe/grid.hpp"

namespace nfpe {

class SnapshotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <class T>
void put_le(std::ostream& os, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw SnapshotError("snapshot: truncated file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace detail

inline constexpr std::uint8_t kSnapshotVersion = 1;

inline void write_snapshot(std::ostream& os, const Field& f) {
  const Grid& g = f.grid();
  os.write("NFPE", 4);
  detail::put_le<std::uint8_t>(os, kSnapshotVersion);
  detail::put_le<std::uint8_t>(os, static_cast<std::uint8_t>(g.dim()));
  detail::put_le<std::uint8_t>(os, static_cast<std::uint8_t>(f.components()));
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.n()));
  for (int a = 0; a < g.dim(); ++a) detail::put_le<double>(os, g.extent(a));
  for (std::size_t i = 0; i < f.cells(); ++i)
    for (int c = 0; c < f.components(); ++c) detail::put_le<double>(os, f.component(c)[i]);
}

inline Field read_snapshot(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "NFPE", 4) != 0) throw SnapshotError("snapshot: bad magic");
  const auto version = detail::get_le<std::uint8_t>(is);
  if (version != kSnapshotVersion)
    throw SnapshotError("snapshot: unsupported version " + std::to_string(version));
  const int dim = detail::get_le<std::uint8_t>(is);
  const int components = detail::get_le<std::uint8_t>(is);
  const auto n = detail::get_le<std::uint32_t>(is);
  if (dim != 2 && dim != 3) throw SnapshotError("snapshot: bad dim");
  std::array<double, 3> extent{1.0, 1.0, 1.0};
  for (int a = 0; a < dim; ++a) extent[a] = detail::get_le<double>(is);
  Grid grid(dim, n, extent);
  Field f(grid, components);
  for (std::size_t i = 0; i < f.cells(); ++i)
    for (int c = 0; c < components; ++c) f.component(c)[i] = detail::get_le<double>(is);
  return f;
}

inline void save_snapshot(const std::string& path, const Field& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw SnapshotError("cannot open " + path + " for writing");
  write_snapshot(os, f);
  if (!os) throw SnapshotError("write failed: " + path);
}

inline Field load_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw SnapshotError("cannot open " + path);
  return read_snapshot(is);
}

}  // namespace nfpe
