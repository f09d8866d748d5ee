// SPDX-License-Identifier: Apache-2.0

#include "streuse/grid_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace streuse {

namespace {

template <typename U>
void put_le(std::ostream& out, U value) {
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t i = 0; i < sizeof(U); ++i)
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  out.write(bytes.data(), bytes.size());
}

template <typename U>
U get_le(std::istream& in) {
  std::array<unsigned char, sizeof(U)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw std::runtime_error("grid file: unexpected end of data");
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

std::uint32_t to_u32(std::size_t v, const char* what) {
  if (v > 0xFFFFFFFFu) throw std::invalid_argument(std::string("grid file: ") + what + " too large");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void write_grid(std::ostream& out, const TokenGrid& grid) {
  const auto& s = grid.shape();
  const auto& p = grid.partition();
  out.write(kGridMagic, 4);
  put_le<std::uint32_t>(out, kGridVersion);
  put_le<std::uint32_t>(out, to_u32(s.frames, "T"));
  put_le<std::uint32_t>(out, to_u32(s.height, "H"));
  put_le<std::uint32_t>(out, to_u32(s.width, "W"));
  put_le<std::uint32_t>(out, to_u32(s.channels, "d"));
  put_le<std::uint32_t>(out, to_u32(p.temporal, "temporal channels"));
  put_le<std::uint32_t>(out, to_u32(p.x, "x channels"));
  for (double v : grid.values().data()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw std::runtime_error("grid file: write failed");
}

TokenGrid read_grid(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kGridMagic, 4) != 0)
    throw std::invalid_argument("grid file: bad magic (expected RIPL)");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kGridVersion)
    throw std::invalid_argument("grid file: unsupported version " + std::to_string(version));
  GridShape shape;
  shape.frames = get_le<std::uint32_t>(in);
  shape.height = get_le<std::uint32_t>(in);
  shape.width = get_le<std::uint32_t>(in);
  shape.channels = get_le<std::uint32_t>(in);
  validate(shape);
  const std::size_t temporal = get_le<std::uint32_t>(in);
  const std::size_t x = get_le<std::uint32_t>(in);
  ChannelPartition part = ChannelPartition::default_for(shape.channels);
  if (temporal != 0 || x != 0) {
    if (temporal + x > shape.channels)
      throw std::invalid_argument("grid file: channel partition exceeds d");
    part = {temporal, x, shape.channels - temporal - x};
  }
  Matrix values(shape.tokens(), shape.channels);
  for (double& v : values.data()) v = std::bit_cast<double>(get_le<std::uint64_t>(in));
  return TokenGrid(shape, part, std::move(values));
}

void write_grid_file(const std::filesystem::path& path, const TokenGrid& grid) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write_grid(out, grid);
}

TokenGrid read_grid_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  return read_grid(in);
}

}  // namespace streuse
