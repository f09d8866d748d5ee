// SPDX-License-Identifier: Apache-2.0
//
// Flat binary grid files. Layout, all little-endian:
//
//   offset  size  field
//   0       4     magic "RIPL"
//   4       4     version (u32, currently 1)
//   8       16    T, H, W, d (u32 each)
//   24      8     temporal and x channel counts (u32 each; 0, 0 = default split)
//   32      8*N*d row-major doubles, token order t, h, w
//
// A sidecar "<path>.json" records how the grid was produced.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "streuse/grid.hpp"

namespace streuse {

inline constexpr char kGridMagic[4] = {'R', 'I', 'P', 'L'};
inline constexpr std::uint32_t kGridVersion = 1;
inline constexpr std::size_t kGridHeaderBytes = 32;

void write_grid(std::ostream& out, const TokenGrid& grid);
TokenGrid read_grid(std::istream& in);

void write_grid_file(const std::filesystem::path& path, const TokenGrid& grid);
TokenGrid read_grid_file(const std::filesystem::path& path);

}  // namespace streuse
