#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "recnn/raster.hpp"

namespace recnn {

/// Label colours for multiclass renderings; label k uses entry k % size.
///   0 black, 1 white, 2 red, 3 green, 4 blue, 5 yellow, 6 cyan, 7 magenta
inline constexpr std::array<std::array<std::uint8_t, 3>, 8> kPalette{{
    {0, 0, 0},
    {255, 255, 255},
    {255, 0, 0},
    {0, 255, 0},
    {0, 0, 255},
    {255, 255, 0},
    {0, 255, 255},
    {255, 0, 255},
}};

/// Binary map as "P5\n<w> <h>\n255\n" plus one byte per pixel: 0 for
/// label 0, 255 for anything else.
void write_pgm(const Raster& map, const std::filesystem::path& path);

/// Label map as binary PPM coloured by kPalette.
void write_ppm(const Raster& map, const std::filesystem::path& path);

}  // namespace recnn
