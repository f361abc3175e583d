#include "recnn/netpbm.hpp"

#include <fstream>
#include <string>
#include <vector>

#include "recnn/error.hpp"

namespace recnn {

namespace {

void write_image(const Raster& map, const std::filesystem::path& path, const char* magic,
                 const std::vector<char>& pixels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write image " + path.string());
  out << magic << '\n' << map.width << ' ' << map.height << "\n255\n";
  out.write(pixels.data(), static_cast<std::streamsize>(pixels.size()));
  if (!out) throw ValidationError("failed writing " + path.string());
}

void check_map(const Raster& map) {
  if (map.bands != 1) throw ValidationError("only single-band maps can be rendered");
}

}  // namespace

void write_pgm(const Raster& map, const std::filesystem::path& path) {
  check_map(map);
  std::vector<char> pixels(map.pixels());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    pixels[i] = static_cast<char>(map.data[i] != 0.0 ? 255 : 0);
  }
  write_image(map, path, "P5", pixels);
}

void write_ppm(const Raster& map, const std::filesystem::path& path) {
  check_map(map);
  std::vector<char> pixels;
  pixels.reserve(3 * map.pixels());
  for (double v : map.data) {
    if (!(v >= 0.0)) throw ValidationError("negative label in map");
    const auto& rgb = kPalette[static_cast<std::size_t>(v) % kPalette.size()];
    for (auto c : rgb) pixels.push_back(static_cast<char>(c));
  }
  write_image(map, path, "P6", pixels);
}

}  // namespace recnn
