#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "recnn/tensor.hpp"

namespace recnn {

enum class DType { f32, u8 };

DType parse_dtype(std::string_view name);
std::string_view to_string(DType dtype);

/// Georeference-free multi-band image held band-sequentially in memory:
/// value (band, row, col) lives at ((band * height) + row) * width + col.
struct Raster {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t bands = 0;
  DType dtype = DType::f32;
  std::optional<double> nodata;
  std::vector<double> data;

  Raster() = default;
  Raster(std::size_t width, std::size_t height, std::size_t bands, double fill = 0.0,
         DType dtype = DType::f32);

  std::size_t pixels() const { return width * height; }
  std::size_t index(std::size_t band, std::size_t row, std::size_t col) const {
    return (band * height + row) * width + col;
  }
  double& at(std::size_t band, std::size_t row, std::size_t col) {
    return data[index(band, row, col)];
  }
  double at(std::size_t band, std::size_t row, std::size_t col) const {
    return data[index(band, row, col)];
  }
  std::span<const double> band(std::size_t b) const {
    return std::span<const double>(data).subspan(b * pixels(), pixels());
  }
  bool same_geometry(const Raster& other) const {
    return width == other.width && height == other.height && bands == other.bands;
  }

  friend bool operator==(const Raster&, const Raster&) = default;
};

/// Reads a text key-value header (width, height, bands, dtype f32|u8,
/// layout BSQ, data = <file relative to the header>, optional nodata) and
/// its raw little-endian data file.
Raster read_raster(const std::filesystem::path& header_path);

/// Writes `<stem>.hdr` style header at `header_path` plus the raw data file
/// next to it (same stem, ".raw"). u8 rasters must hold integers in [0, 255].
void write_raster(const Raster& raster, const std::filesystem::path& header_path);

/// Path of the data file write_raster() pairs with `header_path`.
std::filesystem::path data_path_for(const std::filesystem::path& header_path);

/// Per-band min-max scaling to [0, 1]; constant bands become all zeros.
Raster normalize(const Raster& raster);

/// Reflect-without-repeat index: -1 -> 1, n -> n - 2. Size-1 axes map to 0.
std::size_t mirror_index(std::ptrdiff_t i, std::size_t n);

/// Centered P x P window as a [bands, P, P] tensor, mirror-padded where the
/// window leaves the raster. P must be odd.
Tensor extract_patch(const Raster& raster, std::size_t row, std::size_t col, std::size_t patch);

}  // namespace recnn
