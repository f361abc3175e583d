#include "recnn/raster.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "recnn/error.hpp"

namespace recnn {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

DType parse_dtype(std::string_view name) {
  if (name == "f32") return DType::f32;
  if (name == "u8") return DType::u8;
  throw FormatError("unknown raster dtype '" + std::string(name) + "' (f32|u8)");
}

std::string_view to_string(DType dtype) { return dtype == DType::u8 ? "u8" : "f32"; }

Raster::Raster(std::size_t w, std::size_t h, std::size_t b, double fill, DType type)
    : width(w), height(h), bands(b), dtype(type), data(w * h * b, fill) {
  if (w == 0 || h == 0 || b == 0) {
    throw ValidationError("raster dimensions must be positive, got " + std::to_string(w) + "x" +
                          std::to_string(h) + "x" + std::to_string(b));
  }
}

fs::path data_path_for(const fs::path& header_path) {
  fs::path p = header_path;
  return p.replace_extension(".raw");
}

namespace {

std::size_t bytes_per_value(DType dtype) { return dtype == DType::u8 ? 1 : 4; }

std::size_t positive_key(const pt::ptree& tree, const char* key, const fs::path& where) {
  auto v = tree.get_optional<long long>(key);
  if (!v || *v <= 0) {
    throw FormatError(where.string() + ": missing or non-positive '" + key + "'");
  }
  return static_cast<std::size_t>(*v);
}

}  // namespace

Raster read_raster(const fs::path& header_path) {
  pt::ptree tree;
  try {
    pt::read_ini(header_path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw FormatError("cannot read raster header: " + std::string(e.what()));
  }
  const std::size_t width = positive_key(tree, "width", header_path);
  const std::size_t height = positive_key(tree, "height", header_path);
  const std::size_t bands = positive_key(tree, "bands", header_path);
  const DType dtype = parse_dtype(tree.get<std::string>("dtype", ""));
  const std::string layout = tree.get<std::string>("layout", "");
  if (layout != "BSQ" && layout != "bsq") {
    throw FormatError(header_path.string() + ": unsupported layout '" + layout + "' (BSQ)");
  }
  const auto data_name = tree.get_optional<std::string>("data");
  if (!data_name || data_name->empty()) {
    throw FormatError(header_path.string() + ": missing 'data' file name");
  }

  Raster raster(width, height, bands, 0.0, dtype);
  if (auto nd = tree.get_optional<double>("nodata")) raster.nodata = *nd;

  const fs::path data_file = header_path.parent_path() / *data_name;
  std::ifstream in(data_file, std::ios::binary);
  if (!in) throw FormatError("cannot open raster data file " + data_file.string());
  const std::size_t count = width * height * bands;
  const std::size_t expected = count * bytes_per_value(dtype);
  std::vector<unsigned char> bytes(std::istreambuf_iterator<char>(in), {});
  if (bytes.size() != expected) {
    throw FormatError(data_file.string() + ": size mismatch, header declares " +
                      std::to_string(width) + "x" + std::to_string(height) + "x" +
                      std::to_string(bands) + " " + std::string(to_string(dtype)) + " (" +
                      std::to_string(expected) + " bytes) but file has " +
                      std::to_string(bytes.size()) + " bytes");
  }
  if (dtype == DType::u8) {
    for (std::size_t i = 0; i < count; ++i) raster.data[i] = bytes[i];
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const unsigned char* b = bytes.data() + 4 * i;
      const std::uint32_t bits = static_cast<std::uint32_t>(b[0]) |
                                 (static_cast<std::uint32_t>(b[1]) << 8) |
                                 (static_cast<std::uint32_t>(b[2]) << 16) |
                                 (static_cast<std::uint32_t>(b[3]) << 24);
      raster.data[i] = static_cast<double>(std::bit_cast<float>(bits));
    }
  }
  return raster;
}

void write_raster(const Raster& raster, const fs::path& header_path) {
  const std::size_t count = raster.width * raster.height * raster.bands;
  if (count == 0 || raster.data.size() != count) {
    throw ValidationError("raster data length does not match its dimensions");
  }
  const fs::path data_file = data_path_for(header_path);
  std::vector<unsigned char> bytes;
  bytes.reserve(count * bytes_per_value(raster.dtype));
  for (double v : raster.data) {
    if (raster.dtype == DType::u8) {
      if (!(v >= 0.0 && v <= 255.0) || v != std::floor(v)) {
        throw ValidationError("u8 raster value out of range: " + std::to_string(v));
      }
      bytes.push_back(static_cast<unsigned char>(v));
    } else {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      for (int s = 0; s < 32; s += 8) bytes.push_back(static_cast<unsigned char>(bits >> s));
    }
  }

  std::ostringstream header;
  header << "# recnn raster\n"
         << "width = " << raster.width << "\n"
         << "height = " << raster.height << "\n"
         << "bands = " << raster.bands << "\n"
         << "dtype = " << to_string(raster.dtype) << "\n"
         << "layout = BSQ\n"
         << "data = " << data_file.filename().string() << "\n";
  if (raster.nodata) {
    header << "nodata = " << std::setprecision(std::numeric_limits<double>::max_digits10)
           << *raster.nodata << "\n";
  }

  std::ofstream h(header_path, std::ios::binary);
  if (!h) throw ValidationError("cannot write raster header " + header_path.string());
  h << header.str();
  std::ofstream d(data_file, std::ios::binary);
  if (!d) throw ValidationError("cannot write raster data " + data_file.string());
  d.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!h || !d) throw ValidationError("failed writing raster " + header_path.string());
}

Raster normalize(const Raster& raster) {
  Raster out = raster;
  out.dtype = DType::f32;
  const std::size_t n = raster.pixels();
  for (std::size_t b = 0; b < raster.bands; ++b) {
    auto band = raster.band(b);
    const auto [lo, hi] = std::minmax_element(band.begin(), band.end());
    const double min = *lo, range = *hi - *lo;
    for (std::size_t i = 0; i < n; ++i) {
      out.data[b * n + i] = range > 0.0 ? (band[i] - min) / range : 0.0;
    }
  }
  return out;
}

std::size_t mirror_index(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  std::ptrdiff_t m = i % period;
  if (m < 0) m += period;
  const auto last = static_cast<std::ptrdiff_t>(n - 1);
  return static_cast<std::size_t>(m <= last ? m : period - m);
}

Tensor extract_patch(const Raster& raster, std::size_t row, std::size_t col, std::size_t patch) {
  if (patch % 2 == 0) {
    throw ValidationError("patch size must be odd, got " + std::to_string(patch));
  }
  if (row >= raster.height || col >= raster.width) {
    throw ValidationError("patch center (" + std::to_string(row) + ", " + std::to_string(col) +
                          ") outside raster");
  }
  const auto half = static_cast<std::ptrdiff_t>(patch / 2);
  Tensor out({raster.bands, patch, patch});
  std::vector<std::size_t> rows(patch), cols(patch);
  for (std::size_t k = 0; k < patch; ++k) {
    const auto off = static_cast<std::ptrdiff_t>(k) - half;
    rows[k] = mirror_index(static_cast<std::ptrdiff_t>(row) + off, raster.height);
    cols[k] = mirror_index(static_cast<std::ptrdiff_t>(col) + off, raster.width);
  }
  std::size_t idx = 0;
  for (std::size_t b = 0; b < raster.bands; ++b)
    for (std::size_t y = 0; y < patch; ++y)
      for (std::size_t x = 0; x < patch; ++x) out[idx++] = raster.at(b, rows[y], cols[x]);
  return out;
}

}  // namespace recnn
