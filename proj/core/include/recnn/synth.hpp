#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "recnn/raster.hpp"
#include "recnn/rng.hpp"

namespace recnn {

/// Land-cover class with its mean spectrum at both dates. Classes whose two
/// means are equal are "unchanged" covers; label 0 conventionally means
/// unchanged, other labels encode change types.
struct LandClass {
  std::string name;
  std::size_t label = 0;
  std::vector<double> t1_mean;
  std::vector<double> t2_mean;
};

struct Region {
  enum class Kind { rect, disc };

  std::string name;
  std::string land_class;
  Kind kind = Kind::rect;
  // rect: top-left corner and extent
  std::size_t row = 0, col = 0, height = 0, width = 0;
  // disc: center and radius
  double center_row = 0.0, center_col = 0.0, radius = 0.0;

  bool contains(std::size_t r, std::size_t c) const;
};

struct SceneSpec {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t bands = 0;
  /// Standard deviation of the per-pixel Gaussian noise at each date.
  double noise = 0.0;
  /// Box-filter radius applied to the noise field (0 = white noise). The
  /// filtered field is rescaled so its marginal deviation stays `noise`.
  std::size_t noise_smoothing = 0;
  std::string background;
  std::vector<LandClass> classes;
  std::vector<Region> regions;

  const LandClass& find_class(const std::string& name) const;
  void validate() const;
};

/// Sectioned key = value text:
///   [scene]         width, height, bands, noise, noise_smoothing, background
///   [class:<name>]  label, t1 = comma list, t2 = comma list (defaults to t1)
///   [region:<name>] class, shape = rect|disc, row/col/height/width or
///                   center_row/center_col/radius
SceneSpec parse_scene_spec(std::istream& in);
SceneSpec read_scene_spec(const std::filesystem::path& path);

struct Scene {
  Raster t1;
  Raster t2;
  Raster labels;  // u8, single band
};

/// Paints regions over the background class, adds independent noise to
/// each date and clips to [0, 1]. Throws ValidationError when overlapping
/// regions assign different labels to a pixel.
Scene synth_scene(const SceneSpec& spec, Rng& rng);

}  // namespace recnn
