#include "recnn/synth.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "recnn/config.hpp"
#include "recnn/error.hpp"

namespace recnn {

namespace pt = boost::property_tree;

bool Region::contains(std::size_t r, std::size_t c) const {
  if (kind == Kind::rect) return r >= row && r < row + height && c >= col && c < col + width;
  const double dr = static_cast<double>(r) - center_row;
  const double dc = static_cast<double>(c) - center_col;
  return dr * dr + dc * dc <= radius * radius;
}

const LandClass& SceneSpec::find_class(const std::string& name) const {
  for (const auto& c : classes)
    if (c.name == name) return c;
  throw ValidationError("scene: unknown class '" + name + "'");
}

void SceneSpec::validate() const {
  if (width == 0 || height == 0 || bands == 0) {
    throw ValidationError("scene: width, height and bands must be positive");
  }
  if (!(noise >= 0.0)) throw ValidationError("scene: noise must be >= 0");
  if (classes.empty()) throw ValidationError("scene: no classes declared");
  for (const auto& c : classes) {
    if (c.t1_mean.size() != bands || c.t2_mean.size() != bands) {
      throw ValidationError("scene: class '" + c.name + "' needs " + std::to_string(bands) +
                            " values per date");
    }
    if (c.label > 255) throw ValidationError("scene: class label must fit in u8");
  }
  find_class(background);
  for (const auto& r : regions) {
    find_class(r.land_class);
    if (r.kind == Region::Kind::rect && (r.height == 0 || r.width == 0)) {
      throw ValidationError("scene: region '" + r.name + "' is empty");
    }
    if (r.kind == Region::Kind::disc && !(r.radius > 0.0)) {
      throw ValidationError("scene: region '" + r.name + "' needs a positive radius");
    }
  }
}

SceneSpec parse_scene_spec(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw FormatError("scene spec: " + std::string(e.what()));
  }
  SceneSpec spec;
  const auto scene = tree.get_child_optional("scene");
  if (!scene) throw ValidationError("scene spec: missing [scene] section");
  const ConfigSection s(*scene, "scene");
  spec.width = s.get_size("width");
  spec.height = s.get_size("height");
  spec.bands = s.get_size("bands");
  spec.noise = s.get_double("noise", 0.0);
  spec.noise_smoothing = s.get_size("noise_smoothing", 0);
  spec.background = s.get_string("background");

  for (const auto& [key, child] : tree) {
    if (boost::starts_with(key, "class:")) {
      const ConfigSection c(child, key);
      LandClass lc;
      lc.name = key.substr(6);
      lc.label = c.get_size("label");
      lc.t1_mean = c.get_doubles("t1");
      lc.t2_mean = c.has("t2") ? c.get_doubles("t2") : lc.t1_mean;
      spec.classes.push_back(std::move(lc));
    } else if (boost::starts_with(key, "region:")) {
      const ConfigSection r(child, key);
      Region region;
      region.name = key.substr(7);
      region.land_class = r.get_string("class");
      const std::string shape = r.get_string("shape", "rect");
      if (shape == "rect") {
        region.kind = Region::Kind::rect;
        region.row = r.get_size("row");
        region.col = r.get_size("col");
        region.height = r.get_size("height");
        region.width = r.get_size("width");
      } else if (shape == "disc") {
        region.kind = Region::Kind::disc;
        region.center_row = r.get_double("center_row");
        region.center_col = r.get_double("center_col");
        region.radius = r.get_double("radius");
      } else {
        throw ValidationError(key + ": unknown shape '" + shape + "' (rect|disc)");
      }
      spec.regions.push_back(std::move(region));
    } else if (key != "scene") {
      throw ValidationError("scene spec: unknown section [" + key + "]");
    }
  }
  spec.validate();
  return spec;
}

SceneSpec read_scene_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open scene spec " + path.string());
  return parse_scene_spec(in);
}

namespace {

// Gaussian field for one date, optionally box-smoothed with mirror edges.
std::vector<double> noise_field(const SceneSpec& spec, Rng& rng) {
  const std::size_t n = spec.width * spec.height;
  std::vector<double> field(n * spec.bands, 0.0);
  if (spec.noise == 0.0) return field;
  for (auto& v : field) v = rng.normal();
  const std::size_t s = spec.noise_smoothing;
  if (s > 0) {
    const auto rad = static_cast<std::ptrdiff_t>(s);
    const double gain = static_cast<double>(2 * s + 1);  // restores unit variance
    std::vector<double> smoothed(field.size());
    for (std::size_t b = 0; b < spec.bands; ++b) {
      const double* src = field.data() + b * n;
      double* dst = smoothed.data() + b * n;
      for (std::size_t r = 0; r < spec.height; ++r) {
        for (std::size_t c = 0; c < spec.width; ++c) {
          double acc = 0.0;
          for (std::ptrdiff_t dr = -rad; dr <= rad; ++dr) {
            const std::size_t rr = mirror_index(static_cast<std::ptrdiff_t>(r) + dr, spec.height);
            for (std::ptrdiff_t dc = -rad; dc <= rad; ++dc) {
              const std::size_t cc = mirror_index(static_cast<std::ptrdiff_t>(c) + dc, spec.width);
              acc += src[rr * spec.width + cc];
            }
          }
          dst[r * spec.width + c] = acc / (gain * gain) * gain;
        }
      }
    }
    field.swap(smoothed);
  }
  for (auto& v : field) v *= spec.noise;
  return field;
}

}  // namespace

Scene synth_scene(const SceneSpec& spec, Rng& rng) {
  spec.validate();
  const std::size_t W = spec.width, H = spec.height, B = spec.bands, n = W * H;

  // Class index per pixel; regions are painted in declaration order.
  std::vector<const LandClass*> cover(n, &spec.find_class(spec.background));
  std::vector<const Region*> owner(n, nullptr);
  for (const auto& region : spec.regions) {
    const LandClass& cls = spec.find_class(region.land_class);
    for (std::size_t r = 0; r < H; ++r) {
      for (std::size_t c = 0; c < W; ++c) {
        if (!region.contains(r, c)) continue;
        const std::size_t i = r * W + c;
        if (owner[i] && cover[i]->label != cls.label) {
          throw ValidationError("scene: regions '" + owner[i]->name + "' and '" + region.name +
                                "' overlap with conflicting labels");
        }
        owner[i] = &region;
        cover[i] = &cls;
      }
    }
  }

  Scene scene{Raster(W, H, B), Raster(W, H, B), Raster(W, H, 1, 0.0, DType::u8)};
  const std::vector<double> noise1 = noise_field(spec, rng);
  const std::vector<double> noise2 = noise_field(spec, rng);
  for (std::size_t i = 0; i < n; ++i) {
    scene.labels.data[i] = static_cast<double>(cover[i]->label);
    for (std::size_t b = 0; b < B; ++b) {
      const std::size_t k = b * n + i;
      scene.t1.data[k] = std::clamp(cover[i]->t1_mean[b] + noise1[k], 0.0, 1.0);
      scene.t2.data[k] = std::clamp(cover[i]->t2_mean[b] + noise2[k], 0.0, 1.0);
    }
  }
  return scene;
}

}  // namespace recnn
