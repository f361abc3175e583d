#include "recnn/samples.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "recnn/error.hpp"

namespace recnn {

namespace {

bool is_labeled(const Raster& labels, double v, std::size_t classes) {
  if (labels.nodata && v == *labels.nodata) return false;
  return v >= 0.0 && v == std::floor(v) && v < static_cast<double>(classes);
}

}  // namespace

SampleSplit build_samples(const Raster& labels, std::span<const std::size_t> counts, Rng& rng) {
  if (labels.bands != 1) throw ValidationError("label raster must have a single band");
  const std::size_t classes = counts.size();
  std::vector<std::vector<std::size_t>> by_class(classes);
  for (std::size_t i = 0; i < labels.pixels(); ++i) {
    const double v = labels.data[i];
    if (is_labeled(labels, v, classes)) by_class[static_cast<std::size_t>(v)].push_back(i);
  }

  SampleSplit split;
  split.train.split = Split::train;
  split.test.split = Split::test;
  std::vector<char> taken(labels.pixels(), 0);
  for (std::size_t c = 0; c < classes; ++c) {
    auto& pool = by_class[c];
    if (counts[c] > pool.size()) {
      throw ValidationError("class " + std::to_string(c) + ": requested " +
                            std::to_string(counts[c]) + " training pixels but only " +
                            std::to_string(pool.size()) + " are labeled");
    }
    // Partial Fisher-Yates: the first counts[c] slots become the draw.
    for (std::size_t k = 0; k < counts[c]; ++k) {
      const std::size_t j = k + rng.below(pool.size() - k);
      std::swap(pool[k], pool[j]);
      taken[pool[k]] = 1;
      split.train.samples.push_back({pool[k] / labels.width, pool[k] % labels.width, c});
    }
  }
  for (std::size_t i = 0; i < labels.pixels(); ++i) {
    const double v = labels.data[i];
    if (!taken[i] && is_labeled(labels, v, classes)) {
      split.test.samples.push_back({i / labels.width, i % labels.width, static_cast<std::size_t>(v)});
    }
  }
  return split;
}

Raster binarize_labels(const Raster& labels) {
  Raster out = labels;
  out.dtype = DType::u8;
  for (auto& v : out.data) {
    if (labels.nodata && v == *labels.nodata) continue;
    v = v != 0.0 ? 1.0 : 0.0;
  }
  return out;
}

std::vector<PatchPair> make_patch_pairs(const Raster& t1, const Raster& t2, const SampleSet& set,
                                        std::size_t patch) {
  if (!t1.same_geometry(t2)) {
    throw ValidationError("T1 and T2 rasters differ in size or band count");
  }
  std::vector<PatchPair> pairs;
  pairs.reserve(set.size());
  for (const auto& s : set.samples) {
    pairs.push_back({extract_patch(t1, s.row, s.col, patch), extract_patch(t2, s.row, s.col, patch),
                     s.label, s.row, s.col});
  }
  return pairs;
}

void write_samples_csv(const SampleSet& set, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write samples to " + path.string());
  out << "row,col,label\n";
  for (const auto& s : set.samples) out << s.row << ',' << s.col << ',' << s.label << '\n';
  if (!out) throw ValidationError("failed writing " + path.string());
}

SampleSet read_samples_csv(const std::filesystem::path& path, Split split) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open samples file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "row,col,label") {
    throw FormatError(path.string() + ": expected header 'row,col,label'");
  }
  SampleSet set;
  set.split = split;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::size_t values[3];
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (int k = 0; k < 3; ++k) {
      auto [next, ec] = std::from_chars(p, end, values[k]);
      const bool sep_ok = k < 2 ? (next != end && *next == ',') : next == end;
      if (ec != std::errc() || !sep_ok) {
        throw FormatError(path.string() + ":" + std::to_string(lineno) + ": malformed line '" +
                          line + "'");
      }
      p = next + 1;
    }
    set.samples.push_back({values[0], values[1], values[2]});
  }
  return set;
}

}  // namespace recnn
