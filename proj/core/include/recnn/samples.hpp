#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "recnn/raster.hpp"
#include "recnn/rng.hpp"

namespace recnn {

enum class Split { train, test };

struct Sample {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t label = 0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct SampleSet {
  Split split = Split::train;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
};

struct SampleSplit {
  SampleSet train;
  SampleSet test;
};

/// Two co-located patches and their label.
struct PatchPair {
  Tensor x_t1;  // [bands, P, P]
  Tensor x_t2;
  std::size_t label = 0;
  std::size_t row = 0;
  std::size_t col = 0;
};

/// Extracts both patches for every sample; rasters must share geometry.
std::vector<PatchPair> make_patch_pairs(const Raster& t1, const Raster& t2, const SampleSet& set,
                                        std::size_t patch);

/// For every class c < counts.size(), draws counts[c] pixels uniformly
/// without replacement into the training set; every other pixel of those
/// classes goes to the test set in raster order. Pixels whose label is
/// >= counts.size() (or equals the raster's nodata) are unlabeled and skipped.
SampleSplit build_samples(const Raster& labels, std::span<const std::size_t> counts, Rng& rng);

/// Maps every non-zero label to 1 (changed); nodata is preserved.
Raster binarize_labels(const Raster& labels);

/// CSV with header `row,col,label`, LF line endings.
void write_samples_csv(const SampleSet& set, const std::filesystem::path& path);
SampleSet read_samples_csv(const std::filesystem::path& path, Split split = Split::test);

}  // namespace recnn
