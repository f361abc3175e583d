#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "recnn/error.hpp"
#include "recnn/raster.hpp"
#include "recnn/samples.hpp"
#include "recnn/synth.hpp"

using namespace recnn;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "recnn_unit_data";
  fs::create_directories(dir);
  return dir / name;
}

SceneSpec parse(const std::string& text) {
  std::istringstream in(text);
  return parse_scene_spec(in);
}

const char* kTiny = R"(
[scene]
width = 8
height = 6
bands = 2
noise = 0
background = grass

[class:grass]
label = 0
t1 = 0.2, 0.4

[class:grass_to_road]
label = 1
t1 = 0.2, 0.4
t2 = 0.7, 0.1

[region:road]
class = grass_to_road
row = 1
col = 2
height = 2
width = 3
)";

Raster label_grid(std::size_t w, std::size_t h, std::size_t changed) {
  Raster r(w, h, 1, 0.0, DType::u8);
  for (std::size_t i = 0; i < changed; ++i) r.data[i] = 1.0;
  return r;
}

}  // namespace

TEST_CASE("raster round trip") {
  Rng rng(1);
  SUBCASE("f32") {
    Raster r(5, 4, 3);
    for (auto& v : r.data) v = static_cast<float>(rng.next_double());
    r.nodata = -9999.0;
    write_raster(r, scratch("f32.hdr"));
    CHECK(read_raster(scratch("f32.hdr")) == r);
    CHECK(fs::file_size(scratch("f32.raw")) == 5 * 4 * 3 * 4);
  }
  SUBCASE("u8") {
    Raster r(3, 2, 1, 0.0, DType::u8);
    for (auto& v : r.data) v = static_cast<double>(rng.below(256));
    write_raster(r, scratch("u8.hdr"));
    CHECK(read_raster(scratch("u8.hdr")) == r);
  }
  SUBCASE("single value") {
    const Raster r(1, 1, 1, 0.25);
    write_raster(r, scratch("one.hdr"));
    CHECK(read_raster(scratch("one.hdr")) == r);
  }
  SUBCASE("u8 values must be bytes") {
    Raster r(1, 1, 1, 256.0, DType::u8);
    CHECK_THROWS_AS(write_raster(r, scratch("bad.hdr")), ValidationError);
    r.data[0] = 0.5;
    CHECK_THROWS_AS(write_raster(r, scratch("bad.hdr")), ValidationError);
  }
}

TEST_CASE("raster data size must match the header") {
  Raster r(20, 30, 4);
  write_raster(r, scratch("short.hdr"));
  {
    std::ofstream out(scratch("short.raw"), std::ios::binary | std::ios::trunc);
    const std::vector<char> bytes(2399 * 4, 0);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_THROWS_WITH_AS(read_raster(scratch("short.hdr")), doctest::Contains("size mismatch"), FormatError);
  CHECK_THROWS_AS(read_raster(scratch("missing.hdr")), FormatError);
}

TEST_CASE("normalize") {
  Raster r(3, 1, 2);
  r.data = {2.0, 4.0, 6.0, 5.0, 5.0, 5.0};
  const Raster n = normalize(r);
  CHECK(n.data == std::vector<double>{0.0, 0.5, 1.0, 0.0, 0.0, 0.0});
  CHECK(normalize(n) == n);

  Rng rng(2);
  Raster big(7, 5, 3);
  for (auto& v : big.data) v = rng.uniform(-10, 10);
  const Raster nb = normalize(big);
  for (std::size_t b = 0; b < 3; ++b) {
    const auto band = nb.band(b);
    CHECK(*std::min_element(band.begin(), band.end()) == 0.0);
    CHECK(*std::max_element(band.begin(), band.end()) == 1.0);
  }
  CHECK(normalize(nb) == nb);
}

TEST_CASE("mirror indexing") {
  CHECK(mirror_index(-1, 5) == 1);
  CHECK(mirror_index(-2, 5) == 2);
  CHECK(mirror_index(5, 5) == 3);
  CHECK(mirror_index(6, 5) == 2);
  CHECK(mirror_index(3, 5) == 3);
  CHECK(mirror_index(-1, 1) == 0);
  CHECK(mirror_index(1, 1) == 0);
}

TEST_CASE("patch extraction") {
  Raster r(2, 2, 1);
  r.data = {1, 2, 3, 4};
  const Tensor corner = extract_patch(r, 0, 0, 3);
  CHECK(corner.shape() == Shape{1, 3, 3});
  CHECK(std::vector<double>(corner.data().begin(), corner.data().end()) ==
        std::vector<double>{4, 3, 4, 2, 1, 2, 4, 3, 4});

  CHECK_THROWS_AS(extract_patch(r, 0, 0, 4), ValidationError);
  CHECK_THROWS_AS(extract_patch(r, 2, 0, 3), ValidationError);

  Raster g(6, 5, 2);
  for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] = static_cast<double>(i);
  const Tensor p = extract_patch(g, 2, 3, 3);
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) CHECK(p[(b * 3 + i) * 3 + j] == g.at(b, 1 + i, 2 + j));

  const Tensor one = extract_patch(Raster(1, 1, 1, 0.7), 0, 0, 5);
  for (double v : one.data()) CHECK(v == 0.7);
}

TEST_CASE("sample split") {
  const Raster labels = label_grid(40, 30, 700);  // 500 unchanged, 700 changed
  const std::size_t counts[] = {300, 300};
  Rng rng(3);
  const SampleSplit split = build_samples(labels, counts, rng);
  CHECK(split.train.size() == 600);
  CHECK(split.test.size() == 1200 - 600);

  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::size_t changed = 0;
  for (const auto& s : split.train.samples) {
    seen.insert({s.row, s.col});
    changed += s.label;
    CHECK(labels.at(0, s.row, s.col) == static_cast<double>(s.label));
  }
  CHECK(changed == 300);
  for (const auto& s : split.test.samples) CHECK(!seen.contains({s.row, s.col}));
  CHECK(seen.size() == 600);

  Rng again(3);
  CHECK(build_samples(labels, counts, again).train.samples == split.train.samples);

  const std::size_t too_many[] = {100, 701};
  Rng r2(3);
  CHECK_THROWS_WITH_AS(build_samples(labels, too_many, r2), doctest::Contains("requested"), ValidationError);
}

TEST_CASE("unlabeled pixels are skipped") {
  Raster labels = label_grid(4, 4, 4);
  labels.data[15] = 9;
  labels.nodata = 7;
  labels.data[14] = 7;
  const std::size_t counts[] = {1, 1};
  Rng rng(4);
  const SampleSplit split = build_samples(labels, counts, rng);
  CHECK(split.train.size() + split.test.size() == 14);
}

TEST_CASE("binarize labels") {
  Raster labels(4, 1, 1, 0.0, DType::u8);
  labels.data = {0, 1, 3, 255};
  labels.nodata = 255;
  CHECK(binarize_labels(labels).data == std::vector<double>{0, 1, 1, 255});
}

TEST_CASE("samples csv round trip") {
  SampleSet set;
  set.samples = {{0, 0, 1}, {12, 7, 0}, {3, 99, 2}};
  write_samples_csv(set, scratch("s.csv"));
  std::ifstream in(scratch("s.csv"));
  std::string header;
  std::getline(in, header);
  CHECK(header == "row,col,label");
  CHECK(read_samples_csv(scratch("s.csv")).samples == set.samples);

  std::ofstream(scratch("bad.csv")) << "row,col,label\n1,2\n";
  CHECK_THROWS_AS(read_samples_csv(scratch("bad.csv")), FormatError);
}

TEST_CASE("patch pairs") {
  Raster t1(3, 3, 2, 0.1), t2(3, 3, 2, 0.9);
  SampleSet set;
  set.samples = {{1, 1, 1}};
  const auto pairs = make_patch_pairs(t1, t2, set, 3);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].label == 1);
  CHECK(pairs[0].x_t2 == Tensor({2, 3, 3}, 0.9));
  CHECK_THROWS_AS(make_patch_pairs(t1, Raster(3, 2, 2), set, 3), ValidationError);
}

TEST_CASE("synthetic scenes") {
  SUBCASE("noise free scene reproduces class means") {
    const SceneSpec spec = parse(kTiny);
    Rng rng(5);
    const Scene s = synth_scene(spec, rng);
    CHECK(s.t1.at(0, 0, 0) == 0.2);
    CHECK(s.t2.at(1, 0, 0) == 0.4);
    CHECK(s.t2.at(0, 1, 2) == 0.7);
    CHECK(s.t2.at(1, 2, 4) == 0.1);
    CHECK(s.t1.at(0, 1, 2) == 0.2);
    CHECK(std::count(s.labels.data.begin(), s.labels.data.end(), 1.0) == 6);
  }
  SUBCASE("no regions means nothing changed") {
    std::string text = kTiny;
    text = text.substr(0, text.find("[region:road]"));
    Rng rng(6);
    const Scene s = synth_scene(parse(text), rng);
    for (double v : s.labels.data) CHECK(v == 0.0);
    CHECK(s.t1 == s.t2);
  }
  SUBCASE("standard scene") {
    const SceneSpec spec = read_scene_spec(fs::path(RECNN_CONFIG_DIR) / "standard_scene.ini");
    Rng a(7), b(7);
    const Scene s = synth_scene(spec, a);
    CHECK(std::count_if(s.labels.data.begin(), s.labels.data.end(), [](double v) { return v != 0.0; }) == 2000);
    for (double v : s.t1.data) REQUIRE((v >= 0.0 && v <= 1.0));
    CHECK(synth_scene(spec, b).t2 == s.t2);
  }
  SUBCASE("conflicting overlap") {
    std::string text = kTiny;
    text += "\n[class:grass_to_water]\nlabel = 2\nt1 = 0.2, 0.4\nt2 = 0.1, 0.1\n"
            "\n[region:pond]\nclass = grass_to_water\nrow = 2\ncol = 4\nheight = 2\nwidth = 2\n";
    Rng rng(8);
    CHECK_THROWS_WITH_AS(synth_scene(parse(text), rng), doctest::Contains("pond"), ValidationError);
  }
  SUBCASE("zero size") {
    std::string text = kTiny;
    text.replace(text.find("width = 8"), 9, "width = 0");
    CHECK_THROWS_AS(parse(text), ValidationError);
  }
  SUBCASE("wrong spectrum length") {
    std::string text = kTiny;
    text.replace(text.find("t1 = 0.2, 0.4"), 13, "t1 = 0.2");
    CHECK_THROWS_AS(parse(text), ValidationError);
  }
}
