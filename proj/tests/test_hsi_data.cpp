#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <queue>
#include <set>

#include "hsigan/errors.hpp"
#include "hsigan/hsi_data.hpp"
#include "hsigan/rng.hpp"
#include "test_util.hpp"

using namespace hsigan;

namespace {

void write_raw_file(const std::string& path, int h, int w, int b,
                    const std::vector<float>& values) {
  std::ofstream out(path, std::ios::binary);
  out << "HSI1 " << h << " " << w << " " << b << "\n";
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * 4));
}

HyperCube random_cube(Rng& rng, int h, int w, int b) {
  HyperCube cube;
  cube.height = h;
  cube.width = w;
  cube.bands = b;
  cube.values.resize(static_cast<std::size_t>(h) * w * b);
  for (auto& v : cube.values) v = static_cast<float>(rng.uniform(-100.0, 100.0));
  cube.recompute_band_range();
  return cube;
}

// Independent 4-connected flood fill for the scene-connectivity oracle.
int count_components(const LabelMap& lm, int cls) {
  std::set<std::int64_t> seen;
  int components = 0;
  for (std::int64_t start = 0; start < lm.pixel_count(); ++start) {
    if (lm.labels[static_cast<std::size_t>(start)] != cls || seen.count(start)) continue;
    ++components;
    std::queue<std::int64_t> frontier;
    frontier.push(start);
    seen.insert(start);
    while (!frontier.empty()) {
      const std::int64_t p = frontier.front();
      frontier.pop();
      const int r = static_cast<int>(p / lm.width), c = static_cast<int>(p % lm.width);
      const int dr[] = {-1, 1, 0, 0}, dc[] = {0, 0, -1, 1};
      for (int d = 0; d < 4; ++d) {
        const int nr = r + dr[d], nc = c + dc[d];
        if (nr < 0 || nr >= lm.height || nc < 0 || nc >= lm.width) continue;
        const std::int64_t np = static_cast<std::int64_t>(nr) * lm.width + nc;
        if (lm.labels[static_cast<std::size_t>(np)] == cls && !seen.count(np)) {
          seen.insert(np);
          frontier.push(np);
        }
      }
    }
  }
  return components;
}

}  // namespace

TEST_CASE("load_cube reads dimensions and values bit-exactly") {
  testutil::TempDir tmp("load");
  std::vector<float> vals(12);
  for (int i = 0; i < 12; ++i) vals[static_cast<std::size_t>(i)] = static_cast<float>(i);
  write_raw_file(tmp.file("c.hsi"), 2, 2, 3, vals);

  const HyperCube cube = load_cube(tmp.file("c.hsi"));
  CHECK(cube.height == 2);
  CHECK(cube.width == 2);
  CHECK(cube.bands == 3);
  CHECK(cube.at(0, 0, 0) == 0.0f);
  CHECK(cube.at(1, 1, 2) == 11.0f);
}

TEST_CASE("load_cube rejects malformed headers and short payloads") {
  testutil::TempDir tmp("badload");
  {
    std::ofstream out(tmp.file("bad_header.hsi"), std::ios::binary);
    out << "HSIX 2 2 3\n";
  }
  CHECK_THROWS_AS(load_cube(tmp.file("bad_header.hsi")), DataError);

  {
    std::ofstream out(tmp.file("negative.hsi"), std::ios::binary);
    out << "HSI1 -1 2 3\n";
  }
  CHECK_THROWS_AS(load_cube(tmp.file("negative.hsi")), DataError);

  // Header says 2x2x3 but only 5 floats follow.
  std::vector<float> vals(5, 1.0f);
  write_raw_file(tmp.file("short.hsi"), 2, 2, 3, vals);
  CHECK_THROWS_AS(load_cube(tmp.file("short.hsi")), DataError);

  CHECK_THROWS_AS(load_cube(tmp.file("does_not_exist.hsi")), DataError);
}

TEST_CASE("cube files round-trip bit-exactly") {
  testutil::TempDir tmp("roundtrip");
  Rng rng(7);
  for (int trial = 0; trial < 8; ++trial) {
    const int h = 1 + static_cast<int>(rng.uniform_index(5));
    const int w = 1 + static_cast<int>(rng.uniform_index(5));
    const int b = 1 + static_cast<int>(rng.uniform_index(6));
    const HyperCube cube = random_cube(rng, h, w, b);

    const std::string f1 = tmp.file("a.hsi"), f2 = tmp.file("b.hsi");
    write_cube(cube, f1);
    const HyperCube loaded = load_cube(f1);
    REQUIRE(loaded.values.size() == cube.values.size());
    CHECK(std::memcmp(loaded.values.data(), cube.values.data(), cube.values.size() * 4) == 0);

    write_cube(loaded, f2);
    CHECK(testutil::slurp(f1) == testutil::slurp(f2));
  }
}

TEST_CASE("normalize per-band minmax maps endpoints to -1 and 1") {
  HyperCube cube;
  cube.height = 1;
  cube.width = 2;
  cube.bands = 1;
  cube.values = {0.0f, 10.0f};
  const HyperCube result = normalize(cube, NormalizeMode::PerBandMinMax);
  CHECK(result.values[0] == doctest::Approx(-1.0));
  CHECK(result.values[1] == doctest::Approx(1.0));
}

TEST_CASE("normalize zscore maps constant bands to zero") {
  HyperCube cube;
  cube.height = 1;
  cube.width = 3;
  cube.bands = 1;
  cube.values = {5.0f, 5.0f, 5.0f};
  const HyperCube result = normalize(cube, NormalizeMode::PerBandZScore);
  for (float v : result.values) CHECK(v == 0.0f);
  // minmax also collapses a constant band to 0 rather than dividing by zero
  const HyperCube mm = normalize(cube, NormalizeMode::PerBandMinMax);
  for (float v : mm.values) CHECK(v == 0.0f);
}

TEST_CASE("normalize zscore: independently recomputed moments are 0/1") {
  Rng rng(123);
  const HyperCube cube = random_cube(rng, 13, 11, 5);
  const HyperCube result = normalize(cube, NormalizeMode::PerBandZScore);

  const std::int64_t n = cube.pixel_count();
  for (int b = 0; b < cube.bands; ++b) {
    double mean = 0.0, var = 0.0;
    for (std::int64_t p = 0; p < n; ++p)
      mean += result.values[static_cast<std::size_t>(p * cube.bands + b)];
    mean /= static_cast<double>(n);
    for (std::int64_t p = 0; p < n; ++p) {
      const double d = result.values[static_cast<std::size_t>(p * cube.bands + b)] - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    CHECK(std::abs(mean) <= 1e-9);
    CHECK(std::abs(var - 1.0) <= 1e-6);
  }
}

TEST_CASE("extract_patch size 1 is the pixel's spectral vector") {
  Rng rng(9);
  const HyperCube cube = random_cube(rng, 4, 5, 3);
  const Patch p = extract_patch(cube, 2, 3, 1);
  REQUIRE(p.data.shape() == std::vector<int>{1, 1, 3});
  for (int b = 0; b < 3; ++b) CHECK(p.data[b] == doctest::Approx(cube.at(2, 3, b)));
}

TEST_CASE("extract_patch mirrors at the corner of a 2x2 cube") {
  // Values a=(0,0) b=(0,1) c=(1,0) d=(1,1). Reflection without border
  // repetition maps index -1 -> 1 and index 2 -> 0, so a size-3 patch at
  // (0,0) reads rows (1,0,1) x cols (1,0,1):
  //   d c d
  //   b a b
  //   d c d
  HyperCube cube;
  cube.height = 2;
  cube.width = 2;
  cube.bands = 1;
  cube.values = {1.0f, 2.0f, 3.0f, 4.0f};  // a b c d
  const Patch p = extract_patch(cube, 0, 0, 3);
  const std::vector<double> expected = {4, 3, 4, 2, 1, 2, 4, 3, 4};
  REQUIRE(p.data.numel() == 9);
  for (int i = 0; i < 9; ++i) CHECK(p.data[i] == doctest::Approx(expected[static_cast<std::size_t>(i)]));
}

TEST_CASE("extract_patch interior patch is an exact sub-array") {
  Rng rng(11);
  const HyperCube cube = random_cube(rng, 6, 6, 2);
  const Patch p = extract_patch(cube, 3, 3, 3);
  for (int dr = -1; dr <= 1; ++dr)
    for (int dc = -1; dc <= 1; ++dc)
      for (int b = 0; b < 2; ++b)
        CHECK(p.data.at3(dr + 1, dc + 1, b) == doctest::Approx(cube.at(3 + dr, 3 + dc, b)));
}

TEST_CASE("extract_patch validates its arguments") {
  Rng rng(13);
  const HyperCube cube = random_cube(rng, 4, 4, 2);
  CHECK_THROWS_AS(extract_patch(cube, 0, 0, 2), ParamError);
  CHECK_THROWS_AS(extract_patch(cube, 4, 0, 3), ParamError);
}

TEST_CASE("extract_patch yields finite correct-shape patches at every center") {
  Rng rng(17);
  const HyperCube cube = random_cube(rng, 3, 4, 2);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      const Patch p = extract_patch(cube, r, c, 9);  // larger than the cube
      CHECK(p.data.shape() == std::vector<int>{9, 9, 2});
      CHECK(p.data.all_finite());
    }
  }
}

TEST_CASE("make_split takes n per class and sends the rest to test") {
  LabelMap lm;
  lm.height = 10;
  lm.width = 15;
  lm.num_classes = 3;
  lm.labels.assign(150, 0);
  // 3 classes x 50 labeled pixels
  for (int i = 0; i < 150; ++i) lm.labels[static_cast<std::size_t>(i)] = i / 50 + 1;

  const DatasetSplit split = make_split(lm, 10, 42);
  CHECK(split.train.size() == 30);
  CHECK(split.test.size() == 120);
  CHECK(split.unlabeled.empty());

  // Disjointness + coverage.
  std::set<std::int64_t> seen;
  for (const auto& [idx, label] : split.train) {
    CHECK(lm.labels[static_cast<std::size_t>(idx)] == label);
    CHECK(seen.insert(idx).second);
  }
  for (const auto& [idx, label] : split.test) {
    CHECK(lm.labels[static_cast<std::size_t>(idx)] == label);
    CHECK(seen.insert(idx).second);
  }
  CHECK(seen.size() == 150);
}

TEST_CASE("make_split exhausts a class when n covers it") {
  LabelMap lm;
  lm.height = 1;
  lm.width = 8;
  lm.num_classes = 2;
  lm.labels = {1, 1, 1, 1, 2, 2, 2, 2};
  const DatasetSplit split = make_split(lm, 4, 1);
  CHECK(split.train.size() == 8);
  CHECK(split.test.empty());
}

TEST_CASE("make_split halves undersized classes instead of failing") {
  LabelMap lm;
  lm.height = 1;
  lm.width = 10;
  lm.num_classes = 2;
  lm.labels = {1, 1, 1, 1, 1, 1, 1, 2, 2, 2};  // class 2 has 3 < 10 pixels
  const DatasetSplit split = make_split(lm, 10, 5);
  int train2 = 0, test2 = 0;
  for (const auto& [idx, label] : split.train) train2 += label == 2;
  for (const auto& [idx, label] : split.test) test2 += label == 2;
  CHECK(train2 == 2);  // ceil(3/2)
  CHECK(test2 == 1);
}

TEST_CASE("make_split warns about empty classes and is deterministic") {
  LabelMap lm;
  lm.height = 2;
  lm.width = 5;
  lm.num_classes = 3;  // class 3 never appears
  lm.labels = {1, 1, 1, 2, 2, 2, 0, 0, 0, 0};
  const DatasetSplit a = make_split(lm, 2, 99);
  const DatasetSplit b = make_split(lm, 2, 99);
  REQUIRE(a.warnings.size() == 1);
  CHECK(a.warnings[0].find("class 3") != std::string::npos);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  CHECK(a.unlabeled == b.unlabeled);
  CHECK(a.unlabeled.size() == 4);

  const DatasetSplit c = make_split(lm, 2, 100);
  CHECK(a.train != c.train);  // different seed reshuffles
}

TEST_CASE("synth_scene: noiseless classes have identical spectra") {
  SynthSpec spec;
  spec.height = 6;
  spec.width = 6;
  spec.bands = 8;
  spec.classes = 3;
  spec.noise_sigma = 0.0;
  spec.seed = 5;
  const auto [cube, labels] = synth_scene(spec);

  for (int cls = 1; cls <= 3; ++cls) {
    std::vector<float> reference;
    for (std::int64_t p = 0; p < labels.pixel_count(); ++p) {
      if (labels.labels[static_cast<std::size_t>(p)] != cls) continue;
      std::vector<float> spectrum(cube.pixel(p), cube.pixel(p) + cube.bands);
      if (reference.empty()) {
        reference = spectrum;
      } else {
        CHECK(spectrum == reference);
      }
    }
  }
}

TEST_CASE("synth_scene K=2 on 4x4 gives two nonempty connected regions") {
  SynthSpec spec;
  spec.height = 4;
  spec.width = 4;
  spec.bands = 4;
  spec.classes = 2;
  spec.noise_sigma = 0.0;
  spec.seed = 3;
  const auto [cube, labels] = synth_scene(spec);

  int count1 = 0, count2 = 0;
  for (int v : labels.labels) {
    CHECK(v >= 1);
    CHECK(v <= 2);
    count1 += v == 1;
    count2 += v == 2;
  }
  CHECK(count1 > 0);
  CHECK(count2 > 0);
  CHECK(count_components(labels, 1) == 1);
  CHECK(count_components(labels, 2) == 1);
}

TEST_CASE("synth_scene is deterministic per seed") {
  SynthSpec spec;
  spec.height = 8;
  spec.width = 8;
  spec.bands = 8;
  spec.classes = 4;
  spec.noise_sigma = 0.1;
  spec.seed = 21;
  const auto [cube1, labels1] = synth_scene(spec);
  const auto [cube2, labels2] = synth_scene(spec);
  CHECK(cube1.values == cube2.values);
  CHECK(labels1.labels == labels2.labels);
}

TEST_CASE("label PGM and split CSV round-trip") {
  testutil::TempDir tmp("io");
  LabelMap lm;
  lm.height = 3;
  lm.width = 4;
  lm.num_classes = 5;
  lm.labels = {0, 1, 2, 3, 4, 5, 0, 1, 2, 3, 4, 5};
  write_labels_pgm(lm, tmp.file("l.pgm"));
  const LabelMap loaded = load_labels_pgm(tmp.file("l.pgm"));
  CHECK(loaded.height == 3);
  CHECK(loaded.width == 4);
  CHECK(loaded.num_classes == 5);
  CHECK(loaded.labels == lm.labels);

  const DatasetSplit split = make_split(lm, 1, 7);
  write_split_csv(split, tmp.file("s.csv"));
  const DatasetSplit back = load_split_csv(tmp.file("s.csv"));
  CHECK(back.train == split.train);
  CHECK(back.test == split.test);
  CHECK(back.unlabeled == split.unlabeled);
}
