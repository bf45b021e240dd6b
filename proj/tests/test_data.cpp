#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "doctest.h"
#include "geocnn/dataset.hpp"
#include "geocnn/transforms.hpp"
#include "temp_dir.hpp"

using namespace geocnn;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = GEOCNN_TEST_DATA;

Image random_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  Rng rng(seed);
  Image img({h, w, 3});
  for (auto& v : img.data()) v = static_cast<float>(rng.uniform());
  return img;
}

Dataset tiny_dataset(const std::vector<std::size_t>& per_class, std::size_t side = 6) {
  Dataset ds;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < per_class.size(); ++c) names.push_back("class" + std::to_string(c));
  ds.encoder = LabelEncoder(names);
  std::uint64_t seed = 0;
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    for (std::size_t i = 0; i < per_class[c]; ++i) {
      LabeledImage item;
      item.pixels = random_image(side, side, seed);
      item.label = c;
      item.origin.source = seed++;
      ds.items.push_back(item);
    }
  }
  return ds;
}

// Mean squared difference between horizontally adjacent pixels (fine detail).
double high_frequency_energy(const Image& img) {
  double e = 0.0;
  std::size_t n = 0;
  for (std::size_t y = 0; y < img.dim(0); ++y)
    for (std::size_t x = 1; x < img.dim(1); ++x)
      for (std::size_t c = 0; c < 3; ++c, ++n) {
        const double d = img.at(y, x, c) - img.at(y, x - 1, c);
        e += d * d;
      }
  return e / static_cast<double>(n);
}

// Variance of 8x8 block means (coarse structure).
double low_frequency_energy(const Image& img) {
  std::vector<double> means;
  for (std::size_t by = 0; by + 8 <= img.dim(0); by += 8)
    for (std::size_t bx = 0; bx + 8 <= img.dim(1); bx += 8) {
      double s = 0.0;
      for (std::size_t y = by; y < by + 8; ++y)
        for (std::size_t x = bx; x < bx + 8; ++x)
          for (std::size_t c = 0; c < 3; ++c) s += img.at(y, x, c);
      means.push_back(s / 192.0);
    }
  double mu = 0.0;
  for (double m : means) mu += m;
  mu /= static_cast<double>(means.size());
  double var = 0.0;
  for (double m : means) var += (m - mu) * (m - mu);
  return var / static_cast<double>(means.size());
}

}  // namespace

TEST_CASE("label encoder is a sorted bijection") {
  LabelEncoder enc({"terrace", "desert", "meadow", "farmland"});
  CHECK(enc.names() == std::vector<std::string>{"desert", "farmland", "meadow", "terrace"});
  for (std::size_t i = 0; i < enc.size(); ++i) CHECK(enc.encode(enc.decode(i)) == i);
  for (const auto& n : enc.names()) CHECK(enc.decode(enc.encode(n)) == n);
  CHECK_THROWS_AS(enc.encode("forest"), DataError);
  CHECK_THROWS_AS(enc.decode(4), DataError);
  CHECK_THROWS_AS(LabelEncoder({"a", "a"}), DataError);
}

TEST_CASE("image io: PNG round trip, grayscale broadcast, JPEG decode") {
  TempDir tmp;
  Image img = random_image(5, 7, 1);
  write_png(tmp.path() / "x.png", img);
  const Image back = read_image(tmp.path() / "x.png");
  REQUIRE(back.shape() == img.shape());
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < img.size(); ++i) {
    mismatches += back[i] != std::round(img[i] * 255.0f) / 255.0f;
  }
  CHECK(mismatches == 0);

  const Image gray = read_image(kFixtures / "gray.png");
  CHECK(gray.shape() == Shape{4, 5, 3});
  CHECK(gray.at(3, 4, 2) == doctest::Approx(128.0 / 255.0));

  const Image jpg = read_image(kFixtures / "solid.jpg");
  CHECK(jpg.shape() == Shape{6, 8, 3});
  CHECK(jpg.at(0, 0, 0) == doctest::Approx(200.0 / 255.0));
  CHECK(jpg.at(5, 7, 1) == doctest::Approx(100.0 / 255.0));
  CHECK(jpg.at(2, 3, 2) == doctest::Approx(50.0 / 255.0));
}

TEST_CASE("image io errors name the file") {
  for (const char* name : {"broken.png", "missing.png"}) {
    try {
      read_image(kFixtures / name);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find(name) != std::string::npos);
    }
  }
  CHECK(has_image_extension("a/b.JPG") == has_image_extension("a/b.jpg"));
  CHECK_FALSE(has_image_extension("notes.txt"));
}

TEST_CASE("resize: identity, constant images, 2x2 to 1x1 average") {
  const Image img = random_image(9, 11, 2);
  CHECK(resize_bilinear(img, 9, 11) == img);
  Image flat({10, 10, 3}, 0.25f);
  const Image small = resize_bilinear(flat, 3, 7);
  for (float v : small.data()) CHECK(v == 0.25f);
  Image quad({2, 2, 3}, std::vector<float>{0, 0, 0, 1, 1, 1, 0, 0, 0, 1, 1, 1});
  CHECK(resize_bilinear(quad, 1, 1).at(0, 0, 0) == doctest::Approx(0.5));
  const Image up = resize_bilinear(img, 224, 224);
  CHECK(up.shape() == Shape{224, 224, 3});
}

TEST_CASE("transforms: flips are involutions, zero rotation and shear are identities") {
  const Image img = random_image(6, 5, 3);
  using K = Transform::Kind;
  const Transform h{K::hflip, 0}, v{K::vflip, 0};
  CHECK(apply_transform(apply_transform(img, h), h) == img);
  CHECK(apply_transform(apply_transform(img, v), v) == img);
  CHECK(apply_transform(img, h).at(0, 0, 1) == img.at(0, 4, 1));
  CHECK(apply_transform(img, Transform{K::rotate, 0.0}) == img);
  CHECK(apply_transform(img, Transform{K::shear, 0.0}) == img);
  // 90 degrees on a square image is an exact pixel permutation.
  const Image sq = random_image(5, 5, 4);
  const Image r = apply_transform(sq, Transform{K::rotate, 90.0});
  CHECK(r.at(2, 2, 0) == sq.at(2, 2, 0));
  CHECK(r.at(0, 0, 0) == doctest::Approx(sq.at(4, 0, 0)).epsilon(1e-5));
}

TEST_CASE("sampled transforms stay within their ranges") {
  Rng rng(5);
  std::set<int> kinds;
  for (int i = 0; i < 400; ++i) {
    const Transform t = sample_transform(rng);
    kinds.insert(static_cast<int>(t.kind));
    if (t.kind == Transform::Kind::rotate) CHECK(std::abs(t.amount) <= kMaxRotationDegrees);
    if (t.kind == Transform::Kind::shear) CHECK(std::abs(t.amount) <= kMaxShear);
  }
  CHECK(kinds.size() == 4);
}

TEST_CASE("augment_to_count keeps originals, fills classes, traces origins") {
  const Dataset ds = tiny_dataset({3, 5});
  const Dataset aug = augment_to_count(ds, 8, 11);
  CHECK(aug.class_counts() == std::vector<std::size_t>{8, 8});
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(aug.items[i].pixels == ds.items[i].pixels);
    CHECK_FALSE(aug.items[i].origin.augmented);
  }
  for (std::size_t i = ds.size(); i < aug.size(); ++i) {
    const auto& o = aug.items[i].origin;
    CHECK(o.augmented);
    REQUIRE(o.source < ds.size());
    CHECK(ds.items[o.source].label == aug.items[i].label);
    CHECK_FALSE(o.transform.empty());
  }
  const Dataset again = augment_to_count(ds, 8, 11);
  for (std::size_t i = 0; i < aug.size(); ++i) CHECK(again.items[i].pixels == aug.items[i].pixels);
  CHECK_THROWS_AS(augment_to_count(ds, 4, 1), DataError);
  CHECK_THROWS_AS(augment_to_count(tiny_dataset({3, 0}), 4, 1), DataError);
}

TEST_CASE("stratified split: counts, partition and determinism") {
  const Dataset ds = tiny_dataset({10, 7, 3}, 2);
  const Splits s = stratified_split(ds, {}, 9);
  // round(n * 0.6), round(n * 0.9) per class
  CHECK(s.train.class_counts() == std::vector<std::size_t>{6, 4, 2});
  CHECK(s.test.class_counts() == std::vector<std::size_t>{3, 2, 1});
  CHECK(s.val.class_counts() == std::vector<std::size_t>{1, 1, 0});
  std::multiset<std::size_t> seen;
  for (const Dataset* part : {&s.train, &s.test, &s.val})
    for (const auto& item : part->items) seen.insert(item.origin.source);
  CHECK(seen.size() == ds.size());
  CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == ds.size());

  const Splits t = stratified_split(ds, {}, 9);
  for (std::size_t i = 0; i < s.test.size(); ++i)
    CHECK(s.test.items[i].origin.source == t.test.items[i].origin.source);

  const Splits thirds = stratified_split(tiny_dataset({3, 3}, 2), {1.0 / 3, 1.0 / 3, 1.0 / 3}, 1);
  CHECK(thirds.train.class_counts() == std::vector<std::size_t>{1, 1});
  CHECK(thirds.val.class_counts() == std::vector<std::size_t>{1, 1});

  CHECK_THROWS_AS(stratified_split(tiny_dataset({2, 5}, 2), {}, 1), DataError);
  CHECK_THROWS_AS(stratified_split(ds, {0.5, 0.5, 0.5}, 1), DataError);
}

TEST_CASE("batches: ceiling division, identity order, per-epoch determinism") {
  const auto b = make_batches(14000, 64, true, 3, 1);
  CHECK(b.size() == 219);
  CHECK(b.back().size() == 48);
  const auto plain = make_batches(10, 4, false, 0, 0);
  CHECK(plain == std::vector<std::vector<std::size_t>>{{0, 1, 2, 3}, {4, 5, 6, 7}, {8, 9}});
  CHECK(make_batches(100, 7, true, 3, 2) == make_batches(100, 7, true, 3, 2));
  CHECK(make_batches(100, 7, true, 3, 2) != make_batches(100, 7, true, 3, 3));
  CHECK_THROWS_AS(make_batches(0, 4, false, 0, 0), DataError);
}

TEST_CASE("directory loading and saving") {
  TempDir tmp;
  const Dataset ds = synth_dataset(3, 8, 1);
  save_dataset(ds, tmp.path() / "corpus");
  const Dataset back = load_dataset(tmp.path() / "corpus");
  CHECK(back.encoder == ds.encoder);
  CHECK(back.class_counts() == ds.class_counts());
  CHECK(back.items[4].label == ds.items[4].label);

  CHECK_THROWS_AS(load_dataset(tmp.path() / "nope"), DataError);
  fs::create_directories(tmp.path() / "one" / "only");
  write_png(tmp.path() / "one" / "only" / "a.png", ds.items[0].pixels);
  CHECK_THROWS_AS(load_dataset(tmp.path() / "one"), DataError);
  fs::create_directories(tmp.path() / "one" / "empty");
  CHECK_THROWS_AS(load_dataset(tmp.path() / "one"), DataError);
  std::ofstream(tmp.path() / "one" / "empty" / "bad.png") << "not a png";
  try {
    load_dataset(tmp.path() / "one");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("bad.png") != std::string::npos);
  }
}

TEST_CASE("synthetic corpus: counts, range, determinism") {
  const Dataset ds = synth_dataset(10, 32, 5);
  CHECK(ds.size() == 40);
  CHECK(ds.encoder.names() == std::vector<std::string>{"desert", "farmland", "meadow", "terrace"});
  CHECK(ds.class_counts() == std::vector<std::size_t>{10, 10, 10, 10});
  float lo = 1.0f, hi = 0.0f;
  for (const auto& item : ds.items)
    for (float v : item.pixels.data()) lo = std::min(lo, v), hi = std::max(hi, v);
  CHECK(lo >= 0.0f);
  CHECK(hi <= 1.0f);
  const Dataset again = synth_dataset(10, 32, 5);
  for (std::size_t i = 0; i < ds.size(); ++i) CHECK(again.items[i].pixels == ds.items[i].pixels);
  CHECK_THROWS_AS(synth_dataset(1, 7, 0), DataError);
}

TEST_CASE("synthetic classes differ in frequency-energy statistics") {
  const std::size_t n = 60;
  const Dataset ds = synth_dataset(n, 32, 8);
  struct Stat {
    double mean = 0, var = 0;
  };
  std::vector<std::vector<Stat>> stats(4, std::vector<Stat>(2));
  for (std::size_t c = 0; c < 4; ++c) {
    for (int f = 0; f < 2; ++f) {
      std::vector<double> vals;
      for (std::size_t i = c * n; i < (c + 1) * n; ++i) {
        const Image& img = ds.items[i].pixels;
        vals.push_back(f == 0 ? high_frequency_energy(img) : low_frequency_energy(img));
      }
      for (double v : vals) stats[c][f].mean += v / n;
      for (double v : vals) stats[c][f].var += (v - stats[c][f].mean) * (v - stats[c][f].mean) / n;
    }
  }
  // Every pair of classes is separated on at least one statistic by more than
  // four standard errors of the difference of means.
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = a + 1; b < 4; ++b) {
      double best = 0.0;
      for (int f = 0; f < 2; ++f) {
        const double se = std::sqrt((stats[a][f].var + stats[b][f].var) / n);
        best = std::max(best, std::abs(stats[a][f].mean - stats[b][f].mean) / se);
      }
      CAPTURE(a);
      CAPTURE(b);
      CHECK(best > 4.0);
    }
}
