#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "geocnn/image_io.hpp"

namespace geocnn {

// Bijective label name <-> id map; ids follow lexicographic name order.
class LabelEncoder {
 public:
  LabelEncoder() = default;
  explicit LabelEncoder(std::vector<std::string> names);

  std::size_t encode(const std::string& name) const;
  const std::string& decode(std::size_t id) const;
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  friend bool operator==(const LabelEncoder&, const LabelEncoder&) = default;

 private:
  std::vector<std::string> names_;
};

struct Origin {
  bool augmented = false;
  std::size_t source = 0;  // index of the source item in the pre-augmentation dataset
  std::string transform;
};

struct LabeledImage {
  Image pixels;  // H x W x 3 in [0, 1]
  std::size_t label = 0;
  Origin origin;
};

struct Dataset {
  std::vector<LabeledImage> items;
  LabelEncoder encoder;

  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
  std::vector<std::size_t> class_counts() const;
  std::vector<std::size_t> labels() const;
};

struct SplitSpec {
  double train = 0.6;
  double test = 0.3;
  double val = 0.1;

  void validate() const;
};

struct Splits {
  Dataset train;
  Dataset test;
  Dataset val;
};

// Loads <root>/<label>/<file>.{png,jpg,jpeg}. Items are ordered by label name,
// then file name. Throws DataError for an empty or single-class root, an
// empty class directory, or an undecodable file (naming it).
Dataset load_dataset(const std::filesystem::path& root);

// Writes a dataset back to the directory-per-label layout as PNGs.
void save_dataset(const Dataset& ds, const std::filesystem::path& root);

Dataset resize_all(const Dataset& ds, std::size_t out_h, std::size_t out_w);

// Tops every class up to exactly `target_per_class` with randomly transformed
// copies of that class's own items; originals are kept first, unchanged.
// Item j of class c draws from an independent stream keyed by (seed, c, j).
Dataset augment_to_count(const Dataset& ds, std::size_t target_per_class, std::uint64_t seed);

// Per class: seeded shuffle, then cuts at round(n * train) and
// round(n * (train + test)).
Splits stratified_split(const Dataset& ds, const SplitSpec& spec, std::uint64_t seed);

// Index batches for one epoch. With shuffle the permutation is keyed by
// (seed, epoch); the final partial batch is kept.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size,
                                                   bool shuffle, std::uint64_t seed,
                                                   std::size_t epoch);

// Four procedural texture classes labelled desert, farmland, meadow, terrace:
// smooth gradient + noise, periodic stripes, isotropic mid-frequency noise,
// concentric step bands.
Dataset synth_dataset(std::size_t n_per_class, std::size_t side, std::uint64_t seed);

}  // namespace geocnn
