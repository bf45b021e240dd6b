#include "geocnn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <optional>

#include "geocnn/rng.hpp"
#include "geocnn/transforms.hpp"

namespace geocnn {

namespace fs = std::filesystem;

// ---- LabelEncoder ----------------------------------------------------------

LabelEncoder::LabelEncoder(std::vector<std::string> names) : names_(std::move(names)) {
  std::sort(names_.begin(), names_.end());
  if (std::adjacent_find(names_.begin(), names_.end()) != names_.end()) {
    throw DataError("duplicate label names");
  }
}

std::size_t LabelEncoder::encode(const std::string& name) const {
  auto it = std::lower_bound(names_.begin(), names_.end(), name);
  if (it == names_.end() || *it != name) throw DataError("unknown label '" + name + "'");
  return static_cast<std::size_t>(it - names_.begin());
}

const std::string& LabelEncoder::decode(std::size_t id) const {
  if (id >= names_.size()) {
    throw DataError("label id " + std::to_string(id) + " out of range for " +
                    std::to_string(names_.size()) + " classes");
  }
  return names_[id];
}

// ---- Dataset ---------------------------------------------------------------

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(encoder.size(), 0);
  for (const auto& item : items) counts.at(item.label)++;
  return counts;
}

std::vector<std::size_t> Dataset::labels() const {
  std::vector<std::size_t> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back(item.label);
  return out;
}

void SplitSpec::validate() const {
  if (!(train > 0.0 && test > 0.0 && val > 0.0)) {
    throw DataError("split fractions must all be positive");
  }
  if (std::abs(train + test + val - 1.0) > 1e-9) {
    throw DataError("split fractions must sum to 1");
  }
}

// Runs fn(i) for i in [0, n) in parallel; the first failure (by index) is rethrown.
template <typename Fn>
static void parallel_for_each(std::size_t n, Fn fn) {
  std::vector<std::exception_ptr> errors(n);
  const std::int64_t count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

Dataset load_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) throw DataError("dataset root " + root.string() + " is not a directory");
  std::vector<std::string> classes;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) classes.push_back(entry.path().filename().string());
  }
  if (classes.empty()) throw DataError("dataset root " + root.string() + " has no label directories");
  if (classes.size() < 2) {
    throw DataError("dataset root " + root.string() + " has only one class; need at least 2");
  }

  Dataset ds;
  ds.encoder = LabelEncoder(classes);
  std::vector<fs::path> files;
  std::vector<std::size_t> labels;
  for (std::size_t id = 0; id < ds.encoder.size(); ++id) {
    std::vector<fs::path> class_files;
    for (const auto& entry : fs::directory_iterator(root / ds.encoder.decode(id))) {
      if (entry.is_regular_file() && has_image_extension(entry.path())) {
        class_files.push_back(entry.path());
      }
    }
    if (class_files.empty()) {
      throw DataError("class directory " + (root / ds.encoder.decode(id)).string() +
                      " contains no PNG/JPEG files");
    }
    std::sort(class_files.begin(), class_files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
    for (auto& f : class_files) {
      files.push_back(std::move(f));
      labels.push_back(id);
    }
  }

  ds.items.resize(files.size());
  parallel_for_each(files.size(), [&](std::size_t i) {
    ds.items[i].pixels = read_image(files[i]);
    ds.items[i].label = labels[i];
    ds.items[i].origin.source = i;
  });
  return ds;
}

void save_dataset(const Dataset& ds, const fs::path& root) {
  std::vector<std::size_t> per_class(ds.encoder.size(), 0);
  for (const auto& name : ds.encoder.names()) fs::create_directories(root / name);
  for (const auto& item : ds.items) {
    char name[32];
    std::snprintf(name, sizeof name, "%05zu.png", per_class.at(item.label)++);
    write_png(root / ds.encoder.decode(item.label) / name, item.pixels);
  }
}

Dataset resize_all(const Dataset& ds, std::size_t out_h, std::size_t out_w) {
  Dataset out;
  out.encoder = ds.encoder;
  out.items.resize(ds.items.size());
  parallel_for_each(ds.items.size(), [&](std::size_t i) {
    out.items[i].pixels = resize_bilinear(ds.items[i].pixels, out_h, out_w);
    out.items[i].label = ds.items[i].label;
    out.items[i].origin = ds.items[i].origin;
  });
  return out;
}

Dataset augment_to_count(const Dataset& ds, std::size_t target_per_class, std::uint64_t seed) {
  const std::size_t k = ds.encoder.size();
  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t i = 0; i < ds.items.size(); ++i) members.at(ds.items[i].label).push_back(i);
  for (std::size_t c = 0; c < k; ++c) {
    if (members[c].empty()) {
      throw DataError("class '" + ds.encoder.decode(c) + "' is empty; cannot augment");
    }
    if (members[c].size() > target_per_class) {
      throw DataError("class '" + ds.encoder.decode(c) + "' already has " +
                      std::to_string(members[c].size()) + " items, above the target " +
                      std::to_string(target_per_class) + " (down-sampling is not supported)");
    }
  }

  struct Job {
    std::size_t label;
    std::size_t ordinal;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t j = members[c].size(); j < target_per_class; ++j) {
      jobs.push_back({c, j - members[c].size()});
    }
  }

  Dataset out;
  out.encoder = ds.encoder;
  out.items = ds.items;
  const std::size_t base = out.items.size();
  out.items.resize(base + jobs.size());
  parallel_for_each(jobs.size(), [&](std::size_t n) {
    const Job& job = jobs[n];
    Rng rng = Rng::derive(seed, {job.label, job.ordinal});
    const auto& pool = members[job.label];
    const std::size_t source = pool[rng.below(pool.size())];
    const Transform t = sample_transform(rng);
    LabeledImage& item = out.items[base + n];
    item.pixels = apply_transform(ds.items[source].pixels, t);
    item.label = job.label;
    // Chains back to the original when the source was itself augmented.
    const Origin& src = ds.items[source].origin;
    item.origin = {true, src.augmented ? src.source : source, t.describe()};
  });
  return out;
}

Splits stratified_split(const Dataset& ds, const SplitSpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::size_t k = ds.encoder.size();
  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t i = 0; i < ds.items.size(); ++i) members.at(ds.items[i].label).push_back(i);

  Splits out;
  out.train.encoder = out.test.encoder = out.val.encoder = ds.encoder;
  for (std::size_t c = 0; c < k; ++c) {
    const auto& idx = members[c];
    const std::size_t n = idx.size();
    if (n < 3) {
      throw DataError("class '" + ds.encoder.decode(c) + "' has " + std::to_string(n) +
                      " items; a three-way split needs at least 3");
    }
    Rng rng = Rng::derive(seed, {c});
    const auto perm = rng.permutation(n);
    const auto cut1 = static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.train));
    const auto cut2 = static_cast<std::size_t>(
        std::llround(static_cast<double>(n) * (spec.train + spec.test)));
    for (std::size_t r = 0; r < n; ++r) {
      Dataset& dst = r < cut1 ? out.train : (r < cut2 ? out.test : out.val);
      dst.items.push_back(ds.items[idx[perm[r]]]);
    }
  }
  if (out.train.empty() || out.test.empty() || out.val.empty()) {
    throw DataError("split leaves an empty partition");
  }
  return out;
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size,
                                                   bool shuffle, std::uint64_t seed,
                                                   std::size_t epoch) {
  if (n == 0) throw DataError("cannot batch an empty dataset");
  if (batch_size == 0) throw DataError("batch size must be >= 1");
  std::vector<std::size_t> order;
  if (shuffle) {
    Rng rng = Rng::derive(seed, {0x6261746368ULL, epoch});
    order = rng.permutation(n);
  } else {
    order.resize(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

}  // namespace geocnn
