#include "edsgd/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>

#include <fmt/format.h>

#include "edsgd/error.hpp"
#include "edsgd/rng.hpp"

namespace edsgd {

Dataset Dataset::subset(std::span<const std::size_t> ids) const {
  Dataset out;
  out.dim = dim;
  out.classes = classes;
  out.split = split;
  out.features.reserve(ids.size() * dim);
  out.labels.reserve(ids.size());
  for (std::size_t id : ids) {
    auto row = sample(id);
    out.features.insert(out.features.end(), row.begin(), row.end());
    out.labels.push_back(labels[id]);
  }
  return out;
}

std::vector<std::size_t> Dataset::label_histogram() const {
  std::vector<std::size_t> h(classes, 0);
  for (int y : labels)
    ++h[static_cast<std::size_t>(y)];
  return h;
}

namespace {

// Symmetric Q diag(s) Q^T with a seeded random rotation Q and singular values
// log-spaced from 1 down to 1/condition.
std::vector<double> sensor_map(std::size_t dim, double condition, std::uint64_t seed) {
  Rng rng(seed, Stream::Dataset, {1});
  std::vector<double> q(dim * dim);
  for (std::size_t r = 0; r < dim; ++r) {
    double *v = q.data() + r * dim;
    double norm = 0.0;
    while (norm < 1e-6) {
      for (std::size_t d = 0; d < dim; ++d)
        v[d] = rng.normal();
      for (std::size_t prev = 0; prev < r; ++prev) {
        const double *u = q.data() + prev * dim;
        double dot = 0.0;
        for (std::size_t d = 0; d < dim; ++d)
          dot += u[d] * v[d];
        for (std::size_t d = 0; d < dim; ++d)
          v[d] -= dot * u[d];
      }
      norm = 0.0;
      for (std::size_t d = 0; d < dim; ++d)
        norm += v[d] * v[d];
      norm = std::sqrt(norm);
    }
    for (std::size_t d = 0; d < dim; ++d)
      v[d] /= norm;
  }
  std::vector<double> m(dim * dim, 0.0);
  for (std::size_t r = 0; r < dim; ++r) {
    const double scale =
        dim == 1 ? 1.0 : std::pow(condition, -static_cast<double>(r) / static_cast<double>(dim - 1));
    const double *u = q.data() + r * dim;
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j)
        m[i * dim + j] += scale * u[i] * u[j];
  }
  return m;
}

void apply_map(const std::vector<double> &m, Dataset &ds) {
  std::vector<double> row(ds.dim);
  for (std::size_t s = 0; s < ds.size(); ++s) {
    double *x = ds.features.data() + s * ds.dim;
    for (std::size_t i = 0; i < ds.dim; ++i) {
      row[i] = 0.0;
      for (std::size_t j = 0; j < ds.dim; ++j)
        row[i] += m[i * ds.dim + j] * x[j];
    }
    std::copy(row.begin(), row.end(), x);
  }
}

} // namespace

DatasetPair make_synthetic_dataset(std::size_t classes, std::size_t dim, std::size_t per_class,
                                   double spread, std::uint64_t seed, double condition) {
  if (classes < 2)
    throw DataError("synthetic dataset needs at least two classes");
  if (dim == 0 || per_class == 0)
    throw DataError("synthetic dataset needs dim >= 1 and per_class >= 1");
  if (!(spread >= 0.0))
    throw DataError("spread must be non-negative");
  if (!(condition >= 1.0))
    throw DataError("condition must be at least 1");

  Rng rng(seed, Stream::Dataset);
  std::vector<double> means(classes * dim, 0.0);
  for (std::size_t c = 0; c < classes; ++c) {
    double *mu = means.data() + c * dim;
    if (classes <= dim) {
      mu[c] = 1.0;
      continue;
    }
    double norm = 0.0;
    while (norm < 1e-12) {
      norm = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        mu[d] = rng.normal();
        norm += mu[d] * mu[d];
      }
      norm = std::sqrt(norm);
    }
    for (std::size_t d = 0; d < dim; ++d)
      mu[d] /= norm;
  }

  DatasetPair out;
  for (Dataset *ds : {&out.train, &out.test}) {
    ds->dim = dim;
    ds->classes = classes;
  }
  out.test.split = Split::Test;
  const std::size_t train_per_class = per_class * 4 / 5;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t s = 0; s < per_class; ++s) {
      Dataset &ds = s < train_per_class ? out.train : out.test;
      for (std::size_t d = 0; d < dim; ++d)
        ds.features.push_back(means[c * dim + d] + spread * rng.normal());
      ds.labels.push_back(static_cast<int>(c));
    }
  }
  if (condition > 1.0) {
    const auto m = sensor_map(dim, condition, seed);
    apply_map(m, out.train);
    apply_map(m, out.test);
  }
  return out;
}

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

std::vector<std::uint8_t> slurp(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

} // namespace

Dataset parse_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels,
                  std::size_t classes) {
  if (images.size() < 16)
    throw DataError("IDX images: truncated header");
  if (read_be32(images, 0) != kImagesMagic)
    throw DataError(fmt::format("IDX images: bad magic 0x{:08x}", read_be32(images, 0)));
  if (labels.size() < 8)
    throw DataError("IDX labels: truncated header");
  if (read_be32(labels, 0) != kLabelsMagic)
    throw DataError(fmt::format("IDX labels: bad magic 0x{:08x}", read_be32(labels, 0)));

  const std::size_t count = read_be32(images, 4);
  const std::size_t rows = read_be32(images, 8);
  const std::size_t cols = read_be32(images, 12);
  const std::size_t label_count = read_be32(labels, 4);
  if (count != label_count)
    throw DataError(fmt::format("IDX count mismatch: {} images, {} labels", count, label_count));
  const std::size_t dim = rows * cols;
  if (images.size() < 16 + count * dim)
    throw DataError("IDX images: truncated payload");
  if (labels.size() < 8 + count)
    throw DataError("IDX labels: truncated payload");

  Dataset ds;
  ds.dim = dim;
  ds.features.resize(count * dim);
  ds.labels.resize(count);
  for (std::size_t k = 0; k < count * dim; ++k)
    ds.features[k] = static_cast<double>(images[16 + k]) / 255.0;
  int max_label = -1;
  for (std::size_t i = 0; i < count; ++i) {
    ds.labels[i] = labels[8 + i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.classes = classes != 0 ? classes : static_cast<std::size_t>(max_label + 1);
  if (max_label >= static_cast<int>(ds.classes))
    throw DataError(fmt::format("IDX label {} exceeds class count {}", max_label, ds.classes));
  return ds;
}

Dataset load_idx_dataset(const std::string &images_path, const std::string &labels_path,
                         std::size_t classes) {
  const auto images = slurp(images_path);
  const auto labels = slurp(labels_path);
  return parse_idx(images, labels, classes);
}

std::vector<LocalData> partition_noniid(const Dataset &train, std::size_t nodes,
                                        std::size_t shards_per_node, std::uint64_t seed) {
  if (nodes == 0 || shards_per_node == 0)
    throw DataError("partition needs at least one node and one shard per node");
  const std::size_t shards = nodes * shards_per_node;
  if (train.size() < shards)
    throw DataError(fmt::format("{} samples cannot fill {} shards", train.size(), shards));

  std::vector<std::size_t> by_label(train.size());
  std::iota(by_label.begin(), by_label.end(), std::size_t{0});
  std::stable_sort(by_label.begin(), by_label.end(),
                   [&](std::size_t a, std::size_t b) { return train.labels[a] < train.labels[b]; });

  std::vector<std::size_t> shard_order(shards);
  std::iota(shard_order.begin(), shard_order.end(), std::size_t{0});
  Rng rng(seed, Stream::Shards);
  std::shuffle(shard_order.begin(), shard_order.end(), rng);

  auto boundary = [&](std::size_t s) { return s * train.size() / shards; };
  std::vector<LocalData> out(nodes);
  for (std::size_t node = 0; node < nodes; ++node) {
    auto &ids = out[node].sample_ids;
    for (std::size_t k = 0; k < shards_per_node; ++k) {
      const std::size_t s = shard_order[node * shards_per_node + k];
      ids.insert(ids.end(), by_label.begin() + static_cast<std::ptrdiff_t>(boundary(s)),
                 by_label.begin() + static_cast<std::ptrdiff_t>(boundary(s + 1)));
    }
    std::sort(ids.begin(), ids.end());
    out[node].data = train.subset(ids);
  }
  return out;
}

} // namespace edsgd
