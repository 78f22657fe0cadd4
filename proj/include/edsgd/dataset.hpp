#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace edsgd {

enum class Split { Train, Test };

/// Row-major feature matrix plus one integer label per sample.
struct Dataset {
  std::size_t dim = 0;
  std::size_t classes = 0;
  std::vector<double> features;
  std::vector<int> labels;
  Split split = Split::Train;

  std::size_t size() const { return labels.size(); }
  std::span<const double> sample(std::size_t i) const { return {features.data() + i * dim, dim}; }

  /// Samples `ids` in the given order.
  Dataset subset(std::span<const std::size_t> ids) const;
  std::vector<std::size_t> label_histogram() const;
};

struct DatasetPair {
  Dataset train;
  Dataset test;
};

/// Gaussian blobs with one unit-norm mean per class and isotropic noise of
/// standard deviation `spread`. Class means are the coordinate axes when
/// classes <= dim and seeded random unit vectors otherwise. Per class, the
/// first 80% of draws go to train and the rest to test.
/// condition > 1 passes every sample through a fixed seeded symmetric linear
/// map with that condition number. Bayes accuracy is unchanged, but gradient
/// descent needs many more steps to reach it.
DatasetPair make_synthetic_dataset(std::size_t classes, std::size_t dim, std::size_t per_class,
                                   double spread, std::uint64_t seed, double condition = 1.0);

/// Big-endian IDX: images (magic 0x00000803, u8, count x rows x cols, scaled
/// to [0,1]) and labels (magic 0x00000801). Class count is max label + 1
/// unless `classes` is given.
Dataset load_idx_dataset(const std::string &images_path, const std::string &labels_path,
                         std::size_t classes = 0);
Dataset parse_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels,
                  std::size_t classes = 0);

struct LocalData {
  std::vector<std::size_t> sample_ids;
  Dataset data;
};

/// Label-sorted shards: sort by label, cut into nodes * shards_per_node
/// contiguous near-equal shards, deal them through a seeded permutation.
std::vector<LocalData> partition_noniid(const Dataset &train, std::size_t nodes,
                                        std::size_t shards_per_node, std::uint64_t seed);

} // namespace edsgd
