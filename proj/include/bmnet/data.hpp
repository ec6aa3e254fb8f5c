// Copyright 2026 The bmnet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bmnet/tensor.hpp"

namespace bmnet {

/// Images [N, H, W, C] and integer labels. N may be 0, in which case
/// `images` is empty and `image_shape` still records H, W, C.
struct Dataset {
  Tensor images;
  Shape image_shape;  // [H, W, C]
  std::vector<int> labels;
  std::size_t num_classes = 10;

  std::size_t size() const { return labels.size(); }
  Dataset subset(std::span<const std::size_t> indices) const;
  Dataset head(std::size_t n) const;
  /// Images of `indices` stacked into [indices.size(), H, W, C].
  Tensor batch(std::span<const std::size_t> indices) const;
};

struct DataSplits {
  Dataset train, val, test;
  /// Mean training image subtracted during preprocessing, if any.
  std::optional<Tensor> mean_image;
};

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
inline constexpr std::size_t kCifarRecordBytes = 3073;

/// Raw contents of an IDX3 unsigned-byte image file.
struct IdxImages {
  std::size_t count = 0, rows = 0, cols = 0;
  std::vector<std::uint8_t> pixels;
};

IdxImages parse_idx_images(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_idx_images(const IdxImages& images);
std::vector<std::uint8_t> encode_idx_labels(std::span<const std::uint8_t> labels);

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);

/// Pixels scaled by 1/255 into [0,1]. Throws FormatError on count mismatch or
/// labels >= num_classes.
Dataset dataset_from_idx(const IdxImages& images, std::span<const std::uint8_t> labels,
                         std::size_t num_classes = 10);
/// Inverse of dataset_from_idx for [0,1]-normalized single-channel data.
void write_idx_dataset(const Dataset& data, const std::string& images_path,
                       const std::string& labels_path);

/// Deterministic disjoint split: a seeded shuffle sends round(fraction * N)
/// samples to the second element.
std::pair<Dataset, Dataset> split_validation(const Dataset& data, double fraction,
                                             std::uint64_t seed);

/// Reads train-images-idx3-ubyte, train-labels-idx1-ubyte, t10k-* from `dir`
/// and carves `val_fraction` of the training set off as validation.
DataSplits load_mnist(const std::string& dir, std::uint64_t seed, double val_fraction = 0.1);

/// Parses concatenated 3073-byte CIFAR-10 records (label, 1024 R, 1024 G, 1024 B).
Dataset parse_cifar_records(std::span<const std::uint8_t> bytes);
/// Reads data_batch_1..5.bin and test_batch.bin from `dir`, normalizes to
/// [0,1], subtracts the mean training image from every split and carves
/// validation off the training set.
DataSplits load_cifar10(const std::string& dir, std::uint64_t seed, double val_fraction = 0.1);
/// Per-pixel mean over the dataset, shaped [H, W, C].
Tensor mean_image(const Dataset& data);
void subtract_mean(Dataset& data, const Tensor& mean);

struct AugmentConfig {
  std::size_t shift_h = 0;  // max |vertical shift| in pixels
  std::size_t shift_w = 0;  // max |horizontal shift| in pixels
  bool horizontal_flip = false;
};

/// Random shifts (vacated pixels zero-filled) and horizontal flips. Sample i
/// draws from a generator seeded by (seed, sample_ids[i]), so results do not
/// depend on batch composition or evaluation order.
Tensor augment(const Tensor& batch, const AugmentConfig& cfg, std::uint64_t seed,
               std::span<const std::size_t> sample_ids);
Tensor shift_image_batch(const Tensor& batch, std::span<const int> dy,
                         std::span<const int> dx);
Tensor flip_horizontal(const Tensor& batch);

/// SplitMix64 finalizer, used to derive independent seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace bmnet
