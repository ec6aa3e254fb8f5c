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

#include "bmnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

#include "bmnet/error.hpp"

namespace bmnet {

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::string hex(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08X", v);
  return buf;
}

}  // namespace

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.image_shape = image_shape;
  out.num_classes = num_classes;
  out.labels.reserve(indices.size());
  for (auto i : indices) out.labels.push_back(labels.at(i));
  if (!indices.empty()) out.images = batch(indices);
  return out;
}

Dataset Dataset::head(std::size_t n) const {
  std::vector<std::size_t> idx(std::min(n, size()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return subset(idx);
}

Tensor Dataset::batch(std::span<const std::size_t> indices) const {
  const std::size_t per = shape_volume(image_shape);
  std::vector<double> buf(indices.size() * per);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t i = indices[k];
    if (i >= size()) throw ShapeError("sample index out of range");
    std::copy_n(images.data().begin() + static_cast<std::ptrdiff_t>(i * per), per,
                buf.begin() + static_cast<std::ptrdiff_t>(k * per));
  }
  return Tensor({indices.size(), image_shape[0], image_shape[1], image_shape[2]},
                std::move(buf));
}

IdxImages parse_idx_images(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16) throw FormatError("IDX image file truncated in header");
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != kIdxImagesMagic) {
    throw FormatError("bad IDX image magic " + hex(magic) + ", expected " +
                      hex(kIdxImagesMagic));
  }
  IdxImages img;
  img.count = read_be32(bytes, 4);
  img.rows = read_be32(bytes, 8);
  img.cols = read_be32(bytes, 12);
  const std::size_t need = img.count * img.rows * img.cols;
  if (bytes.size() - 16 < need) {
    throw FormatError("IDX image file truncated: expected " + std::to_string(need) +
                      " pixel bytes, found " + std::to_string(bytes.size() - 16));
  }
  img.pixels.assign(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(need));
  return img;
}

std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw FormatError("IDX label file truncated in header");
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != kIdxLabelsMagic) {
    throw FormatError("bad IDX label magic " + hex(magic) + ", expected " +
                      hex(kIdxLabelsMagic));
  }
  const std::size_t n = read_be32(bytes, 4);
  if (bytes.size() - 8 < n) {
    throw FormatError("IDX label file truncated: expected " + std::to_string(n) +
                      " labels, found " + std::to_string(bytes.size() - 8));
  }
  return {bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(n)};
}

std::vector<std::uint8_t> encode_idx_images(const IdxImages& images) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + images.pixels.size());
  put_be32(out, kIdxImagesMagic);
  put_be32(out, static_cast<std::uint32_t>(images.count));
  put_be32(out, static_cast<std::uint32_t>(images.rows));
  put_be32(out, static_cast<std::uint32_t>(images.cols));
  out.insert(out.end(), images.pixels.begin(), images.pixels.end());
  return out;
}

std::vector<std::uint8_t> encode_idx_labels(std::span<const std::uint8_t> labels) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + labels.size());
  put_be32(out, kIdxLabelsMagic);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

Dataset dataset_from_idx(const IdxImages& images, std::span<const std::uint8_t> labels,
                         std::size_t num_classes) {
  if (images.count != labels.size()) {
    throw FormatError("IDX image count " + std::to_string(images.count) +
                      " does not match label count " + std::to_string(labels.size()));
  }
  Dataset d;
  d.num_classes = num_classes;
  d.image_shape = {images.rows, images.cols, 1};
  for (auto l : labels) {
    if (l >= num_classes) {
      throw FormatError("label " + std::to_string(l) + " outside [0, " +
                        std::to_string(num_classes) + ")");
    }
    d.labels.push_back(l);
  }
  if (images.count > 0) {
    std::vector<double> px(images.pixels.size());
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = images.pixels[i] / 255.0;
    d.images = Tensor({images.count, images.rows, images.cols, 1}, std::move(px));
  }
  return d;
}

void write_idx_dataset(const Dataset& data, const std::string& images_path,
                       const std::string& labels_path) {
  if (data.image_shape.size() != 3 || data.image_shape[2] != 1) {
    throw ShapeError("IDX output needs single-channel images");
  }
  IdxImages img;
  img.count = data.size();
  img.rows = data.image_shape[0];
  img.cols = data.image_shape[1];
  img.pixels.reserve(data.images.size());
  for (double v : data.images.data()) {
    img.pixels.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  }
  std::vector<std::uint8_t> labels(data.labels.begin(), data.labels.end());
  write_file(images_path, encode_idx_images(img));
  write_file(labels_path, encode_idx_labels(labels));
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::pair<Dataset, Dataset> split_validation(const Dataset& data, double fraction,
                                             std::uint64_t seed) {
  if (fraction < 0.0 || fraction >= 1.0) {
    throw ConfigError("validation fraction must be in [0, 1)");
  }
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(mix_seed(seed, 0x5EA1));
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto nval = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(data.size())));
  std::vector<std::size_t> val(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(nval));
  std::vector<std::size_t> train(idx.begin() + static_cast<std::ptrdiff_t>(nval), idx.end());
  std::sort(val.begin(), val.end());
  std::sort(train.begin(), train.end());
  return {data.subset(train), data.subset(val)};
}

DataSplits load_mnist(const std::string& dir, std::uint64_t seed, double val_fraction) {
  const auto load = [&](const char* images, const char* labels) {
    const auto ib = read_file(dir + "/" + images);
    const auto lb = read_file(dir + "/" + labels);
    return dataset_from_idx(parse_idx_images(ib), parse_idx_labels(lb), 10);
  };
  DataSplits s;
  const Dataset full = load("train-images-idx3-ubyte", "train-labels-idx1-ubyte");
  std::tie(s.train, s.val) = split_validation(full, val_fraction, seed);
  s.test = load("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte");
  return s;
}

Dataset parse_cifar_records(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % kCifarRecordBytes != 0) {
    throw FormatError("CIFAR-10 batch size " + std::to_string(bytes.size()) +
                      " is not a multiple of " + std::to_string(kCifarRecordBytes));
  }
  const std::size_t n = bytes.size() / kCifarRecordBytes;
  Dataset d;
  d.num_classes = 10;
  d.image_shape = {32, 32, 3};
  std::vector<double> px(n * 3072);
  for (std::size_t r = 0; r < n; ++r) {
    const auto* rec = bytes.data() + r * kCifarRecordBytes;
    if (rec[0] >= 10) {
      throw FormatError("CIFAR-10 record " + std::to_string(r) + " has label " +
                        std::to_string(rec[0]));
    }
    d.labels.push_back(rec[0]);
    // Planar RGB on disk, interleaved HWC in memory.
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t p = 0; p < 1024; ++p) px[r * 3072 + p * 3 + c] = rec[1 + c * 1024 + p] / 255.0;
  }
  if (n > 0) d.images = Tensor({n, 32, 32, 3}, std::move(px));
  return d;
}

Tensor mean_image(const Dataset& data) {
  Tensor mean(data.image_shape);
  if (data.size() == 0) return mean;
  const std::size_t per = mean.size();
  for (std::size_t n = 0; n < data.size(); ++n)
    for (std::size_t i = 0; i < per; ++i) mean[i] += data.images[n * per + i];
  for (auto& v : mean.data()) v /= static_cast<double>(data.size());
  return mean;
}

void subtract_mean(Dataset& data, const Tensor& mean) {
  if (data.size() == 0) return;
  const std::size_t per = mean.size();
  for (std::size_t n = 0; n < data.size(); ++n)
    for (std::size_t i = 0; i < per; ++i) data.images[n * per + i] -= mean[i];
}

DataSplits load_cifar10(const std::string& dir, std::uint64_t seed, double val_fraction) {
  std::vector<std::uint8_t> train_bytes;
  for (int b = 1; b <= 5; ++b) {
    const auto bytes = read_file(dir + "/data_batch_" + std::to_string(b) + ".bin");
    train_bytes.insert(train_bytes.end(), bytes.begin(), bytes.end());
  }
  Dataset full = parse_cifar_records(train_bytes);
  DataSplits s;
  s.test = parse_cifar_records(read_file(dir + "/test_batch.bin"));
  const Tensor mean = mean_image(full);
  subtract_mean(full, mean);
  subtract_mean(s.test, mean);
  std::tie(s.train, s.val) = split_validation(full, val_fraction, seed);
  s.mean_image = mean;
  return s;
}

Tensor shift_image_batch(const Tensor& batch, std::span<const int> dy, std::span<const int> dx) {
  const std::size_t B = batch.dim(0), H = batch.dim(1), W = batch.dim(2), C = batch.dim(3);
  Tensor out(batch.shape());
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t y = 0; y < H; ++y) {
      const long sy = static_cast<long>(y) - dy[n];
      if (sy < 0 || sy >= static_cast<long>(H)) continue;
      for (std::size_t x = 0; x < W; ++x) {
        const long sx = static_cast<long>(x) - dx[n];
        if (sx < 0 || sx >= static_cast<long>(W)) continue;
        for (std::size_t c = 0; c < C; ++c) {
          out[((n * H + y) * W + x) * C + c] =
              batch[((n * H + static_cast<std::size_t>(sy)) * W + static_cast<std::size_t>(sx)) * C + c];
        }
      }
    }
  return out;
}

Tensor flip_horizontal(const Tensor& batch) {
  const std::size_t B = batch.dim(0), H = batch.dim(1), W = batch.dim(2), C = batch.dim(3);
  Tensor out(batch.shape());
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x)
        for (std::size_t c = 0; c < C; ++c)
          out[((n * H + y) * W + x) * C + c] = batch[((n * H + y) * W + (W - 1 - x)) * C + c];
  return out;
}

Tensor augment(const Tensor& batch, const AugmentConfig& cfg, std::uint64_t seed,
               std::span<const std::size_t> sample_ids) {
  if (batch.rank() != 4 || sample_ids.size() != batch.dim(0)) {
    throw ShapeError("augment expects [batch,H,W,C] and one id per sample");
  }
  const std::size_t H = batch.dim(1), W = batch.dim(2), C = batch.dim(3);
  if (cfg.shift_h * 4 > H || cfg.shift_w * 4 > W) {
    throw ConfigError("shift range must not exceed 25% of the image extent");
  }
  Tensor out = batch;
  const std::size_t per = H * W * C;
  for (std::size_t n = 0; n < batch.dim(0); ++n) {
    std::mt19937_64 rng(mix_seed(seed, sample_ids[n]));
    const int sh = static_cast<int>(cfg.shift_h), sw = static_cast<int>(cfg.shift_w);
    const int dy = sh ? std::uniform_int_distribution<int>(-sh, sh)(rng) : 0;
    const int dx = sw ? std::uniform_int_distribution<int>(-sw, sw)(rng) : 0;
    const bool flip = cfg.horizontal_flip && std::bernoulli_distribution(0.5)(rng);
    if (dy == 0 && dx == 0 && !flip) continue;
    Tensor one({1, H, W, C},
               std::vector<double>(batch.data().begin() + static_cast<std::ptrdiff_t>(n * per),
                                   batch.data().begin() + static_cast<std::ptrdiff_t>((n + 1) * per)));
    if (dy || dx) {
      const int dys[1] = {dy}, dxs[1] = {dx};
      one = shift_image_batch(one, dys, dxs);
    }
    if (flip) one = flip_horizontal(one);
    std::copy(one.data().begin(), one.data().end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(n * per));
  }
  return out;
}

}  // namespace bmnet
