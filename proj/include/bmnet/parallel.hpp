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

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace bmnet {

/// Process-wide worker count for batch-parallel kernels. Defaults to 1.
void set_num_threads(std::size_t n);
std::size_t num_threads();

/// Number of chunks parallel_chunks will use for `n` items.
inline std::size_t chunk_count(std::size_t n) {
  return std::max<std::size_t>(1, std::min(num_threads(), n));
}

/// Calls fn(chunk, begin, end) over a fixed contiguous partition of [0, n).
/// The partition depends only on n and num_threads(), so per-chunk partial
/// results reduced in chunk order are reproducible.
template <typename Fn>
void parallel_chunks(std::size_t n, Fn&& fn) {
  const std::size_t chunks = chunk_count(n);
  const auto bounds = [&](std::size_t c) { return n * c / chunks; };
  if (chunks == 1) {
    fn(std::size_t{0}, std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(chunks - 1);
  for (std::size_t c = 1; c < chunks; ++c) {
    workers.emplace_back([&, c] { fn(c, bounds(c), bounds(c + 1)); });
  }
  fn(std::size_t{0}, bounds(0), bounds(1));
  for (auto& w : workers) w.join();
}

}  // namespace bmnet
