// Copyright (c) 2026 The fdrlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0.txt
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace fdrlab {

/**
 * Parallel map with ordered consumption.
 *
 * compute(i) runs on up to `threads` workers; consume(i, result) is called on
 * the calling thread in strictly ascending i. Work proceeds in chunks so at
 * most a few results per worker are alive at once. Because consumption order
 * never depends on scheduling, reductions are bitwise reproducible for any
 * thread count.
 */
template <typename Compute, typename Consume>
void for_each_ordered(std::size_t n, unsigned threads, Compute&& compute, Consume&& consume) {
  threads = std::max(1u, threads);
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) consume(i, compute(i));
    return;
  }
  using Result = decltype(compute(std::size_t{0}));
  const std::size_t chunk = static_cast<std::size_t>(threads) * 4;
  for (std::size_t begin = 0; begin < n; begin += chunk) {
    const std::size_t end = std::min(n, begin + chunk);
    std::vector<std::optional<Result>> results(end - begin);
    std::atomic<std::size_t> next{begin};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
      for (std::size_t i = next++; i < end; i = next++) {
        try {
          results[i - begin].emplace(compute(i));
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    const std::size_t n_workers = std::min<std::size_t>(threads, end - begin);
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    for (std::size_t i = begin; i < end; ++i) consume(i, std::move(*results[i - begin]));
  }
}

}  // namespace fdrlab
