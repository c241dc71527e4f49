/*
 * Copyright 2026 The driftdiffuse Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace driftdiffuse {

/// Worker count from an explicit request, else DRIFTDIFFUSE_THREADS, else
/// the hardware concurrency.
int resolve_threads(int requested);

/// Splits [0, n) into fixed chunks of `chunk` items, evaluates `work(begin,
/// end)` on up to `threads` workers and hands the results to `fold` in
/// ascending chunk order, whatever order they finish in. The fold therefore
/// sees exactly the sequence a serial loop would.
template <class Work, class Fold>
void ordered_chunks(std::int64_t n, std::int64_t chunk, int threads, Work&& work, Fold&& fold) {
  using Result = decltype(work(std::int64_t{}, std::int64_t{}));
  const std::int64_t chunks = (n + chunk - 1) / chunk;
  if (chunks == 0) return;
  const int workers = static_cast<int>(std::min<std::int64_t>(std::max(threads, 1), chunks));

  if (workers == 1) {
    for (std::int64_t c = 0; c < chunks; ++c) fold(work(c * chunk, std::min(n, (c + 1) * chunk)));
    return;
  }

  std::atomic<std::int64_t> next{0};
  std::mutex mu;
  std::map<std::int64_t, Result> pending;
  std::int64_t next_fold = 0;
  std::exception_ptr error;

  auto body = [&] {
    for (;;) {
      {
        std::lock_guard lock(mu);
        if (error) return;
      }
      const std::int64_t c = next.fetch_add(1);
      if (c >= chunks) return;
      try {
        Result r = work(c * chunk, std::min(n, (c + 1) * chunk));
        std::lock_guard lock(mu);
        pending.emplace(c, std::move(r));
        while (!pending.empty() && pending.begin()->first == next_fold) {
          fold(std::move(pending.begin()->second));
          pending.erase(pending.begin());
          ++next_fold;
        }
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(body);
  pool.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace driftdiffuse
