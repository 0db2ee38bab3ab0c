/* Copyright 2026 The ProxyForge Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef PROXYFORGE_PARALLEL_H_
#define PROXYFORGE_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace proxyforge {

// Number of workers used when the caller asks for 0 (= auto).
int DefaultThreadCount();

// Runs fn(worker, begin, end) over contiguous shards of [0, count). Shard
// boundaries depend only on (count, threads), and callers merge per-worker
// results in worker order, so output never depends on scheduling.
// Exceptions from any worker are rethrown on the calling thread.
void ParallelShards(
    std::size_t count, int threads,
    const std::function<void(int worker, std::size_t begin, std::size_t end)>&
        fn);

// Convenience wrapper: fn(i) for each i in [0, count).
void ParallelFor(std::size_t count, int threads,
                 const std::function<void(std::size_t)>& fn);

}  // namespace proxyforge

#endif  // PROXYFORGE_PARALLEL_H_
