// Copyright 2026 The gneva Authors
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

#ifndef GNEVA_PARALLEL_HPP_
#define GNEVA_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace gneva {

// Worker count from GNEVA_THREADS when it holds a positive integer,
// otherwise the number of logical cores (at least 1).
int worker_count();

// Splits [0, n) into at most `workers` contiguous chunks, in worker order,
// and runs fn(begin, end, worker) on each. The chunking depends only on n
// and the worker count. The exception from the lowest-indexed failing
// worker is rethrown after all workers finish.
void parallel_chunks(std::size_t n, int workers,
                     const std::function<void(std::size_t, std::size_t, int)>& fn);

// parallel_chunks with one call per index.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace gneva

#endif  // GNEVA_PARALLEL_HPP_
