#pragma once

#include <cstddef>
#include <cstdint>

namespace mplab {

/// Every Monte-Carlo kernel comes in two flavours: an OpenMP loop and the
/// plain serial loop it is checked against. Both write each result into a
/// slot keyed by its index, so the outputs are bit-identical.
enum class ExecPolicy { kSerial, kParallel };

/// Number of OpenMP threads used by kParallel loops (0 restores the default).
void set_worker_count(int workers);
int worker_count();

/// Calls body(i) for every i in [0, count).
template <class Body>
void for_each_index(std::size_t count, ExecPolicy policy, Body&& body) {
  const auto n = static_cast<std::int64_t>(count);
  if (policy == ExecPolicy::kParallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
  } else {
    for (std::int64_t i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
  }
}

/// Same as for_each_index, but hands contiguous blocks [begin, end) to the
/// body. Block boundaries depend only on `count` and `block`, never on the
/// thread count.
template <class Body>
void for_each_block(std::size_t count, std::size_t block, ExecPolicy policy, Body&& body) {
  const std::size_t blocks = (count + block - 1) / block;
  for_each_index(blocks, policy, [&](std::size_t b) {
    const std::size_t begin = b * block;
    const std::size_t end = begin + block < count ? begin + block : count;
    body(b, begin, end);
  });
}

}  // namespace mplab
