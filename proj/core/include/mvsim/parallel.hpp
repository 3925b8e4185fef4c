#pragma once

#include <cstddef>
#include <functional>
#include <utility>

namespace mvsim {

/// Resolves a requested worker count; 0 means hardware concurrency.
unsigned resolve_threads(unsigned requested) noexcept;

/// Runs body(block) for every block in [0, blocks) on up to `threads`
/// workers. Blocks are claimed dynamically, so callers must write results
/// into per-block slots and reduce them in block order afterwards; that
/// keeps results independent of the worker count. The first exception
/// thrown by any block is rethrown after all workers finish.
void parallel_for_blocks(std::size_t blocks, unsigned threads,
                         const std::function<void(std::size_t)>& body);

/// Half-open range of items owned by `block` when `total` items are split
/// into `blocks` contiguous pieces.
std::pair<std::size_t, std::size_t> block_range(std::size_t total, std::size_t blocks,
                                                std::size_t block) noexcept;

}  // namespace mvsim
