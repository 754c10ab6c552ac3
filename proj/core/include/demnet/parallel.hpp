#ifndef DEMNET_PARALLEL_HPP
#define DEMNET_PARALLEL_HPP

#include <functional>

namespace demnet {

/// Worker count: DEMNET_THREADS if set (clamped to >= 1), else
/// hardware_concurrency(). Read once and cached.
int thread_count();

/// Chunks [0, n) splits into: min(thread_count(), n).
int parallel_chunk_count(int n);

/// Runs fn(chunk, begin, end) over a static partition of [0, n) into
/// parallel_chunk_count(n) contiguous chunks. Chunk boundaries depend
/// only on n and the thread count, never on scheduling, so per-chunk
/// partial results combined in chunk order are reproducible for a fixed
/// DEMNET_THREADS. n == 0 is a no-op.
void parallel_chunks_indexed(int n,
                             const std::function<void(int, int, int)>& fn);

/// parallel_chunks_indexed without the chunk id.
void parallel_chunks(int n, const std::function<void(int, int)>& fn);

}  // namespace demnet

#endif  // DEMNET_PARALLEL_HPP
