#pragma once

#include <mutex>
#include <vector>

#include "psm/free_list.hpp"
#include "psm/node_heap.hpp"

namespace psm {

struct CoreCacheStats {
    std::size_t hits = 0;
    std::size_t misses = 0;         // allocs that had to refill from central
    std::size_t flushes = 0;        // watermark/cap flushes to central
    std::size_t cached_bytes = 0;
};

// Per-core, per-class block cache fronting the node's central free lists.
// One exclusive lock per cache, held across a single alloc or free; many
// threads may legitimately target the same core's cache.
class CoreCache {
public:
    static constexpr std::size_t kCacheCapBytes = 4u << 20;

    CoreCache(int core, int node, const SizeClassTable& table, NodeHeap& heap,
              PageMap& map);

    CoreCache(const CoreCache&) = delete;
    CoreCache& operator=(const CoreCache&) = delete;

    int core() const { return core_; }
    int node() const { return node_; }

    // One block of the class's size, refilling batch_size blocks from the
    // node's central list on a miss.
    void* alloc(int cls);

    // LIFO recycle.  A block whose span lives on another node is a
    // StateError: cross-node frees must route through the owning central
    // list, never through a core cache.
    void free(int cls, void* block);

    CoreCacheStats stats() const;

private:
    void flush(int cls, std::size_t n); // callers hold mu_

    int core_;
    int node_;
    const SizeClassTable* table_;
    NodeHeap* heap_;
    PageMap* map_;

    mutable std::mutex mu_;
    std::vector<FreeList> lists_; // one per size class
    std::size_t cached_bytes_ = 0;
    CoreCacheStats stats_{};
};

} // namespace psm
