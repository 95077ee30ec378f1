#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <vector>

#include "psm/core_cache.hpp"
#include "psm/node_heap.hpp"
#include "psm/page_map.hpp"
#include "psm/page_provider.hpp"
#include "psm/size_classes.hpp"
#include "psm/topology.hpp"

namespace psm {

struct NodeReport {
    int node = 0;
    std::size_t live_bytes = 0;
    std::size_t reserved_bytes = 0;
    std::size_t spans = 0;
    std::size_t remote_blocks = 0;
};

struct HeapReport {
    std::vector<NodeReport> nodes;
    std::size_t remote_block_count = 0; // blocks on pages off their owner node
    double fragmentation_pct = 0.0;     // 1 - live/reserved, heap-wide

    std::string to_json() const;
    std::string to_csv() const; // node,live_bytes,reserved_bytes,spans,remote_blocks
};

struct PathCounters {
    std::size_t small_allocs = 0;
    std::size_t large_allocs = 0;
    std::size_t core_cache_frees = 0;   // same-node frees through a core cache
    std::size_t central_frees = 0;      // cross-node / unregistered-caller frees
    std::size_t large_frees = 0;
};

// The partitioned-shared-memory heap: location-aware allocation, location-
// free deallocation.  One node heap per NUMA node, one cache per core, one
// shared page map and size-class table.
class PsmHeap {
public:
    explicit PsmHeap(const NumaTopology& topo, std::size_t page_size = 4096,
                     std::size_t per_node_capacity_pages = PageProvider::kUnlimited);

    PsmHeap(const PsmHeap&) = delete;
    PsmHeap& operator=(const PsmHeap&) = delete;

    const NumaTopology& topology() const { return topo_; }
    ThreadRegistry& registry() { return registry_; }
    PageProvider& provider() { return provider_; }
    const SizeClassTable& size_classes() const { return table_; }
    PageMap& page_map() { return map_; }
    NodeHeap& node_heap(int node) { return *node_heaps_[node]; }
    CoreCache& core_cache(int core) { return *core_caches_[core]; }

    // Registers tid on core and makes tid the calling thread's identity for
    // psm_free routing.
    void bind_thread(int tid, int core);

    // >= bytes usable bytes, every page bound to the owner thread's node.
    // The owner must be registered (StateError otherwise).
    void* psm_alloc(std::size_t bytes, int owner);

    // Location-free: ownership is resolved through the page map.  Routing
    // uses the calling thread's registered identity; unregistered callers
    // recycle through the owning node's central list.
    void psm_free(void* p);

    // Deterministic-mode variant with an explicit caller identity.
    void psm_free_as(void* p, int caller_tid);

    // Node owning the live block at p (StateError for unknown/dead blocks).
    int owner_node_of(const void* p) const;

    HeapReport heap_report() const;
    PathCounters path_counters() const;

private:
    void free_routed(void* p, int caller_node, int caller_core);

    const NumaTopology topo_;
    ThreadRegistry registry_;
    PageProvider provider_;
    SizeClassTable table_;
    PageMap map_;
    std::vector<std::unique_ptr<NodeHeap>> node_heaps_;
    std::vector<std::unique_ptr<CoreCache>> core_caches_;

    std::vector<std::unique_ptr<std::atomic<std::size_t>>> live_bytes_per_node_;
    std::atomic<std::size_t> small_allocs_{0}, large_allocs_{0};
    std::atomic<std::size_t> core_cache_frees_{0}, central_frees_{0}, large_frees_{0};
};

} // namespace psm
