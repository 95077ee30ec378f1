#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "psm/free_list.hpp"
#include "psm/page_map.hpp"
#include "psm/page_provider.hpp"
#include "psm/size_classes.hpp"
#include "psm/span.hpp"
#include "psm/topology.hpp"

namespace psm {

// NUMA-unaware baseline: one shared heap (single central free list set plus
// per-core caches) with pages placed round-robin over the nodes that host
// registered threads.  Caches legitimately end up holding remote blocks --
// that is the defect under study.
class SharedCacheAllocator {
public:
    SharedCacheAllocator(const NumaTopology& topo, std::size_t page_size = 4096);
    ~SharedCacheAllocator();

    SharedCacheAllocator(const SharedCacheAllocator&) = delete;
    SharedCacheAllocator& operator=(const SharedCacheAllocator&) = delete;

    ThreadRegistry& registry() { return registry_; }
    PageProvider& provider() { return provider_; }
    const SizeClassTable& size_classes() const { return table_; }

    void register_thread(int tid, int core) { registry_.register_thread(tid, core); }

    void* sc_alloc(std::size_t bytes, int tid);
    void sc_free(void* p, int tid); // caller's cache takes the block, any node

    std::optional<int> node_of_page(const void* addr) const {
        return provider_.node_of_page(addr);
    }

private:
    struct Central {
        std::mutex mu;
        std::vector<Span*> nonempty;
    };
    struct CoreLists {
        std::mutex mu;
        std::vector<FreeList> lists;
    };

    int next_node();
    Span* carve_span(int cls);                    // callers hold central mu
    std::vector<void*> central_fetch(int cls, std::size_t k);
    void central_return(int cls, const std::vector<void*>& blocks);
    void reclaim(Span* span);

    const NumaTopology topo_;
    ThreadRegistry registry_;
    PageProvider provider_;
    SizeClassTable table_;
    PageMap map_;

    std::vector<std::unique_ptr<Central>> central_;    // per class, shared
    std::vector<std::unique_ptr<CoreLists>> caches_;   // per core

    std::mutex large_mu_;
    std::map<std::size_t, std::vector<Span*>> large_reuse_;
    std::size_t large_reuse_spans_ = 0;

    std::mutex spans_mu_;
    std::vector<Span*> all_spans_;

    std::atomic<std::size_t> rr_counter_{0};
};

} // namespace psm
