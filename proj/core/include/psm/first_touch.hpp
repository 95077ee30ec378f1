#pragma once

#include <cstddef>
#include <map>
#include <mutex>
#include <vector>

#include "psm/page_provider.hpp"
#include "psm/topology.hpp"

namespace psm {

// Idealized first-touch page allocator (GLIBC-mmap-like): whole pages per
// allocation, no size classes, and a page's node is fixed at the first
// recorded write, to the writer's node.  Deterministic by construction; the
// OS jitter behind the paper's nonzero GLIBC measurements is not simulated.
class FirstTouchAllocator {
public:
    struct WriteEvent {
        const void* page;
        int tid;
        int node;
    };

    FirstTouchAllocator(const NumaTopology& topo, std::size_t page_size = 4096);

    ThreadRegistry& registry() { return registry_; }
    PageProvider& provider() { return provider_; }

    void register_thread(int tid, int core) { registry_.register_thread(tid, core); }

    // Rounds up to whole pages; pages start unbound.
    void* ft_alloc(std::size_t bytes, int tid);

    // Writes [addr, addr+len) and binds every untouched page to tid's node.
    void ft_write(void* addr, std::size_t len, int tid);

    void ft_free(void* addr); // StateError on unknown address / double free

    std::optional<int> node_of_page(const void* addr) const {
        return provider_.node_of_page(addr);
    }

    std::vector<WriteEvent> write_log() const;

private:
    const NumaTopology topo_;
    ThreadRegistry registry_;
    PageProvider provider_;

    mutable std::mutex mu_;
    std::map<std::uintptr_t, PageExtent> live_; // keyed by base
    std::vector<WriteEvent> write_log_;
};

} // namespace psm
