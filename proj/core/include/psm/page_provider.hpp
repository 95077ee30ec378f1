#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "psm/topology.hpp"

namespace psm {

// Contiguous run of pages bound to one node (kUnbound for first-touch use).
struct PageExtent {
    std::byte* base = nullptr;
    std::size_t num_pages = 0;
    int node = -1;

    std::size_t size_bytes(std::size_t page_size) const { return num_pages * page_size; }
};

struct ProviderStats {
    std::vector<std::size_t> pages_live_per_node;
    std::size_t pages_live_unbound = 0;
    std::size_t pages_total_allocated = 0;
    std::size_t allocation_calls = 0;

    std::size_t pages_live_total() const;
};

// Simulated NUMA memory backend.  Extents are real, writable, zero-filled
// host memory; the page -> node binding lives purely in provider metadata
// so locality stays deterministically checkable without OS NUMA support.
class PageProvider {
public:
    static constexpr int kUnbound = -1;
    static constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();

    PageProvider(const NumaTopology& topo, std::size_t page_size = 4096,
                 std::size_t per_node_capacity_pages = kUnlimited);
    ~PageProvider();

    PageProvider(const PageProvider&) = delete;
    PageProvider& operator=(const PageProvider&) = delete;

    std::size_t page_size() const { return page_size_; }

    // n pages of zero-filled memory, page-aligned, bound to node.
    // Throws CapacityError when the node's simulated capacity is exhausted.
    PageExtent allocate_pages(std::size_t n, int node);

    // First-touch support: pages start unbound; bind_page fixes a page's node
    // the first time and is a no-op if the page is already bound.
    PageExtent allocate_pages_unbound(std::size_t n);
    void bind_page(const void* addr, int node);

    void release_pages(const PageExtent& extent); // StateError on double release

    // Bound node of the page containing addr; kUnbound for a live unbound
    // page; nullopt when no live extent covers addr.
    std::optional<int> node_of_page(const void* addr) const;

    ProviderStats stats() const;

private:
    struct ExtentRec {
        std::size_t num_pages;
        int node;                    // kUnbound => per_page holds bindings
        std::vector<int> per_page;   // empty for uniformly bound extents
    };

    PageExtent allocate_impl(std::size_t n, int node);
    void* map_aligned(std::size_t bytes);

    const NumaTopology* topo_;
    std::size_t page_size_;
    std::size_t per_node_capacity_;

    mutable std::shared_mutex mu_;
    std::map<std::uintptr_t, ExtentRec> extents_; // keyed by base address
    ProviderStats stats_;
};

} // namespace psm
