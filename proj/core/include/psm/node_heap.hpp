#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <unordered_set>
#include <vector>

#include "psm/page_map.hpp"
#include "psm/page_provider.hpp"
#include "psm/size_classes.hpp"
#include "psm/span.hpp"

namespace psm {

struct NodeHeapStats {
    std::size_t live_spans = 0;
    std::size_t reserved_bytes = 0;
    std::size_t spans_created = 0;
    std::size_t spans_reclaimed = 0;
    std::size_t large_reuse_hits = 0;
    std::size_t central_fetch_calls = 0;
};

// One independent heap per NUMA node: per-class central free lists, span
// management and the large-object path.  All locks here are local to the
// node (per-class central lock, one large-path lock).
class NodeHeap {
public:
    static constexpr std::size_t kLargeReuseMaxSpans = 64;
    static constexpr std::size_t kLargeReuseMaxBytes = 256u << 20;

    NodeHeap(int node, const SizeClassTable& table, PageProvider& provider,
             PageMap& map);
    ~NodeHeap();

    NodeHeap(const NodeHeap&) = delete;
    NodeHeap& operator=(const NodeHeap&) = delete;

    int node() const { return node_; }

    // Between 1 and k blocks of the class's size, all on this node's pages;
    // carves a fresh span when the central list runs dry.
    std::vector<void*> fetch_blocks(int cls, std::size_t k);

    // Recycle blocks into the central list.  A block that does not belong to
    // this node and class is a StateError.  A span whose blocks all come back
    // is reclaimed to the provider immediately.
    void return_blocks(int cls, std::span<void* const> blocks);

    // Dedicated span for bytes > large_threshold; served from the per-node
    // size-bucketed reuse cache when possible.
    Span* allocate_large(std::size_t bytes);
    void free_large(Span* span); // StateError on double free

    NodeHeapStats stats() const;

    // Visit every live span (including reuse-cached large spans) under lock.
    template <typename F>
    void for_each_span(F&& f) const {
        std::lock_guard lock(spans_mu_);
        for (const Span* s : all_spans_) f(*s);
    }

private:
    struct Central {
        std::mutex mu;
        std::vector<Span*> nonempty; // spans with blocks in central_free
        std::size_t fetch_calls = 0;
    };

    Span* carve_span(int cls);
    void reclaim(Span* span);
    void track(Span* span);
    void untrack(Span* span);

    int node_;
    const SizeClassTable* table_;
    PageProvider* provider_;
    PageMap* map_;

    std::vector<Central> central_; // one per size class

    std::mutex large_mu_;
    std::map<std::size_t, std::vector<Span*>> large_reuse_; // pages -> spans
    std::size_t large_reuse_spans_ = 0;
    std::size_t large_reuse_bytes_ = 0;

    mutable std::mutex spans_mu_;
    std::unordered_set<Span*> all_spans_;
    std::size_t spans_created_ = 0;
    std::size_t spans_reclaimed_ = 0;
    std::size_t large_reuse_hits_ = 0;
};

} // namespace psm
