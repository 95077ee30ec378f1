#include "psm/psm_heap.hpp"

#include <bit>
#include <sstream>

#include "json.hpp"
#include "psm/errors.hpp"

namespace psm {

namespace {
// The calling thread's registered identity, set by bind_thread.
thread_local int t_current_tid = -1;
} // namespace

PsmHeap::PsmHeap(const NumaTopology& topo, std::size_t page_size,
                 std::size_t per_node_capacity_pages)
    : topo_(topo), registry_(topo_),
      provider_(topo_, page_size, per_node_capacity_pages),
      table_(SizeClassTable::build(page_size)), map_(page_size) {
    for (int n = 0; n < topo_.num_nodes(); ++n) {
        node_heaps_.push_back(std::make_unique<NodeHeap>(n, table_, provider_, map_));
        live_bytes_per_node_.push_back(std::make_unique<std::atomic<std::size_t>>(0));
    }
    for (int c = 0; c < topo_.total_cores(); ++c)
        core_caches_.push_back(std::make_unique<CoreCache>(
            c, topo_.node_of_core(c), table_, *node_heaps_[topo_.node_of_core(c)],
            map_));
}

void PsmHeap::bind_thread(int tid, int core) {
    registry_.register_thread(tid, core);
    t_current_tid = tid;
}

void* PsmHeap::psm_alloc(std::size_t bytes, int owner) {
    int core = registry_.core_of(owner); // StateError if unregistered
    int node = topo_.node_of_core(core);
    int cls = table_.class_for_size(bytes);
    if (cls == SizeClassTable::kLarge) {
        Span* span = node_heaps_[node]->allocate_large(bytes);
        large_allocs_.fetch_add(1, std::memory_order_relaxed);
        live_bytes_per_node_[node]->fetch_add(
            span->extent.size_bytes(provider_.page_size()),
            std::memory_order_relaxed);
        return span->extent.base;
    }
    void* block = core_caches_[core]->alloc(cls);
    auto* span = static_cast<Span*>(map_.lookup(block));
    span->mark_live(block);
    small_allocs_.fetch_add(1, std::memory_order_relaxed);
    live_bytes_per_node_[node]->fetch_add(table_.at(cls).block_size,
                                          std::memory_order_relaxed);
    return block;
}

void PsmHeap::psm_free(void* p) {
    int tid = t_current_tid;
    int core = -1, node = -1;
    if (tid >= 0 && registry_.is_registered(tid)) {
        core = registry_.core_of(tid);
        node = topo_.node_of_core(core);
    }
    free_routed(p, node, core);
}

void PsmHeap::psm_free_as(void* p, int caller_tid) {
    if (!registry_.is_registered(caller_tid))
        throw StateError("psm_free_as: caller tid " + std::to_string(caller_tid) +
                         " is not registered");
    int core = registry_.core_of(caller_tid);
    free_routed(p, topo_.node_of_core(core), core);
}

void PsmHeap::free_routed(void* p, int caller_node, int caller_core) {
    auto* span = static_cast<Span*>(map_.lookup(p));
    if (!span)
        throw StateError("psm_free: unknown address");
    if (span->kind == Span::Kind::kLarge) {
        if (p != span->extent.base)
            throw StateError("psm_free: pointer is not the start of the block");
        int node = span->node();
        std::size_t bytes = span->extent.size_bytes(provider_.page_size());
        node_heaps_[node]->free_large(span); // detects double free
        large_frees_.fetch_add(1, std::memory_order_relaxed);
        live_bytes_per_node_[node]->fetch_sub(bytes, std::memory_order_relaxed);
        return;
    }
    if (!span->block_aligned(p))
        throw StateError("psm_free: pointer is not the start of the block");
    if (!span->clear_live(p))
        throw StateError("psm_free: double free (block is not live)");
    int cls = span->size_class;
    int node = span->node();
    if (caller_node == node && caller_core >= 0) {
        core_caches_[caller_core]->free(cls, p);
        core_cache_frees_.fetch_add(1, std::memory_order_relaxed);
    } else {
        void* one[1] = {p};
        node_heaps_[node]->return_blocks(cls, one);
        central_frees_.fetch_add(1, std::memory_order_relaxed);
    }
    live_bytes_per_node_[node]->fetch_sub(span->block_size,
                                          std::memory_order_relaxed);
}

int PsmHeap::owner_node_of(const void* p) const {
    auto* span = static_cast<Span*>(map_.lookup(p));
    if (!span)
        throw StateError("owner_node_of: unknown address");
    if (span->kind == Span::Kind::kLarge) {
        if (!span->large_live.load())
            throw StateError("owner_node_of: block is not live");
    } else if (!span->block_aligned(p) || !span->is_live(p)) {
        throw StateError("owner_node_of: block is not live");
    }
    return span->node();
}

HeapReport PsmHeap::heap_report() const {
    HeapReport rep;
    std::size_t total_live = 0, total_reserved = 0;
    for (int n = 0; n < topo_.num_nodes(); ++n) {
        NodeReport nr;
        nr.node = n;
        nr.live_bytes = live_bytes_per_node_[n]->load();
        NodeHeapStats st = node_heaps_[n]->stats();
        nr.reserved_bytes = st.reserved_bytes;
        nr.spans = st.live_spans;
        // A block is remote when any of its pages is bound off the span's
        // node.  The provider binds whole extents, so checking extents covers
        // every page of every block.
        node_heaps_[n]->for_each_span([&](const Span& s) {
            std::size_t page = provider_.page_size();
            bool remote = false;
            for (std::size_t i = 0; i < s.extent.num_pages && !remote; ++i) {
                auto bound = provider_.node_of_page(s.extent.base + i * page);
                remote = !bound || *bound != s.node();
            }
            if (!remote)
                return;
            if (s.kind == Span::Kind::kLarge) {
                nr.remote_blocks += s.large_live.load() ? 1 : 0;
            } else {
                for (const auto& w : s.live_bits)
                    nr.remote_blocks +=
                        static_cast<std::size_t>(std::popcount(w.load()));
            }
        });
        total_live += nr.live_bytes;
        total_reserved += nr.reserved_bytes;
        rep.remote_block_count += nr.remote_blocks;
        rep.nodes.push_back(nr);
    }
    if (total_reserved > 0)
        rep.fragmentation_pct =
            100.0 * (1.0 - static_cast<double>(total_live) / total_reserved);
    return rep;
}

PathCounters PsmHeap::path_counters() const {
    return {small_allocs_.load(), large_allocs_.load(), core_cache_frees_.load(),
            central_frees_.load(), large_frees_.load()};
}

std::string HeapReport::to_json() const {
    nlohmann::json j;
    j["remote_block_count"] = remote_block_count;
    j["fragmentation_pct"] = fragmentation_pct;
    j["nodes"] = nlohmann::json::array();
    for (const NodeReport& n : nodes)
        j["nodes"].push_back({{"node", n.node},
                              {"live_bytes", n.live_bytes},
                              {"reserved_bytes", n.reserved_bytes},
                              {"spans", n.spans},
                              {"remote_blocks", n.remote_blocks}});
    return j.dump(2);
}

std::string HeapReport::to_csv() const {
    std::ostringstream out;
    out << "node,live_bytes,reserved_bytes,spans,remote_blocks\n";
    for (const NodeReport& n : nodes)
        out << n.node << ',' << n.live_bytes << ',' << n.reserved_bytes << ','
            << n.spans << ',' << n.remote_blocks << '\n';
    return out.str();
}

} // namespace psm
