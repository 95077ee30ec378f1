#include "psm/node_heap.hpp"

#include <algorithm>

#include "psm/errors.hpp"

namespace psm {

NodeHeap::NodeHeap(int node, const SizeClassTable& table, PageProvider& provider,
                   PageMap& map)
    : node_(node), table_(&table), provider_(&provider), map_(&map),
      central_(table.num_classes()) {}

NodeHeap::~NodeHeap() {
    for (Span* s : all_spans_) {
        map_->deregister_span(s->extent);
        provider_->release_pages(s->extent);
        delete s;
    }
}

void NodeHeap::track(Span* span) {
    std::lock_guard lock(spans_mu_);
    all_spans_.insert(span);
    spans_created_ += 1;
}

void NodeHeap::untrack(Span* span) {
    std::lock_guard lock(spans_mu_);
    all_spans_.erase(span);
    spans_reclaimed_ += 1;
}

Span* NodeHeap::carve_span(int cls) {
    const SizeClass& sc = table_->at(cls);
    PageExtent extent = provider_->allocate_pages(sc.pages_per_span, node_);
    auto* span = new Span();
    span->extent = extent;
    span->kind = Span::Kind::kSmall;
    span->size_class = cls;
    span->block_size = sc.block_size;
    span->num_blocks = extent.size_bytes(provider_->page_size()) / sc.block_size;
    span->init_live_bits();
    for (std::size_t i = span->num_blocks; i-- > 0;)
        span->central_free.push(span->block_at(i));
    map_->register_span(extent, span);
    track(span);
    return span;
}

std::vector<void*> NodeHeap::fetch_blocks(int cls, std::size_t k) {
    if (k < 1)
        throw StateError("fetch_blocks: k must be >= 1");
    Central& c = central_[cls];
    std::lock_guard lock(c.mu);
    c.fetch_calls += 1;
    std::vector<void*> out;
    out.reserve(k);
    while (out.size() < k) {
        if (c.nonempty.empty()) {
            if (!out.empty())
                break; // serve a partial batch rather than over-carve
            c.nonempty.push_back(carve_span(cls));
        }
        Span* span = c.nonempty.back();
        out.push_back(span->central_free.pop());
        span->allocated += 1;
        if (span->central_free.empty())
            c.nonempty.pop_back();
    }
    return out;
}

void NodeHeap::reclaim(Span* span) {
    map_->deregister_span(span->extent);
    provider_->release_pages(span->extent);
    untrack(span);
    delete span;
}

void NodeHeap::return_blocks(int cls, std::span<void* const> blocks) {
    Central& c = central_[cls];
    std::lock_guard lock(c.mu);
    for (void* b : blocks) {
        auto* span = static_cast<Span*>(map_->lookup(b));
        if (!span || span->kind != Span::Kind::kSmall)
            throw StateError("return_blocks: address is not a small block");
        if (span->node() != node_)
            throw StateError("return_blocks: block belongs to node " +
                             std::to_string(span->node()) + ", not node " +
                             std::to_string(node_));
        if (span->size_class != cls)
            throw StateError("return_blocks: block belongs to another size class");
        if (!span->block_aligned(b))
            throw StateError("return_blocks: pointer is not a block start");
        if (span->central_free.empty())
            c.nonempty.push_back(span);
        span->central_free.push(b);
        span->allocated -= 1;
        if (span->allocated == 0 && span->central_free.size() == span->num_blocks) {
            std::erase(c.nonempty, span);
            reclaim(span);
        }
    }
}

Span* NodeHeap::allocate_large(std::size_t bytes) {
    if (bytes <= SizeClassTable::kLargeThreshold)
        throw StateError("allocate_large: size is on the small path");
    std::size_t page = provider_->page_size();
    std::size_t pages = (bytes + page - 1) / page;
    Span* span = nullptr;
    {
        std::lock_guard lock(large_mu_);
        auto it = large_reuse_.find(pages);
        if (it != large_reuse_.end() && !it->second.empty()) {
            span = it->second.back();
            it->second.pop_back();
            large_reuse_spans_ -= 1;
            large_reuse_bytes_ -= span->extent.size_bytes(page);
            large_reuse_hits_ += 1;
        }
    }
    if (!span) {
        PageExtent extent = provider_->allocate_pages(pages, node_);
        span = new Span();
        span->extent = extent;
        span->kind = Span::Kind::kLarge;
        map_->register_span(extent, span);
        track(span);
    }
    span->large_live.store(true);
    return span;
}

void NodeHeap::free_large(Span* span) {
    if (span->kind != Span::Kind::kLarge || span->node() != node_)
        throw StateError("free_large: span does not belong to this node's large path");
    if (!span->large_live.exchange(false))
        throw StateError("free_large: double free of large block");
    std::size_t bytes = span->extent.size_bytes(provider_->page_size());
    {
        std::lock_guard lock(large_mu_);
        if (large_reuse_spans_ < kLargeReuseMaxSpans &&
            large_reuse_bytes_ + bytes <= kLargeReuseMaxBytes) {
            large_reuse_[span->extent.num_pages].push_back(span);
            large_reuse_spans_ += 1;
            large_reuse_bytes_ += bytes;
            return;
        }
    }
    reclaim(span);
}

NodeHeapStats NodeHeap::stats() const {
    NodeHeapStats st;
    std::lock_guard lock(spans_mu_);
    st.live_spans = all_spans_.size();
    for (const Span* s : all_spans_)
        st.reserved_bytes += s->extent.size_bytes(provider_->page_size());
    st.spans_created = spans_created_;
    st.spans_reclaimed = spans_reclaimed_;
    st.large_reuse_hits = large_reuse_hits_;
    for (const Central& c : central_)
        st.central_fetch_calls += c.fetch_calls;
    return st;
}

} // namespace psm
