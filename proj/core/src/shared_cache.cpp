#include "psm/shared_cache.hpp"

#include <algorithm>

#include "psm/errors.hpp"

namespace psm {

SharedCacheAllocator::SharedCacheAllocator(const NumaTopology& topo,
                                           std::size_t page_size)
    : topo_(topo), registry_(topo_), provider_(topo_, page_size),
      table_(SizeClassTable::build(page_size)), map_(page_size) {
    for (std::size_t c = 0; c < table_.num_classes(); ++c)
        central_.push_back(std::make_unique<Central>());
    for (int c = 0; c < topo_.total_cores(); ++c) {
        auto cl = std::make_unique<CoreLists>();
        cl->lists.resize(table_.num_classes());
        caches_.push_back(std::move(cl));
    }
}

SharedCacheAllocator::~SharedCacheAllocator() {
    for (Span* s : all_spans_) {
        map_.deregister_span(s->extent);
        provider_.release_pages(s->extent);
        delete s;
    }
}

int SharedCacheAllocator::next_node() {
    std::vector<int> nodes = registry_.active_nodes();
    if (nodes.empty())
        throw StateError("shared-cache: no threads registered");
    return nodes[rr_counter_.fetch_add(1) % nodes.size()];
}

Span* SharedCacheAllocator::carve_span(int cls) {
    const SizeClass& sc = table_.at(cls);
    PageExtent extent = provider_.allocate_pages(sc.pages_per_span, next_node());
    auto* span = new Span();
    span->extent = extent;
    span->kind = Span::Kind::kSmall;
    span->size_class = cls;
    span->block_size = sc.block_size;
    span->num_blocks = extent.size_bytes(provider_.page_size()) / sc.block_size;
    span->init_live_bits();
    for (std::size_t i = span->num_blocks; i-- > 0;)
        span->central_free.push(span->block_at(i));
    map_.register_span(extent, span);
    std::lock_guard lock(spans_mu_);
    all_spans_.push_back(span);
    return span;
}

std::vector<void*> SharedCacheAllocator::central_fetch(int cls, std::size_t k) {
    Central& c = *central_[cls];
    std::lock_guard lock(c.mu);
    std::vector<void*> out;
    out.reserve(k);
    while (out.size() < k) {
        if (c.nonempty.empty()) {
            if (!out.empty())
                break;
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

void SharedCacheAllocator::reclaim(Span* span) {
    map_.deregister_span(span->extent);
    provider_.release_pages(span->extent);
    {
        std::lock_guard lock(spans_mu_);
        std::erase(all_spans_, span);
    }
    delete span;
}

void SharedCacheAllocator::central_return(int cls, const std::vector<void*>& blocks) {
    Central& c = *central_[cls];
    std::lock_guard lock(c.mu);
    for (void* b : blocks) {
        auto* span = static_cast<Span*>(map_.lookup(b));
        if (!span || span->kind != Span::Kind::kSmall || span->size_class != cls)
            throw StateError("shared-cache: bad block returned to central list");
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

void* SharedCacheAllocator::sc_alloc(std::size_t bytes, int tid) {
    int core = registry_.core_of(tid);
    int cls = table_.class_for_size(bytes);
    if (cls == SizeClassTable::kLarge) {
        std::size_t page = provider_.page_size();
        std::size_t pages = (bytes + page - 1) / page;
        Span* span = nullptr;
        {
            std::lock_guard lock(large_mu_);
            auto it = large_reuse_.find(pages);
            if (it != large_reuse_.end() && !it->second.empty()) {
                span = it->second.back();
                it->second.pop_back();
                large_reuse_spans_ -= 1;
            }
        }
        if (!span) {
            PageExtent extent = provider_.allocate_pages(pages, next_node());
            span = new Span();
            span->extent = extent;
            span->kind = Span::Kind::kLarge;
            map_.register_span(extent, span);
            std::lock_guard lock(spans_mu_);
            all_spans_.push_back(span);
        }
        span->large_live.store(true);
        return span->extent.base;
    }
    CoreLists& cache = *caches_[core];
    const SizeClass& sc = table_.at(cls);
    std::lock_guard lock(cache.mu);
    FreeList& list = cache.lists[cls];
    if (list.empty())
        for (void* b : central_fetch(cls, sc.batch_size)) list.push(b);
    void* block = list.pop();
    static_cast<Span*>(map_.lookup(block))->mark_live(block);
    return block;
}

void SharedCacheAllocator::sc_free(void* p, int tid) {
    auto* span = static_cast<Span*>(map_.lookup(p));
    if (!span)
        throw StateError("sc_free: unknown address");
    if (span->kind == Span::Kind::kLarge) {
        if (p != span->extent.base)
            throw StateError("sc_free: pointer is not the start of the block");
        if (!span->large_live.exchange(false))
            throw StateError("sc_free: double free");
        std::lock_guard lock(large_mu_);
        large_reuse_[span->extent.num_pages].push_back(span);
        large_reuse_spans_ += 1;
        return;
    }
    if (!span->block_aligned(p))
        throw StateError("sc_free: pointer is not the start of the block");
    if (!span->clear_live(p))
        throw StateError("sc_free: double free (block is not live)");
    int cls = span->size_class;
    const SizeClass& sc = table_.at(cls);
    if (!registry_.is_registered(tid)) {
        central_return(cls, {p});
        return;
    }
    CoreLists& cache = *caches_[registry_.core_of(tid)];
    std::lock_guard lock(cache.mu);
    cache.lists[cls].push(p); // no node check: remote blocks are cached
    if (cache.lists[cls].size() > 2 * sc.batch_size) {
        std::vector<void*> out;
        for (std::size_t i = 0; i < sc.batch_size; ++i)
            out.push_back(cache.lists[cls].pop());
        central_return(cls, out);
    }
}

} // namespace psm
