#include "psm/core_cache.hpp"

#include "psm/errors.hpp"
#include "psm/span.hpp"

namespace psm {

CoreCache::CoreCache(int core, int node, const SizeClassTable& table,
                     NodeHeap& heap, PageMap& map)
    : core_(core), node_(node), table_(&table), heap_(&heap), map_(&map),
      lists_(table.num_classes()) {}

void* CoreCache::alloc(int cls) {
    std::lock_guard lock(mu_);
    FreeList& list = lists_[cls];
    const SizeClass& sc = table_->at(cls);
    if (list.empty()) {
        stats_.misses += 1;
        for (void* b : heap_->fetch_blocks(cls, sc.batch_size)) {
            list.push(b);
            cached_bytes_ += sc.block_size;
        }
    } else {
        stats_.hits += 1;
    }
    cached_bytes_ -= sc.block_size;
    return list.pop();
}

void CoreCache::flush(int cls, std::size_t n) {
    FreeList& list = lists_[cls];
    const SizeClass& sc = table_->at(cls);
    std::vector<void*> out;
    out.reserve(n);
    while (!list.empty() && out.size() < n) {
        out.push_back(list.pop());
        cached_bytes_ -= sc.block_size;
    }
    if (!out.empty()) {
        stats_.flushes += 1;
        heap_->return_blocks(cls, out);
    }
}

void CoreCache::free(int cls, void* block) {
    std::lock_guard lock(mu_);
    auto* span = static_cast<Span*>(map_->lookup(block));
    if (!span || span->kind != Span::Kind::kSmall)
        throw StateError("core cache free: address is not a small block");
    if (span->node() != node_)
        throw StateError("core cache free: remote block (node " +
                         std::to_string(span->node()) + " vs cache node " +
                         std::to_string(node_) + ")");
    if (span->size_class != cls)
        throw StateError("core cache free: wrong size class");
    const SizeClass& sc = table_->at(cls);
    lists_[cls].push(block);
    cached_bytes_ += sc.block_size;
    if (lists_[cls].size() > 2 * sc.batch_size)
        flush(cls, sc.batch_size);
    if (cached_bytes_ > kCacheCapBytes) {
        // Overflow: shed the largest lists until back under the cap.
        for (std::size_t c = 0; c < lists_.size() && cached_bytes_ > kCacheCapBytes;
             ++c)
            flush(static_cast<int>(c), lists_[c].size());
    }
}

CoreCacheStats CoreCache::stats() const {
    std::lock_guard lock(mu_);
    CoreCacheStats st = stats_;
    st.cached_bytes = cached_bytes_;
    return st;
}

} // namespace psm
