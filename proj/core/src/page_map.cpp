#include "psm/page_map.hpp"

#include <bit>

#include "psm/errors.hpp"

namespace psm {

PageMap::PageMap(std::size_t page_size) {
    if (page_size == 0 || (page_size & (page_size - 1)) != 0)
        throw ConfigError("page size must be a power of two");
    page_shift_ = std::countr_zero(page_size);
    std::size_t root_len = std::size_t{1} << (kAddressBits - page_shift_ - kLeafBits);
    root_ = std::vector<std::atomic<Leaf*>>(root_len);
    for (auto& r : root_) r.store(nullptr, std::memory_order_relaxed);
}

PageMap::~PageMap() {
    for (auto& r : root_)
        delete r.load(std::memory_order_relaxed);
}

void PageMap::register_span(const PageExtent& extent, void* span) {
    std::lock_guard lock(mutate_mu_);
    std::uintptr_t first = page_number(extent.base);
    // Pass 1: every slot must be empty.
    for (std::size_t i = 0; i < extent.num_pages; ++i) {
        std::uintptr_t pn = first + i;
        Leaf* leaf = root_[pn >> kLeafBits].load(std::memory_order_relaxed);
        if (leaf && leaf->slots[pn & (kLeafLength - 1)].load(std::memory_order_relaxed))
            throw StateError("register_span: page already registered");
    }
    for (std::size_t i = 0; i < extent.num_pages; ++i) {
        std::uintptr_t pn = first + i;
        auto& slot = root_[pn >> kLeafBits];
        Leaf* leaf = slot.load(std::memory_order_acquire);
        if (!leaf) {
            leaf = new Leaf();
            slot.store(leaf, std::memory_order_release);
        }
        leaf->slots[pn & (kLeafLength - 1)].store(span, std::memory_order_release);
    }
}

void PageMap::deregister_span(const PageExtent& extent) {
    std::lock_guard lock(mutate_mu_);
    std::uintptr_t first = page_number(extent.base);
    void* expected = nullptr;
    for (std::size_t i = 0; i < extent.num_pages; ++i) {
        std::uintptr_t pn = first + i;
        Leaf* leaf = root_[pn >> kLeafBits].load(std::memory_order_relaxed);
        void* cur =
            leaf ? leaf->slots[pn & (kLeafLength - 1)].load(std::memory_order_relaxed)
                 : nullptr;
        if (!cur)
            throw StateError("deregister_span: page not registered");
        if (i == 0)
            expected = cur;
        else if (cur != expected)
            throw StateError("deregister_span: extent spans multiple registrations");
    }
    for (std::size_t i = 0; i < extent.num_pages; ++i) {
        std::uintptr_t pn = first + i;
        Leaf* leaf = root_[pn >> kLeafBits].load(std::memory_order_relaxed);
        leaf->slots[pn & (kLeafLength - 1)].store(nullptr, std::memory_order_release);
    }
}

void* PageMap::lookup(const void* addr) const {
    std::uintptr_t pn = page_number(addr);
    std::size_t ri = pn >> kLeafBits;
    if (ri >= root_.size())
        return nullptr;
    Leaf* leaf = root_[ri].load(std::memory_order_acquire);
    if (!leaf)
        return nullptr;
    return leaf->slots[pn & (kLeafLength - 1)].load(std::memory_order_acquire);
}

} // namespace psm
