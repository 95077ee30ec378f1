#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <vector>

#include "psm/page_provider.hpp"

namespace psm {

// Two-level radix map: page number -> owning span metadata.  Lookups are
// two indexed dereferences and wait-free; registration takes the map mutex.
// Low 15 bits of the page number index the leaf, the rest index the root
// (covers a 48-bit address space at any supported page size).
class PageMap {
public:
    static constexpr int kLeafBits = 15;
    static constexpr std::size_t kLeafLength = std::size_t{1} << kLeafBits;
    static constexpr int kAddressBits = 48;

    explicit PageMap(std::size_t page_size);
    ~PageMap();

    PageMap(const PageMap&) = delete;
    PageMap& operator=(const PageMap&) = delete;

    // Map every page of extent to span. StateError if any page is taken.
    void register_span(const PageExtent& extent, void* span);

    // Unmap every page of extent; StateError unless all pages map to one span.
    void deregister_span(const PageExtent& extent);

    // Span covering addr's page, or nullptr.
    void* lookup(const void* addr) const;

private:
    struct Leaf {
        std::atomic<void*> slots[kLeafLength];
        Leaf() {
            for (auto& s : slots) s.store(nullptr, std::memory_order_relaxed);
        }
    };

    std::uintptr_t page_number(const void* addr) const {
        return reinterpret_cast<std::uintptr_t>(addr) >> page_shift_;
    }

    int page_shift_;
    std::vector<std::atomic<Leaf*>> root_;
    std::mutex mutate_mu_;
};

} // namespace psm
