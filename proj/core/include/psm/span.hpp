#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

#include "psm/free_list.hpp"
#include "psm/page_provider.hpp"

namespace psm {

// A run of pages managed as a unit: either carved into equal blocks of one
// size class, or dedicated to a single large object.
struct Span {
    enum class Kind { kSmall, kLarge };

    PageExtent extent;
    Kind kind;
    int size_class = -1;          // kSmall only
    std::size_t block_size = 0;   // kSmall only
    std::size_t num_blocks = 0;   // kSmall only

    FreeList central_free;        // blocks parked in the central list
    std::size_t allocated = 0;    // blocks handed out of the central list

    // Caller-visible liveness, for double-free detection. Small spans use a
    // per-block atomic bitmap; large spans a single flag.
    std::vector<std::atomic<std::uint64_t>> live_bits;
    std::atomic<bool> large_live{false};

    int node() const { return extent.node; }

    std::size_t block_index(const void* block) const {
        return static_cast<std::size_t>(static_cast<const std::byte*>(block) -
                                        extent.base) /
               block_size;
    }

    void* block_at(std::size_t i) const { return extent.base + i * block_size; }

    bool block_aligned(const void* p) const {
        return (static_cast<const std::byte*>(p) - extent.base) % block_size == 0;
    }

    void init_live_bits() { live_bits = std::vector<std::atomic<std::uint64_t>>((num_blocks + 63) / 64); }

    // Returns previous liveness of the block.
    bool mark_live(const void* block) {
        std::size_t i = block_index(block);
        std::uint64_t mask = std::uint64_t{1} << (i % 64);
        return (live_bits[i / 64].fetch_or(mask) & mask) != 0;
    }

    bool clear_live(const void* block) {
        std::size_t i = block_index(block);
        std::uint64_t mask = std::uint64_t{1} << (i % 64);
        return (live_bits[i / 64].fetch_and(~mask) & mask) != 0;
    }

    bool is_live(const void* block) const {
        std::size_t i = block_index(block);
        return (live_bits[i / 64].load() >> (i % 64)) & 1;
    }
};

} // namespace psm
