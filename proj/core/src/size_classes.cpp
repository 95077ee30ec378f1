#include "psm/size_classes.hpp"

#include <algorithm>

#include "psm/errors.hpp"

namespace psm {

namespace {

// Smallest page count whose span carves into blocks with rounding waste
// <= 12.5% (and holds at least one block).
std::size_t pick_pages_per_span(std::size_t block_size, std::size_t page_size) {
    std::size_t min_pages = (block_size + page_size - 1) / page_size;
    for (std::size_t p = std::max<std::size_t>(min_pages, 1);; ++p) {
        std::size_t span = p * page_size;
        std::size_t waste = span % block_size;
        if (waste * 8 <= span)
            return p;
    }
}

std::size_t pick_batch_size(std::size_t block_size) {
    std::size_t b = (65536 + block_size - 1) / block_size;
    return std::min<std::size_t>(b, 32);
}

} // namespace

SizeClassTable SizeClassTable::build(std::size_t page_size) {
    if (page_size != 4096 && page_size != 65536 && page_size != 2097152)
        throw ConfigError("unsupported page size " + std::to_string(page_size));

    std::vector<std::size_t> sizes;
    for (std::size_t s = 8; s <= 128; s += 8) sizes.push_back(s);
    for (std::size_t s = 144; s <= 512; s += 16) sizes.push_back(s);
    std::size_t s = 512;
    while (s < kLargeThreshold) {
        // Round the 1.125 step *down* to a multiple of 8 so every request
        // keeps block_size <= 1.125 * request; always advance by >= 8.
        std::size_t next = (s + s / 8) / 8 * 8;
        s = std::max(next, s + 8);
        if (s >= kLargeThreshold) s = kLargeThreshold;
        sizes.push_back(s);
    }

    SizeClassTable table;
    table.page_size_ = page_size;
    table.classes_.reserve(sizes.size());
    for (std::size_t bs : sizes)
        table.classes_.push_back(
            {bs, pick_pages_per_span(bs, page_size), pick_batch_size(bs)});
    return table;
}

int SizeClassTable::class_for_size(std::size_t s) const {
    if (s > kLargeThreshold)
        return kLarge;
    auto it = std::lower_bound(classes_.begin(), classes_.end(), s,
                               [](const SizeClass& c, std::size_t v) {
                                   return c.block_size < v;
                               });
    return static_cast<int>(it - classes_.begin());
}

std::size_t SizeClassTable::block_size_for(std::size_t s) const {
    int cls = class_for_size(s);
    if (cls == kLarge)
        throw StateError("block_size_for: size is on the large path");
    return classes_[cls].block_size;
}

double fragmentation_rate(std::size_t data_size, std::size_t page_size) {
    std::size_t reserved = (data_size + page_size - 1) / page_size * page_size;
    return 100.0 * static_cast<double>(reserved - data_size) /
           static_cast<double>(reserved);
}

} // namespace psm
