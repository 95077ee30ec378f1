#pragma once

#include <cstddef>
#include <vector>

namespace psm {

struct SizeClass {
    std::size_t block_size;     // bytes, multiple of 8
    std::size_t pages_per_span; // span geometry for this class
    std::size_t batch_size;     // blocks moved per central-list round trip
};

// Segregated-storage table: 8-byte steps to 128, 16-byte steps to 512, then
// geometric with ratio <= 1.125, capped at the 256 KiB large threshold.
class SizeClassTable {
public:
    static constexpr std::size_t kLargeThreshold = 262144;
    static constexpr int kLarge = -1; // class_for_size result for s > threshold

    // page_size must be one of 4096, 65536, 2097152 (ConfigError otherwise).
    static SizeClassTable build(std::size_t page_size);

    std::size_t page_size() const { return page_size_; }
    std::size_t num_classes() const { return classes_.size(); }
    const SizeClass& at(int cls) const { return classes_[cls]; }
    const std::vector<SizeClass>& classes() const { return classes_; }

    // Smallest class with block_size >= s; kLarge when s > threshold.
    // s = 0 maps to the smallest class.
    int class_for_size(std::size_t s) const;

    std::size_t block_size_for(std::size_t s) const; // convenience, s <= threshold

private:
    SizeClassTable() = default;
    std::size_t page_size_ = 0;
    std::vector<SizeClass> classes_;
};

// Page-granular waste for a data block of the given size, in percent:
// (ceil(d/p)*p - d) / (ceil(d/p)*p) * 100.
double fragmentation_rate(std::size_t data_size, std::size_t page_size);

} // namespace psm
