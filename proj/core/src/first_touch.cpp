#include "psm/first_touch.hpp"

#include <cstring>

#include "psm/errors.hpp"

namespace psm {

FirstTouchAllocator::FirstTouchAllocator(const NumaTopology& topo,
                                         std::size_t page_size)
    : topo_(topo), registry_(topo_), provider_(topo_, page_size) {}

void* FirstTouchAllocator::ft_alloc(std::size_t bytes, int tid) {
    if (!registry_.is_registered(tid))
        throw StateError("ft_alloc: thread " + std::to_string(tid) +
                         " is not registered");
    std::size_t page = provider_.page_size();
    std::size_t pages = bytes == 0 ? 1 : (bytes + page - 1) / page;
    PageExtent extent = provider_.allocate_pages_unbound(pages);
    std::lock_guard lock(mu_);
    live_.emplace(reinterpret_cast<std::uintptr_t>(extent.base), extent);
    return extent.base;
}

void FirstTouchAllocator::ft_write(void* addr, std::size_t len, int tid) {
    int node = registry_.node_of(tid);
    std::size_t page = provider_.page_size();
    auto a = reinterpret_cast<std::uintptr_t>(addr);
    std::uintptr_t first_page = a & ~(page - 1);
    std::uintptr_t last = a + (len == 0 ? 0 : len - 1);
    {
        std::lock_guard lock(mu_);
        auto it = live_.upper_bound(a);
        if (it == live_.begin())
            throw StateError("ft_write: address not in a live allocation");
        --it;
        const PageExtent& e = it->second;
        auto end = it->first + e.num_pages * page;
        if (a < it->first || last >= end)
            throw StateError("ft_write: range not in a live allocation");
        for (std::uintptr_t p = first_page; p <= last; p += page) {
            provider_.bind_page(reinterpret_cast<void*>(p), node);
            write_log_.push_back({reinterpret_cast<void*>(p), tid, node});
        }
    }
    std::memset(addr, '1', len);
}

void FirstTouchAllocator::ft_free(void* addr) {
    std::lock_guard lock(mu_);
    auto it = live_.find(reinterpret_cast<std::uintptr_t>(addr));
    if (it == live_.end())
        throw StateError("ft_free: unknown address or double free");
    provider_.release_pages(it->second);
    live_.erase(it);
}

std::vector<FirstTouchAllocator::WriteEvent> FirstTouchAllocator::write_log() const {
    std::lock_guard lock(mu_);
    return write_log_;
}

} // namespace psm
