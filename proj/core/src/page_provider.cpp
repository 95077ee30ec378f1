#include "psm/page_provider.hpp"

#include <sys/mman.h>

#include <cstring>
#include <numeric>

#include "psm/errors.hpp"

namespace psm {

std::size_t ProviderStats::pages_live_total() const {
    return std::accumulate(pages_live_per_node.begin(), pages_live_per_node.end(),
                           pages_live_unbound);
}

PageProvider::PageProvider(const NumaTopology& topo, std::size_t page_size,
                           std::size_t per_node_capacity_pages)
    : topo_(&topo), page_size_(page_size), per_node_capacity_(per_node_capacity_pages) {
    if (page_size_ == 0 || (page_size_ & (page_size_ - 1)) != 0)
        throw ConfigError("page size must be a power of two");
    stats_.pages_live_per_node.assign(topo.num_nodes(), 0);
}

PageProvider::~PageProvider() {
    for (const auto& [base, rec] : extents_)
        ::munmap(reinterpret_cast<void*>(base), rec.num_pages * page_size_);
}

void* PageProvider::map_aligned(std::size_t bytes) {
    // mmap only guarantees host-page alignment; over-map and trim for the
    // 64K / 2M simulated page sizes.
    std::size_t slack = page_size_ > 4096 ? page_size_ : 0;
    void* raw = ::mmap(nullptr, bytes + slack, PROT_READ | PROT_WRITE,
                       MAP_PRIVATE | MAP_ANONYMOUS, -1, 0);
    if (raw == MAP_FAILED)
        throw std::bad_alloc();
    if (slack == 0)
        return raw;
    auto addr = reinterpret_cast<std::uintptr_t>(raw);
    std::uintptr_t aligned = (addr + page_size_ - 1) & ~(page_size_ - 1);
    if (aligned > addr)
        ::munmap(raw, aligned - addr);
    std::size_t tail = addr + slack - aligned;
    if (tail > 0)
        ::munmap(reinterpret_cast<void*>(aligned + bytes), tail);
    return reinterpret_cast<void*>(aligned);
}

PageExtent PageProvider::allocate_impl(std::size_t n, int node) {
    if (n < 1)
        throw ConfigError("allocate_pages: n must be >= 1");
    std::unique_lock lock(mu_);
    if (node != kUnbound && per_node_capacity_ != kUnlimited &&
        stats_.pages_live_per_node[node] + n > per_node_capacity_)
        throw CapacityError("node " + std::to_string(node) +
                            " capacity exhausted (" +
                            std::to_string(per_node_capacity_) + " pages)");
    void* mem = map_aligned(n * page_size_);
    ExtentRec rec{n, node, {}};
    if (node == kUnbound) {
        rec.per_page.assign(n, kUnbound);
        stats_.pages_live_unbound += n;
    } else {
        stats_.pages_live_per_node[node] += n;
    }
    extents_.emplace(reinterpret_cast<std::uintptr_t>(mem), std::move(rec));
    stats_.pages_total_allocated += n;
    stats_.allocation_calls += 1;
    return PageExtent{static_cast<std::byte*>(mem), n, node};
}

PageExtent PageProvider::allocate_pages(std::size_t n, int node) {
    if (node < 0 || node >= topo_->num_nodes())
        throw std::out_of_range("allocate_pages: node " + std::to_string(node) +
                                " out of range");
    return allocate_impl(n, node);
}

PageExtent PageProvider::allocate_pages_unbound(std::size_t n) {
    return allocate_impl(n, kUnbound);
}

void PageProvider::bind_page(const void* addr, int node) {
    if (node < 0 || node >= topo_->num_nodes())
        throw std::out_of_range("bind_page: node out of range");
    std::unique_lock lock(mu_);
    auto a = reinterpret_cast<std::uintptr_t>(addr);
    auto it = extents_.upper_bound(a);
    if (it == extents_.begin())
        throw StateError("bind_page: address not in any live extent");
    --it;
    auto& [base, rec] = *it;
    if (a >= base + rec.num_pages * page_size_)
        throw StateError("bind_page: address not in any live extent");
    if (rec.per_page.empty())
        return; // uniformly bound extent, binding is immutable
    std::size_t idx = (a - base) / page_size_;
    if (rec.per_page[idx] != kUnbound)
        return; // first touch wins
    rec.per_page[idx] = node;
    stats_.pages_live_unbound -= 1;
    stats_.pages_live_per_node[node] += 1;
}

void PageProvider::release_pages(const PageExtent& extent) {
    std::unique_lock lock(mu_);
    auto it = extents_.find(reinterpret_cast<std::uintptr_t>(extent.base));
    if (it == extents_.end() || it->second.num_pages != extent.num_pages)
        throw StateError("release_pages: extent is not live (double release?)");
    const ExtentRec& rec = it->second;
    if (rec.per_page.empty()) {
        stats_.pages_live_per_node[rec.node] -= rec.num_pages;
    } else {
        for (int n : rec.per_page) {
            if (n == kUnbound)
                stats_.pages_live_unbound -= 1;
            else
                stats_.pages_live_per_node[n] -= 1;
        }
    }
    ::munmap(extent.base, rec.num_pages * page_size_);
    extents_.erase(it);
}

std::optional<int> PageProvider::node_of_page(const void* addr) const {
    std::shared_lock lock(mu_);
    auto a = reinterpret_cast<std::uintptr_t>(addr);
    auto it = extents_.upper_bound(a);
    if (it == extents_.begin())
        return std::nullopt;
    --it;
    const auto& [base, rec] = *it;
    if (a >= base + rec.num_pages * page_size_)
        return std::nullopt;
    if (rec.per_page.empty())
        return rec.node;
    return rec.per_page[(a - base) / page_size_];
}

ProviderStats PageProvider::stats() const {
    std::shared_lock lock(mu_);
    return stats_;
}

} // namespace psm
