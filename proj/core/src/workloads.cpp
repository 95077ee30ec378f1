#include "psm/workloads.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <set>
#include <thread>
#include <unordered_map>

#include "psm/errors.hpp"
#include "psm/first_touch.hpp"
#include "psm/psm_heap.hpp"
#include "psm/shared_cache.hpp"

namespace psm {

AllocatorKind allocator_kind_from_name(const std::string& name) {
    if (name == "psm") return AllocatorKind::kPsm;
    if (name == "first-touch") return AllocatorKind::kFirstTouch;
    if (name == "shared-cache") return AllocatorKind::kSharedCache;
    throw ConfigError("unknown allocator '" + name +
                      "' (expected psm, first-touch or shared-cache)");
}

std::string allocator_kind_name(AllocatorKind kind) {
    switch (kind) {
    case AllocatorKind::kPsm: return "psm";
    case AllocatorKind::kFirstTouch: return "first-touch";
    case AllocatorKind::kSharedCache: return "shared-cache";
    }
    return "?";
}

namespace {

// Uniform driver over the three allocators.  Frees always carry an explicit
// caller tid so threaded and deterministic executions share one code path.
class Workbench {
public:
    Workbench(AllocatorKind kind, const NumaTopology& topo, std::size_t page_size)
        : kind_(kind), page_size_(page_size) {
        switch (kind) {
        case AllocatorKind::kPsm:
            psm_ = std::make_unique<PsmHeap>(topo, page_size);
            break;
        case AllocatorKind::kFirstTouch:
            ft_ = std::make_unique<FirstTouchAllocator>(topo, page_size);
            break;
        case AllocatorKind::kSharedCache:
            sc_ = std::make_unique<SharedCacheAllocator>(topo, page_size);
            break;
        }
    }

    AllocatorKind kind() const { return kind_; }
    std::size_t page_size() const { return page_size_; }
    PsmHeap* psm() { return psm_.get(); }

    void register_thread(int tid, int core) {
        if (psm_) psm_->registry().register_thread(tid, core);
        if (ft_) ft_->register_thread(tid, core);
        if (sc_) sc_->register_thread(tid, core);
    }

    void* alloc(std::size_t bytes, int tid) {
        if (psm_) return psm_->psm_alloc(bytes, tid);
        if (ft_) return ft_->ft_alloc(bytes, tid);
        return sc_->sc_alloc(bytes, tid);
    }

    void free_block(void* p, int tid) {
        if (psm_) { psm_->psm_free_as(p, tid); return; }
        if (ft_) { ft_->ft_free(p); return; }
        sc_->sc_free(p, tid);
    }

    // Writes the block: either a full memset or one byte per page.  For the
    // first-touch allocator this is what binds the pages to tid's node.
    void touch(void* p, std::size_t len, int tid, bool full) {
        if (ft_) {
            if (full) {
                ft_->ft_write(p, len, tid);
            } else {
                auto* base = static_cast<std::byte*>(p);
                for (std::size_t off = 0; off < len; off += page_size_)
                    ft_->ft_write(base + off, std::min<std::size_t>(8, len - off),
                                  tid);
            }
            return;
        }
        if (full) {
            std::memset(p, '1', len);
        } else {
            auto* base = static_cast<volatile char*>(p);
            for (std::size_t off = 0; off < len; off += page_size_)
                base[off] = '1';
        }
    }

    std::optional<int> page_node(const void* p) const {
        if (psm_) return psm_->provider().node_of_page(p);
        if (ft_) return ft_->node_of_page(p);
        return sc_->node_of_page(p);
    }

    // Usable bytes actually reserved for a request, for oracle bookkeeping.
    std::size_t usable_size(std::size_t bytes) const {
        if (ft_)
            return std::max<std::size_t>(
                (bytes + page_size_ - 1) / page_size_ * page_size_, page_size_);
        const SizeClassTable& t = psm_ ? psm_->size_classes() : sc_->size_classes();
        int cls = t.class_for_size(bytes);
        if (cls == SizeClassTable::kLarge)
            return (bytes + page_size_ - 1) / page_size_ * page_size_;
        return t.at(cls).block_size;
    }

private:
    AllocatorKind kind_;
    std::size_t page_size_;
    std::unique_ptr<PsmHeap> psm_;
    std::unique_ptr<FirstTouchAllocator> ft_;
    std::unique_ptr<SharedCacheAllocator> sc_;
};

std::size_t pages_covering(const void* p, std::size_t len, std::size_t page) {
    auto a = reinterpret_cast<std::uintptr_t>(p);
    std::uintptr_t first = a / page;
    std::uintptr_t last = (a + len - 1) / page;
    return last - first + 1;
}

} // namespace

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

std::size_t VerifyResult::max_remote() const {
    return remote_per_rep.empty()
               ? 0
               : *std::max_element(remote_per_rep.begin(), remote_per_rep.end());
}

std::size_t VerifyResult::median_remote() const {
    if (remote_per_rep.empty()) return 0;
    std::vector<std::size_t> v = remote_per_rep;
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

VerifyResult run_verify(const VerifyConfig& cfg) {
    if (cfg.threads < 1 || cfg.threads > cfg.topology.total_cores())
        throw ConfigError("verify: threads must be in [1, total cores]");
    if (cfg.reps < 1 || cfg.blocks_per_thread < 1 || cfg.block_bytes < 1)
        throw ConfigError("verify: reps, blocks and block size must be >= 1");

    auto t0 = std::chrono::steady_clock::now();
    Workbench wb(cfg.allocator, cfg.topology, cfg.page_size);
    const int T = cfg.threads;
    const std::size_t B = cfg.blocks_per_thread;
    for (int tid = 0; tid < T; ++tid)
        wb.register_thread(tid, tid); // compact affinity: tid == core

    std::vector<std::vector<void*>> blocks(T, std::vector<void*>(B, nullptr));
    const int rounds = cfg.reps + 1; // round 0 is warm-up

    VerifyResult res;
    res.remote_per_rep.assign(cfg.reps, 0);

    auto owner_node = [&](int tid) { return cfg.topology.node_of_core(tid); };

    auto alloc_phase = [&](int tid) {
        for (std::size_t i = 0; i < B; ++i) {
            blocks[tid][i] = wb.alloc(cfg.block_bytes, tid);
            wb.touch(blocks[tid][i], cfg.block_bytes, tid, cfg.touch_full);
        }
    };
    auto count_remote = [&](int tid) {
        std::size_t remote = 0;
        int node = owner_node(tid);
        for (std::size_t i = 0; i < B; ++i) {
            auto* base = static_cast<std::byte*>(blocks[tid][i]);
            auto a = reinterpret_cast<std::uintptr_t>(base);
            std::uintptr_t first = a / cfg.page_size * cfg.page_size;
            std::uintptr_t last = a + cfg.block_bytes - 1;
            for (std::uintptr_t p = first; p <= last; p += cfg.page_size) {
                auto n = wb.page_node(reinterpret_cast<void*>(p));
                if (!n || *n != node) remote += 1;
            }
        }
        return remote;
    };
    auto free_phase = [&](int tid) {
        int left = (tid - 1 + T) % T;
        for (std::size_t i = 0; i < B; ++i)
            wb.free_block(blocks[left][i], tid);
    };

    res.pages_checked_per_rep =
        static_cast<std::size_t>(T) * B *
        pages_covering(nullptr, cfg.block_bytes, cfg.page_size);

    if (cfg.deterministic) {
        for (int r = 0; r < rounds; ++r) {
            for (int tid = 0; tid < T; ++tid) alloc_phase(tid);
            if (r > 0) {
                std::size_t remote = 0;
                for (int tid = 0; tid < T; ++tid) remote += count_remote(tid);
                res.remote_per_rep[r - 1] = remote;
            }
            for (int tid = 0; tid < T; ++tid) free_phase(tid);
        }
    } else {
        std::vector<std::atomic<std::size_t>> remote(cfg.reps);
        for (auto& a : remote) a.store(0);
        std::barrier bar(T);
        std::atomic<bool> aborted{false};
        std::vector<std::thread> workers;
        workers.reserve(T);
        for (int tid = 0; tid < T; ++tid) {
            workers.emplace_back([&, tid] {
                for (int r = 0; r < rounds && !aborted.load(); ++r) {
                    alloc_phase(tid);
                    bar.arrive_and_wait(); // allocations and writes visible
                    if (r > 0) remote[r - 1].fetch_add(count_remote(tid));
                    bar.arrive_and_wait(); // counting done before frees
                    free_phase(tid);
                    bar.arrive_and_wait(); // round fully drained
                }
            });
        }
        for (auto& w : workers) w.join();
        for (int r = 0; r < cfg.reps; ++r)
            res.remote_per_rep[r] = remote[r].load();
    }

    res.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return res;
}

// ---------------------------------------------------------------------------
// fragtable
// ---------------------------------------------------------------------------

std::vector<std::size_t> default_frag_sizes() { return {3200, 20000, 8000, 216000}; }
std::vector<std::size_t> default_frag_pages() { return {4096, 65536, 2097152}; }

FragGrid run_fragtable(const std::vector<std::size_t>& data_sizes,
                       const std::vector<std::size_t>& page_sizes) {
    if (data_sizes.empty() || page_sizes.empty())
        throw ConfigError("fragtable: size lists must be nonempty");
    FragGrid grid;
    grid.data_sizes = data_sizes;
    grid.page_sizes = page_sizes;
    grid.cells.reserve(data_sizes.size() * page_sizes.size());
    for (std::size_t p : page_sizes)
        for (std::size_t s : data_sizes)
            grid.cells.push_back(fragmentation_rate(s, p));
    return grid;
}

// ---------------------------------------------------------------------------
// stress
// ---------------------------------------------------------------------------

namespace {

struct StressOracle {
    struct Block {
        std::size_t usable;
        int owner_tid;
        int owner_node;
    };

    std::mutex mu;
    std::map<std::uintptr_t, Block> live;
    std::vector<std::uintptr_t> addrs;
    std::unordered_map<std::uintptr_t, std::pair<int, std::size_t>> page_refs;
    std::vector<std::uintptr_t> freed; // double-free injection candidates
    std::vector<std::string> violations;
    std::size_t first_violation_op = std::numeric_limits<std::size_t>::max();
    std::atomic<bool> failed{false};

    void report(std::size_t op, const std::string& msg) {
        std::lock_guard lock(mu);
        report_locked(op, msg);
    }
    void report_locked(std::size_t op, const std::string& msg) {
        violations.push_back("op " + std::to_string(op) + ": " + msg);
        first_violation_op = std::min(first_violation_op, op + 1);
        failed.store(true);
    }
};

std::size_t draw_size(std::mt19937_64& rng) {
    std::uint64_t r = rng() % 100;
    if (r < 90) return 1 + rng() % 4096;
    if (r < 99) return 4097 + rng() % (SizeClassTable::kLargeThreshold - 4096);
    return SizeClassTable::kLargeThreshold + 1 + rng() % 337855; // large path
}

} // namespace

StressResult run_stress(const StressConfig& cfg) {
    if (cfg.threads < 1 || cfg.threads > cfg.topology.total_cores())
        throw ConfigError("stress: threads must be in [1, total cores]");

    Workbench wb(cfg.allocator, cfg.topology, cfg.page_size);
    const int T = cfg.threads;
    for (int tid = 0; tid < T; ++tid) wb.register_thread(tid, tid);

    StressOracle oracle;
    std::atomic<std::size_t> small_allocs{0}, large_allocs{0},
        double_frees_detected{0}, ops_done{0};
    const bool check_locality = cfg.allocator == AllocatorKind::kPsm;
    const std::size_t page = cfg.page_size;

    auto do_alloc = [&](std::size_t op, int tid, std::mt19937_64& rng) {
        std::size_t bytes = draw_size(rng);
        void* p = nullptr;
        try {
            p = wb.alloc(bytes, tid);
        } catch (const std::exception& e) {
            oracle.report(op, std::string("alloc failed unexpectedly: ") + e.what());
            return;
        }
        std::size_t usable = wb.usable_size(bytes);
        if (bytes > SizeClassTable::kLargeThreshold)
            large_allocs.fetch_add(1);
        else
            small_allocs.fetch_add(1);
        int node = cfg.topology.node_of_core(tid);
        auto a = reinterpret_cast<std::uintptr_t>(p);

        // Alignment: page-aligned on the large/page paths, otherwise
        // min(largest power-of-two divisor of the block size, 16).
        std::size_t align;
        if (cfg.allocator == AllocatorKind::kFirstTouch ||
            bytes > SizeClassTable::kLargeThreshold)
            align = page;
        else
            align = std::min<std::size_t>(usable & (~usable + 1), 16);

        std::lock_guard lock(oracle.mu);
        if (a % align != 0)
            oracle.report_locked(op, "misaligned block");
        if (usable < bytes)
            oracle.report_locked(op, "short block (usable < requested)");
        auto next = oracle.live.upper_bound(a);
        if (next != oracle.live.end() && a + usable > next->first)
            oracle.report_locked(op, "block overlaps a live block above it");
        if (next != oracle.live.begin()) {
            auto prev = std::prev(next);
            if (prev->first + prev->second.usable > a)
                oracle.report_locked(op, "block overlaps a live block below it");
        }
        if (check_locality) {
            for (std::uintptr_t pg = a / page * page; pg < a + usable; pg += page) {
                auto n = wb.page_node(reinterpret_cast<void*>(pg));
                if (!n || *n != node) {
                    oracle.report_locked(op, "remote page served to local owner");
                    break;
                }
                auto [it, inserted] =
                    oracle.page_refs.try_emplace(pg, std::make_pair(node, 0u));
                if (!inserted && it->second.first != node) {
                    oracle.report_locked(op, "false page-sharing: one page, two nodes");
                    break;
                }
                it->second.second += 1;
            }
        }
        oracle.live.emplace(a, StressOracle::Block{usable, tid, node});
        oracle.addrs.push_back(a);
    };

    auto do_free = [&](std::size_t op, int tid, std::mt19937_64& rng) {
        std::uintptr_t victim = 0;
        std::size_t usable = 0;
        {
            std::lock_guard lock(oracle.mu);
            if (oracle.addrs.empty()) return;
            std::size_t i = rng() % oracle.addrs.size();
            victim = oracle.addrs[i];
            oracle.addrs[i] = oracle.addrs.back();
            oracle.addrs.pop_back();
            auto it = oracle.live.find(victim);
            usable = it->second.usable;
            oracle.live.erase(it);
            if (check_locality) {
                for (std::uintptr_t pg = victim / page * page; pg < victim + usable;
                     pg += page) {
                    auto it2 = oracle.page_refs.find(pg);
                    if (it2 != oracle.page_refs.end() && --it2->second.second == 0)
                        oracle.page_refs.erase(it2);
                }
            }
            if (oracle.freed.size() < 1024)
                oracle.freed.push_back(victim);
        }
        try {
            wb.free_block(reinterpret_cast<void*>(victim), tid);
        } catch (const std::exception& e) {
            oracle.report(op, std::string("free failed unexpectedly: ") + e.what());
        }
    };

    auto inject = [&](std::size_t op, int tid) {
        std::uintptr_t victim = 0;
        {
            std::lock_guard lock(oracle.mu);
            for (auto it = oracle.freed.rbegin(); it != oracle.freed.rend(); ++it) {
                // Skip addresses the allocator has legitimately recycled.
                if (!oracle.live.count(*it)) { victim = *it; break; }
            }
        }
        if (!victim) return;
        try {
            wb.free_block(reinterpret_cast<void*>(victim), tid);
            oracle.report(op, "injected double free was not detected");
        } catch (const StateError&) {
            double_frees_detected.fetch_add(1);
        }
    };

    auto one_op = [&](std::size_t op, int tid, std::mt19937_64& rng) {
        if (cfg.inject_double_free && op == cfg.ops / 2) {
            inject(op, tid);
            return;
        }
        bool do_a;
        {
            std::lock_guard lock(oracle.mu);
            do_a = oracle.live.empty();
        }
        if (!do_a) do_a = rng() % 100 < 55;
        if (do_a)
            do_alloc(op, tid, rng);
        else
            do_free(op, tid, rng);
        ops_done.fetch_add(1);
    };

    if (cfg.deterministic) {
        std::mt19937_64 rng(cfg.seed);
        for (std::size_t op = 0; op < cfg.ops && !oracle.failed.load(); ++op)
            one_op(op, static_cast<int>(op % T), rng);
    } else {
        std::atomic<std::size_t> next_op{0};
        std::vector<std::thread> workers;
        for (int tid = 0; tid < T; ++tid) {
            workers.emplace_back([&, tid] {
                std::mt19937_64 rng(cfg.seed ^ (0x9e3779b97f4a7c15ull * (tid + 1)));
                while (!oracle.failed.load()) {
                    std::size_t op = next_op.fetch_add(1);
                    if (op >= cfg.ops) break;
                    one_op(op, tid, rng);
                }
            });
        }
        for (auto& w : workers) w.join();
    }

    // Drain remaining live blocks; the allocator must accept every one.
    for (std::size_t i = 0; i < oracle.addrs.size(); ++i) {
        try {
            wb.free_block(reinterpret_cast<void*>(oracle.addrs[i]), 0);
        } catch (const std::exception& e) {
            oracle.report(cfg.ops, std::string("drain free failed: ") + e.what());
        }
    }

    if (check_locality && wb.psm()) {
        HeapReport rep = wb.psm()->heap_report();
        if (rep.remote_block_count != 0)
            oracle.report(cfg.ops, "heap report shows remote blocks");
    }

    StressResult res;
    res.ops_executed = ops_done.load();
    res.violations = oracle.violations;
    res.first_violation_op =
        oracle.violations.empty() ? 0 : oracle.first_violation_op;
    res.small_path_allocs = small_allocs.load();
    res.large_path_allocs = large_allocs.load();
    res.double_frees_detected = double_frees_detected.load();
    res.passed = oracle.violations.empty() &&
                 (!cfg.inject_double_free || res.double_frees_detected > 0);
    return res;
}

// ---------------------------------------------------------------------------
// advect
// ---------------------------------------------------------------------------

namespace {

struct ThreadGrid {
    int tx, ty;
};

ThreadGrid factor_threads(int t) {
    int tx = static_cast<int>(std::sqrt(static_cast<double>(t)));
    while (t % tx != 0) --tx;
    return {tx, t / tx};
}

// Distinct pages covered by a set of addresses.
void collect_pages(std::set<std::uintptr_t>& pages, const void* addr,
                   std::size_t len, std::size_t page) {
    auto a = reinterpret_cast<std::uintptr_t>(addr);
    for (std::uintptr_t p = a / page * page; p < a + len; p += page)
        pages.insert(p);
}

} // namespace

AdvectResult run_advect(const AdvectConfig& cfg) {
    if (cfg.patch_cells < 1 || cfg.timesteps < 1 || cfg.halo_width < 1)
        throw ConfigError("advect: patch, timesteps and halo must be >= 1");
    NumaTopology topo = NumaTopology::chain(cfg.num_nodes, cfg.cores_per_node);
    const int T = topo.total_cores();
    const auto [tx, ty] = factor_threads(T);
    const int P = cfg.patch_cells;
    const int H = cfg.halo_width;
    const int side = P + 2 * H;
    const std::size_t bytes = static_cast<std::size_t>(side) * side * sizeof(double);
    const std::size_t page = cfg.page_size;
    const double cx = 0.2, cy = 0.1; // upwind CFL factors

    auto run_arm = [&](bool psm_arm) {
        AdvectArmResult arm;
        std::unique_ptr<PsmHeap> heap;
        std::unique_ptr<FirstTouchAllocator> ft;
        if (psm_arm)
            heap = std::make_unique<PsmHeap>(topo, page);
        else
            ft = std::make_unique<FirstTouchAllocator>(topo, page);

        std::vector<double*> patch(T);
        for (int t = 0; t < T; ++t) {
            if (psm_arm) {
                heap->registry().register_thread(t, t);
                patch[t] = static_cast<double*>(heap->psm_alloc(bytes, t));
            } else {
                ft->register_thread(t, t);
                patch[t] = static_cast<double*>(ft->ft_alloc(bytes, t));
            }
        }
        // First-touch arm: thread 0 initializes every patch, binding all
        // pages to node 0 (the initializer-writes-first pitfall).
        if (!psm_arm)
            for (int t = 0; t < T; ++t)
                ft->ft_write(patch[t], bytes, 0);
        for (int t = 0; t < T; ++t) {
            int gx = t % tx, gy = t / tx;
            for (int r = 0; r < side; ++r)
                for (int c = 0; c < side; ++c) {
                    long long x = static_cast<long long>(gx) * P + c;
                    long long y = static_cast<long long>(gy) * P + r;
                    patch[t][r * side + c] =
                        static_cast<double>((x * 31 + y * 17) % 97) / 97.0;
                }
        }

        auto page_node = [&](std::uintptr_t pg) {
            auto n = psm_arm
                         ? heap->provider().node_of_page(
                               reinterpret_cast<void*>(pg))
                         : ft->node_of_page(reinterpret_cast<void*>(pg));
            return n ? *n : -1;
        };

        // Page footprints are fixed once the patches exist: precompute the
        // distinct-page set per thread per phase.
        std::vector<std::set<std::uintptr_t>> compute_pages(T), halo_pages(T);
        for (int t = 0; t < T; ++t) {
            collect_pages(compute_pages[t], patch[t], bytes, page);
            int gx = t % tx, gy = t / tx;
            auto edge = [&](int nt, bool row_strip, int first_row, int first_col) {
                // H x P (row) or P x H (column) strip of neighbour nt's cells.
                int rows = row_strip ? H : P;
                int cols = row_strip ? P : H;
                for (int r = 0; r < rows; ++r)
                    collect_pages(halo_pages[t],
                                  patch[nt] + (first_row + r) * side + first_col,
                                  cols * sizeof(double), page);
            };
            if (gx > 0) edge(t - 1, false, H, H + P - H);       // left nbr, right edge
            if (gx < tx - 1) edge(t + 1, false, H, H);          // right nbr, left edge
            if (gy > 0) edge(t - tx, true, H + P - H, H);       // lower nbr, top edge
            if (gy < ty - 1) edge(t + tx, true, H, H);          // upper nbr, bottom edge
            // Own halo ring is written during the exchange.
            collect_pages(halo_pages[t], patch[t], side * H * sizeof(double), page);
            collect_pages(halo_pages[t], patch[t] + (side - H) * side,
                          side * H * sizeof(double), page);
            for (int r = H; r < H + P; ++r) {
                collect_pages(halo_pages[t], patch[t] + r * side,
                              H * sizeof(double), page);
                collect_pages(halo_pages[t], patch[t] + r * side + H + P,
                              H * sizeof(double), page);
            }
        }

        std::vector<double> row_buf(side);
        for (int step = 0; step < cfg.timesteps; ++step) {
            // Halo exchange: copy neighbour interior edges into own halo.
            for (int t = 0; t < T; ++t) {
                int gx = t % tx, gy = t / tx;
                double* u = patch[t];
                if (gx > 0) {
                    double* v = patch[t - 1];
                    for (int r = H; r < H + P; ++r)
                        for (int h = 0; h < H; ++h)
                            u[r * side + h] = v[r * side + P + h];
                } else {
                    for (int r = H; r < H + P; ++r)
                        for (int h = 0; h < H; ++h) u[r * side + h] = 0.0;
                }
                if (gx < tx - 1) {
                    double* v = patch[t + 1];
                    for (int r = H; r < H + P; ++r)
                        for (int h = 0; h < H; ++h)
                            u[r * side + H + P + h] = v[r * side + H + h];
                }
                if (gy > 0) {
                    double* v = patch[t - tx];
                    for (int h = 0; h < H; ++h)
                        for (int c = H; c < H + P; ++c)
                            u[h * side + c] = v[(P + h) * side + c];
                } else {
                    for (int h = 0; h < H; ++h)
                        for (int c = H; c < H + P; ++c) u[h * side + c] = 0.0;
                }
                if (gy < ty - 1) {
                    double* v = patch[t + tx];
                    for (int h = 0; h < H; ++h)
                        for (int c = H; c < H + P; ++c)
                            u[(H + P + h) * side + c] = v[(H + h) * side + c];
                }
                int node = topo.node_of_core(t);
                for (std::uintptr_t pg : halo_pages[t]) {
                    int pn = page_node(pg);
                    arm.modeled_cost += topo.access_cost(node, pn < 0 ? node : pn);
                    arm.halo_pages_touched += 1;
                    if (pn != node) arm.halo_remote_touches += 1;
                }
            }
            // Owner compute: first-order upwind update of the interior.
            for (int t = 0; t < T; ++t) {
                double* u = patch[t];
                for (int r = H; r < H + P; ++r) {
                    for (int c = H; c < H + P; ++c)
                        row_buf[c] = u[r * side + c] -
                                     cx * (u[r * side + c] - u[r * side + c - 1]) -
                                     cy * (u[r * side + c] - u[(r - 1) * side + c]);
                    for (int c = H; c < H + P; ++c) u[r * side + c] = row_buf[c];
                }
                int node = topo.node_of_core(t);
                for (std::uintptr_t pg : compute_pages[t]) {
                    int pn = page_node(pg);
                    arm.modeled_cost += topo.access_cost(node, pn < 0 ? node : pn);
                    arm.compute_pages_touched += 1;
                    if (pn != node) arm.compute_remote_touches += 1;
                }
            }
        }

        for (int t = 0; t < T; ++t)
            for (int r = H; r < H + P; ++r)
                for (int c = H; c < H + P; ++c)
                    arm.checksum += patch[t][r * side + c];

        for (int t = 0; t < T; ++t) {
            if (psm_arm)
                heap->psm_free_as(patch[t], t);
            else
                ft->ft_free(patch[t]);
        }
        return arm;
    };

    AdvectResult res;
    res.psm_owner = run_arm(true);
    res.first_touch_init = run_arm(false);
    res.improvement_ratio =
        res.first_touch_init.modeled_cost / res.psm_owner.modeled_cost;
    return res;
}

} // namespace psm
