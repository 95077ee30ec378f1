#include "doctest.h"
#include "psm/core_cache.hpp"
#include "psm/errors.hpp"

using namespace psm;

namespace {

struct Fixture {
    NumaTopology topo = NumaTopology::chain(2, 2);
    SizeClassTable table = SizeClassTable::build(4096);
    PageProvider provider{topo};
    PageMap map{4096};
    NodeHeap heap0{0, table, provider, map};
    NodeHeap heap1{1, table, provider, map};
    CoreCache cache{0, 0, table, heap0, map};
};

} // namespace

TEST_CASE("alloc misses refill a batch, later allocs hit the cache") {
    Fixture f;
    int cls = f.table.class_for_size(64);
    const auto& sc = f.table.at(cls);

    void* first = f.cache.alloc(cls);
    REQUIRE(first != nullptr);
    auto st = f.cache.stats();
    CHECK(st.misses == 1);
    CHECK(st.hits == 0);
    CHECK(st.cached_bytes == (sc.batch_size - 1) * sc.block_size);

    std::vector<void*> rest;
    for (std::size_t i = 1; i < sc.batch_size; ++i) rest.push_back(f.cache.alloc(cls));
    st = f.cache.stats();
    CHECK(st.misses == 1); // the whole batch served without refilling
    CHECK(st.hits == sc.batch_size - 1);
    CHECK(st.cached_bytes == 0);
    CHECK(f.heap0.stats().central_fetch_calls == 1);

    f.cache.free(cls, first);
    for (void* b : rest) f.cache.free(cls, b);
}

TEST_CASE("free is LIFO and stays local to the cache") {
    Fixture f;
    int cls = f.table.class_for_size(128);
    void* a = f.cache.alloc(cls);
    void* b = f.cache.alloc(cls);
    f.cache.free(cls, a);
    f.cache.free(cls, b);
    CHECK(f.cache.alloc(cls) == b); // most recently freed comes back first
    CHECK(f.cache.alloc(cls) == a);
    f.cache.free(cls, a);
    f.cache.free(cls, b);
}

TEST_CASE("freeing a remote-node block through the cache is a StateError") {
    Fixture f;
    int cls = f.table.class_for_size(64);
    auto remote = f.heap1.fetch_blocks(cls, 1);
    CHECK_THROWS_AS(f.cache.free(cls, remote[0]), StateError);
    f.heap1.return_blocks(cls, remote);

    auto local = f.heap0.fetch_blocks(cls, 1);
    CHECK_THROWS_AS(f.cache.free(f.table.class_for_size(128), local[0]),
                    StateError); // wrong class
    void* garbage = &f;
    CHECK_THROWS_AS(f.cache.free(cls, garbage), StateError); // unmapped address
    f.heap0.return_blocks(cls, local);
}

TEST_CASE("watermark flush returns surplus blocks to the central list") {
    Fixture f;
    int cls = f.table.class_for_size(64);
    const auto& sc = f.table.at(cls);

    // Feed the cache blocks it never allocated; past 2x batch it must flush.
    std::size_t n = 2 * sc.batch_size + 1;
    auto blocks = f.heap0.fetch_blocks(cls, n);
    while (blocks.size() < n) {
        auto more = f.heap0.fetch_blocks(cls, n - blocks.size());
        blocks.insert(blocks.end(), more.begin(), more.end());
    }
    for (void* b : blocks) f.cache.free(cls, b);

    auto st = f.cache.stats();
    CHECK(st.flushes >= 1);
    CHECK(st.cached_bytes <=
          (2 * sc.batch_size) * sc.block_size); // back under the watermark
}

TEST_CASE("cache-wide byte cap bounds total cached memory") {
    Fixture f;
    // Large-ish blocks across several classes; cached bytes never exceed cap.
    std::vector<int> classes = {f.table.class_for_size(100000),
                                f.table.class_for_size(200000),
                                f.table.class_for_size(262144)};
    std::vector<std::pair<int, void*>> live;
    for (int round = 0; round < 40; ++round)
        for (int cls : classes) live.emplace_back(cls, f.cache.alloc(cls));
    for (auto& [cls, p] : live) {
        f.cache.free(cls, p);
        CHECK(f.cache.stats().cached_bytes <= CoreCache::kCacheCapBytes);
    }
}
