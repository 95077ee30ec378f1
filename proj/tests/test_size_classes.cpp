#include <set>

#include "doctest.h"
#include "psm/errors.hpp"
#include "psm/size_classes.hpp"

using psm::SizeClassTable;

TEST_CASE("table covers the spec'd shape") {
    auto tab = SizeClassTable::build(4096);
    CHECK(tab.block_size_for(1) == 8);
    CHECK(tab.block_size_for(8) == 8);
    CHECK(tab.block_size_for(9) == 16);
    CHECK(tab.block_size_for(128) == 128);
    CHECK(tab.block_size_for(129) == 144);   // 16-byte steps start here
    CHECK(tab.block_size_for(512) == 512);
    CHECK(tab.block_size_for(262144) == 262144);
    CHECK(tab.class_for_size(262145) == SizeClassTable::kLarge);
    CHECK(tab.class_for_size(0) == 0);

    // Dense region steps.
    std::set<std::size_t> sizes;
    for (const auto& c : tab.classes()) sizes.insert(c.block_size);
    for (std::size_t s = 8; s <= 128; s += 8) CHECK(sizes.count(s) == 1);
    for (std::size_t s = 144; s <= 512; s += 16) CHECK(sizes.count(s) == 1);
    CHECK(sizes.count(262144) == 1);
}

TEST_CASE("waste bound, round trips, and monotonicity") {
    auto tab = SizeClassTable::build(4096);
    for (std::size_t s = 64; s <= SizeClassTable::kLargeThreshold; ++s) {
        std::size_t b = tab.block_size_for(s);
        REQUIRE(b >= s);
        REQUIRE(b * 8 <= s * 9); // block <= 1.125 * request
    }
    std::size_t prev = 0;
    for (int c = 0; c < static_cast<int>(tab.num_classes()); ++c) {
        const auto& sc = tab.at(c);
        CHECK(sc.block_size > prev);
        CHECK(sc.block_size % 8 == 0);
        CHECK(tab.class_for_size(sc.block_size) == c);
        prev = sc.block_size;
    }
}

TEST_CASE("span geometry keeps per-span waste under 1/8") {
    for (std::size_t page : {std::size_t{4096}, std::size_t{65536},
                             std::size_t{2097152}}) {
        auto tab = SizeClassTable::build(page);
        for (const auto& sc : tab.classes()) {
            std::size_t span = sc.pages_per_span * page;
            std::size_t blocks = span / sc.block_size;
            REQUIRE(blocks >= 1);
            std::size_t waste = span - blocks * sc.block_size;
            CHECK(waste * 8 <= span);
            CHECK(sc.batch_size >= 1);
            CHECK(sc.batch_size <= 32);
        }
    }
    CHECK_THROWS_AS(SizeClassTable::build(1234), psm::ConfigError);
}

TEST_CASE("fragmentation_rate matches hand-worked examples") {
    // 3200 B of data on 4 KiB pages: 1 page, 896 B wasted -> 21.875%.
    CHECK(psm::fragmentation_rate(3200, 4096) == doctest::Approx(21.875));
    // Full page -> zero waste.
    CHECK(psm::fragmentation_rate(4096, 4096) == doctest::Approx(0.0));
    // 216000 B on 2 MiB pages -> 89.7% wasted.
    CHECK(psm::fragmentation_rate(216000, 2097152) ==
          doctest::Approx(100.0 * (2097152 - 216000) / 2097152));
}
