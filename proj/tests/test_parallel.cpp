#include "doctest.h"

#include <cstdlib>
#include <stdexcept>

#include "polyext/parallel.hpp"

using namespace polyext::parallel;

TEST_CASE("map_indexed keeps index order for any thread count") {
    auto f = [](std::int64_t i) { return i * i; };
    auto a = map_indexed(1000, 1, f), b = map_indexed(1000, 7, f);
    CHECK(a == b);
    CHECK(a[999] == 999 * 999);
    CHECK(map_indexed(0, 4, f).empty());
}

TEST_CASE("map_indexed rethrows the smallest failing index") {
    auto f = [](std::int64_t i) -> int {
        if (i % 10 == 3) throw std::runtime_error(std::to_string(i));
        return int(i);
    };
    try {
        map_indexed(100, 8, f);
        FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()) == "3");
    }
}

TEST_CASE("seeds") {
    CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
    CHECK(replica_seed(1, 0) != replica_seed(1, 1));
    CHECK(replica_seed(1, 5) == replica_seed(1, 5));
    CHECK(replica_seed(2, 0) != replica_seed(1, 0));
}

TEST_CASE("thread count precedence") {
    CHECK(thread_count(3) == 3);
    setenv("POLYEXT_THREADS", "5", 1);
    CHECK(thread_count(0) == 5);
    CHECK(thread_count(2) == 2);
    unsetenv("POLYEXT_THREADS");
    CHECK(thread_count(0) >= 1);
}
