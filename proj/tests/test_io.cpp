#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <limits>

#include "polyext/errors.hpp"
#include "polyext/io.hpp"

using namespace polyext;

TEST_CASE("number formatting") {
    CHECK(io::fmt(0.1) == "0.10000000000000001");
    CHECK(io::fmt(2.0) == "2");
    CHECK(io::fmt(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(io::fmt(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(io::fmt(std::nan("")) == "nan");
    double x = 0.7573123456789012;
    CHECK(std::stod(io::fmt(x)) == x);
}

TEST_CASE("atomic write replaces and leaves no temporaries") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "polyext_io_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::string p = (dir / "a.txt").string();
    io::atomic_write(p, "first");
    io::atomic_write(p, "second");
    CHECK(io::read_file(p) == "second");
    int n = 0;
    for (auto& e : fs::directory_iterator(dir)) {
        (void)e;
        ++n;
    }
    CHECK(n == 1);
    CHECK_THROWS(io::atomic_write((dir / "missing" / "b.txt").string(), "x"));
    CHECK_THROWS(io::read_file((dir / "nope").string()));
    fs::remove_all(dir);
}

TEST_CASE("log field dump round-trips") {
    polymer::LogWeightField f;
    f.window = Box{-2, 1, 3, 4};
    f.values = {0.5, -std::numeric_limits<double>::infinity(), 1e-300, -7.25, 3, 4, 5, 6};
    f.log_offset = -123.456;
    f.time_lo = 3;
    f.time_hi = 99;
    std::string bytes = io::encode_log_field(f, 1024);
    CHECK(bytes.substr(0, 4) == "PXLW");
    CHECK(bytes.size() == 4 + 4 + 8 * 7 + 8 + 8 * 8);
    std::int64_t N = 0;
    auto g = io::decode_log_field(bytes, &N);
    CHECK(N == 1024);
    CHECK(g.window == f.window);
    CHECK(g.values == f.values);
    CHECK(g.log_offset == f.log_offset);
    CHECK(g.time_lo == 3);
    CHECK(g.time_hi == 99);
    CHECK_THROWS_AS(io::decode_log_field(bytes.substr(0, 20)), ValidationError);
    std::string bad = bytes;
    bad[0] = 'Q';
    CHECK_THROWS_AS(io::decode_log_field(bad), ValidationError);
}
