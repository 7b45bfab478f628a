#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <string>

#include "polyext/config.hpp"
#include "polyext/errors.hpp"

using namespace polyext;
using namespace polyext::config;

TEST_CASE("empty text gives the default table") {
    auto c = parse_config("");
    CHECK(c.n == 1024);
    CHECK(c.beta_hat == 0.5);
    CHECK(c.m_scales == 8);
    CHECK(c.replicas == 100);
    CHECK(c.seed == 1);
    CHECK(c.wall_mode == polymer::WallMode::start);
    CHECK(c.sizes() == std::vector<std::int64_t>{1024});
    CHECK(c == ExperimentConfig{});
}

TEST_CASE("values, comments and lists") {
    auto c = parse_config("# comment\n  n = 256\nns = 256, 1024,4096\nbeta_hat=0.3\n\nwall_mode = origin\nseed = 18446744073709551615\n");
    CHECK(c.n == 256);
    CHECK(c.ns == std::vector<std::int64_t>{256, 1024, 4096});
    CHECK(c.sizes() == c.ns);
    CHECK(c.beta_hat == 0.3);
    CHECK(c.wall_mode == polymer::WallMode::origin);
    CHECK(c.seed == 18446744073709551615ULL);
}

TEST_CASE("subcritical assumption is enforced") {
    CHECK_THROWS_AS(parse_config("beta_hat = 1.2\n"), ValidationError);
    CHECK_THROWS_AS(parse_config("beta_hat = 1\n"), ValidationError);
}

TEST_CASE("every offending key is listed") {
    try {
        parse_config("n = abc\nbogus = 3\nbeta_hat = 2\nreplicas = 0\nthis line is wrong\n", "run.cfg");
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        std::string m = e.what();
        CHECK(m.find("run.cfg:1: n") != std::string::npos);
        CHECK(m.find("run.cfg:2: unknown configuration key 'bogus'") != std::string::npos);
        CHECK(m.find("beta_hat") != std::string::npos);
        CHECK(m.find("replicas") != std::string::npos);
        CHECK(m.find("run.cfg:5: expected 'key = value'") != std::string::npos);
    }
}

TEST_CASE("text form round-trips") {
    ExperimentConfig c;
    c.experiment = "extremes";
    c.ns = {256, 1024};
    c.beta_hat = 0.123456789012345678;
    c.window_c = 0.35;
    c.profile = "sigma";
    c.out = "runs/a b";
    auto back = parse_config(to_text(c));
    back.experiment = c.experiment;
    CHECK(back == c);
}

TEST_CASE("overrides win over file values") {
    auto c = parse_config("replicas = 50\n");
    set_value(c, "replicas", "7");
    CHECK(c.replicas == 7);
    CHECK_THROWS_AS(set_value(c, "nope", "1"), ValidationError);
    CHECK_THROWS_AS(set_value(c, "replicas", "many"), ValidationError);
    // Range is checked on the merged config, not per key.
    set_value(c, "replicas", "-3");
    CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("missing config file names the path") {
    try {
        load_config("/nonexistent/dir/x.cfg");
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("/nonexistent/dir/x.cfg") != std::string::npos);
    }
}
