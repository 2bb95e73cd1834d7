#include <doctest.h>

TEST_SUITE("config_bundle") {
TEST_CASE("placeholder") { CHECK(true); }
}
