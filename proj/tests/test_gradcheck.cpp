#include <catch2/catch_amalgamated.hpp>

#include "gradcheck_util.hpp"

TEST_CASE("analytic gradients match central finite differences") {
    auto res = gradcheck::run(1);
    INFO("worst parameter: " << res.worst_param << " over " << res.checked << " entries");
    CHECK(res.checked > 500);
    CHECK(res.max_rel_error <= 1e-4);
}
