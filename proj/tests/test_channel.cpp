#include <catch_amalgamated.hpp>

#include <cmath>
#include <memory>
#include <vector>

#include "d2doff/channel.hpp"

using namespace d2doff;
using Catch::Approx;

namespace {

std::vector<std::shared_ptr<const channel_model>> registered_models()
{
    return {default_channel(), std::make_shared<log_distance_channel>(40.0, 3.5),
            std::make_shared<dual_slope_channel>(38.0, 2.0, 4.0, 120.0)};
}

} // namespace

TEST_CASE("every channel model is monotone, invertible and differentiable", "[channel]")
{
    for (const auto& ch : registered_models()) {
        INFO(ch->name());
        double prev = ch->g_db(0.5);
        for (double d = 1.0; d <= 1e4; d *= 1.07) {
            const double g = ch->g_db(d);
            CHECK(g < prev);
            prev = g;
            CHECK(ch->g_db_inverse(g) == Approx(d).epsilon(1e-9));
            const double h = d * 1e-5;
            const double fd = (ch->g_db(d + h) - ch->g_db(d - h)) / (2.0 * h);
            CHECK(ch->g_db_derivative(d) == Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("linear gain", "[channel]")
{
    const log_distance_channel unity(0.0, 2.0);
    CHECK(gain_linear(unity, 1.0) == Approx(1.0));

    const auto ch = default_channel();
    CHECK(ch->g_db(100.0) == Approx(-79.63).epsilon(1e-12));
    CHECK(gain_linear(*ch, 100.0) == Approx(1.08893009333343e-8).epsilon(1e-12));
    CHECK(gain_linear(*ch, 10.0) > gain_linear(*ch, 100.0));
    CHECK_THROWS_AS(gain_linear(*ch, 0.0), domain_error);
    CHECK_THROWS_AS(gain_linear(*ch, -3.0), domain_error);
}

TEST_CASE("dual slope is continuous at the breakpoint", "[channel]")
{
    const dual_slope_channel ch(38.0, 2.0, 4.0, 120.0);
    CHECK(ch.g_db(120.0 - 1e-9) == Approx(ch.g_db(120.0 + 1e-9)).margin(1e-6));
    CHECK_THROWS_AS(dual_slope_channel(38.0, 2.0, 4.0, 0.0), config_error);
    CHECK_THROWS_AS(log_distance_channel(30.0, 0.0), config_error);
}
