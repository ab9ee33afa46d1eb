#include <catch_amalgamated.hpp>

#include <cmath>

#include "d2doff/analytic.hpp"
#include "d2doff/oracles.hpp"
#include "d2doff/stats.hpp"

using namespace d2doff;
using namespace d2doff::oracles;
using Catch::Approx;

namespace {

const auto preset_speed = speed_distribution::uniform(6.0, 16.0);

bool within(const oracle_estimate& e, double ref, double k)
{
    return std::abs(e.value - ref) <= k * e.std_error;
}

} // namespace

TEST_CASE("spatial density oracle", "[oracles]")
{
    const auto e = mc_spatial_density(1.0 / 3.0, preset_speed, 2000.0, 11, 256);
    INFO(e.value << " +- " << e.std_error);
    CHECK_FALSE(e.flagged);
    CHECK(within(e, 0.0326943084337242, 3.0));
    CHECK(e.value == Approx(0.0327).margin(0.0005));

    const auto none = mc_spatial_density(0.0, preset_speed, 2000.0, 11);
    CHECK(none.value == 0.0);
    CHECK(none.flagged);

    const auto twice = mc_spatial_density(2.0 / 3.0, preset_speed, 2000.0, 12, 256);
    CHECK(std::abs(twice.value - 2.0 * e.value) <= 3.0 * std::hypot(twice.std_error, 2.0 * e.std_error));

    const auto shortrun = mc_spatial_density(1.0 / 3.0, preset_speed, 1.0, 1, 4);
    CHECK(shortrun.flagged);
}

TEST_CASE("encounter rate oracle", "[oracles]")
{
    const double lt = 1.0 / 3.0;
    for (double v : {0.0, 6.0, 11.0, 16.0}) {
        const auto e = mc_encounter_rate(v, lt, preset_speed, 20000.0, 21, 100.0);
        INFO("v* = " << v << ": " << e.value << " +- " << e.std_error);
        CHECK(within(e, encounter_rate(v, lt, preset_speed), 3.0));
    }
    const auto e0 = mc_encounter_rate(0.0, lt, preset_speed, 20000.0, 5);
    CHECK(e0.value == Approx(lt).margin(4.0 * e0.std_error));
}

TEST_CASE("transform mean oracle", "[oracles]")
{
    radio_params r;
    const auto ch = default_channel();
    const auto c = mc_transform_mean(constant_distance(100.0), r, *ch, 10, 1);
    CHECK(c.value == Approx(subcarrier_tx_power(100.0, r, *ch)).epsilon(1e-12));
    CHECK(c.std_error == Approx(0.0).margin(1e-15));

    const auto u = mc_transform_mean(uniform_distance(300.0), r, *ch, 1000000, 2);
    CHECK(u.value == Approx(0.221170876475573).epsilon(0.01));

    const auto nn = mc_transform_mean(truncated_nearest_neighbor(0.0327, 100.0), r, *ch, 1000000, 3);
    CHECK(nn.value == Approx(mean_power_imm(100.0, 0.0327, r, *ch)).epsilon(0.01));
}

TEST_CASE("sampled powers follow the analytic distributions", "[oracles]")
{
    radio_params r;
    const auto ch = default_channel();
    const auto ys = sample_transform(truncated_nearest_neighbor(0.004, 150.0), r, *ch, 100000, 4);
    CHECK(ks_distance(ys, [&](double y) { return power_imm_cdf(y, 150.0, 0.004, r, *ch); }) < 0.01);
    const auto yu = sample_transform(uniform_distance(300.0), r, *ch, 100000, 5);
    CHECK(ks_distance(yu, [&](double y) { return power_non_off_cdf(y, 300.0, r, *ch); }) < 0.01);
}

TEST_CASE("standard error shrinks as one over root n", "[oracles]")
{
    radio_params r;
    const auto ch = default_channel();
    const auto a = mc_transform_mean(uniform_distance(300.0), r, *ch, 100000, 7);
    const auto b = mc_transform_mean(uniform_distance(300.0), r, *ch, 200000, 8);
    CHECK(a.std_error / b.std_error == Approx(std::sqrt(2.0)).epsilon(0.2));
}

TEST_CASE("cache occupancy oracle", "[oracles]")
{
    const auto zero = mc_cache_occupancy(0.0, 600.0, 20.0, 1e6, 1);
    CHECK(zero.value == 0.0);

    const auto busy = mc_cache_occupancy(1.0, 600.0, 20.0, 1e6, 2);
    CHECK(busy.value == Approx(1.0).margin(0.01));

    // content 1000 of the 10^4 library
    const double lz = 0.0000126497331373044;
    const auto bounds = cache_probability_bounds(lz, 600.0, 20.0);
    const auto del = mc_cache_occupancy(lz, 600.0, 20.0, 1e11, 3);
    const auto inst = mc_cache_occupancy(lz, 600.0, 20.0, 1e11, 4, delivery_delay::instant);
    INFO(del.value << " +- " << del.std_error << " in [" << bounds.lower << ", " << bounds.upper << "]");
    CHECK(del.value >= bounds.lower - 3.0 * del.std_error);
    CHECK(del.value <= bounds.upper + 3.0 * del.std_error);
    CHECK(within(inst, bounds.upper, 3.0));
    // renewal argument: busy time (e^{l ts} - 1)/l per cycle of 1/l + tc + busy
    const double x = lz * 600.0;
    CHECK(within(del, std::expm1(x) / (std::exp(x) + lz * 20.0), 3.0));
}

TEST_CASE("offload probability oracle", "[oracles]")
{
    model_params p;
    const double rho = spatial_density(p.scenario.lambda_t, p.scenario.speed);
    for (double q : {0.00731, 0.3}) {
        const auto est = mc_offload_probabilities(1.0 / 3.0, preset_speed, q, 100.0, 20.0, 200000, 31);
        const double p_imm = prob_offload_immediate(100.0, rho * q);
        const double p_del = (1.0 - p_imm) * d2doff::detail::speed_averaged_encounter_probability(q, p.scenario, p.quad);
        INFO("q=" << q << " imm " << est.imm.value << " vs " << p_imm << ", del " << est.del.value << " vs " << p_del);
        CHECK(within(est.imm, p_imm, 3.0));
        CHECK(within(est.del, p_del, 3.0));
    }
}
