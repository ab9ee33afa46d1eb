#include <catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <vector>

#include "d2doff/analytic.hpp"

using namespace d2doff;
using Catch::Approx;

namespace {

// Reference values below come from a 30-digit mpmath evaluation of the
// defining integrals and sums, and from an independent numpy implementation
// of the library aggregation (Gauss-Legendre in speed, regularized incomplete
// gamma for the nearest-neighbour power mean).

model_params paper_params()
{
    return model_params{};
}

model_params desk_params()
{
    model_params p;
    p.scenario.popularity = popularity_model::zipf(1.1, 1000);
    return p;
}

struct grid_value {
    double d;
    double eff;
    double power;
};

constexpr std::array<grid_value, 7> desk_reference{{
    {20.0, 0.5698285282468294, 0.09580622031005177},
    {50.0, 0.6090213986700047, 0.09061003334085616},
    {100.0, 0.6596208790030901, 0.0903026194013623},
    {150.0, 0.6983978057313449, 0.0977993314103286},
    {200.0, 0.7294574766449691, 0.11160176789198437},
    {250.0, 0.7551017539005649, 0.1308821129964017},
    {300.0, 0.7767483150645516, 0.15510196464032555},
}};

constexpr std::array<grid_value, 3> paper_reference{{
    {20.0, 0.39908989954247204, 0.13337148637504054},
    {100.0, 0.4654469519447839, 0.12907656716704938},
    {300.0, 0.5573479931741895, 0.17942174215691803},
}};

} // namespace

TEST_CASE("spatial density", "[analytic]")
{
    const auto s = speed_distribution::uniform(6.0, 16.0);
    CHECK(spatial_density(1.0 / 3.0, s) == Approx(0.0326943084337242).epsilon(1e-12));
    CHECK(spatial_density(2.0 / 3.0, s) == Approx(2.0 * spatial_density(1.0 / 3.0, s)).epsilon(1e-14));
    CHECK(spatial_density(0.5, speed_distribution::uniform(10.0, 10.0)) == Approx(0.05).epsilon(1e-14));
    CHECK(spatial_density_integral(1.0 / 3.0, s) == Approx(spatial_density_closed_form(1.0 / 3.0, s)).epsilon(1e-9));
    CHECK(spatial_density(0.0, s) == 0.0);

    const auto through_zero = speed_distribution::tabulated({-5.0, 5.0}, {1.0, 1.0});
    CHECK_THROWS_AS(spatial_density(1.0, through_zero), divergence_error);
    CHECK_THROWS_AS(encounter_rate(3.0, 1.0, through_zero), divergence_error);
}

TEST_CASE("encounter rate", "[analytic]")
{
    const auto s = speed_distribution::uniform(6.0, 16.0);
    const double lt = 1.0 / 3.0;
    CHECK(encounter_rate(6.0, lt, s) == Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(encounter_rate(16.0, lt, s) == Approx(0.523108934939587).epsilon(1e-12));
    CHECK(encounter_rate(11.0, lt, s) == Approx(0.388916461309116).epsilon(1e-12));
    CHECK(encounter_rate(-11.0, lt, s) == Approx(0.388916461309116).epsilon(1e-12));
    CHECK(encounter_rate(0.0, lt, s) == Approx(lt).epsilon(1e-12));
    // outside [v_a, v_b] the quadrature path answers
    CHECK(encounter_rate(3.0, lt, s) == Approx(lt).epsilon(1e-12));
    CHECK(encounter_rate(20.0, lt, s) == Approx(0.653886168674484).epsilon(1e-12));
    CHECK_THROWS_AS(encounter_rate_closed_form(20.0, lt, s), domain_error);

    for (double v = 6.0; v <= 16.0; v += 0.5)
        CHECK(encounter_rate_integral(v, lt, s) == Approx(encounter_rate_closed_form(v, lt, s)).epsilon(1e-9));

    // single speed: all others move at +-v0
    const auto one = speed_distribution::uniform(10.0, 10.0);
    CHECK(encounter_rate(4.0, 1.0, one) == Approx(0.5 * (6.0 + 14.0) / 10.0).epsilon(1e-14));
}

TEST_CASE("per-content request rate and cache occupancy", "[analytic]")
{
    const auto pop = popularity_model::zipf(1.1, 10000);
    CHECK(content_request_rate(1, pop, 1.0 / 6.0) == Approx(0.0252395358232765).epsilon(1e-12));
    CHECK(content_request_rate(1, popularity_model::explicit_pmf({1.0}), 0.2) == 0.2);
    CHECK(content_request_rate(7, pop, 0.0) == 0.0);
    CHECK_THROWS_AS(content_request_rate(10001, pop, 1.0), domain_error);

    const auto zero = cache_probability_bounds(0.0, 600.0, 20.0);
    CHECK(zero.lower == 0.0);
    CHECK(zero.upper == 0.0);
    const auto narrow = cache_probability_bounds(0.01, 20.0 + 1e-12, 20.0);
    CHECK(narrow.lower == Approx(0.0).margin(1e-12));
    CHECK(narrow.upper == Approx(-std::expm1(-0.2)).epsilon(1e-9));
    const auto z1 = cache_probability_bounds(0.0252395358232765, 600.0, 20.0);
    CHECK(z1.lower == Approx(0.999999561072145).epsilon(1e-12));
    CHECK(z1.upper == Approx(0.999999735049148).epsilon(1e-12));
    for (double lz : {1e-6, 1e-3, 0.05}) {
        const auto b = cache_probability_bounds(lz, 600.0, 20.0);
        CHECK(b.lower < b.upper);
    }
    const auto tc0 = cache_probability_bounds(0.3, 600.0, 0.0);
    CHECK(tc0.lower == tc0.upper);
}

TEST_CASE("content density and encounter thinning", "[analytic]")
{
    CHECK(content_density(0.0326943, 0.0, 600.0, 20.0) == 0.0);
    CHECK(content_density(0.0326943, 1e6, 600.0, 20.0) == Approx(0.0326943));
    CHECK(content_encounter_rate(0.5, 0.0, 600.0, 20.0) == 0.0);
    CHECK(content_encounter_rate(0.5, 1e6, 600.0, 20.0) == Approx(0.5));
    const auto pop = popularity_model::zipf(1.1, 10000);
    const double lz = content_request_rate(1000, pop, 1.0 / 6.0);
    CHECK(lz == Approx(0.0000126497331373044).epsilon(1e-12));
    CHECK(content_encounter_rate(0.523108934939587, lz, 600.0, 20.0) == Approx(0.00382392436481434).epsilon(1e-10));
}

TEST_CASE("immediate and delayed offloading", "[analytic]")
{
    CHECK(prob_offload_immediate(0.0, 0.03) == 0.0);
    CHECK(prob_offload_immediate(100.0, 0.0326942940832815) == Approx(0.998553862133828).epsilon(1e-12));
    CHECK(prob_offload_immediate(10.0, std::numeric_limits<double>::infinity()) == 1.0);
    double prev = 0.0;
    for (double d = 0.0; d <= 300.0; d += 7.0) {
        const double p = prob_offload_immediate(d, 0.004);
        CHECK(p >= prev);
        prev = p;
    }

    auto p = paper_params();
    CHECK(prob_encounter_given_speed(1000, 16.0, p) == Approx(0.0736271571410410).epsilon(1e-9));
    CHECK(prob_encounter_given_speed(1, 16.0, p) == Approx(1.0).margin(1e-4));
    CHECK(prob_encounter_given_speed(1, 16.0, p) == Approx(-std::expm1(-0.523108934939587 * 0.999999561072145 * 20.0)).epsilon(1e-12));

    auto p0 = p;
    p0.scenario.tau_c = 0.0;
    CHECK(prob_encounter_given_speed(1000, 16.0, p0) == 0.0);
    CHECK(prob_offload_delayed(100.0, 1000, p0) == 0.0);

    CHECK(prob_offload_delayed(1e9, 1, p) == 0.0);
}

TEST_CASE("breakdown complement identity", "[analytic]")
{
    auto p = desk_params();
    for (std::size_t z : {1u, 10u, 100u, 1000u}) {
        for (double d : {0.0, 20.0, 100.0, 300.0}) {
            const auto b = offload_breakdown_for_content(d, z, p);
            CHECK(b.p_off_imm + b.p_off_del + b.p_non_off == Approx(1.0).margin(1e-12));
            CHECK(b.p_off_imm >= 0.0);
            CHECK(b.p_off_del >= 0.0);
            CHECK(b.p_non_off >= 0.0);
        }
    }
    auto p0 = p;
    p0.scenario.tau_c = 0.0;
    const auto b0 = offload_breakdown_for_content(0.0, 5, p0);
    CHECK(b0.p_off_imm == 0.0);
    CHECK(b0.p_off_del == 0.0);
    CHECK(b0.p_non_off == 1.0);

    const auto b1 = offload_breakdown_for_content(100.0, 1, paper_params());
    CHECK(b1.p_non_off < 2e-3);
}

TEST_CASE("non-repeated request statistics", "[analytic]")
{
    const auto uni = popularity_model::explicit_pmf({0.25, 0.25, 0.25, 0.25});
    const std::vector<double> none(4, 0.0);
    CHECK(prob_non_repeated(uni, none) == 1.0);
    const std::vector<double> same(4, 0.3);
    CHECK(prob_non_repeated(uni, same) == Approx(0.7));
    CHECK_THROWS_AS(prob_non_repeated(uni, std::vector<double>(3, 0.0)), domain_error);

    const auto skew = popularity_model::explicit_pmf({0.5, 0.3, 0.2});
    const auto w = popularity_given_non_repeated(skew, std::vector<double>{0.4, 0.4, 0.4});
    CHECK(w[0] == Approx(0.5));
    CHECK(w[2] == Approx(0.2));
    const auto w0 = popularity_given_non_repeated(skew, std::vector<double>{1.0, 0.5, 0.0});
    CHECK(w0[0] == 0.0);
    CHECK(w0[0] + w0[1] + w0[2] == Approx(1.0));
    CHECK_THROWS_AS(popularity_given_non_repeated(skew, std::vector<double>{1.0, 1.0, 1.0}), domain_error);

    const auto desk = desk_params();
    const auto probs = cache_probabilities(desk);
    CHECK(prob_non_repeated(desk.scenario.popularity, probs) == Approx(0.4235904609858946).epsilon(1e-10));
    CHECK(popularity_given_non_repeated(1, desk.scenario.popularity, probs) < desk.scenario.popularity.pmf(1));
    const auto paper = paper_params();
    CHECK(prob_non_repeated(paper.scenario.popularity, cache_probabilities(paper)) == Approx(0.5303764839021938).epsilon(1e-10));
}

TEST_CASE("library offloading probability", "[analytic]")
{
    const library_model desk(desk_params());
    for (const auto& r : desk_reference)
        CHECK(desk.prob_offload_given_nr(r.d) == Approx(r.eff).epsilon(1e-7));
    double prev = 0.0;
    for (double d = 20.0; d <= 300.0; d += 10.0) {
        const double e = desk.prob_offload_given_nr(d);
        CHECK(e >= prev);
        prev = e;
    }
    const library_model paper(paper_params());
    for (const auto& r : paper_reference)
        CHECK(paper.prob_offload_given_nr(r.d) == Approx(r.eff).epsilon(1e-7));

    // single content library
    model_params one = desk_params();
    one.scenario.popularity = popularity_model::explicit_pmf({1.0});
    one.scenario.lambda_Z = 0.001;
    const library_model lib1(one);
    const auto b = offload_breakdown_for_content(80.0, 1, one);
    CHECK(lib1.prob_offload_given_nr(80.0) == Approx(b.p_off()).epsilon(1e-12));

    auto none = desk_params();
    none.scenario.tau_c = 0.0;
    CHECK(library_model(none).prob_offload_given_nr(0.0) == 0.0);

    auto upper = desk_params();
    upper.bound = cache_bound::upper;
    CHECK(library_model(upper).prob_offload_given_nr(100.0) > desk.prob_offload_given_nr(100.0));
}

TEST_CASE("per-subcarrier transmit power", "[analytic]")
{
    radio_params r;
    const auto ch = default_channel();
    CHECK(subcarrier_tx_power(100.0, r, *ch) == Approx(0.0597324658465917).epsilon(1e-12));
    CHECK(linear_to_db(subcarrier_tx_power(100.0, r, *ch)) == Approx(-12.2378955654937).epsilon(1e-12));
    CHECK(power_delayed(100.0, r, *ch) == subcarrier_tx_power(100.0, r, *ch));
    CHECK(power_delayed(150.0, r, *ch) > power_delayed(100.0, r, *ch));
    CHECK_THROWS_AS(subcarrier_tx_power(0.0, r, *ch), domain_error);

    radio_params bare = r;
    bare.link_margin_db = 0.0;
    const log_distance_channel unity(0.0, 2.0);
    CHECK(subcarrier_tx_power(1.0, bare, unity) == Approx(sigma_c_squared(bare) * 31.0).epsilon(1e-12));
    radio_params slow = r;
    slow.e_bar = 1e-12;
    CHECK(subcarrier_tx_power(100.0, slow, *ch) == Approx(0.0).margin(1e-12));
}

TEST_CASE("power distributions are consistent", "[analytic]")
{
    radio_params r;
    const auto ch = default_channel();
    const double dmax = 100.0;
    const double rho_z = 0.0123;
    const double top = subcarrier_tx_power(dmax, r, *ch);
    CHECK(power_imm_cdf(top, dmax, rho_z, r, *ch) == Approx(1.0).epsilon(1e-12));
    CHECK(power_imm_cdf(2.0 * top, dmax, rho_z, r, *ch) == 1.0);
    CHECK(power_imm_cdf(-1.0, dmax, rho_z, r, *ch) == 0.0);
    CHECK(power_imm_pdf(2.0 * top, dmax, rho_z, r, *ch) == 0.0);

    const double top_i2d = subcarrier_tx_power(300.0, r, *ch);
    CHECK(power_non_off_cdf(top_i2d, 300.0, r, *ch) == Approx(1.0).epsilon(1e-12));

    for (double f : {0.05, 0.2, 0.5, 0.8, 0.95}) {
        const double y = f * top;
        const double h = y * 1e-5;
        const double fd = (power_imm_cdf(y + h, dmax, rho_z, r, *ch) - power_imm_cdf(y - h, dmax, rho_z, r, *ch)) / (2.0 * h);
        CHECK(power_imm_pdf(y, dmax, rho_z, r, *ch) == Approx(fd).epsilon(1e-6));
        const double yi = f * top_i2d;
        const double hi = yi * 1e-5;
        const double fdi = (power_non_off_cdf(yi + hi, 300.0, r, *ch) - power_non_off_cdf(yi - hi, 300.0, r, *ch)) / (2.0 * hi);
        CHECK(power_non_off_pdf(yi, 300.0, r, *ch) == Approx(fdi).epsilon(1e-6));
    }

    // pdf integrates to the cdf (composite trapezoid on a fine grid)
    const double ya = 0.3 * top;
    const double yb = 0.9 * top;
    const int n = 20000;
    double trap = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double y = ya + (yb - ya) * i / n;
        trap += (i == 0 || i == n ? 0.5 : 1.0) * power_imm_pdf(y, dmax, rho_z, r, *ch);
    }
    trap *= (yb - ya) / n;
    CHECK(trap == Approx(power_imm_cdf(yb, dmax, rho_z, r, *ch) - power_imm_cdf(ya, dmax, rho_z, r, *ch)).epsilon(1e-6));

    // mean by parts equals the first moment of the pdf
    // y = top u^3 removes the y^(1/n - 1) endpoint singularity
    auto first_moment = [](auto pdf, double hi) {
        return integrate([&](double u) {
            const double y = hi * u * u * u;
            return y * pdf(y) * 3.0 * hi * u * u;
        }, 0.0, 1.0);
    };
    const double m1 = first_moment([&](double y) { return power_imm_pdf(y, dmax, rho_z, r, *ch); }, top);
    CHECK(mean_power_imm(dmax, rho_z, r, *ch) == Approx(m1).epsilon(1e-4));
    const double m2 = first_moment([&](double y) { return power_non_off_pdf(y, 300.0, r, *ch); }, top_i2d);
    CHECK(mean_power_non_off(300.0, r, *ch) == Approx(m2).epsilon(1e-4));
}

TEST_CASE("branch mean powers", "[analytic]")
{
    radio_params r;
    const auto ch = default_channel();
    CHECK(mean_power_non_off(300.0, r, *ch) == Approx(0.221170876475573).epsilon(1e-8));
    CHECK(mean_power_imm(100.0, 0.0326942940832815, r, *ch) == Approx(0.00206985067088364).epsilon(1e-8));
    CHECK(mean_power_imm(100.0, 0.001, r, *ch) <= subcarrier_tx_power(100.0, r, *ch));
    CHECK(mean_power_non_off(300.0, r, *ch) <= subcarrier_tx_power(300.0, r, *ch));
    CHECK(mean_power_imm(100.0, 50.0, r, *ch) < 1e-9);
    CHECK(mean_power_non_off(1e-3, r, *ch) < 1e-9);
    // uniform limit as rho_z -> 0
    CHECK(mean_power_imm(100.0, 1e-12, r, *ch) == Approx(mean_power_non_off(100.0, r, *ch)).epsilon(1e-6));
    CHECK(mean_power_imm(100.0, 1e-6, r, *ch) == Approx(mean_power_non_off(100.0, r, *ch)).epsilon(1e-3));
}

TEST_CASE("power per content and library", "[analytic]")
{
    auto p = paper_params();
    const auto pw1 = avg_power_for_content(100.0, 1, p);
    const auto b1 = offload_breakdown_for_content(100.0, 1, p);
    CHECK(b1.p_off_imm > 0.99);
    CHECK(pw1.total == Approx(b1.p_off_imm * pw1.mean_imm + b1.p_off_del * pw1.power_del + b1.p_non_off * pw1.mean_non_off).epsilon(1e-12));

    const offload_breakdown all_non{0.0, 0.0, 1.0};
    CHECK(detail::compose_power(all_non, 0.01, 0.02, 0.2).total == 0.2);
    const offload_breakdown all_imm{1.0, 0.0, 0.0};
    CHECK(detail::compose_power(all_imm, 0.01, 0.02, 0.2).total == 0.01);

    const library_model desk(desk_params());
    for (const auto& r : desk_reference) {
        const auto pw = desk.power(r.d);
        CHECK(pw.total == Approx(r.power).epsilon(1e-7));
        const auto b = desk.offload(r.d);
        CHECK(pw.total == Approx(b.p_off_imm * pw.mean_imm + b.p_off_del * pw.power_del + b.p_non_off * pw.mean_non_off).epsilon(1e-12));
    }
    const library_model paper(p);
    for (const auto& r : paper_reference)
        CHECK(paper.avg_power(r.d) == Approx(r.power).epsilon(1e-7));

    model_params one = desk_params();
    one.scenario.popularity = popularity_model::explicit_pmf({1.0});
    one.scenario.lambda_Z = 0.001;
    CHECK(library_model(one).avg_power(80.0) == Approx(avg_power_for_content(80.0, 1, one).total).epsilon(1e-10));

    // large ranges: the delayed branch dominates and grows
    CHECK(desk.avg_power(1000.0) > desk.avg_power(600.0));
}

TEST_CASE("bucketed library stays within 1e-4", "[analytic]")
{
    const auto p = paper_params();
    const library_model exact(p);
    const library_model coarse(p, 1000);
    CHECK(coarse.group_count() <= 1000);
    for (double d : {20.0, 80.0, 200.0, 300.0}) {
        CHECK(coarse.prob_offload_given_nr(d) == Approx(exact.prob_offload_given_nr(d)).epsilon(1e-4));
        CHECK(coarse.avg_power(d) == Approx(exact.avg_power(d)).epsilon(1e-4));
    }
}

TEST_CASE("range optimizer", "[analytic]")
{
    const auto parabola = golden_section_minimize([](double x) { return (x - 123.4) * (x - 123.4) + 2.0; }, 20.0, 300.0);
    CHECK(parabola.x == Approx(123.4).margin(0.1));
    CHECK_FALSE(parabola.at_boundary);

    const auto rising = golden_section_minimize([](double x) { return x; }, 20.0, 300.0);
    CHECK(rising.x == Approx(20.0).margin(0.1));
    CHECK(rising.at_boundary);

    // dense 1 mm scan of the independent implementation: 76.022 m
    const auto opt = optimal_dmax(library_model(desk_params()), {20.0, 300.0});
    CHECK(opt.x == Approx(76.022).margin(0.1));
    CHECK_FALSE(opt.at_boundary);
    CHECK(opt.value == Approx(0.08933674158696167).epsilon(1e-6));
}
