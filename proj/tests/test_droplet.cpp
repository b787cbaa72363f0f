#include <cmath>

#include "coulgas/droplet.hpp"
#include "doctest.h"

using namespace coulgas;

static RadialPotential quartic() { return make_even_polynomial({-2.0, 1.0}); }
static RadialPotential two_well() { return make_even_polynomial({1.155, -0.8, 1.0 / 6.0}); }

TEST_CASE("local peaks") {
    auto gin = make_ginibre();
    PeakFinder pf(gin);
    auto ps = pf.peak_set(0.36);
    REQUIRE(ps.local_peaks.size() == 1);
    CHECK(ps.local_peaks[0].r == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(ps.b_tau == doctest::Approx(0.36 - 0.72 * std::log(0.6)).epsilon(1e-12));
    CHECK(std::abs(gin.mass_function(ps.local_peaks[0].r) - 0.36) <= 1e-10);

    auto q4 = quartic();
    PeakFinder pf4(q4);
    auto ps0 = pf4.peak_set(0.0);
    REQUIRE(ps0.local_peaks.size() >= 1);
    CHECK(ps0.local_peaks[0].r == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("droplet geometry: ginibre disk") {
    auto gin = make_ginibre();
    auto g = compute_droplet(gin);
    REQUIRE(g.components.size() == 1);
    CHECK(g.components[0].a == 0.0);
    CHECK(g.components[0].b == doctest::Approx(1.0).epsilon(1e-11));
    CHECK(g.masses[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(g.euler_char == 1);
    CHECK(g.central_disk);
    CHECK(g.outposts.empty());
}

TEST_CASE("droplet geometry: quartic annulus") {
    auto q4 = quartic();
    auto g = compute_droplet(q4);
    REQUIRE(g.components.size() == 1);
    CHECK(g.components[0].a == doctest::Approx(1.0).epsilon(1e-10));
    // 2 b^4 - 2 b^2 = 1
    double b = g.components[0].b;
    CHECK(2.0 * b * b * b * b - 2.0 * b * b == doctest::Approx(1.0).epsilon(1e-11));
    CHECK(g.euler_char == 0);
    CHECK_FALSE(g.central_disk);
}

TEST_CASE("droplet geometry: two-well family") {
    auto tw = two_well();
    auto g = compute_droplet(tw);
    REQUIRE(g.components.size() == 2);
    CHECK(g.central_disk);  // T ~ 1.155 r^2 near 0
    CHECK(g.gap_count() == 1);
    // oracle: brute-force sweep locating the jump of the global-peak radius
    PeakFinder pf(tw);
    double m_lo = 0.0, m_hi = 0.0;
    double prev_beta = 0.0;
    for (int i = 1; i <= 20000; ++i) {
        double tau = double(i) / 20000.0;
        auto ps = pf.peak_set(tau);
        double beta = 0.0;
        double best = 1e300;
        for (auto& p : ps.local_peaks)
            if (p.g < best - 1e-12) {
                best = p.g;
                beta = p.r;
            }
        if (i > 1 && beta > prev_beta + 0.2) {
            m_lo = double(i - 1) / 20000.0;
            m_hi = tau;
            break;
        }
        prev_beta = beta;
    }
    CHECK(g.masses[0] > m_lo - 1e-9);
    CHECK(g.masses[0] < m_hi + 1e-9);
    // branching equality g_{M_0}(b_0) = g_{M_0}(a_1)
    double m0 = g.masses[0];
    CHECK(tw.g_tau(m0, g.components[0].b) ==
          doctest::Approx(tw.g_tau(m0, g.components[1].a)).epsilon(1e-9));
    // T at the edges matches the masses
    CHECK(tw.mass_function(g.components[0].b) == doctest::Approx(m0).epsilon(1e-9));
    CHECK(tw.mass_function(g.components[1].a) == doctest::Approx(m0).epsilon(1e-9));
    CHECK(tw.mass_function(g.components[1].b) == doctest::Approx(1.0).epsilon(1e-9));

    // two significant peaks exactly at the branching value
    auto ps = pf.peak_set(m0);
    CutoffPolicy pol;
    auto sig = significant_peaks(ps, pol, 100);
    CHECK(sig.size() == 2);
    CHECK(ps.global_peaks.size() == 2);
}

TEST_CASE("critical indices") {
    DropletGeometry g;
    g.masses = {0.4, 1.0};
    auto idx = critical_indices(g, 10);
    REQUIRE(idx.size() == 1);
    CHECK(idx[0].m == 4);
    CHECK(idx[0].x == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    g.masses = {0.37, 1.0};
    idx = critical_indices(g, 10);
    CHECK(idx[0].m == 3);
    CHECK(idx[0].x == doctest::Approx(0.7).epsilon(1e-12));
    g.masses = {1.0};
    CHECK(critical_indices(g, 7).empty());
}

TEST_CASE("peak trajectory follows dr/dtau = 1/(2 r Delta Q)") {
    auto gin = make_ginibre();
    PeakFinder pf(gin);
    int branch = pf.rising_branches().front();
    std::vector<double> taus;
    for (int i = 1; i <= 50; ++i) taus.push_back(0.1 + 0.8 * i / 50.0);
    auto rs = peak_trajectory(pf, branch, taus);
    for (std::size_t i = 0; i < taus.size(); ++i)
        CHECK(rs[i] == doctest::Approx(std::sqrt(taus[i])).epsilon(1e-11));
    // numerical differentiation against the ODE on the two-well outer branch
    auto tw = two_well();
    PeakFinder pft(tw);
    auto g = compute_droplet(tw);
    int outer = -1;
    for (int br : pft.rising_branches()) {
        auto r = pft.root_on_branch(br, 1.0);
        if (r) outer = br;
    }
    REQUIRE(outer >= 0);
    double tau0 = 0.7, h = 1e-6;
    auto r3 = peak_trajectory(pft, outer, {tau0 - h, tau0, tau0 + h});
    double fd = (r3[2] - r3[0]) / (2.0 * h);
    double ode = 1.0 / (2.0 * r3[1] * tw.laplace_density(r3[1]));
    CHECK(fd == doctest::Approx(ode).epsilon(1e-6));
    // monotone in tau on one branch
    CHECK(r3[0] < r3[1]);
    CHECK(r3[1] < r3[2]);
    // tau outside the branch's range
    CHECK_THROWS_AS(peak_trajectory(pft, outer, {-0.5}), DomainError);
}

TEST_CASE("every root satisfies the peak equations") {
    auto tw = two_well();
    PeakFinder pf(tw);
    for (int i = 1; i <= 64; ++i) {
        double tau = double(i) / 64.0;
        for (const Peak& p : pf.peaks_at(tau)) {
            if (p.r == 0.0) continue;
            CHECK(std::abs(tw.mass_function(p.r) - tau) <= 1e-10);
            CHECK(std::abs(tw.g_tau_d1(tau, p.r)) <= 1e-9);
            CHECK(tw.laplace_density(p.r) > 0.0);
        }
    }
}

TEST_CASE("beta_tau is nondecreasing with jumps at the masses") {
    auto tw = two_well();
    PeakFinder pf(tw);
    auto g = compute_droplet(tw);
    double prev = 0.0;
    for (int i = 1; i <= 300; ++i) {
        double tau = double(i) / 300.0;
        auto ps = pf.peak_set(tau);
        // left-continuous representative: smallest global peak
        double beta = ps.global_peaks.front();
        CHECK(beta >= prev - 1e-12);
        prev = beta;
    }
}

TEST_CASE("outpost family beyond the droplet") {
    auto base = quartic();
    auto pot = solve_outpost_bump(base, 1.7, 0.07);
    auto g = compute_droplet(pot);
    REQUIRE(g.components.size() == 1);
    REQUIRE(g.outposts.size() == 1);
    CHECK(g.outposts[0] == doctest::Approx(1.7).epsilon(1e-6));
    CHECK_FALSE(g.central_disk);
    // P(1) contains the outpost: g_1(t) = B_1 within tie tolerance
    PeakFinder pf(pot);
    auto ps = pf.peak_set(1.0);
    CHECK(ps.global_peaks.size() == 2);
    double t = g.outposts[0];
    CHECK(std::abs(pot.g_tau(1.0, t) - ps.b_tau) <= 1e-9);
    // the droplet itself barely moves
    auto g0 = compute_droplet(base);
    CHECK(g.components[0].b == doctest::Approx(g0.components[0].b).epsilon(1e-6));
}

TEST_CASE("origin outpost family") {
    auto base = quartic();
    auto pot = solve_origin_outpost(base, 0.18);
    auto g = compute_droplet(pot);
    REQUIRE(g.components.size() == 1);
    REQUIRE(g.outposts.size() == 1);
    CHECK(g.outposts[0] == 0.0);
    CHECK(g.components[0].a > 0.5);
}

TEST_CASE("min gap lower bound") {
    auto gin = make_ginibre();
    PeakFinder pf(gin);
    auto ps = pf.peak_set(0.25);
    auto at_peak = min_gap_lower_bound(pf, ps, 0.5);
    CHECK(at_peak.at_peak);
    CHECK(std::isinf(at_peak.value));
    auto mid = min_gap_lower_bound(pf, ps, 0.6);
    CHECK(mid.value > 0.0);
    CHECK_FALSE(mid.clamped);
    auto far = min_gap_lower_bound(pf, ps, 100.0);
    CHECK(far.clamped);
}

TEST_CASE("cutoff policy") {
    CutoffPolicy p;
    CHECK(p.delta_n(100) == doctest::Approx(20.0 * std::log(100.0) / 100.0));
    CHECK(p.eps_n(100) == doctest::Approx(std::sqrt(p.delta_n(100))));
    CHECK(p.d_n(100) == 3);   // ceil(100^(1/6)) = ceil(2.154)
    CHECK(p.d_n(1000) == 4);  // ceil(3.162)
}

TEST_CASE("inner outpost family (outpost inside the hole)") {
    auto base = quartic();
    auto pot = solve_inner_outpost(base, 0.5, 0.06);
    auto g = compute_droplet(pot);
    REQUIRE(g.components.size() == 1);
    REQUIRE(g.outposts.size() == 1);
    CHECK(g.outposts[0] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(g.components[0].a > 0.9);
    // the coincidence conditions hold at the outpost
    double t = g.outposts[0];
    CHECK(std::abs(pot.mass_function(t)) <= 1e-10);
    CHECK(pot.q(t) == doctest::Approx(pot.q(g.components[0].a)).epsilon(1e-9));
    CHECK(pot.laplace_density(t) > 0.0);
}
