#include <cmath>

#include "coulgas/heine.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace coulgas;

TEST_CASE("heine pmf") {
    // theta -> 0: all mass at k = 0
    HeineDist tiny(1e-14, 0.5);
    CHECK(heine_pmf(tiny, 0) == doctest::Approx(1.0).epsilon(1e-12));
    // normalization by direct summation
    HeineDist d(1.3, 0.6);
    double sum = 0.0;
    for (int k = 0; k < 200; ++k) sum += heine_pmf(d, k);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    // ratio test: pmf(k+1)/pmf(k) = theta q^k / (1 - q^{k+1})
    for (int k = 0; k < 12; ++k) {
        double ratio = heine_pmf(d, k + 1) / heine_pmf(d, k);
        double expect = d.theta * std::pow(d.q, k) / (1.0 - std::pow(d.q, k + 1));
        CHECK(ratio == doctest::Approx(expect).epsilon(1e-11));
    }
    // randomized normalization grid
    RngStream rng(17, 0, 0);
    for (int i = 0; i < 100; ++i) {
        HeineDist dd(0.05 + 4.0 * rng.uniform(), 0.05 + 0.9 * rng.uniform());
        double s2 = 0.0;
        for (int k = 0; k < 400; ++k) {
            double p = heine_pmf(dd, k);
            s2 += p;
            if (k > 5 && p < 1e-18) break;
        }
        CHECK(s2 == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("heine CGF") {
    HeineDist d(1.0, 0.5);
    CHECK(heine_cgf_scaled(d, 1.0, 0.0) == doctest::Approx(0.0).scale(1.0));
    CHECK(heine_cgf_scaled(d, 0.0, 2.5) == doctest::Approx(0.0).scale(1.0));
    // matches the pmf-weighted exponential sum for He(theta sqrt q, q) type
    HeineDist x(1.0 * std::sqrt(0.5), 0.5);
    double c = 1.0, s = 0.3;
    double direct = 0.0;
    for (int k = 0; k < 200; ++k) direct += std::exp(c * s * k) * heine_pmf(x, k);
    CHECK(heine_cgf_scaled(x, c, s) == doctest::Approx(std::log(direct)).epsilon(1e-10));
    // convexity in s on a grid
    RngStream rng(23, 0, 0);
    for (int i = 0; i < 20; ++i) {
        HeineDist dd(0.1 + 2.0 * rng.uniform(), 0.1 + 0.8 * rng.uniform());
        double cc = 0.5 + rng.uniform();
        for (double ss : {-1.0, -0.3, 0.2, 0.9}) {
            double h = 1e-3;
            double second = (heine_cgf_scaled(dd, cc, ss + h) -
                             2.0 * heine_cgf_scaled(dd, cc, ss) +
                             heine_cgf_scaled(dd, cc, ss - h)) /
                            (h * h);
            CHECK(second >= -1e-8);
        }
    }
}

TEST_CASE("heine moments") {
    HeineDist tiny(1e-13, 0.7);
    CHECK(heine_moments(tiny).mean == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    // E q^X = 1/(1+theta), checked against the pmf sum
    HeineDist d(1.7, 0.55);
    double direct = 0.0;
    for (int k = 0; k < 300; ++k) direct += std::pow(d.q, k) * heine_pmf(d, k);
    CHECK(heine_mean_qx(d) == doctest::Approx(direct).epsilon(1e-12));
    CHECK(heine_mean_qx(d) == doctest::Approx(1.0 / 2.7).epsilon(1e-14));
    // mean: series vs pmf-weighted sum
    HeineDist h2(1.0, 0.5);
    double mean_direct = 0.0;
    for (int k = 0; k < 300; ++k) mean_direct += k * heine_pmf(h2, k);
    auto m = heine_moments(h2);
    CHECK(m.mean == doctest::Approx(mean_direct).epsilon(1e-10));
    // q-mean closed form vs pmf-weighted [k]_q
    double qmean_direct = 0.0;
    for (int k = 0; k < 300; ++k)
        qmean_direct += (std::pow(h2.q, k) - 1.0) / (h2.q - 1.0) * heine_pmf(h2, k);
    CHECK(m.q_mean == doctest::Approx(qmean_direct).epsilon(1e-10));
}

TEST_CASE("heine sampler") {
    HeineDist d(1.2, 0.45);
    auto cdf = heine_cdf_table(d);
    std::size_t n = 200000;
    double mean = 0.0;
    std::vector<double> counts(cdf.size() + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        RngStream rng(42, i, 0);
        long long k = heine_sample(cdf, rng);
        mean += double(k);
        if (k < (long long)counts.size()) counts[k] += 1.0;
    }
    mean /= double(n);
    auto mo = heine_moments(d);
    double var = 0.0;  // crude variance bound for the SE: E X^2 via pmf
    for (int k = 0; k < 100; ++k) var += k * k * heine_pmf(d, k);
    var -= mo.mean * mo.mean;
    CHECK(std::abs(mean - mo.mean) <= 4.0 * std::sqrt(var / double(n)));
    // chi-square goodness of fit on the occupied cells
    double chi2 = 0.0;
    int dof = 0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        double expect = heine_pmf(d, k) * double(n);
        if (expect < 10.0) continue;
        chi2 += (counts[k] - expect) * (counts[k] - expect) / expect;
        ++dof;
    }
    CHECK(oracles::chi2_sf(chi2, dof - 1) > 1e-3);
    // theta -> 0 delivers zero
    HeineDist degenerate(1e-14, 0.5);
    RngStream rng(1, 2, 3);
    CHECK(heine_sample(degenerate, rng) == 0);
}

TEST_CASE("discrete normal difference identity") {
    for (auto [theta, rho] : {std::pair{1.0, 0.5}, {2.0, 0.7}, {0.6, 0.3}}) {
        HeineDist xp(theta * rho, rho * rho);
        HeineDist xm(rho / theta, rho * rho);
        CHECK(dnormal_check(xp, xm) <= 1e-10);
    }
    // degenerate rho -> 0: both laws concentrate at zero
    HeineDist xp(1e-6, 1e-12), xm(1e-6, 1e-12);
    CHECK(dnormal_check(xp, xm) <= 1e-10);
}

TEST_CASE("predicted CGF: gapped dual path and reductions") {
    GapConstants gaps;
    gaps.rho = {0.45};
    gaps.theta_alpha = {0.8};
    gaps.c = {1.8};
    gaps.x = {0.37};
    gaps.mu = {0.8 * std::exp(0.5 * 1.8)};
    gaps.k_n = 1.8 * 0.37;
    double e_h = 0.31, v_h = 0.52;
    // dual-path equality is enforced internally; s = 0 gives 0
    CHECK(predicted_cgf_gapped(gaps, e_h, v_h, 0.0) == doctest::Approx(0.0).scale(1.0));
    for (double s : {-1.0, -0.25, 0.5, 1.0})
        CHECK_NOTHROW(predicted_cgf_gapped(gaps, e_h, v_h, s));
    // no gaps: pure Gaussian
    CHECK(predicted_cgf_gaussian(e_h, v_h, 0.7) ==
          doctest::Approx(0.7 * e_h + 0.245 * v_h).epsilon(1e-14));
    // outpost mode at s = 0
    CHECK(predicted_cgf_outpost(0.5, 0.7, 1.1, e_h, v_h, 0.0) ==
          doctest::Approx(0.0).scale(1.0));
    // log-statistic mode at alpha = 0
    CHECK(predicted_cgf_log_statistic(200, 0.0, 1.0, 2.0, 0.3, 0.3) ==
          doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("predicted gapped CGF equals scaled Heine CGF sums") {
    GapConstants gaps;
    gaps.rho = {0.45, 0.3};
    gaps.theta_alpha = {0.8, 1.4};
    gaps.c = {1.8, -0.6};
    gaps.x = {0.37, 0.81};
    for (std::size_t nu = 0; nu < 2; ++nu) gaps.mu.push_back(gaps.theta_alpha[nu]);
    gaps.k_n = 0.0;
    for (std::size_t nu = 0; nu < 2; ++nu) gaps.k_n += gaps.c[nu] * gaps.x[nu];
    double s = 0.6;
    double expect = s * gaps.k_n;
    for (std::size_t nu = 0; nu < 2; ++nu) {
        HeineDist xp(gaps.theta_alpha[nu] * gaps.rho[nu], gaps.rho[nu] * gaps.rho[nu]);
        HeineDist xm(gaps.rho[nu] / gaps.theta_alpha[nu], gaps.rho[nu] * gaps.rho[nu]);
        expect += heine_cgf_scaled(xp, gaps.c[nu], s) + heine_cgf_scaled(xm, -gaps.c[nu], s);
    }
    CHECK(predicted_cgf_gapped(gaps, 0.0, 0.0, s) == doctest::Approx(expect).epsilon(1e-12));
}
