#pragma once

// q-series and companions: finite and infinite q-Pochhammer symbols, the
// q-binomial identity, the Jacobi theta function, the Theta(x;p,q) form of the
// displacement term and its theta-function bridge, the net displacement term
// G_n, Barnes G, and the Euler-Maclaurin summation rule.  All products are
// carried in log space; at the parameter ranges that appear here (rho < 1,
// powers rho^{2 L_n}) magnitudes reach 1e-80 scales.

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "coulgas/common.hpp"
#include "coulgas/functionals.hpp"
#include "coulgas/quadrature.hpp"

namespace coulgas {

// (z;q)_k = prod_{i=0}^{k-1} (1 - z q^i); empty product = 1
inline double qpoch_finite(double z, double q, long long k) {
    if (k < 0) throw DomainError("qpoch_finite: k must be >= 0");
    double out = 1.0;
    double zq = z;
    for (long long i = 0; i < k; ++i) {
        out *= (1.0 - zq);
        zq *= q;
    }
    return out;
}

// log (z;q)_infty, |q| < 1.  Terms are truncated once |z| q^i < 1e-18 and the
// remaining tail is restored through its leading geometric estimate.
inline double qpoch_infinite_log(double z, double q) {
    if (!(q > 0.0 && q < 1.0))
        throw DomainError("qpoch_infinite_log: need 0 < q < 1");
    if (z == 0.0) return 0.0;
    CompensatedSum acc;
    double zq = z;
    while (std::abs(zq) >= 1e-18) {
        double factor = 1.0 - zq;
        if (factor <= 0.0)
            throw SingularError("qpoch_infinite_log: factor 1 - z q^i <= 0");
        acc.add(std::log1p(-zq));
        zq *= q;
    }
    acc.add(-zq / (1.0 - q));  // sum_{i>=K} log(1 - z q^i) ~ -z q^K/(1-q)
    return acc.value();
}

// |(z;q)_n - q-binomial sum|; diagnostic for the expansion
//   (z;q)_n = sum_k [ (q;q)_n / ((q;q)_k (q;q)_{n-k}) ] q^{k(k-1)/2} (-z)^k
inline double q_binomial_residual(double z, double q, int n) {
    if (n < 0 || n > 60) throw DomainError("q_binomial_residual: need 0 <= n <= 60");
    std::vector<double> qq(n + 1);
    qq[0] = 1.0;
    for (int k = 1; k <= n; ++k) qq[k] = qq[k - 1] * (1.0 - std::pow(q, k));
    double sum = 0.0;
    for (int k = 0; k <= n; ++k) {
        double coeff = qq[n] / (qq[k] * qq[n - k]);
        sum += coeff * std::pow(q, 0.5 * k * (k - 1)) * std::pow(-z, k);
    }
    return std::abs(qpoch_finite(z, q, n) - sum);
}

// theta(z; tau) = sum_l e^{2 pi i l z} e^{pi i l^2 tau}, Im tau > 0
inline std::complex<double> jacobi_theta(std::complex<double> z, std::complex<double> tau) {
    if (!(tau.imag() > 0.0)) throw DomainError("jacobi_theta: need Im tau > 0");
    const std::complex<double> ipi(0.0, constants::pi);
    std::complex<double> sum = 1.0;  // l = 0
    for (long long l = 1;; ++l) {
        double damp = std::exp(-constants::pi * tau.imag() * double(l) * double(l));
        if (damp < 1e-18 && l > 1) break;
        std::complex<double> gauss = std::exp(ipi * (double(l) * double(l)) * tau);
        sum += std::exp(2.0 * ipi * double(l) * z) * gauss;
        sum += std::exp(-2.0 * ipi * double(l) * z) * gauss;
        if (l > 4096) throw QuadratureError("jacobi_theta: series did not decay");
    }
    return sum;
}

// Theta(x;p,q) = x(x-1) log p + x log q + log(-q p^{2x}; p^2)_inf
//              + log(-q^{-1} p^{2(1-x)}; p^2)_inf
inline double big_theta(double x, double p, double q_arg) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("big_theta: need 0 < p < 1");
    if (!(q_arg > 0.0)) throw DomainError("big_theta: need q > 0");
    double p2 = p * p;
    return x * (x - 1.0) * std::log(p) + x * std::log(q_arg) +
           qpoch_infinite_log(-q_arg * std::pow(p, 2.0 * x), p2) +
           qpoch_infinite_log(-std::pow(p, 2.0 * (1.0 - x)) / q_arg, p2);
}

// residual of the bridge between Theta and the Jacobi theta function:
//   Theta = (1/2) log(pi q p^{-1/2} / log(1/p)) + (log q)^2/(4 log(1/p))
//           - sum_{j>=1} log(1 - p^{2j})
//           + log theta(x + 1/2 + log(q)/(2 log p); pi i / log(1/p))
inline double big_theta_bridge_residual(double x, double p, double q_arg) {
    double lp = std::log(1.0 / p);
    double lq = std::log(q_arg);
    double zz = x + 0.5 + lq / (2.0 * std::log(p));
    std::complex<double> th =
        jacobi_theta(std::complex<double>(zz, 0.0),
                     std::complex<double>(0.0, constants::pi / lp));
    double rhs = 0.5 * std::log(constants::pi * q_arg / (std::sqrt(p) * lp)) +
                 lq * lq / (4.0 * lp) - qpoch_infinite_log(p * p, p * p) +
                 std::log(std::abs(th));
    return big_theta(x, p, q_arg) - rhs;
}

// net displacement term
//   G_n = sum_nu [ x_nu log mu_nu - x_nu^2 log rho_nu ]
//       + sum_nu log(-rho_nu mu_nu; rho_nu^2)_inf
//       + sum_nu log(-rho_nu/mu_nu; rho_nu^2)_inf
inline double displacement_gn(const std::vector<double>& x, const std::vector<double>& rho,
                              const std::vector<double>& mu) {
    if (x.size() != rho.size() || x.size() != mu.size())
        throw ValidationError("displacement_gn: mismatched gap arrays");
    CompensatedSum acc;
    for (std::size_t nu = 0; nu < x.size(); ++nu) {
        if (!(rho[nu] > 0.0 && rho[nu] < 1.0))
            throw DomainError("displacement_gn: need 0 < rho < 1");
        if (!(mu[nu] > 0.0)) throw DomainError("displacement_gn: need mu > 0");
        double q = rho[nu] * rho[nu];
        acc.add(x[nu] * std::log(mu[nu]) - x[nu] * x[nu] * std::log(rho[nu]));
        acc.add(qpoch_infinite_log(-rho[nu] * mu[nu], q));
        acc.add(qpoch_infinite_log(-rho[nu] / mu[nu], q));
    }
    return acc.value();
}

inline double displacement_gn(const GapConstants& gaps) {
    return displacement_gn(gaps.x, gaps.rho, gaps.mu);
}

// G_n recomputed through the Theta form; equals displacement_gn identically
inline double displacement_gn_via_theta(const std::vector<double>& x,
                                        const std::vector<double>& rho,
                                        const std::vector<double>& mu) {
    CompensatedSum acc;
    for (std::size_t nu = 0; nu < x.size(); ++nu)
        acc.add(big_theta(x[nu], rho[nu], std::pow(rho[nu], 1.0 - 2.0 * x[nu]) * mu[nu]));
    return acc.value();
}

// Euler identity residual:
//   sum_k q^{k^2/2} theta^k e^{csk} / (q;q)_k = prod_j (1 + theta e^{cs} q^{(2j+1)/2})
inline double euler_identity_residual(double theta, double q, double c, double s) {
    double w = theta * std::exp(c * s);
    double lhs = 0.0;
    double qqk = 1.0;
    for (int k = 0; k < 4000; ++k) {
        if (k > 0) qqk *= (1.0 - std::pow(q, k));
        double term = std::pow(q, 0.5 * double(k) * double(k)) * std::pow(w, k) / qqk;
        lhs += term;
        if (k > 3 && term < 1e-18 * lhs) break;
    }
    double rhs = std::exp(qpoch_infinite_log(-w * std::sqrt(q), q));
    return std::abs(lhs - rhs);
}

// ---------------------------------------------------------------------------
// Barnes G
// ---------------------------------------------------------------------------

// log G(w) for w > 0 via the Weierstrass-type series in z = w - 1:
//   log G(1+z) = (z/2) log 2pi - z(z+1)/2 - gamma z^2/2
//              + sum_{k>=1} [ k log(1+z/k) - z + z^2/(2k) ],
// with the k > K tail restored through zeta values:
//   sum_{k>K} = sum_{m>=3} (-1)^{m+1} z^m/m (zeta(m-1) - H_K^{(m-1)})
inline double log_barnes_g(double w) {
    if (!(w > 0.0)) throw DomainError("log_barnes_g: argument must be > 0");
    double z = w - 1.0;
    if (z == 0.0 || z == 1.0) return 0.0;  // G(1) = G(2) = 1
    const int K = 64;
    CompensatedSum acc;
    acc.add(0.5 * z * constants::log_2pi);
    acc.add(-0.5 * z * (z + 1.0));
    acc.add(-0.5 * constants::euler_gamma * z * z);
    for (int k = 1; k <= K; ++k) {
        double u = z / double(k);
        acc.add(double(k) * std::log1p(u) - z + 0.5 * z * u);
    }
    // zeta-accelerated tail: sum_{k>K} k^{-s} through the Hurwitz expansion at
    // a = K+1 (never as zeta(s) - H_K, which cancels below double precision)
    auto zeta_tail = [&](double s) {
        double a = double(K + 1);
        double t = std::pow(a, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(a, -s) +
                   s * std::pow(a, -s - 1.0) / 12.0 -
                   s * (s + 1.0) * (s + 2.0) * std::pow(a, -s - 3.0) / 720.0 +
                   s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) *
                       std::pow(a, -s - 5.0) / 30240.0;
        return t;
    };
    double zm = z * z * z;  // z^m starting at m = 3
    double sign = 1.0;      // (-1)^{m+1} at m = 3
    for (int m = 3; m <= 200; ++m) {
        double term = sign * zm / double(m) * zeta_tail(double(m - 1));
        acc.add(term);
        if (std::abs(term) < 1e-18) break;
        zm *= z;
        sign = -sign;
    }
    return acc.value();
}

// ---------------------------------------------------------------------------
// Euler-Maclaurin summation
// ---------------------------------------------------------------------------

struct EulerMaclaurinResult {
    double value;       // sum_{j=m}^{n-1} f(j)
    double eps_bound;   // 4 zeta(2d)/(2 pi)^{2d} int |f^{(2d)}|; NaN if unavailable
};

// derivs[j], when present, is f^{(j+1)}; odd orders up to 2d-1 are required at
// the endpoints, the (2d)-th is used for the error bound
inline EulerMaclaurinResult euler_maclaurin_sum(
    const std::function<double(double)>& f,
    const std::vector<std::function<double(double)>>& derivs, double m, double n, int d) {
    if (d < 1 || d > 4) throw DomainError("euler_maclaurin_sum: need 1 <= d <= 4");
    static const double b2k_over_fact[] = {0.0, 1.0 / 12.0, -1.0 / 720.0, 1.0 / 30240.0};
    CompensatedSum acc;
    acc.add(integrate_adaptive(f, m, n, 1e-13, 1e-14).value);
    acc.add(-0.5 * (f(n) - f(m)));
    for (int k = 1; k <= d - 1; ++k) {
        int order = 2 * k - 1;
        if ((int)derivs.size() < order || !derivs[order - 1])
            throw ValidationError("euler_maclaurin_sum: derivative of order " +
                                  std::to_string(order) + " required");
        acc.add(b2k_over_fact[k] * (derivs[order - 1](n) - derivs[order - 1](m)));
    }
    EulerMaclaurinResult res{acc.value(), std::numeric_limits<double>::quiet_NaN()};
    int order2d = 2 * d;
    if ((int)derivs.size() >= order2d && derivs[order2d - 1]) {
        double integral_abs = integrate_adaptive(
                                  [&](double x) { return std::abs(derivs[order2d - 1](x)); },
                                  m, n, 1e-10, 1e-10)
                                  .value;
        res.eps_bound = 4.0 * std::riemann_zeta(double(order2d)) /
                        std::pow(2.0 * constants::pi, order2d) * integral_abs;
    }
    return res;
}

}  // namespace coulgas
