#pragma once

// Geometric functionals of (potential, droplet): equilibrium energy I_Q,
// entropy E_Q, the spectral-determinant term F_Q, boundary expectations e_f,
// variances v_f, sigma-moments and the gap constants (rho, theta, c, mu, K_n).
// All radial integrals are adaptive Gauss-Kronrod with absolute tolerance
// 1e-12; the equilibrium measure restricted to a component is
// d sigma = 2 r Delta Q(r) dr.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "coulgas/common.hpp"
#include "coulgas/droplet.hpp"
#include "coulgas/potential.hpp"
#include "coulgas/quadrature.hpp"

namespace coulgas {

namespace functionals_detail {
inline constexpr double kAbsTol = 1e-12;
inline constexpr double kRelTol = 1e-13;

template <typename F>
double integral(const F& f, double a, double b) {
    return integrate_adaptive(f, a, b, kAbsTol, kRelTol).value;
}
}  // namespace functionals_detail

// int_S f d sigma, radial quadrature over all components
inline double sigma_integral(const RadialPotential& P, const DropletGeometry& G,
                             const RadialFn& f) {
    double lo_clip = std::max(P.working_interval().lo, 1e-8);
    CompensatedSum acc;
    for (const auto& c : G.components) {
        double a = std::max(c.a, lo_clip);
        acc.add(functionals_detail::integral(
            [&](double r) { return f(r) * 2.0 * r * P.laplace_density(r); }, a, c.b));
    }
    return acc.value();
}

// weighted logarithmic energy of the equilibrium measure:
//   I_Q = int_S Q d sigma
//       + sum_nu [ (1/4) int_{a_nu}^{b_nu} r q'(r)^2 dr
//                  + M_{nu-1}^2 log a_nu - M_nu^2 log b_nu ],
// with 0 log 0 := 0 at a_0 = 0
inline double energy_IQ(const RadialPotential& P, const DropletGeometry& G) {
    CompensatedSum acc;
    acc.add(sigma_integral(P, G, [&](double r) { return P.q(r); }));
    for (std::size_t nu = 0; nu < G.components.size(); ++nu) {
        const auto& c = G.components[nu];
        double a = std::max(c.a, P.working_interval().lo);
        acc.add(0.25 * functionals_detail::integral(
                           [&](double r) {
                               double dq = P.deriv(1, r);
                               return r * dq * dq;
                           },
                           a, c.b));
        double m_lo = nu == 0 ? 0.0 : G.masses[nu - 1];
        if (c.a > 0.0) acc.add(m_lo * m_lo * std::log(c.a));
        acc.add(-G.masses[nu] * G.masses[nu] * std::log(c.b));
    }
    return acc.value();
}

// E_Q = int_S log Delta Q d sigma
inline double entropy_EQ(const RadialPotential& P, const DropletGeometry& G) {
    for (const auto& c : G.components) {
        double probe[3] = {std::max(c.a, 1e-6), 0.5 * (c.a + c.b), c.b};
        for (double r : probe)
            if (P.laplace_density(r) <= 0.0)
                throw SingularError("entropy_EQ: Delta Q <= 0 on a component");
    }
    return sigma_integral(P, G, [&](double r) { return std::log(P.laplace_density(r)); });
}

// F_Q for one component
inline double fq_component(const RadialPotential& P, const AnnulusComponent& c) {
    double dq_b = P.laplace_density(c.b);
    if (dq_b <= 0.0) throw SingularError("fq_component: Delta Q(b) <= 0");
    double lo = std::max(c.a, P.working_interval().lo);
    double bulk = functionals_detail::integral(
        [&](double r) {
            double ratio = P.laplace_density_d1(r) / P.laplace_density(r);
            return ratio * ratio * r;
        },
        lo, c.b);
    double out;
    if (c.a == 0.0) {
        out = std::log(1.0 / (c.b * c.b * dq_b)) / 12.0 -
              c.b * P.laplace_density_d1(c.b) / dq_b / 16.0 + bulk / 24.0;
    } else {
        double dq_a = P.laplace_density(c.a);
        if (dq_a <= 0.0) throw SingularError("fq_component: Delta Q(a) <= 0");
        out = std::log(c.a * c.a * dq_a / (c.b * c.b * dq_b)) / 12.0 -
              (c.b * P.laplace_density_d1(c.b) / dq_b -
               c.a * P.laplace_density_d1(c.a) / dq_a) /
                  16.0 +
              bulk / 24.0;
    }
    return out;
}

struct FqResult {
    double total;
    std::vector<double> per_component;
};

inline FqResult fq_total(const RadialPotential& P, const DropletGeometry& G) {
    FqResult res{0.0, {}};
    CompensatedSum acc;
    for (const auto& c : G.components) {
        double v = fq_component(P, c);
        res.per_component.push_back(v);
        acc.add(v);
    }
    res.total = acc.value();
    return res;
}

// ---------------------------------------------------------------------------
// Boundary expectations e_f and variances v_f
// ---------------------------------------------------------------------------

// e_{nu,f}: outer circle contributes +(b/4) f'(b) - (b/4) f(b) DQ'(b)/DQ(b),
// the inner circle the sign-flipped analogue, plus the bulk term
// (1/2) int f * (Laplacian of log Delta Q) dA
inline double boundary_e_component(const RadialPotential& P, const AnnulusComponent& c,
                                   const TestFunction& f) {
    double lo = std::max(c.a, 1e-6);
    double bulk = functionals_detail::integral(
        [&](double r) {
            double dq = P.laplace_density(r);
            double l1 = P.laplace_density_d1(r) / dq;
            double l2 = P.laplace_density_d2(r) / dq - l1 * l1;
            double lap_log = (l2 + l1 / r) / 4.0;
            return 0.5 * f.f(r) * lap_log * 2.0 * r;
        },
        lo, c.b);
    double dq_b = P.laplace_density(c.b);
    double edge = c.b / 4.0 * f.d1(c.b) -
                  c.b / 4.0 * f.f(c.b) * P.laplace_density_d1(c.b) / dq_b;
    if (c.a > 0.0) {
        double dq_a = P.laplace_density(c.a);
        edge += -c.a / 4.0 * f.d1(c.a) +
                c.a / 4.0 * f.f(c.a) * P.laplace_density_d1(c.a) / dq_a;
    }
    return bulk + edge;
}

inline double boundary_e(const RadialPotential& P, const DropletGeometry& G,
                         const TestFunction& f) {
    CompensatedSum acc;
    for (const auto& c : G.components) acc.add(boundary_e_component(P, c, f));
    return acc.value();
}

// e_{h,alpha} = e_h + (alpha/2) sum_{nu>=1} int grad h . grad l dA
//             + alpha (h(b_0) - h(0));
// for radial h the cross term is 4 (h(b_nu) - h(a_nu)) per component
inline double boundary_e_alpha(const RadialPotential& P, const DropletGeometry& G,
                               const TestFunction& h, double alpha) {
    if (!G.central_disk)
        throw DomainError("boundary_e_alpha: defined for central disk droplets");
    double out = boundary_e(P, G, h);
    for (std::size_t nu = 1; nu < G.components.size(); ++nu)
        out += 2.0 * alpha * (h.f(G.components[nu].b) - h.f(G.components[nu].a));
    out += alpha * (h.f(G.components[0].b) - h.f(0.0));
    return out;
}

inline double variance_v_component(const RadialPotential& P, const AnnulusComponent& c,
                                   const TestFunction& f) {
    if (c.a == 0.0 && !f.bounded)
        throw SingularError("variance diverges for an unbounded statistic on a central disk");
    double lo = std::max(c.a, P.working_interval().lo);
    return 0.5 * functionals_detail::integral(
                     [&](double r) {
                         double d = f.d1(r);
                         return d * d * r;
                     },
                     lo, c.b);
}

inline double variance_v(const RadialPotential& P, const DropletGeometry& G,
                         const TestFunction& f) {
    CompensatedSum acc;
    for (const auto& c : G.components) acc.add(variance_v_component(P, c, f));
    return acc.value();
}

// e~_l = e_l + log(2 pi)/2
inline double e_tilde_log(const RadialPotential& P, const DropletGeometry& G) {
    return boundary_e(P, G, tf_log2()) + 0.5 * constants::log_2pi;
}

// v~_l = log(b_0^2 Delta Q(0)) + sum_{nu>=1} v_{nu,l}
inline double v_tilde_log(const RadialPotential& P, const DropletGeometry& G) {
    if (!G.central_disk) throw DomainError("v_tilde_log: central disk droplets only");
    double dq0 = P.laplace_density(P.working_interval().lo);
    double out = std::log(G.components[0].b * G.components[0].b * dq0);
    TestFunction ell = tf_log2();
    for (std::size_t nu = 1; nu < G.components.size(); ++nu)
        out += variance_v_component(P, G.components[nu], ell);
    return out;
}

// ---------------------------------------------------------------------------
// Gap constants
// ---------------------------------------------------------------------------

struct GapConstants {
    std::vector<double> rho;          // b_nu / a_{nu+1}
    std::vector<double> theta_alpha;  // sqrt(DQ(b_nu)/DQ(a_{nu+1})) rho^{2(x_nu - alpha)}
    std::vector<double> c;            // h(a_{nu+1}) - h(b_nu)
    std::vector<double> mu;           // theta e^{s c}
    std::vector<double> x;            // fractional parts {M_nu n}
    double k_n = 0.0;                 // sum c_nu x_nu

    std::size_t size() const { return rho.size(); }
};

inline GapConstants gap_constants(const RadialPotential& P, const DropletGeometry& G,
                                  const TestFunction& h, const Perturbation& pert,
                                  long long n) {
    if (G.gap_count() == 0) throw DomainError("gap_constants: droplet has no gaps");
    GapConstants gc;
    auto idx = critical_indices(G, n);
    for (int nu = 0; nu < G.gap_count(); ++nu) {
        double b = G.components[nu].b;
        double a1 = G.components[nu + 1].a;
        double rho = b / a1;
        double x = idx[nu].x;
        double theta = std::sqrt(P.laplace_density(b) / P.laplace_density(a1)) *
                       std::pow(rho, 2.0 * (x - pert.alpha));
        double c = h.f(a1) - h.f(b);
        gc.rho.push_back(rho);
        gc.theta_alpha.push_back(theta);
        gc.c.push_back(c);
        gc.mu.push_back(theta * std::exp(pert.s * c));
        gc.x.push_back(x);
        gc.k_n += c * x;
    }
    return gc;
}

// ---------------------------------------------------------------------------
// Sigma moments with the log-statistic identity gate
// ---------------------------------------------------------------------------

struct SigmaMomentResult {
    double quadrature;
    double closed_form = 0.0;  // only for the log statistic
    bool has_closed_form = false;
};

// int l d sigma = -(q(b_N) - 2 log b_N - q(a_0)); for f = l both routes are
// computed and must agree to 1e-9 (droplet-detection gate)
inline SigmaMomentResult sigma_moment(const RadialPotential& P, const DropletGeometry& G,
                                      const TestFunction& f) {
    SigmaMomentResult res;
    res.quadrature = sigma_integral(P, G, [&](double r) { return f.f(r); });
    if (f.name == "log2") {
        double bN = G.components.back().b;
        double a0 = G.central_disk ? P.working_interval().lo : G.components.front().a;
        res.closed_form = -(P.q(bN) - 2.0 * std::log(bN) - P.q(a0));
        res.has_closed_form = true;
        if (std::abs(res.closed_form - res.quadrature) > 1e-9)
            throw IdentityError("sigma_moment: log-statistic identity violated (quad " +
                                std::to_string(res.quadrature) + " vs closed " +
                                std::to_string(res.closed_form) + ")");
    }
    return res;
}

// ---------------------------------------------------------------------------
// int B d sigma identity (per component)
// ---------------------------------------------------------------------------

// annulus:    int_{S^nu} B d sigma = F_Q - (1/4) log(DQ(b)/DQ(a)) + (1/3) log(b/a)
// central disk (as eps -> 0):
//   int_{[eps,b]} B d sigma + (1/6) log eps
//     -> F_Q + (1/3) log b + (1/12) log DQ(0) - (1/4) log(DQ(b)/DQ(0))
inline double b_integral_identity_residual(const RadialPotential& P,
                                           const DropletGeometry& G, int nu) {
    const AnnulusComponent& c = G.components.at(nu);
    auto integrand = [&](double r) {
        return P.curvature_B(r) * 2.0 * r * P.laplace_density(r);
    };
    double fq = fq_component(P, c);
    if (c.a > 0.0) {
        double lhs = functionals_detail::integral(integrand, c.a, c.b);
        double rhs = fq -
                     0.25 * std::log(P.laplace_density(c.b) / P.laplace_density(c.a)) +
                     std::log(c.b / c.a) / 3.0;
        return lhs - rhs;
    }
    double dq0 = P.laplace_density(P.working_interval().lo);
    auto shifted = [&](double eps) {
        return functionals_detail::integral(integrand, eps, c.b) + std::log(eps) / 6.0;
    };
    // Richardson in eps: L(eps) = L0 + c1 eps + c2 eps^2 + ...
    double e0 = 1e-3;
    double l0 = shifted(e0), l1 = shifted(e0 / 2.0), l2 = shifted(e0 / 4.0);
    double r0 = 2.0 * l1 - l0, r1 = 2.0 * l2 - l1;
    double lhs = (4.0 * r1 - r0) / 3.0;
    double rhs = fq + std::log(c.b) / 3.0 + std::log(dq0) / 12.0 -
                 0.25 * std::log(P.laplace_density(c.b) / dq0);
    return lhs - rhs;
}

}  // namespace coulgas
