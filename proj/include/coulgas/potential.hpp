#pragma once

// Radial potentials q(r) = Q(|z|), radial test functions h, and the (s,alpha)
// perturbation.  Everything downstream consumes the local quantities defined
// here: Delta Q and its radial derivatives, the mass function T(r) = r q'(r)/2,
// g_tau(r) = q(r) - 2 tau log r, the curvature kernel B(r), and the peak
// derivatives d2, d3, d4 of g_tau at its critical points.

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "coulgas/common.hpp"

namespace coulgas {

using RadialFn = std::function<double(double)>;

// ---------------------------------------------------------------------------
// Test functions
// ---------------------------------------------------------------------------

struct TestFunction {
    std::string name;
    RadialFn f;
    RadialFn d1;
    RadialFn d2;
    RadialFn d3;
    RadialFn d4;
    bool bounded = true;

    double operator()(double r) const { return f(r); }
};

inline TestFunction tf_const(double c) {
    auto zero = [](double) { return 0.0; };
    return {"const", [c](double) { return c; }, zero, zero, zero, zero, true};
}

inline TestFunction tf_r2() {
    return {"r2",
            [](double r) { return r * r; },
            [](double r) { return 2.0 * r; },
            [](double) { return 2.0; },
            [](double) { return 0.0; },
            [](double) { return 0.0; },
            true};
}

// smooth bump sech((r-c)/w)
inline TestFunction tf_cosh_window(double c, double w) {
    auto u = [c, w](double r) { return (r - c) / w; };
    return {"cosh_window",
            [u](double r) { return 1.0 / std::cosh(u(r)); },
            [u, w](double r) {
                double s = 1.0 / std::cosh(u(r)), t = std::tanh(u(r));
                return -s * t / w;
            },
            [u, w](double r) {
                double s = 1.0 / std::cosh(u(r)), t = std::tanh(u(r));
                return s * (t * t - s * s) / (w * w);
            },
            [u, w](double r) {
                double s = 1.0 / std::cosh(u(r)), t = std::tanh(u(r));
                return s * t * (5.0 * s * s - t * t) / (w * w * w);
            },
            [u, w](double r) {
                double s = 1.0 / std::cosh(u(r)), t = std::tanh(u(r));
                return s * (t * t * t * t - 18.0 * s * s * t * t + 5.0 * s * s * s * s) /
                       (w * w * w * w);
            },
            true};
}

// logistic step: ~0 left of c, ~1 right of c, transition width w
inline TestFunction tf_smooth_indicator(double c, double w) {
    auto sig = [c, w](double r) { return 1.0 / (1.0 + std::exp(-(r - c) / w)); };
    return {"indicator_smoothed",
            sig,
            [sig, w](double r) {
                double p = sig(r);
                return p * (1.0 - p) / w;
            },
            [sig, w](double r) {
                double p = sig(r);
                return p * (1.0 - p) * (1.0 - 2.0 * p) / (w * w);
            },
            [sig, w](double r) {
                double p = sig(r);
                return p * (1.0 - p) * (1.0 - 6.0 * p + 6.0 * p * p) / (w * w * w);
            },
            [sig, w](double r) {
                double p = sig(r);
                return p * (1.0 - p) * (1.0 - 2.0 * p) * (1.0 - 12.0 * p + 12.0 * p * p) /
                       (w * w * w * w);
            },
            true};
}

// the logarithmic statistic l(r) = 2 log r (unbounded; used as a statistic,
// never as a bounded perturbation)
inline TestFunction tf_log2() {
    return {"log2",
            [](double r) { return 2.0 * std::log(r); },
            [](double r) { return 2.0 / r; },
            [](double r) { return -2.0 / (r * r); },
            [](double r) { return 4.0 / (r * r * r); },
            [](double r) { return -12.0 / (r * r * r * r); },
            false};
}

// ---------------------------------------------------------------------------
// Perturbation Q - (s h + alpha l)/n
// ---------------------------------------------------------------------------

struct Perturbation {
    double s = 0.0;
    double alpha = 0.0;

    void validate() const {
        if (!(alpha > -1.0)) throw ValidationError("Perturbation: alpha must be > -1");
    }
    bool trivial() const { return s == 0.0 && alpha == 0.0; }
};

// k(r) = s h(r) + alpha * 2 log r, with first and second derivatives
inline double combined_k(const TestFunction& h, const Perturbation& p, double r) {
    if (r <= 0.0 && p.alpha != 0.0)
        throw DomainError("combined_k: r = 0 with alpha != 0");
    return p.s * h.f(r) + p.alpha * 2.0 * std::log(r);
}
inline double combined_k_d1(const TestFunction& h, const Perturbation& p, double r) {
    return p.s * h.d1(r) + p.alpha * 2.0 / r;
}
inline double combined_k_d2(const TestFunction& h, const Perturbation& p, double r) {
    return p.s * h.d2(r) - p.alpha * 2.0 / (r * r);
}

// ---------------------------------------------------------------------------
// Radial potential
// ---------------------------------------------------------------------------

struct PeakDerivs {
    double d2;
    double d3;
    double d4;
};

class RadialPotential {
  public:
    // derivs[k-1] is q^(k); missing entries fall back to central finite
    // differences with Richardson extrapolation
    RadialPotential(std::string family, RadialFn q,
                    std::array<RadialFn, 6> derivs, Interval working,
                    bool finite_at_origin)
        : family_(std::move(family)),
          q_(std::move(q)),
          derivs_(std::move(derivs)),
          working_(working),
          finite_at_origin_(finite_at_origin) {
        growth_margin_ = estimate_growth_margin();
    }

    const std::string& family() const { return family_; }
    const Interval& working_interval() const { return working_; }
    bool finite_at_origin() const { return finite_at_origin_; }
    double growth_margin() const { return growth_margin_; }

    double q(double r) const { return q_(r); }

    double deriv(int k, double r) const {
        if (k == 0) return q_(r);
        if (k < 1 || k > 6) throw DomainError("RadialPotential::deriv: order out of range");
        if (derivs_[k - 1]) return derivs_[k - 1](r);
        return fd_deriv(k, r);
    }

    void check_range(double r) const {
        if (!(r >= working_.lo && r <= working_.hi))
            throw DomainError("radius " + std::to_string(r) + " outside working interval [" +
                              std::to_string(working_.lo) + ", " + std::to_string(working_.hi) +
                              "]");
    }

    // Delta Q(r) = (q'' + q'/r)/4 and its radial derivatives
    double laplace_density(double r) const {
        check_range(r);
        return laplace_raw(r);
    }
    double laplace_density_d1(double r) const {
        check_range(r);
        return (deriv(3, r) + deriv(2, r) / r - deriv(1, r) / (r * r)) / 4.0;
    }
    double laplace_density_d2(double r) const {
        check_range(r);
        return (deriv(4, r) + deriv(3, r) / r - 2.0 * deriv(2, r) / (r * r) +
                2.0 * deriv(1, r) / (r * r * r)) /
               4.0;
    }

    // T(r) = r q'(r)/2; on the droplet T(b_nu) = M_nu
    double mass_function(double r) const {
        check_range(r);
        return 0.5 * r * deriv(1, r);
    }
    // T'(r) = 2 r Delta Q(r)
    double mass_function_d1(double r) const { return 2.0 * r * laplace_density(r); }

    double g_tau(double tau, double r) const { return q_(r) - 2.0 * tau * std::log(r); }
    double g_tau_d1(double tau, double r) const { return deriv(1, r) - 2.0 * tau / r; }
    double g_tau_d2(double tau, double r) const { return deriv(2, r) + 2.0 * tau / (r * r); }

    // curvature kernel entering the 1/n norm correction
    double curvature_B(double r) const {
        double dq = laplace_density(r);
        if (dq <= kSingularTol)
            throw SingularError("curvature_B: Delta Q <= 0 at r = " + std::to_string(r));
        double d1 = laplace_density_d1(r);
        double d2 = laplace_density_d2(r);
        return -d2 / (32.0 * dq * dq) - 19.0 * d1 / (96.0 * r * dq * dq) +
               5.0 * d1 * d1 / (96.0 * dq * dq * dq) + 1.0 / (12.0 * r * r * dq);
    }

    // d2 = g_tau''(r), d3 = g_tau^(3)(r), d4 = g_tau^(4)(r) at a critical point
    // of g_tau, expressed through Delta Q
    PeakDerivs peak_derivatives(double r) const {
        double dq = laplace_density(r);
        if (dq <= kSingularTol)
            throw SingularError("peak_derivatives: Delta Q <= 0 at r = " + std::to_string(r));
        double d1 = laplace_density_d1(r);
        double d2 = laplace_density_d2(r);
        PeakDerivs out;
        out.d2 = 4.0 * dq;
        out.d3 = 4.0 * d1 - 4.0 * dq / r;
        out.d4 = 4.0 * d2 + 12.0 * dq / (r * r) - 4.0 * d1 / r;
        return out;
    }

    // consistency gate: analytic derivatives vs central finite differences of q
    // on a sample grid, relative 1e-6
    void validate(int grid_points = 100, double rel_tol = 1e-6) const {
        if (!(growth_margin_ > 0.0))
            throw ValidationError("potential not confining: growth margin " +
                                  std::to_string(growth_margin_));
        double lo = std::max(working_.lo, 0.05);
        double hi = working_.hi * 0.9;
        // each supplied derivative must be the derivative of the previous one;
        // a first difference with Richardson stays sharp even for narrow bumps
        auto first_diff = [](const RadialFn& f, double r) {
            double h = std::max(1e-4, 1e-4 * r);
            auto stencil = [&](double s) { return (f(r + s) - f(r - s)) / (2.0 * s); };
            double s0 = stencil(h), s1 = stencil(0.5 * h), s2 = stencil(0.25 * h);
            double r1a = s1 + (s1 - s0) / 3.0;
            double r1b = s2 + (s2 - s1) / 3.0;
            return r1b + (r1b - r1a) / 15.0;
        };
        for (int i = 0; i <= grid_points; ++i) {
            double r = lo + (hi - lo) * i / grid_points;
            for (int k = 1; k <= 4; ++k) {
                if (!derivs_[k - 1]) continue;
                const RadialFn& below = k == 1 ? q_ : derivs_[k - 2];
                if (!below) continue;
                double a = derivs_[k - 1](r);
                double fd = first_diff(below, r);
                double scale = std::max({std::abs(a), std::abs(fd), 1.0});
                if (std::abs(a - fd) > rel_tol * scale)
                    throw ValidationError("analytic q^(" + std::to_string(k) +
                                          ") disagrees with finite differences at r = " +
                                          std::to_string(r));
            }
        }
    }

    static constexpr double kSingularTol = 1e-12;

  private:
    double laplace_raw(double r) const { return (deriv(2, r) + deriv(1, r) / r) / 4.0; }

    double fd_deriv(int k, double r) const {
        // step grows with the order: double-precision noise in a k-th central
        // difference scales like eps/h^k
        static constexpr double base[5] = {0.0, 1e-4, 2e-3, 8e-3, 1.6e-2};
        double c = k <= 4 ? base[k] : 2e-2;
        double h = std::max(c, c * r);
        if (r > 0.0) h = std::min(h, r / 4.0);  // keep the stencil on r > 0
        auto stencil = [&](double step) {
            switch (k) {
                case 1:
                    return (q_(r + step) - q_(r - step)) / (2.0 * step);
                case 2:
                    return (q_(r + step) - 2.0 * q_(r) + q_(r - step)) / (step * step);
                case 3:
                    return (q_(r + 2 * step) - 2.0 * q_(r + step) + 2.0 * q_(r - step) -
                            q_(r - 2 * step)) /
                           (2.0 * step * step * step);
                case 4:
                    return (q_(r + 2 * step) - 4.0 * q_(r + step) + 6.0 * q_(r) -
                            4.0 * q_(r - step) + q_(r - 2 * step)) /
                           (step * step * step * step);
                default: {
                    // recurse through lower-order differences for k = 5, 6
                    double hh = std::max(1e-4, 1e-4 * r);
                    return (fd_deriv(k - 1, r + hh) - fd_deriv(k - 1, r - hh)) / (2.0 * hh);
                }
            }
        };
        if (k >= 5) return stencil(h);
        // two Richardson levels: central stencils have even error series
        double s0 = stencil(h), s1 = stencil(0.5 * h), s2 = stencil(0.25 * h);
        double r1a = s1 + (s1 - s0) / 3.0;
        double r1b = s2 + (s2 - s1) / 3.0;
        return r1b + (r1b - r1a) / 15.0;
    }

    double estimate_growth_margin() const {
        double margin = std::numeric_limits<double>::infinity();
        for (double r : {10.0, 100.0, 1000.0})
            margin = std::min(margin, q_(r) / std::log(r) - 2.0);
        return margin;
    }

    std::string family_;
    RadialFn q_;
    std::array<RadialFn, 6> derivs_;
    Interval working_;
    bool finite_at_origin_;
    double growth_margin_;
};

// ---------------------------------------------------------------------------
// Built-in families
// ---------------------------------------------------------------------------

namespace detail {

// largest root of T(r) = 1, used to size the working interval
template <typename Tfun>
double outer_mass_radius(const Tfun& T, double scan_hi = 64.0) {
    double lo = 1e-6, hi = scan_hi;
    while (T(hi) < 1.0) {
        hi *= 2.0;
        if (hi > 1e9) throw ValidationError("potential: T(r) never reaches 1");
    }
    // walk down from the far end to bracket the outermost crossing
    double prev = hi;
    const int n = 4096;
    for (int i = 1; i <= n; ++i) {
        double r = hi - (hi - lo) * i / n;
        if (T(r) < 1.0) {
            lo = r;
            break;
        }
        prev = r;
    }
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + prev);
        (T(mid) < 1.0 ? lo : prev) = mid;
    }
    return 0.5 * (lo + prev);
}

inline Interval default_working_interval(const RadialFn& dq) {
    auto T = [&](double r) { return 0.5 * r * dq(r); };
    double b_est = outer_mass_radius(T);
    return {1e-8, 2.0 * b_est + 1.0};
}

}  // namespace detail

inline RadialPotential make_ginibre() {
    RadialFn q = [](double r) { return r * r; };
    std::array<RadialFn, 6> d = {
        [](double r) { return 2.0 * r; }, [](double) { return 2.0; },
        [](double) { return 0.0; },       [](double) { return 0.0; },
        [](double) { return 0.0; },       [](double) { return 0.0; }};
    return RadialPotential("ginibre", q, d, {1e-8, 3.0}, true);
}

// q(r) = sum_k c_k r^{2k}, k = 1..K (c.front() multiplies r^2)
inline RadialPotential make_even_polynomial(std::vector<double> coeffs) {
    if (coeffs.empty() || coeffs.back() <= 0.0)
        throw ValidationError("even_polynomial: leading coefficient must be > 0");
    auto poly_deriv = [coeffs](int order, double r) {
        double acc = 0.0;
        for (std::size_t i = 0; i < coeffs.size(); ++i) {
            int p = 2 * static_cast<int>(i + 1);
            if (p < order) continue;
            double fac = 1.0;
            for (int m = 0; m < order; ++m) fac *= (p - m);
            acc += coeffs[i] * fac * std::pow(r, p - order);
        }
        return acc;
    };
    RadialFn q = [poly_deriv](double r) { return poly_deriv(0, r); };
    std::array<RadialFn, 6> d;
    for (int k = 1; k <= 6; ++k)
        d[k - 1] = [poly_deriv, k](double r) { return poly_deriv(k, r); };
    Interval w = detail::default_working_interval(d[0]);
    // finite at origin always (polynomial); central disk iff Delta Q(0) > 0,
    // which geometry detection decides later
    return RadialPotential("even_polynomial", q, d, w, true);
}

// base potential plus a radial Gaussian well -depth * exp(-(r-center)^2/(2 w^2))
inline RadialPotential make_base_plus_bump(const RadialPotential& base, double center,
                                           double depth, double width) {
    if (width <= 0.0) throw ValidationError("base_plus_bump: width must be > 0");
    auto bump_deriv = [center, depth, width](int order, double r) {
        double u = (r - center) / width;
        double g = -depth * std::exp(-0.5 * u * u);
        // Hermite-style recursion: d^n/dr^n g = g * He_n(u) * (-1/width)^n
        double he0 = 1.0, he1 = u;
        std::array<double, 7> he{};
        he[0] = he0;
        he[1] = he1;
        for (int n = 2; n <= 6; ++n) he[n] = u * he[n - 1] - (n - 1) * he[n - 2];
        double sign = (order % 2 == 0) ? 1.0 : -1.0;
        return g * he[order] * sign / std::pow(width, order);
    };
    auto base_ptr = std::make_shared<RadialPotential>(base);
    RadialFn q = [base_ptr, bump_deriv](double r) {
        return base_ptr->q(r) + bump_deriv(0, r);
    };
    std::array<RadialFn, 6> d;
    for (int k = 1; k <= 6; ++k)
        d[k - 1] = [base_ptr, bump_deriv, k](double r) {
            return base_ptr->deriv(k, r) + bump_deriv(k, r);
        };
    Interval w = base.working_interval();
    w.hi = std::max(w.hi, center + 12.0 * width + 1.0);
    return RadialPotential("base_plus_bump", q, d, w, base.finite_at_origin());
}

}  // namespace coulgas
