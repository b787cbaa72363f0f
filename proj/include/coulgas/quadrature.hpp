#pragma once

// 1D quadrature kit: globally adaptive Gauss-Kronrod 15(7) panels for smooth
// integrands, plus a log-space tanh-sinh rule for windows with an algebraic
// endpoint factor (r^{2alpha} at the origin).  Everything peak-sensitive is
// integrated in log space: callers hand over phi and get back log(int e^phi).

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <vector>

#include "coulgas/common.hpp"

namespace coulgas {

namespace quad_detail {

// 15-point Kronrod extension of 7-point Gauss, abscissae on [0,1]
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a, b;
    double value;
    double error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

template <typename F>
Panel gk15(const F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fk = 0.0, fg = 0.0;
    for (int i = 0; i < 8; ++i) {
        double x = h * kXgk[i];
        double fv = (i == 7) ? f(c) : f(c - x) + f(c + x);
        fk += kWgk[i] * fv;
        if (i % 2 == 1) fg += kWg[i / 2] * fv;  // odd indices are the Gauss nodes
    }
    Panel p;
    p.a = a;
    p.b = b;
    p.value = fk * h;
    double diff = std::abs((fk - fg) * h);
    p.error = diff == 0.0 ? 0.0 : std::min(diff, std::pow(200.0 * diff, 1.5));
    return p;
}

inline double log_cosh(double x) {
    double ax = std::abs(x);
    if (ax > 30.0) return ax - std::log(2.0) + std::log1p(std::exp(-2.0 * ax));
    return std::log(std::cosh(x));
}

}  // namespace quad_detail

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
};

// Globally adaptive GK15: bisect the worst panel until the summed error
// estimate meets max(abs_tol, rel_tol*|I|).
template <typename F>
QuadResult integrate_adaptive(const F& f, double a, double b, double abs_tol = 1e-12,
                              double rel_tol = 1e-13, int max_panels = 4000) {
    using quad_detail::Panel;
    if (!(b > a)) return {0.0, 0.0};
    std::priority_queue<Panel> heap;
    heap.push(quad_detail::gk15(f, a, b));
    double total = heap.top().value;
    double total_err = heap.top().error;
    int panels = 1;
    while (total_err > std::max(abs_tol, rel_tol * std::abs(total))) {
        if (panels >= max_panels)
            throw QuadratureError("integrate_adaptive: panel budget exhausted");
        Panel worst = heap.top();
        heap.pop();
        double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b))
            throw QuadratureError("integrate_adaptive: interval collapsed below ulp");
        Panel l = quad_detail::gk15(f, worst.a, mid);
        Panel r = quad_detail::gk15(f, mid, worst.b);
        total += l.value + r.value - worst.value;
        total_err += l.error + r.error - worst.error;
        heap.push(l);
        heap.push(r);
        ++panels;
    }
    return {total, total_err};
}

// log ( int_a^b e^{phi(r)} dr ) for smooth phi with one or more interior
// peaks.  hints seed the max search; a coarse scan guards against missing a
// narrow spike between hints.
inline double integrate_log_adaptive(const std::function<double(double)>& phi, double a,
                                     double b, const std::vector<double>& hints = {},
                                     double rel_tol = 1e-13, int scan_points = 65,
                                     int max_panels = 4000) {
    if (!(b > a)) return neg_inf;
    double phi_max = neg_inf;
    for (double h : hints)
        if (h >= a && h <= b) phi_max = std::max(phi_max, phi(h));
    for (int i = 0; i <= scan_points; ++i) {
        double r = a + (b - a) * i / scan_points;
        phi_max = std::max(phi_max, phi(r));
    }
    if (!std::isfinite(phi_max)) return neg_inf;
    auto g = [&](double r) {
        double v = phi(r) - phi_max;
        return v < -745.0 ? 0.0 : std::exp(v);
    };
    QuadResult q = integrate_adaptive(g, a, b, 0.0, rel_tol, max_panels);
    if (q.value <= 0.0) return neg_inf;
    return phi_max + std::log(q.value);
}

// log ( int_0^{width} e^{phi(u)} du ) by tanh-sinh, where phi may contain an
// algebraic log-singularity at u = 0 (phi(u) = alpha*log u + smooth).  The
// callback receives the offset from the lower endpoint, which stays accurate
// down to ~1e-300.
inline double integrate_log_tanh_sinh(const std::function<double(double)>& phi_of_offset,
                                      double width, double rel_tol = 1e-13,
                                      int max_level = 12) {
    using quad_detail::log_cosh;
    if (!(width > 0.0)) return neg_inf;
    const double t_max = 6.0;
    const double half = 0.5 * width;
    const double log_jac_const = std::log(half) + std::log(0.5 * constants::pi);

    auto log_term = [&](double t) {
        double u = 0.5 * constants::pi * std::sinh(t);
        if (std::abs(u) > 350.0) return neg_inf;
        double offset = width / (1.0 + std::exp(-2.0 * u));
        if (offset <= 0.0 || offset >= width) return neg_inf;
        double log_jac = log_jac_const + log_cosh(t) - 2.0 * log_cosh(u);
        double v = phi_of_offset(offset);
        return std::isfinite(v) ? v + log_jac : neg_inf;
    };

    double h = 1.0;
    std::vector<double> terms;
    for (double t = -t_max; t <= t_max + 1e-12; t += h) terms.push_back(log_term(t));
    double log_sum = log_sum_exp(terms);             // sum of f(kh)
    double log_I = log_sum + std::log(h);            // level-0 estimate
    for (int level = 1; level <= max_level; ++level) {
        h *= 0.5;
        terms.clear();
        for (double t = -t_max + h; t <= t_max + 1e-12; t += 2.0 * h)
            terms.push_back(log_term(t));
        double log_new = log_sum_exp(terms);
        log_sum = log_add_exp(log_sum, log_new);
        double log_I_next = log_sum + std::log(h);
        double change = std::abs(log_I_next - log_I);
        log_I = log_I_next;
        if (level >= 3 && change < rel_tol) return log_I;
    }
    // tanh-sinh converges geometrically; hitting max_level means phi was wilder
    // than an endpoint-algebraic factor.
    throw QuadratureError("integrate_log_tanh_sinh: no convergence");
}

}  // namespace coulgas
