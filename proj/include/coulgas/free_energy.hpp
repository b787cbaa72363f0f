#pragma once

// Exact log Z_n through the product formula Z_n = n! prod_j h_j, with
//   h_j = 2 int_0^inf r^{1+2 alpha} e^{s h(r)} e^{-n g_{tau(j)}(r)} dr,
// tau(j) = j/n.  Each h_j is integrated over windows around the significant
// peaks of g_{tau(j)} (log space, adaptive), windows near the origin switch to
// u = r^2 with a tanh-sinh rule for the u^alpha endpoint factor.  On top of
// the exact pipeline: the Laplace fast path with its 1/n correction, the two
// expansion theorems, the outpost free-energy ratio and comparison tables.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "coulgas/common.hpp"
#include "coulgas/droplet.hpp"
#include "coulgas/functionals.hpp"
#include "coulgas/heine.hpp"
#include "coulgas/potential.hpp"
#include "coulgas/qspecial.hpp"
#include "coulgas/quadrature.hpp"

namespace coulgas {

struct MultiPeakError : Error {
    using Error::Error;
};

struct NormPolicy {
    CutoffPolicy cutoff;
    double quad_rel_tol = 1e-13;
    double tail_rel_bound = 1e-10;
    int tail_grid = 512;
    bool laplace_bulk = false;   // opt-in fast path
    int laplace_spot_check = 50; // quadrature spot check stride when laplace_bulk
    int workers = 0;
    std::optional<Interval> restrict_to;  // localized potential support
};

enum class NormMethod { quadrature, laplace, gamma_closed_form };

struct NormWindow {
    Interval iv;
    double peak_r;    // peak radius (0 for the origin window)
    double log_mass;  // log of the window's contribution to h_j
};

struct NormEntry {
    long long j = 0;
    double log_h = 0.0;
    NormMethod method = NormMethod::quadrature;
    std::vector<NormWindow> windows;
    double est_err = 0.0;
};

struct NormTable {
    long long n = 0;
    Perturbation pert;
    std::vector<NormEntry> entries;

    double sum_log_h() const {
        CompensatedSum acc;
        for (const auto& e : entries) acc.add(e.log_h);
        return acc.value();
    }
    double log_z() const { return log_factorial(n) + sum_log_h(); }
};

// ---------------------------------------------------------------------------
// Norm engine
// ---------------------------------------------------------------------------

class NormEngine {
  public:
    NormEngine(const RadialPotential& P, const PeakFinder& pf, const DropletGeometry& G,
               const TestFunction& h, const Perturbation& pert, long long n,
               const NormPolicy& policy)
        : P_(&P), pf_(&pf), G_(&G), h_(&h), pert_(pert), n_(n), policy_(policy) {
        pert_.validate();
        if (n < 1) throw ValidationError("NormEngine: n must be >= 1");
        if (std::abs(pert.s) > std::log(double(n)))
            throw ValidationError("NormEngine: |s| must be <= log n");
        domain_ = {0.0, P.working_interval().hi};
        // at small n the confinement tail decays slowly; push the outer cut
        // until the j = n-1 integrand is ~e^{-60} below its peak value
        double ref = phi(n_ - 1, G.outer_radius());
        while (phi(n_ - 1, domain_.hi) > ref - 60.0 && domain_.hi < 1e6)
            domain_.hi *= 1.25;
        if (policy.restrict_to) {
            domain_.lo = std::max(domain_.lo, policy.restrict_to->lo);
            domain_.hi = std::min(domain_.hi, policy.restrict_to->hi);
        }
        indices_ = critical_indices(G, n);
    }

    long long n() const { return n_; }

    // log integrand of h_j (the factor 2 is accounted for at assembly)
    double phi(long long j, double r) const {
        return (1.0 + 2.0 * pert_.alpha + 2.0 * double(j)) * std::log(r) +
               pert_.s * h_->f(r) - double(n_) * P_->q(r);
    }

    NormEntry norm_quadrature(long long j) const {
        check_j(j);
        double tau = double(j) / double(n_);
        NormEntry entry;
        entry.j = j;
        entry.method = NormMethod::quadrature;
        auto windows = build_windows(j, tau);
        std::vector<double> masses;
        for (auto& w : windows) {
            w.log_mass = window_mass(j, w);
            masses.push_back(w.log_mass);
        }
        entry.log_h = log_sum_exp(masses);
        if (!std::isfinite(entry.log_h))
            throw QuadratureError("norm_quadrature: vanished integral at j = " +
                                  std::to_string(j));
        entry.windows = std::move(windows);
        entry.est_err = std::abs(entry.log_h) * policy_.quad_rel_tol;
        check_tail_mass(j, entry);
        return entry;
    }

    // Laplace approximation with the 1/n correction; requires a unique
    // significant peak
    NormEntry norm_laplace(long long j) const {
        check_j(j);
        double tau = double(j) / double(n_);
        auto peaks = selected_peaks(tau);
        std::vector<Peak> significant;
        double b_tau = peaks.front().g;
        for (const Peak& p : peaks) b_tau = std::min(b_tau, p.g);
        for (const Peak& p : peaks)
            if (p.g < b_tau + policy_.cutoff.delta_n(n_)) significant.push_back(p);
        if (significant.size() != 1)
            throw MultiPeakError("norm_laplace: " + std::to_string(significant.size()) +
                                 " significant peaks at j = " + std::to_string(j));
        const Peak& pk = significant.front();
        if (pk.r <= 0.0)
            throw MultiPeakError("norm_laplace: origin peak has no Laplace form");
        PeakDerivs d = P_->peak_derivatives(pk.r);
        if (d.d2 <= 0.0) throw SingularError("norm_laplace: d2 <= 0");
        // f(r) = 2 r^{1+2 alpha} e^{s h};  u = (log f)', v = (log f)''
        double u = (1.0 + 2.0 * pert_.alpha) / pk.r + pert_.s * h_->d1(pk.r);
        double v = -(1.0 + 2.0 * pert_.alpha) / (pk.r * pk.r) + pert_.s * h_->d2(pk.r);
        double a = -d.d4 / (8.0 * d.d2 * d.d2) +
                   5.0 * d.d3 * d.d3 / (24.0 * d.d2 * d.d2 * d.d2) +
                   (v + u * u) / (2.0 * d.d2) - u * d.d3 / (2.0 * d.d2 * d.d2);
        NormEntry entry;
        entry.j = j;
        entry.method = NormMethod::laplace;
        entry.log_h = 0.5 * std::log(2.0 * constants::pi / (double(n_) * d.d2)) +
                      std::log(2.0) + (1.0 + 2.0 * pert_.alpha) * std::log(pk.r) +
                      pert_.s * h_->f(pk.r) - double(n_) * P_->g_tau(tau, pk.r) +
                      std::log1p(a / double(n_));
        entry.est_err = 10.0 / (double(n_) * double(n_));
        return entry;
    }

    NormTable build_table() const {
        NormTable table;
        table.n = n_;
        table.pert = pert_;
        table.entries.resize(n_);
        std::vector<std::string> failure(1);
        parallel_for(static_cast<std::size_t>(n_), policy_.workers, [&](std::size_t j) {
            long long jj = static_cast<long long>(j);
            if (policy_.laplace_bulk && laplace_eligible(jj)) {
                bool spot = policy_.laplace_spot_check > 0 &&
                            jj % policy_.laplace_spot_check == 0;
                try {
                    NormEntry lap = norm_laplace(jj);
                    if (!spot) {
                        table.entries[j] = lap;
                        return;
                    }
                    NormEntry quad = norm_quadrature(jj);
                    double guard = 200.0 / (double(n_) * double(n_));
                    if (std::abs(lap.log_h - quad.log_h) > guard)
                        throw IdentityError("laplace spot check tripped at j = " +
                                            std::to_string(jj));
                    table.entries[j] = quad;
                    return;
                } catch (const MultiPeakError&) {
                    // fall through to quadrature
                }
            }
            table.entries[j] = norm_quadrature(jj);
        });
        return table;
    }

    const Perturbation& pert() const { return pert_; }
    const RadialPotential& potential() const { return *P_; }
    const TestFunction& test_function() const { return *h_; }
    const DropletGeometry& geometry() const { return *G_; }

  private:
    void check_j(long long j) const {
        if (j < 0 || j >= n_)
            throw DomainError("norm index j = " + std::to_string(j) + " outside [0, n)");
    }

    bool laplace_eligible(long long j) const {
        double ln = policy_.cutoff.big_l_n(n_);
        for (const auto& ci : indices_)
            if (std::abs(double(j) - double(ci.m)) <= ln) return false;
        // central-disk small-j norms stay on quadrature
        if (G_->central_disk && j < policy_.cutoff.d_n(n_)) return false;
        return true;
    }

    std::vector<Peak> selected_peaks(double tau) const {
        auto peaks = pf_->peaks_at(tau);
        peaks.erase(std::remove_if(peaks.begin(), peaks.end(),
                                   [&](const Peak& p) {
                                       return p.r < domain_.lo - 1e-12 ||
                                              p.r > domain_.hi + 1e-12;
                                   }),
                    peaks.end());
        if (peaks.empty())
            throw DomainError("no peaks inside domain at tau = " + std::to_string(tau));
        return peaks;
    }

    // nearest component index for a peak radius
    int component_of(double r) const {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int nu = 0; nu < (int)G_->components.size(); ++nu) {
            const auto& c = G_->components[nu];
            double d = r < c.a ? c.a - r : (r > c.b ? r - c.b : 0.0);
            if (d < best_d) {
                best_d = d;
                best = nu;
            }
        }
        return best;
    }

    std::vector<NormWindow> build_windows(long long j, double tau) const {
        auto peaks = selected_peaks(tau);
        double b_tau = peaks.front().g;
        for (const Peak& p : peaks) b_tau = std::min(b_tau, p.g);
        double delta = policy_.cutoff.delta_n(n_);
        double big_l = policy_.cutoff.big_l_n(n_);

        std::vector<bool> keep(peaks.size(), false);
        for (std::size_t i = 0; i < peaks.size(); ++i)
            if (peaks[i].g <= b_tau + delta) keep[i] = true;
        // force both branch peaks near a critical index
        for (std::size_t nu = 0; nu < indices_.size(); ++nu) {
            if (std::abs(double(j) - double(indices_[nu].m)) > big_l) continue;
            for (std::size_t i = 0; i < peaks.size(); ++i) {
                int comp = component_of(peaks[i].r);
                if (comp == (int)nu || comp == (int)nu + 1) keep[i] = true;
            }
        }

        std::vector<NormWindow> windows;
        double eps = policy_.cutoff.eps_n(n_);
        for (std::size_t i = 0; i < peaks.size(); ++i) {
            if (!keep[i]) continue;
            const Peak& p = peaks[i];
            double d2 = p.r > 0.0 ? 4.0 * P_->laplace_density(p.r)
                                  : 4.0 * P_->laplace_density(P_->working_interval().lo);
            if (d2 <= 0.0) throw SingularError("build_windows: Delta Q <= 0 at a peak");
            double w = std::max(eps, 12.0 / std::sqrt(double(n_) * d2));
            NormWindow win;
            win.peak_r = p.r;
            win.iv.lo = std::max(domain_.lo, p.r - w);
            win.iv.hi = std::min(domain_.hi, p.r + w);
            // grow the window until the integrand has genuinely died off; the
            // Gaussian 12-sigma width can undershoot at small n
            double phi_ref = phi(j, std::max(p.r, 1e-12));
            while (win.iv.hi < domain_.hi && phi(j, win.iv.hi) > phi_ref - 40.0)
                win.iv.hi = std::min(domain_.hi, win.iv.hi + w);
            while (win.iv.lo > domain_.lo + 1e-12 &&
                   phi(j, std::max(win.iv.lo, 1e-12)) > phi_ref - 40.0)
                win.iv.lo = std::max(domain_.lo, win.iv.lo - w);
            if (win.iv.hi > win.iv.lo) windows.push_back(win);
        }
        if (windows.empty()) throw DomainError("build_windows: no usable windows");

        // cut overlapping windows at the g_tau separatrix between their peaks
        std::sort(windows.begin(), windows.end(),
                  [](const NormWindow& a, const NormWindow& b) { return a.peak_r < b.peak_r; });
        for (std::size_t i = 0; i + 1 < windows.size(); ++i) {
            NormWindow& left = windows[i];
            NormWindow& right = windows[i + 1];
            if (left.iv.hi <= right.iv.lo) continue;
            auto sep = pf_->separatrix(tau, std::max(left.peak_r, 1e-12), right.peak_r);
            double cut = sep ? *sep : 0.5 * (left.peak_r + right.peak_r);
            cut = std::clamp(cut, left.peak_r, right.peak_r);
            left.iv.hi = std::min(left.iv.hi, cut);
            right.iv.lo = std::max(right.iv.lo, cut);
        }
        windows.erase(std::remove_if(windows.begin(), windows.end(),
                                     [](const NormWindow& w) { return w.iv.width() <= 0.0; }),
                      windows.end());
        return windows;
    }

    // log of the window's contribution to h_j = 2 int r^{1+2a+2j} e^{sh - nq} dr
    double window_mass(long long j, const NormWindow& w) const {
        if (w.iv.lo <= 1e-12) {
            // u = r^2: h-contribution = int u^{alpha+j} e^{s h(sqrt u) - n q(sqrt u)} du
            double u_hi = w.iv.hi * w.iv.hi;
            auto phi_u = [&](double u) {
                double r = std::sqrt(u);
                return (pert_.alpha + double(j)) * std::log(u) + pert_.s * h_->f(r) -
                       double(n_) * P_->q(r);
            };
            double u_peak = w.peak_r > 0.0
                                ? w.peak_r * w.peak_r
                                : (pert_.alpha + double(j) + 1.0) /
                                      (double(n_) *
                                       P_->laplace_density(P_->working_interval().lo));
            double u_split = std::clamp(u_peak, 1e-9 * u_hi, 0.5 * u_hi);
            double left = integrate_log_tanh_sinh(phi_u, u_split, policy_.quad_rel_tol);
            double right = integrate_log_adaptive(phi_u, u_split, u_hi, {u_peak},
                                                  policy_.quad_rel_tol);
            return log_add_exp(left, right);
        }
        auto phi_r = [&](double r) { return phi(j, r); };
        return std::log(2.0) +
               integrate_log_adaptive(phi_r, w.iv.lo, w.iv.hi, {w.peak_r},
                                      policy_.quad_rel_tol);
    }

    // coarse integral of the integrand outside all windows; must stay below
    // tail_rel_bound of the window mass
    void check_tail_mass(long long j, const NormEntry& entry) const {
        double lo = std::max(domain_.lo, P_->working_interval().lo);
        double hi = domain_.hi;
        int grid = policy_.tail_grid;
        std::vector<double> logs;
        double step = (hi - lo) / grid;
        for (int i = 0; i <= grid; ++i) {
            double r = lo + step * i;
            bool inside = false;
            for (const auto& w : entry.windows)
                if (w.iv.contains(r)) inside = true;
            if (inside) continue;
            logs.push_back(phi(j, r) + std::log(2.0 * step));
        }
        if (logs.empty()) return;
        double log_tail = log_sum_exp(logs);
        if (log_tail > entry.log_h + std::log(policy_.tail_rel_bound))
            throw IdentityError("tail mass outside windows exceeds bound at j = " +
                                std::to_string(j));
    }

    const RadialPotential* P_;
    const PeakFinder* pf_;
    const DropletGeometry* G_;
    const TestFunction* h_;
    Perturbation pert_;
    long long n_;
    NormPolicy policy_;
    Interval domain_;
    std::vector<CriticalIndex> indices_;
};

// ---------------------------------------------------------------------------
// Exact partition function
// ---------------------------------------------------------------------------

struct PartitionResult {
    double log_z;
    NormTable table;
};

inline PartitionResult log_partition_exact(const RadialPotential& P, const PeakFinder& pf,
                                           const DropletGeometry& G, const TestFunction& h,
                                           const Perturbation& pert, long long n,
                                           const NormPolicy& policy = {}) {
    if (n < 2) throw ValidationError("log_partition_exact: n must be >= 2");
    NormEngine engine(P, pf, G, h, pert, n, policy);
    PartitionResult res;
    res.table = engine.build_table();
    res.log_z = res.table.log_z();
    return res;
}

// ---------------------------------------------------------------------------
// Expansion theorems
// ---------------------------------------------------------------------------

struct ExpansionBreakdown {
    std::string theorem;      // "regular" or "conical"
    double c1 = 0.0;          // -n^2 I_Q
    double c2 = 0.0;          // (1/2) n log n
    double c3 = 0.0;          // n * bracket
    double c4 = 0.0;          // (log n) coefficient term
    double c5 = 0.0;          // constant block
    double gn = 0.0;          // displacement term
    std::string claimed_error;
    bool large_term_warning = false;

    // fixed addition order keeps the invariant total == sum of parts exact
    double total() const { return ((((c1 + c2) + c3) + c4) + c5) + gn; }
};

inline ExpansionBreakdown expansion_regular(const RadialPotential& P,
                                            const DropletGeometry& G, const TestFunction& h,
                                            const Perturbation& pert, long long n) {
    if (!G.outposts.empty())
        throw ValidationError("expansion_regular: outposts present; use the outpost pipeline");
    if (pert.alpha != 0.0)
        throw ValidationError("expansion_regular: alpha must be 0; use the conical pipeline");
    if (std::abs(pert.s) > std::log(double(n)))
        throw ValidationError("expansion_regular: |s| must be <= log n");
    double nn = double(n);
    ExpansionBreakdown b;
    b.theorem = "regular";
    double iq = energy_IQ(P, G);
    double eq = entropy_EQ(P, G);
    double h_mean = sigma_integral(P, G, [&](double r) { return h.f(r); });
    double e_h = boundary_e(P, G, h);
    double v_h = variance_v(P, G, h);
    double fq = fq_total(P, G).total;
    int chi = G.euler_char;
    b.c1 = -nn * nn * iq;
    b.c2 = 0.5 * nn * std::log(nn);
    b.c3 = nn * (0.5 * constants::log_2pi - 1.0 - 0.5 * eq + pert.s * h_mean);
    b.c4 = (6.0 - chi) / 12.0 * std::log(nn);
    b.c5 = chi * constants::zeta_prime_minus_one + fq + 0.5 * constants::log_2pi +
           pert.s * e_h + 0.5 * pert.s * pert.s * v_h;
    if (G.gap_count() > 0) {
        GapConstants gaps = gap_constants(P, G, h, pert, n);
        b.gn = displacement_gn(gaps);
    }
    b.claimed_error = G.central_disk ? "O(n^{-1/12} log^3 n)" : "O((1+s^2)/n)";
    return b;
}

inline ExpansionBreakdown expansion_conical(const RadialPotential& P,
                                            const DropletGeometry& G, const TestFunction& h,
                                            const Perturbation& pert, long long n) {
    if (!G.central_disk)
        throw ValidationError("expansion_conical: requires a central disk droplet");
    if (!G.outposts.empty())
        throw ValidationError("expansion_conical: outposts present");
    pert.validate();
    if (std::abs(pert.s) > std::log(double(n)))
        throw ValidationError("expansion_conical: |s| must be <= log n");
    double nn = double(n);
    double s = pert.s, alpha = pert.alpha;
    ExpansionBreakdown b;
    b.theorem = "conical";
    double iq = energy_IQ(P, G);
    double eq = entropy_EQ(P, G);
    double h_mean = sigma_integral(P, G, [&](double r) { return h.f(r); });
    double ell_mean = sigma_moment(P, G, tf_log2()).quadrature;
    double e_h = boundary_e(P, G, h);
    double e_ell = boundary_e(P, G, tf_log2());
    double fq = fq_total(P, G).total;
    double v0_h = variance_v_component(P, G.components[0], h);
    double sum_v_k = 0.0;  // (1/2) sum_{nu>=1} v_{nu,k}, k = s h + alpha l
    for (std::size_t nu = 1; nu < G.components.size(); ++nu) {
        const auto& c = G.components[nu];
        sum_v_k += 0.25 * integrate_adaptive(
                              [&](double r) {
                                  double kp = s * h.d1(r) + 2.0 * alpha / r;
                                  return kp * kp * r;
                              },
                              c.a, c.b, 1e-12, 1e-13)
                              .value;
    }
    double dq0 = P.laplace_density(P.working_interval().lo);
    double b0 = G.components[0].b;
    double log_g = log_barnes_g(1.0 + alpha);
    b.c1 = -nn * nn * iq;
    b.c2 = 0.5 * nn * std::log(nn);
    b.c3 = nn * (0.5 * constants::log_2pi - 1.0 - 0.5 * eq + s * h_mean + alpha * ell_mean);
    b.c4 = (5.0 / 12.0 + 0.5 * alpha * alpha) * std::log(nn);
    b.c5 = constants::zeta_prime_minus_one - log_g + fq +
           0.5 * (1.0 + alpha) * constants::log_2pi + (s * e_h + alpha * e_ell) -
           0.5 * alpha + 0.5 * s * s * v0_h + sum_v_k +
           0.5 * alpha * alpha * std::log(b0 * b0 * dq0) +
           alpha * s * (h.f(b0) - h.f(0.0));
    if (G.gap_count() > 0) {
        GapConstants gaps = gap_constants(P, G, h, pert, n);
        b.gn = displacement_gn(gaps);
    }
    b.claimed_error = "O(n^{-1/12} log^3 n)";
    b.large_term_warning = -log_g > 4.0;
    return b;
}

// ---------------------------------------------------------------------------
// Outpost free energy
// ---------------------------------------------------------------------------

struct OutpostRatio {
    double predicted;  // log(-mu(s) rho; rho^2)_inf, 0 for t = 0
    double measured;   // log Z_n - log Z~_n with quadratures cut at the midpoint
    double rho = 0.0;
    double theta = 0.0;
    double c = 0.0;
};

inline OutpostRatio outpost_log_ratio(const RadialPotential& P, const PeakFinder& pf,
                                      const DropletGeometry& G, const TestFunction& h,
                                      double s, long long n, const NormPolicy& policy = {}) {
    if (G.outposts.size() != 1)
        throw ValidationError("outpost_log_ratio: exactly one outpost supported");
    if (G.components.size() != 1)
        throw ValidationError("outpost_log_ratio: droplet must have one component");
    double t = G.outposts.front();
    double a = G.components[0].a;
    double b = G.components[0].b;
    OutpostRatio out;
    Interval cut;
    if (t > b) {
        out.rho = b / t;
        out.theta = std::sqrt(P.laplace_density(b) / P.laplace_density(t));
        out.c = h.f(t) - h.f(b);
        cut = {0.0, 0.5 * (b + t)};
    } else if (t > 0.0) {
        // hole-side outpost: same convention as outside, the droplet-edge
        // curvature over the outpost curvature and the h-gain per displaced
        // particle (window-mass ratios h_{t,j}/h_{a,j} = mu rho^{2j+1} pin the
        // orientation of both factors)
        out.rho = t / a;
        out.theta = std::sqrt(P.laplace_density(a) / P.laplace_density(t));
        out.c = h.f(t) - h.f(a);
        cut = {0.5 * (t + a), P.working_interval().hi};
    } else {
        out.rho = 0.0;
        out.theta = 0.0;
        out.c = 0.0;
        cut = {0.5 * a, P.working_interval().hi};
    }
    if (t > 0.0) {
        double mu = std::exp(out.c * s) * out.theta;
        out.predicted = qpoch_infinite_log(-mu * out.rho, out.rho * out.rho);
    } else {
        out.predicted = 0.0;  // the outpost at the origin carries no displacement
    }

    Perturbation pert{s, 0.0};
    NormPolicy full = policy;
    full.restrict_to.reset();
    NormPolicy local = policy;
    local.restrict_to = cut;
    double log_z = log_partition_exact(P, pf, G, h, pert, n, full).log_z;
    double log_z_loc = log_partition_exact(P, pf, G, h, pert, n, local).log_z;
    out.measured = log_z - log_z_loc;
    return out;
}

// ---------------------------------------------------------------------------
// Exact-vs-expansion comparison
// ---------------------------------------------------------------------------

struct CompareRow {
    long long n;
    double log_z_exact;
    double expansion_total;
    double residual;
    double scaled_residual;  // residual*n (annular) or residual*n^{1/12}/log^3 n (disk)
};

struct CompareReport {
    std::vector<CompareRow> rows;
    bool no_upward_trend = true;
    std::string scaling;
};

inline CompareReport compare_report(const RadialPotential& P, const PeakFinder& pf,
                                    const DropletGeometry& G, const TestFunction& h,
                                    const Perturbation& pert,
                                    const std::vector<long long>& n_list,
                                    const NormPolicy& policy = {}) {
    CompareReport rep;
    rep.scaling = G.central_disk ? "residual*n^{1/12}/log^3(n)" : "residual*n";
    for (long long n : n_list) {
        CompareRow row;
        row.n = n;
        row.log_z_exact = log_partition_exact(P, pf, G, h, pert, n, policy).log_z;
        ExpansionBreakdown b = pert.alpha == 0.0 ? expansion_regular(P, G, h, pert, n)
                                                 : expansion_conical(P, G, h, pert, n);
        row.expansion_total = b.total();
        row.residual = row.log_z_exact - row.expansion_total;
        double nn = double(n);
        row.scaled_residual = G.central_disk
                                  ? row.residual * std::pow(nn, 1.0 / 12.0) /
                                        std::pow(std::log(nn), 3.0)
                                  : row.residual * nn;
        rep.rows.push_back(row);
    }
    if (rep.rows.size() >= 2) {
        std::vector<double> lx, ly;
        for (const auto& r : rep.rows) {
            lx.push_back(std::log(double(r.n)));
            ly.push_back(std::log(std::abs(r.scaled_residual) + 1e-300));
        }
        rep.no_upward_trend = fit_slope(lx, ly) <= 0.1;
    }
    return rep;
}

}  // namespace coulgas
