#pragma once

// Droplet geometry: local/global peak sets of g_tau, the tau-sweep that finds
// components and branching masses, outposts, and the n-dependent cutoff
// policy.  Peaks live on the increasing branches of T(r) = r q'(r)/2, since
// g_tau'(r) = 0 <=> T(r) = tau and a peak is a strict minimum iff
// T'(r) = 2 r Delta Q(r) > 0.  The branch decomposition is computed once per
// potential and reused for every tau.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "coulgas/common.hpp"
#include "coulgas/potential.hpp"

namespace coulgas {

// ---------------------------------------------------------------------------
// Cutoff policy
// ---------------------------------------------------------------------------

struct CutoffPolicy {
    double c_cut = 20.0;

    double delta_n(long long n) const { return c_cut * std::log(double(n)) / double(n); }
    double eps_n(long long n) const { return std::sqrt(delta_n(n)); }
    double big_l_n(long long n) const { return c_cut * std::log(double(n)); }
    long long d_n(long long n) const {
        return static_cast<long long>(std::ceil(std::pow(double(n), 1.0 / 6.0)));
    }
};

// ---------------------------------------------------------------------------
// Monotone branch decomposition of T
// ---------------------------------------------------------------------------

struct MassBranch {
    double r_lo, r_hi;  // radii bounding the branch
    double t_lo, t_hi;  // T values at the ends (t_lo < t_hi on rising branches)
    bool rising;        // Delta Q > 0 inside
    bool touches_left_edge = false;
};

struct Peak {
    double r = 0.0;      // radius, |T(r) - tau| <= 1e-12
    double g = 0.0;      // g_tau(r)
    int branch = -1;     // index into the branch list
};

struct PeakSet {
    double tau = 0.0;
    std::vector<Peak> local_peaks;       // sorted by radius
    double b_tau = 0.0;                  // min of g_tau over local peaks
    double beta_tau = 0.0;               // largest radius attaining b_tau
    std::vector<double> global_peaks;    // radii within tie tolerance of b_tau
};

class PeakFinder {
  public:
    static constexpr double kRootTol = 1e-13;
    static constexpr double kTieTol = 1e-9;

    explicit PeakFinder(const RadialPotential& pot, int scan_points = 8192)
        : pot_(&pot) {
        build_branches(scan_points);
    }

    const RadialPotential& potential() const { return *pot_; }
    const std::vector<MassBranch>& branches() const { return branches_; }

    // rising branches only
    std::vector<int> rising_branches() const {
        std::vector<int> out;
        for (int i = 0; i < (int)branches_.size(); ++i)
            if (branches_[i].rising) out.push_back(i);
        return out;
    }

    // unique solution of T(r) = tau on a rising branch, or nullopt if tau is
    // outside the branch's range
    std::optional<double> root_on_branch(int branch, double tau) const {
        const MassBranch& b = branches_[branch];
        if (!b.rising || tau < b.t_lo - kRootTol || tau > b.t_hi + kRootTol)
            return std::nullopt;
        double lo = b.r_lo, hi = b.r_hi;
        double flo = pot_->mass_function(lo) - tau;
        if (flo > 0.0) return lo;  // tau at or below the branch foot
        for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
            double mid = 0.5 * (lo + hi);
            double fm = pot_->mass_function(mid) - tau;
            if (fm < 0.0)
                lo = mid;
            else
                hi = mid;
        }
        double r = 0.5 * (lo + hi);
        for (int it = 0; it < 8; ++it) {
            double f = pot_->mass_function(r) - tau;
            double df = pot_->mass_function_d1(r);
            if (df <= 0.0) break;
            double step = f / df;
            double next = r - step;
            if (next <= b.r_lo || next >= b.r_hi) break;
            r = next;
            if (std::abs(f) < kRootTol) break;
        }
        return r;
    }

    std::vector<Peak> peaks_at(double tau) const {
        std::vector<Peak> out;
        for (int i : rising_branches()) {
            auto r = root_on_branch(i, tau);
            if (!r) continue;
            if (branches_[i].touches_left_edge && tau <= 0.0 && pot_->finite_at_origin()) {
                // tau = 0 peak of a central-disk branch sits at the origin
                out.push_back({0.0, pot_->q(pot_->working_interval().lo), i});
                continue;
            }
            out.push_back({*r, pot_->g_tau(tau, *r), i});
        }
        std::sort(out.begin(), out.end(), [](const Peak& a, const Peak& b) { return a.r < b.r; });
        return out;
    }

    PeakSet peak_set(double tau) const {
        PeakSet ps;
        ps.tau = tau;
        ps.local_peaks = peaks_at(tau);
        if (ps.local_peaks.empty())
            throw DomainError("peak_set: no local peaks at tau = " + std::to_string(tau));
        ps.b_tau = ps.local_peaks.front().g;
        for (const Peak& p : ps.local_peaks) ps.b_tau = std::min(ps.b_tau, p.g);
        for (const Peak& p : ps.local_peaks)
            if (p.g <= ps.b_tau + kTieTol) {
                ps.global_peaks.push_back(p.r);
                ps.beta_tau = p.r;
            }
        return ps;
    }

    // separatrix between two adjacent peaks: the solution of T(r) = tau on the
    // falling branch in between (the local max of g_tau)
    std::optional<double> separatrix(double tau, double r_left, double r_right) const {
        for (const MassBranch& b : branches_) {
            if (b.rising || b.r_hi <= r_left || b.r_lo >= r_right) continue;
            if (tau > b.t_lo + kRootTol && tau < b.t_hi - kRootTol) {
                double lo = b.r_lo, hi = b.r_hi;  // T falling: f(lo) > 0 > f(hi)
                for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
                    double mid = 0.5 * (lo + hi);
                    (pot_->mass_function(mid) - tau > 0.0 ? lo : hi) = mid;
                }
                double r = 0.5 * (lo + hi);
                if (r > r_left && r < r_right) return r;
            }
        }
        return std::nullopt;
    }

  private:
    void build_branches(int scan_points) {
        Interval w = pot_->working_interval();
        std::vector<double> cuts;
        cuts.push_back(w.lo);
        double prev_r = w.lo;
        double prev_dq = pot_->laplace_density(prev_r);
        for (int i = 1; i <= scan_points; ++i) {
            double r = w.lo + (w.hi - w.lo) * i / scan_points;
            double dq = pot_->laplace_density(r);
            if ((prev_dq > 0.0) != (dq > 0.0)) {
                double lo = prev_r, hi = r;
                for (int it = 0; it < 100 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
                    double mid = 0.5 * (lo + hi);
                    ((pot_->laplace_density(mid) > 0.0) == (prev_dq > 0.0) ? lo : hi) = mid;
                }
                cuts.push_back(0.5 * (lo + hi));
            }
            prev_r = r;
            prev_dq = dq;
        }
        cuts.push_back(w.hi);
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            MassBranch b;
            b.r_lo = cuts[i];
            b.r_hi = cuts[i + 1];
            double mid_dq = pot_->laplace_density(0.5 * (b.r_lo + b.r_hi));
            b.rising = mid_dq > 0.0;
            b.t_lo = pot_->mass_function(b.r_lo);
            b.t_hi = pot_->mass_function(b.r_hi);
            if (!b.rising) std::swap(b.t_lo, b.t_hi);  // keep t_lo < t_hi
            b.touches_left_edge = (i == 0);
            branches_.push_back(b);
        }
    }

    const RadialPotential* pot_;
    std::vector<MassBranch> branches_;
};

// ---------------------------------------------------------------------------
// Droplet geometry
// ---------------------------------------------------------------------------

struct AnnulusComponent {
    double a = 0.0;
    double b = 0.0;
};

struct DropletGeometry {
    std::vector<AnnulusComponent> components;  // strictly increasing, N+1 of them
    std::vector<double> outposts;              // radii in S* \ S (may include 0)
    std::vector<double> masses;                // M_0..M_N, M_N = 1
    int euler_char = 1;
    bool central_disk = true;

    int gap_count() const { return static_cast<int>(components.size()) - 1; }
    double outer_radius() const { return components.back().b; }
    double inner_radius() const { return components.front().a; }

    bool inside_component(double r, double tol = 1e-9) const {
        for (const auto& c : components)
            if (r >= c.a - tol && r <= c.b + tol) return true;
        return false;
    }
};

struct CriticalIndex {
    long long m;  // floor(M_nu * n)
    double x;     // fractional part {M_nu * n}
};

// m_nu, x_nu for the gap masses nu = 0..N-1
inline std::vector<CriticalIndex> critical_indices(const DropletGeometry& g, long long n) {
    if (n < 1) throw ValidationError("critical_indices: n must be >= 1");
    std::vector<CriticalIndex> out;
    for (int nu = 0; nu + 1 < (int)g.masses.size(); ++nu) {
        double mn = g.masses[nu] * double(n);
        long long m = static_cast<long long>(std::floor(mn));
        out.push_back({m, mn - double(m)});
    }
    return out;
}

namespace droplet_detail {

// g_tau difference between the roots on two rising branches; increasing in tau
// when branch b sits outside branch a
inline double branch_gap(const PeakFinder& pf, int ba, int bb, double tau) {
    auto ra = pf.root_on_branch(ba, tau);
    auto rb = pf.root_on_branch(bb, tau);
    if (!ra || !rb) throw DomainError("branch_gap: branch lost during bisection");
    const RadialPotential& p = pf.potential();
    return p.g_tau(tau, *ra) - p.g_tau(tau, *rb);
}

}  // namespace droplet_detail

// Sweep tau over (0,1], locate the global-peak branch, bisect its jumps (the
// branching masses), then read off components from the carrying branches.
inline DropletGeometry compute_droplet(const RadialPotential& pot, const PeakFinder& pf,
                                       int sweep_points = 4096) {
    struct Carrier {
        double tau;
        int branch;
    };
    std::vector<Carrier> sweep;
    for (int i = 1; i <= sweep_points; ++i) {
        double tau = double(i) / sweep_points;
        auto peaks = pf.peaks_at(tau);
        if (peaks.empty())
            throw DomainError("compute_droplet: no peaks at tau = " + std::to_string(tau));
        const Peak* best = &peaks.front();
        for (const Peak& p : peaks)
            if (p.g < best->g - PeakFinder::kTieTol ||
                (p.g < best->g + PeakFinder::kTieTol && p.r < best->r))
                best = &p;  // ties resolve to the smaller radius: beta is left-continuous
        sweep.push_back({tau, best->branch});
    }

    // branching values: bisect each carrier change
    std::vector<double> branch_masses;
    std::vector<int> carriers{sweep.front().branch};
    for (std::size_t i = 1; i < sweep.size(); ++i) {
        if (sweep[i].branch == sweep[i - 1].branch) continue;
        int ba = sweep[i - 1].branch, bb = sweep[i].branch;
        double lo = sweep[i - 1].tau, hi = sweep[i].tau;
        for (int it = 0; it < 80 && hi - lo > 1e-13; ++it) {
            double mid = 0.5 * (lo + hi);
            (droplet_detail::branch_gap(pf, ba, bb, mid) < 0.0 ? lo : hi) = mid;
        }
        double m = 0.5 * (lo + hi);
        if (!branch_masses.empty() &&
            m - branch_masses.back() < 2.0 / sweep_points)
            throw ValidationError("compute_droplet: branching values closer than sweep grid");
        branch_masses.push_back(m);
        carriers.push_back(bb);
    }

    DropletGeometry g;
    std::vector<double> upper = branch_masses;
    upper.push_back(1.0);
    double lower = 0.0;
    for (std::size_t nu = 0; nu < carriers.size(); ++nu) {
        int br = carriers[nu];
        const MassBranch& mb = pf.branches()[br];
        AnnulusComponent comp;
        if (nu == 0 && mb.touches_left_edge && pot.finite_at_origin() && mb.t_lo < 1e-12) {
            comp.a = 0.0;
        } else {
            auto a = pf.root_on_branch(br, lower);
            if (!a)
                throw ValidationError("compute_droplet: component lower edge not on branch");
            comp.a = *a;
        }
        auto b = pf.root_on_branch(br, upper[nu]);
        if (!b) throw ValidationError("compute_droplet: component upper edge not on branch");
        comp.b = *b;
        if (comp.b - comp.a < 1e-8)
            throw ValidationError("compute_droplet: degenerate component of width < 1e-8");
        g.components.push_back(comp);
        g.masses.push_back(upper[nu]);
        lower = upper[nu];
    }
    g.central_disk = g.components.front().a == 0.0;
    g.euler_char = g.central_disk ? 1 : 0;

    // outposts: local peaks tying with the global minimum at a branching level
    // but belonging to no component
    std::vector<double> levels = branch_masses;
    levels.push_back(1.0);
    if (!g.central_disk) levels.insert(levels.begin(), 0.0);
    for (double tau : levels) {
        auto peaks = pf.peaks_at(tau);
        double b_tau = peaks.front().g;
        for (const Peak& p : peaks) b_tau = std::min(b_tau, p.g);
        if (tau == 0.0 && pot.finite_at_origin() && !g.central_disk) {
            // candidate singleton outpost at the origin
            double g0 = pot.q(pot.working_interval().lo);
            if (std::abs(g0 - b_tau) <= PeakFinder::kTieTol) g.outposts.push_back(0.0);
        }
        for (const Peak& p : peaks) {
            if (p.g > b_tau + PeakFinder::kTieTol) continue;
            if (g.inside_component(p.r, 1e-7)) continue;
            bool known = false;
            for (double t : g.outposts)
                if (std::abs(t - p.r) < 1e-7) known = true;
            if (!known) g.outposts.push_back(p.r);
        }
    }
    std::sort(g.outposts.begin(), g.outposts.end());

    // invariant gates
    if (std::abs(g.masses.back() - 1.0) > 1e-9)
        throw IdentityError("compute_droplet: M_N != 1");
    for (std::size_t nu = 0; nu < g.components.size(); ++nu) {
        double lo_mass = nu == 0 ? 0.0 : g.masses[nu - 1];
        if (g.components[nu].a > 0.0 &&
            std::abs(pot.mass_function(g.components[nu].a) - lo_mass) > 1e-9)
            throw IdentityError("compute_droplet: T(a_nu) != M_{nu-1}");
        if (std::abs(pot.mass_function(g.components[nu].b) - g.masses[nu]) > 1e-9)
            throw IdentityError("compute_droplet: T(b_nu) != M_nu");
    }
    return g;
}

inline DropletGeometry compute_droplet(const RadialPotential& pot, int sweep_points = 4096) {
    PeakFinder pf(pot);
    return compute_droplet(pot, pf, sweep_points);
}

// peaks with g_tau(r) < B_tau + delta_n
inline std::vector<Peak> significant_peaks(const PeakSet& ps, const CutoffPolicy& policy,
                                           long long n) {
    std::vector<Peak> out;
    double cut = ps.b_tau + policy.delta_n(n);
    for (const Peak& p : ps.local_peaks)
        if (p.g < cut) out.push_back(p);
    return out;
}

// r_{nu,tau} along one component's branch; dr/dtau = 1/(2 r Delta Q)
inline std::vector<double> peak_trajectory(const PeakFinder& pf, int branch,
                                           const std::vector<double>& tau_grid) {
    std::vector<double> out;
    for (double tau : tau_grid) {
        auto r = pf.root_on_branch(branch, tau);
        if (!r)
            throw DomainError("peak_trajectory: tau = " + std::to_string(tau) +
                              " left the branch's mass range");
        out.push_back(*r);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Outpost test families: calibrate a Gaussian well so the coincidence set
// gains one shallow circle
// ---------------------------------------------------------------------------

// For an outpost at radius t outside the base droplet: solve the 2x2 system
//   g_1(t) = B_1,   g_1'(t) = 0   (the latter is T(t) = 1)
// for (depth, center) of the bump by damped Newton with a finite-difference
// Jacobian.
inline RadialPotential solve_outpost_bump(const RadialPotential& base, double t,
                                          double width) {
    auto residual = [&](double depth, double center, double out[2]) {
        RadialPotential cand = make_base_plus_bump(base, center, depth, width);
        PeakFinder pf(cand);
        // outer droplet edge: largest root of T = 1 strictly below t
        double b_n = -1.0;
        for (int br : pf.rising_branches()) {
            auto r = pf.root_on_branch(br, 1.0);
            if (r && *r < t - 4.0 * width && *r > b_n) b_n = *r;
        }
        if (b_n < 0.0) throw ValidationError("solve_outpost_bump: droplet edge lost");
        out[0] = cand.g_tau(1.0, t) - cand.g_tau(1.0, b_n);
        out[1] = cand.mass_function(t) - 1.0;
    };
    double depth = base.g_tau(1.0, t);
    {
        // initial guess: depth so that g_1(t) matches g_1 at the base edge
        PeakFinder pf0(base);
        double b0 = -1.0;
        for (int br : pf0.rising_branches()) {
            auto r = pf0.root_on_branch(br, 1.0);
            if (r && *r > b0) b0 = *r;
        }
        depth -= base.g_tau(1.0, b0);
    }
    double center = t;
    double f[2];
    for (int it = 0; it < 60; ++it) {
        residual(depth, center, f);
        if (std::abs(f[0]) < 1e-12 && std::abs(f[1]) < 1e-12) break;
        double hd = std::max(1e-7, 1e-7 * std::abs(depth));
        double hc = 1e-7;
        double fd[2], fc[2];
        residual(depth + hd, center, fd);
        residual(depth, center + hc, fc);
        double j00 = (fd[0] - f[0]) / hd, j01 = (fc[0] - f[0]) / hc;
        double j10 = (fd[1] - f[1]) / hd, j11 = (fc[1] - f[1]) / hc;
        double det = j00 * j11 - j01 * j10;
        if (std::abs(det) < 1e-30)
            throw ValidationError("solve_outpost_bump: singular Newton system");
        double dd = (f[0] * j11 - f[1] * j01) / det;
        double dc = (j00 * f[1] - j10 * f[0]) / det;
        depth -= dd;
        center -= dc;
        if (it == 59) throw ValidationError("solve_outpost_bump: Newton did not converge");
    }
    return make_base_plus_bump(base, center, depth, width);
}

// For an outpost at radius t inside the hole of an annular droplet
// (0 < t < a_0): solve g_0(t) = B_0 and g_0'(t) = 0, i.e. T(t) = 0 and
// q(t) = q(a_0), for (depth, center).
inline RadialPotential solve_inner_outpost(const RadialPotential& base, double t,
                                           double width) {
    auto residual = [&](double depth, double center, double out[2]) {
        RadialPotential cand = make_base_plus_bump(base, center, depth, width);
        PeakFinder pf(cand);
        double a0 = std::numeric_limits<double>::infinity();
        for (int br : pf.rising_branches()) {
            auto r = pf.root_on_branch(br, 0.0);
            if (r && *r > t + 4.0 * width && *r < a0) a0 = *r;
        }
        if (!std::isfinite(a0))
            throw ValidationError("solve_inner_outpost: droplet inner edge lost");
        out[0] = cand.q(t) - cand.q(a0);
        out[1] = cand.mass_function(t);
    };
    double depth = 0.0, center = t;
    {
        PeakFinder pf0(base);
        double a0 = std::numeric_limits<double>::infinity();
        for (int br : pf0.rising_branches()) {
            auto r = pf0.root_on_branch(br, 0.0);
            if (r && *r < a0) a0 = *r;
        }
        depth = base.q(t) - base.q(a0);
        if (depth <= 0.0) depth = 0.5;
    }
    double f[2];
    for (int it = 0; it < 60; ++it) {
        residual(depth, center, f);
        if (std::abs(f[0]) < 1e-12 && std::abs(f[1]) < 1e-12) break;
        double hd = std::max(1e-7, 1e-7 * std::abs(depth));
        double hc = 1e-7;
        double fd[2], fc[2];
        residual(depth + hd, center, fd);
        residual(depth, center + hc, fc);
        double j00 = (fd[0] - f[0]) / hd, j01 = (fc[0] - f[0]) / hc;
        double j10 = (fd[1] - f[1]) / hd, j11 = (fc[1] - f[1]) / hc;
        double det = j00 * j11 - j01 * j10;
        if (std::abs(det) < 1e-30)
            throw ValidationError("solve_inner_outpost: singular Newton system");
        depth -= (f[0] * j11 - f[1] * j01) / det;
        center -= (j00 * f[1] - j10 * f[0]) / det;
        if (it == 59) throw ValidationError("solve_inner_outpost: Newton did not converge");
    }
    return make_base_plus_bump(base, center, depth, width);
}

// For a singleton outpost at the origin of an annular droplet: 1D Newton on
// the depth so that q(0) = B_0 = g_0(a_0).
inline RadialPotential solve_origin_outpost(const RadialPotential& base, double width) {
    auto residual = [&](double depth) {
        RadialPotential cand = make_base_plus_bump(base, 0.0, depth, width);
        PeakFinder pf(cand);
        double a0 = std::numeric_limits<double>::infinity();
        for (int br : pf.rising_branches()) {
            auto r = pf.root_on_branch(br, 0.0);
            if (r && *r > 4.0 * width && *r < a0) a0 = *r;
        }
        if (!std::isfinite(a0))
            throw ValidationError("solve_origin_outpost: inner edge lost");
        return cand.q(cand.working_interval().lo) - cand.g_tau(0.0, a0);
    };
    double depth = base.q(0.0) - base.q(1.0);  // rough scale
    if (depth <= 0.0) depth = 1.0;
    for (int it = 0; it < 80; ++it) {
        double f = residual(depth);
        if (std::abs(f) < 1e-12) break;
        double h = std::max(1e-7, 1e-7 * depth);
        double df = (residual(depth + h) - f) / h;
        depth -= f / df;
        if (it == 79) throw ValidationError("solve_origin_outpost: Newton did not converge");
    }
    return make_base_plus_bump(base, 0.0, depth, width);
}

struct GapBoundResult {
    double value;       // (g_tau(r) - B_tau)/min(dist^2, 1)
    bool at_peak;       // r coincides with a global peak: 0/0, reported as +inf
    bool clamped;       // r was pulled back to the working interval
};

inline GapBoundResult min_gap_lower_bound(const PeakFinder& pf, const PeakSet& ps, double r) {
    const RadialPotential& p = pf.potential();
    GapBoundResult res{0.0, false, false};
    Interval w = p.working_interval();
    if (r < w.lo || r > w.hi) {
        r = std::clamp(r, w.lo, w.hi);
        res.clamped = true;
    }
    double dist = std::numeric_limits<double>::infinity();
    for (const Peak& pk : ps.local_peaks) dist = std::min(dist, std::abs(r - pk.r));
    double num = p.g_tau(ps.tau, r) - ps.b_tau;
    if (dist < 1e-12) {
        res.at_peak = true;
        res.value = std::numeric_limits<double>::infinity();
        return res;
    }
    res.value = num / std::min(dist * dist, 1.0);
    return res;
}

}  // namespace coulgas
