#pragma once

// Exact Monte Carlo for radial linear statistics.  The moduli of the
// determinantal sample are independent: the j-th modulus has density
// proportional to r^{1+2 alpha} e^{s h} e^{-n g_{tau(j)}}, the normalized
// integrand of h_j.  Sampling is rejection from a Gaussian proposal at the
// dominant peak with a uniform floor, falling back to an inverse-CDF table on
// the window when the envelope is poor or the window touches the origin.

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "coulgas/common.hpp"
#include "coulgas/free_energy.hpp"
#include "coulgas/heine.hpp"

namespace coulgas {

struct SampleBatch {
    long long n = 0;
    std::uint64_t seed = 0;
    std::vector<std::vector<double>> moduli;  // [sample][j]
};

// ---------------------------------------------------------------------------
// Per-j sampling plans
// ---------------------------------------------------------------------------

namespace fluct_detail {

struct CdfTable {
    std::vector<double> u;    // node ladder in the table variable (u or w)
    std::vector<double> cum;  // normalized cumulative mass at nodes
    std::vector<double> phi;  // log density at nodes
    bool use_w = false;       // table runs in w = u^p/p
    double power = 1.0;       // p = alpha + j + 1
};

struct WindowProposal {
    Interval iv;
    double mass_weight = 0.0;  // relative window mass
    double mean = 0.0;
    double sigma = 0.0;
    double log_envelope = 0.0;  // logM with f(y) <= M g(y) on the window
    bool use_cdf = false;
    CdfTable cdf;
};

struct JPlan {
    std::vector<WindowProposal> windows;
    std::vector<double> pick_cdf;  // cumulative window weights
};

}  // namespace fluct_detail

class KostlanSampler {
  public:
    KostlanSampler(const RadialPotential& P, const PeakFinder& pf, const DropletGeometry& G,
                   const TestFunction& h, const Perturbation& pert, long long n,
                   const NormPolicy& policy = {})
        : engine_(P, pf, G, h, pert, n, policy), pert_(pert), n_(n) {
        plans_.resize(n_);
        log_h_.resize(n_);
        parallel_for(static_cast<std::size_t>(n_), policy.workers,
                     [&](std::size_t j) { build_plan(static_cast<long long>(j)); });
    }

    long long n() const { return n_; }
    const NormEngine& engine() const { return engine_; }
    double log_h(long long j) const { return log_h_[j]; }

    // fraction of accepted proposals over the sampler's lifetime
    double acceptance_rate() const {
        std::uint64_t p = proposals_.load(std::memory_order_relaxed);
        std::uint64_t a = accepts_.load(std::memory_order_relaxed);
        return p == 0 ? 1.0 : double(a) / double(p);
    }

    // one modulus R_j
    double sample_modulus(long long j, RngStream& rng) const {
        const auto& plan = plans_[j];
        double u = rng.uniform();
        std::size_t w = std::lower_bound(plan.pick_cdf.begin(), plan.pick_cdf.end(), u) -
                        plan.pick_cdf.begin();
        w = std::min(w, plan.windows.size() - 1);
        const auto& prop = plan.windows[w];
        if (prop.use_cdf) return sample_cdf(prop, rng);
        for (int attempt = 0; attempt < 10000; ++attempt) {
            proposals_.fetch_add(1, std::memory_order_relaxed);
            double y;
            if (rng.uniform() < 0.9)
                y = prop.mean + prop.sigma * rng.normal();
            else
                y = prop.iv.lo + prop.iv.width() * rng.uniform();
            if (!prop.iv.contains(y) || y <= 0.0) continue;
            double log_g = proposal_log_pdf(prop, y);
            double log_accept = engine_.phi(j, y) - prop.log_envelope - log_g;
            if (std::log(rng.uniform()) <= log_accept) {
                accepts_.fetch_add(1, std::memory_order_relaxed);
                return y;
            }
        }
        // envelope failed; fall back to an exact CDF table built on demand
        fluct_detail::WindowProposal with_cdf = prop;
        build_cdf(j, with_cdf);
        return sample_cdf(with_cdf, rng);
    }

    // all moduli for one sample id (deterministic in (seed, sample, j))
    std::vector<double> sample_moduli(std::uint64_t seed, std::uint64_t sample) const {
        std::vector<double> out(n_);
        for (long long j = 0; j < n_; ++j) {
            RngStream rng(seed, sample, static_cast<std::uint64_t>(j));
            out[j] = sample_modulus(j, rng);
        }
        return out;
    }

    SampleBatch sample_batch(std::uint64_t seed, std::size_t n_samples, int workers = 0) const {
        SampleBatch batch;
        batch.n = n_;
        batch.seed = seed;
        batch.moduli.resize(n_samples);
        parallel_for(n_samples, workers,
                     [&](std::size_t i) { batch.moduli[i] = sample_moduli(seed, i); });
        return batch;
    }

    // quadrature mean of f(R_j); oracle for the sampler's law
    double expected_statistic(long long j, const RadialFn& f) const {
        const auto& plan = plans_[j];
        double num = 0.0;
        for (const auto& w : plan.windows) {
            double ref = ref_phi(j, w);
            auto base = [&](double r) { return std::exp(engine_.phi(j, r) - ref); };
            double i1 = integrate_adaptive(base, std::max(w.iv.lo, 1e-12), w.iv.hi, 0.0,
                                           1e-11)
                            .value;
            double i_f = integrate_adaptive(
                             [&](double r) { return f(r) * base(r); },
                             std::max(w.iv.lo, 1e-12), w.iv.hi, 0.0, 1e-11)
                             .value;
            num += w.mass_weight * (i_f / i1);
        }
        return num;
    }

    // quadrature tail probability P(R_j > cut)
    double tail_probability(long long j, double cut) const {
        const auto& plan = plans_[j];
        double p = 0.0;
        for (const auto& w : plan.windows) {
            if (w.iv.hi <= cut) continue;
            if (w.iv.lo >= cut) {
                p += w.mass_weight;
                continue;
            }
            double ref = ref_phi(j, w);
            auto base = [&](double r) { return std::exp(engine_.phi(j, r) - ref); };
            double lo = std::max(w.iv.lo, 1e-12);
            double all = integrate_adaptive(base, lo, w.iv.hi, 0.0, 1e-11).value;
            double above = integrate_adaptive(base, cut, w.iv.hi, 0.0, 1e-11).value;
            p += w.mass_weight * (above / all);
        }
        return p;
    }

  private:
    double ref_phi(long long j, const fluct_detail::WindowProposal& w) const {
        double ref = neg_inf;
        for (int i = 0; i <= 64; ++i) {
            double r = w.iv.lo + w.iv.width() * i / 64.0;
            if (r <= 0.0) continue;
            ref = std::max(ref, engine_.phi(j, r));
        }
        return ref;
    }

    double proposal_log_pdf(const fluct_detail::WindowProposal& p, double y) const {
        double z = (y - p.mean) / p.sigma;
        double gauss = std::exp(-0.5 * z * z) /
                       (p.sigma * std::sqrt(2.0 * constants::pi));
        return std::log(0.9 * gauss + 0.1 / p.iv.width());
    }

    void build_plan(long long j) {
        NormEntry entry = engine_.norm_quadrature(j);
        log_h_[j] = entry.log_h;
        fluct_detail::JPlan plan;
        double cum = 0.0;
        for (const auto& w : entry.windows) {
            fluct_detail::WindowProposal prop;
            prop.iv = w.iv;
            prop.mass_weight = std::exp(w.log_mass - entry.log_h);
            cum += prop.mass_weight;
            // proposal mean: the scanned mode of the density inside the window
            double peak = w.peak_r;
            double best = neg_inf;
            for (int i = 0; i <= 128; ++i) {
                double r = w.iv.lo + w.iv.width() * i / 128.0;
                if (r <= 0.0) continue;
                double v = engine_.phi(j, r);
                if (v > best) {
                    best = v;
                    peak = r;
                }
            }
            const Interval& wi = engine_.potential().working_interval();
            double d2 = 4.0 * engine_.potential().laplace_density(
                                  std::clamp(peak, wi.lo, wi.hi));
            prop.mean = peak;
            prop.sigma = d2 > 0.0 ? 1.2 / std::sqrt(double(n_) * d2) : 0.25 * w.iv.width();
            bool singular_origin =
                w.iv.lo <= 1e-12 && (1.0 + 2.0 * pert_.alpha + 2.0 * double(j)) < 0.75;
            if (singular_origin) {
                prop.use_cdf = true;
                build_cdf(j, prop);
            } else {
                double log_m = neg_inf;
                for (int i = 0; i <= 256; ++i) {
                    double r = w.iv.lo + w.iv.width() * i / 256.0;
                    if (r <= 0.0) continue;
                    log_m = std::max(log_m,
                                     engine_.phi(j, r) - proposal_log_pdf(prop, r));
                }
                prop.log_envelope = log_m + 0.05;
                // estimated acceptance = window mass / envelope mass
                double log_acc = (w.log_mass - std::log(2.0)) - prop.log_envelope;
                if (log_acc < std::log(0.1)) {
                    prop.use_cdf = true;
                    build_cdf(j, prop);
                }
            }
            plan.windows.push_back(std::move(prop));
        }
        for (auto& w : plan.windows) plan.pick_cdf.push_back(
            (plan.pick_cdf.empty() ? 0.0 : plan.pick_cdf.back()) + w.mass_weight / cum);
        plans_[j] = std::move(plan);
    }

    // Exact inverse-CDF table.  The density over the window in u = r^2 is
    // u^{alpha+j} e^{S(u)} with S smooth; in the variable w = u^p/p with
    // p = alpha+j+1 the algebraic factor integrates away and the density
    // becomes e^{S(u(w))}, bounded even when the window touches the origin.
    // For large p (bulk windows) the power is ill-conditioned, so the plain
    // u variable is used there: those windows carry no endpoint factor worth
    // absorbing.
    void build_cdf(long long j, fluct_detail::WindowProposal& prop) const {
        double p = pert_.alpha + double(j) + 1.0;
        bool use_w = prop.iv.lo <= 1e-12 && p <= 8.0;

        auto smooth_part = [&](double u) {
            double r = std::sqrt(u);
            return pert_.s * engine_.test_function().f(r) -
                   double(n_) * engine_.potential().q(r);
        };
        // log-density in the table variable x (either w or u)
        auto psi = [&](double x) {
            if (use_w) return smooth_part(std::pow(p * x, 1.0 / p));
            double u = x;
            return (pert_.alpha + double(j)) * std::log(u) + smooth_part(u);
        };
        auto to_x = [&](double u) {
            return use_w ? std::pow(u, p) / p : u;
        };

        double u_lo = std::max(prop.iv.lo * prop.iv.lo, 0.0);
        double u_hi = prop.iv.hi * prop.iv.hi;
        double u_peak = std::clamp(prop.mean * prop.mean, u_lo + 1e-300, u_hi);
        double su = std::max(2.0 * prop.mean * prop.sigma, 1e-3 * (u_hi - u_lo));

        double x_lo = to_x(std::max(u_lo, use_w ? 0.0 : 1e-300));
        double x_hi = to_x(u_hi);
        double x_a = to_x(std::clamp(u_peak - 8.0 * su, u_lo + 1e-300, u_hi));
        double x_b = to_x(std::clamp(u_peak + 8.0 * su, u_lo + 1e-300, u_hi));

        std::vector<double> ladder;
        auto push_lin = [&](double a, double b, int k) {
            if (!(b > a)) return;
            for (int i = 0; i <= k; ++i) ladder.push_back(a + (b - a) * i / k);
        };
        push_lin(x_lo, x_a, 48);
        push_lin(x_a, x_b, 96);
        push_lin(x_b, x_hi, 48);
        std::sort(ladder.begin(), ladder.end());
        ladder.erase(std::unique(ladder.begin(), ladder.end()), ladder.end());
        if (ladder.size() < 2) ladder = {x_lo, x_hi};

        fluct_detail::CdfTable t;
        t.u = ladder;  // table abscissae are in the x variable
        t.phi.resize(ladder.size());
        for (std::size_t i = 0; i < ladder.size(); ++i) t.phi[i] = psi(ladder[i]);
        std::vector<double> cell_logs(ladder.size() - 1);
        for (std::size_t i = 0; i + 1 < ladder.size(); ++i) {
            // exp-linear cell mass: int e^{linear} dx
            double a = t.phi[i], b = t.phi[i + 1];
            double dx = t.u[i + 1] - t.u[i];
            double m = std::max(a, b);
            double drop = std::abs(b - a);
            double factor = drop < 1e-12 ? 1.0 : -std::expm1(-drop) / drop;
            cell_logs[i] = m + std::log(dx * factor);
        }
        double total = log_sum_exp(cell_logs);
        t.cum.resize(ladder.size());
        t.cum[0] = 0.0;
        double run = 0.0;
        for (std::size_t i = 0; i + 1 < ladder.size(); ++i) {
            run += std::exp(cell_logs[i] - total);
            t.cum[i + 1] = run;
        }
        t.cum.back() = 1.0;
        t.use_w = use_w;
        t.power = p;
        prop.cdf = std::move(t);
        prop.use_cdf = true;
    }

    double sample_cdf(const fluct_detail::WindowProposal& prop, RngStream& rng) const {
        const auto& t = prop.cdf;
        double u = rng.uniform();
        std::size_t i = std::upper_bound(t.cum.begin(), t.cum.end(), u) - t.cum.begin();
        if (i == 0) i = 1;
        if (i >= t.cum.size()) i = t.cum.size() - 1;
        double xi = (u - t.cum[i - 1]) / std::max(t.cum[i] - t.cum[i - 1], 1e-300);
        double a = t.phi[i - 1], b = t.phi[i];
        double dx = t.u[i] - t.u[i - 1];
        double slope = (b - a) / dx;
        double x;
        if (std::abs(slope * dx) < 1e-9) {
            x = t.u[i - 1] + xi * dx;
        } else {
            // invert int e^{slope (x - x0)} within the cell
            x = t.u[i - 1] + std::log1p(xi * std::expm1(slope * dx)) / slope;
        }
        x = std::min(std::max(x, t.u.front()), t.u.back());
        double uu = t.use_w ? std::pow(t.power * x, 1.0 / t.power) : x;
        return std::sqrt(uu);
    }

    NormEngine engine_;
    Perturbation pert_;
    long long n_;
    std::vector<fluct_detail::JPlan> plans_;
    std::vector<double> log_h_;
    mutable std::atomic<std::uint64_t> proposals_{0};
    mutable std::atomic<std::uint64_t> accepts_{0};
};

// ---------------------------------------------------------------------------
// Linear statistics and the empirical CGF
// ---------------------------------------------------------------------------

// fluct_n h = sum_j h(R_j) - n int h d sigma, per sample
inline std::vector<double> fluct_statistic(const SampleBatch& batch, const TestFunction& h,
                                           const RadialPotential& P,
                                           const DropletGeometry& G) {
    double mean = sigma_integral(P, G, [&](double r) { return h.f(r); });
    std::vector<double> out;
    out.reserve(batch.moduli.size());
    for (const auto& sample : batch.moduli) {
        CompensatedSum acc;
        for (double r : sample) acc.add(h.f(r));
        out.push_back(acc.value() - double(batch.n) * mean);
    }
    return out;
}

struct EmpiricalCgf {
    double value;          // log of the sample mean of e^{s fluct}
    double std_error;      // delta-method SE
    bool weight_warning;   // top 1% of weights carry > 20% of the mean
};

inline EmpiricalCgf empirical_cgf(const std::vector<double>& fluct, double s) {
    if (fluct.empty()) throw ValidationError("empirical_cgf: no samples");
    double m = neg_inf;
    for (double x : fluct) m = std::max(m, s * x);
    double sum = 0.0, sum2 = 0.0;
    std::vector<double> w(fluct.size());
    for (std::size_t i = 0; i < fluct.size(); ++i) {
        w[i] = std::exp(s * fluct[i] - m);
        sum += w[i];
        sum2 += w[i] * w[i];
    }
    double nn = double(fluct.size());
    double mean = sum / nn;
    double var = std::max(0.0, sum2 / nn - mean * mean);
    EmpiricalCgf out{m + std::log(mean), std::sqrt(var / nn) / mean, false};
    if (!std::isfinite(out.value) || (var > 0.0 && mean * mean / (var / nn) < 1.0))
        throw ValidationError("empirical_cgf: degenerate weights at s = " +
                              std::to_string(s));
    std::vector<double> sorted = w;
    std::sort(sorted.begin(), sorted.end());
    std::size_t top = std::max<std::size_t>(1, sorted.size() / 100);
    double top_sum = 0.0;
    for (std::size_t i = sorted.size() - top; i < sorted.size(); ++i) top_sum += sorted[i];
    out.weight_warning = top_sum > 0.2 * sum;
    return out;
}

// ---------------------------------------------------------------------------
// Outpost occupation law
// ---------------------------------------------------------------------------

struct CountLawReport {
    std::vector<double> empirical_pmf;
    std::vector<double> heine_pmf_values;
    double tv_distance;
    double empirical_mean;
    double empirical_mean_se;
    double heine_mean;
};

// counts N_n = #{ j : R_j > (b+t)/2 } against He(theta rho, rho^2)
inline CountLawReport outpost_count_law(const SampleBatch& batch, const RadialPotential& P,
                                        const DropletGeometry& G) {
    if (G.outposts.size() != 1 || G.components.size() != 1)
        throw ValidationError("outpost_count_law: need one component and one outpost");
    double b = G.components[0].b;
    double t = G.outposts[0];
    if (!(t > b)) throw ValidationError("outpost_count_law: outpost must sit beyond the droplet");
    double cut = 0.5 * (b + t);
    double rho = b / t;
    double theta = std::sqrt(P.laplace_density(b) / P.laplace_density(t));
    HeineDist law(theta * rho, rho * rho);

    std::vector<long long> counts;
    long long max_k = 0;
    for (const auto& sample : batch.moduli) {
        long long c = 0;
        for (double r : sample)
            if (r > cut) ++c;
        counts.push_back(c);
        max_k = std::max(max_k, c);
    }
    long long k_hi = max_k + 8;
    while (heine_pmf(law, k_hi) > 1e-15) ++k_hi;

    CountLawReport rep;
    rep.empirical_pmf.assign(k_hi + 1, 0.0);
    double mean = 0.0, mean2 = 0.0;
    for (long long c : counts) {
        rep.empirical_pmf[c] += 1.0 / double(counts.size());
        mean += double(c);
        mean2 += double(c) * double(c);
    }
    mean /= double(counts.size());
    mean2 /= double(counts.size());
    rep.empirical_mean = mean;
    rep.empirical_mean_se = std::sqrt(std::max(0.0, mean2 - mean * mean) /
                                      double(counts.size()));
    rep.heine_pmf_values.resize(k_hi + 1);
    double tv = 0.0;
    for (long long k = 0; k <= k_hi; ++k) {
        rep.heine_pmf_values[k] = heine_pmf(law, k);
        tv += std::abs(rep.empirical_pmf[k] - rep.heine_pmf_values[k]);
    }
    rep.tv_distance = 0.5 * tv;
    rep.heine_mean = heine_moments(law).mean;
    return rep;
}

// ---------------------------------------------------------------------------
// CGF comparison report
// ---------------------------------------------------------------------------

struct CgfRow {
    double s;
    double empirical;
    double std_error;
    double predicted;
    double z_score;
    bool pass;
    bool weight_warning;
};

struct CgfReport {
    std::vector<CgfRow> rows;
    bool all_pass = true;
};

// band: the o(1) allowance added on top of 3 SE (theorems fix orders only)
inline CgfReport cgf_comparison(const std::vector<double>& fluct,
                                const std::vector<double>& s_grid,
                                const std::function<double(double)>& predicted,
                                double band = 0.0) {
    CgfReport rep;
    for (double s : s_grid) {
        EmpiricalCgf e = empirical_cgf(fluct, s);
        CgfRow row;
        row.s = s;
        row.empirical = e.value;
        row.std_error = e.std_error;
        row.predicted = predicted(s);
        row.weight_warning = e.weight_warning;
        double diff = std::abs(e.value - row.predicted);
        row.z_score = e.std_error > 0.0 ? (e.value - row.predicted) / e.std_error : 0.0;
        row.pass = diff <= 3.0 * e.std_error + band;
        rep.all_pass = rep.all_pass && row.pass;
        rep.rows.push_back(row);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Binary batch records: magic, n, seed, n_samples, then moduli (LE doubles)
// ---------------------------------------------------------------------------

namespace fluct_detail {
inline constexpr char kBatchMagic[8] = {'C', 'G', 'B', 'A', 'T', 'C', 'H', '1'};

inline std::uint64_t to_le(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::little) return v;
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out = (out << 8) | ((v >> (8 * i)) & 0xff);
    return out;
}
}  // namespace fluct_detail

inline void write_batch(const SampleBatch& batch, const std::string& path) {
    auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError("write_batch: cannot open " + path);
    f.write(fluct_detail::kBatchMagic, 8);
    std::uint64_t header[3] = {fluct_detail::to_le(std::uint64_t(batch.n)),
                               fluct_detail::to_le(batch.seed),
                               fluct_detail::to_le(std::uint64_t(batch.moduli.size()))};
    f.write(reinterpret_cast<const char*>(header), sizeof(header));
    for (const auto& sample : batch.moduli)
        for (double r : sample) {
            std::uint64_t bits;
            std::memcpy(&bits, &r, 8);
            bits = fluct_detail::to_le(bits);
            f.write(reinterpret_cast<const char*>(&bits), 8);
        }
}

inline SampleBatch read_batch(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("read_batch: cannot open " + path);
    char magic[8];
    f.read(magic, 8);
    if (std::memcmp(magic, fluct_detail::kBatchMagic, 8) != 0)
        throw ValidationError("read_batch: bad magic");
    std::uint64_t header[3];
    f.read(reinterpret_cast<char*>(header), sizeof(header));
    SampleBatch batch;
    batch.n = static_cast<long long>(fluct_detail::to_le(header[0]));
    batch.seed = fluct_detail::to_le(header[1]);
    std::uint64_t n_samples = fluct_detail::to_le(header[2]);
    batch.moduli.assign(n_samples, std::vector<double>(batch.n));
    for (auto& sample : batch.moduli)
        for (double& r : sample) {
            std::uint64_t bits;
            f.read(reinterpret_cast<char*>(&bits), 8);
            bits = fluct_detail::to_le(bits);
            std::memcpy(&r, &bits, 8);
        }
    if (!f) throw ValidationError("read_batch: truncated file");
    return batch;
}

}  // namespace coulgas
