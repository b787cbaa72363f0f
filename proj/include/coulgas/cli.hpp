#pragma once

// Command dispatch for the batch front end.  Every command reads a RunConfig,
// emits plot-ready CSV/JSON artifacts under the output directory and returns
// a process exit code: 0 success, 2 validation failure, 3 numerical-gate
// failure, 64 unknown command.

#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "coulgas/config.hpp"
#include "coulgas/fluctuations.hpp"
#include "coulgas/free_energy.hpp"
#include "coulgas/io.hpp"

namespace coulgas {

namespace cli_detail {

struct Problem {
    RadialPotential pot;
    PeakFinder pf;
    DropletGeometry geom;
    TestFunction h;

    explicit Problem(const RunConfig& cfg)
        : pot(cfg.build_potential()), pf(pot), geom(compute_droplet(pot, pf)),
          h(cfg.build_test_function()) {
        pot.validate();
    }
};

inline NormPolicy policy_from(const RunConfig& cfg) {
    NormPolicy p;
    p.cutoff.c_cut = cfg.c_cut;
    p.workers = cfg.workers;
    p.laplace_bulk = cfg.laplace_bulk;
    return p;
}

inline std::string out_path(const RunConfig& cfg, const std::string& name) {
    return (std::filesystem::path(cfg.out_dir) / name).string();
}

// ---------------------------------------------------------------------------
// identities
// ---------------------------------------------------------------------------

struct IdentityRow {
    std::string name;
    int draws;
    double max_residual;
    double threshold;
    bool pass() const { return max_residual <= threshold; }
};

inline std::vector<IdentityRow> run_identity_suite() {
    std::vector<IdentityRow> rows;
    auto run = [&](const std::string& name, int draws, double threshold,
                   const std::function<double(RngStream&)>& residual) {
        RngStream rng(0x1d3a, 0, std::hash<std::string>{}(name));
        double worst = 0.0;
        for (int i = 0; i < draws; ++i) worst = std::max(worst, residual(rng));
        rows.push_back({name, draws, worst, threshold});
    };

    run("q_binomial", 120, 1e-11, [](RngStream& rng) {
        double z = 2.0 * rng.uniform() - 1.0;
        double q = 0.05 + 0.9 * rng.uniform();
        int n = 1 + int(rng.uniform() * 40);
        return q_binomial_residual(z, q, n) / std::max(1.0, std::abs(qpoch_finite(z, q, n)));
    });
    run("euler_identity", 120, 1e-10, [](RngStream& rng) {
        double theta = 0.1 + 3.0 * rng.uniform();
        double q = 0.05 + 0.9 * rng.uniform();
        double c = 2.0 * rng.uniform() - 1.0;
        double s = 2.0 * rng.uniform() - 1.0;
        double scale =
            std::exp(qpoch_infinite_log(-theta * std::exp(c * s) * std::sqrt(q), q));
        return euler_identity_residual(theta, q, c, s) / std::max(1.0, scale);
    });
    run("theta_bridge", 120, 1e-9, [](RngStream& rng) {
        double x = rng.uniform();
        double p = 0.05 + 0.9 * rng.uniform();
        double q = 0.2 + 2.0 * rng.uniform();
        return std::abs(big_theta_bridge_residual(x, p, q));
    });
    run("heine_normalization", 120, 1e-12, [](RngStream& rng) {
        HeineDist d(0.05 + 4.0 * rng.uniform(), 0.05 + 0.9 * rng.uniform());
        double sum = 0.0;
        for (int k = 0; k < 500; ++k) {
            double p = heine_pmf(d, k);
            sum += p;
            if (k > 5 && p < 1e-18) break;
        }
        return std::abs(sum - 1.0);
    });
    run("heine_mean_qx", 120, 1e-10, [](RngStream& rng) {
        HeineDist d(0.05 + 4.0 * rng.uniform(), 0.05 + 0.9 * rng.uniform());
        double direct = 0.0;
        for (int k = 0; k < 500; ++k) {
            double p = std::pow(d.q, k) * heine_pmf(d, k);
            direct += p;
            if (k > 5 && p < 1e-18) break;
        }
        return std::abs(direct - heine_mean_qx(d));
    });
    run("discrete_normal_difference", 100, 1e-10, [](RngStream& rng) {
        double theta = 0.2 + 2.5 * rng.uniform();
        double rho = 0.1 + 0.75 * rng.uniform();
        HeineDist xp(theta * rho, rho * rho), xm(rho / theta, rho * rho);
        return dnormal_check(xp, xm);
    });
    run("euler_maclaurin_polynomial", 100, 1e-11, [](RngStream& rng) {
        int d = 1 + int(rng.uniform() * 3.999);
        int deg = 2 * d - 1;
        std::vector<double> coef(deg + 1);
        for (double& c : coef) c = 2.0 * rng.uniform() - 1.0;
        auto poly = [coef](int order, double x) {
            double acc = 0.0;
            for (int p = order; p < (int)coef.size(); ++p) {
                double fac = 1.0;
                for (int m = 0; m < order; ++m) fac *= (p - m);
                acc += coef[p] * fac * std::pow(x, p - order);
            }
            return acc;
        };
        std::vector<std::function<double(double)>> derivs;
        for (int k = 1; k <= 2 * d; ++k)
            derivs.push_back([poly, k](double x) { return poly(k, x); });
        double m = 1.0 + std::floor(rng.uniform() * 5.0);
        double n = m + 5.0 + std::floor(rng.uniform() * 20.0);
        auto res = euler_maclaurin_sum([poly](double x) { return poly(0, x); }, derivs,
                                       m, n, d);
        double direct = 0.0, scale = 1.0;
        for (double j = m; j < n; j += 1.0) {
            direct += poly(0, j);
            scale = std::max(scale, std::abs(poly(0, j)));
        }
        return std::abs(res.value - direct) / scale;
    });

    // geometric identities on the built-in families
    std::vector<RadialPotential> fams;
    fams.push_back(make_ginibre());
    fams.push_back(make_even_polynomial({-2.0, 1.0}));
    fams.push_back(make_even_polynomial({1.155, -0.8, 1.0 / 6.0}));
    double worst_ell = 0.0, worst_b = 0.0;
    int ncomp = 0;
    for (const auto& pot : fams) {
        auto g = compute_droplet(pot);
        auto sm = sigma_moment(pot, g, tf_log2());
        worst_ell = std::max(worst_ell, std::abs(sm.quadrature - sm.closed_form));
        for (int nu = 0; nu < (int)g.components.size(); ++nu) {
            worst_b = std::max(worst_b, std::abs(b_integral_identity_residual(pot, g, nu)));
            ++ncomp;
        }
    }
    rows.push_back({"log_sigma_moment", (int)fams.size(), worst_ell, 1e-9});
    rows.push_back({"b_integral_vs_fq", ncomp, worst_b, 1e-8});
    return rows;
}

}  // namespace cli_detail

inline int dispatch(const std::string& command, const RunConfig& cfg,
                    std::ostream& log = std::cout) {
    using namespace cli_detail;
    if (command == "identities") {
        auto rows = run_identity_suite();
        CsvWriter csv({"identity", "draws", "max_residual", "threshold", "pass"});
        bool all = true;
        for (const auto& r : rows) {
            csv.add_row({r.name, std::to_string(r.draws), CsvWriter::num(r.max_residual),
                         CsvWriter::num(r.threshold), r.pass() ? "1" : "0"});
            log << (r.pass() ? "[pass] " : "[FAIL] ") << r.name
                << "  residual " << r.max_residual << " (threshold " << r.threshold << ")\n";
            all = all && r.pass();
        }
        csv.write(out_path(cfg, "identities.csv"));
        return all ? 0 : 3;
    }

    if (command == "droplet") {
        Problem prob(cfg);
        write_json(to_json(prob.geom), out_path(cfg, "droplet.json"));
        log << "family " << cfg.family << ": " << prob.geom.components.size()
            << " component(s), " << prob.geom.outposts.size() << " outpost(s), chi = "
            << prob.geom.euler_char << "\n";
        return 0;
    }

    if (command == "functionals") {
        Problem prob(cfg);
        CsvWriter csv({"family", "quantity", "value"});
        auto put = [&](const std::string& name, double v) {
            csv.add_row({cfg.family, name, CsvWriter::num(v)});
        };
        put("I_Q", energy_IQ(prob.pot, prob.geom));
        put("E_Q", entropy_EQ(prob.pot, prob.geom));
        auto fq = fq_total(prob.pot, prob.geom);
        put("F_Q", fq.total);
        for (std::size_t nu = 0; nu < fq.per_component.size(); ++nu)
            put("F_Q_" + std::to_string(nu), fq.per_component[nu]);
        put("e_h", boundary_e(prob.pot, prob.geom, prob.h));
        try {
            put("v_h", variance_v(prob.pot, prob.geom, prob.h));
        } catch (const SingularError&) {
            // v_{0,l} diverges on a central disk; the regularized v~_l below
            // is the meaningful replacement
        }
        put("sigma_h", sigma_integral(prob.pot, prob.geom,
                                      [&](double r) { return prob.h.f(r); }));
        put("sigma_log", sigma_moment(prob.pot, prob.geom, tf_log2()).quadrature);
        if (prob.geom.central_disk) {
            put("e_tilde_log", e_tilde_log(prob.pot, prob.geom));
            put("v_tilde_log", v_tilde_log(prob.pot, prob.geom));
        }
        if (prob.geom.gap_count() > 0) {
            long long n = cfg.n_values.front();
            auto gc = gap_constants(prob.pot, prob.geom, prob.h,
                                    {cfg.s_values.front(), cfg.alpha}, n);
            for (std::size_t nu = 0; nu < gc.size(); ++nu) {
                put("rho_" + std::to_string(nu), gc.rho[nu]);
                put("theta_" + std::to_string(nu), gc.theta_alpha[nu]);
                put("c_" + std::to_string(nu), gc.c[nu]);
                put("mu_" + std::to_string(nu), gc.mu[nu]);
                put("x_" + std::to_string(nu), gc.x[nu]);
            }
            put("K_n", gc.k_n);
        }
        csv.write(out_path(cfg, "functionals.csv"));
        log << "functionals written for family " << cfg.family << "\n";
        return 0;
    }

    if (command == "free-energy") {
        Problem prob(cfg);
        if (!prob.geom.outposts.empty()) {
            log << "potential has outposts; the regular/conical expansions do not apply. "
                   "Use the `outpost` command.\n";
            return 3;
        }
        NormPolicy pol = policy_from(cfg);
        CsvWriter csv({"family", "s", "alpha", "n", "log_z_exact", "expansion_total",
                       "residual", "scaled_residual"});
        for (double s : cfg.s_values) {
            auto rep = compare_report(prob.pot, prob.pf, prob.geom, prob.h,
                                      {s, cfg.alpha}, cfg.n_values, pol);
            for (const auto& row : rep.rows)
                csv.add_row({cfg.family, CsvWriter::num(s), CsvWriter::num(cfg.alpha),
                             std::to_string(row.n), CsvWriter::num(row.log_z_exact),
                             CsvWriter::num(row.expansion_total),
                             CsvWriter::num(row.residual),
                             CsvWriter::num(row.scaled_residual)});
            log << "s = " << s << ": scaling " << rep.scaling << ", upward trend "
                << (rep.no_upward_trend ? "no" : "YES") << "\n";
        }
        csv.write(out_path(cfg, "free_energy.csv"));
        // per-term breakdown and the norm table of the largest run
        Perturbation pert{cfg.s_values.front(), cfg.alpha};
        long long n_big = cfg.n_values.back();
        auto b = cfg.alpha == 0.0
                     ? expansion_regular(prob.pot, prob.geom, prob.h, pert, n_big)
                     : expansion_conical(prob.pot, prob.geom, prob.h, pert, n_big);
        write_json(to_json(b), out_path(cfg, "breakdown.json"));
        CsvWriter bterm({"theorem", "c1_n2", "c2_nlogn", "c3_n", "c4_logn", "c5_const",
                         "gn", "total", "claimed_error"});
        bterm.add_row({b.theorem, CsvWriter::num(b.c1), CsvWriter::num(b.c2),
                       CsvWriter::num(b.c3), CsvWriter::num(b.c4), CsvWriter::num(b.c5),
                       CsvWriter::num(b.gn), CsvWriter::num(b.total()), b.claimed_error});
        bterm.write(out_path(cfg, "breakdown.csv"));
        auto table = log_partition_exact(prob.pot, prob.pf, prob.geom, prob.h, pert,
                                         n_big, pol)
                         .table;
        norm_table_csv(table).write(out_path(cfg, "norms_n" + std::to_string(n_big) +
                                             ".csv"));
        return 0;
    }

    if (command == "fluct") {
        Problem prob(cfg);
        NormPolicy pol = policy_from(cfg);
        bool log_stat = cfg.tf_kind == "log2";
        bool conical = cfg.alpha != 0.0 && !log_stat;
        std::string mode = log_stat ? "log_statistic"
                           : !prob.geom.outposts.empty()
                               ? "outpost"
                               : (conical ? "conical" : "regular");
        CsvWriter csv({"mode", "n", "s", "empirical", "std_error", "predicted", "z_score",
                       "pass", "weight_warning"});
        bool all = true;
        double band_scale = -1.0;  // fitted on the smallest n, then held fixed
        std::vector<long long> ns = cfg.n_values;
        std::sort(ns.begin(), ns.end());
        for (long long n : ns) {
            Perturbation measure{0.0, conical ? cfg.alpha : 0.0};
            KostlanSampler sampler(prob.pot, prob.pf, prob.geom, tf_const(0.0), measure, n,
                                   pol);
            auto batch = sampler.sample_batch(cfg.seed, cfg.samples, cfg.workers);
            write_batch(batch, out_path(cfg, "batch_n" + std::to_string(n) + ".bin"));
            auto fl = fluct_statistic(batch, prob.h, prob.pot, prob.geom);

            double e_term, v_term;
            std::function<double(double)> predictor;
            if (mode == "outpost") {
                double b = prob.geom.components[0].b, t = prob.geom.outposts[0];
                double rho = b / t;
                double theta = std::sqrt(prob.pot.laplace_density(b) /
                                         prob.pot.laplace_density(t));
                double c = prob.h.f(t) - prob.h.f(b);
                e_term = boundary_e(prob.pot, prob.geom, prob.h);
                v_term = variance_v(prob.pot, prob.geom, prob.h);
                predictor = [=](double s) {
                    return predicted_cgf_outpost(rho, theta, c, e_term, v_term, s);
                };
            } else if (mode == "log_statistic") {
                double et = e_tilde_log(prob.pot, prob.geom);
                double vt = v_tilde_log(prob.pot, prob.geom);
                const auto& P = prob.pot;
                const auto& G = prob.geom;
                predictor = [&P, &G, et, vt, n](double a) {
                    double gn_a = 0.0, gn_0 = 0.0;
                    if (G.gap_count() > 0) {
                        auto ga = gap_constants(P, G, tf_const(0.0), {0.0, a}, n);
                        auto g0 = gap_constants(P, G, tf_const(0.0), {0.0, 0.0}, n);
                        gn_a = displacement_gn(ga);
                        gn_0 = displacement_gn(g0);
                    }
                    return predicted_cgf_log_statistic(n, a, et, vt, gn_a, gn_0);
                };
            } else {
                e_term = conical
                             ? boundary_e_alpha(prob.pot, prob.geom, prob.h, cfg.alpha)
                             : boundary_e(prob.pot, prob.geom, prob.h);
                v_term = variance_v(prob.pot, prob.geom, prob.h);
                if (prob.geom.gap_count() > 0) {
                    auto gaps = gap_constants(prob.pot, prob.geom, prob.h,
                                              {0.0, conical ? cfg.alpha : 0.0}, n);
                    predictor = [=](double s) {
                        return predicted_cgf_gapped(gaps, e_term, v_term, s);
                    };
                } else {
                    predictor = [=](double s) {
                        return predicted_cgf_gaussian(e_term, v_term, s);
                    };
                }
            }

            double band = 0.0;
            if (ns.size() >= 2 && band_scale >= 0.0)
                band = prob.geom.central_disk
                           ? band_scale * std::pow(double(n), -1.0 / 12.0) *
                                 std::pow(std::log(double(n)), 3.0)
                           : band_scale / double(n);
            auto rep = cgf_comparison(fl, cfg.s_values, predictor, band);
            if (ns.size() >= 2 && band_scale < 0.0) {
                // calibrate the o(1) allowance on the smallest n
                double worst = 0.0;
                for (const auto& row : rep.rows)
                    worst = std::max(worst, std::abs(row.empirical - row.predicted) -
                                                3.0 * row.std_error);
                double unit = prob.geom.central_disk
                                  ? std::pow(double(n), -1.0 / 12.0) *
                                        std::pow(std::log(double(n)), 3.0)
                                  : 1.0 / double(n);
                band_scale = std::max(0.0, worst) / unit * 1.5;
                rep = cgf_comparison(fl, cfg.s_values, predictor, std::max(0.0, worst) * 1.5);
            }
            for (const auto& row : rep.rows) {
                csv.add_row({mode, std::to_string(n), CsvWriter::num(row.s),
                             CsvWriter::num(row.empirical), CsvWriter::num(row.std_error),
                             CsvWriter::num(row.predicted), CsvWriter::num(row.z_score),
                             row.pass ? "1" : "0", row.weight_warning ? "1" : "0"});
                all = all && row.pass;
            }
            log << "n = " << n << " mode " << mode
                << (rep.all_pass ? ": all s pass" : ": FAILURES") << "\n";
        }
        csv.write(out_path(cfg, "fluct.csv"));
        return all ? 0 : 3;
    }

    if (command == "outpost") {
        Problem prob(cfg);
        if (prob.geom.outposts.size() != 1) {
            log << "the outpost command needs a potential with exactly one outpost "
                   "(family outpost_bump or origin_outpost)\n";
            return 3;
        }
        NormPolicy pol = policy_from(cfg);
        CsvWriter csv({"n", "s", "predicted", "measured", "difference", "difference_x_n"});
        for (long long n : cfg.n_values)
            for (double s : cfg.s_values) {
                auto r = outpost_log_ratio(prob.pot, prob.pf, prob.geom, prob.h, s, n, pol);
                double d = r.measured - r.predicted;
                csv.add_row({std::to_string(n), CsvWriter::num(s),
                             CsvWriter::num(r.predicted), CsvWriter::num(r.measured),
                             CsvWriter::num(d), CsvWriter::num(d * double(n))});
            }
        csv.write(out_path(cfg, "outpost.csv"));
        if (prob.geom.outposts[0] > prob.geom.components[0].b) {
            long long n = cfg.n_values.back();
            KostlanSampler sampler(prob.pot, prob.pf, prob.geom, tf_const(0.0), {0.0, 0.0},
                                   n, pol);
            auto batch = sampler.sample_batch(cfg.seed, cfg.samples, cfg.workers);
            auto law = outpost_count_law(batch, prob.pot, prob.geom);
            CsvWriter counts({"k", "empirical", "heine"});
            for (std::size_t k = 0; k < law.empirical_pmf.size(); ++k)
                counts.add_row({std::to_string(k), CsvWriter::num(law.empirical_pmf[k]),
                                CsvWriter::num(law.heine_pmf_values[k])});
            counts.write(out_path(cfg, "outpost_counts.csv"));
            log << "counting law at n = " << n << ": TV = " << law.tv_distance
                << ", mean " << law.empirical_mean << " vs Heine " << law.heine_mean << "\n";
        }
        return 0;
    }

    log << "unknown command '" << command << "'\n";
    return 64;
}

}  // namespace coulgas
