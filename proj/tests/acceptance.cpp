// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mrq/cli.hpp"
#include "mrq/error.hpp"
#include "mrq/estimators.hpp"
#include "mrq/simulation.hpp"
#include "mrq/wqr.hpp"
#include "oracles.hpp"

using namespace mrq;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Outcome tau_closed_form() {
    std::mt19937_64 rng(1001);
    std::uniform_real_distribution<double> ua(-100, 100);
    std::uniform_int_distribution<int> up(1, 200);
    double worst = 0;
    int bad = 0;
    const auto t0 = Clock::now();
    for (int i = 0; i < 10000; ++i) {
        double a = ua(rng);
        const double p = up(rng);
        // p equal ratios at theta = 0, lambda = 1 give the score a (up to rounding)
        std::vector<double> r(static_cast<std::size_t>(p), a / p), w(r.size(), 1.0);
        const double tau = update_tau(r, w, 0.0, 1.0);
        double a_used = 0;
        for (double v : r) a_used += v;
        a = a_used;
        const double resid = std::abs(a * tau * tau - tau * (2 * p + a) + p);
        worst = std::max(worst, resid / p);
        if (!(resid < 1e-9 * p) || !(tau > 0 && tau < 1)) ++bad;
    }
    const double elapsed = seconds_since(t0);
    // a == 0 through the data-level update: symmetric residuals
    std::vector<double> sym{-2, -1, 1, 2}, ones{1, 1, 1, 1};
    const bool half = tau_from_score(0.0, 37.0) == 0.5 && update_tau(sym, ones, 0.0, 5.0) == 0.5;
    return {bad == 0 && half && elapsed < 1.0,
            fmt("max residual/p %.3g, violations %d, a=0 -> 0.5 %s, %.4f s", worst, bad, half ? "yes" : "no", elapsed)};
}

Outcome sign_law() {
    std::mt19937_64 rng(1002);
    std::uniform_real_distribution<double> u(-5, 5), uw(0.01, 10), ul(0.001, 100);
    int exceptions = 0;
    for (int t = 0; t < 10000; ++t) {
        const int p = 1 + static_cast<int>(rng() % 100);
        std::vector<double> r(p), w(p);
        for (int i = 0; i < p; ++i) {
            r[i] = u(rng);
            w[i] = uw(rng);
        }
        const double theta = (t % 4 == 0) ? r[rng() % p] : u(rng);
        long double s = 0;
        for (int i = 0; i < p; ++i) s += static_cast<long double>(w[i]) * (r[i] - theta);
        const double tau = update_tau(r, w, theta, ul(rng));
        const int lhs = (tau > 0.5) - (tau < 0.5);
        const int rhs = -((s > 0) - (s < 0));
        if (lhs != rhs) ++exceptions;
    }
    return {exceptions == 0, fmt("%d exceptions in 10000 instances", exceptions)};
}

Outcome consistency_window() {
    std::mt19937_64 rng(1003);
    const double qs[] = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    long checks = 0, failures = 0;
    int pairs = 0;
    for (double qm : qs) {
        for (double qp : qs) {
            if (qm + qp >= 1.0 - 1e-12) continue;
            ++pairs;
            for (int rep = 0; rep < 100; ++rep) {
                std::uniform_int_distribution<int> un(1, 10);
                std::uniform_real_distribution<double> uw(0.2, 5), uv(0.01, 10);
                std::vector<double> x, w;
                auto group = [&](double share, double sign) {
                    const int n = un(rng);
                    std::vector<double> raw(n);
                    double tot = 0;
                    for (double& v : raw) tot += (v = uw(rng));
                    for (double v : raw) {
                        x.push_back(sign * uv(rng));
                        w.push_back(share * v / tot);
                    }
                };
                group(qm, -1.0);
                group(1.0 - qm - qp, 0.0);
                group(qp, 1.0);
                // shuffle jointly so input order carries no information
                std::vector<std::size_t> idx(x.size());
                for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
                std::shuffle(idx.begin(), idx.end(), rng);
                std::vector<double> xs, ws;
                for (std::size_t i : idx) {
                    xs.push_back(x[i]);
                    ws.push_back(w[i]);
                }
                for (int k = 1; k <= 99; ++k) {
                    const double tau = k / 100.0;
                    const double q = weighted_quantile(xs, ws, tau);
                    if (tau >= qm + 1e-9 && tau <= 1.0 - qp - 1e-9) {
                        ++checks;
                        failures += q != 0.0;
                    } else if (tau < qm - 1e-9 || tau > 1.0 - qp + 1e-9) {
                        ++checks;
                        failures += q == 0.0;
                    }
                }
            }
        }
    }
    return {failures == 0, fmt("%d (q-,q+) pairs x 100 constructions, %ld grid checks, %ld failures", pairs,
                               checks, failures)};
}

Outcome monotonicity() {
    std::mt19937_64 rng(1004);
    std::uniform_real_distribution<double> u(-2, 2), uw(0.2, 5);
    int decreases = 0, converged = 0, not_fixed = 0;
    double worst_drop = 0, worst_move = 0;
    for (int t = 0; t < 500; ++t) {
        const int p = 5 + static_cast<int>(rng() % 96);
        std::vector<double> r(p), w(p);
        for (int i = 0; i < p; ++i) {
            r[i] = u(rng);
            w[i] = uw(rng);
        }
        const AldFit fit = fit_ald(r, w);
        for (std::size_t k = 1; k < fit.loglik_trace.size(); ++k) {
            const double drop = fit.loglik_trace[k - 1] - fit.loglik_trace[k];
            worst_drop = std::max(worst_drop, drop);
            if (fit.loglik_trace[k] < fit.loglik_trace[k - 1] - 1e-10) ++decreases;
        }
        if (!fit.converged) continue;
        ++converged;
        const AldParams& par = fit.params;
        const double theta = oracle::weighted_quantile(r, w, par.tau);
        const double lambda = update_lambda(r, w, theta, par.tau);
        const double tau = update_tau(r, w, theta, lambda);
        auto rel = [](double a, double b) {
            return a == b ? 0.0 : std::abs(a - b) / std::max(std::abs(a), std::abs(b));
        };
        const double move = std::max({rel(theta, par.theta), rel(lambda, par.lambda), rel(tau, par.tau)});
        worst_move = std::max(worst_move, move);
        if (!(move < 1e-8)) ++not_fixed;
    }
    return {decreases == 0 && not_fixed == 0,
            fmt("500 fits, %d decreases (largest drop %.3g), %d converged, %d not fixed points "
                "(largest re-update change %.3g)",
                decreases, worst_drop, converged, not_fixed, worst_move)};
}

Outcome mle_oracle() {
    std::mt19937_64 rng(1005);
    std::uniform_real_distribution<double> u(-2, 2), uw(0.2, 5);
    int below = 0, converged = 0;
    double worst = 1e300;
    for (int t = 0; t < 50; ++t) {
        const int p = 2 + static_cast<int>(rng() % 5);
        std::vector<double> r(p), w(p);
        for (int i = 0; i < p; ++i) {
            r[i] = u(rng);
            w[i] = uw(rng);
        }
        const auto grid = oracle::grid_search_mle(r, w);
        const AldFit fit = fit_ald(r, w);
        converged += fit.converged;
        const double gap = fit.loglik_trace.back() - grid.loglik;
        worst = std::min(worst, gap);
        if (gap < -1e-6) ++below;
    }
    return {below == 0, fmt("50 instances (p <= 6), %d converged, %d below grid max, min(l_fit - l_grid) = %.3g",
                            converged, below, worst)};
}

Outcome weak_type1() {
    WeakSimConfig cfg;
    cfg.n = 50000;
    cfg.p = 50;
    cfg.m = 30;
    cfg.h_y2 = 0.2;
    cfg.h_u2 = 0.0;
    cfg.theta = 0.0;
    cfg.seed = 2024;
    StudyOptions opt;
    opt.boot.n_boot = 200;
    opt.boot.seed = 77;
    const Method methods[] = {Method::mr_quantile};
    const auto t0 = Clock::now();
    const auto res = run_study(cfg, methods, 500, opt);
    const auto& s = res.aggregates.at(Method::mr_quantile);
    const double rate = s.rejection_rate;
    return {s.n_ok >= 475 && rate >= 0.03 && rate <= 0.11,
            fmt("rejection rate %.3f over %zu fits (%zu failed), %.1f s", rate, s.n_ok, s.n_failed, seconds_since(t0))};
}

Outcome weak_correlated() {
    WeakSimConfig cfg;
    cfg.n = 50000;
    cfg.p = 50;
    cfg.m = 30;
    cfg.h_y2 = 0.1;
    cfg.h_u2 = 0.1;
    cfg.theta = 0.0;
    cfg.seed = 2025;
    StudyOptions opt;
    opt.boot.n_boot = 200;
    opt.boot.seed = 78;
    const Method methods[] = {Method::mr_quantile, Method::ivw};
    const auto t0 = Clock::now();
    const auto res = run_study(cfg, methods, 500, opt);
    const double q = res.aggregates.at(Method::mr_quantile).rejection_rate;
    const double ivw = res.aggregates.at(Method::ivw).rejection_rate;
    return {ivw > 2 * q, fmt("IVW %.3f vs MR-Quantile %.3f, %.1f s", ivw, q, seconds_since(t0))};
}

Outcome strong_unbiased() {
    StrongSimConfig cfg;
    cfg.n = 50000;
    cfg.p = 30;
    cfg.scenario = Scenario::no_pleiotropy;
    cfg.q = 0.0;
    cfg.theta0 = 0.1;
    cfg.seed = 2026;
    StudyOptions opt;
    opt.boot.n_boot = 200;
    opt.boot.seed = 79;
    const Method methods[] = {Method::mr_quantile, Method::ivw};
    const auto t0 = Clock::now();
    const auto res = run_study(cfg, methods, 200, opt);
    const auto& q = res.aggregates.at(Method::mr_quantile);
    const auto& ivw = res.aggregates.at(Method::ivw);
    return {std::abs(q.bias) < 0.01 && std::abs(ivw.bias) < 0.01 && q.n_ok == 200 && ivw.n_ok == 200,
            fmt("bias IVW %+.5f, MR-Quantile %+.5f, %.1f s", ivw.bias, q.bias, seconds_since(t0))};
}

Outcome risk_ratio() {
    // a binary-rare report whose point estimate is exactly -0.23
    std::vector<InstrumentRecord> recs{{"a", 0.1, 0.01, -0.023, 0.02, {}, {}},
                                       {"b", 0.2, 0.01, -0.046, 0.03, {}, {}}};
    const auto data = make_harmonized(recs, OutcomeType::binary_rare);
    const auto rep = estimate(data, Method::ivw);
    const bool theta_ok = std::abs(rep.theta_hat + 0.23) < 1e-12;
    const double rr = rep.rr_scale ? rep.rr_scale->rr : 0.0;
    return {theta_ok && std::abs(rr - 0.7945) <= 1e-4,
            fmt("theta %.6f -> RR %.6f (CI %.4f-%.4f)", rep.theta_hat, rr,
                rep.rr_scale ? rep.rr_scale->ci_low : 0.0, rep.rr_scale ? rep.rr_scale->ci_high : 0.0)};
}

Outcome performance() {
    WeakSimConfig cfg;
    cfg.p = 100;
    cfg.m = 30;
    cfg.seed = 5;
    const auto data = generate_weak(cfg, 0);
    BootstrapConfig boot;
    boot.n_boot = 1000;
    boot.seed = 1;
    const auto t0 = Clock::now();
    const auto rep = estimate(data, Method::mr_quantile, {}, boot);
    const double elapsed = seconds_since(t0);
    return {elapsed < 2.0, fmt("p=100, B=1000: %.3f s (SE %.4g)", elapsed, rep.se)};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

Outcome determinism() {
    const fs::path dir = fs::temp_directory_path() / "mrq_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream ex(dir / "exposure.tsv"), oc(dir / "outcome.tsv");
        ex << "snp\tea\toa\tbeta\tse\tp\n";
        oc << "snp\tea\toa\tbeta\tse\tp\n";
        std::mt19937_64 rng(1011);
        std::normal_distribution<double> z;
        for (int i = 0; i < 40; ++i) {
            const double bx = 0.05 + 0.1 * std::abs(z(rng));
            ex << "rs" << i << "\tA\tG\t" << bx << "\t0.01\t1e-12\n";
            oc << "rs" << i << "\tA\tG\t" << 0.2 * bx + 0.02 * z(rng) + (i < 10 ? 0.05 : 0.0) << "\t0.02\t0.5\n";
        }
    }
    std::ostringstream sink_out, sink_err;
    int failures = 0;
    std::vector<std::string> outputs;
    for (const char* threads : {"1", "4", "1"}) {
        // same paths every run: the manifest records them
        const std::string est = (dir / "est.json").string();
        const std::string diag = (dir / "diag.tsv").string();
        const std::string sim = (dir / "sim.tsv").string();
        for (const auto& f : {est, diag, diag + ".density.tsv", sim, sim + ".summary.tsv", sim + ".json"})
            fs::remove(f);
        failures += cli::run({"estimate", "--exposure", (dir / "exposure.tsv").string(), "--outcome",
                              (dir / "outcome.tsv").string(), "--boot", "300", "--seed", "9", "--threads",
                              threads, "--out", est, "--diagnostics", diag},
                             sink_out, sink_err) != 0;
        failures += cli::run({"simulate", "--design", "weak", "--h-y2", "0.2", "--reps", "20", "--boot", "50",
                              "--seed", "4", "--threads", threads, "--out", sim},
                             sink_out, sink_err) != 0;
        failures += cli::run({"simulate", "--design", "strong", "--scenario", "correlated", "--q", "0.2", "--n",
                              "5000", "--reps", "4", "--boot", "20", "--seed", "4", "--threads", threads,
                              "--format", "json", "--out", sim + ".json"},
                             sink_out, sink_err) != 0;
        outputs.push_back(slurp(est) + slurp(diag) + slurp(diag + ".density.tsv") + slurp(sim) +
                          slurp(sim + ".summary.tsv") + slurp(sim + ".json"));
    }
    const bool same = outputs[0] == outputs[1] && outputs[1] == outputs[2];
    return {failures == 0 && same && !outputs[0].empty(),
            fmt("3 runs (threads 1, 4, 1) of estimate + 2 simulate: %s, %d command failures, %zu bytes each",
                same ? "byte-identical" : "DIFFERENT", failures, outputs[0].size())};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
    };
    const Criterion criteria[] = {
        {"tau closed form vs quadratic", tau_closed_form},
        {"tau sign law", sign_law},
        {"consistency window", consistency_window},
        {"coordinate-ascent monotonicity", monotonicity},
        {"MLE grid oracle", mle_oracle},
        {"weak design type I error", weak_type1},
        {"weak design correlated pleiotropy", weak_correlated},
        {"strong design unbiasedness", strong_unbiased},
        {"risk ratio transform", risk_ratio},
        {"performance envelope", performance},
        {"determinism", determinism},
    };
    int failed = 0;
    int index = 0;
    for (const auto& c : criteria) {
        ++index;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %2d. %s: %s\n", o.pass ? "PASS" : "FAIL", index, c.name, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%d criteria passed\n", index - failed, index);
    return failed == 0 ? 0 : 1;
}
