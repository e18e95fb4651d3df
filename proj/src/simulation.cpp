#include "mrq/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "mrq/error.hpp"
#include "mrq/parallel.hpp"
#include "mrq/rng.hpp"

namespace mrq {

namespace {

// Stream tags; every random quantity is keyed by (seed, rep, tag, ...).
constexpr std::uint64_t kEffects = 1;
constexpr std::uint64_t kSelection = 2;
constexpr std::uint64_t kGenotypes = 3;
constexpr std::uint64_t kErrors = 4;
constexpr std::uint64_t kSummaryNoise = 5;

double uniform(Engine& e, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(e);
}

std::string snp_name(int i) { return "snp" + std::to_string(i + 1); }

struct Marginal {
    double beta;
    double se;
};

// Simple linear regression of y on g with intercept.
Marginal regress(const std::vector<std::uint8_t>& g, const std::vector<double>& y, double y_mean,
                 double syy) {
    const std::size_t n = g.size();
    double g_sum = 0.0;
    for (std::uint8_t v : g) g_sum += v;
    const double g_mean = g_sum / static_cast<double>(n);
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double dg = static_cast<double>(g[j]) - g_mean;
        sxx += dg * dg;
        sxy += dg * (y[j] - y_mean);
    }
    if (!(sxx > 0.0)) throw Error(ErrorCode::DegenerateFit, "monomorphic simulated SNP");
    const double beta = sxy / sxx;
    const double rss = std::max(syy - beta * sxy, 0.0);
    return {beta, std::sqrt(rss / static_cast<double>(n - 2) / sxx)};
}

}  // namespace

std::string_view to_string(Scenario s) noexcept {
    switch (s) {
        case Scenario::no_pleiotropy: return "no_pleiotropy";
        case Scenario::uncorrelated: return "uncorrelated";
        case Scenario::correlated: return "correlated";
    }
    return "unknown";
}

Scenario parse_scenario(std::string_view s) {
    std::string v(s);
    std::replace(v.begin(), v.end(), '-', '_');
    if (v == "no_pleiotropy" || v == "1") return Scenario::no_pleiotropy;
    if (v == "uncorrelated" || v == "2") return Scenario::uncorrelated;
    if (v == "correlated" || v == "3") return Scenario::correlated;
    throw Error(ErrorCode::InvalidArgument, "unknown scenario '" + std::string(s) + "'");
}

int StrongSimConfig::invalid_count() const {
    return static_cast<int>(std::lround(q * static_cast<double>(p)));
}

void validate(const StrongSimConfig& cfg) {
    if (cfg.n < 10) throw Error(ErrorCode::InvalidArgument, "n must be >= 10");
    if (cfg.p < 1) throw Error(ErrorCode::InvalidArgument, "p must be >= 1");
    if (!(cfg.q >= 0.0 && cfg.q < 1.0)) throw Error(ErrorCode::InvalidArgument, "q must lie in [0, 1)");
    if ((cfg.q == 0.0) != (cfg.scenario == Scenario::no_pleiotropy)) {
        throw Error(ErrorCode::InvalidArgument,
                    "q must be 0 exactly when the scenario is no_pleiotropy (scenario " +
                        std::string(to_string(cfg.scenario)) + ", q = " + std::to_string(cfg.q) + ")");
    }
    if (!std::isfinite(cfg.theta0) || !std::isfinite(cfg.beta_xu) || !std::isfinite(cfg.beta_yu)) {
        throw Error(ErrorCode::InvalidArgument, "effects must be finite");
    }
}

void validate(const WeakSimConfig& cfg) {
    if (cfg.n < 1) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");
    if (cfg.p < 1) throw Error(ErrorCode::InvalidArgument, "p must be >= 1");
    if (cfg.m < 0 || cfg.m > cfg.p) throw Error(ErrorCode::InvalidArgument, "m must lie in [0, p]");
    if (!(cfg.h_y2 >= 0.0) || !(cfg.h_u2 >= 0.0) || !(cfg.h_x2 > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "heritabilities must be >= 0 (h_x2 > 0)");
    }
    if (!std::isfinite(cfg.theta)) throw Error(ErrorCode::InvalidArgument, "theta must be finite");
}

SimEffects draw_strong_effects(const StrongSimConfig& cfg, std::uint64_t rep_index) {
    validate(cfg);
    const auto p = static_cast<std::size_t>(cfg.p);
    SimEffects fx;
    fx.maf.resize(p);
    fx.gamma.resize(p);
    fx.alpha.assign(p, 0.0);
    fx.phi.assign(p, 0.0);
    fx.invalid.assign(p, false);

    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Engine sel = make_stream(cfg.seed, {rep_index, kSelection});
    std::shuffle(order.begin(), order.end(), sel);
    for (int k = 0; k < cfg.invalid_count(); ++k) fx.invalid[order[static_cast<std::size_t>(k)]] = true;

    for (std::size_t i = 0; i < p; ++i) {
        Engine e = make_stream(cfg.seed, {rep_index, kEffects, i});
        fx.maf[i] = uniform(e, 0.1, 0.3);
        const bool negative = std::bernoulli_distribution(0.5)(e);
        fx.gamma[i] = negative ? uniform(e, -0.2, -0.1) : uniform(e, 0.1, 0.2);
        const double alpha = uniform(e, 0.2, 0.3);
        const double phi = uniform(e, -0.1, 0.1);
        if (!fx.invalid[i]) continue;
        if (cfg.scenario != Scenario::no_pleiotropy) fx.alpha[i] = alpha;
        if (cfg.scenario == Scenario::correlated) fx.phi[i] = phi;
    }
    return fx;
}

std::vector<std::uint8_t> simulate_genotypes(const StrongSimConfig& cfg, std::uint64_t rep_index,
                                             int sample, int snp, double maf) {
    Engine e = make_stream(cfg.seed, {rep_index, kGenotypes, static_cast<std::uint64_t>(sample),
                                      static_cast<std::uint64_t>(snp)});
    // Bernoulli(maf) as a comparison against the top 53 bits of the engine output.
    const auto threshold = static_cast<std::uint64_t>(std::ldexp(maf, 53));
    std::vector<std::uint8_t> g(static_cast<std::size_t>(cfg.n));
    for (auto& v : g) {
        v = static_cast<std::uint8_t>(static_cast<int>((e() >> 11) < threshold) +
                                      static_cast<int>((e() >> 11) < threshold));
    }
    return g;
}

HarmonizedSet generate_strong(const StrongSimConfig& cfg, std::uint64_t rep_index) {
    const SimEffects fx = draw_strong_effects(cfg, rep_index);
    const auto n = static_cast<std::size_t>(cfg.n);
    const auto p = static_cast<std::size_t>(cfg.p);

    // sample 0 -> outcome associations, sample 1 -> exposure associations
    std::vector<Marginal> outcome(p), exposure(p);
    for (int sample = 0; sample < 2; ++sample) {
        std::vector<std::vector<std::uint8_t>> geno(p);
        std::vector<double> gphi(n, 0.0), ggamma(n, 0.0), galpha(n, 0.0);
        for (std::size_t i = 0; i < p; ++i) {
            geno[i] = simulate_genotypes(cfg, rep_index, sample, static_cast<int>(i), fx.maf[i]);
            for (std::size_t j = 0; j < n; ++j) {
                const double g = geno[i][j];
                gphi[j] += fx.phi[i] * g;
                ggamma[j] += fx.gamma[i] * g;
                galpha[j] += fx.alpha[i] * g;
            }
        }
        Engine e = make_stream(cfg.seed, {rep_index, kErrors, static_cast<std::uint64_t>(sample)});
        std::normal_distribution<double> z;
        std::vector<double> trait(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double u = gphi[j] + z(e);
            const double x = ggamma[j] + cfg.beta_xu * u + z(e);
            const double y = cfg.theta0 * x + galpha[j] + cfg.beta_yu * u + z(e);
            trait[j] = sample == 0 ? y : x;
        }
        const double mean = std::accumulate(trait.begin(), trait.end(), 0.0) / static_cast<double>(n);
        double syy = 0.0;
        for (double t : trait) syy += (t - mean) * (t - mean);
        auto& target = sample == 0 ? outcome : exposure;
        for (std::size_t i = 0; i < p; ++i) target[i] = regress(geno[i], trait, mean, syy);
    }

    std::vector<InstrumentRecord> records(p);
    for (std::size_t i = 0; i < p; ++i) {
        records[i] = InstrumentRecord{snp_name(static_cast<int>(i)), exposure[i].beta, exposure[i].se,
                                      outcome[i].beta, outcome[i].se, std::nullopt, std::nullopt};
    }
    return make_harmonized(std::move(records));
}

SimEffects draw_weak_effects(const WeakSimConfig& cfg, std::uint64_t rep_index) {
    validate(cfg);
    const auto p = static_cast<std::size_t>(cfg.p);
    const double dp = static_cast<double>(cfg.p);
    SimEffects fx;
    fx.gamma.resize(p);
    fx.alpha.assign(p, 0.0);
    fx.phi.assign(p, 0.0);
    fx.invalid.assign(p, false);
    const double sd_x = std::sqrt(cfg.h_x2 / dp);
    const double sd_y = std::sqrt(cfg.h_y2 / dp);
    const double sd_u = std::sqrt(cfg.h_u2 / dp);
    for (std::size_t i = 0; i < p; ++i) {
        Engine e = make_stream(cfg.seed, {rep_index, kEffects, i});
        std::normal_distribution<double> z;
        fx.gamma[i] = sd_x * z(e);
        const double alpha = sd_y * z(e);
        const double phi = sd_u * z(e);
        if (i < static_cast<std::size_t>(cfg.m)) {
            fx.invalid[i] = true;
            fx.alpha[i] = alpha;
            fx.phi[i] = phi;
        }
    }
    return fx;
}

HarmonizedSet generate_weak(const WeakSimConfig& cfg, std::uint64_t rep_index) {
    const SimEffects fx = draw_weak_effects(cfg, rep_index);
    const double se = 1.0 / std::sqrt(static_cast<double>(cfg.n));
    std::vector<InstrumentRecord> records(fx.gamma.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        Engine e = make_stream(cfg.seed, {rep_index, kSummaryNoise, i});
        std::normal_distribution<double> z;
        const double exposure_effect = fx.gamma[i] + fx.phi[i];
        const double bx = exposure_effect + se * z(e);
        const double by = cfg.theta * exposure_effect + fx.alpha[i] + fx.phi[i] + se * z(e);
        records[i] = InstrumentRecord{snp_name(static_cast<int>(i)), bx, se, by, se, std::nullopt,
                                      std::nullopt};
    }
    return make_harmonized(std::move(records));
}

double true_effect(const StudyDesign& design) {
    return std::visit(
        [](const auto& cfg) {
            if constexpr (std::is_same_v<std::decay_t<decltype(cfg)>, StrongSimConfig>) return cfg.theta0;
            else return cfg.theta;
        },
        design);
}

MethodSummary summarize(std::span<const ReplicateRecord> records, Method method,
                        double theta_true) {
    MethodSummary s;
    double sum = 0.0;
    double sum_se = 0.0;
    std::size_t rejected = 0;
    for (const ReplicateRecord& r : records) {
        if (r.method != method) continue;
        if (!r.ok) {
            ++s.n_failed;
            continue;
        }
        ++s.n_ok;
        sum += r.theta_hat;
        sum_se += r.se;
        rejected += r.reject ? 1 : 0;
        s.n_not_converged += r.converged ? 0 : 1;
    }
    if (s.n_ok == 0) return s;
    const double n = static_cast<double>(s.n_ok);
    s.mean = sum / n;
    s.bias = s.mean - theta_true;
    double ss = 0.0;
    double sq_err = 0.0;
    for (const ReplicateRecord& r : records) {
        if (r.method != method || !r.ok) continue;
        ss += (r.theta_hat - s.mean) * (r.theta_hat - s.mean);
        sq_err += (r.theta_hat - theta_true) * (r.theta_hat - theta_true);
    }
    s.sd = std::sqrt(ss / n);
    s.rmse = std::sqrt(sq_err / n);
    s.rejection_rate = static_cast<double>(rejected) / n;
    s.mean_se = sum_se / n;
    return s;
}

SimulationResult run_study(const StudyDesign& design, std::span<const Method> methods,
                           std::size_t replicates, const StudyOptions& options) {
    if (replicates < 2) throw Error(ErrorCode::InvalidArgument, "a study needs at least 2 replicates");
    if (methods.empty()) throw Error(ErrorCode::InvalidArgument, "no methods selected");
    std::visit([](const auto& cfg) { validate(cfg); }, design);
    validate(options.solver);

    SimulationResult result;
    result.design = design;
    result.methods.assign(methods.begin(), methods.end());
    result.replicates = replicates;
    result.theta_true = true_effect(design);
    result.per_replicate.resize(replicates * methods.size());

    parallel_for(replicates, options.threads, [&](std::size_t rep) {
        ReplicateRecord* out = &result.per_replicate[rep * methods.size()];
        for (std::size_t k = 0; k < methods.size(); ++k) {
            out[k].replicate = rep;
            out[k].method = methods[k];
        }
        HarmonizedSet data;
        try {
            data = std::visit(
                [rep](const auto& cfg) {
                    if constexpr (std::is_same_v<std::decay_t<decltype(cfg)>, StrongSimConfig>)
                        return generate_strong(cfg, rep);
                    else return generate_weak(cfg, rep);
                },
                design);
        } catch (const Error& e) {
            for (std::size_t k = 0; k < methods.size(); ++k) out[k].error = e.what();
            return;
        }
        BootstrapConfig boot = options.boot;
        boot.seed = derive_seed(options.boot.seed, {rep});
        boot.threads = 1;
        for (std::size_t k = 0; k < methods.size(); ++k) {
            ReplicateRecord& rec = out[k];
            try {
                const EstimateReport rep_report = estimate(data, methods[k], options.solver, boot);
                rec.ok = true;
                rec.theta_hat = rep_report.theta_hat;
                rec.se = rep_report.se;
                rec.ci_low = rep_report.ci_low;
                rec.ci_high = rep_report.ci_high;
                rec.reject = rep_report.rejects_null();
                rec.converged = !rep_report.quantile || rep_report.quantile->converged;
            } catch (const Error& e) {
                rec.error = e.what();
            }
        }
    });

    for (Method m : result.methods) {
        result.aggregates[m] = summarize(result.per_replicate, m, result.theta_true);
    }
    return result;
}

}  // namespace mrq
