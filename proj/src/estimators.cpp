#include "mrq/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include "mrq/error.hpp"
#include "mrq/parallel.hpp"
#include "mrq/rng.hpp"

namespace mrq {

std::string_view to_string(Method m) noexcept {
    switch (m) {
        case Method::mr_quantile: return "mr_quantile";
        case Method::ivw: return "ivw";
        case Method::egger: return "egger";
        case Method::weighted_median: return "weighted_median";
    }
    return "unknown";
}

Method parse_method(std::string_view s) {
    std::string v(s);
    std::replace(v.begin(), v.end(), '-', '_');
    std::transform(v.begin(), v.end(), v.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (v == "mr_quantile" || v == "quantile" || v == "mrq") return Method::mr_quantile;
    if (v == "ivw") return Method::ivw;
    if (v == "egger" || v == "mr_egger") return Method::egger;
    if (v == "weighted_median" || v == "median" || v == "wm") return Method::weighted_median;
    throw Error(ErrorCode::InvalidArgument, "unknown method '" + std::string(s) + "'");
}

std::vector<Method> parse_methods(std::string_view list) {
    std::vector<Method> out;
    std::size_t start = 0;
    while (start <= list.size()) {
        std::size_t end = list.find(',', start);
        if (end == std::string_view::npos) end = list.size();
        std::string_view item = list.substr(start, end - start);
        while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
        while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
        if (item == "all") {
            for (Method m : kAllMethods)
                if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
        } else if (!item.empty()) {
            const Method m = parse_method(item);
            if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
        }
        start = end + 1;
    }
    if (out.empty()) throw Error(ErrorCode::InvalidArgument, "no methods selected");
    return out;
}

void validate(const SolverConfig& cfg) {
    if (!(cfg.tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be > 0");
    if (!(cfg.param_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "param_tol must be > 0");
    if (cfg.max_iter < 1) throw Error(ErrorCode::InvalidArgument, "max_iter must be >= 1");
    if (!(cfg.tau_init > 0.0 && cfg.tau_init < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "tau_init must lie in (0, 1)");
    }
}

namespace {

double relative_change(double now, double before) {
    if (now == before) return 0.0;
    return std::abs(now - before) / std::max(std::abs(now), std::abs(before));
}

}  // namespace

AldFit fit_ald(std::span<const double> ratios, std::span<const double> weights,
               const SolverConfig& cfg) {
    validate(cfg);
    const QuantileScanner scanner(ratios, weights);

    AldFit fit;
    AldParams& par = fit.params;
    par.tau = cfg.tau_init;
    AldParams prev = par;
    for (int k = 0; k < cfg.max_iter; ++k) {
        par.theta = scanner.quantile(par.tau);
        par.lambda = update_lambda(ratios, weights, par.theta, par.tau);
        par.tau = update_tau(ratios, weights, par.theta, par.lambda);
        const double ll = log_likelihood(ratios, weights, par);
        fit.loglik_trace.push_back(ll);
        fit.iterations = k + 1;
        const std::size_t n = fit.loglik_trace.size();
        const bool params_settled = relative_change(par.theta, prev.theta) < cfg.param_tol &&
                                    relative_change(par.lambda, prev.lambda) < cfg.param_tol &&
                                    relative_change(par.tau, prev.tau) < cfg.param_tol;
        if (n >= 2 && std::abs(ll - fit.loglik_trace[n - 2]) < cfg.tol && params_settled) {
            fit.converged = true;
            break;
        }
        prev = par;
    }
    fit.std_residuals.resize(ratios.size());
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        fit.std_residuals[i] = weights[i] * par.lambda * (ratios[i] - par.theta);
    }
    return fit;
}

AldFit fit_mr_quantile(const RatioSet& rs, const SolverConfig& cfg) {
    if (rs.size() < 2) {
        throw Error(ErrorCode::DegenerateFit, "MR-Quantile needs at least two instruments");
    }
    const std::vector<double> w = quantile_weights(rs);
    return fit_ald(rs.ratio, w, cfg);
}

double normal_critical(double alpha_level) {
    if (!(alpha_level > 0.0 && alpha_level < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
    }
    return boost::math::quantile(boost::math::normal_distribution<double>(), 1.0 - alpha_level / 2.0);
}

void attach_risk_ratio(EstimateReport& report) {
    report.rr_scale = RiskRatio{std::exp(report.theta_hat), std::exp(report.ci_low),
                                std::exp(report.ci_high)};
}

namespace {

void set_normal_ci(EstimateReport& r) {
    const double z = normal_critical(r.alpha_level);
    r.ci_low = r.theta_hat - z * r.se;
    r.ci_high = r.theta_hat + z * r.se;
}

// Empirical quantile with linear interpolation between order statistics.
double empirical_quantile(const std::vector<double>& sorted, double prob) {
    const double h = prob * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double point_estimate(Method method, const RatioSet& rs, const SolverConfig& cfg) {
    if (method == Method::mr_quantile) return fit_mr_quantile(rs, cfg).params.theta;
    return weighted_median_estimate(rs);
}

struct BootstrapDraws {
    std::vector<double> estimates;
    int failed = 0;
};

BootstrapDraws draw_bootstrap(std::span<const InstrumentRecord> records, Method method,
                              const SolverConfig& cfg, const BootstrapConfig& boot) {
    if (boot.n_boot < 2) {
        throw Error(ErrorCode::RequiresBge2, "bootstrap SD needs n_boot >= 2, got " +
                                                 std::to_string(boot.n_boot));
    }
    if (method != Method::mr_quantile && method != Method::weighted_median) {
        throw Error(ErrorCode::InvalidArgument,
                    "bootstrap SE is defined for mr_quantile and weighted_median only");
    }
    const auto n_boot = static_cast<std::size_t>(boot.n_boot);
    std::vector<std::optional<double>> slots(n_boot);
    parallel_for(n_boot, boot.threads, [&](std::size_t b) {
        try {
            const auto resampled = resample_records(records, boot.seed, b);
            const RatioSet rs = compute_ratios(std::span<const InstrumentRecord>(resampled),
                                               boot.min_abs_beta_x);
            slots[b] = point_estimate(method, rs, cfg);
        } catch (const Error&) {
            // counted below
        }
    });
    BootstrapDraws draws;
    for (const auto& s : slots) {
        if (s) draws.estimates.push_back(*s);
        else ++draws.failed;
    }
    const double cap = boot.max_failed_fraction * static_cast<double>(boot.n_boot);
    if (draws.failed > 0 && !(static_cast<double>(draws.failed) < cap)) {
        throw Error(ErrorCode::TooManyFailedReplicates,
                    std::to_string(draws.failed) + " of " + std::to_string(boot.n_boot) +
                        " bootstrap replicates failed");
    }
    if (draws.estimates.size() < 2) {
        throw Error(ErrorCode::TooManyFailedReplicates, "fewer than two bootstrap replicates succeeded");
    }
    return draws;
}

void apply_bootstrap(EstimateReport& r, const BootstrapDraws& draws, const BootstrapConfig& boot) {
    const auto& est = draws.estimates;
    const double n = static_cast<double>(est.size());
    const double mean = std::accumulate(est.begin(), est.end(), 0.0) / n;
    double ss = 0.0;
    for (double e : est) ss += (e - mean) * (e - mean);
    r.se = std::sqrt(ss / (n - 1.0));
    r.alpha_level = boot.alpha_level;
    if (boot.ci == CiMethod::percentile) {
        std::vector<double> sorted = est;
        std::sort(sorted.begin(), sorted.end());
        r.ci_low = empirical_quantile(sorted, boot.alpha_level / 2.0);
        r.ci_high = empirical_quantile(sorted, 1.0 - boot.alpha_level / 2.0);
    } else {
        set_normal_ci(r);
    }
    r.bootstrap = BootstrapInfo{boot.n_boot, draws.failed, boot.seed, boot.ci};
}

}  // namespace

EstimateReport fit_ivw(const RatioSet& rs, double alpha_level) {
    if (rs.size() == 0) throw Error(ErrorCode::EmptyInput, "no instruments");
    double sum_w = 0.0;
    double sum_wr = 0.0;
    for (std::size_t i = 0; i < rs.size(); ++i) {
        const InstrumentRecord& rec = rs.record(i);
        if (!(rec.se_y > 0.0)) {
            throw Error(ErrorCode::InvalidArgument, "IVW needs se_y > 0 (instrument '" + rec.snp_id + "')");
        }
        const double w = rec.beta_x * rec.beta_x / (rec.se_y * rec.se_y);
        sum_w += w;
        sum_wr += w * rs.ratio[i];
    }
    EstimateReport r;
    r.method = Method::ivw;
    r.theta_hat = sum_wr / sum_w;
    r.se = 1.0 / std::sqrt(sum_w);
    r.alpha_level = alpha_level;
    r.n_instruments = rs.size();
    set_normal_ci(r);
    return r;
}

EstimateReport fit_egger(const HarmonizedSet& data, double alpha_level) {
    const std::size_t p = data.records.size();
    if (p < 3) {
        throw Error(ErrorCode::TooFewInstruments,
                    "MR-Egger needs at least 3 instruments, got " + std::to_string(p));
    }
    Eigen::MatrixXd design(p, 2);
    Eigen::VectorXd response(p);
    Eigen::VectorXd sqrt_w(p);
    for (std::size_t i = 0; i < p; ++i) {
        const InstrumentRecord& rec = data.records[i];
        if (!(rec.se_y > 0.0)) {
            throw Error(ErrorCode::InvalidArgument, "MR-Egger needs se_y > 0 (instrument '" + rec.snp_id + "')");
        }
        const double sign = rec.beta_x < 0.0 ? -1.0 : 1.0;
        const auto row = static_cast<Eigen::Index>(i);
        sqrt_w(row) = 1.0 / rec.se_y;
        design(row, 0) = sqrt_w(row);
        design(row, 1) = sqrt_w(row) * sign * rec.beta_x;
        response(row) = sqrt_w(row) * sign * rec.beta_y;
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < 2) {
        throw Error(ErrorCode::DegenerateFit, "MR-Egger design is rank deficient (all |beta_x| equal)");
    }
    const Eigen::Vector2d coef = qr.solve(response);
    const Eigen::VectorXd resid = response - design * coef;
    const double sigma2 = resid.squaredNorm() / static_cast<double>(p - 2);
    const Eigen::Matrix2d cov =
        (design.transpose() * design).inverse() * std::max(1.0, sigma2);

    EstimateReport r;
    r.method = Method::egger;
    r.theta_hat = coef(1);
    r.se = std::sqrt(cov(1, 1));
    r.alpha_level = alpha_level;
    r.n_instruments = p;
    r.egger = EggerExtras{coef(0), std::sqrt(cov(0, 0))};
    set_normal_ci(r);
    return r;
}

double weighted_median_estimate(const RatioSet& rs) {
    if (rs.size() == 0) throw Error(ErrorCode::EmptyInput, "no instruments");
    return weighted_quantile(rs.ratio, median_weights(rs), 0.5);
}

EstimateReport fit_weighted_median(const RatioSet& rs, const BootstrapConfig& boot) {
    EstimateReport r;
    r.method = Method::weighted_median;
    r.theta_hat = weighted_median_estimate(rs);
    r.n_instruments = rs.size();
    if (!rs.source) throw Error(ErrorCode::InvalidArgument, "weighted median bootstrap needs source instruments");
    apply_bootstrap(r, draw_bootstrap(rs.source->records, Method::weighted_median, {}, boot), boot);
    return r;
}

std::vector<InstrumentRecord> resample_records(std::span<const InstrumentRecord> records,
                                               std::uint64_t seed, std::uint64_t replicate) {
    Engine engine = make_stream(seed, {0xB007ULL, replicate});
    std::normal_distribution<double> z;
    std::vector<InstrumentRecord> out(records.begin(), records.end());
    for (InstrumentRecord& rec : out) {
        rec.beta_x += rec.se_x * z(engine);
        rec.beta_y += rec.se_y * z(engine);
    }
    return out;
}

EstimateReport bootstrap_se(const HarmonizedSet& data, Method method, const SolverConfig& cfg,
                            const BootstrapConfig& boot) {
    if (method != Method::mr_quantile && method != Method::weighted_median) {
        throw Error(ErrorCode::InvalidArgument,
                    "bootstrap SE is defined for mr_quantile and weighted_median only");
    }
    if (boot.n_boot < 2) {
        throw Error(ErrorCode::RequiresBge2, "bootstrap SD needs n_boot >= 2, got " +
                                                 std::to_string(boot.n_boot));
    }
    const RatioSet rs = compute_ratios(std::span<const InstrumentRecord>(data.records), boot.min_abs_beta_x);
    EstimateReport r;
    r.method = method;
    r.n_instruments = rs.size();
    if (method == Method::mr_quantile) {
        const AldFit fit = fit_mr_quantile(rs, cfg);
        r.theta_hat = fit.params.theta;
        r.quantile = QuantileExtras{fit.params.tau, fit.params.lambda, fit.iterations, fit.converged};
    } else {
        r.theta_hat = weighted_median_estimate(rs);
    }
    apply_bootstrap(r, draw_bootstrap(data.records, method, cfg, boot), boot);
    return r;
}

EstimateReport estimate(const HarmonizedSet& data, Method method, const SolverConfig& cfg,
                        const BootstrapConfig& boot) {
    EstimateReport r;
    switch (method) {
        case Method::mr_quantile:
        case Method::weighted_median:
            r = bootstrap_se(data, method, cfg, boot);
            break;
        case Method::ivw:
            r = fit_ivw(compute_ratios(data, boot.min_abs_beta_x), boot.alpha_level);
            break;
        case Method::egger:
            r = fit_egger(data, boot.alpha_level);
            break;
    }
    if (data.outcome_type == OutcomeType::binary_rare) attach_risk_ratio(r);
    return r;
}

}  // namespace mrq
