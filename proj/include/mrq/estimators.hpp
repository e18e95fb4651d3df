#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mrq/ratios.hpp"
#include "mrq/summary_data.hpp"
#include "mrq/wqr.hpp"

namespace mrq {

enum class Method { mr_quantile, ivw, egger, weighted_median };

std::string_view to_string(Method m) noexcept;
Method parse_method(std::string_view s);
std::vector<Method> parse_methods(std::string_view list);
inline constexpr Method kAllMethods[] = {Method::mr_quantile, Method::ivw, Method::egger,
                                         Method::weighted_median};

struct SolverConfig {
    // |change in log-likelihood| between cycles
    double tol = 1e-8;
    // largest relative change of theta, lambda or tau over the last cycle
    double param_tol = 1e-10;
    int max_iter = 1000;
    double tau_init = 0.5;
};

void validate(const SolverConfig& cfg);

struct AldFit {
    AldParams params;
    std::vector<double> loglik_trace;
    int iterations = 0;
    bool converged = false;
    // e_i = w_i * lambda * (r_i - theta)
    std::vector<double> std_residuals;
};

/// Iterative ALD maximum likelihood: theta (weighted quantile at the current
/// tau), then lambda, then tau, until the log-likelihood changes by less than
/// cfg.tol and no parameter moved by more than cfg.param_tol (relative).
/// Hitting max_iter leaves converged == false.
AldFit fit_ald(std::span<const double> ratios, std::span<const double> weights,
               const SolverConfig& cfg = {});

/// fit_ald with w_i = 1 / se(r_i). Needs at least two instruments.
AldFit fit_mr_quantile(const RatioSet& rs, const SolverConfig& cfg = {});

enum class CiMethod { normal, percentile };

struct BootstrapConfig {
    int n_boot = 1000;
    std::uint64_t seed = 1;
    double alpha_level = 0.05;
    CiMethod ci = CiMethod::normal;
    double min_abs_beta_x = 0.0;
    // Worker cap; 0 uses hardware concurrency. Results do not depend on it.
    unsigned threads = 0;
    // Failed replicates must stay strictly below this fraction of n_boot.
    double max_failed_fraction = 0.05;
};

struct RiskRatio {
    double rr = 1.0;
    double ci_low = 1.0;
    double ci_high = 1.0;
};

struct QuantileExtras {
    double tau_hat = 0.5;
    double lambda_hat = 1.0;
    int iterations = 0;
    bool converged = false;
};

struct EggerExtras {
    double intercept = 0.0;
    double intercept_se = 0.0;
};

struct BootstrapInfo {
    int n_boot = 0;
    int n_failed = 0;
    std::uint64_t seed = 0;
    CiMethod ci = CiMethod::normal;
};

struct EstimateReport {
    Method method = Method::ivw;
    double theta_hat = 0.0;
    double se = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double alpha_level = 0.05;
    std::size_t n_instruments = 0;
    std::optional<RiskRatio> rr_scale;
    std::optional<QuantileExtras> quantile;
    std::optional<EggerExtras> egger;
    std::optional<BootstrapInfo> bootstrap;

    bool rejects_null() const noexcept { return ci_low > 0.0 || ci_high < 0.0; }
};

/// Two-sided standard normal critical value z_{1 - alpha/2}.
double normal_critical(double alpha_level);

/// Fills rr_scale with exp(theta_hat) and the exponentiated CI.
void attach_risk_ratio(EstimateReport& report);

/// Inverse-variance weighted mean of ratios, weights beta_x^2 / se_y^2.
/// Fixed-effect SE 1 / sqrt(sum beta_x^2 / se_y^2).
EstimateReport fit_ivw(const RatioSet& rs, double alpha_level = 0.05);

/// Weighted regression of beta_y on beta_x with free intercept, weights
/// 1/se_y^2, after orienting every instrument to beta_x >= 0.
EstimateReport fit_egger(const HarmonizedSet& data, double alpha_level = 0.05);

/// Point estimate: weighted 0.5-quantile with weights 1/Var(r). SE by the
/// parametric bootstrap over rs.source.
EstimateReport fit_weighted_median(const RatioSet& rs, const BootstrapConfig& boot = {});

/// Point estimate of the weighted median only.
double weighted_median_estimate(const RatioSet& rs);

/// Draws beta_x ~ N(beta_x, se_x^2) and beta_y ~ N(beta_y, se_y^2) for every
/// record. Replicate b is keyed by (seed, b) so the draw does not depend on
/// evaluation order.
std::vector<InstrumentRecord> resample_records(std::span<const InstrumentRecord> records,
                                               std::uint64_t seed, std::uint64_t replicate);

/// Parametric bootstrap for mr_quantile or weighted_median: every replicate
/// resamples the betas, recomputes ratios and weights and refits. SE is the
/// sample SD of the replicate estimates; the CI is centred on the fit to the
/// original data unless boot.ci == percentile.
EstimateReport bootstrap_se(const HarmonizedSet& data, Method method,
                            const SolverConfig& cfg = {}, const BootstrapConfig& boot = {});

/// Runs one method end to end and attaches the RR scale for binary-rare outcomes.
EstimateReport estimate(const HarmonizedSet& data, Method method, const SolverConfig& cfg = {},
                        const BootstrapConfig& boot = {});

}  // namespace mrq
