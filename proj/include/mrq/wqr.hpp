#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mrq {

/// rho_tau(u) = tau*u for u >= 0, (tau - 1)*u for u < 0.
double check_loss(double u, double tau);

/// sum_i w_i * rho_tau(values_i - theta)
double weighted_check_loss(std::span<const double> values, std::span<const double> weights,
                           double theta, double tau);

/// Sorted view of a weighted sample, for repeated quantile queries.
///
/// The tau-quantile is the smallest sorted value whose cumulative weight
/// (over all elements <= it) reaches tau * total weight. Equal values are
/// ordered by input index.
class QuantileScanner {
public:
    QuantileScanner(std::span<const double> values, std::span<const double> weights);

    double quantile(double tau) const;
    double total_weight() const noexcept { return total_; }
    std::size_t size() const noexcept { return sorted_.size(); }

private:
    std::vector<double> sorted_;
    std::vector<double> cumulative_;
    double total_ = 0.0;
};

double weighted_quantile(std::span<const double> values, std::span<const double> weights,
                         double tau);

/// Asymmetric Laplace parameters: location theta, skewness tau, inverse scale lambda.
struct AldParams {
    double theta = 0.0;
    double tau = 0.5;
    double lambda = 1.0;
};

void validate(const AldParams& p);

/// log density of r under ALD(theta, tau, w * lambda).
double ald_logpdf(double r, const AldParams& p, double w);

/// Sum of ald_logpdf over the sample.
double log_likelihood(std::span<const double> ratios, std::span<const double> weights,
                      const AldParams& p);

/// lambda = p / sum_i w_i rho_tau(r_i - theta).
/// Throws DegenerateFit when the loss sum is below 1e-12 * p * mean(w).
double update_lambda(std::span<const double> ratios, std::span<const double> weights,
                     double theta, double tau);

constexpr double kTauFloor = 1e-6;

/// Valid root of a*tau^2 - tau*(2p + a) + p = 0 in the conjugate form
/// 0.5 - a / (2 (2p + sqrt(a^2 + 4p^2))), clamped to [kTauFloor, 1 - kTauFloor].
/// Returns exactly 0.5 when a == 0.
double tau_from_score(double a, double p);

/// tau update with a = lambda * sum_i w_i (r_i - theta).
double update_tau(std::span<const double> ratios, std::span<const double> weights, double theta,
                  double lambda);

}  // namespace mrq
