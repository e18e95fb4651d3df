#include "mrq/wqr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mrq/error.hpp"

namespace mrq {

namespace {

void require_tau(double tau) {
    if (!(tau > 0.0 && tau < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "tau must lie in (0, 1), got " + std::to_string(tau));
    }
}

void require_sample(std::span<const double> values, std::span<const double> weights) {
    if (values.empty()) throw Error(ErrorCode::EmptyInput, "empty sample");
    if (values.size() != weights.size()) {
        throw Error(ErrorCode::InvalidArgument, "values and weights differ in length");
    }
}

}  // namespace

double check_loss(double u, double tau) {
    require_tau(tau);
    return u >= 0.0 ? tau * u : (tau - 1.0) * u;
}

double weighted_check_loss(std::span<const double> values, std::span<const double> weights,
                           double theta, double tau) {
    require_sample(values, weights);
    require_tau(tau);
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double u = values[i] - theta;
        sum += weights[i] * (u >= 0.0 ? tau * u : (tau - 1.0) * u);
    }
    return sum;
}

QuantileScanner::QuantileScanner(std::span<const double> values, std::span<const double> weights) {
    require_sample(values, weights);
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) throw Error(ErrorCode::InvalidArgument, "non-finite value");
        if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) {
            throw Error(ErrorCode::NonPositiveWeight, "weight " + std::to_string(i) + " is not > 0");
        }
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return values[a] < values[b] || (values[a] == values[b] && a < b);
    });
    sorted_.reserve(order.size());
    cumulative_.reserve(order.size());
    double running = 0.0;
    for (std::size_t i : order) {
        running += weights[i];
        sorted_.push_back(values[i]);
        cumulative_.push_back(running);
    }
    total_ = running;
}

double QuantileScanner::quantile(double tau) const {
    require_tau(tau);
    const double target = tau * total_;
    const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), target);
    // tau < 1 keeps the target at or below the total; guard rounding anyway.
    if (it == cumulative_.end()) return sorted_.back();
    return sorted_[static_cast<std::size_t>(it - cumulative_.begin())];
}

double weighted_quantile(std::span<const double> values, std::span<const double> weights,
                         double tau) {
    return QuantileScanner(values, weights).quantile(tau);
}

void validate(const AldParams& p) {
    require_tau(p.tau);
    if (!(p.lambda > 0.0) || !std::isfinite(p.lambda)) {
        throw Error(ErrorCode::InvalidArgument, "lambda must be > 0");
    }
    if (!std::isfinite(p.theta)) throw Error(ErrorCode::InvalidArgument, "theta must be finite");
}

double ald_logpdf(double r, const AldParams& p, double w) {
    validate(p);
    if (!(w > 0.0)) throw Error(ErrorCode::NonPositiveWeight, "w must be > 0");
    const double scale = w * p.lambda;
    return std::log(scale) + std::log(p.tau * (1.0 - p.tau)) - scale * check_loss(r - p.theta, p.tau);
}

double log_likelihood(std::span<const double> ratios, std::span<const double> weights,
                      const AldParams& p) {
    require_sample(ratios, weights);
    validate(p);
    double sum_log_w = 0.0;
    for (double w : weights) {
        if (!(w > 0.0)) throw Error(ErrorCode::NonPositiveWeight, "weights must be > 0");
        sum_log_w += std::log(w);
    }
    const double n = static_cast<double>(ratios.size());
    return sum_log_w + n * std::log(p.lambda * p.tau * (1.0 - p.tau)) -
           p.lambda * weighted_check_loss(ratios, weights, p.theta, p.tau);
}

double update_lambda(std::span<const double> ratios, std::span<const double> weights,
                     double theta, double tau) {
    const double loss = weighted_check_loss(ratios, weights, theta, tau);
    const double n = static_cast<double>(ratios.size());
    const double floor = 1e-12 * std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(loss > floor)) {
        throw Error(ErrorCode::DegenerateFit,
                    "weighted check loss " + std::to_string(loss) + " at theta = " +
                        std::to_string(theta) + " (all residuals ~0, lambda unbounded)");
    }
    return n / loss;
}

double tau_from_score(double a, double p) {
    if (!(p > 0.0)) throw Error(ErrorCode::InvalidArgument, "p must be > 0");
    if (!std::isfinite(a)) throw Error(ErrorCode::InvalidArgument, "non-finite tau score");
    const double tau = 0.5 - a / (2.0 * (2.0 * p + std::hypot(a, 2.0 * p)));
    return std::clamp(tau, kTauFloor, 1.0 - kTauFloor);
}

double update_tau(std::span<const double> ratios, std::span<const double> weights, double theta,
                  double lambda) {
    require_sample(ratios, weights);
    if (!(lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be > 0");
    double s = 0.0;
    for (std::size_t i = 0; i < ratios.size(); ++i) s += weights[i] * (ratios[i] - theta);
    return tau_from_score(lambda * s, static_cast<double>(ratios.size()));
}

}  // namespace mrq
