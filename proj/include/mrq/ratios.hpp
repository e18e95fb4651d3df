#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mrq/summary_data.hpp"

namespace mrq {

/// Wald ratios with first-order (delta-method) variances.
struct RatioSet {
    std::vector<double> ratio;
    std::vector<double> var_ratio;
    std::vector<std::string> snp_ids;
    // Index into source->records for each ratio.
    std::vector<std::size_t> record_index;
    std::shared_ptr<const HarmonizedSet> source;
    std::size_t dropped_weak = 0;
    std::size_t dropped_degenerate = 0;

    std::size_t size() const noexcept { return ratio.size(); }
    const InstrumentRecord& record(std::size_t i) const;
};

constexpr double kMinRatioVariance = 1e-30;

/// r = beta_y / beta_x, Var(r) = se_y^2/beta_x^2 + beta_y^2 se_x^2/beta_x^4.
///
/// Records with |beta_x| <= min_abs_beta_x are dropped (dropped_weak), as are
/// records whose variance is non-finite or below kMinRatioVariance
/// (dropped_degenerate). Throws AllInstrumentsDropped when nothing survives.
RatioSet compute_ratios(std::shared_ptr<const HarmonizedSet> data, double min_abs_beta_x = 0.0);
RatioSet compute_ratios(const HarmonizedSet& data, double min_abs_beta_x = 0.0);

/// Same computation without a source back-reference.
RatioSet compute_ratios(std::span<const InstrumentRecord> records, double min_abs_beta_x = 0.0);

/// w_i = 1 / sqrt(Var(r_i)); the weights of the asymmetric-Laplace model.
std::vector<double> quantile_weights(const RatioSet& rs);

/// w_i = 1 / Var(r_i); the weighted-median weights.
std::vector<double> median_weights(const RatioSet& rs);

}  // namespace mrq
