#include "mrq/ratios.hpp"

#include <cmath>

#include "mrq/error.hpp"

namespace mrq {

const InstrumentRecord& RatioSet::record(std::size_t i) const {
    if (!source) throw Error(ErrorCode::InvalidArgument, "ratio set has no source instruments");
    return source->records.at(record_index.at(i));
}

RatioSet compute_ratios(std::span<const InstrumentRecord> records, double min_abs_beta_x) {
    if (!(min_abs_beta_x >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "min_abs_beta_x must be >= 0");
    }
    RatioSet rs;
    rs.ratio.reserve(records.size());
    rs.var_ratio.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const InstrumentRecord& r = records[i];
        if (!(std::abs(r.beta_x) > min_abs_beta_x)) {
            ++rs.dropped_weak;
            continue;
        }
        const double bx2 = r.beta_x * r.beta_x;
        const double ratio = r.beta_y / r.beta_x;
        const double var = r.se_y * r.se_y / bx2 + r.beta_y * r.beta_y * r.se_x * r.se_x / (bx2 * bx2);
        if (!std::isfinite(ratio) || !std::isfinite(var) || var < kMinRatioVariance) {
            ++rs.dropped_degenerate;
            continue;
        }
        rs.ratio.push_back(ratio);
        rs.var_ratio.push_back(var);
        rs.snp_ids.push_back(r.snp_id);
        rs.record_index.push_back(i);
    }
    if (rs.ratio.empty()) {
        throw Error(ErrorCode::AllInstrumentsDropped,
                    std::to_string(rs.dropped_weak) + " below |beta_x| threshold, " +
                        std::to_string(rs.dropped_degenerate) + " with degenerate variance");
    }
    return rs;
}

RatioSet compute_ratios(std::shared_ptr<const HarmonizedSet> data, double min_abs_beta_x) {
    if (!data) throw Error(ErrorCode::InvalidArgument, "null instrument set");
    RatioSet rs = compute_ratios(std::span<const InstrumentRecord>(data->records), min_abs_beta_x);
    rs.source = std::move(data);
    return rs;
}

RatioSet compute_ratios(const HarmonizedSet& data, double min_abs_beta_x) {
    return compute_ratios(std::make_shared<const HarmonizedSet>(data), min_abs_beta_x);
}

std::vector<double> quantile_weights(const RatioSet& rs) {
    std::vector<double> w(rs.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = 1.0 / std::sqrt(rs.var_ratio[i]);
    return w;
}

std::vector<double> median_weights(const RatioSet& rs) {
    std::vector<double> w(rs.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = 1.0 / rs.var_ratio[i];
    return w;
}

}  // namespace mrq
