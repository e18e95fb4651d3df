#include "mrq/report_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>

#include "mrq/error.hpp"

namespace mrq {

namespace {

std::string na() { return "NA"; }

template <class T>
std::string opt_number(const std::optional<T>& v, double T::*field) {
    return v ? format_number((*v).*field) : na();
}

void write_header_comments(std::ostream& out, const RunManifest& manifest) {
    out << "# manifest\t" << manifest.to_json().dump() << '\n';
}

Json ci_json(double lo, double hi) { return Json::array({lo, hi}); }

}  // namespace

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc()) throw Error(ErrorCode::InvalidArgument, "number formatting failed");
    return std::string(buf, ptr);
}

Json RunManifest::to_json() const {
    Json j;
    j["tool"] = "mrq";
    j["version"] = kToolVersion;
    j["command"] = command;
    j["config"] = config;
    if (timestamp) j["timestamp"] = *timestamp;
    return j;
}

Json to_json(const Provenance& p) {
    return Json{{"exposure_source", p.exposure_source},
                {"outcome_source", p.outcome_source},
                {"pval_threshold", p.pval_threshold},
                {"exposure_rows", p.exposure_rows},
                {"exposure_duplicates", p.exposure_duplicates},
                {"outcome_duplicates", p.outcome_duplicates},
                {"exposure_passing", p.exposure_passing},
                {"retained", p.retained},
                {"dropped_mismatch", p.dropped_mismatch},
                {"dropped_palindromic", p.dropped_palindromic},
                {"dropped_no_match", p.dropped_no_match}};
}

Json to_json(const EstimateReport& r) {
    Json j;
    j["method"] = std::string(to_string(r.method));
    j["theta_hat"] = r.theta_hat;
    j["se"] = r.se;
    j["ci"] = ci_json(r.ci_low, r.ci_high);
    j["alpha_level"] = r.alpha_level;
    j["n_instruments"] = r.n_instruments;
    if (r.rr_scale) {
        j["rr"] = r.rr_scale->rr;
        j["rr_ci"] = ci_json(r.rr_scale->ci_low, r.rr_scale->ci_high);
    }
    if (r.quantile) {
        j["tau_hat"] = r.quantile->tau_hat;
        j["lambda_hat"] = r.quantile->lambda_hat;
        j["iterations"] = r.quantile->iterations;
        j["converged"] = r.quantile->converged;
    }
    if (r.egger) {
        j["intercept"] = r.egger->intercept;
        j["intercept_se"] = r.egger->intercept_se;
    }
    if (r.bootstrap) {
        j["bootstrap"] = Json{{"n_boot", r.bootstrap->n_boot},
                              {"n_failed", r.bootstrap->n_failed},
                              {"seed", r.bootstrap->seed},
                              {"ci", r.bootstrap->ci == CiMethod::normal ? "normal" : "percentile"}};
    }
    return j;
}

Json to_json(const MethodSummary& s) {
    return Json{{"n_ok", s.n_ok},
                {"n_failed", s.n_failed},
                {"n_not_converged", s.n_not_converged},
                {"mean", s.mean},
                {"bias", s.bias},
                {"sd", s.sd},
                {"rmse", s.rmse},
                {"rejection_rate", s.rejection_rate},
                {"mean_se", s.mean_se}};
}

Json to_json(const StudyDesign& d) {
    return std::visit(
        [](const auto& c) -> Json {
            if constexpr (std::is_same_v<std::decay_t<decltype(c)>, StrongSimConfig>) {
                return Json{{"design", "strong"},   {"n", c.n},
                            {"p", c.p},             {"scenario", std::string(to_string(c.scenario))},
                            {"q", c.q},             {"m", c.invalid_count()},
                            {"theta0", c.theta0},   {"beta_xu", c.beta_xu},
                            {"beta_yu", c.beta_yu}, {"seed", c.seed}};
            } else {
                return Json{{"design", "weak"}, {"n", c.n},         {"p", c.p},
                            {"m", c.m},         {"h_y2", c.h_y2},   {"h_u2", c.h_u2},
                            {"h_x2", c.h_x2},   {"theta", c.theta}, {"seed", c.seed}};
            }
        },
        d);
}

Json estimates_json(const RunManifest& manifest, const HarmonizedSet& data,
                    std::span<const EstimateReport> reports) {
    Json j;
    j["manifest"] = manifest.to_json();
    j["outcome_type"] = std::string(to_string(data.outcome_type));
    j["provenance"] = to_json(data.provenance);
    Json results = Json::object();
    for (const EstimateReport& r : reports) results[std::string(to_string(r.method))] = to_json(r);
    j["results"] = std::move(results);
    return j;
}

void write_estimates_tsv(std::ostream& out, const RunManifest& manifest, const HarmonizedSet& data,
                         std::span<const EstimateReport> reports) {
    write_header_comments(out, manifest);
    out << "# outcome_type\t" << to_string(data.outcome_type) << '\n';
    out << "# provenance\t" << to_json(data.provenance).dump() << '\n';
    out << "method\ttheta_hat\tse\tci_low\tci_high\talpha_level\tn_instruments\trr\trr_ci_low\t"
           "rr_ci_high\ttau_hat\tlambda_hat\titerations\tconverged\tintercept\tintercept_se\t"
           "n_boot\tn_failed\n";
    for (const EstimateReport& r : reports) {
        out << to_string(r.method) << '\t' << format_number(r.theta_hat) << '\t' << format_number(r.se)
            << '\t' << format_number(r.ci_low) << '\t' << format_number(r.ci_high) << '\t'
            << format_number(r.alpha_level) << '\t' << r.n_instruments << '\t'
            << opt_number(r.rr_scale, &RiskRatio::rr) << '\t'
            << opt_number(r.rr_scale, &RiskRatio::ci_low) << '\t'
            << opt_number(r.rr_scale, &RiskRatio::ci_high) << '\t'
            << opt_number(r.quantile, &QuantileExtras::tau_hat) << '\t'
            << opt_number(r.quantile, &QuantileExtras::lambda_hat) << '\t'
            << (r.quantile ? std::to_string(r.quantile->iterations) : na()) << '\t'
            << (r.quantile ? (r.quantile->converged ? "true" : "false") : na()) << '\t'
            << opt_number(r.egger, &EggerExtras::intercept) << '\t'
            << opt_number(r.egger, &EggerExtras::intercept_se) << '\t'
            << (r.bootstrap ? std::to_string(r.bootstrap->n_boot) : na()) << '\t'
            << (r.bootstrap ? std::to_string(r.bootstrap->n_failed) : na()) << '\n';
    }
}

Json simulation_json(const RunManifest& manifest, const SimulationResult& result) {
    Json j;
    j["manifest"] = manifest.to_json();
    j["design"] = to_json(result.design);
    j["replicates"] = result.replicates;
    j["theta_true"] = result.theta_true;
    j["sd_convention"] = "population";
    Json agg = Json::object();
    for (Method m : result.methods) agg[std::string(to_string(m))] = to_json(result.aggregates.at(m));
    j["aggregates"] = std::move(agg);
    Json rows = Json::array();
    for (const ReplicateRecord& r : result.per_replicate) {
        Json row{{"replicate", r.replicate}, {"method", std::string(to_string(r.method))}, {"ok", r.ok}};
        if (r.ok) {
            row["theta_hat"] = r.theta_hat;
            row["se"] = r.se;
            row["ci"] = ci_json(r.ci_low, r.ci_high);
            row["reject"] = r.reject;
            row["converged"] = r.converged;
        } else {
            row["error"] = r.error;
        }
        rows.push_back(std::move(row));
    }
    j["per_replicate"] = std::move(rows);
    return j;
}

void write_replicates_tsv(std::ostream& out, const RunManifest& manifest, const SimulationResult& result) {
    write_header_comments(out, manifest);
    out << "replicate\tmethod\tok\ttheta_hat\tse\tci_low\tci_high\treject\tconverged\terror\n";
    for (const ReplicateRecord& r : result.per_replicate) {
        out << r.replicate << '\t' << to_string(r.method) << '\t' << (r.ok ? "true" : "false") << '\t';
        if (r.ok) {
            out << format_number(r.theta_hat) << '\t' << format_number(r.se) << '\t'
                << format_number(r.ci_low) << '\t' << format_number(r.ci_high) << '\t'
                << (r.reject ? "true" : "false") << '\t' << (r.converged ? "true" : "false") << '\t'
                << na() << '\n';
        } else {
            std::string msg = r.error;
            std::replace(msg.begin(), msg.end(), '\t', ' ');
            std::replace(msg.begin(), msg.end(), '\n', ' ');
            out << "NA\tNA\tNA\tNA\tNA\tNA\t" << msg << '\n';
        }
    }
}

void write_summary_tsv(std::ostream& out, const RunManifest& manifest, const SimulationResult& result) {
    write_header_comments(out, manifest);
    out << "# design\t" << to_json(result.design).dump() << '\n';
    out << "# theta_true\t" << format_number(result.theta_true) << '\n';
    out << "# replicates\t" << result.replicates << '\n';
    out << "# sd_convention\tpopulation\n";
    out << "method\tn_ok\tn_failed\tn_not_converged\tmean\tbias\tsd\trmse\trejection_rate\tmean_se\n";
    for (Method m : result.methods) {
        const MethodSummary& s = result.aggregates.at(m);
        out << to_string(m) << '\t' << s.n_ok << '\t' << s.n_failed << '\t' << s.n_not_converged << '\t'
            << format_number(s.mean) << '\t' << format_number(s.bias) << '\t' << format_number(s.sd)
            << '\t' << format_number(s.rmse) << '\t' << format_number(s.rejection_rate) << '\t'
            << format_number(s.mean_se) << '\n';
    }
}

double ald_standard_density(double e, double tau) {
    return tau * (1.0 - tau) * std::exp(-check_loss(e, tau));
}

void write_diagnostics_table(std::ostream& out, const RunManifest& manifest, const RatioSet& rs,
                             std::span<const double> weights, const AldFit& fit) {
    write_header_comments(out, manifest);
    out << "# theta_hat\t" << format_number(fit.params.theta) << '\n';
    out << "# tau_hat\t" << format_number(fit.params.tau) << '\n';
    out << "# lambda_hat\t" << format_number(fit.params.lambda) << '\n';
    out << "snp_id\tratio\tse_ratio\tweight\tstd_residual\n";
    for (std::size_t i = 0; i < rs.size(); ++i) {
        out << rs.snp_ids[i] << '\t' << format_number(rs.ratio[i]) << '\t'
            << format_number(std::sqrt(rs.var_ratio[i])) << '\t' << format_number(weights[i]) << '\t'
            << format_number(fit.std_residuals[i]) << '\n';
    }
}

void write_density_grid(std::ostream& out, const RunManifest& manifest, const AldFit& fit, int points) {
    if (points < 2) throw Error(ErrorCode::InvalidArgument, "density grid needs at least 2 points");
    const auto [lo_it, hi_it] = std::minmax_element(fit.std_residuals.begin(), fit.std_residuals.end());
    const double lo = *lo_it - 1.0;
    const double hi = *hi_it + 1.0;
    write_header_comments(out, manifest);
    out << "# tau_hat\t" << format_number(fit.params.tau) << '\n';
    out << "e\tdensity\n";
    for (int k = 0; k < points; ++k) {
        const double e = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
        out << format_number(e) << '\t' << format_number(ald_standard_density(e, fit.params.tau)) << '\n';
    }
}

}  // namespace mrq
