#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrq/estimators.hpp"
#include "mrq/ratios.hpp"
#include "mrq/simulation.hpp"
#include "mrq/summary_data.hpp"

namespace mrq {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.1.0";

/// Command and fully resolved configuration of one run. Worker counts are
/// deliberately absent: outputs must not depend on them.
struct RunManifest {
    std::string command;
    Json config = Json::object();
    std::optional<std::string> timestamp;

    Json to_json() const;
};

/// Shortest decimal string that parses back to the same double.
std::string format_number(double x);

Json to_json(const Provenance& p);
Json to_json(const EstimateReport& r);
Json to_json(const MethodSummary& s);
Json to_json(const StudyDesign& d);

Json estimates_json(const RunManifest& manifest, const HarmonizedSet& data,
                    std::span<const EstimateReport> reports);
void write_estimates_tsv(std::ostream& out, const RunManifest& manifest, const HarmonizedSet& data,
                         std::span<const EstimateReport> reports);

Json simulation_json(const RunManifest& manifest, const SimulationResult& result);
void write_replicates_tsv(std::ostream& out, const RunManifest& manifest, const SimulationResult& result);
void write_summary_tsv(std::ostream& out, const RunManifest& manifest, const SimulationResult& result);

inline constexpr int kDensityGridPoints = 512;

/// Density of ALD(0, tau, 1) at e.
double ald_standard_density(double e, double tau);

/// Per-SNP table: snp_id, ratio, se_ratio, weight, std_residual.
void write_diagnostics_table(std::ostream& out, const RunManifest& manifest, const RatioSet& rs,
                             std::span<const double> weights, const AldFit& fit);

/// ALD(0, tau_hat, 1) on an evenly spaced grid over [min(e) - 1, max(e) + 1].
void write_density_grid(std::ostream& out, const RunManifest& manifest, const AldFit& fit,
                        int points = kDensityGridPoints);

}  // namespace mrq
