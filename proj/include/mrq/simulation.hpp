#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mrq/estimators.hpp"
#include "mrq/summary_data.hpp"

namespace mrq {

enum class Scenario { no_pleiotropy, uncorrelated, correlated };

std::string_view to_string(Scenario s) noexcept;
Scenario parse_scenario(std::string_view s);

/// Individual-level design with strong pleiotropy: two independent samples,
/// outcome associations from the first and exposure associations from the second.
struct StrongSimConfig {
    int n = 50'000;
    int p = 30;
    Scenario scenario = Scenario::no_pleiotropy;
    double q = 0.0;
    double theta0 = 0.0;
    double beta_xu = 1.0;
    double beta_yu = 1.0;
    std::uint64_t seed = 1;

    int invalid_count() const;
};

/// Summary-level design with weak invalid instruments; instruments 0..m-1 are invalid.
struct WeakSimConfig {
    int n = 50'000;
    int p = 50;
    int m = 30;
    double h_y2 = 0.2;
    double h_u2 = 0.0;
    double h_x2 = 0.5;
    double theta = 0.0;
    std::uint64_t seed = 1;
};

void validate(const StrongSimConfig& cfg);
void validate(const WeakSimConfig& cfg);

/// Per-SNP effects drawn for one replicate.
struct SimEffects {
    std::vector<double> maf;  // empty for the weak design
    std::vector<double> gamma;
    std::vector<double> alpha;
    std::vector<double> phi;
    std::vector<bool> invalid;
};

SimEffects draw_strong_effects(const StrongSimConfig& cfg, std::uint64_t rep_index);
SimEffects draw_weak_effects(const WeakSimConfig& cfg, std::uint64_t rep_index);

/// Genotypes for one SNP in one sample: n draws of Binomial(2, maf).
std::vector<std::uint8_t> simulate_genotypes(const StrongSimConfig& cfg, std::uint64_t rep_index,
                                             int sample, int snp, double maf);

HarmonizedSet generate_strong(const StrongSimConfig& cfg, std::uint64_t rep_index);
HarmonizedSet generate_weak(const WeakSimConfig& cfg, std::uint64_t rep_index);

using StudyDesign = std::variant<StrongSimConfig, WeakSimConfig>;

double true_effect(const StudyDesign& design);

struct ReplicateRecord {
    std::size_t replicate = 0;
    Method method = Method::ivw;
    bool ok = false;
    double theta_hat = 0.0;
    double se = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    bool reject = false;
    bool converged = true;
    std::string error;
};

/// Aggregates over successful replicates. SD and RMSE divide by the count
/// (population convention), so rmse^2 == bias^2 + sd^2.
struct MethodSummary {
    std::size_t n_ok = 0;
    std::size_t n_failed = 0;
    double mean = 0.0;
    double bias = 0.0;
    double sd = 0.0;
    double rmse = 0.0;
    double rejection_rate = 0.0;
    double mean_se = 0.0;
    std::size_t n_not_converged = 0;
};

struct SimulationResult {
    StudyDesign design;
    std::vector<Method> methods;
    std::size_t replicates = 0;
    double theta_true = 0.0;
    std::vector<ReplicateRecord> per_replicate;  // replicate-major, then method order
    std::map<Method, MethodSummary> aggregates;
};

struct StudyOptions {
    SolverConfig solver;
    BootstrapConfig boot;
    // Replicates run in parallel on this many workers; 0 = hardware concurrency.
    unsigned threads = 0;
};

/// Generates `replicates` datasets, fits every method and aggregates bias, SD,
/// RMSE and the rejection rate of theta = 0 at the bootstrap/analytic CI.
/// Failed fits are recorded and excluded from the aggregates.
SimulationResult run_study(const StudyDesign& design, std::span<const Method> methods,
                           std::size_t replicates, const StudyOptions& options = {});

MethodSummary summarize(std::span<const ReplicateRecord> records, Method method,
                        double theta_true);

}  // namespace mrq
