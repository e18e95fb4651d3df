#include "mrq/cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "mrq/error.hpp"
#include "mrq/estimators.hpp"
#include "mrq/ratios.hpp"
#include "mrq/report_io.hpp"
#include "mrq/rng.hpp"
#include "mrq/simulation.hpp"
#include "mrq/summary_data.hpp"

namespace mrq::cli {

namespace {

struct EstimateArgs {
    std::string exposure;
    std::string outcome;
    std::string exposure_cols;
    std::string outcome_cols;
    std::string delim = "auto";
    std::string methods = "all";
    double pval_threshold = kGenomeWideThreshold;
    std::string outcome_type = "continuous";
    int boot = 1000;
    std::uint64_t seed = 1;
    double alpha = 0.05;
    std::string ci = "normal";
    double min_abs_beta_x = 0.0;
    double tol = 1e-8;
    int max_iter = 1000;
    std::string out;
    std::string format = "json";
    std::string diagnostics;
    unsigned threads = 0;
    bool timestamp = false;
};

struct SimulateArgs {
    std::string design;
    int n = 50'000;
    std::optional<int> p;
    std::string scenario = "no_pleiotropy";
    double q = 0.0;
    double theta0 = 0.0;
    double beta_xu = 1.0;
    double beta_yu = 1.0;
    std::optional<int> m;
    double h_y2 = 0.2;
    double h_u2 = 0.0;
    double h_x2 = 0.5;
    double theta = 0.0;
    int reps = 100;
    std::string methods = "all";
    int boot = 200;
    std::uint64_t seed = 1;
    double alpha = 0.05;
    double tol = 1e-8;
    int max_iter = 1000;
    std::string out;
    std::string format = "tsv";
    unsigned threads = 0;
    bool timestamp = false;
};

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

CiMethod parse_ci(const std::string& s) {
    if (s == "normal") return CiMethod::normal;
    if (s == "percentile") return CiMethod::percentile;
    throw Error(ErrorCode::InvalidArgument, "unknown CI method '" + s + "'");
}

void require_format(const std::string& f) {
    if (f != "json" && f != "tsv") throw Error(ErrorCode::InvalidArgument, "unknown format '" + f + "'");
}

std::ofstream open_output(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::InvalidArgument, "cannot open output file '" + path + "'");
    return f;
}

template <class Writer>
void emit(const std::string& path, std::ostream& fallback, Writer&& write) {
    if (path.empty()) {
        write(fallback);
        return;
    }
    std::ofstream f = open_output(path);
    write(f);
    if (!f) throw Error(ErrorCode::InvalidArgument, "failed writing '" + path + "'");
}

int cmd_estimate(const EstimateArgs& a, std::ostream& out) {
    require_format(a.format);
    const std::vector<Method> methods = parse_methods(a.methods);
    const OutcomeType outcome_type = parse_outcome_type(a.outcome_type);
    const Delimiter delim = parse_delimiter(a.delim);

    SolverConfig solver;
    solver.tol = a.tol;
    solver.max_iter = a.max_iter;
    validate(solver);
    BootstrapConfig boot;
    boot.n_boot = a.boot;
    boot.seed = a.seed;
    boot.alpha_level = a.alpha;
    boot.ci = parse_ci(a.ci);
    boot.min_abs_beta_x = a.min_abs_beta_x;
    boot.threads = a.threads;
    normal_critical(a.alpha);

    const auto exposure = parse_gwas_file(a.exposure, ColumnMap::parse(a.exposure_cols), delim);
    const auto outcome = parse_gwas_file(a.outcome, ColumnMap::parse(a.outcome_cols), delim);
    HarmonizedSet data = harmonize(exposure, outcome, a.pval_threshold, outcome_type);
    data.provenance.exposure_source = a.exposure;
    data.provenance.outcome_source = a.outcome;

    std::vector<EstimateReport> reports;
    for (Method m : methods) reports.push_back(estimate(data, m, solver, boot));

    RunManifest manifest;
    manifest.command = "estimate";
    Json methods_json = Json::array();
    for (Method m : methods) methods_json.push_back(std::string(to_string(m)));
    manifest.config = Json{{"exposure", a.exposure},
                           {"outcome", a.outcome},
                           {"exposure_cols", a.exposure_cols},
                           {"outcome_cols", a.outcome_cols},
                           {"delim", a.delim},
                           {"methods", methods_json},
                           {"pval_threshold", a.pval_threshold},
                           {"outcome_type", std::string(to_string(outcome_type))},
                           {"boot", a.boot},
                           {"seed", a.seed},
                           {"alpha", a.alpha},
                           {"ci", a.ci},
                           {"min_abs_beta_x", a.min_abs_beta_x},
                           {"tol", a.tol},
                           {"max_iter", a.max_iter},
                           {"format", a.format},
                           {"diagnostics", a.diagnostics}};
    if (a.timestamp) manifest.timestamp = utc_now();

    emit(a.out, out, [&](std::ostream& os) {
        if (a.format == "json") {
            os << estimates_json(manifest, data, reports).dump(2) << '\n';
        } else {
            write_estimates_tsv(os, manifest, data, reports);
        }
    });

    if (!a.diagnostics.empty()) {
        const RatioSet rs = compute_ratios(data, a.min_abs_beta_x);
        const std::vector<double> w = quantile_weights(rs);
        const AldFit fit = fit_mr_quantile(rs, solver);
        emit(a.diagnostics, out, [&](std::ostream& os) { write_diagnostics_table(os, manifest, rs, w, fit); });
        emit(a.diagnostics + ".density.tsv", out,
             [&](std::ostream& os) { write_density_grid(os, manifest, fit); });
    }
    return kExitOk;
}

int cmd_simulate(const SimulateArgs& a, const CLI::App& sub, std::ostream& out) {
    require_format(a.format);
    const std::vector<Method> methods = parse_methods(a.methods);
    if (a.reps < 2) throw Error(ErrorCode::InvalidArgument, "--reps must be >= 2");

    static constexpr const char* kStrongOnly[] = {"--scenario", "--q", "--theta0", "--beta-xu", "--beta-yu"};
    static constexpr const char* kWeakOnly[] = {"--m", "--h-y2", "--h-u2", "--h-x2", "--theta"};
    auto reject_flags = [&](std::span<const char* const> flags, const std::string& design) {
        for (const char* f : flags) {
            if (sub.count(f) > 0) {
                throw Error(ErrorCode::InvalidArgument,
                            std::string(f) + " does not apply to --design " + design);
            }
        }
    };

    StudyDesign design;
    if (a.design == "strong") {
        reject_flags(kWeakOnly, a.design);
        StrongSimConfig c;
        c.n = a.n;
        c.p = a.p.value_or(30);
        c.scenario = parse_scenario(a.scenario);
        c.q = a.q;
        c.theta0 = a.theta0;
        c.beta_xu = a.beta_xu;
        c.beta_yu = a.beta_yu;
        c.seed = a.seed;
        validate(c);
        design = c;
    } else if (a.design == "weak") {
        reject_flags(kStrongOnly, a.design);
        WeakSimConfig c;
        c.n = a.n;
        c.p = a.p.value_or(50);
        c.m = a.m.value_or(std::min(30, c.p));
        c.h_y2 = a.h_y2;
        c.h_u2 = a.h_u2;
        c.h_x2 = a.h_x2;
        c.theta = a.theta;
        c.seed = a.seed;
        validate(c);
        design = c;
    } else {
        throw Error(ErrorCode::InvalidArgument, "--design must be strong or weak");
    }

    StudyOptions options;
    options.solver.tol = a.tol;
    options.solver.max_iter = a.max_iter;
    options.boot.n_boot = a.boot;
    options.boot.seed = derive_seed(a.seed, {0x51AULL});
    options.boot.alpha_level = a.alpha;
    options.threads = a.threads;
    normal_critical(a.alpha);

    const SimulationResult result =
        run_study(design, methods, static_cast<std::size_t>(a.reps), options);

    RunManifest manifest;
    manifest.command = "simulate";
    Json methods_json = Json::array();
    for (Method m : methods) methods_json.push_back(std::string(to_string(m)));
    manifest.config = to_json(design);
    manifest.config["reps"] = a.reps;
    manifest.config["methods"] = methods_json;
    manifest.config["boot"] = a.boot;
    manifest.config["alpha"] = a.alpha;
    manifest.config["tol"] = a.tol;
    manifest.config["max_iter"] = a.max_iter;
    manifest.config["format"] = a.format;
    if (a.timestamp) manifest.timestamp = utc_now();

    if (a.format == "json") {
        emit(a.out, out, [&](std::ostream& os) { os << simulation_json(manifest, result).dump(2) << '\n'; });
    } else if (a.out.empty()) {
        write_replicates_tsv(out, manifest, result);
        out << '\n';
        write_summary_tsv(out, manifest, result);
    } else {
        emit(a.out, out, [&](std::ostream& os) { write_replicates_tsv(os, manifest, result); });
        emit(a.out + ".summary.tsv", out, [&](std::ostream& os) { write_summary_tsv(os, manifest, result); });
    }
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"MR-Quantile: robust two-sample Mendelian randomization", "mrq"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    EstimateArgs ea;
    CLI::App* est = app.add_subcommand("estimate", "Estimate the causal effect from GWAS summary statistics");
    est->add_option("--exposure", ea.exposure, "Exposure GWAS file")->required();
    est->add_option("--outcome", ea.outcome, "Outcome GWAS file")->required();
    est->add_option("--exposure-cols", ea.exposure_cols, "Column mapping, e.g. snp=SNP,beta=BETA,p=P");
    est->add_option("--outcome-cols", ea.outcome_cols, "Column mapping for the outcome file");
    est->add_option("--delim", ea.delim, "auto (from extension), tab or comma")->capture_default_str();
    est->add_option("--methods", ea.methods, "Comma list of mr_quantile,ivw,egger,weighted_median or all")
        ->capture_default_str();
    est->add_option("--pval-threshold", ea.pval_threshold, "Exposure p-value threshold")->capture_default_str();
    est->add_option("--outcome-type", ea.outcome_type, "continuous or binary-rare")->capture_default_str();
    est->add_option("--boot", ea.boot, "Bootstrap replicates")->capture_default_str();
    est->add_option("--seed", ea.seed, "Bootstrap seed")->capture_default_str();
    est->add_option("--alpha", ea.alpha, "CI level is 1 - alpha")->capture_default_str();
    est->add_option("--ci", ea.ci, "normal or percentile")->capture_default_str();
    est->add_option("--min-abs-beta-x", ea.min_abs_beta_x, "Drop instruments with |beta_x| at or below this")
        ->capture_default_str();
    est->add_option("--tol", ea.tol, "Log-likelihood convergence tolerance")->capture_default_str();
    est->add_option("--max-iter", ea.max_iter, "Solver iteration cap")->capture_default_str();
    est->add_option("--out", ea.out, "Output path (stdout when omitted)");
    est->add_option("--format", ea.format, "json or tsv")->capture_default_str();
    est->add_option("--diagnostics", ea.diagnostics, "Per-SNP diagnostics TSV (plus PATH.density.tsv)");
    est->add_option("--threads", ea.threads, "Worker cap (0 = all cores)")->capture_default_str();
    est->add_flag("--timestamp", ea.timestamp, "Record wall-clock time in the manifest");

    SimulateArgs sa;
    CLI::App* sim = app.add_subcommand("simulate", "Run a Monte Carlo study");
    sim->add_option("--design", sa.design, "strong or weak")->required();
    sim->add_option("--n", sa.n, "Per-sample size")->capture_default_str();
    sim->add_option("--p", sa.p, "Number of instruments (strong: 30, weak: 50)");
    sim->add_option("--scenario", sa.scenario, "strong: no_pleiotropy, uncorrelated or correlated")
        ->capture_default_str();
    sim->add_option("--q", sa.q, "strong: invalid fraction")->capture_default_str();
    sim->add_option("--theta0", sa.theta0, "strong: causal effect")->capture_default_str();
    sim->add_option("--beta-xu", sa.beta_xu, "strong: confounder effect on X")->capture_default_str();
    sim->add_option("--beta-yu", sa.beta_yu, "strong: confounder effect on Y")->capture_default_str();
    sim->add_option("--m", sa.m, "weak: number of invalid instruments (default 30)");
    sim->add_option("--h-y2", sa.h_y2, "weak: uncorrelated pleiotropy variance")->capture_default_str();
    sim->add_option("--h-u2", sa.h_u2, "weak: correlated pleiotropy variance")->capture_default_str();
    sim->add_option("--h-x2", sa.h_x2, "weak: exposure heritability")->capture_default_str();
    sim->add_option("--theta", sa.theta, "weak: causal effect")->capture_default_str();
    sim->add_option("--reps", sa.reps, "Replicates")->capture_default_str();
    sim->add_option("--methods", sa.methods, "Comma list of methods or all")->capture_default_str();
    sim->add_option("--boot", sa.boot, "Bootstrap replicates per fit")->capture_default_str();
    sim->add_option("--seed", sa.seed, "Seed")->capture_default_str();
    sim->add_option("--alpha", sa.alpha, "Test level")->capture_default_str();
    sim->add_option("--tol", sa.tol, "Log-likelihood convergence tolerance")->capture_default_str();
    sim->add_option("--max-iter", sa.max_iter, "Solver iteration cap")->capture_default_str();
    sim->add_option("--out", sa.out, "Replicate table path; summary goes to PATH.summary.tsv");
    sim->add_option("--format", sa.format, "json or tsv")->capture_default_str();
    sim->add_option("--threads", sa.threads, "Worker cap (0 = all cores)")->capture_default_str();
    sim->add_flag("--timestamp", sa.timestamp, "Record wall-clock time in the manifest");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << kToolVersion << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (est->parsed()) return cmd_estimate(ea, out);
        return cmd_simulate(sa, *sim, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return is_numerical(e.code()) ? kExitNumerical : kExitUsage;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitNumerical;
    }
}

}  // namespace mrq::cli
