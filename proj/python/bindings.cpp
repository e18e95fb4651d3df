#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mrq/error.hpp"
#include "mrq/estimators.hpp"
#include "mrq/ratios.hpp"
#include "mrq/report_io.hpp"
#include "mrq/simulation.hpp"
#include "mrq/summary_data.hpp"
#include "mrq/wqr.hpp"

namespace py = pybind11;

namespace {

mrq::SolverConfig solver_config(double tol, int max_iter, double tau_init) {
    mrq::SolverConfig cfg;
    cfg.tol = tol;
    cfg.max_iter = max_iter;
    cfg.tau_init = tau_init;
    return cfg;
}

mrq::BootstrapConfig boot_config(int n_boot, std::uint64_t seed, double alpha, const std::string& ci,
                                 unsigned threads) {
    mrq::BootstrapConfig boot;
    boot.n_boot = n_boot;
    boot.seed = seed;
    boot.alpha_level = alpha;
    if (ci == "percentile") boot.ci = mrq::CiMethod::percentile;
    else if (ci != "normal") throw mrq::Error(mrq::ErrorCode::InvalidArgument, "ci must be normal or percentile");
    boot.threads = threads;
    return boot;
}

// JSON -> Python via the json module keeps the report layout in one place.
py::object to_python(const mrq::Json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "MR-Quantile estimation core";

    static py::exception<mrq::Error> error(m, "MrqError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const mrq::Error& e) {
            error(e.what());
        }
    });

    py::enum_<mrq::OutcomeType>(m, "OutcomeType")
        .value("continuous", mrq::OutcomeType::continuous)
        .value("binary_rare", mrq::OutcomeType::binary_rare);

    py::class_<mrq::InstrumentRecord>(m, "InstrumentRecord")
        .def(py::init([](std::string snp_id, double beta_x, double se_x, double beta_y, double se_y) {
                 return mrq::InstrumentRecord{std::move(snp_id), beta_x, se_x, beta_y, se_y, {}, {}};
             }),
             py::arg("snp_id"), py::arg("beta_x"), py::arg("se_x"), py::arg("beta_y"), py::arg("se_y"))
        .def_readonly("snp_id", &mrq::InstrumentRecord::snp_id)
        .def_readonly("beta_x", &mrq::InstrumentRecord::beta_x)
        .def_readonly("se_x", &mrq::InstrumentRecord::se_x)
        .def_readonly("beta_y", &mrq::InstrumentRecord::beta_y)
        .def_readonly("se_y", &mrq::InstrumentRecord::se_y)
        .def("__repr__", [](const mrq::InstrumentRecord& r) {
            return "InstrumentRecord(" + r.snp_id + ", beta_x=" + mrq::format_number(r.beta_x) +
                   ", beta_y=" + mrq::format_number(r.beta_y) + ")";
        });

    py::class_<mrq::HarmonizedSet>(m, "HarmonizedSet")
        .def_readonly("records", &mrq::HarmonizedSet::records)
        .def_readonly("outcome_type", &mrq::HarmonizedSet::outcome_type)
        .def_property_readonly("provenance",
                               [](const mrq::HarmonizedSet& h) { return to_python(mrq::to_json(h.provenance)); })
        .def("__len__", &mrq::HarmonizedSet::size);

    m.def("make_harmonized", &mrq::make_harmonized, py::arg("records"),
          py::arg("outcome_type") = mrq::OutcomeType::continuous);
    m.def(
        "load_and_harmonize",
        [](const std::string& exposure, const std::string& outcome, double pval_threshold,
           mrq::OutcomeType outcome_type, const std::string& exposure_cols, const std::string& outcome_cols) {
            const auto ex = mrq::parse_gwas_file(exposure, mrq::ColumnMap::parse(exposure_cols));
            const auto oc = mrq::parse_gwas_file(outcome, mrq::ColumnMap::parse(outcome_cols));
            auto set = mrq::harmonize(ex, oc, pval_threshold, outcome_type);
            set.provenance.exposure_source = exposure;
            set.provenance.outcome_source = outcome;
            return set;
        },
        py::arg("exposure"), py::arg("outcome"), py::arg("pval_threshold") = mrq::kGenomeWideThreshold,
        py::arg("outcome_type") = mrq::OutcomeType::continuous, py::arg("exposure_cols") = "",
        py::arg("outcome_cols") = "");

    py::class_<mrq::RatioSet>(m, "RatioSet")
        .def_readonly("ratio", &mrq::RatioSet::ratio)
        .def_readonly("var_ratio", &mrq::RatioSet::var_ratio)
        .def_readonly("snp_ids", &mrq::RatioSet::snp_ids)
        .def_readonly("dropped_weak", &mrq::RatioSet::dropped_weak)
        .def_readonly("dropped_degenerate", &mrq::RatioSet::dropped_degenerate)
        .def("__len__", &mrq::RatioSet::size);

    m.def("compute_ratios", py::overload_cast<const mrq::HarmonizedSet&, double>(&mrq::compute_ratios),
          py::arg("data"), py::arg("min_abs_beta_x") = 0.0);
    m.def("quantile_weights", &mrq::quantile_weights, py::arg("ratios"));
    m.def("median_weights", &mrq::median_weights, py::arg("ratios"));

    m.def("check_loss", &mrq::check_loss, py::arg("u"), py::arg("tau"));
    m.def(
        "weighted_quantile",
        [](const std::vector<double>& v, const std::vector<double>& w, double tau) {
            return mrq::weighted_quantile(v, w, tau);
        },
        py::arg("values"), py::arg("weights"), py::arg("tau"));

    py::class_<mrq::AldParams>(m, "AldParams")
        .def(py::init([](double theta, double tau, double lambda) { return mrq::AldParams{theta, tau, lambda}; }),
             py::arg("theta"), py::arg("tau"), py::arg("lam"))
        .def_readonly("theta", &mrq::AldParams::theta)
        .def_readonly("tau", &mrq::AldParams::tau)
        .def_readonly("lam", &mrq::AldParams::lambda);

    m.def("ald_logpdf", &mrq::ald_logpdf, py::arg("r"), py::arg("params"), py::arg("w"));
    m.def(
        "log_likelihood",
        [](const std::vector<double>& r, const std::vector<double>& w, const mrq::AldParams& p) {
            return mrq::log_likelihood(r, w, p);
        },
        py::arg("ratios"), py::arg("weights"), py::arg("params"));
    m.def(
        "update_lambda",
        [](const std::vector<double>& r, const std::vector<double>& w, double theta, double tau) {
            return mrq::update_lambda(r, w, theta, tau);
        },
        py::arg("ratios"), py::arg("weights"), py::arg("theta"), py::arg("tau"));
    m.def(
        "update_tau",
        [](const std::vector<double>& r, const std::vector<double>& w, double theta, double lambda) {
            return mrq::update_tau(r, w, theta, lambda);
        },
        py::arg("ratios"), py::arg("weights"), py::arg("theta"), py::arg("lam"));
    m.def("tau_from_score", &mrq::tau_from_score, py::arg("a"), py::arg("p"));

    py::class_<mrq::AldFit>(m, "AldFit")
        .def_readonly("params", &mrq::AldFit::params)
        .def_readonly("loglik_trace", &mrq::AldFit::loglik_trace)
        .def_readonly("iterations", &mrq::AldFit::iterations)
        .def_readonly("converged", &mrq::AldFit::converged)
        .def_readonly("std_residuals", &mrq::AldFit::std_residuals);

    m.def(
        "fit_ald",
        [](const std::vector<double>& r, const std::vector<double>& w, double tol, int max_iter, double tau_init) {
            return mrq::fit_ald(r, w, solver_config(tol, max_iter, tau_init));
        },
        py::arg("ratios"), py::arg("weights"), py::arg("tol") = 1e-8, py::arg("max_iter") = 1000,
        py::arg("tau_init") = 0.5);
    m.def(
        "fit_mr_quantile",
        [](const mrq::HarmonizedSet& data, double tol, int max_iter) {
            return mrq::fit_mr_quantile(mrq::compute_ratios(data), solver_config(tol, max_iter, 0.5));
        },
        py::arg("data"), py::arg("tol") = 1e-8, py::arg("max_iter") = 1000);

    m.def(
        "estimate",
        [](const mrq::HarmonizedSet& data, const std::string& method, int n_boot, std::uint64_t seed,
           double alpha, const std::string& ci, unsigned threads) {
            py::gil_scoped_release release;
            const auto report = mrq::estimate(data, mrq::parse_method(method), {},
                                              boot_config(n_boot, seed, alpha, ci, threads));
            py::gil_scoped_acquire acquire;
            return to_python(mrq::to_json(report));
        },
        py::arg("data"), py::arg("method") = "mr_quantile", py::arg("n_boot") = 1000, py::arg("seed") = 1,
        py::arg("alpha") = 0.05, py::arg("ci") = "normal", py::arg("threads") = 0u,
        "Fit one method; returns the report as a dict.");

    py::class_<mrq::WeakSimConfig>(m, "WeakSimConfig")
        .def(py::init<>())
        .def_readwrite("n", &mrq::WeakSimConfig::n)
        .def_readwrite("p", &mrq::WeakSimConfig::p)
        .def_readwrite("m", &mrq::WeakSimConfig::m)
        .def_readwrite("h_y2", &mrq::WeakSimConfig::h_y2)
        .def_readwrite("h_u2", &mrq::WeakSimConfig::h_u2)
        .def_readwrite("h_x2", &mrq::WeakSimConfig::h_x2)
        .def_readwrite("theta", &mrq::WeakSimConfig::theta)
        .def_readwrite("seed", &mrq::WeakSimConfig::seed);

    py::class_<mrq::StrongSimConfig>(m, "StrongSimConfig")
        .def(py::init<>())
        .def_readwrite("n", &mrq::StrongSimConfig::n)
        .def_readwrite("p", &mrq::StrongSimConfig::p)
        .def_property(
            "scenario", [](const mrq::StrongSimConfig& c) { return std::string(mrq::to_string(c.scenario)); },
            [](mrq::StrongSimConfig& c, const std::string& s) { c.scenario = mrq::parse_scenario(s); })
        .def_readwrite("q", &mrq::StrongSimConfig::q)
        .def_readwrite("theta0", &mrq::StrongSimConfig::theta0)
        .def_readwrite("beta_xu", &mrq::StrongSimConfig::beta_xu)
        .def_readwrite("beta_yu", &mrq::StrongSimConfig::beta_yu)
        .def_readwrite("seed", &mrq::StrongSimConfig::seed);

    m.def("generate_weak", &mrq::generate_weak, py::arg("config"), py::arg("rep_index") = 0);
    m.def("generate_strong", &mrq::generate_strong, py::arg("config"), py::arg("rep_index") = 0);

    m.def(
        "run_study",
        [](const std::variant<mrq::StrongSimConfig, mrq::WeakSimConfig>& design, const std::string& methods,
           std::size_t reps, int n_boot, std::uint64_t seed, unsigned threads) {
            mrq::StudyOptions opt;
            opt.boot.n_boot = n_boot;
            opt.boot.seed = seed;
            opt.threads = threads;
            const auto ms = mrq::parse_methods(methods);
            py::gil_scoped_release release;
            const auto result = mrq::run_study(design, ms, reps, opt);
            py::gil_scoped_acquire acquire;
            mrq::RunManifest manifest;
            manifest.command = "run_study";
            return to_python(mrq::simulation_json(manifest, result));
        },
        py::arg("design"), py::arg("methods") = "all", py::arg("reps") = 100, py::arg("n_boot") = 200,
        py::arg("seed") = 1, py::arg("threads") = 0u,
        "Monte Carlo study; returns aggregates and per-replicate rows as a dict.");
}
