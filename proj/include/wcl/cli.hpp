#pragma once

// Command-line driver. Subcommands: generate-model, build-generator,
// propagate, convergence, contraction, correlations. Exit codes form a
// stable contract: 0 success, 2 usage, 3 construction error, 4 experiment
// error. Every output file embeds the resolved config and the schema tag.

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wcl/analysis.hpp"
#include "wcl/errors.hpp"
#include "wcl/generators.hpp"
#include "wcl/io.hpp"
#include "wcl/kernels.hpp"
#include "wcl/model.hpp"
#include "wcl/opalg.hpp"
#include "wcl/propagate.hpp"

namespace wcl::cli {

namespace detail {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline SystemModel load_model(const std::string& path) {
    if (!std::filesystem::exists(path))
        throw UsageError("model file does not exist: " + path);
    return model_from_json_text(io::read_file(path));
}

struct QcFlags {
    double x_max_factor = 8.0;
    int nodes_per_unit = 64;
    double expm_tol = 1e-12;
    double volterra_tol = 1e-10;
    std::string scheme = "gauss-legendre-panels";

    void attach(CLI::App* cmd) {
        cmd->add_option("--x-max-factor", x_max_factor,
                        "Gaussian truncation at x_max_factor * T (>= 6)");
        cmd->add_option("--nodes-per-unit", nodes_per_unit,
                        "quadrature nodes per unit time (>= 16)");
        cmd->add_option("--expm-tol", expm_tol, "matrix exponential tolerance");
        cmd->add_option("--volterra-tol", volterra_tol, "Volterra iteration tolerance");
        cmd->add_option("--scheme", scheme,
                        "composite-simpson | gauss-legendre-panels");
    }

    QuadratureConfig resolve() const {
        QuadratureConfig qc;
        qc.x_max_factor = x_max_factor;
        qc.nodes_per_unit_T = nodes_per_unit;
        qc.expm_tol = expm_tol;
        qc.volterra_tol = volterra_tol;
        qc.quad_scheme = quad_scheme_from_string(scheme);
        qc.validate();
        return qc;
    }
};

struct GenFlags {
    std::string kind;
    double x_max = 0.0;
    double alpha = 0.5, q = 0.0, T = 0.0;
    std::string form = "ordered-double";
    double delta_omega = 0.0;
    std::string base_kind;

    void attach(CLI::App* cmd, bool required) {
        auto* opt = cmd->add_option("--kind", kind,
                                    "davies | family | dynavg | spectralavg");
        if (required) opt->required();
        cmd->add_option("--x-max", x_max, "Davies cutoff (davies kind)");
        cmd->add_option("--alpha", alpha, "family parameter alpha");
        cmd->add_option("--q", q, "family parameter q");
        cmd->add_option("--T", T, "averaging timescale T");
        cmd->add_option("--form", form,
                        "dynavg form: q-average | ordered-double | time-ordered");
        cmd->add_option("--delta-omega", delta_omega,
                        "spectral-average cluster width (spectralavg kind)");
        cmd->add_option("--base-kind", base_kind,
                        "base generator for spectralavg: davies | family | dynavg");
    }

    generators::GeneratorSpec resolve(const QuadratureConfig& qc) const {
        generators::GeneratorSpec s;
        s.qc = qc;
        auto fill_leaf = [&](generators::GeneratorSpec& leaf, const std::string& k) {
            if (k == "davies") {
                leaf.kind = generators::GeneratorSpec::Kind::Davies;
                leaf.x_max = x_max;
            } else if (k == "family") {
                leaf.kind = generators::GeneratorSpec::Kind::Family;
                leaf.alpha = alpha;
                leaf.q = q;
                leaf.T = T;
            } else if (k == "dynavg") {
                leaf.kind = generators::GeneratorSpec::Kind::DynAvg;
                leaf.T = T;
                leaf.form = generators::dyn_avg_form_from_string(form);
            } else {
                throw UsageError("unknown generator kind: " + k);
            }
            leaf.qc = qc;
        };
        if (kind == "spectralavg") {
            s.kind = generators::GeneratorSpec::Kind::SpectralAvg;
            s.delta_omega = delta_omega;
            if (base_kind.empty())
                throw UsageError("spectralavg requires --base-kind");
            auto base = std::make_shared<generators::GeneratorSpec>();
            fill_leaf(*base, base_kind);
            s.base = std::move(base);
        } else {
            fill_leaf(s, kind);
        }
        return s;
    }
};

inline std::string format_output(const std::string& fmt) {
    if (fmt != "csv" && fmt != "json" && fmt != "both")
        throw UsageError("--format must be csv, json or both");
    return fmt;
}

} // namespace detail

inline int run_cli(std::vector<std::string> args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
    CLI::App app{
        "wcl: weak-coupling-limit toolkit (models, Markovian generators, "
        "convergence and contraction experiments)"};
    app.require_subcommand(1);

    // ---- generate-model ----
    auto* gm = app.add_subcommand("generate-model",
                                  "build a seeded model and write it as JSON");
    std::string gm_kind = "random";
    std::uint64_t gm_seed = 1;
    int gm_n0 = 2, gm_n1 = 8;
    double gm_band = 1.0, gm_bandwidth = 20.0, gm_profile = 5.0, gm_coupling = 1.0;
    double gm_lambda = 0.1;
    std::string gm_output;
    gm->add_option("--kind", gm_kind, "random | quasicontinuum")->required();
    gm->add_option("--seed", gm_seed, "RNG seed");
    gm->add_option("--n0", gm_n0, "observed subspace dimension")->required();
    gm->add_option("--n1", gm_n1, "environment dimension")->required();
    gm->add_option("--omega-band", gm_band, "random model: frequencies in [-band, band]");
    gm->add_option("--bandwidth", gm_bandwidth, "quasi-continuum: environment band");
    gm->add_option("--profile-width", gm_profile, "quasi-continuum: coupling profile width");
    gm->add_option("--coupling-scale", gm_coupling, "op_norm(A) after rescaling");
    gm->add_option("--lambda", gm_lambda, "coupling constant, |lambda| <= 1");
    gm->add_option("--output", gm_output, "output model JSON path")->required();

    // ---- build-generator ----
    auto* bg = app.add_subcommand("build-generator",
                                  "construct a Markovian generator matrix");
    std::string bg_model, bg_output;
    detail::GenFlags bg_gen;
    detail::QcFlags bg_qc;
    bg->add_option("--model", bg_model, "model JSON path")->required();
    bg_gen.attach(bg, true);
    bg_qc.attach(bg);
    bg->add_option("--output", bg_output, "output matrix JSON path")->required();

    // ---- propagate ----
    auto* pg = app.add_subcommand("propagate", "evaluate a propagator on a time grid");
    std::string pg_model, pg_kind = "exact", pg_output;
    std::vector<double> pg_times;
    double pg_tmax = 0.0;
    int pg_tnodes = 0;
    pg->add_option("--model", pg_model, "model JSON path")->required();
    pg->add_option("--kind", pg_kind, "free | dressed | full | reduced | exact");
    pg->add_option("--t", pg_times, "explicit time values (repeatable)");
    pg->add_option("--t-max", pg_tmax, "uniform grid endpoint");
    pg->add_option("--t-nodes", pg_tnodes, "uniform grid node count");
    pg->add_option("--output", pg_output, "output JSON path")->required();

    // ---- convergence ----
    auto* cv = app.add_subcommand(
        "convergence", "weak-coupling sweep: sup-norm error vs the exact evolution");
    std::string cv_config, cv_model, cv_output, cv_format = "both";
    detail::GenFlags cv_gen;
    detail::QcFlags cv_qc;
    std::string cv_rule = "natural";
    double cv_xi = 1.0, cv_tref = 1.0, cv_taubar = 0.5;
    int cv_tnodes = 200;
    std::vector<double> cv_lambdas;
    cv->add_option("--config", cv_config, "run-config JSON (overrides other flags)");
    cv->add_option("--model", cv_model, "model JSON path");
    cv_gen.attach(cv, false);
    cv_qc.attach(cv);
    cv->add_option("--transition", cv_rule, "natural | power-law");
    cv->add_option("--xi", cv_xi, "power-law exponent, 0 < xi < 2");
    cv->add_option("--T-ref", cv_tref, "power-law reference time");
    cv->add_option("--lambda", cv_lambdas, "coupling grid (repeatable)");
    cv->add_option("--tau-bar", cv_taubar, "rescaled time horizon");
    cv->add_option("--time-nodes", cv_tnodes, "grid points per lambda row");
    cv->add_option("--output", cv_output, "output path prefix");
    cv->add_option("--format", cv_format, "csv | json | both");

    // ---- contraction ----
    auto* ct = app.add_subcommand(
        "contraction", "semigroup norm scan and resolvent dissipativity check");
    std::string ct_model, ct_output, ct_format = "both";
    detail::GenFlags ct_gen;
    detail::QcFlags ct_qc;
    double ct_lambda = 0.0, ct_tmax = 0.0;
    int ct_tnodes = 200;
    ct->add_option("--model", ct_model, "model JSON path")->required();
    ct_gen.attach(ct, true);
    ct_qc.attach(ct);
    ct->add_option("--lambda", ct_lambda, "coupling (default: model value)");
    ct->add_option("--t-max", ct_tmax, "scan horizon (default: 1/lambda^2)");
    ct->add_option("--t-nodes", ct_tnodes, "scan grid nodes");
    ct->add_option("--output", ct_output, "output path prefix")->required();
    ct->add_option("--format", ct_format, "csv | json | both");

    // ---- correlations ----
    auto* cr = app.add_subcommand("correlations",
                                  "correlation integrals a_n(t) on a time grid");
    std::string cr_model, cr_output;
    detail::QcFlags cr_qc;
    int cr_n = 0, cr_tnodes = 64;
    double cr_tmax = 10.0;
    cr->add_option("--model", cr_model, "model JSON path")->required();
    cr->add_option("--n", cr_n, "order n in {0, 1, 2}");
    cr->add_option("--t-max", cr_tmax, "grid endpoint");
    cr->add_option("--t-nodes", cr_tnodes, "grid node count");
    cr_qc.attach(cr);
    cr->add_option("--output", cr_output, "output CSV path")->required();

    app.footer(
        "CSV column order (convergence): "
        "lambda,T_lambda,sup_error,argmax_t,max_norm,a0_plateau,wall_ms\n"
        "Exit codes: 0 success, 2 usage, 3 construction error, 4 experiment error.\n"
        "WCL_THREADS caps internal parallelism (default: machine cores).");

    std::vector<const char*> argv;
    argv.push_back("wcl");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    }

    const bool is_construction_cmd = gm->parsed() || bg->parsed();
    try {
        if (gm->parsed()) {
            SystemModel m;
            try {
                if (gm_kind == "random") {
                    m = build_random_model(gm_seed, gm_n0, gm_n1, gm_band, gm_coupling,
                                           gm_lambda);
                } else if (gm_kind == "quasicontinuum") {
                    m = build_quasi_continuum_model(gm_seed, gm_n0, gm_n1, gm_bandwidth,
                                                    gm_profile, gm_coupling, gm_lambda);
                } else {
                    throw detail::UsageError("unknown model kind: " + gm_kind);
                }
            } catch (const ConstructionError& e) {
                // builder argument validation is a usage failure here
                throw detail::UsageError(e.what());
            }
            io::write_file(gm_output, model_to_json(m));
            const ValidationReport rep = validate_model(m);
            out << "model written to " << gm_output << "\n" << rep.to_string();
            out << (rep.pass() ? "validation: PASS\n" : "validation: FAIL\n");
            return rep.pass() ? 0 : 3;
        }

        if (bg->parsed()) {
            const SystemModel m = detail::load_model(bg_model);
            const QuadratureConfig qc = bg_qc.resolve();
            const generators::GeneratorSpec spec = bg_gen.resolve(qc);
            const Propagators props(m);
            const Operator k = generators::build_generator(props, spec);
            const auto tail = generators::tail_bound(props, spec);
            std::ostringstream os;
            os << "{\"schema\":\"" << io::kSchemaVersion << "\",";
            os << "\"config\":{\"command\":\"build-generator\",\"model\":\""
               << io::json_escape(bg_model) << "\",\"generator\":" << spec.to_json()
               << "},";
            os << "\"tail_bound\":"
               << (tail ? io::fmt17(*tail) : std::string("null")) << ",";
            os << "\"generator_norm\":" << io::fmt17(opalg::op_norm(k)) << ",";
            os << "\"matrix\":" << io::matrix_json(k) << "}";
            io::write_file(bg_output, os.str());
            out << "generator (" << spec.kind_name() << ") written to " << bg_output
                << ", norm " << io::fmt17(opalg::op_norm(k));
            if (tail) out << ", Gaussian tail bound " << io::fmt17(*tail);
            out << "\n";
            return 0;
        }

        if (pg->parsed()) {
            const SystemModel m = detail::load_model(pg_model);
            const Propagators props(m);
            std::vector<double> times = pg_times;
            if (times.empty()) {
                if (pg_tnodes < 2 || pg_tmax <= 0.0)
                    throw detail::UsageError(
                        "propagate needs --t values or --t-max with --t-nodes >= 2");
                for (int i = 0; i < pg_tnodes; ++i)
                    times.push_back(pg_tmax * i / (pg_tnodes - 1));
            }
            auto eval = [&](double t) -> Operator {
                if (pg_kind == "free") return props.free_group(t);
                if (pg_kind == "dressed") return props.dressed_group(t);
                if (pg_kind == "full") return props.full_group(t);
                if (pg_kind == "reduced") return props.reduced_free(t);
                if (pg_kind == "exact") return props.exact_projected(t);
                throw detail::UsageError("unknown propagator kind: " + pg_kind);
            };
            std::ostringstream os;
            os << "{\"schema\":\"" << io::kSchemaVersion << "\",";
            os << "\"config\":{\"command\":\"propagate\",\"model\":\""
               << io::json_escape(pg_model) << "\",\"kind\":\"" << pg_kind << "\"},";
            os << "\"times\":" << io::real_array_json(times.data(), times.size())
               << ",\"matrices\":[";
            for (std::size_t i = 0; i < times.size(); ++i) {
                if (i) os << ",";
                os << io::matrix_json(eval(times[i]));
            }
            os << "]}";
            io::write_file(pg_output, os.str());
            out << "propagator (" << pg_kind << ") at " << times.size()
                << " times written to " << pg_output << "\n";
            return 0;
        }

        if (cv->parsed()) {
            SystemModel base_model;
            generators::GeneratorSpec spec;
            generators::TransitionTime tt;
            std::vector<double> lambdas;
            double tau_bar = cv_taubar;
            int time_nodes = cv_tnodes;
            std::string output = cv_output, format = cv_format;
            std::string echo;
            if (!cv_config.empty()) {
                if (!std::filesystem::exists(cv_config))
                    throw detail::UsageError("config file does not exist: " + cv_config);
                const auto j = nlohmann::json::parse(io::read_file(cv_config));
                if (j.at("model").is_string()) {
                    base_model = detail::load_model(j["model"].get<std::string>());
                } else {
                    base_model = model_from_json(j.at("model"));
                }
                spec = generators::GeneratorSpec::from_json(j.at("generator"));
                if (j.contains("transition_time")) {
                    const auto& tj = j["transition_time"];
                    const std::string rule = tj.value("rule", std::string("natural"));
                    tt.rule = (rule == "power-law")
                                  ? generators::TransitionTime::Rule::PowerLaw
                                  : generators::TransitionTime::Rule::Natural;
                    tt.xi = tj.value("xi", 1.0);
                    tt.T_ref = tj.value("T_ref", 1.0);
                }
                lambdas = j.at("lambda_grid").get<std::vector<double>>();
                tau_bar = j.at("tau_bar").get<double>();
                time_nodes = j.value("time_nodes", 200);
                if (j.contains("output") && output.empty())
                    output = j["output"].get<std::string>();
                if (j.contains("format")) format = j["format"].get<std::string>();
                echo = j.dump();
            } else {
                if (cv_model.empty() || cv_gen.kind.empty() || cv_lambdas.empty())
                    throw detail::UsageError(
                        "convergence needs --config or --model, --kind and --lambda");
                base_model = detail::load_model(cv_model);
                const QuadratureConfig qc = cv_qc.resolve();
                spec = cv_gen.resolve(qc);
                tt.rule = (cv_rule == "power-law")
                              ? generators::TransitionTime::Rule::PowerLaw
                              : generators::TransitionTime::Rule::Natural;
                tt.xi = cv_xi;
                tt.T_ref = cv_tref;
                lambdas = cv_lambdas;
            }
            if (output.empty())
                throw detail::UsageError("convergence needs an --output prefix");
            detail::format_output(format);
            if (echo.empty()) {
                std::ostringstream ce;
                ce << "{\"command\":\"convergence\",\"model\":\""
                   << io::json_escape(cv_model) << "\",\"generator\":" << spec.to_json()
                   << ",\"tau_bar\":" << io::fmt17(tau_bar)
                   << ",\"time_nodes\":" << time_nodes << "}";
                echo = ce.str();
            }
            auto builder = [&](double) { return base_model; };
            analysis::ExperimentResult res = analysis::convergence_experiment(
                builder, spec, tt, lambdas, tau_bar, time_nodes);
            res.config_echo = echo;
            if (format != "json") io::write_file(output + ".csv", res.to_csv());
            if (format != "csv") io::write_file(output + ".json", res.to_json());
            out << "convergence sweep over " << lambdas.size() << " lambda values -> "
                << output << ".{csv,json}\n";
            for (const auto& r : res.rows)
                out << "  lambda " << io::fmt17(r.lambda) << "  sup_error "
                    << io::fmt17(r.sup_error) << "\n";
            return 0;
        }

        if (ct->parsed()) {
            SystemModel m = detail::load_model(ct_model);
            const double lambda = (ct_lambda != 0.0) ? ct_lambda : m.lambda;
            if (lambda == 0.0)
                throw CouplingZero("contraction: lambda = 0 (set --lambda)");
            m.lambda = lambda;
            const QuadratureConfig qc = ct_qc.resolve();
            generators::GeneratorSpec spec = ct_gen.resolve(qc);
            const generators::GeneratorSpec& leaf =
                (spec.kind == generators::GeneratorSpec::Kind::SpectralAvg && spec.base)
                    ? *spec.base
                    : spec;
            if ((leaf.kind == generators::GeneratorSpec::Kind::Family ||
                 leaf.kind == generators::GeneratorSpec::Kind::DynAvg) &&
                leaf.T <= 0.0) {
                generators::TransitionTime tt;
                spec = generators::with_transition_time(
                    spec, generators::transition_time(tt, m, lambda));
            }
            const Propagators props(m);
            const Operator k = generators::build_generator(props, spec);
            const double t_max = (ct_tmax > 0.0) ? ct_tmax : 1.0 / (lambda * lambda);
            const analysis::ContractionScan scan =
                analysis::contraction_scan(m, k, lambda, t_max, ct_tnodes);
            const Operator gen_block =
                compress0(m.Z() + lambda * m.A_block(0, 0) + lambda * lambda * k, m.n0);
            const analysis::DissipativityReport diss = analysis::dissipativity_check(
                gen_block, {0.1, 1.0, 10.0}, 32, m.seed + 1);
            std::ostringstream cfg;
            cfg << "{\"command\":\"contraction\",\"model\":\""
                << io::json_escape(ct_model) << "\",\"generator\":" << spec.to_json()
                << ",\"lambda\":" << io::fmt17(lambda)
                << ",\"t_max\":" << io::fmt17(t_max) << ",\"t_nodes\":" << ct_tnodes
                << "}";
            detail::format_output(ct_format);
            if (ct_format != "json") {
                std::ostringstream csv;
                csv << "t,norm\n";
                for (int i = 0; i < ct_tnodes; ++i)
                    csv << io::fmt17(t_max * i / (ct_tnodes - 1)) << ","
                        << io::fmt17(scan.norms[i]) << "\n";
                io::write_file(ct_output + ".csv", csv.str());
            }
            if (ct_format != "csv") {
                std::ostringstream js;
                js << "{\"schema\":\"" << io::kSchemaVersion << "\",";
                js << "\"config\":" << cfg.str() << ",";
                js << "\"max_norm\":" << io::fmt17(scan.max_norm)
                   << ",\"argmax_t\":" << io::fmt17(scan.argmax_t)
                   << ",\"dissipativity\":{\"min_slack\":" << io::fmt17(diss.min_slack)
                   << ",\"worst_alpha\":" << io::fmt17(diss.worst_alpha)
                   << ",\"samples\":" << diss.samples << "}}";
                io::write_file(ct_output + ".json", js.str());
            }
            out << "contraction scan: max norm " << io::fmt17(scan.max_norm) << " at t = "
                << io::fmt17(scan.argmax_t) << "; dissipativity min slack "
                << io::fmt17(diss.min_slack) << "\n";
            return 0;
        }

        if (cr->parsed()) {
            const SystemModel m = detail::load_model(cr_model);
            const QuadratureConfig qc = cr_qc.resolve();
            if (cr_tnodes < 2 || cr_tmax <= 0.0)
                throw detail::UsageError("correlations needs --t-max > 0 and --t-nodes >= 2");
            std::ostringstream csv;
            csv << "t,a" << cr_n << "\n";
            for (int i = 0; i < cr_tnodes; ++i) {
                const double t = cr_tmax * i / (cr_tnodes - 1);
                csv << io::fmt17(t) << ","
                    << io::fmt17(analysis::correlation_integral(m, cr_n, t, qc)) << "\n";
            }
            io::write_file(cr_output, csv.str());
            out << "a_" << cr_n << " on " << cr_tnodes << " nodes written to "
                << cr_output << "\n";
            return 0;
        }
    } catch (const detail::UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const ConstructionError& e) {
        err << "construction error: " << e.what() << "\n";
        return is_construction_cmd ? 3 : 4;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 4;
    } catch (const nlohmann::json::exception& e) {
        err << "input parse error: " << e.what() << "\n";
        return is_construction_cmd ? 3 : 4;
    }
    return 2;
}

} // namespace wcl::cli
