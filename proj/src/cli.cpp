// cli.cpp: Subcommand implementations and argument handling

#include "sfd/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "sfd/analytic.hpp"
#include "sfd/errors.hpp"
#include "sfd/estimate.hpp"
#include "sfd/integrate.hpp"
#include "sfd/trajectories.hpp"

namespace sfd {

namespace {

using json = nlohmann::ordered_json;

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("output file '" + path + "' is not writable");
    return out;
}

void write_json(const json& j, const std::string& path) {
    auto out = open_output(path);
    out << j.dump(2) << '\n';
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json header(const char* command, const ConfigMap& config) {
    json j;
    j["command"] = command;
    j["config"] = config.echo();
    return j;
}

// Generator for the deterministic models (everything except the memory kernel).
Rhs build_rhs(const RunConfig& rc) {
    const Index d = rc.dim;
    const double gamma = damping_rate(rc.params);
    std::vector<Rhs> terms;
    switch (rc.model) {
        case ModelKind::gup_markov: {
            auto g = std::make_shared<GupMarkov>(d, rc.params, rc.hamiltonian);
            terms.push_back([g](double t, const Matrix& r) { return (*g)(t, r); });
            break;
        }
        case ModelKind::breuer: {
            auto b = std::make_shared<Breuer>(d, rc.params);
            terms.push_back([b](double t, const Matrix& r) { return (*b)(t, r); });
            break;
        }
        case ModelKind::damping_only: {
            auto u = std::make_shared<Unitary>(h_prime(d, rc.params, rc.hamiltonian));
            terms.push_back([u](double t, const Matrix& r) { return (*u)(t, r); });
            break;
        }
        case ModelKind::gup_nonmarkov: throw Error("build_rhs: memory kernel runs through evolve_nonmarkov");
    }
    if (gamma > 0.0) {
        auto dmp = std::make_shared<Damping>(d, gamma);
        terms.push_back([dmp](double t, const Matrix& r) { return (*dmp)(t, r); });
    }
    return sum(std::move(terms));
}

constexpr double kTruncationTolerance = 1e-8;

EvolutionResult run_evolution(const RunConfig& rc) {
    const DensityMatrix rho0 = DensityMatrix::pure(rc.initial.vector(rc.dim));
    EvolveOptions opts;
    opts.dt = rc.dt;
    opts.sample_every = rc.sample_every;
    opts.positivity_every = rc.positivity_every;
    opts.omega = rc.params.omega;
    if (rc.model == ModelKind::gup_nonmarkov) {
        if (rc.params.kernel.is_delta()) throw ConfigError("model gup-nonmarkov needs kernel = exponential");
        return evolve_nonmarkov(rho0, rc.params, rc.t_end, opts, rc.hamiltonian);
    }
    return evolve(rho0, build_rhs(rc), rc.t_end, opts);
}

// Closed-form value of an observable at time t when one exists for this model/state.
struct AnalyticOverlay {
    const RunConfig& rc;
    std::vector<std::string> warnings;

    std::optional<double> operator()(const Observable& obs, double t) {
        const double gamma = damping_rate(rc.params);
        if (rc.model == ModelKind::damping_only) {
            const Matrix rho0 = DensityMatrix::pure(rc.initial.vector(rc.dim)).matrix();
            const cplx v = damping_series_element(obs.row, obs.col, t, gamma, rc.params.beta_bar, rc.params.ap_hw, rho0);
            return part(obs, v);
        }
        const bool gup = rc.model != ModelKind::breuer;
        const double rate = gup ? gup_rate(rc.params) : breuer_rate(rc.params);
        const double tau = rate > 0.0 ? 1.0 / rate : std::numeric_limits<double>::infinity();
        using K = InitialState::Kind;
        const bool coh = rc.initial.kind == K::superposition01 && obs.row == 0 && obs.col == 1;
        const bool p00 = rc.initial.kind == K::vacuum && obs.row == 0 && obs.col == 0;
        const bool p11 = rc.initial.kind == K::fock && rc.initial.n == 1 && obs.row == 1 && obs.col == 1;
        if (!coh && !p00 && !p11) return std::nullopt;
        if (gup) {
            if (coh) {
                auto c = gup_coherence01(t, gamma, tau, rc.params.beta_bar, rc.params.ap_hw);
                note(c.warning);
                return part(obs, c.value);
            }
            auto p = gup_populations(t, gamma, tau);
            note(p.warning);
            return part(obs, p00 ? p.value.p00 : p.value.p11);
        }
        auto b = breuer_observables(t, gamma, tau);
        note(b.warning);
        if (coh) return part(obs, b.value.coh01);
        return part(obs, p00 ? b.value.p00 : b.value.p11);
    }

    static double part(const Observable& obs, cplx v) {
        switch (obs.part) {
            case Observable::Part::re: return v.real();
            case Observable::Part::im: return v.imag();
            case Observable::Part::abs: return std::abs(v);
        }
        return v.real();
    }

    void note(const std::optional<std::string>& w) {
        if (w && warnings.empty()) warnings.push_back(*w);
    }
};

json diagnostics_json(const EvolutionResult& r) {
    return {{"steps", r.diagnostics.size()},
            {"max_trace_drift", r.max_trace_drift()},
            {"max_hermiticity_drift", r.max_hermiticity_drift()},
            {"min_eigenvalue", finite_or_null(r.min_eigenvalue())}};
}

json model_json(const RunConfig& rc) {
    return {{"omega", rc.params.omega},
            {"omega_tau_g", finite_or_null(gup_rate(rc.params) > 0 ? 1.0 / gup_rate(rc.params) : INFINITY)},
            {"omega_tau_d", finite_or_null(breuer_rate(rc.params) > 0 ? 1.0 / breuer_rate(rc.params) : INFINITY)},
            {"gamma_over_omega", damping_rate(rc.params)},
            {"kernel", rc.params.kernel.name()},
            {"omega_kernel_tau", rc.params.kernel.tau * rc.params.omega}};
}

GridSpec grid_from(const ConfigMap& c) {
    GridSpec g;
    g.x_min = c.number("x_min");
    g.x_max = c.number("x_max");
    g.nx = c.integer("nx");
    g.p_min = c.number("p_min");
    g.p_max = c.number("p_max");
    g.np = c.integer("np");
    g.validate();
    return g;
}

} // namespace

json cmd_simulate(const ConfigMap& config) {
    const RunConfig rc = RunConfig::from(config);
    std::vector<Observable> obs;
    for (const auto& name : rc.observables) obs.push_back(Observable::parse(name));
    if (obs.empty()) throw ConfigError("observables: none declared");

    const EvolutionResult result = run_evolution(rc);
    {
        auto out = open_output(rc.output + ".csv");
        write_observables_csv(result, obs, out);
    }

    AnalyticOverlay overlay{rc, {}};
    std::vector<Observable> with_analytic;
    for (const auto& o : obs) {
        if (overlay(o, 0.0)) with_analytic.push_back(o);
    }
    json max_diff = json::object();
    if (!with_analytic.empty()) {
        auto out = open_output(rc.output + "_analytic.csv");
        out << "t_omega,t_seconds";
        for (const auto& o : with_analytic) out << ",analytic_" << o.name;
        out << '\n' << std::setprecision(17);
        std::vector<double> diff(with_analytic.size(), 0.0);
        for (std::size_t k = 0; k < result.states.size(); ++k) {
            out << result.t_omega[k] << ',' << result.t_seconds[k];
            for (std::size_t i = 0; i < with_analytic.size(); ++i) {
                const double a = *overlay(with_analytic[i], result.t_omega[k]);
                diff[i] = std::max(diff[i], std::abs(a - with_analytic[i](result.states[k])));
                out << ',' << a;
            }
            out << '\n';
        }
        for (std::size_t i = 0; i < with_analytic.size(); ++i) max_diff[with_analytic[i].name] = diff[i];
    }

    json j = header("simulate", config);
    j["model"] = model_json(rc);
    j["samples"] = result.states.size();
    j["diagnostics"] = diagnostics_json(result);
    if (config.flag("convergence_check")) {
        // Same run on dim + 10 levels; every declared observable must move by less than 1e-8.
        RunConfig wider = rc;
        wider.dim = rc.dim + 10;
        const EvolutionResult check = run_evolution(wider);
        double shift = 0.0;
        for (std::size_t k = 0; k < result.states.size(); ++k) {
            for (const auto& o : obs) shift = std::max(shift, std::abs(o(result.states[k]) - o(check.states[k])));
        }
        const bool converged = shift < kTruncationTolerance;
        j["truncation"] = {{"dim", rc.dim},
                           {"check_dim", wider.dim},
                           {"max_observable_shift", shift},
                           {"tolerance", kTruncationTolerance},
                           {"converged", converged}};
        if (!converged) {
            std::ostringstream msg;
            msg << "truncation: observables shift by " << shift << " at dim " << wider.dim << "; increase dim";
            overlay.warnings.push_back(msg.str());
        }
    }
    j["max_abs_numeric_minus_analytic"] = max_diff;
    j["warnings"] = overlay.warnings;
    j["files"] = {rc.output + ".csv"};
    if (!with_analytic.empty()) j["files"].push_back(rc.output + "_analytic.csv");
    write_json(j, rc.output + ".json");
    return j;
}

json cmd_ensemble(const ConfigMap& config) {
    const RunConfig rc = RunConfig::from(config);
    if (rc.model != ModelKind::gup_markov && rc.model != ModelKind::gup_nonmarkov) {
        throw ConfigError("ensemble: model must be gup-markov (white noise) or gup-nonmarkov (OU noise)");
    }
    if (rc.model == ModelKind::gup_markov && !rc.params.kernel.is_delta()) {
        throw ConfigError("ensemble: gup-markov uses the delta kernel");
    }
    if (rc.model == ModelKind::gup_nonmarkov && rc.params.kernel.is_delta()) {
        throw ConfigError("ensemble: gup-nonmarkov needs kernel = exponential");
    }
    if (rc.params.gamma != 0.0) throw ConfigError("ensemble: gamma must be 0 in trajectory mode");
    std::vector<Observable> obs;
    for (const auto& name : rc.observables) obs.push_back(Observable::parse(name));

    EnsembleOptions eo;
    eo.n_traj = rc.n_traj;
    eo.seed = rc.seed;
    eo.t_end = rc.t_end;
    eo.dt = rc.dt;
    eo.sample_every = rc.sample_every;
    eo.hamiltonian = rc.hamiltonian;
    eo.threads = rc.threads;
    const EnsembleResult ens = ensemble_average(rc.initial.vector(rc.dim), rc.params, eo);
    {
        auto out = open_output(rc.output + ".csv");
        write_ensemble_csv(ens, obs, out);
    }

    json j = header("ensemble", config);
    j["model"] = model_json(rc);
    j["n_traj"] = ens.n_traj;
    j["samples"] = ens.mean.size();
    double max_trace_error = 0.0;
    for (const auto& m : ens.mean) max_trace_error = std::max(max_trace_error, std::abs(m.trace() - cplx(1.0)));
    j["max_trace_error"] = max_trace_error;
    if (config.flag("compare")) {
        const EvolutionResult me = run_evolution(rc);
        double max_td = 0.0;
        json z = json::object();
        for (const auto& o : obs) {
            double worst = 0.0;
            for (std::size_t k = 0; k < ens.mean.size(); ++k) {
                const double se = ens.standard_error(o, k);
                const double d = std::abs(o(ens.mean[k]) - o(me.states[k]));
                if (se > 0.0) worst = std::max(worst, d / se);
            }
            z[o.name] = worst;
        }
        for (std::size_t k = 0; k < ens.mean.size(); ++k) max_td = std::max(max_td, trace_distance(ens.mean[k], me.states[k]));
        j["comparison"] = {{"max_trace_distance", max_td},
                           {"threshold_3_over_sqrt_n", 3.0 / std::sqrt(static_cast<double>(ens.n_traj))},
                           {"max_abs_difference_over_stderr", z}};
    }
    j["files"] = {rc.output + ".csv"};
    write_json(j, rc.output + ".json");
    return j;
}

json cmd_fit(const ConfigMap& config) {
    const std::string& path = config.get("data");
    if (path.empty()) throw ConfigError("fit: data = <csv path> is required");
    const FitModel model = parse_fit_model(config.get("fit_model"));
    const TimeSeriesDataset data = read_dataset_csv(path);
    const FitResult fr = fit(data, model);

    json j = header("fit", config);
    j["model"] = to_string(model);
    j["points"] = data.size();
    j["fit"] = fr.to_json();
    const std::string tname = model == FitModel::exp_decay ? "T1" : "T2";
    j["summary"] = {{tname + "_us", fr.value(tname) * 1e6}, {"sigma_" + tname + "_us", fr.sigma(tname) * 1e6}};
    if (model == FitModel::ramsey) j["summary"]["f_hz"] = fr.value("f");
    const long nb = config.integer("bootstrap");
    if (nb > 0) {
        const auto bs = bootstrap_sigmas(data, model, static_cast<std::size_t>(nb), static_cast<std::uint64_t>(config.integer("seed")));
        json b = json::object();
        for (std::size_t i = 0; i < fr.names.size(); ++i) b[fr.names[i]] = bs[i];
        j["bootstrap_sigmas"] = b;
    }
    write_json(j, config.get("output") + ".json");
    return j;
}

json cmd_bounds(const ConfigMap& config) {
    const RunConfig rc = RunConfig::from(config);
    BoundsInputs in;
    in.t1 = {config.number("t1_us") * 1e-6, config.number("sigma_t1_us") * 1e-6};
    in.t2 = {config.number("t2_us") * 1e-6, config.number("sigma_t2_us") * 1e-6};
    in.epsilon = {config.number("epsilon"), config.number("sigma_epsilon")};
    in.device = rc.device;
    in.propagation = parse_propagation(config.get("propagation"));
    json j = header("bounds", config);
    j["report"] = bounds_report(in);
    write_json(j, rc.output + ".json");
    return j;
}

json cmd_wigner(const ConfigMap& config) {
    const RunConfig rc = RunConfig::from(config);
    const GridSpec grid = grid_from(config);
    const std::string& which = config.get("wigner_state");
    Matrix rho;
    if (which == "initial") {
        rho = DensityMatrix::pure(rc.initial.vector(rc.dim)).matrix();
    } else if (which == "final") {
        rho = run_evolution(rc).states.back();
    } else if (which == "ground") {
        rho = DensityMatrix::pure(deformed_ground_state(config.number("ground_epsilon"), rc.dim)).matrix();
    } else {
        throw ConfigError("wigner_state: unknown value '" + which + "' (initial, final, ground)");
    }
    const WignerGrid w = wigner(DensityMatrix(rho), grid);
    {
        auto out = open_output(rc.output + "_wigner.csv");
        write_wigner_csv(w, out);
    }
    json j = header("wigner", config);
    j["captured_mass"] = w.captured_mass;
    j["warning"] = w.warning ? json(*w.warning) : json(nullptr);
    if (config.flag("fit_ellipticity")) {
        try {
            const Ellipticity e = ellipticity_from_wigner(w);
            j["ellipticity"] = {{"epsilon", e.epsilon.value},
                                {"sigma", e.epsilon.sigma},
                                {"var_max", e.var_max},
                                {"var_min", e.var_min},
                                {"major_axis_angle", e.angle},
                                {"variance_ratio", e.var_max / e.var_min}};
        } catch (const NumericFailure& err) {
            j["ellipticity"] = {{"error", err.what()}};
        }
    }
    j["files"] = {rc.output + "_wigner.csv"};
    write_json(j, rc.output + ".json");
    return j;
}

json cmd_analytic(const ConfigMap& config) {
    const RunConfig rc = RunConfig::from(config);
    const bool gup = rc.model == ModelKind::gup_markov || rc.model == ModelKind::gup_nonmarkov;
    if (!gup && rc.model != ModelKind::breuer) throw ConfigError("analytic: model must be gup-markov, gup-nonmarkov or breuer");
    const double rate = gup ? gup_rate(rc.params) : breuer_rate(rc.params);
    if (!(rate > 0.0)) throw ConfigError("analytic: the decoherence rate is zero (set omega_tau_g / omega_tau_d)");
    const double tau = 1.0 / rate;
    const double gamma = damping_rate(rc.params);

    std::optional<std::string> warning;
    auto out = open_output(rc.output + ".csv");
    out << "t_omega,t_seconds,p00,p11,re_rho_01,im_rho_01,abs_rho_01\n" << std::setprecision(17);
    const double step = rc.dt * static_cast<double>(rc.sample_every);
    const auto n = static_cast<std::size_t>(std::ceil(rc.t_end / step - 1e-9));
    for (std::size_t k = 0; k <= n; ++k) {
        const double t = std::min(step * static_cast<double>(k), rc.t_end);
        double p00 = 0, p11 = 0;
        cplx coh;
        if (gup) {
            auto c = gup_coherence01(t, gamma, tau, rc.params.beta_bar, rc.params.ap_hw);
            auto p = gup_populations(t, gamma, tau);
            coh = c.value;
            p00 = p.value.p00;
            p11 = p.value.p11;
            if (!warning) warning = c.warning;
        } else {
            auto b = breuer_observables(t, gamma, tau);
            coh = b.value.coh01;
            p00 = b.value.p00;
            p11 = b.value.p11;
            if (!warning) warning = b.warning;
        }
        out << t << ',' << t / rc.params.omega << ',' << p00 << ',' << p11 << ',' << coh.real() << ',' << coh.imag()
            << ',' << std::abs(coh) << '\n';
    }

    json j = header("analytic", config);
    j["model"] = model_json(rc);
    j["slopes"] = gup ? json{{"p00", 6.0 / 8.0}, {"p11", 45.0 / 8.0}, {"coherence", 30.0 / 8.0}}
                      : json{{"p00", 1.0 / 8.0}, {"p11", 3.0 / 8.0}, {"coherence", 3.0 / 8.0}};
    j["c_correlator_zero_lag"] = c_correlator(0.0, 0.0, rc.params.beta_bar, rc.params.ap_hw).real();
    json table = json::array();
    for (auto [m, nn] : std::vector<std::pair<Index, Index>>{{0, 0}, {0, 2}, {0, 4}, {1, 1}, {1, 3}, {1, 5}}) {
        table.push_back({{"m", m}, {"n", nn}, {"value_at_tau_0", k2_matrix_element(m, nn, 0.0).real()}});
    }
    j["k2_table"] = table;
    j["warning"] = warning ? json(*warning) : json(nullptr);
    j["files"] = {rc.output + ".csv"};
    write_json(j, rc.output + ".json");
    return j;
}

json cmd_synth(const ConfigMap& config) {
    SynthSpec s;
    s.model = parse_fit_model(config.get("synth_model"));
    s.amplitude = config.number("synth_amplitude");
    s.decay_time = config.number("synth_decay_us") * 1e-6;
    s.frequency = config.number("synth_frequency_hz");
    s.phase = config.number("synth_phase");
    s.offset = config.number("synth_offset");
    s.t_max = config.number("synth_t_max_us") * 1e-6;
    const long pts = config.integer("synth_points");
    if (pts < 4) throw ConfigError("synth_points: must be >= 4");
    s.n_points = static_cast<std::size_t>(pts);
    s.noise_sigma = config.number("synth_noise");
    s.seed = static_cast<std::uint64_t>(config.integer("seed"));
    const TimeSeriesDataset d = synthesize_dataset(s);
    const std::string path = config.get("output") + ".csv";
    {
        auto out = open_output(path);
        write_dataset_csv(d, out);
    }
    json j = header("synth", config);
    j["points"] = d.size();
    j["files"] = {path};
    return j;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"sfd: open-system dynamics and bounds for a deformed-commutator oscillator", "sfd"};
    app.require_subcommand(1);
    std::string config_path;
    std::vector<std::string> overrides;
    struct Command {
        const char* name;
        const char* help;
        json (*run)(const ConfigMap&);
    };
    const std::vector<Command> commands = {
        {"simulate", "integrate a master equation and overlay the closed-form curves", cmd_simulate},
        {"ensemble", "average stochastic trajectories", cmd_ensemble},
        {"fit", "fit T1 (exp) or Ramsey (ramsey) data from t_us,y[,sigma] CSV", cmd_fit},
        {"bounds", "rate solvers and parameter bounds from T1, T2 and epsilon", cmd_bounds},
        {"wigner", "Wigner function on a grid and Gaussian ellipticity fit", cmd_wigner},
        {"analytic", "closed-form decay curves", cmd_analytic},
        {"synth", "write a synthetic T1/Ramsey dataset", cmd_synth},
    };
    for (const auto& c : commands) {
        auto* sc = app.add_subcommand(c.name, c.help);
        sc->add_option("-c,--config", config_path, "key=value config file");
        sc->add_option("overrides", overrides, "key=value overrides applied after the file");
    }
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    try {
        ConfigMap config;
        if (!config_path.empty()) config.load_file(config_path);
        for (const auto& o : overrides) config.set(o);
        for (const auto& c : commands) {
            if (app.got_subcommand(c.name)) {
                out << c.run(config).dump(2) << '\n';
                return kExitOk;
            }
        }
        return kExitConfig;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const InvalidDimension& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const UnsupportedElement& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ModelInconsistency& e) {
        err << "model inconsistency: " << e.what() << '\n';
        return kExitModel;
    } catch (const Error& e) {
        err << "numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    }
}

} // namespace sfd
