// integrate.cpp: RK4 stepping with re-Hermitization and drift logging

#include "sfd/integrate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>

#include "sfd/errors.hpp"

namespace sfd {

double EvolutionResult::max_trace_drift() const {
    double m = 0.0;
    for (const auto& d : diagnostics) m = std::max(m, d.trace_drift);
    return m;
}

double EvolutionResult::max_hermiticity_drift() const {
    double m = 0.0;
    for (const auto& d : diagnostics) m = std::max(m, d.hermiticity_drift);
    return m;
}

double EvolutionResult::min_eigenvalue() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& d : diagnostics) {
        if (!std::isnan(d.min_eigenvalue)) m = std::min(m, d.min_eigenvalue);
    }
    return m;
}

EvolutionResult evolve(const DensityMatrix& rho0, const Rhs& rhs, double t_end, const EvolveOptions& options) {
    if (!(options.dt > 0.0)) throw ConfigError("evolve: dt must be > 0");
    if (!(t_end >= 0.0)) throw ConfigError("evolve: t_end must be >= 0");
    if (options.sample_every == 0) throw ConfigError("evolve: sample_every must be >= 1");

    const double dt = options.dt;
    const auto n_steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));

    EvolutionResult result;
    result.diagnostics.reserve(n_steps);
    auto record = [&](double t, const Matrix& rho) {
        result.t_omega.push_back(t);
        result.t_seconds.push_back(t / options.omega);
        result.states.push_back(rho);
    };

    Matrix rho = rho0.matrix();
    record(0.0, rho);
    for (std::size_t step = 1; step <= n_steps; ++step) {
        const double t = dt * static_cast<double>(step - 1);
        // The last step is shortened so that the run ends exactly at t_end.
        const double h = step == n_steps ? t_end - t : dt;
        const Matrix k1 = rhs(t, rho);
        const Matrix k2 = rhs(t + 0.5 * h, rho + (0.5 * h) * k1);
        const Matrix k3 = rhs(t + 0.5 * h, rho + (0.5 * h) * k2);
        const Matrix k4 = rhs(t + h, rho + h * k3);
        rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        StepDiagnostics diag;
        diag.trace_drift = std::abs(rho.trace() - cplx(1.0));
        diag.hermiticity_drift = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
        rho = 0.5 * (rho + rho.adjoint());
        rho /= rho.trace().real();
        diag.min_eigenvalue = std::numeric_limits<double>::quiet_NaN();
        if (options.positivity_every != 0 && step % options.positivity_every == 0) {
            Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
            diag.min_eigenvalue = es.eigenvalues().minCoeff();
            if (diag.min_eigenvalue < -options.positivity_tol) {
                std::ostringstream msg;
                msg << "positivity lost at step " << step << " (t = " << t + h
                    << "): min eigenvalue " << diag.min_eigenvalue;
                throw NumericFailure(msg.str());
            }
        }
        result.diagnostics.push_back(diag);

        if (step % options.sample_every == 0 || step == n_steps) record(step == n_steps ? t_end : dt * static_cast<double>(step), rho);
    }
    return result;
}

EvolutionResult evolve_nonmarkov(const DensityMatrix& rho0, const ModelParams& params, double t_end,
                                 const EvolveOptions& options, HamiltonianKind kind) {
    params.validate();
    if (params.kernel.is_delta()) throw ConfigError("evolve_nonmarkov needs an exponential kernel");
    const double tau = params.kernel.tau * params.omega;
    if (options.dt > tau / 10.0) {
        std::ostringstream msg;
        msg << "evolve_nonmarkov: dt = " << options.dt << " exceeds tau/10 = " << tau / 10.0;
        throw ConfigError(msg.str());
    }
    auto memory = std::make_shared<GupMemory>(rho0.dim(), params, kind);
    Rhs rhs = [memory](double t, const Matrix& rho) { return (*memory)(t, rho); };
    if (params.gamma > 0.0) {
        auto damping = std::make_shared<Damping>(rho0.dim(), damping_rate(params));
        rhs = rhs + Rhs([damping](double t, const Matrix& rho) { return (*damping)(t, rho); });
    }
    EvolveOptions opts = options;
    opts.omega = params.omega;
    return evolve(rho0, rhs, t_end, opts);
}

// --- observables -----------------------------------------------------------------

Observable Observable::parse(const std::string& name) {
    Observable obs;
    obs.name = name;
    std::string rest = name;
    if (rest.rfind("re_", 0) == 0) {
        obs.part = Part::re;
        rest = rest.substr(3);
    } else if (rest.rfind("im_", 0) == 0) {
        obs.part = Part::im;
        rest = rest.substr(3);
    } else if (rest.rfind("abs_", 0) == 0) {
        obs.part = Part::abs;
        rest = rest.substr(4);
    }
    if (rest.rfind("rho_", 0) != 0 || rest.size() < 6) throw ConfigError("unknown observable '" + name + "'");
    const std::string idx = rest.substr(4);
    // Two digits "01", or "m_n" for levels >= 10.
    const auto sep = idx.find('_');
    const bool digits = std::all_of(idx.begin(), idx.end(), [](char c) {
        return std::isdigit(static_cast<unsigned char>(c)) || c == '_';
    });
    if (!digits || std::count(idx.begin(), idx.end(), '_') > 1) throw ConfigError("unknown observable '" + name + "'");
    try {
        if (sep != std::string::npos) {
            obs.row = std::stol(idx.substr(0, sep));
            obs.col = std::stol(idx.substr(sep + 1));
        } else if (idx.size() == 2 && std::isdigit(static_cast<unsigned char>(idx[0])) &&
                   std::isdigit(static_cast<unsigned char>(idx[1]))) {
            obs.row = idx[0] - '0';
            obs.col = idx[1] - '0';
        } else {
            throw ConfigError("");
        }
    } catch (const std::exception&) {
        throw ConfigError("unknown observable '" + name + "'");
    }
    if (obs.row < 0 || obs.col < 0 || obs.row > 9999 || obs.col > 9999) throw ConfigError("unknown observable '" + name + "'");
    return obs;
}

double Observable::operator()(const Matrix& rho) const {
    if (row >= rho.rows() || col >= rho.cols()) throw ConfigError("observable " + name + " outside the truncated space");
    const cplx v = rho(row, col);
    switch (part) {
        case Part::re: return v.real();
        case Part::im: return v.imag();
        case Part::abs: return std::abs(v);
    }
    return v.real();
}

std::vector<Observable> parse_observables(const std::string& comma_separated) {
    std::vector<Observable> out;
    std::stringstream ss(comma_separated);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
        if (!item.empty()) out.push_back(Observable::parse(item));
    }
    if (out.empty()) throw ConfigError("no observables declared");
    return out;
}

void write_observables_csv(const EvolutionResult& result, const std::vector<Observable>& observables,
                           std::ostream& out) {
    out << "t_omega,t_seconds";
    for (const auto& o : observables) out << ',' << o.name;
    out << '\n' << std::setprecision(17);
    for (std::size_t k = 0; k < result.states.size(); ++k) {
        out << result.t_omega[k] << ',' << result.t_seconds[k];
        for (const auto& o : observables) out << ',' << o(result.states[k]);
        out << '\n';
    }
}

} // namespace sfd
