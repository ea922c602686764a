// integrate.hpp: Fixed-step RK4 evolution of density matrices

#pragma once

#include <iosfwd>
#include <numbers>
#include <string>
#include <vector>

#include "sfd/fock.hpp"
#include "sfd/generators.hpp"
#include "sfd/params.hpp"

namespace sfd {

// 200 steps per oscillator period.
inline constexpr double kDefaultDt = 2.0 * std::numbers::pi / 200.0;

struct StepDiagnostics {
    double trace_drift = 0.0;      // |Tr rho - 1| before renormalization
    double hermiticity_drift = 0.0;  // max |rho - rho^dag| before re-Hermitization
    double min_eigenvalue = 0.0;   // after correction; NaN when not checked
};

struct EvolveOptions {
    double dt = kDefaultDt;
    std::size_t sample_every = 1;
    // Eigenvalue check cadence in steps; 0 disables it.
    std::size_t positivity_every = 1;
    double positivity_tol = 1e-6;
    // Physical omega, only used to fill the seconds column.
    double omega = 1.0;
};

struct EvolutionResult {
    std::vector<double> t_omega;
    std::vector<double> t_seconds;
    std::vector<Matrix> states;
    std::vector<StepDiagnostics> diagnostics;  // one entry per step

    double max_trace_drift() const;
    double max_hermiticity_drift() const;
    double min_eigenvalue() const;
};

// Integrates d rho/d(omega t) = rhs(t, rho) from 0 to t_end. Samples t = 0, every
// sample_every steps, and the final step. Throws NumericFailure on loss of positivity.
EvolutionResult evolve(const DensityMatrix& rho0, const Rhs& rhs, double t_end, const EvolveOptions& options = {});

// GUP master equation with the exponential memory kernel plus damping. Requires
// dt <= tau/10 (tau in units of 1/omega).
EvolutionResult evolve_nonmarkov(const DensityMatrix& rho0, const ModelParams& params, double t_end,
                                 const EvolveOptions& options = {},
                                 HamiltonianKind kind = HamiltonianKind::rwa);

// Observable declared by name: rho_11 (real diagonal), re_rho_01, im_rho_01, abs_rho_01.
struct Observable {
    enum class Part { re, im, abs };
    std::string name;
    Index row = 0;
    Index col = 0;
    Part part = Part::re;

    static Observable parse(const std::string& name);
    double operator()(const Matrix& rho) const;
};

std::vector<Observable> parse_observables(const std::string& comma_separated);

// CSV: t_omega,t_seconds,<obs>...
void write_observables_csv(const EvolutionResult& result, const std::vector<Observable>& observables,
                           std::ostream& out);

} // namespace sfd
