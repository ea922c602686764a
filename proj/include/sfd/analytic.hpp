// analytic.hpp: Closed-form decay laws, kernel integrals and matrix-element tables
//
// Oscillator quantities are dimensionless (t = omega t, energies in hbar omega,
// rates in units of omega). The free-particle formula is in SI units.

#pragma once

#include <optional>
#include <string>

#include "sfd/fock.hpp"
#include "sfd/params.hpp"

namespace sfd {

// Value plus a warning when it lies outside the first-order validity window.
template <class T>
struct Checked {
    T value;
    std::optional<std::string> warning;
};

// First-order formulas are trusted for t / tau_decay up to this ratio.
inline constexpr double kValidityRatio = 0.2;

// int_0^t dt' int_0^t' dt'' f(t' - t''); t and kernel.tau in the same units.
double g_kernel(double t, const KernelSpec& kernel);

struct FreeParticlePair {
    double p_a;   // kg m/s
    double p_b;   // kg m/s
    double mass;  // kg
};

// rho_ab(t) / rho_ab(0) for a free particle; t in seconds, kernel tau in seconds.
cplx free_particle_coherence(const FreeParticlePair& pair, double t, const ModelParams& params);

// E_n / (hbar omega) including the anharmonic shift of H_RWA.
double level_energy(Index n, double beta_bar, double ap_hw);

// <m| K^{2I}(tau) |n> / (hbar omega)^2 from the closed-form table (rows 0 and 1 and their
// conjugates). Throws UnsupportedElement elsewhere; use heisenberg_k2 for those.
cplx k2_matrix_element(Index m, Index n, double tau, double beta_bar = 0.0, double ap_hw = 0.0);

// C(tau, t') / (hbar omega)^4.
cplx c_correlator(double tau, double t_prime, double beta_bar, double ap_hw);

// Superposition (|0> + |1>)/sqrt2: <0|rho|1>(t).
Checked<cplx> gup_coherence01(double t, double gamma, double tau_g, double beta_bar = 0.0, double ap_hw = 0.0);

struct Populations {
    double p00;  // <0|rho|0> starting from |0>
    double p11;  // <1|rho|1> starting from |1>
};
Checked<Populations> gup_populations(double t, double gamma, double tau_g);

struct BreuerObservables {
    cplx coh01;
    double p00;
    double p11;
};
Checked<BreuerObservables> breuer_observables(double t, double gamma, double tau_d);

// <n1| rho(t) |n2> under H_RWA plus damping, from the recursion in n summed exactly
// (matrix exponential of the bidiagonal chain). n_max < 0 means the full rho0.
// Throws NumericFailure when rho0 weight beyond n_max exceeds 1e-10.
cplx damping_series_element(Index n1, Index n2, double t, double gamma, double beta_bar, double ap_hw,
                            const Matrix& rho0, Index n_max = -1);

// First-order quadrature variance of the deformed ground state, 1/2 - (eps/4) cos(2 theta).
// theta is measured from the minimum-variance axis, which is the momentum axis.
double ground_state_variance(double theta, double epsilon);

// Same variance from the ground state of N + 1/2 + (2 eps / 3) K^2 on dim levels,
// with theta measured from the position axis (quadrature()).
double deformed_ground_state_variance(double theta, double epsilon, Index dim = 40);
Vector deformed_ground_state(double epsilon, Index dim = 40);

// Max/min variance ratio (2 + eps)/(2 - eps) and its inverse.
double variance_ratio(double epsilon);
double epsilon_from_ratio(double ratio);

} // namespace sfd
