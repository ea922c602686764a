// params.hpp: Physical constants, noise kernels and model parameters
//
// Everything here is in SI units. The numerical core works in units
// hbar = omega = 1 (energies in hbar*omega, time as omega*t); the helpers at the
// bottom of this header are the only place where the two are related.

#pragma once

#include <cmath>
#include <numbers>
#include <string>

namespace sfd {

struct PhysicalConstants {
    static constexpr double hbar = 1.054571817e-34;          // J s
    static constexpr double gravitational = 6.67430e-11;    // m^3 kg^-1 s^-2
    static constexpr double speed_of_light = 299792458.0;   // m/s

    static double planck_length() { return std::sqrt(hbar * gravitational / std::pow(speed_of_light, 3)); }
    static double planck_time() { return planck_length() / speed_of_light; }
    static double planck_mass() { return std::sqrt(hbar * speed_of_light / gravitational); }
    static double planck_energy() { return planck_mass() * speed_of_light * speed_of_light; }

    // a_P = m l_P^2 / hbar^2, in 1/J.
    static double a_p(double mass_kg) { return mass_kg * std::pow(planck_length(), 2) / (hbar * hbar); }
    // Dimensionless a_P * hbar * omega.
    static double ap_hw(double mass_kg, double omega) { return a_p(mass_kg) * hbar * omega; }
};

// Normalized correlation function f(t - t') of the deformation-parameter noise.
struct KernelSpec {
    enum class Kind { delta, exponential };

    Kind kind = Kind::delta;
    double tau = 0.0;  // correlation time, exponential only

    static KernelSpec delta() { return {}; }
    static KernelSpec exponential(double tau);

    // f(u) = exp(-|u|/tau) / (2 tau); the delta kernel has no pointwise value.
    double value(double u) const;
    bool is_delta() const { return kind == Kind::delta; }
    std::string name() const { return is_delta() ? "delta" : "exponential"; }

    // Same kernel with tau measured in units of 1/omega.
    KernelSpec scaled(double omega) const;
};

struct ModelParams {
    double omega = 2.0 * std::numbers::pi * 5.96e9;  // rad/s
    double gamma = 0.0;      // energy relaxation rate, 1/s
    double beta_bar = 0.0;   // mean deformation parameter
    double kappa = 0.0;      // fluctuation amplitude, s
    double tau_c = 0.0;      // metric-fluctuation correlation time, s
    double ap_hw = 1.5e-33;  // a_P hbar omega
    KernelSpec kernel{};

    // Throws ConfigError when an invariant is violated.
    void validate() const;

    // Picks kappa so that omega * tau_G equals the given value.
    ModelParams& set_omega_tau_g(double omega_tau_g);
    // Picks tau_c so that omega * tau_D equals the given value.
    ModelParams& set_omega_tau_d(double omega_tau_d);
};

// Named device profile; "hbar-16ug" is the bulk-acoustic resonator used for the bounds.
struct DeviceProfile {
    std::string name;
    double frequency_hz;
    double mass_kg;
    double x0_m;
    double ap_hw;

    double omega() const { return 2.0 * std::numbers::pi * frequency_hz; }

    static DeviceProfile hbar_16ug();
    static DeviceProfile by_name(const std::string& name);
};

// --- dimensionless rates (units of omega) ----------------------------------

// 1/(omega tau_G) with 1/tau_G = 8 a_P^2 kappa hbar^2 omega^4 = 8 (a_P hbar omega)^2 kappa omega^2.
inline double gup_rate(const ModelParams& p) { return 8.0 * p.ap_hw * p.ap_hw * p.kappa * p.omega; }
// 1/(omega tau_D) with 1/tau_D = tau_c omega^2.
inline double breuer_rate(const ModelParams& p) { return p.tau_c * p.omega; }
inline double damping_rate(const ModelParams& p) { return p.gamma / p.omega; }

// tau_G and tau_D in seconds; +inf when the corresponding noise is off.
double tau_g_seconds(const ModelParams& p);
double tau_d_seconds(const ModelParams& p);

} // namespace sfd
