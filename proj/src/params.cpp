// params.cpp: Parameter validation and unit conversions

#include "sfd/params.hpp"

#include <limits>

#include "sfd/errors.hpp"

namespace sfd {

KernelSpec KernelSpec::exponential(double tau) {
    if (!(tau > 0.0)) throw ConfigError("exponential kernel requires tau > 0");
    return {Kind::exponential, tau};
}

double KernelSpec::value(double u) const {
    if (is_delta()) throw ConfigError("delta kernel has no pointwise value");
    return std::exp(-std::abs(u) / tau) / (2.0 * tau);
}

KernelSpec KernelSpec::scaled(double omega) const {
    if (is_delta()) return *this;
    return {kind, tau * omega};
}

void ModelParams::validate() const {
    if (!(omega > 0.0)) throw ConfigError("omega must be > 0");
    if (!(gamma >= 0.0)) throw ConfigError("gamma must be >= 0");
    if (!(kappa >= 0.0)) throw ConfigError("kappa must be >= 0");
    if (!(tau_c >= 0.0)) throw ConfigError("tau_c must be >= 0");
    if (!(ap_hw >= 0.0)) throw ConfigError("ap_hw must be >= 0");
    if (!std::isfinite(beta_bar)) throw ConfigError("beta_bar must be finite");
    if (!kernel.is_delta() && !(kernel.tau > 0.0)) throw ConfigError("exponential kernel requires tau > 0");
}

ModelParams& ModelParams::set_omega_tau_g(double omega_tau_g) {
    if (!(omega_tau_g > 0.0)) throw ConfigError("omega*tau_G must be > 0");
    if (!(ap_hw > 0.0)) throw ConfigError("ap_hw must be > 0 to derive kappa from tau_G");
    const double tau_g = omega_tau_g / omega;
    kappa = 1.0 / (8.0 * ap_hw * ap_hw * omega * omega * tau_g);
    return *this;
}

ModelParams& ModelParams::set_omega_tau_d(double omega_tau_d) {
    if (!(omega_tau_d > 0.0)) throw ConfigError("omega*tau_D must be > 0");
    const double tau_d = omega_tau_d / omega;
    tau_c = 1.0 / (tau_d * omega * omega);
    return *this;
}

DeviceProfile DeviceProfile::hbar_16ug() {
    return {"hbar-16ug", 5.96e9, 16.2e-9, 2.9e-19, 1.5e-33};
}

DeviceProfile DeviceProfile::by_name(const std::string& name) {
    if (name == "hbar-16ug") return hbar_16ug();
    throw ConfigError("unknown device profile '" + name + "'");
}

double tau_g_seconds(const ModelParams& p) {
    const double rate = gup_rate(p);
    return rate > 0.0 ? 1.0 / (rate * p.omega) : std::numeric_limits<double>::infinity();
}

double tau_d_seconds(const ModelParams& p) {
    const double rate = breuer_rate(p);
    return rate > 0.0 ? 1.0 / (rate * p.omega) : std::numeric_limits<double>::infinity();
}

} // namespace sfd
