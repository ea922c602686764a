// analytic.cpp: Closed-form expressions

#include "sfd/analytic.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "sfd/errors.hpp"

namespace sfd {

namespace {

std::optional<std::string> validity(double t, double tau_decay, const char* what) {
    if (!(tau_decay > 0.0)) throw ConfigError(std::string(what) + ": decay time must be > 0");
    if (t < 0.0) throw ConfigError(std::string(what) + ": t must be >= 0");
    const double ratio = t / tau_decay;
    if (ratio <= kValidityRatio) return std::nullopt;
    std::ostringstream msg;
    msg << what << ": t/tau = " << ratio << " exceeds the first-order validity window " << kValidityRatio;
    return msg.str();
}

cplx phase(double angle) { return std::polar(1.0, angle); }

} // namespace

double g_kernel(double t, const KernelSpec& kernel) {
    if (t < 0.0) throw ConfigError("g_kernel: t must be >= 0");
    if (kernel.is_delta()) return 0.5 * t;
    const double tau = kernel.tau;
    return 0.5 * t - 0.5 * tau * (-std::expm1(-t / tau));
}

cplx free_particle_coherence(const FreeParticlePair& pair, double t, const ModelParams& params) {
    if (!(pair.mass > 0.0)) throw ConfigError("free particle mass must be > 0");
    if (t < 0.0) throw ConfigError("free_particle_coherence: t must be >= 0");
    const double hbar = PhysicalConstants::hbar;
    const double ap = PhysicalConstants::a_p(pair.mass);
    const double ea = pair.p_a * pair.p_a / (2.0 * pair.mass);
    const double eb = pair.p_b * pair.p_b / (2.0 * pair.mass);
    const double de1 = ea - eb;
    const double de2 = ea * ea - eb * eb;
    const double angle = -(de1 + 4.0 * ap * de2 * params.beta_bar) * t / hbar;
    const double decay = 16.0 * ap * ap * params.kappa / (hbar * hbar) * de2 * de2 * g_kernel(t, params.kernel);
    return std::exp(-decay) * phase(angle);
}

double level_energy(Index n, double beta_bar, double ap_hw) {
    const double nd = static_cast<double>(n);
    return (nd + 0.5) + 0.375 * ap_hw * beta_bar * (nd * nd + nd + 0.5);
}

cplx k2_matrix_element(Index m, Index n, double tau, double beta_bar, double ap_hw) {
    if (m < 0 || n < 0) throw ConfigError("k2_matrix_element: indices must be >= 0");
    if ((m - n) % 2 != 0) return 0.0;
    if (m > n) return std::conj(k2_matrix_element(n, m, tau, beta_bar, ap_hw));
    // Now m <= n.
    if (m > 1) {
        std::ostringstream msg;
        msg << "k2_matrix_element(" << m << ", " << n << ") is outside the closed-form table; "
            << "use heisenberg_k2 for arbitrary elements";
        throw UnsupportedElement(msg.str());
    }
    if (n - m > 4) return 0.0;
    double amplitude = 0.0;
    const Index key = 10 * m + n;
    switch (key) {
        case 0: amplitude = 3.0 / 16.0; break;
        case 2: amplitude = -3.0 * std::numbers::sqrt2 / 8.0; break;
        case 4: amplitude = std::sqrt(6.0) / 8.0; break;
        case 11: amplitude = 15.0 / 16.0; break;
        case 13: amplitude = -5.0 * std::sqrt(6.0) / 8.0; break;
        case 15: amplitude = std::sqrt(30.0) / 8.0; break;
        default: return 0.0;
    }
    const double de = level_energy(m, beta_bar, ap_hw) - level_energy(n, beta_bar, ap_hw);
    return amplitude * phase(de * tau);
}

cplx c_correlator(double tau, double t_prime, double beta_bar, double ap_hw) {
    auto e = [&](Index j) { return level_energy(j, beta_bar, ap_hw); };
    const double lag = tau - t_prime;
    return 9.0 / 32.0 + (9.0 / 64.0) * phase((e(0) - e(2)) * lag) + (3.0 / 64.0) * phase((e(0) - e(4)) * lag) +
           (75.0 / 64.0) * phase(-(e(1) - e(3)) * lag) + (15.0 / 64.0) * phase(-(e(1) - e(5)) * lag);
}

Checked<cplx> gup_coherence01(double t, double gamma, double tau_g, double beta_bar, double ap_hw) {
    auto warning = validity(t, tau_g, "gup_coherence01");
    const double de = level_energy(0, beta_bar, ap_hw) - level_energy(1, beta_bar, ap_hw);
    const cplx value = 0.5 * phase(-de * t) * std::exp(-0.5 * gamma * t) * (1.0 - (30.0 / 8.0) * t / tau_g);
    return {value, std::move(warning)};
}

Checked<Populations> gup_populations(double t, double gamma, double tau_g) {
    auto warning = validity(t, tau_g, "gup_populations");
    const Populations p{1.0 - (6.0 / 8.0) * t / tau_g, std::exp(-gamma * t) * (1.0 - (45.0 / 8.0) * t / tau_g)};
    return {p, std::move(warning)};
}

Checked<BreuerObservables> breuer_observables(double t, double gamma, double tau_d) {
    auto warning = validity(t, tau_d, "breuer_observables");
    const double de = level_energy(0, 0.0, 0.0) - level_energy(1, 0.0, 0.0);
    BreuerObservables b;
    b.coh01 = 0.5 * phase(-de * t) * std::exp(-0.5 * gamma * t) * (1.0 - (3.0 / 8.0) * t / tau_d);
    b.p00 = 1.0 - (1.0 / 8.0) * t / tau_d;
    b.p11 = std::exp(-gamma * t) * (1.0 - (3.0 / 8.0) * t / tau_d);
    return {b, std::move(warning)};
}

cplx damping_series_element(Index n1, Index n2, double t, double gamma, double beta_bar, double ap_hw,
                            const Matrix& rho0, Index n_max) {
    const Index dim = rho0.rows();
    if (rho0.cols() != dim) throw InvalidDimension("damping_series_element: rho0 must be square");
    if (n1 < 0 || n2 < 0 || n1 >= dim || n2 >= dim) throw ConfigError("damping_series_element: index outside rho0");
    if (!(gamma >= 0.0)) throw ConfigError("damping_series_element: gamma must be >= 0");
    if (n_max < 0) n_max = dim - 1;
    n_max = std::min(n_max, dim - 1);

    const Index top = std::max(n1, n2);
    if (top > n_max) throw ConfigError("damping_series_element: element beyond the truncation level");
    double tail = 0.0;
    for (Index j = n_max - top + 1; top + j < dim; ++j) tail += std::abs(rho0(n1 + j, n2 + j));
    if (tail > 1e-10) {
        std::ostringstream msg;
        msg << "damping series truncated at n_max = " << n_max << " drops initial weight " << tail;
        throw NumericFailure(msg.str());
    }

    const Index len = n_max - top + 1;
    Matrix b = Matrix::Zero(len, len);
    Vector r0(len);
    for (Index j = 0; j < len; ++j) {
        const Index a = n1 + j;
        const Index c = n2 + j;
        const double de = level_energy(a, beta_bar, ap_hw) - level_energy(c, beta_bar, ap_hw);
        b(j, j) = cplx(-0.5 * gamma * static_cast<double>(a + c), -de);
        if (j + 1 < len) b(j, j + 1) = gamma * std::sqrt(static_cast<double>((a + 1) * (c + 1)));
        r0(j) = rho0(a, c);
    }
    const Matrix prop = (t * b).exp();
    return (prop.row(0) * r0)(0);
}

double ground_state_variance(double theta, double epsilon) {
    if (!(std::abs(epsilon) < 2.0)) throw ConfigError("ground_state_variance: |epsilon| must be < 2");
    return 0.5 - 0.25 * epsilon * std::cos(2.0 * theta);
}

Vector deformed_ground_state(double epsilon, Index dim) {
    const Matrix h = number(dim).matrix() + (2.0 * epsilon / 3.0) * kinetic_squared(dim).matrix();
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.adjoint()));
    Vector g = es.eigenvectors().col(0);
    // Fix the global phase so the vacuum component is real and positive.
    const Index k = 0;
    if (std::abs(g(k)) > 0.0) g *= std::conj(g(k)) / std::abs(g(k));
    return g;
}

double deformed_ground_state_variance(double theta, double epsilon, Index dim) {
    const Vector g = deformed_ground_state(epsilon, dim);
    const Matrix q = quadrature(theta, dim).matrix();
    const cplx mean = g.dot(q * g);
    const cplx second = g.dot(q * (q * g));
    return second.real() - mean.real() * mean.real();
}

double variance_ratio(double epsilon) {
    if (!(std::abs(epsilon) < 2.0)) throw ConfigError("variance_ratio: |epsilon| must be < 2");
    return (2.0 + epsilon) / (2.0 - epsilon);
}

double epsilon_from_ratio(double ratio) {
    if (!(ratio > 0.0)) throw ConfigError("epsilon_from_ratio: ratio must be > 0");
    return 2.0 * (ratio - 1.0) / (ratio + 1.0);
}

} // namespace sfd
