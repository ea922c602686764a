// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sfd/analytic.hpp"
#include "sfd/estimate.hpp"
#include "sfd/fock.hpp"
#include "sfd/generators.hpp"
#include "sfd/integrate.hpp"
#include "sfd/quadrature.hpp"
#include "sfd/trajectories.hpp"

using namespace sfd;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    // Records a check; the detail line keeps the worst value seen next to its limit.
    void check(bool ok, const std::string& what) {
        if (!ok) pass = false;
        if (!ok || detail.tellp() < 400) detail << (detail.tellp() > 0 ? "; " : "") << what << (ok ? "" : " [fail]");
    }
};

std::string fmt(const char* f, double a, double b) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

std::string fmt(const char* f, double a) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// 1. Interaction-picture K^2 entries against the dense Heisenberg operator.
void matrix_elements(Outcome& o) {
    const double beta = 0.7, ap = 0.04;
    const Operator h = h_rwa(12, beta, ap);
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    const std::pair<Index, Index> entries[] = {{0, 0}, {0, 2}, {0, 4}, {1, 1}, {1, 3}, {1, 5}};
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const double tau = u(rng);
        const Operator k = heisenberg_k2(h, tau);
        for (auto [m, n] : entries) worst = std::max(worst, std::abs(k2_matrix_element(m, n, tau, beta, ap) - k(m, n)));
    }
    o.check(worst < 1e-10, fmt("max |table - dense| = %.2e (tol %.0e)", worst, 1e-10));
}

// 2. Four-point correlator against the nested commutator.
void correlator(Outcome& o) {
    const double beta = 0.6, ap = 0.05;
    const InteractionK2 k(h_rwa(12, beta, ap));
    const Matrix rho = DensityMatrix::superposition01(12).matrix();
    std::mt19937_64 rng(202);
    std::uniform_real_distribution<double> u(-20.0, 20.0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const double tau = u(rng), tp = u(rng);
        const Matrix a = k.at(tau).matrix(), b = k.at(tp).matrix();
        const Matrix inner = b * rho - rho * b;
        const Matrix outer = a * inner - inner * a;
        worst = std::max(worst, std::abs(outer(0, 1) - c_correlator(tau, tp, beta, ap)));
    }
    o.check(worst < 1e-10, fmt("max |C - brute force| = %.2e (tol %.0e)", worst, 1e-10));
    double diag = 0.0;
    for (double t : {-3.0, 0.0, 0.4, 17.0}) diag = std::max(diag, std::abs(c_correlator(t, t, beta, ap) - 15.0 / 8.0));
    o.check(diag < 1e-14, fmt("max |C(t,t) - 15/8| = %.1e", diag));
}

// 3. Markov master equation against the first-order closed forms over the overlay window.
void overlay(Outcome& o) {
    ModelParams p;
    p.omega = 1.0;
    p.ap_hw = 1e-3;
    p.beta_bar = 1.0;
    p.set_omega_tau_g(125e3);
    const Index dim = 20;
    const double t_end = 6000.0, tau = 125e3;
    const EvolveOptions opt{.dt = kDefaultDt, .sample_every = 200, .positivity_every = 1000};
    const GupMarkov gen(dim, p);
    const EvolutionResult r0 = evolve(DensityMatrix::fock(dim, 0), gen, t_end, opt);
    const EvolutionResult r1 = evolve(DensityMatrix::fock(dim, 1), gen, t_end, opt);
    const EvolutionResult rs = evolve(DensityMatrix::superposition01(dim), gen, t_end, opt);
    double d00 = 0, d11 = 0, d01 = 0;
    for (std::size_t k = 0; k < r0.states.size(); ++k) {
        const double t = r0.t_omega[k];
        const auto pops = gup_populations(t, 0.0, tau).value;
        d00 = std::max(d00, std::abs(r0.states[k](0, 0).real() - pops.p00));
        d11 = std::max(d11, std::abs(r1.states[k](1, 1).real() - pops.p11));
        d01 = std::max(d01, std::abs(std::abs(rs.states[k](0, 1)) - std::abs(gup_coherence01(t, 0.0, tau).value)));
    }
    o.check(d00 < 2e-3, fmt("max |dp00| = %.2e (tol %.0e)", d00, 2e-3));
    o.check(d11 < 2e-3, fmt("max |dp11| = %.2e (tol %.0e)", d11, 2e-3));
    o.check(d01 < 2e-3, fmt("max |d|rho01|| = %.2e (tol %.0e)", d01, 2e-3));
}

// 4. Small-time slopes of the master equations.
void slopes(Outcome& o) {
    const Index dim = 12;
    // The c^2 t correction carries large K^8 weights, so the probe time stays well below 1/omega.
    const double tau = 1e4, t = 0.01;
    const EvolveOptions opt{.dt = 1e-4, .sample_every = 100};
    auto three = [&](const Rhs& rhs) {
        const double s00 = (1.0 - evolve(DensityMatrix::fock(dim, 0), rhs, t, opt).states.back()(0, 0).real()) * tau / t;
        const double s11 = (1.0 - evolve(DensityMatrix::fock(dim, 1), rhs, t, opt).states.back()(1, 1).real()) * tau / t;
        const double s01 =
            2.0 * (0.5 - std::abs(evolve(DensityMatrix::superposition01(dim), rhs, t, opt).states.back()(0, 1))) * tau / t;
        return std::array<double, 3>{s00, s11, s01};
    };
    ModelParams g;
    g.omega = 1.0;
    g.ap_hw = 0.01;
    g.beta_bar = 1.0;
    g.set_omega_tau_g(tau);
    const auto sg = three(GupMarkov(dim, g));
    ModelParams b;
    b.omega = 1.0;
    b.set_omega_tau_d(tau);
    const auto sb = three(Breuer(dim, b));
    const std::array<double, 3> eg{6.0 / 8.0, 45.0 / 8.0, 30.0 / 8.0}, eb{1.0 / 8.0, 3.0 / 8.0, 3.0 / 8.0};
    double worst = 0.0;
    for (int i = 0; i < 3; ++i) worst = std::max({worst, rel(sg[i], eg[i]), rel(sb[i], eb[i])});
    std::ostringstream s;
    s << "GUP " << sg[0] * 8 << "/8 " << sg[1] * 8 << "/8 " << sg[2] * 8 << "/8, Breuer " << sb[0] * 8 << "/8 " << sb[1] * 8
      << "/8 " << sb[2] * 8 << "/8";
    o.check(true, s.str());
    o.check(worst < 1e-3, fmt("max relative error %.2e (tol %.0e)", worst, 1e-3));
}

// 5. White-noise ensemble against the Markov master equation.
void trajectories(Outcome& o) {
    ModelParams p;
    p.omega = 1.0;
    p.ap_hw = 0.01;
    p.beta_bar = 1.0;
    p.set_omega_tau_g(100.0);
    const Index dim = 16;
    EnsembleOptions eo;
    eo.n_traj = 2000;
    eo.seed = 2024;
    eo.t_end = 5.0;
    eo.dt = 0.005;
    eo.sample_every = 100;
    const Vector psi0 = (fock_vector(dim, 0) + fock_vector(dim, 1)) / std::sqrt(2.0);
    const EnsembleResult ens = ensemble_average(psi0, p, eo);
    const EvolutionResult ref =
        evolve(DensityMatrix::superposition01(dim), GupMarkov(dim, p), eo.t_end, {.dt = 0.001, .sample_every = 500});
    const double limit = 3.0 / std::sqrt(2000.0);
    double worst = 0.0;
    std::size_t checkpoints = 0;
    for (std::size_t k = 1; k < ens.mean.size(); ++k) {
        worst = std::max(worst, trace_distance(ens.mean[k], ref.states[k]));
        ++checkpoints;
    }
    o.check(checkpoints == 10, fmt("%.0f checkpoints", static_cast<double>(checkpoints)));
    o.check(worst < limit, fmt("max trace distance %.3e (tol %.3e)", worst, limit));
    const double purity_end = (ens.mean.back() * ens.mean.back()).trace().real();
    o.check(purity_end < 1.0 - 1e-3, fmt("final purity %.4f", purity_end));

    EnsembleOptions again = eo;
    again.threads = 1;
    const EnsembleResult rerun = ensemble_average(psi0, p, again);
    bool identical = rerun.mean.size() == ens.mean.size();
    for (std::size_t k = 0; identical && k < ens.mean.size(); ++k) identical = rerun.mean[k] == ens.mean[k];
    o.check(identical, "same seed on 1 thread: bit-identical means");
}

// 6. Rate solvers on the measured coherence times.
void rates(Outcome& o) {
    const double us = 1e-6;
    const Measured t1{85.8 * us, 1.5 * us}, t2{147.3 * us, 2.6 * us};
    const RateSolution g = solve_rates_gup(t1, t2);
    const RateSolution b = solve_rates_breuer(t1, t2);
    struct Row {
        const char* name;
        Measured got;
        double value, sigma;
    };
    const Row rows[] = {{"GUP 1/gamma", g.gamma_inv, 169.9, 47.5},
                        {"tau_G", g.tau, 975.2, 237.4},
                        {"Breuer 1/gamma", b.gamma_inv, 102.8, 6.9},
                        {"tau_D", b.tau, 195.0, 47.5}};
    for (const Row& r : rows) {
        const double v = r.got.value / us, s = r.got.sigma / us;
        std::ostringstream line;
        line << r.name << " = " << v << " +- " << s << " us";
        o.check(std::abs(v - r.value) <= 0.1 && rel(s, r.sigma) <= 0.15, line.str());
    }
}

// 7. Bound chain and the Planck-scale feasibility numbers.
void bounds(Outcome& o) {
    const DeviceProfile dev = DeviceProfile::hbar_16ug();
    const Measured tau_g{975.2e-6, 237.4e-6}, tau_d{195.0e-6, 47.5e-6};
    const double kappa = kappa_from_tau_g(tau_g, dev.ap_hw, dev.omega()).value;
    const double tau_c = tau_c_from_tau_d(tau_d, dev.omega()).value;
    const double beta = beta_from_epsilon({0.020, 0.005}, dev.ap_hw).value;
    o.check(rel(kappa, 4.0e46) <= 0.05, fmt("kappa = %.3e s (4.0e46 +- %.0f%%)", kappa, 5.0));
    o.check(rel(tau_c, 3.7e-18) <= 0.05, fmt("tau_c = %.3e s (3.7e-18 +- %.0f%%)", tau_c, 5.0));
    o.check(rel(beta, 2.2e30) <= 0.05, fmt("beta_bar = %.3e (2.2e30 +- %.0f%%)", beta, 5.0));
    const PlanckFeasibility f = planck_feasibility();
    auto within2 = [](double a, double b) { return a / b <= 2.0 && b / a <= 2.0; };
    o.check(within2(f.m2_omega4_tau_g, 1e113), fmt("m^2 w^4 tau_G = %.3e kg^2/s^3 (1e113 within x%.0f)", f.m2_omega4_tau_g, 2.0));
    o.check(within2(f.omega2_over_gamma, 1e43), fmt("w^2/gamma = %.3e 1/s (1e43 within x%.0f)", f.omega2_over_gamma, 2.0));
}

double g_by_quadrature(double t, const KernelSpec& k) {
    const auto outer = gauss_legendre(0.0, t, 40, 8);
    double acc = 0.0;
    for (std::size_t i = 0; i < outer.nodes.size(); ++i) {
        const auto inner = gauss_legendre(0.0, outer.nodes[i], 40, 8);
        double in = 0.0;
        for (std::size_t j = 0; j < inner.nodes.size(); ++j) in += inner.weights[j] * k.value(outer.nodes[i] - inner.nodes[j]);
        acc += outer.weights[i] * in;
    }
    return acc;
}

// 8. Free particle on a two-momentum subspace, both kernels; kernel double integral.
void free_particle(Outcome& o) {
    const double hbar = PhysicalConstants::hbar;
    const double m = 1e-6;
    const double unit = std::sqrt(2.0 * m * hbar);
    const FreeParticlePair pair{std::sqrt(2.0) * unit, unit, m};
    const double ea = 2.0 * hbar, eb = hbar;
    const double ap = PhysicalConstants::a_p(m);
    for (const KernelSpec kernel : {KernelSpec::exponential(0.3), KernelSpec::delta()}) {
        ModelParams p;
        p.kernel = kernel;
        p.beta_bar = 0.25 * hbar / (ap * (ea * ea - eb * eb));
        p.kappa = 0.4 * hbar * hbar / (16.0 * ap * ap * std::pow(ea * ea - eb * eb, 2));
        const double rate = 16.0 * ap * ap * p.kappa / (hbar * hbar);
        const Eigen::Vector2d h{(ea + 4.0 * ap * p.beta_bar * ea * ea) / hbar, (eb + 4.0 * ap * p.beta_bar * eb * eb) / hbar};
        const Eigen::Vector2d l{ea * ea, eb * eb};
        const Rhs rhs = [&](double t, const Matrix& rho) {
            const double big_f = kernel.is_delta() ? 0.5 : 0.5 * (1.0 - std::exp(-t / kernel.tau));
            Matrix d(2, 2);
            for (Index i = 0; i < 2; ++i) {
                for (Index j = 0; j < 2; ++j) {
                    d(i, j) = cplx(0.0, -(h(i) - h(j))) * rho(i, j) - rate * big_f * std::pow(l(i) - l(j), 2) * rho(i, j);
                }
            }
            return d;
        };
        const EvolutionResult run =
            evolve(DensityMatrix(Matrix::Constant(2, 2, 0.5)), rhs, 5.0, {.dt = 1e-3, .sample_every = 250});
        double worst = 0.0;
        for (std::size_t k = 0; k < run.states.size(); ++k) {
            worst = std::max(worst, std::abs(2.0 * run.states[k](0, 1) - free_particle_coherence(pair, run.t_omega[k], p)));
        }
        o.check(worst < 1e-10, fmt((kernel.name() + " kernel: max |closed form - integration| = %.2e (tol %.0e)").c_str(),
                                   worst, 1e-10));
    }
    double gw = 0.0;
    for (double tau : {0.1, 1.0, 7.0}) {
        for (double t : {0.05, 0.9, 3.0, 20.0}) {
            gw = std::max(gw, std::abs(g_kernel(t, KernelSpec::exponential(tau)) - g_by_quadrature(t, KernelSpec::exponential(tau))));
        }
    }
    o.check(gw < 1e-8, fmt("max |g - double quadrature| = %.2e (tol %.0e)", gw, 1e-8));
}

// 9. Deformed ground state: first-order variances and the ellipticity round trip.
void ground_state(Outcome& o) {
    const Index dim = 40;
    double worst = 0.0;
    for (double eps : {1e-4, 5e-4, 1e-3}) {
        const double ap = 0.01;
        const Eigen::SelfAdjointEigenSolver<Matrix> es(h_full(dim, eps / (6.0 * ap), ap).matrix());
        const Vector g = es.eigenvectors().col(0);
        for (int i = 0; i <= 12; ++i) {
            const double theta = std::numbers::pi * i / 12.0;
            const Matrix q = quadrature(theta, dim).matrix();
            const double var = g.dot(q * (q * g)).real() - std::pow(g.dot(q * g).real(), 2);
            worst = std::max(worst, std::abs(var - ground_state_variance(theta - std::numbers::pi / 2, eps)));
        }
    }
    o.check(worst < 1e-6, fmt("max |first order - diagonalization| = %.2e (tol %.0e)", worst, 1e-6));

    GridSpec grid;
    grid.x_min = grid.p_min = -4.0;
    grid.x_max = grid.p_max = 4.0;
    grid.nx = grid.np = 81;
    double rt = 0.0;
    for (double eps : {0.005, 0.020, 0.05}) {
        const double a = ground_state_variance(0.0, eps), b = ground_state_variance(std::numbers::pi / 2, eps);
        const double vmax = std::max(a, b), vmin = std::min(a, b);
        for (double angle : {0.0, 0.6, 2.0}) {
            const double c = std::cos(angle), s = std::sin(angle);
            const WignerGrid w = gaussian_wigner(vmax * c * c + vmin * s * s, vmax * s * s + vmin * c * c, (vmax - vmin) * c * s, grid);
            rt = std::max(rt, std::abs(ellipticity_from_wigner(w).epsilon.value - eps));
        }
    }
    o.check(rt < 1e-4, fmt("ellipticity round trip max error %.2e (tol %.0e)", rt, 1e-4));
}

// 10. Fit coverage on seeded synthetic data and exact recovery without noise.
void fit_coverage(Outcome& o) {
    const double us = 1e-6;
    auto t1_spec = [&](double noise, std::uint64_t seed) {
        SynthSpec s;
        s.decay_time = 85.8 * us;
        s.n_points = 40;
        s.noise_sigma = noise;
        s.seed = seed;
        return s;
    };
    auto ramsey_spec = [&](double noise, std::uint64_t seed) {
        SynthSpec s;
        s.model = FitModel::ramsey;
        s.amplitude = 0.5;
        s.offset = 0.5;
        s.decay_time = 147.3 * us;
        s.frequency = 50e3;
        s.phase = 0.3;
        s.t_max = 3.0 * 147.3 * us;
        s.n_points = 200;
        s.noise_sigma = noise;
        s.seed = seed;
        return s;
    };
    const int trials = 500;
    int in_t1 = 0, in_t2 = 0;
    for (int k = 0; k < trials; ++k) {
        const FitResult a = fit_exp_decay(synthesize_dataset(t1_spec(0.02, 10000 + k)));
        if (std::abs(a.value("T1") - 85.8 * us) <= 3.0 * a.sigma("T1")) ++in_t1;
        const FitResult b = fit_ramsey(synthesize_dataset(ramsey_spec(0.02, 20000 + k)));
        if (std::abs(b.value("T2") - 147.3 * us) <= 3.0 * b.sigma("T2")) ++in_t2;
    }
    o.check(in_t1 >= 0.95 * trials, fmt("T1 inside 3 sigma in %.1f%% of trials (need %.0f%%)", 100.0 * in_t1 / trials, 95.0));
    o.check(in_t2 >= 0.95 * trials, fmt("T2 inside 3 sigma in %.1f%% of trials (need %.0f%%)", 100.0 * in_t2 / trials, 95.0));
    const FitResult a = fit_exp_decay(synthesize_dataset(t1_spec(0.0, 1)));
    const FitResult b = fit_ramsey(synthesize_dataset(ramsey_spec(0.0, 1)));
    const double worst = std::max({rel(a.value("T1"), 85.8 * us), rel(b.value("T2"), 147.3 * us), rel(b.value("f"), 50e3)});
    o.check(worst < 1e-6, fmt("zero-noise max relative error %.1e (tol %.0e)", worst, 1e-6));
}

} // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria = {
        {"K^2 matrix-element table", matrix_elements},
        {"four-point correlator", correlator},
        {"closed-form overlay", overlay},
        {"small-time slopes", slopes},
        {"white-noise trajectories", trajectories},
        {"rate-solver anchors", rates},
        {"bound anchors", bounds},
        {"free particle and g(t)", free_particle},
        {"ground-state deformation", ground_state},
        {"fit coverage", fit_coverage},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        const auto start = std::chrono::steady_clock::now();
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.check(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!o.pass) ++failed;
        std::printf("%s %2zu %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, secs,
                    o.detail.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
