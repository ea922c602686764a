// trajectories.cpp: Noise sampling, per-step unitaries and ensemble reduction

#include "sfd/trajectories.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>

#include <omp.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "sfd/errors.hpp"

namespace sfd {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

NoiseKind noise_kind(const ModelParams& p) {
    return p.kernel.is_delta() ? NoiseKind::white : NoiseKind::ornstein_uhlenbeck;
}

// Running sums over trajectories for one sample instant.
struct Moments {
    Matrix sum;
    Eigen::MatrixXd re2, im2, reim;

    explicit Moments(Index d)
        : sum(Matrix::Zero(d, d)), re2(Eigen::MatrixXd::Zero(d, d)), im2(Eigen::MatrixXd::Zero(d, d)),
          reim(Eigen::MatrixXd::Zero(d, d)) {}

    void add(const Vector& psi) {
        const Matrix rho = psi * psi.adjoint();
        const Eigen::MatrixXd re = rho.real();
        const Eigen::MatrixXd im = rho.imag();
        sum += rho;
        re2 += re.cwiseProduct(re);
        im2 += im.cwiseProduct(im);
        reim += re.cwiseProduct(im);
    }

    void add(const Moments& other) {
        sum += other.sum;
        re2 += other.re2;
        im2 += other.im2;
        reim += other.reim;
    }
};

using Accumulator = std::vector<Moments>;

Accumulator make_accumulator(std::size_t n_samples, Index d) { return Accumulator(n_samples, Moments(d)); }

struct EnsembleSetup {
    TrajectoryStepper stepper;
    NoiseKind kind;
    double kappa;
    double tau;
    std::size_t n_steps;
    std::size_t n_samples;
};

EnsembleSetup setup(const Vector& psi0, const ModelParams& params, const EnsembleOptions& o) {
    params.validate();
    if (o.n_traj < 100) throw ConfigError("ensemble_average: n_traj must be >= 100");
    if (!(o.dt > 0.0)) throw ConfigError("ensemble_average: dt must be > 0");
    if (o.sample_every == 0) throw ConfigError("ensemble_average: sample_every must be >= 1");
    if (params.gamma != 0.0) throw ConfigError("trajectory mode does not support damping (gamma must be 0)");
    if (std::abs(psi0.norm() - 1.0) > 1e-10) throw ConfigError("initial state is not normalized");
    const auto n_steps = static_cast<std::size_t>(std::ceil(o.t_end / o.dt - 1e-9));
    std::size_t n_samples = 1 + n_steps / o.sample_every;
    if (n_steps % o.sample_every != 0) ++n_samples;
    return {TrajectoryStepper(psi0.size(), params, o.hamiltonian), noise_kind(params), params.kappa * params.omega,
            params.kernel.tau * params.omega, n_steps, n_samples};
}

void run_one(const Vector& psi0, const EnsembleSetup& s, const EnsembleOptions& o, std::uint64_t index,
             Accumulator& acc) {
    const NoisePath noise = sample_noise(s.kind, s.kappa, s.tau, o.dt, s.n_steps, o.seed, index);
    const Trajectory traj = evolve_trajectory(psi0, s.stepper, noise, o.sample_every);
    for (std::size_t k = 0; k < traj.states.size(); ++k) acc[k].add(traj.states[k]);
}

EnsembleResult finish(const Accumulator& acc, const EnsembleSetup& s, const ModelParams& params,
                      const EnsembleOptions& o) {
    EnsembleResult out;
    out.n_traj = o.n_traj;
    const double n = static_cast<double>(o.n_traj);
    for (std::size_t k = 0; k < acc.size(); ++k) {
        const std::size_t step = std::min(k * o.sample_every, s.n_steps);
        out.t_omega.push_back(o.dt * static_cast<double>(step));
        out.t_seconds.push_back(out.t_omega.back() / params.omega);
        const Matrix mean = acc[k].sum / n;
        const Eigen::MatrixXd mre = mean.real();
        const Eigen::MatrixXd mim = mean.imag();
        // Sample (co)variances with the n-1 correction, then divided by n for the mean.
        const double norm = 1.0 / ((n - 1.0) * n);
        const Eigen::MatrixXd var_re = ((acc[k].re2 - n * mre.cwiseProduct(mre)) * norm).cwiseMax(0.0);
        const Eigen::MatrixXd var_im = ((acc[k].im2 - n * mim.cwiseProduct(mim)) * norm).cwiseMax(0.0);
        out.mean.push_back(mean);
        out.stderr_re.push_back(var_re.cwiseSqrt());
        out.stderr_im.push_back(var_im.cwiseSqrt());
        out.cov_re_im.push_back((acc[k].reim - n * mre.cwiseProduct(mim)) * norm);
    }
    return out;
}

} // namespace

NoisePath sample_noise(NoiseKind kind, double kappa_dimless, double tau, double dt, std::size_t n_steps,
                       std::uint64_t seed, std::uint64_t stream) {
    if (!(dt > 0.0)) throw ConfigError("sample_noise: dt must be > 0");
    if (!(kappa_dimless >= 0.0)) throw ConfigError("sample_noise: kappa must be >= 0");
    if (kind == NoiseKind::ornstein_uhlenbeck && !(tau >= 5.0 * dt)) {
        throw ConfigError("sample_noise: OU correlation time must be at least 5 dt");
    }
    NoisePath path;
    path.kind = kind;
    path.dt = dt;
    path.tau = kind == NoiseKind::white ? 0.0 : tau;
    path.seed = seed;
    path.stream = stream;
    path.increments.assign(n_steps, 0.0);
    if (kind == NoiseKind::ornstein_uhlenbeck) path.values.assign(n_steps + 1, 0.0);
    if (kappa_dimless == 0.0) return path;

    auto engine = make_engine(seed, stream);
    std::normal_distribution<double> normal(0.0, 1.0);
    if (kind == NoiseKind::white) {
        const double sd = std::sqrt(kappa_dimless * dt);
        for (auto& dw : path.increments) dw = sd * normal(engine);
        return path;
    }
    // Exact OU update; the step integral is taken by the trapezoid rule.
    const double sd = std::sqrt(kappa_dimless / (2.0 * tau));
    const double decay = std::exp(-dt / tau);
    const double kick = sd * std::sqrt(1.0 - decay * decay);
    path.values[0] = sd * normal(engine);
    for (std::size_t k = 0; k < n_steps; ++k) {
        path.values[k + 1] = path.values[k] * decay + kick * normal(engine);
        path.increments[k] = 0.5 * dt * (path.values[k] + path.values[k + 1]);
    }
    return path;
}

TrajectoryStepper::TrajectoryStepper(Index dim, const ModelParams& params, HamiltonianKind kind)
    : h_(h_prime(dim, params, kind).matrix()), k2_(kinetic_squared(dim).matrix()), coupling_(4.0 * params.ap_hw) {}

Matrix TrajectoryStepper::propagator(double dt, double dw) const {
    const Matrix generator = cplx(0.0, -1.0) * (dt * h_ + (coupling_ * dw) * k2_);
    return generator.exp();
}

Trajectory evolve_trajectory(const Vector& psi0, const TrajectoryStepper& stepper, const NoisePath& noise,
                             std::size_t sample_every) {
    if (psi0.size() != stepper.dim()) throw InvalidDimension("evolve_trajectory: state dimension mismatch");
    if (sample_every == 0) throw ConfigError("evolve_trajectory: sample_every must be >= 1");
    Trajectory out;
    Vector psi = psi0;
    out.t_omega.push_back(0.0);
    out.states.push_back(psi);
    const std::size_t n_steps = noise.increments.size();
    for (std::size_t step = 1; step <= n_steps; ++step) {
        psi = stepper.propagator(noise.dt, noise.increments[step - 1]) * psi;
        out.max_norm_drift = std::max(out.max_norm_drift, std::abs(psi.norm() - 1.0));
        if (step % sample_every == 0 || step == n_steps) {
            out.t_omega.push_back(noise.dt * static_cast<double>(step));
            out.states.push_back(psi);
        }
    }
    if (out.max_norm_drift > 1e-10) throw NumericFailure("evolve_trajectory: norm drift above 1e-10");
    return out;
}

Trajectory evolve_trajectory(const Vector& psi0, const ModelParams& params, const NoisePath& noise,
                             const TrajectoryOptions& options) {
    params.validate();
    if (params.gamma != 0.0) throw ConfigError("trajectory mode does not support damping (gamma must be 0)");
    if (std::abs(psi0.norm() - 1.0) > 1e-10) throw ConfigError("initial state is not normalized");
    if (std::abs(noise.dt - options.dt) > 1e-15 * options.dt) throw ConfigError("noise path dt differs from options.dt");
    return evolve_trajectory(psi0, TrajectoryStepper(psi0.size(), params, options.hamiltonian), noise,
                             options.sample_every);
}

EnsembleResult ensemble_average(const Vector& psi0, const ModelParams& params, const EnsembleOptions& options) {
    const EnsembleSetup s = setup(psi0, params, options);
    const Index d = psi0.size();
    constexpr std::size_t kChunk = 16;
    constexpr std::size_t kWave = 64;  // chunks held in memory at once
    const std::size_t n_chunks = (options.n_traj + kChunk - 1) / kChunk;
    const int threads = options.threads > 0 ? options.threads : omp_get_max_threads();

    Accumulator total = make_accumulator(s.n_samples, d);
    for (std::size_t first = 0; first < n_chunks; first += kWave) {
        const std::size_t last = std::min(n_chunks, first + kWave);
        std::vector<Accumulator> partial(last - first);
#pragma omp parallel for schedule(dynamic) num_threads(threads)
        for (std::size_t c = first; c < last; ++c) {
            Accumulator acc = make_accumulator(s.n_samples, d);
            const std::size_t end = std::min(options.n_traj, (c + 1) * kChunk);
            for (std::size_t i = c * kChunk; i < end; ++i) run_one(psi0, s, options, i, acc);
            partial[c - first] = std::move(acc);
        }
        for (const auto& acc : partial) {
            for (std::size_t k = 0; k < s.n_samples; ++k) total[k].add(acc[k]);
        }
    }
    return finish(total, s, params, options);
}

EnsembleResult ensemble_average_serial(const Vector& psi0, const ModelParams& params, const EnsembleOptions& options) {
    const EnsembleSetup s = setup(psi0, params, options);
    Accumulator total = make_accumulator(s.n_samples, psi0.size());
    for (std::size_t i = 0; i < options.n_traj; ++i) run_one(psi0, s, options, i, total);
    return finish(total, s, params, options);
}

double EnsembleResult::standard_error(const Observable& obs, std::size_t k) const {
    const double sre = stderr_re[k](obs.row, obs.col);
    const double sim = stderr_im[k](obs.row, obs.col);
    switch (obs.part) {
        case Observable::Part::re: return sre;
        case Observable::Part::im: return sim;
        case Observable::Part::abs: {
            const cplx z = mean[k](obs.row, obs.col);
            const double r = std::abs(z);
            if (r == 0.0) return std::hypot(sre, sim);
            const double var = (z.real() * z.real() * sre * sre + z.imag() * z.imag() * sim * sim +
                                2.0 * z.real() * z.imag() * cov_re_im[k](obs.row, obs.col)) /
                               (r * r);
            return std::sqrt(std::max(var, 0.0));
        }
    }
    return sre;
}

void write_ensemble_csv(const EnsembleResult& result, const std::vector<Observable>& observables, std::ostream& out) {
    out << "t_omega,t_seconds";
    for (const auto& o : observables) out << ',' << o.name;
    for (const auto& o : observables) out << ",stderr_" << o.name;
    out << '\n' << std::setprecision(17);
    for (std::size_t k = 0; k < result.mean.size(); ++k) {
        out << result.t_omega[k] << ',' << result.t_seconds[k];
        for (const auto& o : observables) out << ',' << o(result.mean[k]);
        for (const auto& o : observables) out << ',' << result.standard_error(o, k);
        out << '\n';
    }
}

} // namespace sfd
