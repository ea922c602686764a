// trajectories.hpp: Stochastic Schrodinger trajectories under a fluctuating beta(t)
//
// Each trajectory evolves a pure state with the per-step unitary
//   U_k = exp(-i [H' dt + 4 ap_hw K^2 dW_k])
// where dW_k is the integrated deformation noise over the step (units of omega t).
// Averaging |psi><psi| over trajectories reproduces the master equations.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "sfd/fock.hpp"
#include "sfd/generators.hpp"
#include "sfd/integrate.hpp"
#include "sfd/params.hpp"

namespace sfd {

enum class NoiseKind { white, ornstein_uhlenbeck };

struct NoisePath {
    NoiseKind kind = NoiseKind::white;
    double dt = 0.0;
    double tau = 0.0;  // OU correlation time (units of 1/omega)
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    // Integrated noise per step; white: N(0, kappa dt).
    std::vector<double> increments;
    // OU process at the step boundaries (n_steps + 1 values, stationary variance kappa/(2 tau)).
    std::vector<double> values;
};

// Throws ConfigError when dt <= 0 or, for OU noise, tau < 5 dt.
NoisePath sample_noise(NoiseKind kind, double kappa_dimless, double tau, double dt, std::size_t n_steps,
                       std::uint64_t seed, std::uint64_t stream);

struct TrajectoryOptions {
    double dt = kDefaultDt;
    std::size_t sample_every = 1;
    HamiltonianKind hamiltonian = HamiltonianKind::rwa;
};

struct Trajectory {
    std::vector<double> t_omega;
    std::vector<Vector> states;
    double max_norm_drift = 0.0;
};

// Step propagators for one parameter set; the expensive pieces are built once.
class TrajectoryStepper {
public:
    TrajectoryStepper(Index dim, const ModelParams& params, HamiltonianKind kind = HamiltonianKind::rwa);

    // exp(-i [H' dt + coupling K^2 dW]).
    Matrix propagator(double dt, double dw) const;
    double coupling() const { return coupling_; }
    Index dim() const { return h_.rows(); }

private:
    Matrix h_;
    Matrix k2_;
    double coupling_;
};

// Noise kind and kappa follow params.kernel: delta -> white, exponential -> OU.
// Throws ConfigError when params.gamma != 0 (damping has no unitary unraveling here).
Trajectory evolve_trajectory(const Vector& psi0, const ModelParams& params, const NoisePath& noise,
                             const TrajectoryOptions& options = {});
Trajectory evolve_trajectory(const Vector& psi0, const TrajectoryStepper& stepper, const NoisePath& noise,
                             std::size_t sample_every);

struct EnsembleOptions {
    std::size_t n_traj = 2000;
    std::uint64_t seed = 1;
    double t_end = 10.0;
    double dt = kDefaultDt;
    std::size_t sample_every = 1;
    HamiltonianKind hamiltonian = HamiltonianKind::rwa;
    int threads = 0;  // 0: OpenMP default
};

struct EnsembleResult {
    std::vector<double> t_omega;
    std::vector<double> t_seconds;
    std::vector<Matrix> mean;
    // Standard errors of the real and imaginary parts, and their covariance.
    std::vector<Eigen::MatrixXd> stderr_re;
    std::vector<Eigen::MatrixXd> stderr_im;
    std::vector<Eigen::MatrixXd> cov_re_im;
    std::size_t n_traj = 0;

    // Standard error of an observable at sample k (delta method for abs).
    double standard_error(const Observable& obs, std::size_t k) const;
};

// Trajectories are grouped in fixed-size chunks, run in parallel and reduced in chunk order,
// so the result is bit-identical for any thread count. Requires n_traj >= 100.
EnsembleResult ensemble_average(const Vector& psi0, const ModelParams& params, const EnsembleOptions& options);
// Reference implementation: one loop, trajectories accumulated in index order.
EnsembleResult ensemble_average_serial(const Vector& psi0, const ModelParams& params, const EnsembleOptions& options);

// CSV: t_omega,t_seconds,<obs>...,stderr_<obs>...
void write_ensemble_csv(const EnsembleResult& result, const std::vector<Observable>& observables, std::ostream& out);

} // namespace sfd
