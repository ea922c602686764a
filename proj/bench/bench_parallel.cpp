// OpenMP kernels against their serial references.

#include <benchmark/benchmark.h>

#include <cmath>

#include "sfd/estimate.hpp"
#include "sfd/fock.hpp"
#include "sfd/trajectories.hpp"

using namespace sfd;

namespace {

ModelParams bench_params() {
    ModelParams p;
    p.omega = 1.0;
    p.ap_hw = 0.01;
    p.beta_bar = 1.0;
    p.set_omega_tau_g(100.0);
    return p;
}

EnsembleOptions bench_ensemble(std::size_t n_traj) {
    EnsembleOptions eo;
    eo.n_traj = n_traj;
    eo.t_end = 1.0;
    eo.dt = 0.01;
    eo.sample_every = 10;
    return eo;
}

template <class F>
void run_ensemble(benchmark::State& state, F f) {
    const Index dim = 12;
    const Vector psi0 = (fock_vector(dim, 0) + fock_vector(dim, 1)) / std::sqrt(2.0);
    const ModelParams p = bench_params();
    const EnsembleOptions eo = bench_ensemble(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(f(psi0, p, eo));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_EnsembleParallel(benchmark::State& s) { run_ensemble(s, ensemble_average); }
void BM_EnsembleSerial(benchmark::State& s) { run_ensemble(s, ensemble_average_serial); }

template <class F>
void run_wigner(benchmark::State& state, F f) {
    const DensityMatrix rho = DensityMatrix::pure(coherent_vector(30, {1.0, 0.5}));
    GridSpec g;
    g.nx = g.np = state.range(0);
    for (auto _ : state) benchmark::DoNotOptimize(f(rho, g));
}

void BM_WignerParallel(benchmark::State& s) { run_wigner(s, wigner); }
void BM_WignerSerial(benchmark::State& s) { run_wigner(s, wigner_serial); }

template <class F>
void run_bootstrap(benchmark::State& state, F f) {
    SynthSpec spec;
    spec.noise_sigma = 0.02;
    spec.seed = 3;
    const TimeSeriesDataset d = synthesize_dataset(spec);
    for (auto _ : state) benchmark::DoNotOptimize(f(d, FitModel::exp_decay, static_cast<std::size_t>(state.range(0)), 1));
}

void BM_BootstrapParallel(benchmark::State& s) { run_bootstrap(s, bootstrap_sigmas); }
void BM_BootstrapSerial(benchmark::State& s) { run_bootstrap(s, bootstrap_sigmas_serial); }

} // namespace

BENCHMARK(BM_EnsembleParallel)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EnsembleSerial)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WignerParallel)->Arg(101)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WignerSerial)->Arg(101)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BootstrapParallel)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BootstrapSerial)->Arg(200)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
