// estimate.hpp: Decay fits, rate solvers and the bound chain
//
// SI units throughout (seconds, Hz, metres); CSV inputs carry times in microseconds.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sfd/fock.hpp"
#include "sfd/params.hpp"

namespace sfd {

struct TimeSeriesDataset {
    std::vector<double> t;  // seconds
    std::vector<double> y;
    std::vector<double> sigma;  // empty when absent

    std::size_t size() const { return t.size(); }
    bool has_sigma() const { return !sigma.empty(); }
    // Throws ConfigError unless t >= 0 is strictly increasing and y, sigma are finite.
    void validate() const;
};

// Header "t_us,y[,sigma]".
TimeSeriesDataset read_dataset_csv(std::istream& in);
TimeSeriesDataset read_dataset_csv(const std::string& path);
void write_dataset_csv(const TimeSeriesDataset& data, std::ostream& out);

// --- damped least squares --------------------------------------------------

struct LmOptions {
    std::size_t max_iterations = 200;
    double step_tolerance = 1e-10;  // relative
};

struct LmResult {
    Eigen::VectorXd params;
    Eigen::MatrixXd jtj;  // J^T J at the optimum (weighted residuals)
    double rss = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<double> trace;  // rss per accepted iteration
};

// residuals(p, r, J) fills r (size m) and J (m x n).
using ResidualFn = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::MatrixXd&)>;

LmResult levenberg_marquardt(const ResidualFn& residuals, Eigen::VectorXd start, std::size_t n_residuals,
                             const LmOptions& options = {});

struct FitResult {
    std::vector<std::string> names;
    std::vector<double> values;
    std::vector<double> sigmas;
    double rss = 0.0;
    std::size_t dof = 0;
    std::size_t iterations = 0;
    bool converged = false;

    double value(const std::string& name) const;
    double sigma(const std::string& name) const;
    nlohmann::ordered_json to_json() const;
};

// A exp(-t/T1) + C. Throws NumericFailure when the iteration does not converge.
FitResult fit_exp_decay(const TimeSeriesDataset& data, const LmOptions& options = {});
// A exp(-t/T2) cos(2 pi f t + phi) + C.
FitResult fit_ramsey(const TimeSeriesDataset& data, const LmOptions& options = {});

// Frequency of the largest non-DC peak of the mean-removed data, on the grid k/span.
// Throws NumericFailure when the peak is not above 3x the median spectral magnitude.
double spectral_peak_frequency(const TimeSeriesDataset& data);

enum class FitModel { exp_decay, ramsey };
FitModel parse_fit_model(const std::string& name);
std::string to_string(FitModel model);
FitResult fit(const TimeSeriesDataset& data, FitModel model, const LmOptions& options = {});

// Residual bootstrap of the parameter sigmas (OpenMP over resamples, stream-indexed RNG).
std::vector<double> bootstrap_sigmas(const TimeSeriesDataset& data, FitModel model, std::size_t n_resamples,
                                     std::uint64_t seed);
std::vector<double> bootstrap_sigmas_serial(const TimeSeriesDataset& data, FitModel model, std::size_t n_resamples,
                                            std::uint64_t seed);

// --- synthetic data ---------------------------------------------------------

struct SynthSpec {
    FitModel model = FitModel::exp_decay;
    double amplitude = 1.0;
    double decay_time = 85.8e-6;  // T1 or T2, seconds
    double frequency = 50e3;      // Hz, Ramsey only
    double phase = 0.0;           // rad, Ramsey only
    double offset = 0.0;
    double t_max = 0.0;  // 0: four decay times
    std::size_t n_points = 40;
    double noise_sigma = 0.0;
    std::uint64_t seed = 1;
};

// Uniform times on [0, t_max]; additive Gaussian noise; sigma column set when noise_sigma > 0.
TimeSeriesDataset synthesize_dataset(const SynthSpec& spec);

// --- rates and bounds ---------------------------------------------------------

struct Measured {
    double value = 0.0;
    double sigma = 0.0;
};

enum class Propagation {
    linear,      // sum of |df/dx_i| sigma_i (worst case)
    quadrature,  // root sum of squares
};
Propagation parse_propagation(const std::string& name);

struct RateSolution {
    std::string model;
    Measured gamma;      // 1/s
    Measured gamma_inv;  // s
    Measured tau;        // tau_G or tau_D in s; value is +inf in the pure-damping limit
    bool tau_infinite() const { return std::isinf(tau.value); }
};

// 1/T1 = gamma + (45/8)/tau_G, 1/T2 = gamma/2 + (30/8)/tau_G. Throws ModelInconsistency
// when 2/T2 < 1/T1 or gamma < 0.
RateSolution solve_rates_gup(Measured t1, Measured t2, Propagation prop = Propagation::linear);
// 1/T1 = gamma + (3/8)/tau_D, 1/T2 = gamma/2 + (3/8)/tau_D.
RateSolution solve_rates_breuer(Measured t1, Measured t2, Propagation prop = Propagation::linear);

// kappa = 1/(8 ap_hw^2 omega^2 tau_G), seconds.
Measured kappa_from_tau_g(Measured tau_g, double ap_hw, double omega);
// tau_c = 1/(tau_D omega^2), seconds.
Measured tau_c_from_tau_d(Measured tau_d, double omega);
// beta_bar = eps / (6 ap_hw).
Measured beta_from_epsilon(Measured epsilon, double ap_hw);

struct LengthScale {
    Measured value;  // metres, x0 sqrt(eps)
    Measured reported{5.9e-20, 0.8e-20};
    std::string note;
};
LengthScale lk_from_epsilon(Measured epsilon, double x0);

// Orders of magnitude needed for the noise to reach the Planck time.
struct PlanckFeasibility {
    double m2_omega4_tau_g;      // kg^2/s^3 such that kappa = t_P
    double omega2_over_gamma;    // 1/s such that tau_c = t_P with 1/tau_D ~ gamma
};
PlanckFeasibility planck_feasibility();

struct BoundsInputs {
    Measured t1;       // s
    Measured t2;       // s
    Measured epsilon;  // dimensionless
    DeviceProfile device = DeviceProfile::hbar_16ug();
    Propagation propagation = Propagation::linear;
};

// JSON with keys gamma_inv, tau_g, tau_d, kappa, tau_c, beta_bar, l_k (plus gamma_inv_breuer,
// feasibility and inputs). Absent bounds (pure damping) have value null.
nlohmann::ordered_json bounds_report(const BoundsInputs& inputs);

// --- Wigner ellipticity -------------------------------------------------------

struct Ellipticity {
    Measured epsilon;
    double var_max = 0.0;
    double var_min = 0.0;
    double angle = 0.0;  // major axis angle from the x axis, rad
    FitResult fit;
};

// 2-D Gaussian fit of the grid, covariance eigenvalues, eps = 2(r-1)/(r+1).
Ellipticity ellipticity_from_wigner(const WignerGrid& grid);

// Wigner function of a Gaussian state with the given (x, p) covariance, centred at 0.
WignerGrid gaussian_wigner(double var_x, double var_p, double cov_xp, const GridSpec& grid);

} // namespace sfd
