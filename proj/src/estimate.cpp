// estimate.cpp: Least-squares fits, rate solvers and bounds

#include "sfd/estimate.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "sfd/analytic.hpp"
#include "sfd/errors.hpp"

namespace sfd {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        cell.erase(std::remove_if(cell.begin(), cell.end(), ::isspace), cell.end());
        out.push_back(cell);
    }
    return out;
}

double parse_number(const std::string& s, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("dataset line " + std::to_string(line_no) + ": cannot parse '" + s + "'");
    }
}

Eigen::MatrixXd safe_inverse(const Eigen::MatrixXd& a, const char* what) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible()) throw NumericFailure(std::string(what) + ": singular normal matrix at the optimum");
    return lu.inverse();
}

double wrap_phase(double phi) {
    phi = std::remainder(phi, kTwoPi);
    if (phi <= -std::numbers::pi) phi += kTwoPi;
    return phi;
}

// Weighted residual wrapper: r_i = (model_i - y_i) / sigma_i.
struct Weights {
    Eigen::VectorXd w;
    explicit Weights(const TimeSeriesDataset& d) : w(Eigen::VectorXd::Ones(static_cast<Index>(d.size()))) {
        if (d.has_sigma()) {
            for (std::size_t i = 0; i < d.size(); ++i) {
                if (!(d.sigma[i] > 0.0)) throw ConfigError("dataset sigma must be > 0");
                w(static_cast<Index>(i)) = 1.0 / d.sigma[i];
            }
        }
    }
};

FitResult make_fit_result(const LmResult& lm, std::vector<std::string> names, const TimeSeriesDataset& data,
                          const char* what) {
    FitResult fr;
    fr.names = std::move(names);
    fr.rss = lm.rss;
    fr.iterations = lm.iterations;
    fr.converged = lm.converged;
    fr.dof = data.size() - fr.names.size();
    Eigen::MatrixXd cov = safe_inverse(lm.jtj, what);
    if (!data.has_sigma()) cov *= lm.rss / static_cast<double>(fr.dof);
    for (Index i = 0; i < lm.params.size(); ++i) {
        fr.values.push_back(lm.params(i));
        fr.sigmas.push_back(std::sqrt(std::max(cov(i, i), 0.0)));
    }
    return fr;
}

void require_converged(const LmResult& lm, const char* what) {
    if (lm.converged) return;
    std::ostringstream msg;
    msg << what << ": no convergence after " << lm.iterations << " iterations; rss trace:";
    const std::size_t first = lm.trace.size() > 8 ? lm.trace.size() - 8 : 0;
    for (std::size_t i = first; i < lm.trace.size(); ++i) msg << ' ' << lm.trace[i];
    throw NumericFailure(msg.str());
}

// Linear least squares of y on the given basis columns; returns coefficients and rss.
std::pair<Eigen::VectorXd, double> linear_fit(const Eigen::MatrixXd& basis, const Eigen::VectorXd& y,
                                              const Eigen::VectorXd& w) {
    const Eigen::MatrixXd a = w.asDiagonal() * basis;
    const Eigen::VectorXd b = w.asDiagonal() * y;
    const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(b);
    return {coef, (a * coef - b).squaredNorm()};
}

} // namespace

// --- datasets ------------------------------------------------------------------

void TimeSeriesDataset::validate() const {
    if (t.size() != y.size()) throw ConfigError("dataset: t and y differ in length");
    if (!sigma.empty() && sigma.size() != t.size()) throw ConfigError("dataset: sigma column length mismatch");
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!std::isfinite(t[i]) || t[i] < 0.0) throw ConfigError("dataset: times must be finite and >= 0");
        if (i > 0 && !(t[i] > t[i - 1])) throw ConfigError("dataset: times must be strictly increasing");
        if (!std::isfinite(y[i])) throw ConfigError("dataset: y must be finite");
        if (!sigma.empty() && !std::isfinite(sigma[i])) throw ConfigError("dataset: sigma must be finite");
    }
}

TimeSeriesDataset read_dataset_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("dataset: empty input");
    const auto header = split_csv_line(line);
    const bool with_sigma = header.size() == 3;
    if (header.size() < 2 || header.size() > 3 || header[0] != "t_us" || header[1] != "y" ||
        (with_sigma && header[2] != "sigma")) {
        throw ConfigError("dataset: header must be 't_us,y' or 't_us,y,sigma'");
    }
    TimeSeriesDataset d;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) throw ConfigError("dataset line " + std::to_string(line_no) + ": wrong column count");
        d.t.push_back(parse_number(cells[0], line_no) * 1e-6);
        d.y.push_back(parse_number(cells[1], line_no));
        if (with_sigma) d.sigma.push_back(parse_number(cells[2], line_no));
    }
    d.validate();
    return d;
}

TimeSeriesDataset read_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dataset '" + path + "'");
    return read_dataset_csv(in);
}

void write_dataset_csv(const TimeSeriesDataset& data, std::ostream& out) {
    out << (data.has_sigma() ? "t_us,y,sigma\n" : "t_us,y\n") << std::setprecision(17);
    for (std::size_t i = 0; i < data.size(); ++i) {
        out << data.t[i] * 1e6 << ',' << data.y[i];
        if (data.has_sigma()) out << ',' << data.sigma[i];
        out << '\n';
    }
}

// --- Levenberg-Marquardt -------------------------------------------------------------

LmResult levenberg_marquardt(const ResidualFn& residuals, Eigen::VectorXd p, std::size_t n_residuals,
                             const LmOptions& options) {
    const Index n = p.size();
    const auto m = static_cast<Index>(n_residuals);
    Eigen::VectorXd r(m), r_new(m);
    Eigen::MatrixXd j(m, n), j_new(m, n);
    residuals(p, r, j);
    double rss = r.squaredNorm();
    if (!std::isfinite(rss)) throw NumericFailure("least squares: non-finite residuals at the starting point");

    LmResult out;
    double lambda = 1e-3;
    for (out.iterations = 1; out.iterations <= options.max_iterations; ++out.iterations) {
        const Eigen::MatrixXd a = j.transpose() * j;
        const Eigen::VectorXd g = j.transpose() * r;
        bool accepted = false;
        Eigen::VectorXd step;
        while (!accepted) {
            Eigen::MatrixXd damped = a;
            for (Index i = 0; i < n; ++i) damped(i, i) += lambda * std::max(a(i, i), 1e-300);
            step = damped.ldlt().solve(-g);
            const Eigen::VectorXd trial = p + step;
            residuals(trial, r_new, j_new);
            const double rss_new = r_new.squaredNorm();
            if (std::isfinite(rss_new) && rss_new < rss) {
                p = trial;
                r.swap(r_new);
                j.swap(j_new);
                rss = rss_new;
                lambda = std::max(lambda / 10.0, 1e-15);
                accepted = true;
            } else {
                lambda *= 10.0;
                // No downhill step left at machine precision: a minimum.
                if (lambda > 1e16) break;
            }
        }
        out.trace.push_back(rss);
        if (!accepted || step.norm() <= options.step_tolerance * (p.norm() + options.step_tolerance)) {
            out.converged = true;
            break;
        }
    }
    if (out.iterations > options.max_iterations) out.iterations = options.max_iterations;
    out.params = p;
    out.rss = rss;
    out.jtj = j.transpose() * j;
    return out;
}

// --- fit results ----------------------------------------------------------------------

double FitResult::value(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return values[i];
    }
    throw ConfigError("fit result has no parameter '" + name + "'");
}

double FitResult::sigma(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return sigmas[i];
    }
    throw ConfigError("fit result has no parameter '" + name + "'");
}

nlohmann::ordered_json FitResult::to_json() const {
    nlohmann::ordered_json j;
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < names.size(); ++i) params[names[i]] = {{"value", values[i]}, {"sigma", sigmas[i]}};
    j["parameters"] = params;
    j["rss"] = rss;
    j["dof"] = dof;
    j["iterations"] = iterations;
    j["converged"] = converged;
    return j;
}

// --- exponential decay ------------------------------------------------------------------

FitResult fit_exp_decay(const TimeSeriesDataset& data, const LmOptions& options) {
    data.validate();
    const std::size_t n = data.size();
    if (n < 6) throw ConfigError("fit_exp_decay needs at least 6 points");
    const double ts = data.t.back();
    const Weights w(data);
    Eigen::VectorXd t(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        t(static_cast<Index>(i)) = data.t[i] / ts;
        y(static_cast<Index>(i)) = data.y[i];
    }

    // A from the y range, C from the tail mean, T from a log-linear regression.
    const std::size_t tail = std::max<std::size_t>(1, n / 5);
    double c0 = 0.0;
    for (std::size_t i = n - tail; i < n; ++i) c0 += data.y[i];
    c0 /= static_cast<double>(tail);
    const double a0 = data.y.front() - c0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0, cnt = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ratio = (data.y[i] - c0) / a0;
        if (ratio > 0.05) {
            const double lx = t(static_cast<Index>(i));
            const double ly = std::log(ratio);
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
            cnt += 1.0;
        }
    }
    double t0 = 0.3;
    if (cnt >= 2.0) {
        const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
        if (slope < 0.0 && std::isfinite(slope)) t0 = -1.0 / slope;
    }

    auto model = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& j) {
        for (Index i = 0; i < t.size(); ++i) {
            const double e = std::exp(-t(i) / p(1));
            r(i) = w.w(i) * (p(0) * e + p(2) - y(i));
            j(i, 0) = w.w(i) * e;
            j(i, 1) = w.w(i) * p(0) * e * t(i) / (p(1) * p(1));
            j(i, 2) = w.w(i);
        }
    };
    LmResult lm = levenberg_marquardt(model, Eigen::Vector3d(a0, t0, c0), n, options);
    require_converged(lm, "fit_exp_decay");
    FitResult fr = make_fit_result(lm, {"A", "T1", "C"}, data, "fit_exp_decay");
    fr.values[1] *= ts;
    fr.sigmas[1] *= ts;
    if (!(fr.values[1] > 0.0)) throw NumericFailure("fit_exp_decay: fitted T1 is not positive");
    if (fr.values[1] > data.t.back() - data.t.front()) {
        throw ConfigError("fit_exp_decay: data span less than one decay constant");
    }
    return fr;
}

// --- Ramsey ------------------------------------------------------------------------------

double spectral_peak_frequency(const TimeSeriesDataset& data) {
    data.validate();
    const std::size_t n = data.size();
    if (n < 8) throw ConfigError("spectral_peak_frequency needs at least 8 points");
    const double span = (data.t.back() - data.t.front()) * static_cast<double>(n) / static_cast<double>(n - 1);

    // Remove the linear trend.
    double mt = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mt += data.t[i];
        my += data.y[i];
    }
    mt /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double stt = 0, sty = 0;
    for (std::size_t i = 0; i < n; ++i) {
        stt += (data.t[i] - mt) * (data.t[i] - mt);
        sty += (data.t[i] - mt) * (data.y[i] - my);
    }
    const double slope = sty / stt;
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = data.y[i] - my - slope * (data.t[i] - mt);

    const std::size_t kmax = n / 2;
    std::vector<double> mag(kmax);
    for (std::size_t k = 1; k <= kmax; ++k) {
        cplx acc = 0.0;
        const double f = static_cast<double>(k) / span;
        for (std::size_t i = 0; i < n; ++i) acc += y[i] * std::polar(1.0, -kTwoPi * f * (data.t[i] - data.t.front()));
        mag[k - 1] = std::abs(acc);
    }
    const auto peak = std::max_element(mag.begin(), mag.end());
    std::vector<double> sorted = mag;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2), sorted.end());
    const double median = sorted[sorted.size() / 2];
    if (!(*peak > 3.0 * median)) {
        throw NumericFailure("fit_ramsey: no spectral peak above the noise floor (3x median)");
    }
    return static_cast<double>(peak - mag.begin() + 1) / span;
}

FitResult fit_ramsey(const TimeSeriesDataset& data, const LmOptions& options) {
    data.validate();
    const std::size_t n = data.size();
    const double ts = data.t.back();
    const double span = data.t.back() - data.t.front();
    const Weights w(data);
    Eigen::VectorXd t(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        t(static_cast<Index>(i)) = data.t[i] / ts;
        y(static_cast<Index>(i)) = data.y[i];
    }

    const double f_peak = spectral_peak_frequency(data) * ts;
    const double bin = ts / (span * static_cast<double>(n) / static_cast<double>(n - 1));
    const double span_s = span / ts;

    // Refine (f, T) on a grid by linear projection of (A cos phi, -A sin phi, C).
    Eigen::MatrixXd basis(n, 3);
    basis.col(2).setOnes();
    double best_rss = std::numeric_limits<double>::infinity();
    Eigen::VectorXd start(5);
    for (double tmul : {0.125, 0.25, 0.5, 1.0, 2.0}) {
        const double tt = tmul * span_s;
        for (int k = -20; k <= 20; ++k) {
            const double f = f_peak + bin * static_cast<double>(k) / 20.0;
            if (!(f > 0.0)) continue;
            for (Index i = 0; i < t.size(); ++i) {
                const double e = std::exp(-t(i) / tt);
                basis(i, 0) = e * std::cos(kTwoPi * f * t(i));
                basis(i, 1) = e * std::sin(kTwoPi * f * t(i));
            }
            const auto [coef, rss] = linear_fit(basis, y, w.w);
            if (rss < best_rss) {
                best_rss = rss;
                start << std::hypot(coef(0), coef(1)), tt, f, std::atan2(-coef(1), coef(0)), coef(2);
            }
        }
    }

    auto model = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& j) {
        for (Index i = 0; i < t.size(); ++i) {
            const double e = std::exp(-t(i) / p(1));
            const double arg = kTwoPi * p(2) * t(i) + p(3);
            const double cs = std::cos(arg);
            const double sn = std::sin(arg);
            r(i) = w.w(i) * (p(0) * e * cs + p(4) - y(i));
            j(i, 0) = w.w(i) * e * cs;
            j(i, 1) = w.w(i) * p(0) * e * cs * t(i) / (p(1) * p(1));
            j(i, 2) = -w.w(i) * p(0) * e * sn * kTwoPi * t(i);
            j(i, 3) = -w.w(i) * p(0) * e * sn;
            j(i, 4) = w.w(i);
        }
    };
    LmResult lm = levenberg_marquardt(model, start, n, options);
    require_converged(lm, "fit_ramsey");
    if (lm.params(0) < 0.0) {
        lm.params(0) = -lm.params(0);
        lm.params(3) += std::numbers::pi;
    }
    lm.params(3) = wrap_phase(lm.params(3));
    FitResult fr = make_fit_result(lm, {"A", "T2", "f", "phi", "C"}, data, "fit_ramsey");
    fr.values[1] *= ts;
    fr.sigmas[1] *= ts;
    fr.values[2] /= ts;
    fr.sigmas[2] /= ts;
    if (!(fr.values[1] > 0.0)) throw NumericFailure("fit_ramsey: fitted T2 is not positive");
    const double periods = fr.values[2] * span;
    if (periods < 3.0) throw ConfigError("fit_ramsey: data cover fewer than 3 oscillation periods");
    if (static_cast<double>(n) / periods < 4.0) throw ConfigError("fit_ramsey: fewer than 4 points per period");
    return fr;
}

FitModel parse_fit_model(const std::string& name) {
    if (name == "exp" || name == "t1") return FitModel::exp_decay;
    if (name == "ramsey" || name == "t2") return FitModel::ramsey;
    throw ConfigError("unknown fit model '" + name + "' (expected exp or ramsey)");
}

std::string to_string(FitModel model) { return model == FitModel::exp_decay ? "exp" : "ramsey"; }

FitResult fit(const TimeSeriesDataset& data, FitModel model, const LmOptions& options) {
    return model == FitModel::exp_decay ? fit_exp_decay(data, options) : fit_ramsey(data, options);
}

namespace {

double model_value(FitModel model, const FitResult& fr, double t) {
    if (model == FitModel::exp_decay) return fr.values[0] * std::exp(-t / fr.values[1]) + fr.values[2];
    return fr.values[0] * std::exp(-t / fr.values[1]) * std::cos(kTwoPi * fr.values[2] * t + fr.values[3]) +
           fr.values[4];
}

std::mt19937_64 engine_for(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

std::vector<double> bootstrap(const TimeSeriesDataset& data, FitModel model, std::size_t n_resamples,
                              std::uint64_t seed, bool parallel) {
    if (n_resamples < 2) throw ConfigError("bootstrap needs at least 2 resamples");
    const FitResult base = fit(data, model);
    const std::size_t n = data.size();
    std::vector<double> fitted(n), resid(n);
    for (std::size_t i = 0; i < n; ++i) {
        fitted[i] = model_value(model, base, data.t[i]);
        resid[i] = data.y[i] - fitted[i];
    }
    const std::size_t np = base.values.size();
    std::vector<std::vector<double>> draws(n_resamples);
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (std::size_t b = 0; b < n_resamples; ++b) {
        auto engine = engine_for(seed, b);
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        TimeSeriesDataset resampled = data;
        for (std::size_t i = 0; i < n; ++i) resampled.y[i] = fitted[i] + resid[pick(engine)];
        try {
            draws[b] = fit(resampled, model).values;
        } catch (const Error&) {
            draws[b].clear();
        }
    }
    std::vector<double> sum(np, 0.0), sum2(np, 0.0);
    double count = 0.0;
    for (const auto& d : draws) {
        if (d.empty()) continue;
        count += 1.0;
        for (std::size_t k = 0; k < np; ++k) {
            sum[k] += d[k];
            sum2[k] += d[k] * d[k];
        }
    }
    if (count < 2.0) throw NumericFailure("bootstrap: fewer than 2 successful resamples");
    std::vector<double> out(np);
    for (std::size_t k = 0; k < np; ++k) {
        const double mean = sum[k] / count;
        out[k] = std::sqrt(std::max(0.0, (sum2[k] - count * mean * mean) / (count - 1.0)));
    }
    return out;
}

} // namespace

std::vector<double> bootstrap_sigmas(const TimeSeriesDataset& data, FitModel model, std::size_t n_resamples,
                                     std::uint64_t seed) {
    return bootstrap(data, model, n_resamples, seed, true);
}

std::vector<double> bootstrap_sigmas_serial(const TimeSeriesDataset& data, FitModel model, std::size_t n_resamples,
                                            std::uint64_t seed) {
    return bootstrap(data, model, n_resamples, seed, false);
}

// --- synthetic data ------------------------------------------------------------------

TimeSeriesDataset synthesize_dataset(const SynthSpec& spec) {
    if (spec.n_points < 4) throw ConfigError("synthesize_dataset needs n_points >= 4");
    if (!(spec.decay_time > 0.0)) throw ConfigError("synthesize_dataset: decay time must be > 0");
    if (!(spec.noise_sigma >= 0.0)) throw ConfigError("synthesize_dataset: noise sigma must be >= 0");
    const double t_max = spec.t_max > 0.0 ? spec.t_max : 4.0 * spec.decay_time;
    auto engine = engine_for(spec.seed, 0);
    std::normal_distribution<double> normal(0.0, 1.0);

    TimeSeriesDataset d;
    const double step = t_max / static_cast<double>(spec.n_points - 1);
    for (std::size_t i = 0; i < spec.n_points; ++i) {
        const double t = step * static_cast<double>(i);
        double y = spec.amplitude * std::exp(-t / spec.decay_time);
        if (spec.model == FitModel::ramsey) y *= std::cos(kTwoPi * spec.frequency * t + spec.phase);
        y += spec.offset;
        if (spec.noise_sigma > 0.0) {
            y += spec.noise_sigma * normal(engine);
            d.sigma.push_back(spec.noise_sigma);
        }
        d.t.push_back(t);
        d.y.push_back(y);
    }
    return d;
}

// --- rate solvers -----------------------------------------------------------------------

Propagation parse_propagation(const std::string& name) {
    if (name == "linear") return Propagation::linear;
    if (name == "quadrature") return Propagation::quadrature;
    throw ConfigError("unknown propagation '" + name + "' (expected linear or quadrature)");
}

namespace {

double combine(double d1, double s1, double d2, double s2, Propagation prop) {
    if (prop == Propagation::linear) return std::abs(d1) * s1 + std::abs(d2) * s2;
    return std::hypot(d1 * s1, d2 * s2);
}

// 1/T1 = gamma + a/tau, 1/T2 = gamma/2 + b/tau.
RateSolution solve_rates(const char* model, double a, double b, Measured t1, Measured t2, Propagation prop) {
    if (!(t1.value > 0.0) || !(t2.value > 0.0)) throw ConfigError("rate solver: T1 and T2 must be > 0");
    if (t1.sigma < 0.0 || t2.sigma < 0.0) throw ConfigError("rate solver: sigmas must be >= 0");
    const double u = 1.0 / t1.value;
    const double v = 1.0 / t2.value;
    const double k = 2.0 * b - a;
    const double dd = 2.0 * v - u;
    RateSolution s;
    s.model = model;
    const double inf = std::numeric_limits<double>::infinity();
    if (dd < 0.0) {
        std::ostringstream msg;
        msg << model << " rate solver: 2/T2 < 1/T1 (T1 = " << t1.value << " s, T2 = " << t2.value
            << " s) makes the decoherence time negative";
        throw ModelInconsistency(msg.str());
    }
    if (dd == 0.0) {
        s.tau = {inf, inf};
        s.gamma = {u, t1.sigma / (t1.value * t1.value)};
        s.gamma_inv = {t1.value, t1.sigma};
        return s;
    }
    const double tau = k / dd;
    double gamma = u - a / tau;
    if (gamma < 0.0) {
        if (gamma < -1e-12 * u) {
            std::ostringstream msg;
            msg << model << " rate solver: negative damping rate " << gamma << " 1/s";
            throw ModelInconsistency(msg.str());
        }
        gamma = 0.0;
    }
    const double dtau_dt1 = -(k / (dd * dd)) / (t1.value * t1.value);
    const double dtau_dt2 = (2.0 * k / (dd * dd)) / (t2.value * t2.value);
    const double dg_dt1 = -(1.0 + a / k) / (t1.value * t1.value);
    const double dg_dt2 = (2.0 * a / k) / (t2.value * t2.value);
    s.tau = {tau, combine(dtau_dt1, t1.sigma, dtau_dt2, t2.sigma, prop)};
    s.gamma = {gamma, combine(dg_dt1, t1.sigma, dg_dt2, t2.sigma, prop)};
    if (gamma > 0.0) {
        const double g2 = gamma * gamma;
        s.gamma_inv = {1.0 / gamma, combine(dg_dt1 / g2, t1.sigma, dg_dt2 / g2, t2.sigma, prop)};
    } else {
        s.gamma_inv = {inf, inf};
    }
    return s;
}

} // namespace

RateSolution solve_rates_gup(Measured t1, Measured t2, Propagation prop) {
    return solve_rates("gup", 45.0 / 8.0, 30.0 / 8.0, t1, t2, prop);
}

RateSolution solve_rates_breuer(Measured t1, Measured t2, Propagation prop) {
    return solve_rates("breuer", 3.0 / 8.0, 3.0 / 8.0, t1, t2, prop);
}

Measured kappa_from_tau_g(Measured tau_g, double ap_hw, double omega) {
    if (!(tau_g.value > 0.0) || !(ap_hw > 0.0) || !(omega > 0.0)) throw ConfigError("kappa_from_tau_g: inputs must be > 0");
    const double kappa = 1.0 / (8.0 * ap_hw * ap_hw * omega * omega * tau_g.value);
    return {kappa, kappa * tau_g.sigma / tau_g.value};
}

Measured tau_c_from_tau_d(Measured tau_d, double omega) {
    if (!(tau_d.value > 0.0) || !(omega > 0.0)) throw ConfigError("tau_c_from_tau_d: inputs must be > 0");
    const double tau_c = 1.0 / (tau_d.value * omega * omega);
    return {tau_c, tau_c * tau_d.sigma / tau_d.value};
}

Measured beta_from_epsilon(Measured epsilon, double ap_hw) {
    if (!(epsilon.value >= 0.0)) throw ConfigError("beta_from_epsilon: epsilon must be >= 0");
    if (!(ap_hw > 0.0)) throw ConfigError("beta_from_epsilon: ap_hw must be > 0");
    return {epsilon.value / (6.0 * ap_hw), epsilon.sigma / (6.0 * ap_hw)};
}

LengthScale lk_from_epsilon(Measured epsilon, double x0) {
    if (!(epsilon.value >= 0.0)) throw ConfigError("lk_from_epsilon: epsilon must be >= 0");
    if (!(x0 > 0.0)) throw ConfigError("lk_from_epsilon: x0 must be > 0");
    LengthScale out;
    const double lk = x0 * std::sqrt(epsilon.value);
    const double sigma = epsilon.value > 0.0 ? x0 * epsilon.sigma / (2.0 * std::sqrt(epsilon.value))
                                             : x0 * std::sqrt(epsilon.sigma);
    out.value = {lk, sigma};
    out.note = "l_k = x0 sqrt(epsilon); the reported bound 5.9(8)e-20 m for epsilon = 0.020 is about 1.4x larger "
               "(about 2x in epsilon) and its coefficient is not reproduced";
    return out;
}

PlanckFeasibility planck_feasibility() {
    const double hbar = PhysicalConstants::hbar;
    const double lp = PhysicalConstants::planck_length();
    const double tp = PhysicalConstants::planck_time();
    return {hbar * hbar / (8.0 * std::pow(lp, 4) * tp), 1.0 / tp};
}

namespace {

nlohmann::ordered_json entry(Measured m, const char* unit, const char* model, const char* bound,
                             std::vector<std::string> provenance) {
    nlohmann::ordered_json j;
    if (std::isfinite(m.value)) {
        j["value"] = m.value;
        j["sigma"] = m.sigma;
        j["absent"] = false;
    } else {
        j["value"] = nullptr;
        j["sigma"] = nullptr;
        j["absent"] = true;
    }
    j["unit"] = unit;
    j["model"] = model;
    j["bound"] = bound;
    j["provenance"] = provenance;
    return j;
}

const Measured kAbsent{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};

} // namespace

nlohmann::ordered_json bounds_report(const BoundsInputs& in) {
    const RateSolution gup = solve_rates_gup(in.t1, in.t2, in.propagation);
    const RateSolution breuer = solve_rates_breuer(in.t1, in.t2, in.propagation);
    const double omega = in.device.omega();
    const Measured kappa = gup.tau_infinite() ? kAbsent : kappa_from_tau_g(gup.tau, in.device.ap_hw, omega);
    const Measured tau_c = breuer.tau_infinite() ? kAbsent : tau_c_from_tau_d(breuer.tau, omega);
    const Measured beta = beta_from_epsilon(in.epsilon, in.device.ap_hw);
    const LengthScale lk = lk_from_epsilon(in.epsilon, in.device.x0_m);
    const PlanckFeasibility feas = planck_feasibility();

    nlohmann::ordered_json j;
    j["gamma_inv"] = entry(gup.gamma_inv, "s", "gup", "=", {"T1", "T2"});
    j["tau_g"] = entry(gup.tau, "s", "gup", ">=", {"T1", "T2"});
    j["tau_d"] = entry(breuer.tau, "s", "breuer", ">=", {"T1", "T2"});
    j["kappa"] = entry(kappa, "s", "gup", "<=", {"T1", "T2", "device.ap_hw", "device.frequency_hz"});
    j["tau_c"] = entry(tau_c, "s", "breuer", "<=", {"T1", "T2", "device.frequency_hz"});
    j["beta_bar"] = entry(beta, "1", "gup", "<=", {"epsilon", "device.ap_hw"});
    j["l_k"] = entry(lk.value, "m", "nonlocal", "<=", {"epsilon", "device.x0_m"});
    j["l_k"]["reported_value"] = lk.reported.value;
    j["l_k"]["reported_sigma"] = lk.reported.sigma;
    j["l_k"]["note"] = lk.note;
    j["gamma_inv_breuer"] = entry(breuer.gamma_inv, "s", "breuer", "=", {"T1", "T2"});
    j["feasibility"] = {
        {"m2_omega4_tau_g_for_kappa_at_planck_time", {{"value", feas.m2_omega4_tau_g}, {"unit", "kg^2/s^3"}}},
        {"omega2_over_gamma_for_tau_c_at_planck_time", {{"value", feas.omega2_over_gamma}, {"unit", "1/s"}}},
    };
    j["inputs"] = {
        {"T1_us", in.t1.value * 1e6},
        {"sigma_T1_us", in.t1.sigma * 1e6},
        {"T2_us", in.t2.value * 1e6},
        {"sigma_T2_us", in.t2.sigma * 1e6},
        {"epsilon", in.epsilon.value},
        {"sigma_epsilon", in.epsilon.sigma},
        {"propagation", in.propagation == Propagation::linear ? "linear" : "quadrature"},
        {"device",
         {{"name", in.device.name},
          {"frequency_hz", in.device.frequency_hz},
          {"mass_kg", in.device.mass_kg},
          {"x0_m", in.device.x0_m},
          {"ap_hw", in.device.ap_hw}}},
    };
    return j;
}

// --- Wigner ellipticity ---------------------------------------------------------------

WignerGrid gaussian_wigner(double var_x, double var_p, double cov_xp, const GridSpec& grid) {
    grid.validate();
    const double det = var_x * var_p - cov_xp * cov_xp;
    if (!(var_x > 0.0) || !(det > 0.0)) throw ConfigError("gaussian_wigner: covariance must be positive definite");
    WignerGrid w;
    w.spec = grid;
    w.values.resize(grid.nx, grid.np);
    for (Index i = 0; i < grid.nx; ++i) w.x.push_back(grid.x(i));
    for (Index j = 0; j < grid.np; ++j) w.p.push_back(grid.p(j));
    const double norm = 1.0 / (2.0 * std::numbers::pi * std::sqrt(det));
    for (Index i = 0; i < grid.nx; ++i) {
        for (Index j = 0; j < grid.np; ++j) {
            const double x = w.x[i];
            const double p = w.p[j];
            const double q = (var_p * x * x - 2.0 * cov_xp * x * p + var_x * p * p) / det;
            w.values(i, j) = norm * std::exp(-0.5 * q);
        }
    }
    w.captured_mass = w.total_mass();
    return w;
}

namespace {

struct EllipseShape {
    double eps, var_max, var_min, angle;
};

// Precision matrix [[a, b], [b, c]] -> covariance eigen-shape.
EllipseShape shape_from_precision(double a, double b, double c) {
    Eigen::Matrix2d prec;
    prec << a, b, b, c;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(prec);
    const Eigen::Vector2d ev = es.eigenvalues();  // ascending
    if (!(ev(0) > 0.0)) throw NumericFailure("ellipticity: fitted covariance is not positive definite");
    const double var_max = 1.0 / ev(0);
    const double var_min = 1.0 / ev(1);
    const Eigen::Vector2d major = es.eigenvectors().col(0);
    return {epsilon_from_ratio(var_max / var_min), var_max, var_min, std::atan2(major(1), major(0))};
}

} // namespace

Ellipticity ellipticity_from_wigner(const WignerGrid& grid) {
    const Index nx = grid.values.rows();
    const Index np = grid.values.cols();
    const auto m = static_cast<std::size_t>(nx * np);
    if (m < 12) throw ConfigError("ellipticity_from_wigner: grid too small");

    // Moment initialization on the positive part.
    double w0 = 0, mx = 0, mp = 0, peak = 0;
    for (Index i = 0; i < nx; ++i) {
        for (Index j = 0; j < np; ++j) {
            const double v = std::max(grid.values(i, j), 0.0);
            w0 += v;
            mx += v * grid.x[i];
            mp += v * grid.p[j];
            peak = std::max(peak, grid.values(i, j));
        }
    }
    if (!(w0 > 0.0)) throw NumericFailure("ellipticity_from_wigner: grid has no positive peak");
    mx /= w0;
    mp /= w0;
    double sxx = 0, spp = 0, sxp = 0;
    for (Index i = 0; i < nx; ++i) {
        for (Index j = 0; j < np; ++j) {
            const double v = std::max(grid.values(i, j), 0.0);
            const double dx = grid.x[i] - mx;
            const double dp = grid.p[j] - mp;
            sxx += v * dx * dx;
            spp += v * dp * dp;
            sxp += v * dx * dp;
        }
    }
    sxx /= w0;
    spp /= w0;
    sxp /= w0;
    const double det = sxx * spp - sxp * sxp;
    if (!(det > 0.0)) throw NumericFailure("ellipticity_from_wigner: degenerate peak");
    Eigen::VectorXd start(6);
    start << peak, mx, mp, spp / det, -sxp / det, sxx / det;

    auto model = [&](const Eigen::VectorXd& q, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
        Index k = 0;
        for (Index i = 0; i < nx; ++i) {
            for (Index j = 0; j < np; ++j, ++k) {
                const double dx = grid.x[i] - q(1);
                const double dp = grid.p[j] - q(2);
                const double e = std::exp(-0.5 * (q(3) * dx * dx + 2.0 * q(4) * dx * dp + q(5) * dp * dp));
                const double ae = q(0) * e;
                r(k) = ae - grid.values(i, j);
                jac(k, 0) = e;
                jac(k, 1) = ae * (q(3) * dx + q(4) * dp);
                jac(k, 2) = ae * (q(4) * dx + q(5) * dp);
                jac(k, 3) = -0.5 * ae * dx * dx;
                jac(k, 4) = -ae * dx * dp;
                jac(k, 5) = -0.5 * ae * dp * dp;
            }
        }
    };
    LmResult lm = levenberg_marquardt(model, start, m, {});
    require_converged(lm, "ellipticity_from_wigner");

    Ellipticity out;
    out.fit.names = {"A", "x0", "p0", "a", "b", "c"};
    out.fit.rss = lm.rss;
    out.fit.iterations = lm.iterations;
    out.fit.converged = true;
    out.fit.dof = m - 6;
    Eigen::MatrixXd cov = safe_inverse(lm.jtj, "ellipticity_from_wigner");
    cov *= lm.rss / static_cast<double>(out.fit.dof);
    for (Index i = 0; i < 6; ++i) {
        out.fit.values.push_back(lm.params(i));
        out.fit.sigmas.push_back(std::sqrt(std::max(cov(i, i), 0.0)));
    }
    const EllipseShape s = shape_from_precision(lm.params(3), lm.params(4), lm.params(5));
    out.var_max = s.var_max;
    out.var_min = s.var_min;
    out.angle = s.angle;

    // First-order propagation through (a, b, c) by central differences.
    Eigen::Vector3d grad;
    for (int k = 0; k < 3; ++k) {
        Eigen::Vector3d hi(lm.params(3), lm.params(4), lm.params(5));
        Eigen::Vector3d lo = hi;
        const double h = 1e-6 * std::max(std::abs(hi(k)), 1e-3);
        hi(k) += h;
        lo(k) -= h;
        grad(k) = (shape_from_precision(hi(0), hi(1), hi(2)).eps - shape_from_precision(lo(0), lo(1), lo(2)).eps) /
                  (2.0 * h);
    }
    const Eigen::Matrix3d sub = cov.block<3, 3>(3, 3);
    out.epsilon = {s.eps, std::sqrt(std::max(0.0, grad.dot(sub * grad)))};
    return out;
}

} // namespace sfd
