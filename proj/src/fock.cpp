// fock.cpp: Truncated Fock-space operators and Wigner evaluation

#include "sfd/fock.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "sfd/errors.hpp"

namespace sfd {

namespace {

void require_dim(Index dim, Index min_dim, const char* what) {
    if (dim < min_dim) {
        std::ostringstream msg;
        msg << what << ": dimension " << dim << " < " << min_dim;
        throw InvalidDimension(msg.str());
    }
}

} // namespace

bool is_hermitian(const Matrix& m, double tol) {
    if (m.rows() != m.cols()) return false;
    return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

Operator::Operator(Matrix entries, bool hermitian) : m_(std::move(entries)), hermitian_(hermitian) {
    if (m_.rows() != m_.cols()) throw InvalidDimension("operator matrix must be square");
    require_dim(m_.rows(), 2, "Operator");
    if (hermitian_ && !is_hermitian(m_, 1e-12)) throw Error("operator flagged Hermitian is not Hermitian");
}

Operator Operator::adjoint() const { return Operator(m_.adjoint(), hermitian_); }

Operator Operator::operator*(const Operator& rhs) const {
    if (dim() != rhs.dim()) throw InvalidDimension("operator product: dimension mismatch");
    return Operator(m_ * rhs.m_);
}

DensityMatrix::DensityMatrix(Matrix entries) : m_(std::move(entries)) {
    if (m_.rows() != m_.cols()) throw InvalidDimension("density matrix must be square");
    require_dim(m_.rows(), 2, "DensityMatrix");
    if (std::abs(m_.trace() - cplx(1.0)) > kTraceTol) throw Error("density matrix trace differs from 1");
    if (!is_hermitian(m_, kHermTol)) throw Error("density matrix is not Hermitian");
    if (min_eigenvalue() < -kPositivityTol) throw Error("density matrix is not positive");
}

DensityMatrix DensityMatrix::fock(Index dim, Index n) {
    if (n < 0 || n >= dim) throw InvalidDimension("Fock level outside the truncated space");
    return pure(fock_vector(dim, n));
}

DensityMatrix DensityMatrix::pure(const Vector& psi) {
    const Vector unit = psi / psi.norm();
    return DensityMatrix(unit * unit.adjoint());
}

DensityMatrix DensityMatrix::superposition01(Index dim) {
    require_dim(dim, 2, "superposition01");
    return pure(fock_vector(dim, 0) + fock_vector(dim, 1));
}

double DensityMatrix::purity() const { return (m_ * m_).trace().real(); }

double DensityMatrix::min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

cplx DensityMatrix::expectation(const Matrix& op) const { return (op * m_).trace(); }

Operator ladder(Index dim) {
    require_dim(dim, 2, "ladder");
    Matrix a = Matrix::Zero(dim, dim);
    for (Index n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return Operator(std::move(a));
}

Operator number(Index dim) {
    require_dim(dim, 2, "number");
    Matrix n = Matrix::Zero(dim, dim);
    for (Index k = 0; k < dim; ++k) n(k, k) = static_cast<double>(k);
    return Operator(std::move(n), true);
}

Operator identity(Index dim) {
    require_dim(dim, 2, "identity");
    return Operator(Matrix::Identity(dim, dim), true);
}

Operator kinetic(Index dim) {
    require_dim(dim, 3, "kinetic");
    const Matrix a = ladder(dim).matrix();
    const Matrix ad = a.adjoint();
    const Matrix n = number(dim).matrix();
    Matrix k = 0.25 * (2.0 * n + Matrix::Identity(dim, dim) - ad * ad - a * a);
    return Operator(std::move(k), true);
}

Operator kinetic_squared(Index dim) {
    require_dim(dim, 3, "kinetic_squared");
    const Matrix k = kinetic(dim + 2).matrix();
    Matrix k2 = (k * k).topLeftCorner(dim, dim);
    return Operator(std::move(k2), true);
}

Operator quadrature(double theta, Index dim) {
    require_dim(dim, 2, "quadrature");
    const Matrix a = ladder(dim).matrix();
    const cplx phase = std::polar(1.0, theta);
    Matrix q = (a * std::conj(phase) + a.adjoint() * phase) / std::numbers::sqrt2;
    return Operator(std::move(q), true);
}

Vector fock_vector(Index dim, Index n) {
    Vector v = Vector::Zero(dim);
    v(n) = 1.0;
    return v;
}

Vector coherent_vector(Index dim, cplx alpha) {
    Vector v(dim);
    cplx c = std::exp(-0.5 * std::norm(alpha));
    for (Index n = 0; n < dim; ++n) {
        v(n) = c;
        c *= alpha / std::sqrt(static_cast<double>(n + 1));
    }
    return v / v.norm();
}

double trace_distance(const Matrix& a, const Matrix& b) {
    const Matrix d = a - b;
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

// --- Wigner ---------------------------------------------------------------

void GridSpec::validate() const {
    if (nx < 2 || np < 2) throw ConfigError("Wigner grid needs at least 2 samples per axis");
    if (!(x_max > x_min) || !(p_max > p_min)) throw ConfigError("Wigner grid bounds are inverted");
}

double WignerGrid::total_mass() const { return values.sum() * spec.dx() * spec.dp(); }

double wigner_point(const DensityMatrix& rho, double x, double p) {
    // W = sum_{m,n} rho_mn W_{|m><n|}, with for k = m - n >= 0
    //   W_{|m><n|} = (-1)^n/pi sqrt(n!/m!) (sqrt2 (x - i p))^k e^{-r2} L_n^k(2 r2).
    const Matrix& m = rho.matrix();
    const Index dim = rho.dim();
    const double r2 = x * x + p * p;
    const double u = 2.0 * r2;
    const double log_abs_z = 0.5 * std::log(u);  // |sqrt2 (x - ip)| = sqrt(2 r2)
    const double arg_z = std::atan2(-p, x);

    double w = 0.0;
    for (Index k = 0; k < dim; ++k) {
        const double kd = static_cast<double>(k);
        double l_prev = 0.0;
        double l_cur = 1.0;  // L_0^k
        for (Index n = 0; n + k < dim; ++n) {
            const double nd = static_cast<double>(n);
            if (n == 1) {
                l_prev = 1.0;
                l_cur = 1.0 + kd - u;
            } else if (n > 1) {
                const double next = ((2.0 * nd - 1.0 + kd - u) * l_cur - (nd - 1.0 + kd) * l_prev) / nd;
                l_prev = l_cur;
                l_cur = next;
            }
            const cplx rho_mn = m(n + k, n);
            if (rho_mn == cplx(0.0)) continue;
            double log_mag = 0.5 * (std::lgamma(nd + 1.0) - std::lgamma(nd + kd + 1.0)) - r2;
            if (k > 0) log_mag += (r2 > 0.0 ? kd * log_abs_z : -INFINITY);
            const double sign = (n % 2 == 0) ? 1.0 : -1.0;
            const double mag = sign * std::exp(log_mag) * l_cur;
            const cplx term = rho_mn * std::polar(mag, kd * arg_z);
            w += (k == 0 ? term.real() : 2.0 * term.real());
        }
    }
    return w / std::numbers::pi;
}

namespace {

WignerGrid make_grid(const GridSpec& spec) {
    spec.validate();
    WignerGrid g;
    g.spec = spec;
    g.x.resize(static_cast<std::size_t>(spec.nx));
    g.p.resize(static_cast<std::size_t>(spec.np));
    for (Index i = 0; i < spec.nx; ++i) g.x[static_cast<std::size_t>(i)] = spec.x(i);
    for (Index j = 0; j < spec.np; ++j) g.p[static_cast<std::size_t>(j)] = spec.p(j);
    g.values.resize(spec.nx, spec.np);
    return g;
}

void finish_grid(WignerGrid& g) {
    g.captured_mass = g.total_mass();
    if (g.captured_mass < kWignerMassThreshold) {
        std::ostringstream msg;
        msg << "Wigner grid truncates the state: captured mass " << g.captured_mass;
        g.warning = msg.str();
    }
}

} // namespace

WignerGrid wigner(const DensityMatrix& rho, const GridSpec& spec) {
    WignerGrid g = make_grid(spec);
    const Index nx = spec.nx;
    const Index np = spec.np;
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < nx; ++i) {
        for (Index j = 0; j < np; ++j) g.values(i, j) = wigner_point(rho, spec.x(i), spec.p(j));
    }
    finish_grid(g);
    return g;
}

WignerGrid wigner_serial(const DensityMatrix& rho, const GridSpec& spec) {
    WignerGrid g = make_grid(spec);
    for (Index i = 0; i < spec.nx; ++i) {
        for (Index j = 0; j < spec.np; ++j) g.values(i, j) = wigner_point(rho, spec.x(i), spec.p(j));
    }
    finish_grid(g);
    return g;
}

void write_wigner_csv(const WignerGrid& grid, std::ostream& out) {
    out << "x,p,w\n" << std::setprecision(17);
    for (Index i = 0; i < grid.values.rows(); ++i) {
        for (Index j = 0; j < grid.values.cols(); ++j) {
            out << grid.x[static_cast<std::size_t>(i)] << ',' << grid.p[static_cast<std::size_t>(j)] << ','
                << grid.values(i, j) << '\n';
        }
    }
}

WignerGrid read_wigner_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("x,p,w", 0) != 0) throw ConfigError("Wigner CSV: expected header x,p,w");
    std::vector<double> xs, ps, ws;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        double v[3];
        char sep = 0;
        if (!(row >> v[0] >> sep >> v[1] >> sep >> v[2])) throw ConfigError("Wigner CSV: malformed row '" + line + "'");
        xs.push_back(v[0]);
        ps.push_back(v[1]);
        ws.push_back(v[2]);
    }
    if (ws.empty()) throw ConfigError("Wigner CSV: no samples");
    // Row-major: p varies fastest.
    std::size_t np = 1;
    while (np < xs.size() && xs[np] == xs[0]) ++np;
    if (xs.size() % np != 0) throw ConfigError("Wigner CSV: samples do not form a rectangular grid");
    const std::size_t nx = xs.size() / np;

    GridSpec spec;
    spec.nx = static_cast<Index>(nx);
    spec.np = static_cast<Index>(np);
    spec.x_min = xs.front();
    spec.x_max = xs.back();
    spec.p_min = ps.front();
    spec.p_max = ps[np - 1];
    WignerGrid g = make_grid(spec);
    for (std::size_t i = 0; i < nx; ++i) {
        g.x[i] = xs[i * np];
        for (std::size_t j = 0; j < np; ++j) {
            if (i == 0) g.p[j] = ps[j];
            g.values(static_cast<Index>(i), static_cast<Index>(j)) = ws[i * np + j];
        }
    }
    finish_grid(g);
    return g;
}

} // namespace sfd
