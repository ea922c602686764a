// fock.hpp: Operator algebra on a truncated single-mode Fock space
//
// Energies are in units of hbar*omega; quadratures use x = (a + a^dag)/sqrt(2)
// so that the vacuum variance of every quadrature is 1/2.

#pragma once

#include <complex>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sfd {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;

inline constexpr Index kDefaultDim = 30;

// Dense operator on levels 0..dim-1. Operators flagged Hermitian are checked
// on construction (tolerance 1e-12).
class Operator {
public:
    explicit Operator(Matrix entries, bool hermitian = false);

    Index dim() const { return m_.rows(); }
    const Matrix& matrix() const { return m_; }
    bool hermitian() const { return hermitian_; }
    cplx operator()(Index row, Index col) const { return m_(row, col); }

    Operator adjoint() const;
    Operator operator*(const Operator& rhs) const;

private:
    Matrix m_;
    bool hermitian_;
};

// Unit-trace, Hermitian, positive matrix. Construction validates all three.
class DensityMatrix {
public:
    static constexpr double kTraceTol = 1e-9;
    static constexpr double kHermTol = 1e-9;
    static constexpr double kPositivityTol = 1e-7;

    explicit DensityMatrix(Matrix entries);

    static DensityMatrix fock(Index dim, Index n);
    static DensityMatrix pure(const Vector& psi);
    // (|0> + |1>)/sqrt(2)
    static DensityMatrix superposition01(Index dim);

    Index dim() const { return m_.rows(); }
    const Matrix& matrix() const { return m_; }
    cplx operator()(Index row, Index col) const { return m_(row, col); }

    double purity() const;
    double min_eigenvalue() const;
    cplx expectation(const Matrix& op) const;

private:
    Matrix m_;
};

Operator ladder(Index dim);
Operator number(Index dim);
Operator identity(Index dim);
// K / (hbar omega) = (2N + 1 - a^dag^2 - a^2) / 4.
Operator kinetic(Index dim);
// K^2 with every entry exact: built on dim+2 levels, then truncated.
Operator kinetic_squared(Index dim);
// (a e^{-i theta} + a^dag e^{i theta}) / sqrt(2); theta = 0 is x, pi/2 is p.
Operator quadrature(double theta, Index dim);

Vector fock_vector(Index dim, Index n);
Vector coherent_vector(Index dim, cplx alpha);

double trace_distance(const Matrix& a, const Matrix& b);
bool is_hermitian(const Matrix& m, double tol);

// --- Wigner function -------------------------------------------------------

struct GridSpec {
    double x_min = -5.0, x_max = 5.0;
    Index nx = 101;
    double p_min = -5.0, p_max = 5.0;
    Index np = 101;

    double dx() const { return (x_max - x_min) / static_cast<double>(nx - 1); }
    double dp() const { return (p_max - p_min) / static_cast<double>(np - 1); }
    double x(Index i) const { return x_min + static_cast<double>(i) * dx(); }
    double p(Index j) const { return p_min + static_cast<double>(j) * dp(); }
    void validate() const;
};

struct WignerGrid {
    GridSpec spec;
    std::vector<double> x;
    std::vector<double> p;
    Eigen::MatrixXd values;  // values(i, j) = W(x[i], p[j])
    double captured_mass = 0.0;
    std::optional<std::string> warning;

    double total_mass() const;
};

// Captured mass below this raises the truncation warning.
inline constexpr double kWignerMassThreshold = 0.98;

// Laguerre-series evaluation, OpenMP over grid rows.
WignerGrid wigner(const DensityMatrix& rho, const GridSpec& grid);
// Serial reference; bit-identical to wigner().
WignerGrid wigner_serial(const DensityMatrix& rho, const GridSpec& grid);
// Single phase-space point.
double wigner_point(const DensityMatrix& rho, double x, double p);

// CSV with header "x,p,w", row-major over (x, p).
void write_wigner_csv(const WignerGrid& grid, std::ostream& out);
WignerGrid read_wigner_csv(std::istream& in);

} // namespace sfd
