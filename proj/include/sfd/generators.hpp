// generators.hpp: Right-hand sides of the master equations
//
// All generators act on density matrices in units hbar = omega = 1: the time
// argument is omega*t and every rate is divided by omega (see params.hpp).

#pragma once

#include <functional>
#include <vector>

#include "sfd/fock.hpp"
#include "sfd/params.hpp"

namespace sfd {

// Real banded matrix stored by diagonals; products with dense complex matrices cost
// O(bands * dim^2) instead of O(dim^3).
class BandedReal {
public:
    BandedReal() = default;
    // Keeps every diagonal of m containing an entry with |value| > 0; m must be real.
    explicit BandedReal(const Matrix& m);

    Matrix left(const Matrix& rho) const;   // B * rho
    Matrix right(const Matrix& rho) const;  // rho * B
    Matrix dense() const;
    Index dim() const { return dim_; }

private:
    Index dim_ = 0;
    std::vector<Index> offsets_;              // column - row
    std::vector<Eigen::VectorXd> diagonals_;  // diagonals_[k](i) = B(i, i + offset) for rows with a valid column
};

// Generator signature: d rho / d(omega t) at time t for state rho.
using Rhs = std::function<Matrix(double t, const Matrix& rho)>;

// Pointwise sum of generators, evaluated left to right.
Rhs sum(std::vector<Rhs> terms);
Rhs operator+(Rhs lhs, Rhs rhs);

// Which H' generates the unitary part and the interaction picture.
enum class HamiltonianKind {
    rwa,   // diagonal H_RWA
    full,  // N + 1/2 + 4 ap_hw beta_bar K^2
};

// H_RWA/(hbar omega): (N + 1/2) + (3/8) ap_hw beta_bar (N^2 + N + 1/2).
Operator h_rwa(Index dim, double beta_bar, double ap_hw);
// Non-RWA H' = H + 4 a_P beta_bar K^2 in units hbar omega.
Operator h_full(Index dim, double beta_bar, double ap_hw);
Operator h_harmonic(Index dim);
Operator h_prime(Index dim, const ModelParams& p, HamiltonianKind kind);

// -i[H, rho]; diagonal H is handled element-wise.
class Unitary {
public:
    explicit Unitary(const Operator& h);
    Matrix operator()(double t, const Matrix& rho) const;

private:
    Matrix h_;
    Eigen::VectorXd diag_;
    bool diagonal_;
};

// -i[H', rho] - c [K^2, [K^2, rho]] with c = 1/(omega tau_G).
class GupMarkov {
public:
    GupMarkov(Index dim, const ModelParams& p, HamiltonianKind kind = HamiltonianKind::rwa);

    Matrix operator()(double t, const Matrix& rho) const;
    Matrix dissipator(const Matrix& rho) const;
    double rate() const { return rate_; }

private:
    Unitary unitary_;
    BandedReal k2_;
    double rate_;
};

// gamma (a rho a^dag - {N, rho}/2), gamma in units of omega.
class Damping {
public:
    Damping(Index dim, double gamma);
    Matrix operator()(double t, const Matrix& rho) const;

private:
    BandedReal a_, ad_;
    Eigen::VectorXd n_;
    double gamma_;
};

// -i[N + 1/2, rho] - (tau_c omega / 2) [K, [K, rho]].
class Breuer {
public:
    Breuer(Index dim, const ModelParams& p);
    Matrix operator()(double t, const Matrix& rho) const;
    Matrix dissipator(const Matrix& rho) const;

private:
    Unitary unitary_;
    BandedReal k_;
    double half_rate_;
};

// K^{2I}(s) = e^{i H' s} K^2 e^{-i H' s}, via one eigendecomposition of H'.
class InteractionK2 {
public:
    explicit InteractionK2(const Operator& h_prime);

    Operator at(double s) const;
    Index dim() const { return k2_eig_.rows(); }
    const Eigen::VectorXd& energies() const { return energies_; }
    const Matrix& eigenvectors() const { return vecs_; }
    // K^2 expressed in the eigenbasis of H'.
    const Matrix& k2_eigenbasis() const { return k2_eig_; }

private:
    Eigen::VectorXd energies_;
    Matrix vecs_;
    Matrix k2_eig_;
};

Operator heisenberg_k2(const Operator& h_prime, double s);

// Time-convolutionless memory term with an exponential kernel:
//   -i[H', rho] - [K^2, [M(t), rho]],
//   M(t) = 2c int_0^{min(t, 8 tau)} dv f(v) K^{2I}(-v),
// evaluated by composite 64-node Gauss-Legendre quadrature.
class GupMemory {
public:
    static constexpr std::size_t kNodes = 64;
    static constexpr double kWindow = 8.0;  // support cut-off in units of tau

    GupMemory(Index dim, const ModelParams& p, HamiltonianKind kind = HamiltonianKind::rwa);

    Matrix operator()(double t, const Matrix& rho) const;
    Matrix dissipator(double t, const Matrix& rho) const;
    Matrix memory_operator(double t) const;
    double tau() const { return tau_; }

private:
    Matrix compute_memory(double window) const;

    Unitary unitary_;
    InteractionK2 k2i_;
    BandedReal k2_;
    double rate_;
    double tau_;
    Matrix saturated_;  // M(t) for t >= 8 tau
};

// Convenience wrappers matching the operation names; each builds its operators.
Matrix gup_markov_rhs(const Matrix& rho, const ModelParams& p, HamiltonianKind kind = HamiltonianKind::rwa);
Matrix damping_rhs(const Matrix& rho, double gamma);
Matrix breuer_rhs(const Matrix& rho, const ModelParams& p);
Matrix gup_nonmarkov_rhs(const Matrix& rho, double t, const ModelParams& p,
                         HamiltonianKind kind = HamiltonianKind::rwa);

} // namespace sfd
