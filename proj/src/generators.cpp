// generators.cpp: Hamiltonians, dissipators and the memory-kernel term

#include "sfd/generators.hpp"

#include <algorithm>
#include <cmath>

#include "sfd/errors.hpp"
#include "sfd/quadrature.hpp"

namespace sfd {

namespace {

BandedReal sparse(const Matrix& m) { return BandedReal(m); }

Matrix double_commutator(const BandedReal& a, const Matrix& rho) {
    const Matrix inner = a.left(rho) - a.right(rho);
    return a.left(inner) - a.right(inner);
}

} // namespace

BandedReal::BandedReal(const Matrix& m) : dim_(m.rows()) {
    if (m.rows() != m.cols()) throw InvalidDimension("BandedReal: matrix must be square");
    if (m.imag().cwiseAbs().maxCoeff() > 0.0) throw Error("BandedReal: matrix must be real");
    for (Index off = -(dim_ - 1); off < dim_; ++off) {
        const Index first = std::max<Index>(0, -off);
        const Index len = dim_ - std::abs(off);
        Eigen::VectorXd diag(dim_);
        diag.setZero();
        bool any = false;
        for (Index k = 0; k < len; ++k) {
            const Index i = first + k;
            diag(i) = m(i, i + off).real();
            any = any || diag(i) != 0.0;
        }
        if (any) {
            offsets_.push_back(off);
            diagonals_.push_back(std::move(diag));
        }
    }
}

Matrix BandedReal::left(const Matrix& rho) const {
    Matrix out = Matrix::Zero(dim_, rho.cols());
    for (std::size_t k = 0; k < offsets_.size(); ++k) {
        const Index off = offsets_[k];
        const Index first = std::max<Index>(0, -off);
        const Index len = dim_ - std::abs(off);
        // out(i, :) += B(i, i + off) rho(i + off, :)
        out.middleRows(first, len) +=
            diagonals_[k].segment(first, len).asDiagonal() * rho.middleRows(first + off, len);
    }
    return out;
}

Matrix BandedReal::right(const Matrix& rho) const {
    Matrix out = Matrix::Zero(rho.rows(), dim_);
    for (std::size_t k = 0; k < offsets_.size(); ++k) {
        const Index off = offsets_[k];
        const Index first = std::max<Index>(0, -off);
        const Index len = dim_ - std::abs(off);
        // out(:, i + off) += rho(:, i) B(i, i + off)
        out.middleCols(first + off, len) +=
            rho.middleCols(first, len) * diagonals_[k].segment(first, len).asDiagonal();
    }
    return out;
}

Matrix BandedReal::dense() const { return left(Matrix::Identity(dim_, dim_)); }

Rhs sum(std::vector<Rhs> terms) {
    if (terms.empty()) throw ConfigError("cannot sum an empty list of generators");
    return [terms = std::move(terms)](double t, const Matrix& rho) {
        Matrix out = terms.front()(t, rho);
        for (std::size_t i = 1; i < terms.size(); ++i) out += terms[i](t, rho);
        return out;
    };
}

Rhs operator+(Rhs lhs, Rhs rhs) { return sum({std::move(lhs), std::move(rhs)}); }

Operator h_rwa(Index dim, double beta_bar, double ap_hw) {
    if (dim < 2) throw InvalidDimension("h_rwa: dimension < 2");
    Matrix h = Matrix::Zero(dim, dim);
    const double shift = 0.375 * ap_hw * beta_bar;
    for (Index n = 0; n < dim; ++n) {
        const double nd = static_cast<double>(n);
        h(n, n) = (nd + 0.5) + shift * (nd * nd + nd + 0.5);
    }
    return Operator(std::move(h), true);
}

Operator h_harmonic(Index dim) { return h_rwa(dim, 0.0, 0.0); }

Operator h_full(Index dim, double beta_bar, double ap_hw) {
    Matrix h = h_harmonic(dim).matrix() + 4.0 * ap_hw * beta_bar * kinetic_squared(dim).matrix();
    return Operator(0.5 * (h + h.adjoint()), true);
}

Operator h_prime(Index dim, const ModelParams& p, HamiltonianKind kind) {
    return kind == HamiltonianKind::rwa ? h_rwa(dim, p.beta_bar, p.ap_hw) : h_full(dim, p.beta_bar, p.ap_hw);
}

// --- Unitary ----------------------------------------------------------------

Unitary::Unitary(const Operator& h) : h_(h.matrix()) {
    if (!is_hermitian(h_, 1e-12)) throw Error("Hamiltonian is not Hermitian");
    const Matrix off = h_ - Matrix(h_.diagonal().asDiagonal());
    diagonal_ = off.cwiseAbs().maxCoeff() == 0.0;
    diag_ = h_.diagonal().real();
}

Matrix Unitary::operator()(double, const Matrix& rho) const {
    if (diagonal_) {
        Matrix out(rho.rows(), rho.cols());
        for (Index j = 0; j < rho.cols(); ++j) {
            for (Index i = 0; i < rho.rows(); ++i) out(i, j) = cplx(0.0, -(diag_(i) - diag_(j))) * rho(i, j);
        }
        return out;
    }
    return cplx(0.0, -1.0) * (h_ * rho - rho * h_);
}

// --- GUP, Markovian ------------------------------------------------------------

GupMarkov::GupMarkov(Index dim, const ModelParams& p, HamiltonianKind kind)
    : unitary_(h_prime(dim, p, kind)), k2_(sparse(kinetic_squared(dim).matrix())), rate_(gup_rate(p)) {
    p.validate();
}

Matrix GupMarkov::dissipator(const Matrix& rho) const { return -rate_ * double_commutator(k2_, rho); }

Matrix GupMarkov::operator()(double t, const Matrix& rho) const {
    Matrix out = unitary_(t, rho);
    if (rate_ != 0.0) out += dissipator(rho);
    return out;
}

// --- amplitude damping -----------------------------------------------------

Damping::Damping(Index dim, double gamma) : gamma_(gamma) {
    if (!(gamma >= 0.0)) throw ConfigError("damping rate must be >= 0");
    a_ = sparse(ladder(dim).matrix());
    ad_ = sparse(ladder(dim).matrix().adjoint());
    n_ = number(dim).matrix().diagonal().real();
}

Matrix Damping::operator()(double, const Matrix& rho) const {
    if (gamma_ == 0.0) return Matrix::Zero(rho.rows(), rho.cols());
    Matrix out = ad_.right(a_.left(rho));
    for (Index j = 0; j < rho.cols(); ++j) {
        for (Index i = 0; i < rho.rows(); ++i) out(i, j) -= 0.5 * (n_(i) + n_(j)) * rho(i, j);
    }
    return gamma_ * out;
}

// --- Breuer metric fluctuations -------------------------------------------------

Breuer::Breuer(Index dim, const ModelParams& p)
    : unitary_(h_harmonic(dim)), k_(sparse(kinetic(dim).matrix())), half_rate_(0.5 * breuer_rate(p)) {
    p.validate();
}

Matrix Breuer::dissipator(const Matrix& rho) const { return -half_rate_ * double_commutator(k_, rho); }

Matrix Breuer::operator()(double t, const Matrix& rho) const {
    Matrix out = unitary_(t, rho);
    if (half_rate_ != 0.0) out += dissipator(rho);
    return out;
}

// --- interaction picture ---------------------------------------------------------

InteractionK2::InteractionK2(const Operator& h_prime) {
    if (!is_hermitian(h_prime.matrix(), 1e-12)) throw Error("heisenberg_k2: H' is not Hermitian");
    Eigen::SelfAdjointEigenSolver<Matrix> es(h_prime.matrix());
    energies_ = es.eigenvalues();
    vecs_ = es.eigenvectors();
    k2_eig_ = vecs_.adjoint() * kinetic_squared(h_prime.dim()).matrix() * vecs_;
}

Operator InteractionK2::at(double s) const {
    const Index d = dim();
    Matrix rotated(d, d);
    for (Index j = 0; j < d; ++j) {
        for (Index i = 0; i < d; ++i) rotated(i, j) = k2_eig_(i, j) * std::polar(1.0, (energies_(i) - energies_(j)) * s);
    }
    Matrix out = vecs_ * rotated * vecs_.adjoint();
    return Operator(0.5 * (out + out.adjoint()), true);
}

Operator heisenberg_k2(const Operator& h_prime, double s) { return InteractionK2(h_prime).at(s); }

// --- GUP memory kernel ----------------------------------------------------------

GupMemory::GupMemory(Index dim, const ModelParams& p, HamiltonianKind kind)
    : unitary_(h_prime(dim, p, kind)),
      k2i_(h_prime(dim, p, kind)),
      k2_(sparse(kinetic_squared(dim).matrix())),
      rate_(gup_rate(p)),
      tau_(p.kernel.tau * p.omega) {
    p.validate();
    if (p.kernel.is_delta()) {
        throw ConfigError("delta kernel has no memory integral; use gup_markov_rhs / GupMarkov instead");
    }
    saturated_ = compute_memory(kWindow * tau_);
}

Matrix GupMemory::compute_memory(double window) const {
    const Index d = k2i_.dim();
    if (window <= 0.0 || rate_ == 0.0) return Matrix::Zero(d, d);

    // Panels keep the fastest phase below ~30 rad per 64-node panel.
    const Eigen::VectorXd& e = k2i_.energies();
    const double spread = e.maxCoeff() - e.minCoeff();
    const auto panels = static_cast<std::size_t>(std::max(1.0, std::ceil(window * spread / 30.0)));
    const QuadratureRule rule = gauss_legendre(0.0, window, kNodes, panels);

    // sum_q w_q f(v_q) e^{-i(E_i - E_j) v_q}, as outer products of phase vectors.
    Matrix weights = Matrix::Zero(d, d);
    Vector phase(d);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        const double v = rule.nodes[q];
        const double wf = rule.weights[q] * std::exp(-v / tau_) / (2.0 * tau_);
        for (Index i = 0; i < d; ++i) phase(i) = std::polar(1.0, -e(i) * v);
        weights.noalias() += wf * (phase * phase.adjoint());
    }
    Matrix m_eig = 2.0 * rate_ * k2i_.k2_eigenbasis().cwiseProduct(weights);
    Matrix m = k2i_.eigenvectors() * m_eig * k2i_.eigenvectors().adjoint();
    return 0.5 * (m + m.adjoint());
}

Matrix GupMemory::memory_operator(double t) const {
    if (t < 0.0) throw ConfigError("memory term requires t >= 0");
    if (t >= kWindow * tau_) return saturated_;
    return compute_memory(t);
}

Matrix GupMemory::dissipator(double t, const Matrix& rho) const {
    const Matrix m = memory_operator(t);
    const Matrix inner = m * rho - rho * m;
    return -(k2_.left(inner) - k2_.right(inner));
}

Matrix GupMemory::operator()(double t, const Matrix& rho) const {
    Matrix out = unitary_(t, rho);
    if (rate_ != 0.0) out += dissipator(t, rho);
    return out;
}

// --- convenience wrappers ----------------------------------------------------------

Matrix gup_markov_rhs(const Matrix& rho, const ModelParams& p, HamiltonianKind kind) {
    return GupMarkov(rho.rows(), p, kind)(0.0, rho);
}

Matrix damping_rhs(const Matrix& rho, double gamma) { return Damping(rho.rows(), gamma)(0.0, rho); }

Matrix breuer_rhs(const Matrix& rho, const ModelParams& p) { return Breuer(rho.rows(), p)(0.0, rho); }

Matrix gup_nonmarkov_rhs(const Matrix& rho, double t, const ModelParams& p, HamiltonianKind kind) {
    return GupMemory(rho.rows(), p, kind)(t, rho);
}

} // namespace sfd
