#include <doctest.h>

#include <numbers>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "sfd/errors.hpp"
#include "sfd/fock.hpp"

using namespace sfd;
using doctest::Approx;

TEST_CASE("ladder operator entries") {
    CHECK(ladder(2)(0, 1) == cplx(1.0));
    CHECK(std::abs(ladder(3)(1, 2) - std::sqrt(2.0)) < 1e-15);
    const Matrix n = ladder(5).adjoint().matrix() * ladder(5).matrix();
    for (Index i = 0; i < 5; ++i) {
        for (Index j = 0; j < 5; ++j) CHECK(std::abs(n(i, j) - (i == j ? double(i) : 0.0)) < 1e-14);
    }
    CHECK_THROWS_AS(ladder(1), InvalidDimension);
}

TEST_CASE("commutator of a and a^dag is the identity below the top level") {
    const Index dim = 12;
    const Matrix a = ladder(dim).matrix();
    const Matrix c = a * a.adjoint() - a.adjoint() * a;
    CHECK((c.topLeftCorner(dim - 1, dim - 1) - Matrix::Identity(dim - 1, dim - 1)).norm() < 1e-13);
    CHECK(std::abs(c(dim - 1, dim - 1) - cplx(1.0 - dim)) < 1e-12);
    CHECK((number(dim).matrix() - a.adjoint() * a).norm() < 1e-13);
}

TEST_CASE("kinetic operator") {
    CHECK(kinetic(5)(0, 0) == cplx(0.25));
    CHECK(kinetic(5).hermitian());
    CHECK_THROWS_AS(kinetic(2), InvalidDimension);

    const Index dim = 9;
    const Matrix a = ladder(dim).matrix();
    const Matrix ad = a.adjoint();
    const Matrix built = (2.0 * ad * a + Matrix::Identity(dim, dim) - ad * ad - a * a) / 4.0;
    CHECK((kinetic(dim).matrix() - built).norm() < 1e-14);
    CHECK((kinetic(dim).matrix() - oracle::kinetic_entries(dim)).norm() < 1e-14);
}

TEST_CASE("kinetic squared table") {
    const Matrix k2 = kinetic_squared(8).matrix();
    CHECK(k2(0, 0).real() == Approx(3.0 / 16.0).scale(0).epsilon(1e-14));
    CHECK(k2(1, 1).real() == Approx(15.0 / 16.0).scale(0).epsilon(1e-14));
    CHECK(k2(0, 2).real() == Approx(-3.0 * std::sqrt(2.0) / 8.0).scale(0).epsilon(1e-14));
    CHECK(k2(0, 4).real() == Approx(std::sqrt(6.0) / 8.0).scale(0).epsilon(1e-14));
    CHECK(k2(1, 3).real() == Approx(-5.0 * std::sqrt(6.0) / 8.0).scale(0).epsilon(1e-14));
    CHECK(k2(1, 5).real() == Approx(std::sqrt(30.0) / 8.0).scale(0).epsilon(1e-14));

    // Every entry of the truncated square equals the one of a much larger space.
    const Matrix big = oracle::kinetic_entries(30);
    const Matrix exact = (big * big).topLeftCorner(8, 8);
    CHECK((k2 - exact).norm() < 1e-12);
}

TEST_CASE("kinetic squared selection rule") {
    const Matrix k2 = kinetic_squared(14).matrix();
    for (Index m = 0; m < 14; ++m) {
        for (Index n = 0; n < 14; ++n) {
            const Index d = std::abs(m - n);
            if (d % 2 == 1 || d > 4) CHECK(std::abs(k2(m, n)) == 0.0);
            else CHECK(std::abs(k2(m, n)) > 0.0);
        }
    }
}

TEST_CASE("quadrature operators") {
    const Index dim = 6;
    const Vector vac = fock_vector(dim, 0);
    for (double theta : {0.0, 0.3, std::numbers::pi / 2, 2.0}) {
        const Matrix q = quadrature(theta, dim).matrix();
        const cplx v = vac.dot(q * q * vac);
        CHECK(v.real() == Approx(0.5).scale(0).epsilon(1e-14));
    }
    const Matrix x = quadrature(0.0, dim).matrix();
    const Matrix x2 = x * x;
    CHECK(std::abs(x2(0, 2) - 1.0 / std::sqrt(2.0)) < 1e-14);

    // p quadrature against (a - a^dag)/(i sqrt 2)
    const Matrix a = ladder(dim).matrix();
    const Matrix p = (a - a.adjoint()) / cplx(0.0, std::sqrt(2.0));
    CHECK((quadrature(std::numbers::pi / 2, dim).matrix() - p).norm() < 1e-14);
}

TEST_CASE("density matrix validation") {
    const Index dim = 4;
    Matrix bad_trace = Matrix::Identity(dim, dim) * 0.3;
    CHECK_THROWS_AS(DensityMatrix{bad_trace}, Error);

    Matrix non_herm = DensityMatrix::superposition01(dim).matrix();
    non_herm(0, 1) += cplx(0.0, 0.1);
    CHECK_THROWS_AS(DensityMatrix{non_herm}, Error);

    Matrix negative = Matrix::Zero(dim, dim);
    negative(0, 0) = 1.2;
    negative(1, 1) = -0.2;
    CHECK_THROWS_AS(DensityMatrix{negative}, Error);

    const DensityMatrix sup = DensityMatrix::superposition01(dim);
    CHECK(sup.purity() == Approx(1.0).scale(0).epsilon(1e-14));
    CHECK(std::abs(sup(0, 1) - 0.5) < 1e-15);
    CHECK(sup.min_eigenvalue() > -1e-14);
}

TEST_CASE("wigner function values at the origin") {
    const GridSpec grid;
    CHECK(wigner_point(DensityMatrix::fock(10, 0), 0.0, 0.0) == Approx(1.0 / std::numbers::pi).scale(0).epsilon(1e-13));
    CHECK(wigner_point(DensityMatrix::fock(10, 1), 0.0, 0.0) == Approx(-1.0 / std::numbers::pi).scale(0).epsilon(1e-13));
    CHECK(wigner_point(DensityMatrix::fock(10, 4), 0.0, 0.0) == Approx(1.0 / std::numbers::pi).scale(0).epsilon(1e-13));
}

TEST_CASE("wigner function against the wavefunction integral") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    const Index dim = 6;
    Vector psi(dim);
    for (Index i = 0; i < dim; ++i) psi(i) = cplx(g(rng), g(rng));
    psi.normalize();
    const DensityMatrix rho = DensityMatrix::pure(psi);
    for (auto [x, p] : {std::pair{0.0, 0.0}, {0.7, -0.4}, {-1.3, 1.1}, {2.0, 0.5}, {0.1, -2.2}}) {
        CHECK(wigner_point(rho, x, p) == Approx(oracle::wigner_by_integral(psi, x, p)).scale(0).epsilon(1e-9));
    }
}

TEST_CASE("wigner function of a coherent state is a displaced Gaussian") {
    const cplx alpha(0.8, -0.5);
    const DensityMatrix rho = DensityMatrix::pure(coherent_vector(40, alpha));
    const double x0 = std::sqrt(2.0) * alpha.real();
    const double p0 = std::sqrt(2.0) * alpha.imag();
    for (auto [x, p] : {std::pair{0.0, 0.0}, {x0, p0}, {1.5, -1.0}, {-0.5, 0.3}}) {
        const double expected = std::exp(-(x - x0) * (x - x0) - (p - p0) * (p - p0)) / std::numbers::pi;
        CHECK(wigner_point(rho, x, p) == Approx(expected).scale(0).epsilon(1e-10));
    }
}

TEST_CASE("wigner grid normalization, truncation warning and serial reference") {
    const DensityMatrix rho = DensityMatrix::superposition01(12);
    const WignerGrid w = wigner(rho, GridSpec{});
    CHECK(w.total_mass() == Approx(1.0).scale(0).epsilon(0.02));
    CHECK_FALSE(w.warning.has_value());

    const WignerGrid serial = wigner_serial(rho, GridSpec{});
    CHECK((w.values - serial.values).cwiseAbs().maxCoeff() == 0.0);

    GridSpec small;
    small.x_min = -0.5;
    small.x_max = 0.5;
    small.p_min = -0.5;
    small.p_max = 0.5;
    small.nx = small.np = 21;
    const WignerGrid cut = wigner(rho, small);
    REQUIRE(cut.warning.has_value());
    CHECK(cut.captured_mass < kWignerMassThreshold);
}

TEST_CASE("wigner marginal over p is the position distribution") {
    const DensityMatrix rho = DensityMatrix::fock(8, 1);
    GridSpec spec;
    spec.p_min = -7.0;
    spec.p_max = 7.0;
    spec.np = 281;
    const WignerGrid w = wigner(rho, spec);
    for (Index i = 0; i < spec.nx; i += 10) {
        const double x = w.x[i];
        const double marginal = w.values.row(i).sum() * spec.dp();
        const double psi = oracle::hermite_function(1, x);
        CHECK(marginal == Approx(psi * psi).epsilon(1e-6).scale(1.0));
    }
}

TEST_CASE("wigner CSV round trip") {
    GridSpec spec;
    spec.nx = 11;
    spec.np = 7;
    const WignerGrid w = wigner(DensityMatrix::fock(6, 2), spec);
    std::stringstream buf;
    write_wigner_csv(w, buf);
    std::string header;
    std::getline(buf, header);
    CHECK(header == "x,p,w");
    buf.seekg(0);
    const WignerGrid back = read_wigner_csv(buf);
    REQUIRE(back.values.rows() == 11);
    REQUIRE(back.values.cols() == 7);
    CHECK((back.values - w.values).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(back.spec.x_min == Approx(spec.x_min).scale(0));
    CHECK(back.spec.p_max == Approx(spec.p_max).scale(0));
}
