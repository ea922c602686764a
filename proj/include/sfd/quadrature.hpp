// quadrature.hpp: Gauss-Legendre rules

#pragma once

#include <cstddef>
#include <vector>

namespace sfd {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// n-point Gauss-Legendre rule on [-1, 1]; results are cached per n.
const QuadratureRule& gauss_legendre(std::size_t n);

// Composite rule on [a, b] with `panels` equal panels of n nodes each.
QuadratureRule gauss_legendre(double a, double b, std::size_t n, std::size_t panels = 1);

} // namespace sfd
