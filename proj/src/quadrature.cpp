// quadrature.cpp: Gauss-Legendre nodes by Newton iteration on P_n

#include "sfd/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "sfd/errors.hpp"

namespace sfd {

namespace {

QuadratureRule compute_rule(std::size_t n) {
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double nd = static_cast<double>(n);
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (nd + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = z;
            for (std::size_t k = 2; k <= n; ++k) {
                const double kd = static_cast<double>(k);
                const double p2 = ((2.0 * kd - 1.0) * z * p1 - (kd - 1.0) * p0) / kd;
                p0 = p1;
                p1 = p2;
            }
            dp = nd * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        rule.nodes[i] = -z;
        rule.nodes[n - 1 - i] = z;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

} // namespace

const QuadratureRule& gauss_legendre(std::size_t n) {
    if (n == 0) throw ConfigError("Gauss-Legendre rule needs n >= 1");
    static std::mutex mutex;
    static std::map<std::size_t, QuadratureRule> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_rule(n)).first;
    return it->second;
}

QuadratureRule gauss_legendre(double a, double b, std::size_t n, std::size_t panels) {
    if (panels == 0) panels = 1;
    const QuadratureRule& ref = gauss_legendre(n);
    QuadratureRule out;
    out.nodes.reserve(n * panels);
    out.weights.reserve(n * panels);
    const double width = (b - a) / static_cast<double>(panels);
    for (std::size_t k = 0; k < panels; ++k) {
        const double lo = a + width * static_cast<double>(k);
        const double half = 0.5 * width;
        for (std::size_t i = 0; i < n; ++i) {
            out.nodes.push_back(lo + half * (ref.nodes[i] + 1.0));
            out.weights.push_back(half * ref.weights[i]);
        }
    }
    return out;
}

} // namespace sfd
