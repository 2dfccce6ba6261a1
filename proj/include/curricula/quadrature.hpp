#pragma once

// Gauss quadrature rules computed by the Golub-Welsch method (symmetric
// tridiagonal eigenproblem on the Jacobi matrix).

#include <vector>

namespace curricula {

struct QuadRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    size_t size() const { return nodes.size(); }
};

// Nodes/weights for int f(x) exp(-x^2) dx over the real line (physicists'
// Hermite weight). Use gauss_hermite_prob for the unit-Gaussian measure.
QuadRule gauss_hermite(int n);

// Nodes/weights for the standard normal measure: int f(z) N(0,1)(z) dz.
QuadRule gauss_hermite_prob(int n);

// Nodes/weights for int_{-1}^{1} f(x) dx.
QuadRule gauss_legendre(int n);

// Gauss-Legendre rule mapped onto [a, b].
QuadRule gauss_legendre_on(int n, double a, double b);

}  // namespace curricula
