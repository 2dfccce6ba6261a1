#include "curricula/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace curricula {

namespace {

constexpr double kSqrtPi = 1.7724538509055160273;

// Implicit-shift QL for a symmetric tridiagonal matrix (diag d, off-diag e),
// accumulating only the first row of the eigenvector matrix in z (that is all
// Golub-Welsch needs). Standard tqli/tql2 structure.
void tridiag_eigen_first_row(std::vector<double>& d, std::vector<double>& e, std::vector<double>& z) {
    const int n = static_cast<int>(d.size());
    z.assign(n, 0.0);
    if (n == 0) return;
    z[0] = 1.0;
    if (n == 1) return;
    e.push_back(0.0);

    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::fabs(d[m]) + std::fabs(d[m + 1]);
                if (std::fabs(e[m]) <= 2.3e-16 * dd) break;
            }
            if (m != l) {
                if (iter++ == 50) throw std::runtime_error("quadrature: eigen iteration failed");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + (g >= 0.0 ? r : -r));
                double s = 1.0, c = 1.0, p = 0.0;
                int i;
                for (i = m - 1; i >= l; --i) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    f = z[i + 1];
                    z[i + 1] = s * z[i] + c * f;
                    z[i] = c * z[i] - s * f;
                }
                if (r == 0.0 && i >= l) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }

    // Sort ascending by node, carrying first components along.
    for (int i = 0; i < n - 1; ++i) {
        int k = i;
        for (int j = i + 1; j < n; ++j)
            if (d[j] < d[k]) k = j;
        if (k != i) {
            std::swap(d[i], d[k]);
            std::swap(z[i], z[k]);
        }
    }
}

QuadRule golub_welsch(std::vector<double> diag, std::vector<double> offdiag, double mu0) {
    std::vector<double> z;
    tridiag_eigen_first_row(diag, offdiag, z);
    QuadRule rule;
    rule.nodes = std::move(diag);
    rule.weights.resize(rule.nodes.size());
    for (size_t i = 0; i < rule.weights.size(); ++i) rule.weights[i] = mu0 * z[i] * z[i];
    return rule;
}

}  // namespace

QuadRule gauss_hermite(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: n must be >= 1");
    std::vector<double> diag(n, 0.0), off(n - 1);
    for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(k / 2.0);
    return golub_welsch(std::move(diag), std::move(off), kSqrtPi);
}

QuadRule gauss_hermite_prob(int n) {
    QuadRule rule = gauss_hermite(n);
    const double inv_sqrt_pi = 1.0 / kSqrtPi;
    for (size_t i = 0; i < rule.size(); ++i) {
        rule.nodes[i] *= std::sqrt(2.0);
        rule.weights[i] *= inv_sqrt_pi;
    }
    return rule;
}

QuadRule gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
    std::vector<double> diag(n, 0.0), off(n - 1);
    for (int k = 1; k < n; ++k) off[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
    return golub_welsch(std::move(diag), std::move(off), 2.0);
}

QuadRule gauss_legendre_on(int n, double a, double b) {
    QuadRule rule = gauss_legendre(n);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (size_t i = 0; i < rule.size(); ++i) {
        rule.nodes[i] = mid + half * rule.nodes[i];
        rule.weights[i] *= half;
    }
    return rule;
}

}  // namespace curricula
