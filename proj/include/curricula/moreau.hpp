#pragma once

// Zero-temperature single-sample optimisation inside the energetic channel:
//   M*(y, omega, v) = max_lambda  -lambda^2/2 - loss(y, sqrt(v)*lambda + omega)
// with loss(y, h) = log(1 + exp(-y h)). The objective is strictly concave, so
// the maximiser is the unique root of
//   lambda = sqrt(v) * y * sigmoid(-y (sqrt(v) lambda + omega)).

#include <cmath>
#include <stdexcept>
#include <string>

namespace curricula {

inline double logistic(double z) {
    if (z > 0.0) return std::log1p(std::exp(-z));
    return -z + std::log1p(std::exp(z));
}

inline double sigmoid_stable(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

struct MoreauResult {
    double lambda_star = 0.0;
    double value = 0.0;  // envelope value at the maximiser
};

inline MoreauResult moreau_logistic(double y, double omega, double v, double inner_tol = 1e-12,
                                    int max_iter = 200) {
    if (!(v > 0.0)) throw std::invalid_argument("moreau_logistic: v must be positive");
    const double sv = std::sqrt(v);
    double lam = 0.0;
    double resid = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        const double h = sv * lam + omega;
        const double s = sigmoid_stable(-y * h);
        resid = lam - sv * y * s;
        if (std::fabs(resid) <= inner_tol) {
            MoreauResult r;
            r.lambda_star = lam;
            r.value = -0.5 * lam * lam - logistic(y * h);
            return r;
        }
        const double dresid = 1.0 + v * s * (1.0 - s);  // >= 1, Newton always sane
        lam -= resid / dresid;
        // The fixed point satisfies |lambda| <= sqrt(v); keep Newton inside.
        if (lam > sv) lam = sv;
        if (lam < -sv) lam = -sv;
    }
    throw std::runtime_error("moreau_logistic: no convergence (residual " + std::to_string(resid) + ")");
}

}  // namespace curricula
