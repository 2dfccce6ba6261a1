#pragma once

// Closed-form Gaussian expectations over the pre-activation fields of the
// teacher-student perceptron with student activation sigma(x) = erf(x/sqrt 2)
// and teacher activation phi = sign.
//
// Fields: lam_r = W_r.x_r/sqrt(N), lam_i = W_i.x_i/sqrt(N), tau = W_T.x_r/sqrt(N),
// jointly zero-mean Gaussian with Var(lam_r)=q_r, Var(lam_i)=q_i, Var(tau)=t,
// Cov(lam_r,tau)=r, other covariances zero. q_i here is the *effective*
// irrelevant variance, i.e. already multiplied by the sample difficulty.
//
// Every formula below is checked against a discontinuity-aware numerical
// quadrature oracle in the test suite (tolerance 1e-7); that oracle, not any
// transcription, is the ground truth for signs.

#include <algorithm>
#include <cmath>

namespace curricula {

struct PreactGaussian {
    double q_r = 0.0;  // Var(lam_r)
    double q_i = 0.0;  // Var(lam_i), effective (delta folded in)
    double r = 0.0;    // Cov(lam_r, tau)
    double t = 1.0;    // Var(tau)
};

namespace moments {

inline constexpr double kTwoOverPi = 2.0 / 3.14159265358979323846;

// Shared subexpressions: q = total student variance, d = 1+q,
// x = t*d - r^2 (positive by Cauchy-Schwarz), w = 1+2q.
struct Shared {
    double q, d, x, sx, w, sw;
    explicit Shared(const PreactGaussian& g) {
        q = g.q_r + g.q_i;
        d = 1.0 + q;
        x = g.t * d - g.r * g.r;
        sx = std::sqrt(std::max(x, 0.0));
        w = 1.0 + 2.0 * q;
        sw = std::sqrt(w);
    }
};

// E[ phi(tau) sigma'(lam) tau ]
inline double phi_dsig_tau(const PreactGaussian& g) {
    Shared s(g);
    return kTwoOverPi * s.sx / s.d;
}

// E[ phi(tau) sigma'(lam) lam_r ]
inline double phi_dsig_lam_r(const PreactGaussian& g) {
    Shared s(g);
    return kTwoOverPi * g.r * (g.q_i + 1.0) / (s.d * s.sx);
}

// E[ phi(tau) sigma'(lam) lam_i ]
inline double phi_dsig_lam_i(const PreactGaussian& g) {
    Shared s(g);
    return -kTwoOverPi * g.r * g.q_i / (s.d * s.sx);
}

// E[ sigma(lam) sigma'(lam) tau ]
inline double sig_dsig_tau(const PreactGaussian& g) {
    Shared s(g);
    return kTwoOverPi * g.r / (s.d * s.sw);
}

// E[ sigma(lam) sigma'(lam) lam_r ]
inline double sig_dsig_lam_r(const PreactGaussian& g) {
    Shared s(g);
    return kTwoOverPi * g.q_r / (s.d * s.sw);
}

// E[ sigma(lam) sigma'(lam) lam_i ]
inline double sig_dsig_lam_i(const PreactGaussian& g) {
    Shared s(g);
    return kTwoOverPi * g.q_i / (s.d * s.sw);
}

// E[ sigma'(lam)^2 ]  (= E[ phi^2 sigma'^2 ], phi^2 = 1)
inline double dsig_sq(const PreactGaussian& g) {
    Shared s(g);
    return kTwoOverPi / s.sw;
}

// E[ sigma(lam)^2 sigma'(lam)^2 ]
inline double sig_sq_dsig_sq(const PreactGaussian& g) {
    Shared s(g);
    return kTwoOverPi * kTwoOverPi / s.sw * std::asin(s.q / (1.0 + 3.0 * s.q));
}

// E[ phi(tau) sigma(lam) sigma'(lam)^2 ]
inline double phi_sig_dsig_sq(const PreactGaussian& g) {
    Shared s(g);
    if (s.q <= 0.0) return 0.0;
    double arg = g.r / (std::sqrt(1.0 + 3.0 * s.q) * std::sqrt(g.t * s.w - 2.0 * g.r * g.r));
    arg = std::clamp(arg, -1.0, 1.0);
    return kTwoOverPi * kTwoOverPi / s.sw * std::asin(arg);
}

// E[ (phi(tau) - sigma(lam)) sigma'(lam)^2 (phi(tau) - sigma(lam)) ],
// i.e. E[ delta^2 sigma'^2 ] with delta = y - yhat.
inline double err_sq_dsig_sq(const PreactGaussian& g) {
    return dsig_sq(g) - 2.0 * phi_sig_dsig_sq(g) + sig_sq_dsig_sq(g);
}

// --- Coupled-phase expectations -------------------------------------------
//
// The anchor fields tlam_r, tlam_i are the pre-activations of the frozen
// previous-phase weights on the same input: Cov(tlam_r, lam_r) = s_r,
// Cov(tlam_r, tau) = tr, Cov(tlam_i, lam_i) = s_i (effective), all other new
// covariances zero. Only their projections onto (lam, tau) contribute, so
// each reduces to a combination of the plain expectations above.

// E[ (phi(tau) - sigma(lam)) sigma'(lam) tlam_r ]
inline double err_dsig_anchor_r(const PreactGaussian& g, double s_r, double tr) {
    Shared s(g);
    // tlam_r = c1*lam + c2*tau + independent noise, from the 2x2 Gram of (lam, tau).
    const double det = s.q * g.t - g.r * g.r;
    double c1, c2;
    if (det > 1e-14) {
        c1 = (g.t * s_r - g.r * tr) / det;
        c2 = (s.q * tr - g.r * s_r) / det;
    } else {
        // lam and tau fully correlated or degenerate; project on tau alone.
        c1 = 0.0;
        c2 = (g.t > 0.0) ? tr / g.t : 0.0;
    }
    const double e_phi_lam = kTwoOverPi * g.r / (s.d * s.sx);        // E[phi dsig lam]
    const double e_phi_tau = kTwoOverPi * s.sx / s.d;                // E[phi dsig tau]
    const double e_sig_anchor = kTwoOverPi * s_r / (s.d * s.sw);     // E[sig dsig tlam_r] via Stein
    return c1 * e_phi_lam + c2 * e_phi_tau - e_sig_anchor;
}

// E[ (phi(tau) - sigma(lam)) sigma'(lam) tlam_i ]; s_i effective.
inline double err_dsig_anchor_i(const PreactGaussian& g, double s_i) {
    Shared s(g);
    return -kTwoOverPi * s_i * g.r / (s.d * s.sx) - kTwoOverPi * s_i / (s.d * s.sw);
}

}  // namespace moments
}  // namespace curricula
