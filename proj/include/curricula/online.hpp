#pragma once

// Deterministic integration of the high-dimensional online-SGD order-parameter
// dynamics, plain and elastically coupled, plus the closed-form test metrics.
//
// One Euler step advances the sample ratio alpha by dt and applies the exact
// per-sample recursion with 1/N replaced by dt (N_eff = 1/dt). Weight decay
// follows the per-sample (1 - eta*gamma) convention of the update rule, so a
// trajectory is tied to its N_eff the same way a finite simulation is tied to
// its N.

#include <stdexcept>
#include <vector>

#include "curricula/domain.hpp"

namespace curricula {

struct OnlineError : std::runtime_error {
    double alpha;  // sample ratio at which the step failed
    OnlineError(const std::string& msg, double a) : std::runtime_error(msg), alpha(a) {}
};

// P(sign agreement) on a fresh sample with irrelevant variance delta.
double accuracy(const OnlineState& state, double delta, double teacher_norm);

// Mean of (y - sigma(lambda))^2 / 2 on a fresh sample.
double mse_test_loss(const OnlineState& state, double delta, double teacher_norm);

struct MixtureMetrics {
    double accuracy = 0.0;
    double loss = 0.0;
};

// Slice-proportion weighted average of the per-slice metrics.
MixtureMetrics mixture_metrics(const OnlineState& state, const std::vector<DifficultySlice>& slices,
                               double teacher_norm);

OnlineState init_state(double rho, double teacher_norm, double init_scale);

// One expected SGD sample at difficulty delta.
OnlineState step_plain(const OnlineState& state, const HyperParams& hyper, double delta, double rho,
                       double teacher_norm, double dt);

// Same with the elastic pull towards the frozen anchor; requires state.anchor.
OnlineState step_coupled(const OnlineState& state, const HyperParams& hyper, double delta, double rho,
                         double teacher_norm, double dt);

struct TrajectoryPoint {
    double alpha = 0.0;
    OnlineState state;
    std::vector<double> acc;   // per task slice, in task order
    std::vector<double> loss;  // per task slice, in task order
    double acc_mix = 0.0;
    double loss_mix = 0.0;
};

struct Trajectory {
    std::vector<TrajectoryPoint> points;
};

// Euler-iterates the step functions over the resolved phases. A phase with
// several slices advances by the slice-proportion-weighted average of the
// per-slice steps (deterministic drift mixture). At each phase boundary with
// gamma12 > 0 the live overlaps are frozen into the anchor and the next phase
// continues from the same weights (s_r = q_r, s_i = q_i).
Trajectory integrate(const ResolvedRun& run, double dt, int record_every);

}  // namespace curricula
