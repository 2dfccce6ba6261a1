#pragma once

// Replica-symmetric fixed point for batch learning with L2-regularised
// logistic loss and an elastic Gaussian prior chaining successive phases.
//
// Conventions: the student loss acts on the pre-activation (sigma treated as
// the identity inside the batch loss); the teacher gauge fixes T = rho. Free
// entropy per unit inverse temperature:
//   Phi = -[hat_r r + ((hat_q dq - hat_dq q)_r + (...)_i)/2]
//         + g_S(hats; anchor hats) + sum_s alpha_s g_E(Delta_s; order params).
// Saddle-point updates are the analytic derivatives of the two channels; the
// finite-difference stationarity of Phi at convergence is checked in tests.

#include <array>
#include <optional>
#include <vector>

#include "curricula/domain.hpp"
#include "curricula/quadrature.hpp"

namespace curricula {

struct QuadratureSpec {
    int nodes_u = 60;         // Gauss-Legendre nodes per half-line of the label field
    int nodes_z = 60;         // Gauss-Hermite nodes for the noise field
    double inner_tol = 1e-12; // stationarity tolerance of the inner maximisation
};

struct PhaseSpec {
    std::vector<DifficultySlice> slices;
    double gamma = 0.0;    // L2 intensity of this phase
    double gamma12 = 0.0;  // elastic intensity to the previous phase (0 for the first)
};

struct SolverOptions {
    double damping = 0.5;  // fraction of the old value kept per update
    double tol = 1e-9;     // max absolute parameter change at convergence
    int max_iter = 10000;
};

// Anchor payload carried between phases: the previous phase's conjugates and
// its total quadratic intensity (gamma + gamma12 of that phase).
struct ReplicaAnchor {
    ReplicaState state;
    double gamma_prev = 0.0;
};

struct ChannelEval {
    double value = 0.0;
    // Entropic: d/d(hat_r, hat_q_r, hat_q_i, hat_dq_r, hat_dq_i).
    // Energetic: d/d(r, q_r, q_i, dq_r, dq_i).
    std::array<double, 5> grad{};
};

// Closed-form g_S / beta and its exact partials w.r.t. the current hats.
ChannelEval entropic_channel(const ReplicaState& hats, const std::optional<ReplicaAnchor>& anchor,
                             double gamma, double gamma12, double rho);

// Gauss-Hermite x split-Legendre evaluation of g_E / beta at one difficulty,
// with partials via the envelope theorem.
ChannelEval energetic_channel(double delta, const ReplicaState& state, double rho,
                              const QuadratureSpec& quad);

// Full free entropy at an arbitrary (not necessarily stationary) point.
double free_entropy(const ReplicaState& full, const PhaseSpec& phase,
                    const std::optional<ReplicaAnchor>& anchor, double rho, const QuadratureSpec& quad);

struct SolveInfo {
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
};

ReplicaState solve_phase(const PhaseSpec& phase, const std::optional<ReplicaAnchor>& anchor, double rho,
                         const QuadratureSpec& quad, const SolverOptions& opts, SolveInfo* info = nullptr,
                         const ReplicaState* warm_start = nullptr);

// Sequential phases, each anchored on the previous converged state.
std::vector<ReplicaState> chain(const std::vector<PhaseSpec>& phases, double rho,
                                const QuadratureSpec& quad, const SolverOptions& opts,
                                std::vector<SolveInfo>* infos = nullptr);

// Protocol-ordered PhaseSpecs: per-phase gamma, elastic gamma12 for every
// phase after the first. Shuffled yields a single all-slice phase.
std::vector<PhaseSpec> make_phase_specs(const TaskConfig& config, Ordering ordering, double gamma,
                                        double gamma12);

// eps_g = arccos(r / sqrt(rho (q_r + delta q_i))) / pi;  accuracy = 1 - eps_g.
double generalization_error(const ReplicaState& state, double delta, double rho);

}  // namespace curricula
