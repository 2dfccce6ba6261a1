#include "curricula/replica.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "curricula/moreau.hpp"

namespace curricula {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDqFloor = 1e-12;       // keeps the Moreau variance positive
constexpr double kFieldSdFloor = 1e-9;   // guards z-derivatives when r^2/rho ~ q
constexpr double kUMax = 12.0;           // Gaussian tail cutoff of the label field

struct EntropicHalf {
    double k = 0.0;  // gamma12 / (gamma_prev + anchor hat_dq)
    double b = 0.0;  // k^2 * anchor hat_q
};

EntropicHalf anchor_half(const std::optional<ReplicaAnchor>& anchor, double gamma12, bool relevant) {
    EntropicHalf h;
    if (!anchor || gamma12 == 0.0) return h;
    const double hat_dq = relevant ? anchor->state.hat_dq_r : anchor->state.hat_dq_i;
    const double hat_q = relevant ? anchor->state.hat_q_r : anchor->state.hat_q_i;
    const double den = anchor->gamma_prev + hat_dq;
    if (!(den > 0.0)) throw std::domain_error("entropic channel: anchor denominator non-positive");
    h.k = gamma12 / den;
    h.b = h.k * h.k * hat_q;
    return h;
}

}  // namespace

ChannelEval entropic_channel(const ReplicaState& hats, const std::optional<ReplicaAnchor>& anchor,
                             double gamma, double gamma12, double rho) {
    const double d_r = gamma + gamma12 + hats.hat_dq_r;
    const double d_i = gamma + gamma12 + hats.hat_dq_i;
    if (!(d_r > 0.0) || !(d_i > 0.0))
        throw std::domain_error("entropic channel: denominator non-positive (gamma + gamma12 + hat_dq)");
    if (gamma12 > 0.0 && !anchor)
        throw std::invalid_argument("entropic channel: gamma12 > 0 requires an anchor");

    const EntropicHalf hr = anchor_half(anchor, gamma12, true);
    const EntropicHalf hi = anchor_half(anchor, gamma12, false);
    const double tilde_hat_r = anchor ? anchor->state.hat_r : 0.0;

    const double a_r = hats.hat_r + tilde_hat_r * hr.k;
    const double num_r = a_r * a_r + hr.b + hats.hat_q_r;
    const double num_i = hi.b + hats.hat_q_i;

    ChannelEval out;
    out.value = 0.5 * (rho * num_r / d_r + (1.0 - rho) * num_i / d_i);
    out.grad[0] = rho * a_r / d_r;                          // d/d hat_r
    out.grad[1] = 0.5 * rho / d_r;                          // d/d hat_q_r
    out.grad[2] = 0.5 * (1.0 - rho) / d_i;                  // d/d hat_q_i
    out.grad[3] = -0.5 * rho * num_r / (d_r * d_r);         // d/d hat_dq_r
    out.grad[4] = -0.5 * (1.0 - rho) * num_i / (d_i * d_i); // d/d hat_dq_i
    return out;
}

namespace {

// Workspace shared across solver iterations so the inner maximiser can be
// warm-started; node layout [z][u][sign].
struct EnergeticWorkspace {
    QuadRule zrule, urule;
    std::vector<double> lamstar;
    int nodes_z = 0, nodes_u = 0;

    void prepare(const QuadratureSpec& quad) {
        if (nodes_z == quad.nodes_z && nodes_u == quad.nodes_u) return;
        nodes_z = quad.nodes_z;
        nodes_u = quad.nodes_u;
        zrule = gauss_hermite_prob(quad.nodes_z);
        urule = gauss_legendre_on(quad.nodes_u, 0.0, kUMax);
        lamstar.assign(static_cast<size_t>(nodes_z) * nodes_u * 2, 0.0);
    }
};

constexpr double kInvSqrt2Pi = 0.3989422804014326779;

ChannelEval energetic_eval(double delta, const ReplicaState& st, double rho, const QuadratureSpec& quad,
                           EnergeticWorkspace& ws) {
    ws.prepare(quad);
    const double v = st.dq_r + delta * st.dq_i;
    if (!(v > 0.0)) throw std::domain_error("energetic channel: dq_r + delta*dq_i must be positive");
    double s_var = st.q_r + delta * st.q_i - st.r * st.r / rho;
    if (s_var < -1e-12)
        throw std::domain_error("energetic channel: q_r + delta*q_i - r^2/rho negative beyond tolerance");
    if (s_var < 0.0) s_var = 0.0;
    const double s = std::sqrt(s_var);
    const double s_safe = std::max(s, kFieldSdFloor);
    const double sv = std::sqrt(v);
    const double mean_coef = st.r / std::sqrt(rho);

    ChannelEval out;
    size_t idx = 0;
    for (int zi = 0; zi < ws.nodes_z; ++zi) {
        const double z = ws.zrule.nodes[zi];
        const double wz = ws.zrule.weights[zi];
        const double base = s * z;
        for (int ui = 0; ui < ws.nodes_u; ++ui) {
            const double u = ws.urule.nodes[ui];
            const double wu = ws.urule.weights[ui] * kInvSqrt2Pi * std::exp(-0.5 * u * u);
            const double w = wz * wu;
            for (int sign = 0; sign < 2; ++sign, ++idx) {
                const double y = sign == 0 ? 1.0 : -1.0;
                const double su = y * u;  // signed label-field node
                const double omega = base + mean_coef * su;

                // Warm-started Newton for the inner maximiser.
                double lam = ws.lamstar[idx];
                for (int it = 0;; ++it) {
                    const double sg = sigmoid_stable(-y * (sv * lam + omega));
                    const double resid = lam - sv * y * sg;
                    if (std::fabs(resid) <= quad.inner_tol) break;
                    if (it >= 200)
                        throw std::runtime_error(
                            "energetic channel: inner maximiser stalled at node (z=" +
                            std::to_string(z) + ", u=" + std::to_string(su) + ")");
                    lam -= resid / (1.0 + v * sg * (1.0 - sg));
                    if (lam > sv) lam = sv;
                    if (lam < -sv) lam = -sv;
                }
                ws.lamstar[idx] = lam;

                const double value = -0.5 * lam * lam - logistic(y * (sv * lam + omega));
                const double g_omega = lam / sv;        // envelope: -loss'(h*)
                const double g_v = 0.5 * lam * lam / v; // envelope: d/dv
                out.value += w * value;
                out.grad[0] += w * g_omega * (su / std::sqrt(rho) - st.r / (rho * s_safe) * z);
                out.grad[1] += w * g_omega * z / (2.0 * s_safe);
                out.grad[2] += w * g_omega * z / (2.0 * s_safe) * delta;
                out.grad[3] += w * g_v;
                out.grad[4] += w * g_v * delta;
            }
        }
    }
    return out;
}

}  // namespace

ChannelEval energetic_channel(double delta, const ReplicaState& state, double rho,
                              const QuadratureSpec& quad) {
    EnergeticWorkspace ws;
    return energetic_eval(delta, state, rho, quad, ws);
}

double free_entropy(const ReplicaState& p, const PhaseSpec& phase,
                    const std::optional<ReplicaAnchor>& anchor, double rho, const QuadratureSpec& quad) {
    const double interaction = p.hat_r * p.r + 0.5 * (p.hat_q_r * p.dq_r - p.hat_dq_r * p.q_r) +
                               0.5 * (p.hat_q_i * p.dq_i - p.hat_dq_i * p.q_i);
    double phi = -interaction + entropic_channel(p, anchor, phase.gamma, phase.gamma12, rho).value;
    for (const auto& s : phase.slices)
        phi += s.alpha * energetic_channel(s.delta, p, rho, quad).value;
    return phi;
}

ReplicaState solve_phase(const PhaseSpec& phase, const std::optional<ReplicaAnchor>& anchor, double rho,
                         const QuadratureSpec& quad, const SolverOptions& opts, SolveInfo* info,
                         const ReplicaState* warm_start) {
    if (!(phase.gamma >= 0.0) || !(phase.gamma12 >= 0.0) || !(phase.gamma + phase.gamma12 > 0.0))
        throw std::domain_error("solve_phase: need gamma, gamma12 >= 0 and gamma + gamma12 > 0");
    if (phase.gamma12 > 0.0 && !anchor)
        throw std::invalid_argument("solve_phase: gamma12 > 0 requires an anchor");
    if (quad.nodes_u < 8 || quad.nodes_z < 8)
        throw std::invalid_argument("solve_phase: quadrature node counts must be >= 8");

    ReplicaState st;
    if (warm_start) {
        st = *warm_start;
    } else {
        st.r = 0.01;
        st.q_r = st.q_i = 0.1;
        st.dq_r = st.dq_i = 1.0;
        st.hat_r = 0.01;
        st.hat_q_r = st.hat_q_i = 0.1;
        st.hat_dq_r = st.hat_dq_i = 1.0;
    }

    std::vector<EnergeticWorkspace> ws(phase.slices.size());
    const double d = opts.damping;
    double residual = 0.0;
    std::vector<double> history;

    for (int iter = 0; iter < opts.max_iter; ++iter) {
        ReplicaState next = st;

        // (i) order parameters from the entropic partials given the hats
        const ChannelEval gs = entropic_channel(st, anchor, phase.gamma, phase.gamma12, rho);
        next.r = d * st.r + (1.0 - d) * gs.grad[0];
        next.dq_r = d * st.dq_r + (1.0 - d) * (2.0 * gs.grad[1]);
        next.dq_i = d * st.dq_i + (1.0 - d) * (2.0 * gs.grad[2]);
        next.q_r = d * st.q_r + (1.0 - d) * (-2.0 * gs.grad[3]);
        next.q_i = d * st.q_i + (1.0 - d) * (-2.0 * gs.grad[4]);
        next.dq_r = std::max(next.dq_r, kDqFloor);
        next.dq_i = std::max(next.dq_i, kDqFloor);

        // (ii) hats from the energetic partials at the updated order parameters
        double hr = 0.0, hqr = 0.0, hqi = 0.0, hdqr = 0.0, hdqi = 0.0;
        for (size_t si = 0; si < phase.slices.size(); ++si) {
            const auto& sl = phase.slices[si];
            const ChannelEval ge = energetic_eval(sl.delta, next, rho, quad, ws[si]);
            hr += sl.alpha * ge.grad[0];
            hdqr += -2.0 * sl.alpha * ge.grad[1];
            hdqi += -2.0 * sl.alpha * ge.grad[2];
            hqr += 2.0 * sl.alpha * ge.grad[3];
            hqi += 2.0 * sl.alpha * ge.grad[4];
        }
        next.hat_r = d * st.hat_r + (1.0 - d) * hr;
        next.hat_q_r = d * st.hat_q_r + (1.0 - d) * hqr;
        next.hat_q_i = d * st.hat_q_i + (1.0 - d) * hqi;
        next.hat_dq_r = d * st.hat_dq_r + (1.0 - d) * hdqr;
        next.hat_dq_i = d * st.hat_dq_i + (1.0 - d) * hdqi;

        residual = 0.0;
        residual = std::max(residual, std::fabs(next.r - st.r));
        residual = std::max(residual, std::fabs(next.q_r - st.q_r));
        residual = std::max(residual, std::fabs(next.q_i - st.q_i));
        residual = std::max(residual, std::fabs(next.dq_r - st.dq_r));
        residual = std::max(residual, std::fabs(next.dq_i - st.dq_i));
        residual = std::max(residual, std::fabs(next.hat_r - st.hat_r));
        residual = std::max(residual, std::fabs(next.hat_q_r - st.hat_q_r));
        residual = std::max(residual, std::fabs(next.hat_q_i - st.hat_q_i));
        residual = std::max(residual, std::fabs(next.hat_dq_r - st.hat_dq_r));
        residual = std::max(residual, std::fabs(next.hat_dq_i - st.hat_dq_i));
        st = next;

        std::string why;
        if (!replica_state_valid(st, rho, &why))
            throw std::runtime_error("solve_phase: invariant breach mid-iteration: " + why);

        history.push_back(residual);
        if (residual <= opts.tol) {
            if (info) {
                info->iterations = iter + 1;
                info->residual = residual;
                info->converged = true;
            }
            return st;
        }
    }

    std::ostringstream os;
    os << "solve_phase: no convergence after " << opts.max_iter << " iterations; residual tail:";
    const size_t tail = history.size() > 8 ? history.size() - 8 : 0;
    for (size_t i = tail; i < history.size(); ++i) os << " " << history[i];
    throw std::runtime_error(os.str());
}

std::vector<ReplicaState> chain(const std::vector<PhaseSpec>& phases, double rho,
                                const QuadratureSpec& quad, const SolverOptions& opts,
                                std::vector<SolveInfo>* infos) {
    std::vector<ReplicaState> states;
    std::optional<ReplicaAnchor> anchor;
    if (infos) infos->clear();
    for (size_t p = 0; p < phases.size(); ++p) {
        SolveInfo info;
        try {
            states.push_back(solve_phase(phases[p], anchor, rho, quad, opts, &info));
        } catch (const std::exception& e) {
            throw std::runtime_error("chain: phase " + std::to_string(p) + ": " + e.what());
        }
        if (infos) infos->push_back(info);
        anchor = ReplicaAnchor{states.back(), phases[p].gamma + phases[p].gamma12};
    }
    return states;
}

std::vector<PhaseSpec> make_phase_specs(const TaskConfig& config, Ordering ordering, double gamma,
                                        double gamma12) {
    std::vector<PhaseSpec> specs;
    const auto phases = resolve_phases(config.slices, ordering);
    for (size_t p = 0; p < phases.size(); ++p) {
        PhaseSpec ps;
        ps.slices = phases[p].slices;
        ps.gamma = gamma;
        ps.gamma12 = p == 0 ? 0.0 : gamma12;
        specs.push_back(std::move(ps));
    }
    return specs;
}

double generalization_error(const ReplicaState& state, double delta, double rho) {
    const double den = rho * (state.q_r + delta * state.q_i);
    if (den <= 0.0) {
        if (state.r == 0.0) return 0.5;
        throw std::domain_error("generalization_error: zero norm with nonzero overlap");
    }
    double arg = state.r / std::sqrt(den);
    if (arg > 1.0 + 1e-6 || arg < -1.0 - 1e-6)
        throw std::domain_error("generalization_error: arccos argument outside [-1,1]");
    arg = std::clamp(arg, -1.0, 1.0);
    return std::acos(arg) / kPi;
}

}  // namespace curricula
