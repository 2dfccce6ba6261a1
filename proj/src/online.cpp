#include "curricula/online.hpp"

#include <cmath>
#include <string>

#include "curricula/preact_moments.hpp"

namespace curricula {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kAsinSlack = 1e-6;   // tolerated overshoot of the asin argument
constexpr double kNormUnderflow = -1e-12;

double clamped_asin_arg(double num, double den_sq, const char* what) {
    if (den_sq <= 0.0) {
        if (num == 0.0) return 0.0;
        throw std::domain_error(std::string(what) + ": zero norm with nonzero overlap");
    }
    double arg = num / std::sqrt(den_sq);
    if (arg > 1.0 + kAsinSlack || arg < -1.0 - kAsinSlack)
        throw std::domain_error(std::string(what) + ": asin argument " + std::to_string(arg) +
                                " outside [-1,1] (invariant breach upstream)");
    if (arg > 1.0) arg = 1.0;
    if (arg < -1.0) arg = -1.0;
    return arg;
}

struct Drift {
    double q_r, q_i, r;          // d(state)/d(alpha) pieces multiplied by dt later
    double s_r = 0.0, s_i = 0.0; // anchor overlaps (coupled only)
};

double clamp_norm(double v, const char* what) {
    if (v < kNormUnderflow)
        throw std::domain_error(std::string(what) + " went negative (" + std::to_string(v) +
                                "); learning rate too large?");
    return v < 0.0 ? 0.0 : v;
}

}  // namespace

double accuracy(const OnlineState& state, double delta, double teacher_norm) {
    const double den = teacher_norm * (state.q_r + delta * state.q_i);
    const double arg = clamped_asin_arg(state.r, den, "accuracy");
    return 0.5 + std::asin(arg) / kPi;
}

double mse_test_loss(const OnlineState& state, double delta, double teacher_norm) {
    const double q = state.q_r + delta * state.q_i;
    const double arg = clamped_asin_arg(state.r / std::sqrt(teacher_norm), q + 1.0, "mse_test_loss");
    return 0.5 + std::asin(q / (1.0 + q)) / kPi - 2.0 * std::asin(arg) / kPi;
}

MixtureMetrics mixture_metrics(const OnlineState& state, const std::vector<DifficultySlice>& slices,
                               double teacher_norm) {
    double total = 0.0;
    for (const auto& s : slices) total += s.alpha;
    MixtureMetrics m;
    for (const auto& s : slices) {
        const double w = s.alpha / total;
        m.accuracy += w * accuracy(state, s.delta, teacher_norm);
        m.loss += w * mse_test_loss(state, s.delta, teacher_norm);
    }
    return m;
}

OnlineState init_state(double rho, double /*teacher_norm*/, double init_scale) {
    OnlineState s;
    s.q_r = rho * init_scale * init_scale;
    s.q_i = (1.0 - rho) * init_scale * init_scale;
    s.r = 0.0;
    return s;
}

OnlineState step_plain(const OnlineState& state, const HyperParams& hyper, double delta, double rho,
                       double teacher_norm, double dt) {
    const double eta = hyper.eta;
    const double a = 1.0 - eta * hyper.gamma;
    const PreactGaussian g{state.q_r, delta * state.q_i, state.r, teacher_norm};

    const double drift_r = 2.0 * eta * a * (moments::phi_dsig_lam_r(g) - moments::sig_dsig_lam_r(g));
    const double drift_i = 2.0 * eta * a * (moments::phi_dsig_lam_i(g) - moments::sig_dsig_lam_i(g));
    const double drift_tau = eta * (moments::phi_dsig_tau(g) - moments::sig_dsig_tau(g));
    const double var = eta * eta * moments::err_sq_dsig_sq(g);

    OnlineState next = state;
    next.q_r = clamp_norm(a * a * state.q_r + dt * (drift_r + rho * var), "q_r");
    next.q_i = clamp_norm(a * a * state.q_i + dt * (drift_i + (1.0 - rho) * delta * var), "q_i");
    next.r = a * state.r + dt * drift_tau;
    return next;
}

OnlineState step_coupled(const OnlineState& state, const HyperParams& hyper, double delta, double rho,
                         double teacher_norm, double dt) {
    if (!state.anchor) throw std::invalid_argument("step_coupled: state has no anchor");
    const AnchorOverlaps& an = *state.anchor;
    const double eta = hyper.eta;
    const double a = 1.0 - eta * (hyper.gamma + hyper.gamma12);
    const double b = eta * hyper.gamma12;
    const PreactGaussian g{state.q_r, delta * state.q_i, state.r, teacher_norm};

    const double drift_r = 2.0 * eta * a * (moments::phi_dsig_lam_r(g) - moments::sig_dsig_lam_r(g));
    const double drift_i = 2.0 * eta * a * (moments::phi_dsig_lam_i(g) - moments::sig_dsig_lam_i(g));
    const double drift_tau = eta * (moments::phi_dsig_tau(g) - moments::sig_dsig_tau(g));
    const double var = eta * eta * moments::err_sq_dsig_sq(g);
    const double e_anchor_r = moments::err_dsig_anchor_r(g, an.s_r, an.r);
    const double e_anchor_i = moments::err_dsig_anchor_i(g, delta * an.s_i);

    OnlineState next = state;
    next.q_r = clamp_norm(a * a * state.q_r + 2.0 * a * b * an.s_r + b * b * an.q_r +
                              dt * ((drift_r + 2.0 * eta * b * e_anchor_r) + rho * var),
                          "q_r");
    next.q_i = clamp_norm(a * a * state.q_i + 2.0 * a * b * an.s_i + b * b * an.q_i +
                              dt * ((drift_i + 2.0 * eta * b * e_anchor_i) + (1.0 - rho) * delta * var),
                          "q_i");
    next.r = a * state.r + b * an.r + dt * drift_tau;
    next.anchor->s_r = a * an.s_r + b * an.q_r + dt * eta * e_anchor_r;
    next.anchor->s_i = a * an.s_i + b * an.q_i + dt * eta * e_anchor_i;
    return next;
}

namespace {

OnlineState phase_step(const OnlineState& state, const Phase& phase, const HyperParams& hyper, double rho,
                       double teacher_norm, double dt) {
    const bool coupled = state.anchor.has_value() && hyper.gamma12 > 0.0;
    if (phase.slices.size() == 1) {
        return coupled ? step_coupled(state, hyper, phase.slices[0].delta, rho, teacher_norm, dt)
                       : step_plain(state, hyper, phase.slices[0].delta, rho, teacher_norm, dt);
    }
    const double total = phase.duration();
    OnlineState mix = state;
    mix.q_r = mix.q_i = mix.r = 0.0;
    if (mix.anchor) mix.anchor->s_r = mix.anchor->s_i = 0.0;
    for (const auto& s : phase.slices) {
        const double w = s.alpha / total;
        OnlineState part = coupled ? step_coupled(state, hyper, s.delta, rho, teacher_norm, dt)
                                   : step_plain(state, hyper, s.delta, rho, teacher_norm, dt);
        mix.q_r += w * part.q_r;
        mix.q_i += w * part.q_i;
        mix.r += w * part.r;
        if (mix.anchor) {
            mix.anchor->s_r += w * part.anchor->s_r;
            mix.anchor->s_i += w * part.anchor->s_i;
        }
    }
    return mix;
}

}  // namespace

Trajectory integrate(const ResolvedRun& run, double dt, int record_every) {
    if (!(dt > 0.0)) throw std::invalid_argument("integrate: dt must be positive");
    if (record_every < 1) record_every = 1;
    const double rho = run.config.rho;
    const double t_norm = run.config.teacher_norm;

    OnlineState state = init_state(rho, t_norm, run.hyper.init_scale);
    Trajectory traj;
    double alpha = 0.0;

    auto record = [&]() {
        std::string why;
        if (!online_state_valid(state, t_norm, &why))
            throw OnlineError("invariant violated: " + why, alpha);
        TrajectoryPoint p;
        p.alpha = alpha;
        p.state = state;
        for (const auto& s : run.config.slices) {
            p.acc.push_back(accuracy(state, s.delta, t_norm));
            p.loss.push_back(mse_test_loss(state, s.delta, t_norm));
        }
        const auto mix = mixture_metrics(state, run.config.slices, t_norm);
        p.acc_mix = mix.accuracy;
        p.loss_mix = mix.loss;
        traj.points.push_back(std::move(p));
    };

    record();
    for (size_t pi = 0; pi < run.phases.size(); ++pi) {
        const Phase& phase = run.phases[pi];
        const long steps = std::llround(phase.duration() / dt);
        for (long k = 0; k < steps; ++k) {
            try {
                state = phase_step(state, phase, run.hyper, rho, t_norm, dt);
            } catch (const OnlineError&) {
                throw;
            } catch (const std::exception& e) {
                throw OnlineError(e.what(), alpha);
            }
            alpha += dt;
            if ((k + 1) % record_every == 0 || k + 1 == steps) record();
        }
        if (pi + 1 < run.phases.size() && run.hyper.gamma12 > 0.0) {
            // Freeze the current configuration; the next phase continues from it.
            state.anchor = AnchorOverlaps{state.q_r, state.q_i, state.r, state.q_r, state.q_i};
        }
    }
    return traj;
}

}  // namespace curricula
