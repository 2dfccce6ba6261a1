#include "curricula/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace curricula {

namespace {

constexpr double kSqrt2OverPi = 0.7978845608028653558798;  // sigma'(0)

double dot(const double* a, const double* b, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double student_sigma(double x) { return std::erf(x * 0.7071067811865475244); }
double student_dsigma(double x) { return kSqrt2OverPi * std::exp(-0.5 * x * x); }

// log(1 + exp(-z)) without overflow.
double logistic_loss(double z) {
    if (z > 0.0) return std::log1p(std::exp(-z));
    return -z + std::log1p(std::exp(z));
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

SimModel make_model(const TaskConfig& config, int n, uint64_t seed, double init_scale) {
    if (n < 10) throw std::invalid_argument("make_model: n must be >= 10");
    SimModel m;
    m.n = n;
    m.relevant = static_cast<int>(std::lround(config.rho * n));
    m.seed = seed;
    m.teacher.assign(n, 0.0);
    RandomStream teacher_rng(seed, Stream::Teacher);
    for (int i = 0; i < m.relevant; ++i) m.teacher[i] = teacher_rng.gaussian();
    m.weights.assign(n, 0.0);
    if (init_scale > 0.0) {
        RandomStream init_rng(seed, Stream::Init);
        for (int i = 0; i < n; ++i) m.weights[i] = init_scale * init_rng.gaussian();
    }
    return m;
}

Dataset gen_dataset(const SimModel& model, const DifficultySlice& slice, int slice_index,
                    uint64_t substream) {
    const int n = model.n;
    const long m_rows = std::lround(slice.alpha * n);
    if (m_rows < 1) throw std::invalid_argument("gen_dataset: slice.alpha*n must round to >= 1");
    Dataset d;
    d.n = n;
    d.inputs.resize(static_cast<size_t>(m_rows) * n);
    d.labels.resize(m_rows);
    d.slice_of.assign(m_rows, slice_index);
    RandomStream rng(model.seed, Stream::Dataset, substream);
    const double sd_irr = std::sqrt(slice.delta);
    for (long mu = 0; mu < m_rows; ++mu) {
        double* x = d.inputs.data() + static_cast<size_t>(mu) * n;
        double pre = 0.0;
        for (int i = 0; i < model.relevant; ++i) {
            x[i] = rng.gaussian();
            pre += x[i] * model.teacher[i];
        }
        for (int i = model.relevant; i < n; ++i) x[i] = sd_irr * rng.gaussian();
        d.labels[mu] = pre < 0.0 ? -1 : 1;  // +1 on exact zero
    }
    return d;
}

Overlaps measure_overlaps(const SimModel& model) {
    const int rel = model.relevant, n = model.n;
    Overlaps o;
    o.q_r = dot(model.weights.data(), model.weights.data(), rel) / n;
    o.q_i = dot(model.weights.data() + rel, model.weights.data() + rel, n - rel) / n;
    o.r = dot(model.weights.data(), model.teacher.data(), rel) / n;
    o.t = dot(model.teacher.data(), model.teacher.data(), rel) / n;
    return o;
}

Trajectory train_online(SimModel& model, const std::vector<SampleRef>& stream, const HyperParams& hyper,
                        const std::vector<double>* anchor, int record_every, const TaskConfig& config,
                        double alpha0, bool record_start) {
    const int n = model.n;
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
    const double eta = hyper.eta;
    const double decay = 1.0 - eta * (hyper.gamma + hyper.gamma12);
    const double pull = eta * hyper.gamma12;
    if (pull > 0.0 && anchor == nullptr)
        throw std::invalid_argument("train_online: gamma12 > 0 requires an anchor");
    if (record_every < 1) record_every = 1;

    Trajectory traj;
    auto record = [&](double alpha) {
        const Overlaps o = measure_overlaps(model);
        TrajectoryPoint p;
        p.alpha = alpha;
        p.state.q_r = o.q_r;
        p.state.q_i = o.q_i;
        p.state.r = o.r;
        for (const auto& s : config.slices) {
            p.acc.push_back(accuracy(p.state, s.delta, o.t));
            p.loss.push_back(mse_test_loss(p.state, s.delta, o.t));
        }
        const auto mix = mixture_metrics(p.state, config.slices, o.t);
        p.acc_mix = mix.accuracy;
        p.loss_mix = mix.loss;
        traj.points.push_back(std::move(p));
    };

    if (record_start) record(alpha0);
    double* w = model.weights.data();
    for (size_t k = 0; k < stream.size(); ++k) {
        const double* x = stream[k].data->row(stream[k].row);
        const double y = stream[k].data->labels[stream[k].row];
        const double lam = dot(w, x, n) * inv_sqrt_n;
        const double coef = eta * inv_sqrt_n * student_dsigma(lam) * (y - student_sigma(lam));
        if (pull > 0.0) {
            const double* a = anchor->data();
            for (int i = 0; i < n; ++i) w[i] = decay * w[i] + pull * a[i] + coef * x[i];
        } else if (decay != 1.0) {
            for (int i = 0; i < n; ++i) w[i] = decay * w[i] + coef * x[i];
        } else {
            for (int i = 0; i < n; ++i) w[i] += coef * x[i];
        }
        if ((k + 1) % static_cast<size_t>(record_every) == 0 || k + 1 == stream.size()) {
            const double norm = dot(w, w, n) / n;
            if (norm > kDivergenceGuard)
                throw std::runtime_error("train_online: |W|^2/N exceeded divergence guard");
            record(alpha0 + static_cast<double>(k + 1) / n);
        }
    }
    return traj;
}

namespace {

// Objective and gradient of the per-N batch loss at W.
double batch_objective(const SimModel& model, const Dataset& data, double gamma, double gamma12,
                       const std::vector<double>* anchor, const std::vector<double>& w,
                       std::vector<double>* grad) {
    const int n = model.n;
    const double inv_n = 1.0 / n;
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
    if (grad) grad->assign(n, 0.0);
    double obj = 0.0;
    for (size_t mu = 0; mu < data.rows(); ++mu) {
        const double* x = data.row(mu);
        const double y = data.labels[mu];
        const double z = y * dot(w.data(), x, n) * inv_sqrt_n;
        obj += logistic_loss(z);
        if (grad) {
            const double c = -y * sigmoid(-z) * inv_sqrt_n * inv_n;
            double* g = grad->data();
            for (int i = 0; i < n; ++i) g[i] += c * x[i];
        }
    }
    obj *= inv_n;
    double reg = 0.0;
    for (int i = 0; i < n; ++i) {
        const double a = anchor ? (*anchor)[i] : 0.0;
        reg += 0.5 * gamma * w[i] * w[i] + 0.5 * gamma12 * (w[i] - a) * (w[i] - a);
        if (grad) (*grad)[i] += (gamma * w[i] + gamma12 * (w[i] - a)) * inv_n;
    }
    return obj + reg * inv_n;
}

}  // namespace

BatchResult train_batch(SimModel& model, const Dataset& data, double gamma, double gamma12,
                        const std::vector<double>* anchor, const BatchOptions& opts) {
    if (!(gamma + gamma12 > 0.0))
        throw std::invalid_argument("train_batch: gamma + gamma12 must be positive (unique optimum)");
    if (!(opts.tol > 0.0)) throw std::invalid_argument("train_batch: tol must be positive");
    const int n = model.n;
    std::vector<double>& w = model.weights;
    std::vector<double> grad, trial(n);
    double obj = batch_objective(model, data, gamma, gamma12, anchor, w, &grad);

    // Steps are taken on the O(1)-scaled variable; the objective is per-N.
    double step = static_cast<double>(n);
    BatchResult res;
    for (res.iterations = 0; res.iterations < opts.max_iter; ++res.iterations) {
        double gmax = 0.0, gsq = 0.0;
        for (int i = 0; i < n; ++i) {
            gmax = std::max(gmax, std::fabs(grad[i]));
            gsq += grad[i] * grad[i];
        }
        res.grad_norm = gmax;
        res.objective = obj;
        if (gmax <= opts.tol) return res;

        // Backtracking line search on f(w - step*grad), Armijo c = 1e-4.
        for (;;) {
            for (int i = 0; i < n; ++i) trial[i] = w[i] - step * grad[i];
            const double trial_obj = batch_objective(model, data, gamma, gamma12, anchor, trial, nullptr);
            if (trial_obj <= obj - 1e-4 * step * gsq) {
                w.swap(trial);
                obj = trial_obj;
                step *= 1.3;
                break;
            }
            step *= 0.5;
            if (step < 1e-18 * n)
                throw std::runtime_error("train_batch: line search collapsed (gradient noise floor)");
        }
        obj = batch_objective(model, data, gamma, gamma12, anchor, w, &grad);
    }
    throw std::runtime_error("train_batch: no convergence after " + std::to_string(opts.max_iter) +
                             " iterations (grad max-norm " + std::to_string(res.grad_norm) + ")");
}

AccuracyEstimate empirical_accuracy(const SimModel& model, double delta, long n_test,
                                    uint64_t substream) {
    if (n_test < 1) throw std::invalid_argument("empirical_accuracy: n_test must be >= 1");
    RandomStream rng(model.seed, Stream::Test, substream);
    const int n = model.n, rel = model.relevant;
    const double sd_irr = std::sqrt(delta);
    long agree = 0;
    for (long k = 0; k < n_test; ++k) {
        double pre_teacher = 0.0, pre_student = 0.0;
        for (int i = 0; i < rel; ++i) {
            const double x = rng.gaussian();
            pre_teacher += x * model.teacher[i];
            pre_student += x * model.weights[i];
        }
        for (int i = rel; i < n; ++i) pre_student += sd_irr * rng.gaussian() * model.weights[i];
        const double y = pre_teacher < 0.0 ? -1.0 : 1.0;
        const double yhat = pre_student < 0.0 ? -1.0 : 1.0;
        if (y == yhat) ++agree;
    }
    AccuracyEstimate est;
    est.value = static_cast<double>(agree) / n_test;
    est.std_error = std::sqrt(std::max(est.value * (1.0 - est.value), 0.0) / n_test);
    return est;
}

std::vector<SampleRef> protocol_stream(const std::vector<Dataset>& per_slice,
                                       const std::vector<Phase>& phases,
                                       const std::vector<DifficultySlice>& task_slices, uint64_t seed) {
    // Map each phase slice back to its task slice index (first alpha/delta match).
    auto slice_index = [&](const DifficultySlice& s) {
        for (size_t i = 0; i < task_slices.size(); ++i)
            if (task_slices[i].alpha == s.alpha && task_slices[i].delta == s.delta)
                return static_cast<int>(i);
        throw std::logic_error("protocol_stream: phase slice not found in task");
    };
    std::vector<SampleRef> stream;
    RandomStream shuffle_rng(seed, Stream::Shuffle);
    for (const auto& phase : phases) {
        size_t phase_begin = stream.size();
        for (const auto& s : phase.slices) {
            const Dataset& d = per_slice[slice_index(s)];
            for (size_t mu = 0; mu < d.rows(); ++mu)
                stream.push_back({&d, static_cast<int>(mu)});
        }
        if (phase.slices.size() > 1) {
            // Fisher-Yates over the phase's span.
            for (size_t i = stream.size() - 1; i > phase_begin; --i) {
                const size_t j = phase_begin + shuffle_rng.below(i - phase_begin + 1);
                std::swap(stream[i], stream[j]);
            }
        }
    }
    return stream;
}

Trajectory simulate_online(const ResolvedRun& run, int n, uint64_t seed, int record_every) {
    SimModel model = make_model(run.config, n, seed, run.hyper.init_scale);
    std::vector<Dataset> per_slice;
    per_slice.reserve(run.config.slices.size());
    for (size_t i = 0; i < run.config.slices.size(); ++i)
        per_slice.push_back(gen_dataset(model, run.config.slices[i], static_cast<int>(i), i));

    Trajectory traj;
    double alpha = 0.0;
    std::vector<double> anchor;
    for (size_t pi = 0; pi < run.phases.size(); ++pi) {
        const Phase& phase = run.phases[pi];
        std::vector<Phase> single{phase};
        auto stream = protocol_stream(per_slice, single, run.config.slices, seed + pi);
        HyperParams hp = run.hyper;
        const bool coupled = run.hyper.gamma12 > 0.0 && pi > 0;
        if (!coupled) hp.gamma12 = 0.0;
        Trajectory part = train_online(model, stream, hp, coupled ? &anchor : nullptr, record_every,
                                       run.config, alpha, pi == 0);
        traj.points.insert(traj.points.end(), part.points.begin(), part.points.end());
        alpha += static_cast<double>(stream.size()) / n;
        if (pi + 1 < run.phases.size() && run.hyper.gamma12 > 0.0) anchor = model.weights;
    }
    return traj;
}

std::vector<SimModel> simulate_batch(const ResolvedRun& run, const std::vector<double>& gammas,
                                     const std::vector<double>& gamma12s, int n, uint64_t seed,
                                     const BatchOptions& opts) {
    if (gammas.size() != run.phases.size() || gamma12s.size() != run.phases.size())
        throw std::invalid_argument("simulate_batch: one gamma/gamma12 per phase required");
    SimModel model = make_model(run.config, n, seed, run.hyper.init_scale);
    std::vector<Dataset> per_slice;
    for (size_t i = 0; i < run.config.slices.size(); ++i)
        per_slice.push_back(gen_dataset(model, run.config.slices[i], static_cast<int>(i), i));

    auto slice_index = [&](const DifficultySlice& s) {
        for (size_t i = 0; i < run.config.slices.size(); ++i)
            if (run.config.slices[i].alpha == s.alpha && run.config.slices[i].delta == s.delta)
                return static_cast<int>(i);
        throw std::logic_error("simulate_batch: phase slice not found in task");
    };

    std::vector<SimModel> out;
    std::vector<double> anchor;
    for (size_t pi = 0; pi < run.phases.size(); ++pi) {
        // Concatenate the phase's slices into one training set.
        Dataset joined;
        joined.n = n;
        for (const auto& s : run.phases[pi].slices) {
            const Dataset& d = per_slice[slice_index(s)];
            joined.inputs.insert(joined.inputs.end(), d.inputs.begin(), d.inputs.end());
            joined.labels.insert(joined.labels.end(), d.labels.begin(), d.labels.end());
            joined.slice_of.insert(joined.slice_of.end(), d.slice_of.begin(), d.slice_of.end());
        }
        const double g12 = pi == 0 ? 0.0 : gamma12s[pi];
        train_batch(model, joined, gammas[pi], g12, pi == 0 ? nullptr : &anchor, opts);
        out.push_back(model);
        anchor = model.weights;
    }
    return out;
}

}  // namespace curricula
