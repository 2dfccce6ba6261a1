#pragma once

// Finite-N ground truth: explicit weight vectors, sampled datasets, online SGD
// and full-batch convex training with the elastic penalty, plus empirical
// overlap and accuracy measurements. All randomness is drawn from named
// Philox streams (teacher, init, dataset, test, shuffle) of one seed.

#include <cstdint>
#include <utility>
#include <vector>

#include "curricula/domain.hpp"
#include "curricula/online.hpp"
#include "curricula/philox.hpp"

namespace curricula {

struct SimModel {
    std::vector<double> weights;
    std::vector<double> teacher;  // zeros outside the first `relevant` entries
    int n = 0;
    int relevant = 0;             // round(rho * n)
    uint64_t seed = 0;
};

// Teacher entries N(0,1) on the support, weights N(0, init_scale^2).
SimModel make_model(const TaskConfig& config, int n, uint64_t seed, double init_scale);

struct Dataset {
    int n = 0;
    std::vector<double> inputs;    // row-major, rows() x n
    std::vector<int8_t> labels;    // +1 / -1, sign of the teacher pre-activation (+1 on ties)
    std::vector<int> slice_of;     // task slice index per sample
    size_t rows() const { return labels.size(); }
    const double* row(size_t m) const { return inputs.data() + m * static_cast<size_t>(n); }
};

// Relevant entries N(0,1), irrelevant N(0, delta); labels from the teacher.
// `substream` keeps slices of one seed independent (use the task slice index).
Dataset gen_dataset(const SimModel& model, const DifficultySlice& slice, int slice_index,
                    uint64_t substream);

struct Overlaps {
    double q_r = 0.0, q_i = 0.0, r = 0.0, t = 0.0;
};

Overlaps measure_overlaps(const SimModel& model);

struct SampleRef {
    const Dataset* data;
    int row;
};

inline constexpr double kDivergenceGuard = 1e6;  // on |W|^2/N

// Single pass of per-sample SGD (sigma = erf(./sqrt2), MSE loss, weight decay,
// optional elastic pull to `anchor`). Records empirical overlaps and formula
// metrics every record_every samples; alpha0 offsets the recorded sample ratio.
Trajectory train_online(SimModel& model, const std::vector<SampleRef>& stream, const HyperParams& hyper,
                        const std::vector<double>* anchor, int record_every, const TaskConfig& config,
                        double alpha0 = 0.0, bool record_start = true);

struct BatchOptions {
    double tol = 1e-8;        // on the max-norm of the objective gradient
    long max_iter = 2000000;
};

struct BatchResult {
    long iterations = 0;
    double grad_norm = 0.0;   // max-norm at termination
    double objective = 0.0;
};

// Minimises (1/N) sum log(1+exp(-y W.x/sqrt N)) + (gamma/2)|W|^2/N
//         + (gamma12/2)|W-anchor|^2/N  by gradient descent with backtracking.
// Requires gamma + gamma12 > 0 so the minimiser is unique.
BatchResult train_batch(SimModel& model, const Dataset& data, double gamma, double gamma12,
                        const std::vector<double>* anchor, const BatchOptions& opts = {});

struct AccuracyEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

// Monte-Carlo sign-agreement rate on fresh samples at difficulty delta, drawn
// from the model's test stream (substream picks independent test sets).
AccuracyEstimate empirical_accuracy(const SimModel& model, double delta, long n_test,
                                    uint64_t substream = 0);

// Protocol-resolved sample order over per-slice datasets. Curriculum phases
// concatenate; a multi-slice (shuffled) phase is a seeded random interleave.
std::vector<SampleRef> protocol_stream(const std::vector<Dataset>& per_slice,
                                       const std::vector<Phase>& phases,
                                       const std::vector<DifficultySlice>& task_slices, uint64_t seed);

// End-to-end online simulation of a resolved run at dimension n: builds the
// model and datasets, then walks the phases, freezing the anchor at each
// boundary when gamma12 > 0. Trajectory matches the theory solver's schema.
Trajectory simulate_online(const ResolvedRun& run, int n, uint64_t seed, int record_every);

// End-to-end batch simulation: each phase trains to convergence on its own
// slice(s) with an elastic pull to the previous phase's optimum. gammas[p]
// and gamma12s[p] give the per-phase intensities. Returns per-phase models.
std::vector<SimModel> simulate_batch(const ResolvedRun& run, const std::vector<double>& gammas,
                                     const std::vector<double>& gamma12s, int n, uint64_t seed,
                                     const BatchOptions& opts = {});

}  // namespace curricula
