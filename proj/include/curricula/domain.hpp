#pragma once

// Task definition for the sparse teacher-student setup: difficulty slices,
// presentation protocols, and the order-parameter containers shared by the
// ODE solver, the replica solver and the finite-N simulator.

#include <optional>
#include <string>
#include <vector>

namespace curricula {

// One subset of the dataset: alpha = #samples / N, delta = variance of the
// irrelevant input components for those samples.
struct DifficultySlice {
    double alpha = 0.0;
    double delta = 0.0;
};

struct TaskConfig {
    double rho = 0.5;              // fraction of relevant input dimensions
    double teacher_norm = -1.0;    // T = |W_T|^2 / N; negative means "use rho"
    std::vector<DifficultySlice> slices;

    double resolved_teacher_norm() const { return teacher_norm < 0.0 ? rho : teacher_norm; }
};

enum class Ordering { Curriculum, AntiCurriculum, Shuffled };

struct Protocol {
    Ordering ordering = Ordering::Shuffled;
    // Cumulative sample-ratio boundaries between phases; filled in by
    // validate() from the resolved phase durations.
    std::vector<double> switch_points;
};

const char* to_string(Ordering o);
std::optional<Ordering> ordering_from_string(const std::string& s);

// A training phase: one or more slices presented together.
struct Phase {
    std::vector<DifficultySlice> slices;
    double duration() const {
        double a = 0.0;
        for (const auto& s : slices) a += s.alpha;
        return a;
    }
};

// Curriculum: one phase per slice, ascending delta (stable on ties).
// AntiCurriculum: exact reverse of the Curriculum list.
// Shuffled: a single phase carrying every slice.
std::vector<Phase> resolve_phases(const std::vector<DifficultySlice>& slices, Ordering ordering);

struct HyperParams {
    double eta = 1.0;         // learning rate
    double gamma = 0.0;       // L2 intensity
    double gamma12 = 0.0;     // elastic coupling to the previous phase
    double init_scale = 0.0;  // std of the initial weights
};

// Overlaps with the frozen end-of-previous-phase configuration.
struct AnchorOverlaps {
    double q_r = 0.0;  // relevant norm of the anchor
    double q_i = 0.0;  // irrelevant norm of the anchor
    double r = 0.0;    // anchor-teacher overlap
    double s_r = 0.0;  // live/anchor overlap, relevant block
    double s_i = 0.0;  // live/anchor overlap, irrelevant block
};

struct OnlineState {
    double q_r = 0.0;
    double q_i = 0.0;
    double r = 0.0;
    std::optional<AnchorOverlaps> anchor;
};

// Slack on the Cauchy-Schwarz checks; Euler drift stays far below this.
inline constexpr double kOverlapSlack = 1e-9;

bool online_state_valid(const OnlineState& s, double teacher_norm, std::string* why = nullptr);

// Batch order parameters and their conjugates. dq_* are the zero-temperature
// response parameters; hat_* the conjugates from the saddle point.
struct ReplicaState {
    double r = 0.0;
    double q_r = 0.0;
    double q_i = 0.0;
    double dq_r = 1.0;
    double dq_i = 1.0;
    double hat_r = 0.0;
    double hat_q_r = 0.0;
    double hat_q_i = 0.0;
    double hat_dq_r = 0.0;
    double hat_dq_i = 0.0;
};

bool replica_state_valid(const ReplicaState& s, double rho, std::string* why = nullptr);

struct Violation {
    std::string field;
    std::string message;
};

struct ResolvedRun {
    TaskConfig config;
    Protocol protocol;   // switch_points resolved
    HyperParams hyper;
    std::vector<Phase> phases;
};

struct ValidationResult {
    std::optional<ResolvedRun> run;   // set iff violations is empty
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    std::string describe() const;
};

ValidationResult validate(const TaskConfig& config, const Protocol& protocol, const HyperParams& hyper);

}  // namespace curricula
