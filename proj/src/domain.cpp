#include "curricula/domain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace curricula {

const char* to_string(Ordering o) {
    switch (o) {
        case Ordering::Curriculum: return "curriculum";
        case Ordering::AntiCurriculum: return "anti-curriculum";
        case Ordering::Shuffled: return "shuffled";
    }
    return "?";
}

std::optional<Ordering> ordering_from_string(const std::string& s) {
    if (s == "curriculum") return Ordering::Curriculum;
    if (s == "anti-curriculum" || s == "anticurriculum" || s == "anti") return Ordering::AntiCurriculum;
    if (s == "shuffled" || s == "no-curriculum" || s == "none") return Ordering::Shuffled;
    return std::nullopt;
}

std::vector<Phase> resolve_phases(const std::vector<DifficultySlice>& slices, Ordering ordering) {
    if (ordering == Ordering::Shuffled) {
        return {Phase{slices}};
    }
    std::vector<DifficultySlice> sorted = slices;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const DifficultySlice& a, const DifficultySlice& b) { return a.delta < b.delta; });
    if (ordering == Ordering::AntiCurriculum) {
        std::reverse(sorted.begin(), sorted.end());
    }
    std::vector<Phase> phases;
    phases.reserve(sorted.size());
    for (const auto& s : sorted) phases.push_back(Phase{{s}});
    return phases;
}

bool online_state_valid(const OnlineState& s, double teacher_norm, std::string* why) {
    auto fail = [&](const std::string& m) {
        if (why) *why = m;
        return false;
    };
    if (!(s.q_r >= 0.0)) return fail("q_r negative");
    if (!(s.q_i >= 0.0)) return fail("q_i negative");
    if (s.r * s.r > s.q_r * teacher_norm + kOverlapSlack) return fail("r^2 exceeds q_r*T");
    if (s.anchor) {
        const auto& a = *s.anchor;
        if (a.s_r * a.s_r > s.q_r * a.q_r + kOverlapSlack) return fail("s_r^2 exceeds q_r*~q_r");
        if (a.s_i * a.s_i > s.q_i * a.q_i + kOverlapSlack) return fail("s_i^2 exceeds q_i*~q_i");
    }
    return true;
}

bool replica_state_valid(const ReplicaState& s, double rho, std::string* why) {
    auto fail = [&](const std::string& m) {
        if (why) *why = m;
        return false;
    };
    if (!(s.q_r >= 0.0)) return fail("q_r negative");
    if (!(s.q_i >= 0.0)) return fail("q_i negative");
    if (!(s.dq_r > 0.0)) return fail("dq_r not positive");
    if (!(s.dq_i > 0.0)) return fail("dq_i not positive");
    if (s.r * s.r > rho * s.q_r + kOverlapSlack) return fail("r^2 exceeds rho*q_r");
    return true;
}

std::string ValidationResult::describe() const {
    std::ostringstream os;
    for (const auto& v : violations) os << v.field << ": " << v.message << "\n";
    return os.str();
}

ValidationResult validate(const TaskConfig& config, const Protocol& protocol, const HyperParams& hyper) {
    ValidationResult result;
    auto bad = [&](std::string field, std::string message) {
        result.violations.push_back({std::move(field), std::move(message)});
    };

    if (!(config.rho > 0.0 && config.rho <= 1.0)) bad("rho", "rho out of range (0, 1]");
    if (!(config.resolved_teacher_norm() > 0.0)) bad("teacher_norm", "teacher norm must be positive");
    if (config.slices.empty()) bad("slices", "at least one difficulty slice required");
    for (size_t i = 0; i < config.slices.size(); ++i) {
        const auto& s = config.slices[i];
        if (!(s.alpha > 0.0)) bad("slices[" + std::to_string(i) + "].alpha", "alpha must be positive");
        if (!(s.delta >= 0.0)) bad("slices[" + std::to_string(i) + "].delta", "delta must be non-negative");
        if (!std::isfinite(s.alpha) || !std::isfinite(s.delta))
            bad("slices[" + std::to_string(i) + "]", "non-finite value");
    }
    if (!(hyper.eta > 0.0)) bad("eta", "learning rate must be positive");
    if (!(hyper.gamma >= 0.0)) bad("gamma", "weight decay must be non-negative");
    if (!(hyper.gamma12 >= 0.0)) bad("gamma12", "elastic intensity must be non-negative");
    if (!(hyper.init_scale >= 0.0)) bad("init_scale", "init scale must be non-negative");

    if (!result.violations.empty()) return result;

    ResolvedRun run;
    run.config = config;
    run.config.teacher_norm = config.resolved_teacher_norm();
    run.hyper = hyper;
    run.phases = resolve_phases(config.slices, protocol.ordering);
    run.protocol.ordering = protocol.ordering;
    run.protocol.switch_points.clear();
    double acc = 0.0;
    for (size_t p = 0; p + 1 < run.phases.size(); ++p) {
        acc += run.phases[p].duration();
        run.protocol.switch_points.push_back(acc);
    }
    result.run = std::move(run);
    return result;
}

}  // namespace curricula
