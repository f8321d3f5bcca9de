#include "sbtune/run_result.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sbtune {

std::vector<std::uint64_t> checkpoint_schedule(std::uint64_t budget, int checkpoints) {
    if (budget < 1) throw std::invalid_argument("budget must be >= 1");
    if (checkpoints < 1) throw std::invalid_argument("checkpoints must be >= 1");
    std::vector<std::uint64_t> marks;
    marks.reserve(static_cast<std::size_t>(checkpoints));
    for (int i = 1; i <= checkpoints; ++i) {
        const double exact = static_cast<double>(i) * static_cast<double>(budget) /
                             static_cast<double>(checkpoints);
        marks.push_back(std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(exact))));
    }
    marks.back() = budget;
    marks.erase(std::unique(marks.begin(), marks.end()), marks.end());
    return marks;
}

TraceRecorder::TraceRecorder(std::uint64_t budget, int checkpoints)
    : budget_(budget), schedule_(checkpoint_schedule(budget, checkpoints)) {
    trace_.points.reserve(schedule_.size());
}

void TraceRecorder::record(std::uint64_t evaluations_used, double coverage) {
    while (next_ < schedule_.size() && schedule_[next_] <= evaluations_used) {
        trace_.points.emplace_back(
            static_cast<double>(schedule_[next_]) / static_cast<double>(budget_), coverage);
        ++next_;
    }
}

CoverageTrace TraceRecorder::finish(double final_coverage) {
    while (next_ < schedule_.size()) {
        trace_.points.emplace_back(
            static_cast<double>(schedule_[next_]) / static_cast<double>(budget_), final_coverage);
        ++next_;
    }
    return std::move(trace_);
}

nlohmann::json run_result_to_json(const RunResult& result, const std::string& algorithm,
                                  const Configuration& config) {
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& [fraction, coverage] : result.trace.points)
        trace.push_back({fraction, coverage});
    nlohmann::json covered = nlohmann::json::array();
    for (const auto& [goal, witness] : result.archive.witnesses())
        covered.push_back(std::to_string(goal.node) + (goal.outcome ? ":T" : ":F"));
    return nlohmann::json{{"algorithm", algorithm},
                          {"config", config_to_json(config)},
                          {"evaluations", result.evaluations_used},
                          {"trace", std::move(trace)},
                          {"covered", std::move(covered)}};
}

} // namespace sbtune
