#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sbtune/gen_ops.hpp"
#include "sbtune/param_space.hpp"

namespace sbtune {

/// Archive coverage sampled at evenly spaced budget fractions. Fractions are
/// strictly increasing and the final point sits at 1.0.
struct CoverageTrace {
    std::vector<std::pair<double, double>> points;  // (budget_fraction, coverage)
    double final_coverage() const { return points.empty() ? 0.0 : points.back().second; }
};

struct RunResult {
    Archive archive;
    CoverageTrace trace;
    std::uint64_t evaluations_used = 0;
};

/// Evaluation counts at which coverage is sampled: `checkpoints` evenly
/// spaced marks with the last one exactly at `budget`.
std::vector<std::uint64_t> checkpoint_schedule(std::uint64_t budget, int checkpoints);

class TraceRecorder {
public:
    TraceRecorder(std::uint64_t budget, int checkpoints);

    /// Call after every evaluation with the running archive coverage.
    void record(std::uint64_t evaluations_used, double coverage);

    /// Fills any remaining checkpoints with the final coverage.
    CoverageTrace finish(double final_coverage);

private:
    std::uint64_t budget_;
    std::vector<std::uint64_t> schedule_;
    std::size_t next_ = 0;
    CoverageTrace trace_;
};

using Deadline = std::optional<std::chrono::steady_clock::time_point>;

inline bool deadline_passed(const Deadline& deadline) {
    return deadline && std::chrono::steady_clock::now() >= *deadline;
}

/// {"algorithm", "config", "evaluations", "trace", "covered"}; covered goals
/// are encoded as "<node>:T" / "<node>:F".
nlohmann::json run_result_to_json(const RunResult& result, const std::string& algorithm,
                                  const Configuration& config);

} // namespace sbtune
