#pragma once

#include <string>
#include <vector>

namespace sbtune {

struct SampleSet {
    std::string label;
    std::vector<double> values;
};

/// Vargha-Delaney effect size: probability that a draw from xs exceeds a
/// draw from ys, ties counted half. Computed via midranks.
double a12(const SampleSet& xs, const SampleSet& ys);

struct ComparisonReport {
    double mean_a = 0.0;
    double mean_b = 0.0;
    double a12_value = 0.5;
    double u_statistic = 0.0;
    double p_value = 1.0;
    bool significant = false;
    bool degenerate = false;  // zero-variance pooled sample
};

/// Two-sided Mann-Whitney U test with midranks, tie-corrected variance and
/// 0.5 continuity correction. U equals the exhaustive pair count
/// #{x > y} + 0.5 #{ties} exactly.
ComparisonReport mann_whitney_u(const SampleSet& xs, const SampleSet& ys, double alpha);

/// Per-subject min-max normalisation across configurations, averaged over
/// subjects. Input is cov[configuration][subject]; a subject where all
/// configurations tie contributes 1.0.
std::vector<double> relative_coverage(const std::vector<std::vector<double>>& coverage);

} // namespace sbtune
