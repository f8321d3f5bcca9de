#include "sbtune/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sbtune {

namespace {

struct RankedPool {
    double rank_sum_first;  // midrank sum of the first sample
    double tie_term;        // sum of t^3 - t over tie groups
    bool all_equal;
};

RankedPool midranks(const std::vector<double>& xs, const std::vector<double>& ys) {
    struct Item {
        double value;
        bool first;
    };
    std::vector<Item> pool;
    pool.reserve(xs.size() + ys.size());
    for (const double v : xs) pool.push_back({v, true});
    for (const double v : ys) pool.push_back({v, false});
    std::stable_sort(pool.begin(), pool.end(),
                     [](const Item& a, const Item& b) { return a.value < b.value; });

    RankedPool out{0.0, 0.0, true};
    std::size_t i = 0;
    while (i < pool.size()) {
        std::size_t j = i;
        while (j < pool.size() && pool[j].value == pool[i].value) ++j;
        const auto t = static_cast<double>(j - i);
        // ranks i+1 .. j averaged
        const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (pool[k].first) out.rank_sum_first += midrank;
        out.tie_term += t * t * t - t;
        if (i != 0) out.all_equal = false;
        i = j;
    }
    return out;
}

double u_statistic_first(const SampleSet& xs, const SampleSet& ys) {
    const auto m = static_cast<double>(xs.values.size());
    const RankedPool ranked = midranks(xs.values, ys.values);
    return ranked.rank_sum_first - m * (m + 1.0) / 2.0;
}

double normal_sf(double z) {  // P(Z > z)
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

double mean(const std::vector<double>& values) {
    return std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(values.size());
}

} // namespace

double a12(const SampleSet& xs, const SampleSet& ys) {
    if (xs.values.empty() || ys.values.empty())
        throw std::invalid_argument("a12 needs two non-empty samples");
    const auto m = static_cast<double>(xs.values.size());
    const auto n = static_cast<double>(ys.values.size());
    return u_statistic_first(xs, ys) / (m * n);
}

ComparisonReport mann_whitney_u(const SampleSet& xs, const SampleSet& ys, double alpha) {
    if (xs.values.empty() || ys.values.empty())
        throw std::invalid_argument("mann_whitney_u needs two non-empty samples");
    const auto m = static_cast<double>(xs.values.size());
    const auto n = static_cast<double>(ys.values.size());

    ComparisonReport report;
    report.mean_a = mean(xs.values);
    report.mean_b = mean(ys.values);

    const RankedPool ranked = midranks(xs.values, ys.values);
    const double u = ranked.rank_sum_first - m * (m + 1.0) / 2.0;
    report.u_statistic = u;
    report.a12_value = u / (m * n);

    const double total = m + n;
    const double variance =
        (m * n / 12.0) * ((total + 1.0) - ranked.tie_term / (total * (total - 1.0)));
    if (ranked.all_equal || variance <= 0.0) {
        report.p_value = 1.0;
        report.degenerate = true;
        report.significant = false;
        return report;
    }

    const double mu = m * n / 2.0;
    const double shift = u - mu;
    double z = 0.0;
    if (shift > 0.0)
        z = (shift - 0.5) / std::sqrt(variance);
    else if (shift < 0.0)
        z = (shift + 0.5) / std::sqrt(variance);
    report.p_value = std::min(1.0, 2.0 * normal_sf(std::fabs(z)));
    report.significant = report.p_value < alpha;
    return report;
}

std::vector<double> relative_coverage(const std::vector<std::vector<double>>& coverage) {
    if (coverage.size() < 2)
        throw std::invalid_argument("relative coverage needs at least two configurations");
    const std::size_t subjects = coverage.front().size();
    if (subjects == 0) throw std::invalid_argument("relative coverage needs at least one subject");
    for (const auto& row : coverage)
        if (row.size() != subjects)
            throw std::invalid_argument("ragged coverage matrix");

    std::vector<double> result(coverage.size(), 0.0);
    for (std::size_t s = 0; s < subjects; ++s) {
        double lo = coverage[0][s], hi = coverage[0][s];
        for (const auto& row : coverage) {
            lo = std::min(lo, row[s]);
            hi = std::max(hi, row[s]);
        }
        for (std::size_t c = 0; c < coverage.size(); ++c)
            result[c] += (hi == lo) ? 1.0 : (coverage[c][s] - lo) / (hi - lo);
    }
    for (double& r : result) r /= static_cast<double>(subjects);
    return result;
}

} // namespace sbtune
