#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "sbtune/rng.hpp"
#include "sbtune/subject.hpp"

namespace sbtune {

/// Fresh statement valid at `position` (operands reference earlier slots).
Statement random_statement(const Subject& subject, std::size_t position, RandomSource& rng);

/// Length uniform in [1, max_len]; statements uniformly Const or, when
/// earlier slots exist, Add/Sub/Neg over uniformly chosen earlier slots.
TestCase random_testcase(const Subject& subject, int max_len, RandomSource& rng);

/// Applies the single-step mutation n_m times sequentially. Steps pick
/// uniformly among insert, delete, and replace; inapplicable picks (insert
/// at max_len, delete at length 1) are redrawn within the step.
TestCase apply_mutations(TestCase test, int n_m, int max_len, const Subject& subject,
                         RandomSource& rng);

/// Single-point crossover with uniform cut points; operand indices are
/// re-validated, children longer than max_len are truncated.
std::pair<TestCase, TestCase> crossover(const TestCase& a, const TestCase& b, int max_len,
                                        const Subject& subject, RandomSource& rng);

/// Linear rank selection over a population ordered best-first. Returns an
/// index in [0, ranked_count); lower indices win more often for bias > 1.
/// Throws for bias outside (1, 2).
std::size_t rank_select(std::size_t ranked_count, double bias, RandomSource& rng);

/// Draws `size` indices uniformly with replacement and returns the best
/// (smallest) one; size 1 degenerates to uniform selection.
std::size_t tournament_select(std::size_t ranked_count, int size, RandomSource& rng);

/// Map from covered goal to its witness test. Entries are never removed;
/// a witness is replaced only by a strictly shorter covering test.
class Archive {
public:
    /// Returns the goals newly covered by this test.
    std::vector<Goal> update(const Subject& subject, const TestCase& test,
                             const ExecutionTrace& trace);

    /// Direct insertion for callers that already know `test` covers `goal`.
    /// Returns true when the goal was absent before.
    bool insert(Goal goal, const TestCase& test);

    bool contains(Goal goal) const { return witnesses_.count(goal) != 0; }
    std::size_t size() const { return witnesses_.size(); }
    double coverage(const Subject& subject) const {
        return static_cast<double>(witnesses_.size()) / static_cast<double>(subject.goal_count());
    }
    const std::map<Goal, TestCase>& witnesses() const { return witnesses_; }

private:
    std::map<Goal, TestCase> witnesses_;
};

} // namespace sbtune
