#include "sbtune/gen_ops.hpp"

#include <cmath>
#include <stdexcept>

namespace sbtune {

Statement random_statement(const Subject& subject, std::size_t position, RandomSource& rng) {
    Statement st;
    const std::uint64_t kind = position == 0 ? 0 : rng.next_below(4);
    switch (kind) {
        case 0:
            st.op = Statement::Op::Const;
            st.value = rng.next_int(subject.params().const_lo, subject.params().const_hi);
            break;
        case 1:
            st.op = Statement::Op::Add;
            st.lhs = static_cast<std::int32_t>(rng.next_below(position));
            st.rhs = static_cast<std::int32_t>(rng.next_below(position));
            break;
        case 2:
            st.op = Statement::Op::Sub;
            st.lhs = static_cast<std::int32_t>(rng.next_below(position));
            st.rhs = static_cast<std::int32_t>(rng.next_below(position));
            break;
        default:
            st.op = Statement::Op::Neg;
            st.lhs = static_cast<std::int32_t>(rng.next_below(position));
            break;
    }
    return st;
}

TestCase random_testcase(const Subject& subject, int max_len, RandomSource& rng) {
    if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
    const std::size_t len = 1 + rng.next_below(static_cast<std::uint64_t>(max_len));
    TestCase test;
    test.statements.reserve(len);
    for (std::size_t p = 0; p < len; ++p)
        test.statements.push_back(random_statement(subject, p, rng));
    return test;
}

namespace {

/// Re-draws any operand index that no longer references a strictly earlier
/// position. A non-Const statement shifted to position 0 has no valid
/// operands left and becomes a fresh Const.
void revalidate(TestCase& test, const Subject& subject, RandomSource& rng) {
    for (std::size_t p = 0; p < test.size(); ++p) {
        Statement& st = test.statements[p];
        if (st.op == Statement::Op::Const) continue;
        if (p == 0) {
            st = random_statement(subject, 0, rng);
            continue;
        }
        const auto limit = static_cast<std::int32_t>(p);
        if (st.lhs < 0 || st.lhs >= limit)
            st.lhs = static_cast<std::int32_t>(rng.next_below(p));
        if (st.op != Statement::Op::Neg && (st.rhs < 0 || st.rhs >= limit))
            st.rhs = static_cast<std::int32_t>(rng.next_below(p));
    }
}

enum class MutationKind { Insert, Delete, Replace };

void mutate_once(TestCase& test, int max_len, const Subject& subject, RandomSource& rng) {
    for (;;) {
        const auto kind = static_cast<MutationKind>(rng.next_below(3));
        if (kind == MutationKind::Insert) {
            if (test.size() >= static_cast<std::size_t>(max_len)) continue;  // rejected, redraw
            const std::size_t pos = rng.next_below(test.size() + 1);
            test.statements.insert(test.statements.begin() + static_cast<std::ptrdiff_t>(pos),
                                   random_statement(subject, pos, rng));
            revalidate(test, subject, rng);
            return;
        }
        if (kind == MutationKind::Delete) {
            if (test.size() <= 1) continue;  // rejected, redraw
            const std::size_t pos = rng.next_below(test.size());
            test.statements.erase(test.statements.begin() + static_cast<std::ptrdiff_t>(pos));
            revalidate(test, subject, rng);
            return;
        }
        const std::size_t pos = rng.next_below(test.size());
        test.statements[pos] = random_statement(subject, pos, rng);
        return;
    }
}

} // namespace

TestCase apply_mutations(TestCase test, int n_m, int max_len, const Subject& subject,
                         RandomSource& rng) {
    if (n_m < 0) throw std::invalid_argument("mutation count must be >= 0");
    for (int i = 0; i < n_m; ++i) mutate_once(test, max_len, subject, rng);
    return test;
}

std::pair<TestCase, TestCase> crossover(const TestCase& a, const TestCase& b, int max_len,
                                        const Subject& subject, RandomSource& rng) {
    const std::size_t alpha = 1 + rng.next_below(a.size());
    const std::size_t beta = 1 + rng.next_below(b.size());

    TestCase c1, c2;
    c1.statements.assign(a.statements.begin(),
                         a.statements.begin() + static_cast<std::ptrdiff_t>(alpha));
    c1.statements.insert(c1.statements.end(),
                         b.statements.begin() + static_cast<std::ptrdiff_t>(beta),
                         b.statements.end());
    c2.statements.assign(b.statements.begin(),
                         b.statements.begin() + static_cast<std::ptrdiff_t>(beta));
    c2.statements.insert(c2.statements.end(),
                         a.statements.begin() + static_cast<std::ptrdiff_t>(alpha),
                         a.statements.end());

    revalidate(c1, subject, rng);
    revalidate(c2, subject, rng);
    if (c1.size() > static_cast<std::size_t>(max_len)) c1.statements.resize(max_len);
    if (c2.size() > static_cast<std::size_t>(max_len)) c2.statements.resize(max_len);
    return {std::move(c1), std::move(c2)};
}

std::size_t rank_select(std::size_t ranked_count, double bias, RandomSource& rng) {
    if (ranked_count < 1) throw std::invalid_argument("empty population");
    if (!(bias > 1.0 && bias < 2.0))
        throw std::invalid_argument("rank bias must lie strictly inside (1, 2)");
    const double n = static_cast<double>(ranked_count);
    const double u = rng.next_double();
    const double r =
        std::floor(n * (bias - std::sqrt(bias * bias - 4.0 * (bias - 1.0) * u)) /
                   (2.0 * (bias - 1.0)));
    if (r < 0.0) return 0;
    if (r >= n) return ranked_count - 1;
    return static_cast<std::size_t>(r);
}

std::size_t tournament_select(std::size_t ranked_count, int size, RandomSource& rng) {
    if (ranked_count < 1) throw std::invalid_argument("empty population");
    if (size < 1) throw std::invalid_argument("tournament size must be >= 1");
    std::size_t best = rng.next_below(ranked_count);
    for (int i = 1; i < size; ++i) best = std::min(best, rng.next_below(ranked_count));
    return best;
}

std::vector<Goal> Archive::update(const Subject& subject, const TestCase& test,
                                  const ExecutionTrace& trace) {
    std::vector<Goal> newly;
    for (const Goal g : covered_goals(subject, trace)) {
        const auto it = witnesses_.find(g);
        if (it == witnesses_.end()) {
            witnesses_.emplace(g, test);
            newly.push_back(g);
        } else if (test.size() < it->second.size()) {
            it->second = test;
        }
    }
    return newly;
}

bool Archive::insert(Goal goal, const TestCase& test) {
    const auto it = witnesses_.find(goal);
    if (it == witnesses_.end()) {
        witnesses_.emplace(goal, test);
        return true;
    }
    if (test.size() < it->second.size()) it->second = test;
    return false;
}

} // namespace sbtune
