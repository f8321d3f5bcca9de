#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sbtune/subject.hpp"

using namespace sbtune;

namespace {

Subject single_node(RelOp relop, std::int64_t constant, std::int32_t slot = 0) {
    SubjectParams params;
    params.roots = 1;
    params.max_depth = 1;
    params.slot_span = slot + 1;
    BranchNode node{0, slot, relop, constant, std::nullopt};
    return Subject("one", 0, params, {node});
}

TestCase consts(std::initializer_list<std::int64_t> values) {
    TestCase test;
    for (const std::int64_t v : values) {
        Statement st;
        st.op = Statement::Op::Const;
        st.value = v;
        test.statements.push_back(st);
    }
    return test;
}

} // namespace

TEST_CASE("generation is deterministic and honours its parameters") {
    SubjectParams params;
    params.roots = 3;
    params.max_depth = 4;
    params.child_prob = 0.5;
    const Subject a = generate_subject("s", 7, params);
    const Subject b = generate_subject("s", 7, params);
    CHECK(subject_to_json(a) == subject_to_json(b));

    SUBCASE("max_depth 1 keeps every node a root") {
        params.max_depth = 1;
        const Subject flat = generate_subject("flat", 11, params);
        for (const BranchNode& n : flat.nodes()) CHECK_FALSE(n.parent.has_value());
    }

    SUBCASE("zero child probability gives exactly the roots") {
        params.child_prob = 0.0;
        const Subject roots_only = generate_subject("roots", 7, params);
        CHECK(roots_only.nodes().size() == 3);
        CHECK(roots_only.goal_count() == 6);
    }

    SUBCASE("invalid parameters are rejected") {
        params.roots = 0;
        CHECK_THROWS_AS(generate_subject("bad", 1, params), std::invalid_argument);
    }
}

TEST_CASE("equality distances follow the standard table") {
    const Subject subject = single_node(RelOp::Eq, 5);

    const ExecutionTrace hit = execute(subject, consts({5}));
    CHECK(hit.node_status[0].reached);
    CHECK(hit.node_status[0].evaluable);
    CHECK(hit.node_status[0].d_true == 0.0);
    CHECK(hit.node_status[0].d_false == 1.0);
    CHECK(covered_goals(subject, hit) == std::vector<Goal>{{0, true}});

    const ExecutionTrace miss = execute(subject, consts({7}));
    CHECK(miss.node_status[0].d_true == 2.0);
    CHECK(miss.node_status[0].d_false == 0.0);
    CHECK(covered_goals(subject, miss) == std::vector<Goal>{{0, false}});
}

TEST_CASE("a predicate on a missing slot is reached but unevaluable") {
    const Subject subject = single_node(RelOp::Eq, 5, 3);
    const ExecutionTrace trace = execute(subject, consts({1, 2}));
    CHECK(trace.node_status[0].reached);
    CHECK_FALSE(trace.node_status[0].evaluable);
    CHECK(covered_goals(subject, trace).empty());
    CHECK(goal_fitness(subject, trace, {0, true}) == 1.0);
    CHECK(goal_fitness(subject, trace, {0, false}) == 1.0);
}

TEST_CASE("goal fitness combines approach level and normalised distance") {
    const Subject subject = single_node(RelOp::Eq, 5);
    CHECK(goal_fitness(subject, execute(subject, consts({5})), {0, true}) == 0.0);
    CHECK(goal_fitness(subject, execute(subject, consts({7})), {0, true}) ==
          doctest::Approx(2.0 / 3.0));

    // chain: root "slot0 == 5", child "slot0 == 7" nested under true
    SubjectParams params;
    params.roots = 1;
    params.max_depth = 2;
    params.slot_span = 1;
    params.const_lo = 0;
    params.const_hi = 8;
    std::vector<BranchNode> nodes{{0, 0, RelOp::Eq, 5, std::nullopt},
                                  {1, 0, RelOp::Eq, 7, std::make_pair(0, true)}};
    const Subject chain("chain", 0, params, std::move(nodes));

    CHECK(goal_fitness(chain, execute(chain, consts({1})), {1, true}) == doctest::Approx(1.8));

    // exhaustive check of the approach-level rule over all short const tests
    for (std::int64_t a = 0; a <= 8; ++a) {
        for (int len = 1; len <= 2; ++len) {
            const TestCase test = len == 1 ? consts({a}) : consts({a, 3});
            const ExecutionTrace trace = execute(chain, test);
            const double expect =
                a == 5 ? normalize_distance(std::fabs(static_cast<double>(a) - 7.0))
                       : 1.0 + normalize_distance(std::fabs(static_cast<double>(a) - 5.0));
            CHECK(goal_fitness(chain, trace, {1, true}) == doctest::Approx(expect));
        }
    }

    CHECK_THROWS_AS(goal_fitness(chain, execute(chain, consts({1})), Goal{9, true}),
                    std::invalid_argument);
}

TEST_CASE("covered goals need their parents covered first") {
    RandomSource rng(5);
    const Subject chain = oracle::chain_subject("c", 3, rng);
    const ExecutionTrace trace = execute(chain, consts({0}));
    for (const Goal g : covered_goals(chain, trace)) {
        const BranchNode& node = chain.nodes()[chain.index_of(g.node)];
        if (node.parent) {
            const NodeStatus& up = trace.node_status[chain.index_of(node.parent->first)];
            CHECK(up.reached);
            CHECK(up.evaluable);
            CHECK(up.outcome == node.parent->second);
        }
    }
}

TEST_CASE("children lists mirror the forest structure") {
    SubjectParams params;
    params.roots = 1;
    params.max_depth = 2;
    params.slot_span = 1;
    std::vector<BranchNode> nodes{{0, 0, RelOp::Lt, 3, std::nullopt},
                                  {1, 0, RelOp::Gt, 0, std::make_pair(0, true)}};
    const Subject subject("forest", 0, params, std::move(nodes));

    CHECK(children(subject, {1, true}).empty());
    CHECK(children(subject, {0, true}) == std::vector<Goal>{{1, true}, {1, false}});
    CHECK(children(subject, {0, false}).empty());

    SUBCASE("total child goals count 2*(nodes - roots) on generated subjects") {
        SubjectParams gen;
        gen.roots = 2;
        gen.max_depth = 4;
        gen.child_prob = 0.6;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const Subject s = generate_subject("g", seed, gen);
            std::size_t total = 0;
            for (const Goal g : s.all_goals()) total += children(s, g).size();
            CHECK(total == 2 * (s.nodes().size() - s.root_count()));
        }
    }
}

TEST_CASE("execution invariants hold under fuzzing") {
    SubjectParams params;
    params.roots = 2;
    params.max_depth = 3;
    params.child_prob = 0.5;
    params.slot_span = 3;
    RandomSource rng(123);
    for (int iter = 0; iter < 300; ++iter) {
        const Subject subject = generate_subject("f", rng.next_u64(), params);
        const TestCase test = random_testcase(subject, 6, rng);
        const ExecutionTrace trace = execute(subject, test);

        for (std::size_t i = 0; i < subject.nodes().size(); ++i) {
            const NodeStatus& st = trace.node_status[i];
            if (!(st.reached && st.evaluable)) continue;
            CHECK(std::min(st.d_true, st.d_false) == 0.0);
            CHECK(std::max(st.d_true, st.d_false) > 0.0);
        }
        std::size_t covered = 0;
        for (const Goal g : subject.all_goals()) {
            const double fitness = goal_fitness(subject, trace, g);
            CHECK(fitness >= 0.0);
            const auto list = covered_goals(subject, trace);
            const bool is_covered = std::find(list.begin(), list.end(), g) != list.end();
            CHECK((fitness == 0.0) == is_covered);
            if (is_covered) ++covered;
        }
        CHECK(covered <= subject.goal_count());
    }
}

TEST_CASE("fitness weakly improves as the constant gap shrinks") {
    const Subject subject = single_node(RelOp::Eq, 5);
    double previous = goal_fitness(subject, execute(subject, consts({-20})), {0, true});
    for (std::int64_t v = -19; v <= 5; ++v) {
        const double now = goal_fitness(subject, execute(subject, consts({v})), {0, true});
        CHECK(now <= previous);
        previous = now;
    }
}

TEST_CASE("extending a test never worsens any goal's fitness") {
    SubjectParams params;
    params.roots = 2;
    params.max_depth = 3;
    params.child_prob = 0.6;
    params.slot_span = 3;
    RandomSource rng(77);
    for (int iter = 0; iter < 200; ++iter) {
        const Subject subject = generate_subject("x", rng.next_u64(), params);
        const TestCase base = random_testcase(subject, 4, rng);
        TestCase longer = base;
        longer.statements.push_back(random_statement(subject, longer.size(), rng));
        const ExecutionTrace short_trace = execute(subject, base);
        const ExecutionTrace long_trace = execute(subject, longer);
        for (const Goal g : subject.all_goals())
            CHECK(goal_fitness(subject, long_trace, g) <=
                  goal_fitness(subject, short_trace, g) + 1e-12);
    }
}

TEST_CASE("subjects round-trip through JSON") {
    SubjectParams params;
    params.roots = 2;
    params.max_depth = 3;
    params.child_prob = 0.7;
    const Subject subject = generate_subject("round", 99, params);
    const Subject back = subject_from_json(subject_to_json(subject));
    CHECK(subject_to_json(back) == subject_to_json(subject));
}
