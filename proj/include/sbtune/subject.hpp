#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sbtune/rng.hpp"

namespace sbtune {

/// One statement of the toy straight-line language. Operand slots always
/// reference strictly earlier statement positions.
struct Statement {
    enum class Op : std::uint8_t { Const, Add, Sub, Neg };
    Op op = Op::Const;
    std::int64_t value = 0;  // Const payload
    std::int32_t lhs = -1;   // Add/Sub/Neg operand
    std::int32_t rhs = -1;   // Add/Sub operand
    bool operator==(const Statement&) const = default;
};

struct TestCase {
    std::vector<Statement> statements;
    std::size_t size() const { return statements.size(); }
    bool operator==(const TestCase&) const = default;
};

enum class RelOp : std::uint8_t { Eq, Ne, Lt, Le, Gt, Ge };
const char* relop_name(RelOp op);
RelOp relop_from_name(const std::string& name);

/// One branch outcome of one predicate node.
struct Goal {
    std::int32_t node = 0;
    bool outcome = true;
    auto operator<=>(const Goal&) const = default;
};

struct BranchNode {
    std::int32_t id = 0;
    std::int32_t slot = 0;
    RelOp relop = RelOp::Eq;
    std::int64_t constant = 0;
    /// (parent node id, required outcome); nullopt for roots.
    std::optional<std::pair<std::int32_t, bool>> parent;
};

struct SubjectParams {
    std::int32_t roots = 3;
    std::int32_t max_depth = 4;
    double child_prob = 0.4;
    std::int32_t slot_span = 6;
    std::int64_t const_lo = -10;
    std::int64_t const_hi = 10;
};

/// A synthetic subject under test: a control-dependence forest of branch
/// predicates over the slot values of an executed test case. Immutable.
class Subject {
public:
    Subject(std::string id, std::uint64_t seed, SubjectParams params,
            std::vector<BranchNode> nodes);

    const std::string& id() const { return id_; }
    std::uint64_t seed() const { return seed_; }
    const SubjectParams& params() const { return params_; }
    const std::vector<BranchNode>& nodes() const { return nodes_; }

    std::size_t index_of(std::int32_t node_id) const;  // throws on unknown id
    std::size_t goal_count() const { return 2 * nodes_.size(); }
    std::size_t root_count() const { return root_count_; }

    std::vector<Goal> all_goals() const;
    std::vector<Goal> root_goals() const;

    /// Node indices whose parent requirement is exactly (node_id, outcome).
    const std::vector<std::size_t>& child_nodes(std::int32_t node_id, bool outcome) const;

    /// Indices ordered parents-before-children.
    const std::vector<std::size_t>& topo_order() const { return topo_; }

private:
    std::string id_;
    std::uint64_t seed_ = 0;
    SubjectParams params_;
    std::vector<BranchNode> nodes_;
    std::vector<std::size_t> topo_;
    std::size_t root_count_ = 0;
    std::vector<std::vector<std::size_t>> children_true_;
    std::vector<std::vector<std::size_t>> children_false_;
    std::vector<std::size_t> id_index_;  // dense map when ids are small, else fallback
    std::vector<std::pair<std::int32_t, std::size_t>> id_lookup_;
};

/// Deterministic for fixed (seed, params): `roots` root nodes; every node
/// above the depth limit spawns a child under each outcome with probability
/// child_prob.
Subject generate_subject(std::string id, std::uint64_t seed, const SubjectParams& params);

constexpr double kUnevaluable = std::numeric_limits<double>::infinity();

struct NodeStatus {
    bool reached = false;
    bool evaluable = false;
    bool outcome = false;  // predicate value, meaningful when evaluable
    double d_true = kUnevaluable;
    double d_false = kUnevaluable;
};

struct ExecutionTrace {
    std::vector<std::int64_t> slot_values;
    std::vector<NodeStatus> node_status;  // indexed like Subject::nodes()
};

/// Total: statements evaluate with wrapping 64-bit arithmetic; predicates on
/// missing slots leave the node reached-but-unevaluable.
ExecutionTrace execute(const Subject& subject, const TestCase& test);

/// d / (d + 1), with the unevaluable sentinel mapping to 1.
double normalize_distance(double d);

/// approach level + normalised branch distance at the decisive node.
/// Zero exactly when the goal is covered.
double goal_fitness(const Subject& subject, const ExecutionTrace& trace, Goal goal);

std::vector<Goal> covered_goals(const Subject& subject, const ExecutionTrace& trace);

/// Both goals of every node control-dependent on (goal.node, goal.outcome).
std::vector<Goal> children(const Subject& subject, Goal goal);

nlohmann::json subject_to_json(const Subject& subject);
Subject subject_from_json(const nlohmann::json& j);

} // namespace sbtune
