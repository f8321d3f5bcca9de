#include "sbtune/subject.hpp"

#include <cmath>
#include <cstdlib>
#include <map>
#include <stdexcept>

namespace sbtune {

const char* relop_name(RelOp op) {
    switch (op) {
        case RelOp::Eq: return "==";
        case RelOp::Ne: return "!=";
        case RelOp::Lt: return "<";
        case RelOp::Le: return "<=";
        case RelOp::Gt: return ">";
        case RelOp::Ge: return ">=";
    }
    return "?";
}

RelOp relop_from_name(const std::string& name) {
    if (name == "==") return RelOp::Eq;
    if (name == "!=") return RelOp::Ne;
    if (name == "<") return RelOp::Lt;
    if (name == "<=") return RelOp::Le;
    if (name == ">") return RelOp::Gt;
    if (name == ">=") return RelOp::Ge;
    throw std::invalid_argument("unknown relational operator '" + name + "'");
}

Subject::Subject(std::string id, std::uint64_t seed, SubjectParams params,
                 std::vector<BranchNode> nodes)
    : id_(std::move(id)), seed_(seed), params_(params), nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw std::invalid_argument("subject '" + id_ + "' has no nodes");

    std::map<std::int32_t, std::size_t> index;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!index.emplace(nodes_[i].id, i).second)
            throw std::invalid_argument("duplicate node id in subject '" + id_ + "'");
    }
    id_lookup_.assign(index.begin(), index.end());

    children_true_.resize(nodes_.size());
    children_false_.resize(nodes_.size());

    // breadth-first from the roots gives a parents-before-children order and
    // rejects cycles and unknown parent ids
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!nodes_[i].parent) {
            ++root_count_;
            continue;
        }
        const auto it = index.find(nodes_[i].parent->first);
        if (it == index.end())
            throw std::invalid_argument("node references unknown parent in subject '" + id_ + "'");
        (nodes_[i].parent->second ? children_true_ : children_false_)[it->second].push_back(i);
    }
    if (root_count_ == 0) throw std::invalid_argument("subject '" + id_ + "' has no root node");
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (!nodes_[i].parent) topo_.push_back(i);
    for (std::size_t head = 0; head < topo_.size(); ++head) {
        const std::size_t n = topo_[head];
        for (const auto& bucket : {std::cref(children_true_[n]), std::cref(children_false_[n])})
            for (const std::size_t c : bucket.get()) topo_.push_back(c);
    }
    if (topo_.size() != nodes_.size())
        throw std::invalid_argument("parent references of subject '" + id_ + "' contain a cycle");
}

std::size_t Subject::index_of(std::int32_t node_id) const {
    auto lo = id_lookup_.begin(), hi = id_lookup_.end();
    while (lo < hi) {
        auto mid = lo + (hi - lo) / 2;
        if (mid->first == node_id) return mid->second;
        if (mid->first < node_id)
            lo = mid + 1;
        else
            hi = mid;
    }
    throw std::invalid_argument("subject '" + id_ + "' has no node " + std::to_string(node_id));
}

std::vector<Goal> Subject::all_goals() const {
    std::vector<Goal> goals;
    goals.reserve(goal_count());
    for (const BranchNode& n : nodes_) {
        goals.push_back({n.id, true});
        goals.push_back({n.id, false});
    }
    return goals;
}

std::vector<Goal> Subject::root_goals() const {
    std::vector<Goal> goals;
    for (const BranchNode& n : nodes_) {
        if (!n.parent) {
            goals.push_back({n.id, true});
            goals.push_back({n.id, false});
        }
    }
    return goals;
}

const std::vector<std::size_t>& Subject::child_nodes(std::int32_t node_id, bool outcome) const {
    const std::size_t i = index_of(node_id);
    return outcome ? children_true_[i] : children_false_[i];
}

namespace {

void validate_params(const SubjectParams& p) {
    if (p.roots < 1) throw std::invalid_argument("subject generation needs roots >= 1");
    if (p.max_depth < 1) throw std::invalid_argument("subject generation needs max_depth >= 1");
    if (p.child_prob < 0.0 || p.child_prob > 1.0)
        throw std::invalid_argument("child_prob must lie in [0,1]");
    if (p.slot_span < 1) throw std::invalid_argument("slot_span must be >= 1");
    if (p.const_lo > p.const_hi) throw std::invalid_argument("const range is empty");
}

void spawn_node(std::vector<BranchNode>& nodes, const SubjectParams& p, RandomSource& rng,
                std::optional<std::pair<std::int32_t, bool>> parent, std::int32_t depth) {
    BranchNode node;
    node.id = static_cast<std::int32_t>(nodes.size());
    node.slot = static_cast<std::int32_t>(rng.next_below(static_cast<std::uint64_t>(p.slot_span)));
    node.relop = static_cast<RelOp>(rng.next_below(6));
    node.constant = rng.next_int(p.const_lo, p.const_hi);
    node.parent = parent;
    nodes.push_back(node);
    const std::int32_t id = node.id;
    if (depth < p.max_depth) {
        if (rng.next_bool(p.child_prob))
            spawn_node(nodes, p, rng, std::make_pair(id, true), depth + 1);
        if (rng.next_bool(p.child_prob))
            spawn_node(nodes, p, rng, std::make_pair(id, false), depth + 1);
    }
}

} // namespace

Subject generate_subject(std::string id, std::uint64_t seed, const SubjectParams& params) {
    validate_params(params);
    RandomSource rng(seed);
    std::vector<BranchNode> nodes;
    for (std::int32_t r = 0; r < params.roots; ++r) spawn_node(nodes, params, rng, std::nullopt, 1);
    return Subject(std::move(id), seed, params, std::move(nodes));
}

namespace {

/// Standard branch-distance table over (value, relop, constant).
void branch_distances(std::int64_t v, RelOp op, std::int64_t k, double& d_true, double& d_false) {
    const double dv = static_cast<double>(v), dk = static_cast<double>(k);
    switch (op) {
        case RelOp::Eq:
            d_true = std::fabs(dv - dk);
            d_false = (v == k) ? 1.0 : 0.0;
            break;
        case RelOp::Ne:
            d_true = (v != k) ? 0.0 : 1.0;
            d_false = std::fabs(dv - dk);
            break;
        case RelOp::Lt:
            d_true = (v < k) ? 0.0 : dv - dk + 1.0;
            d_false = (v < k) ? dk - dv : 0.0;
            break;
        case RelOp::Le:
            d_true = (v <= k) ? 0.0 : dv - dk;
            d_false = (v <= k) ? dk - dv + 1.0 : 0.0;
            break;
        case RelOp::Gt:
            d_true = (v > k) ? 0.0 : dk - dv + 1.0;
            d_false = (v > k) ? dv - dk : 0.0;
            break;
        case RelOp::Ge:
            d_true = (v >= k) ? 0.0 : dk - dv;
            d_false = (v >= k) ? dv - dk + 1.0 : 0.0;
            break;
    }
}

} // namespace

ExecutionTrace execute(const Subject& subject, const TestCase& test) {
    ExecutionTrace trace;
    trace.slot_values.resize(test.size());
    for (std::size_t p = 0; p < test.size(); ++p) {
        const Statement& st = test.statements[p];
        std::uint64_t w = 0;
        switch (st.op) {
            case Statement::Op::Const:
                w = static_cast<std::uint64_t>(st.value);
                break;
            case Statement::Op::Add:
                w = static_cast<std::uint64_t>(trace.slot_values[st.lhs]) +
                    static_cast<std::uint64_t>(trace.slot_values[st.rhs]);
                break;
            case Statement::Op::Sub:
                w = static_cast<std::uint64_t>(trace.slot_values[st.lhs]) -
                    static_cast<std::uint64_t>(trace.slot_values[st.rhs]);
                break;
            case Statement::Op::Neg:
                w = 0 - static_cast<std::uint64_t>(trace.slot_values[st.lhs]);
                break;
        }
        trace.slot_values[p] = static_cast<std::int64_t>(w);
    }

    trace.node_status.resize(subject.nodes().size());
    for (const std::size_t i : subject.topo_order()) {
        const BranchNode& node = subject.nodes()[i];
        NodeStatus& st = trace.node_status[i];
        if (node.parent) {
            const NodeStatus& up = trace.node_status[subject.index_of(node.parent->first)];
            if (!(up.reached && up.evaluable && up.outcome == node.parent->second)) continue;
        }
        st.reached = true;
        if (static_cast<std::size_t>(node.slot) >= test.size()) continue;  // unevaluable
        st.evaluable = true;
        branch_distances(trace.slot_values[node.slot], node.relop, node.constant, st.d_true,
                         st.d_false);
        st.outcome = st.d_true == 0.0;
    }
    return trace;
}

double normalize_distance(double d) {
    if (std::isinf(d)) return 1.0;
    return d / (d + 1.0);
}

double goal_fitness(const Subject& subject, const ExecutionTrace& trace, Goal goal) {
    std::size_t idx = subject.index_of(goal.node);
    bool want = goal.outcome;
    double approach = 0.0;
    while (!trace.node_status[idx].reached) {
        // roots are always reached, so every unreached node has a parent
        const auto& parent = *subject.nodes()[idx].parent;
        idx = subject.index_of(parent.first);
        want = parent.second;
        approach += 1.0;
    }
    const NodeStatus& st = trace.node_status[idx];
    const double d = st.evaluable ? (want ? st.d_true : st.d_false) : kUnevaluable;
    return approach + normalize_distance(d);
}

std::vector<Goal> covered_goals(const Subject& subject, const ExecutionTrace& trace) {
    std::vector<Goal> covered;
    for (std::size_t i = 0; i < subject.nodes().size(); ++i) {
        const NodeStatus& st = trace.node_status[i];
        if (st.reached && st.evaluable) covered.push_back({subject.nodes()[i].id, st.outcome});
    }
    return covered;
}

std::vector<Goal> children(const Subject& subject, Goal goal) {
    std::vector<Goal> out;
    for (const std::size_t i : subject.child_nodes(goal.node, goal.outcome)) {
        out.push_back({subject.nodes()[i].id, true});
        out.push_back({subject.nodes()[i].id, false});
    }
    return out;
}

nlohmann::json subject_to_json(const Subject& subject) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const BranchNode& n : subject.nodes()) {
        nlohmann::json parent;
        if (n.parent)
            parent = nlohmann::json::array({n.parent->first, n.parent->second});
        nodes.push_back({{"id", n.id},
                         {"slot", n.slot},
                         {"relop", relop_name(n.relop)},
                         {"const", n.constant},
                         {"parent", std::move(parent)}});
    }
    const SubjectParams& p = subject.params();
    return nlohmann::json{{"id", subject.id()},
                          {"seed", subject.seed()},
                          {"params",
                           {{"roots", p.roots},
                            {"max_depth", p.max_depth},
                            {"child_prob", p.child_prob},
                            {"slot_span", p.slot_span},
                            {"const_lo", p.const_lo},
                            {"const_hi", p.const_hi}}},
                          {"nodes", std::move(nodes)}};
}

Subject subject_from_json(const nlohmann::json& j) {
    SubjectParams p;
    const nlohmann::json& jp = j.at("params");
    p.roots = jp.at("roots").get<std::int32_t>();
    p.max_depth = jp.at("max_depth").get<std::int32_t>();
    p.child_prob = jp.at("child_prob").get<double>();
    p.slot_span = jp.at("slot_span").get<std::int32_t>();
    p.const_lo = jp.at("const_lo").get<std::int64_t>();
    p.const_hi = jp.at("const_hi").get<std::int64_t>();

    std::vector<BranchNode> nodes;
    for (const nlohmann::json& jn : j.at("nodes")) {
        BranchNode n;
        n.id = jn.at("id").get<std::int32_t>();
        n.slot = jn.at("slot").get<std::int32_t>();
        n.relop = relop_from_name(jn.at("relop").get<std::string>());
        n.constant = jn.at("const").get<std::int64_t>();
        const nlohmann::json& jparent = jn.at("parent");
        if (!jparent.is_null())
            n.parent = std::make_pair(jparent.at(0).get<std::int32_t>(), jparent.at(1).get<bool>());
        nodes.push_back(n);
    }
    return Subject(j.at("id").get<std::string>(), j.at("seed").get<std::uint64_t>(), p,
                   std::move(nodes));
}

} // namespace sbtune
