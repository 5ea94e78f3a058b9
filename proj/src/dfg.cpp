#include "ipsim/dfg.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <tuple>

#include <boost/graph/adjacency_list.hpp>
#include <boost/graph/vf2_sub_graph_iso.hpp>

namespace ipsim {

std::vector<int> DataFlowGraph::leaves() const {
    std::vector<int> out;
    for (const auto& n : nodes)
        if (n.kind == NodeKind::Input || n.kind == NodeKind::Inout || n.kind == NodeKind::Constant)
            out.push_back(n.id);
    return out;
}

void DataFlowGraph::validate() const {
    const int n = static_cast<int>(nodes.size());
    for (int i = 0; i < n; ++i)
        if (nodes[i].id != i)
            throw FormatError("node at position " + std::to_string(i) + " has id " + std::to_string(nodes[i].id));
    for (const auto& [s, d] : edges)
        if (s < 0 || s >= n || d < 0 || d >= n)
            throw FormatError("edge [" + std::to_string(s) + ", " + std::to_string(d) + "] has a missing endpoint");
    for (int r : roots)
        if (r < 0 || r >= n)
            throw FormatError("root " + std::to_string(r) + " is not a node");
}

namespace {

struct SignalInfo {
    NodeKind kind = NodeKind::Signal;
    SourceLocation loc;
    int order = 0;
};

struct LhsTarget {
    std::string name;
    bool partial = false;
};

void collect_targets(const ExprPtr& lhs, std::vector<LhsTarget>& out) {
    if (!lhs)
        return;
    switch (lhs->kind) {
    case Expr::Kind::Identifier:
        out.push_back({lhs->text, false});
        break;
    case Expr::Kind::Select:
        if (lhs->operands[0]->kind == Expr::Kind::Identifier)
            out.push_back({lhs->operands[0]->text, true});
        break;
    case Expr::Kind::Concat:
        for (const auto& o : lhs->operands)
            collect_targets(o, out);
        break;
    default:
        break;
    }
}

std::vector<LhsTarget> targets_of(const ExprPtr& lhs) {
    std::vector<LhsTarget> out;
    collect_targets(lhs, out);
    return out;
}

void assigned_in(const StmtPtr& s, std::set<std::string>& out) {
    if (!s)
        return;
    if (s->kind == Stmt::Kind::Assign)
        for (const auto& t : targets_of(s->lhs))
            out.insert(t.name);
    assigned_in(s->then_s, out);
    assigned_in(s->else_s, out);
    for (const auto& b : s->body)
        assigned_in(b, out);
    for (const auto& it : s->items)
        assigned_in(it.body, out);
}

/// Who drives what, computed once per module.
struct DriverIndex {
    std::map<std::string, SignalInfo> signals;
    std::map<std::string, std::vector<const ContinuousAssign*>> full;
    std::map<std::string, std::vector<const ContinuousAssign*>> partial;
    std::map<std::string, std::vector<const AlwaysBlock*>> procedural;

    explicit DriverIndex(const FlatModule& flat) {
        int order = 0;
        for (const auto& p : flat.module.ports) {
            NodeKind k = p.dir == PortDir::Input ? NodeKind::Input
                         : p.dir == PortDir::Output ? NodeKind::Output
                                                    : NodeKind::Inout;
            signals[p.name] = {k, p.loc, order++};
        }
        for (const auto* n : flat.module.items_of<NetDecl>())
            if (!signals.count(n->name))
                signals[n->name] = {NodeKind::Signal, n->loc, order++};
        for (const auto* a : flat.module.items_of<ContinuousAssign>()) {
            for (const auto& t : targets_of(a->lhs)) {
                if (t.partial)
                    partial[t.name].push_back(a);
                else
                    full[t.name].push_back(a);
            }
        }
        for (const auto* b : flat.module.items_of<AlwaysBlock>()) {
            std::set<std::string> names;
            assigned_in(b->body, names);
            for (const auto& n : names)
                procedural[n].push_back(b);
        }
    }

    bool driven(const std::string& name) const {
        return full.count(name) || partial.count(name) || procedural.count(name);
    }

    const SignalInfo& info(const std::string& name) const {
        auto it = signals.find(name);
        if (it == signals.end())
            throw DataflowError("unknown signal '" + name + "'");
        return it->second;
    }
};

NodeKind unary_kind(UnaryOp op) {
    switch (op) {
    case UnaryOp::Minus: return NodeKind::Minus;
    case UnaryOp::BitNot: return NodeKind::Not;
    case UnaryOp::LogNot: return NodeKind::LNot;
    case UnaryOp::RedAnd:
    case UnaryOp::RedNand: return NodeKind::RedAnd;
    case UnaryOp::RedOr:
    case UnaryOp::RedNor: return NodeKind::RedOr;
    case UnaryOp::RedXor:
    case UnaryOp::RedXnor: return NodeKind::RedXor;
    case UnaryOp::Plus: break;
    }
    return NodeKind::Unknown;
}

NodeKind binary_kind(BinaryOp op) {
    switch (op) {
    case BinaryOp::Add: return NodeKind::Plus;
    case BinaryOp::Sub: return NodeKind::Minus;
    case BinaryOp::Mul: return NodeKind::Times;
    case BinaryOp::Div: return NodeKind::Divide;
    case BinaryOp::Mod: return NodeKind::Mod;
    case BinaryOp::Pow: return NodeKind::Unknown;
    case BinaryOp::Shl:
    case BinaryOp::AShl: return NodeKind::ShiftL;
    case BinaryOp::Shr:
    case BinaryOp::AShr: return NodeKind::ShiftR;
    case BinaryOp::Lt: return NodeKind::Lt;
    case BinaryOp::Le: return NodeKind::Le;
    case BinaryOp::Gt: return NodeKind::Gt;
    case BinaryOp::Ge: return NodeKind::Ge;
    case BinaryOp::Eq:
    case BinaryOp::CaseEq: return NodeKind::Eq;
    case BinaryOp::Neq:
    case BinaryOp::CaseNeq: return NodeKind::Neq;
    case BinaryOp::BitAnd: return NodeKind::And;
    case BinaryOp::BitOr: return NodeKind::Or;
    case BinaryOp::BitXor: return NodeKind::Xor;
    case BinaryOp::BitXnor: return NodeKind::Xnor;
    case BinaryOp::Nand: return NodeKind::Nand;
    case BinaryOp::Nor: return NodeKind::Nor;
    case BinaryOp::LogAnd: return NodeKind::LAnd;
    case BinaryOp::LogOr: return NodeKind::LOr;
    }
    return NodeKind::Unknown;
}

class TreeBuilder {
public:
    TreeBuilder(const DriverIndex& index, SignalTree& tree) : index_(index), tree_(tree) {}

    int add(NodeKind kind, std::optional<std::string> label, SourceLocation loc) {
        SignalTree::Node n;
        n.kind = kind;
        n.label = std::move(label);
        n.loc = std::move(loc);
        tree_.nodes.push_back(std::move(n));
        parents_.push_back(0);
        return static_cast<int>(tree_.nodes.size()) - 1;
    }

    int terminal(const std::string& name, const SourceLocation& loc) {
        const SignalInfo& info = index_.info(name);
        int id = add(info.kind, name, loc);
        tree_.nodes[id].ref = name;
        return id;
    }

    /// Adds `child` under `parent`, cloning it first if it already has a parent.
    void attach(int parent, int child) {
        if (parents_[child] > 0)
            child = clone(child);
        parents_[child] = 1;
        tree_.nodes[parent].children.push_back(child);
    }

    int node_with(NodeKind kind, const SourceLocation& loc, std::initializer_list<int> children,
                  std::optional<std::string> label = std::nullopt) {
        int id = add(kind, std::move(label), loc);
        for (int c : children)
            attach(id, c);
        return id;
    }

    int expr(const Expr& e) {
        switch (e.kind) {
        case Expr::Kind::Identifier:
            return terminal(e.text, e.loc);
        case Expr::Kind::Number:
            return add(NodeKind::Constant, e.text, e.loc);
        case Expr::Kind::Unary: {
            if (e.unary_op == UnaryOp::Plus)
                return expr(*e.operands[0]);
            int inner = node_with(unary_kind(e.unary_op), e.loc, {expr(*e.operands[0])});
            if (e.unary_op == UnaryOp::RedNand || e.unary_op == UnaryOp::RedNor || e.unary_op == UnaryOp::RedXnor)
                return node_with(NodeKind::Not, e.loc, {inner});
            return inner;
        }
        case Expr::Kind::Binary:
            return node_with(binary_kind(e.binary_op), e.loc, {expr(*e.operands[0]), expr(*e.operands[1])});
        case Expr::Kind::Ternary:
            return node_with(NodeKind::Cond, e.loc,
                             {expr(*e.operands[0]), expr(*e.operands[1]), expr(*e.operands[2])});
        case Expr::Kind::Concat: {
            int id = add(NodeKind::Concat, std::nullopt, e.loc);
            for (const auto& o : e.operands)
                attach(id, expr(*o));
            return id;
        }
        case Expr::Kind::Replicate: {
            int id = add(NodeKind::Concat, std::nullopt, e.loc);
            for (const auto& o : e.operands)
                attach(id, expr(*o));
            return id;
        }
        case Expr::Kind::Select: {
            int id = add(NodeKind::PartSelect, std::nullopt, e.loc);
            for (const auto& o : e.operands)
                attach(id, expr(*o));
            return id;
        }
        }
        return add(NodeKind::Unknown, std::nullopt, e.loc);
    }

    using Value = std::optional<int>;

    int hold(const std::string& signal, const SourceLocation& loc) { return terminal(signal, loc); }

    int value_or_hold(Value v, const std::string& signal, const SourceLocation& loc) {
        return v ? *v : hold(signal, loc);
    }

    Value exec(const StmtPtr& s, Value cur, const std::string& signal) {
        if (!s)
            return cur;
        switch (s->kind) {
        case Stmt::Kind::Null:
            return cur;
        case Stmt::Kind::Assign: {
            for (const auto& t : targets_of(s->lhs)) {
                if (t.name != signal)
                    continue;
                int rhs = expr(*s->rhs);
                if (!t.partial)
                    return rhs;
                int prev = value_or_hold(cur, signal, s->loc);
                return node_with(NodeKind::Concat, s->loc, {prev, rhs});
            }
            return cur;
        }
        case Stmt::Kind::Block:
            for (const auto& b : s->body)
                cur = exec(b, cur, signal);
            return cur;
        case Stmt::Kind::If: {
            Value t = exec(s->then_s, cur, signal);
            Value e = s->else_s ? exec(s->else_s, cur, signal) : cur;
            if (t == e)
                return cur;
            int cond = expr(*s->cond);
            int tv = value_or_hold(t, signal, s->loc);
            int ev = value_or_hold(e, signal, s->loc);
            return node_with(NodeKind::Branch, s->loc, {cond, tv, ev});
        }
        case Stmt::Kind::Case: {
            Value acc = cur;
            for (const auto& item : s->items)
                if (item.labels.empty())
                    acc = exec(item.body, cur, signal);
            for (auto it = s->items.rbegin(); it != s->items.rend(); ++it) {
                if (it->labels.empty())
                    continue;
                Value v = exec(it->body, cur, signal);
                if (v == acc)
                    continue;
                int cond = case_condition(*s, *it);
                int tv = value_or_hold(v, signal, s->loc);
                int ev = value_or_hold(acc, signal, s->loc);
                acc = node_with(NodeKind::Branch, s->loc, {cond, tv, ev});
            }
            return acc;
        }
        }
        return cur;
    }

    void mark_root(int id) { parents_[id] = 1; }

private:
    const DriverIndex& index_;
    SignalTree& tree_;
    std::vector<int> parents_;

    int clone(int id) {
        SignalTree::Node copy = tree_.nodes[id];
        copy.children.clear();
        tree_.nodes.push_back(copy);
        parents_.push_back(0);
        int fresh = static_cast<int>(tree_.nodes.size()) - 1;
        for (int c : tree_.nodes[id].children) {
            int cc = clone(c);
            parents_[cc] = 1;
            tree_.nodes[fresh].children.push_back(cc);
        }
        return fresh;
    }

    int case_condition(const Stmt& s, const CaseItem& item) {
        int acc = -1;
        for (const auto& label : item.labels) {
            int eq = node_with(NodeKind::Eq, label->loc, {expr(*s.cond), expr(*label)});
            acc = acc < 0 ? eq : node_with(NodeKind::LOr, label->loc, {acc, eq});
        }
        return acc;
    }
};

SignalTree analyze_with(const DriverIndex& index, const std::string& signal) {
    const SignalInfo& info = index.info(signal);
    SignalTree tree;
    tree.signal = signal;
    TreeBuilder b(index, tree);
    tree.root = b.add(info.kind, signal, info.loc);
    b.mark_root(tree.root);
    if (info.kind == NodeKind::Input)
        return tree;

    auto full = index.full.find(signal);
    auto part = index.partial.find(signal);
    auto proc = index.procedural.find(signal);
    std::size_t n_full = full == index.full.end() ? 0 : full->second.size();
    std::size_t n_part = part == index.partial.end() ? 0 : part->second.size();
    std::size_t n_proc = proc == index.procedural.end() ? 0 : proc->second.size();

    if (n_full + n_part + n_proc == 0) {
        if (info.kind == NodeKind::Inout)
            return tree;
        throw UndrivenSignal(signal);
    }
    if (n_full + n_proc > 1 || (n_full + n_proc == 1 && n_part > 0))
        throw MultipleContinuousDrivers(signal);

    int driver;
    if (n_full == 1) {
        driver = b.expr(*full->second.front()->rhs);
    } else if (n_proc == 1) {
        const AlwaysBlock* blk = proc->second.front();
        auto v = b.exec(blk->body, std::nullopt, signal);
        driver = b.value_or_hold(v, signal, blk->loc);
    } else {
        driver = b.add(NodeKind::Concat, std::nullopt, part->second.front()->loc);
        for (const auto* a : part->second)
            b.attach(driver, b.expr(*a->rhs));
    }
    b.attach(tree.root, driver);
    return tree;
}

struct ProtoNode {
    NodeKind kind;
    std::optional<std::string> label;
    SourceLocation loc;
    int seq;
};

/// Sorts edges, drops duplicates and self-loops.
void normalize_edges(std::vector<std::pair<int, int>>& edges) {
    edges.erase(std::remove_if(edges.begin(), edges.end(), [](const auto& e) { return e.first == e.second; }),
                edges.end());
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

} // namespace

SignalTree analyze_signal(const FlatModule& flat, const std::string& signal) {
    DriverIndex index(flat);
    return analyze_with(index, signal);
}

DataFlowGraph build_dfg(const FlatModule& flat) {
    DriverIndex index(flat);
    std::vector<ProtoNode> proto;
    std::vector<std::pair<int, int>> edges;
    std::map<std::string, int> signal_node;

    auto signal_id = [&](const std::string& name) {
        auto it = signal_node.find(name);
        if (it != signal_node.end())
            return it->second;
        const SignalInfo& info = index.info(name);
        if (info.kind == NodeKind::Signal && !index.driven(name))
            throw UndrivenSignal(name);
        int id = static_cast<int>(proto.size());
        proto.push_back({info.kind, name, info.loc, id});
        signal_node[name] = id;
        return id;
    };

    std::vector<std::pair<int, std::string>> ordered;
    for (const auto& [name, info] : index.signals)
        ordered.emplace_back(info.order, name);
    std::sort(ordered.begin(), ordered.end());

    for (const auto& [order, name] : ordered) {
        const SignalInfo& info = index.signals.at(name);
        if (info.kind == NodeKind::Input)
            continue;
        if (!index.driven(name)) {
            if (info.kind == NodeKind::Output)
                throw UndrivenSignal(name);
            continue;
        }
        SignalTree tree = analyze_with(index, name);
        std::vector<int> map(tree.nodes.size(), -1);
        for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
            const auto& n = tree.nodes[i];
            if (static_cast<int>(i) == tree.root) {
                map[i] = signal_id(name);
            } else if (n.ref) {
                map[i] = signal_id(*n.ref);
            } else {
                map[i] = static_cast<int>(proto.size());
                proto.push_back({n.kind, n.label, n.loc, static_cast<int>(proto.size())});
            }
        }
        for (std::size_t i = 0; i < tree.nodes.size(); ++i)
            for (int c : tree.nodes[i].children)
                edges.emplace_back(map[i], map[c]);
    }

    std::vector<int> root_proto;
    for (const auto& p : flat.module.ports) {
        if (p.dir == PortDir::Output || (p.dir == PortDir::Inout && index.driven(p.name)))
            root_proto.push_back(signal_id(p.name));
    }

    std::vector<int> order(proto.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const auto& x = proto[a];
        const auto& y = proto[b];
        return std::tie(x.kind, x.label, x.loc.file, x.loc.line, x.loc.column, x.seq) <
               std::tie(y.kind, y.label, y.loc.file, y.loc.line, y.loc.column, y.seq);
    });
    std::vector<int> remap(proto.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        remap[order[i]] = static_cast<int>(i);

    DataFlowGraph g;
    g.name = flat.module.name;
    g.nodes.resize(proto.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto& p = proto[order[i]];
        g.nodes[i] = DfgNode{static_cast<int>(i), p.kind, p.label};
    }
    for (auto& [s, d] : edges)
        g.edges.emplace_back(remap[s], remap[d]);
    normalize_edges(g.edges);
    for (int r : root_proto)
        g.roots.push_back(remap[r]);
    std::sort(g.roots.begin(), g.roots.end());
    g.roots.erase(std::unique(g.roots.begin(), g.roots.end()), g.roots.end());
    return g;
}

DataFlowGraph trim(const DataFlowGraph& g, const TrimOptions& options) {
    const int n = static_cast<int>(g.nodes.size());
    std::vector<std::set<int>> out(n), in(n);
    for (const auto& [s, d] : g.edges) {
        if (s == d)
            continue;
        out[s].insert(d);
        in[d].insert(s);
    }
    std::vector<bool> removed(n, false);
    std::set<int> root_set(g.roots.begin(), g.roots.end());

    auto splice = [&](int v, const std::vector<int>& targets) {
        for (int p : std::vector<int>(in[v].begin(), in[v].end())) {
            out[p].erase(v);
            for (int t : targets)
                if (t != p) {
                    out[p].insert(t);
                    in[t].insert(p);
                }
        }
        for (int t : out[v])
            in[t].erase(v);
        in[v].clear();
        out[v].clear();
        removed[v] = true;
    };

    bool changed = true;
    while (changed) {
        changed = false;
        for (int v = 0; v < n; ++v) {
            if (removed[v] || root_set.count(v))
                continue;
            NodeKind k = g.nodes[v].kind;
            if (k == NodeKind::Signal && out[v].size() == 1) {
                splice(v, {*out[v].begin()});
                changed = true;
            } else if (options.drop_structural && (k == NodeKind::Concat || k == NodeKind::PartSelect)) {
                std::vector<int> targets;
                for (int t : out[v])
                    if (g.nodes[t].kind != NodeKind::Constant)
                        targets.push_back(t);
                splice(v, targets);
                changed = true;
            }
        }
    }

    std::vector<bool> reach(n, false);
    std::deque<int> queue;
    for (int r : g.roots)
        if (!removed[r] && !reach[r]) {
            reach[r] = true;
            queue.push_back(r);
        }
    while (!queue.empty()) {
        int v = queue.front();
        queue.pop_front();
        for (int t : out[v])
            if (!reach[t]) {
                reach[t] = true;
                queue.push_back(t);
            }
    }

    std::vector<int> remap(n, -1);
    DataFlowGraph t;
    t.name = g.name;
    for (int v = 0; v < n; ++v) {
        if (!reach[v])
            continue;
        remap[v] = static_cast<int>(t.nodes.size());
        t.nodes.push_back({remap[v], g.nodes[v].kind, g.nodes[v].label});
    }
    for (int v = 0; v < n; ++v)
        if (reach[v])
            for (int d : out[v])
                if (reach[d])
                    t.edges.emplace_back(remap[v], remap[d]);
    normalize_edges(t.edges);
    for (int r : g.roots)
        if (reach[r])
            t.roots.push_back(remap[r]);
    std::sort(t.roots.begin(), t.roots.end());
    return t;
}

namespace {

using BoostGraph = boost::adjacency_list<boost::vecS, boost::vecS, boost::bidirectionalS,
                                         boost::property<boost::vertex_name_t, int>>;

BoostGraph to_boost(const DataFlowGraph& g, const std::vector<int>& colors) {
    BoostGraph bg(g.nodes.size());
    auto names = boost::get(boost::vertex_name, bg);
    for (const auto& node : g.nodes)
        boost::put(names, node.id, colors[static_cast<std::size_t>(node.id)]);
    for (const auto& [s, d] : g.edges)
        boost::add_edge(s, d, bg);
    return bg;
}

// Colour refinement run on both graphs at once so colours are comparable.
// Starts from (kind, root flag) and splits classes by the multisets of
// predecessor and successor colours until the partition stops changing.
// Isomorphic nodes always end with equal colours.
std::pair<std::vector<int>, std::vector<int>> refine_colors(const DataFlowGraph& a, const DataFlowGraph& b) {
    const DataFlowGraph* gs[2] = {&a, &b};
    std::vector<int> col[2];
    std::vector<std::vector<int>> succ[2], pred[2];
    for (int k = 0; k < 2; ++k) {
        const auto& g = *gs[k];
        std::set<int> roots(g.roots.begin(), g.roots.end());
        col[k].resize(g.size());
        succ[k].assign(g.size(), {});
        pred[k].assign(g.size(), {});
        for (const auto& node : g.nodes)
            col[k][static_cast<std::size_t>(node.id)] = static_cast<int>(node.kind) * 2 + (roots.count(node.id) ? 1 : 0);
        for (const auto& [s, d] : g.edges) {
            succ[k][static_cast<std::size_t>(s)].push_back(d);
            pred[k][static_cast<std::size_t>(d)].push_back(s);
        }
    }
    std::size_t classes = 0;
    for (;;) {
        using Key = std::tuple<int, std::vector<int>, std::vector<int>>;
        std::map<Key, int> ids;
        std::vector<Key> keys[2];
        for (int k = 0; k < 2; ++k)
            for (std::size_t v = 0; v < col[k].size(); ++v) {
                std::vector<int> out, in;
                for (int w : succ[k][v])
                    out.push_back(col[k][static_cast<std::size_t>(w)]);
                for (int w : pred[k][v])
                    in.push_back(col[k][static_cast<std::size_t>(w)]);
                std::sort(out.begin(), out.end());
                std::sort(in.begin(), in.end());
                keys[k].emplace_back(col[k][v], std::move(out), std::move(in));
                ids.emplace(keys[k].back(), 0);
            }
        int next = 0;
        for (auto& [key, id] : ids)
            id = next++;
        for (int k = 0; k < 2; ++k)
            for (std::size_t v = 0; v < col[k].size(); ++v)
                col[k][v] = ids.at(keys[k][v]);
        if (ids.size() == classes)
            break;
        classes = ids.size();
    }
    return {col[0], col[1]};
}

} // namespace

bool isomorphic(const DataFlowGraph& a, const DataFlowGraph& b) {
    if (a.size() != b.size() || a.edges.size() != b.edges.size() || a.roots.size() != b.roots.size())
        return false;
    if (a.size() == 0)
        return true;
    auto [ca, cb] = refine_colors(a, b);
    std::vector<int> ha = ca, hb = cb;
    std::sort(ha.begin(), ha.end());
    std::sort(hb.begin(), hb.end());
    if (ha != hb)
        return false;
    BoostGraph ga = to_boost(a, ca), gb = to_boost(b, cb);
    auto equivalent = boost::make_property_map_equivalent(boost::get(boost::vertex_name, ga),
                                                          boost::get(boost::vertex_name, gb));
    auto stop_at_first = [](auto&&, auto&&) { return false; };
    return boost::vf2_graph_iso(ga, gb, stop_at_first, boost::vertex_order_by_mult(ga),
                                boost::vertices_equivalent(equivalent));
}

} // namespace ipsim
