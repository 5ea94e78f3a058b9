#pragma once

#include "ipsim/ast.hpp"
#include "ipsim/vocabulary.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ipsim {

struct DfgNode {
    int id = 0;
    NodeKind kind = NodeKind::Unknown;
    std::optional<std::string> label; // identifier or literal; metadata only

    friend bool operator==(const DfgNode&, const DfgNode&) = default;
};

/// Rooted directed data-flow graph. Edges point from consumer to producer,
/// so paths run from output roots down to input and constant leaves. Node
/// ids are dense (nodes[i].id == i), edges are unique and sorted, and there
/// are no self-loops.
struct DataFlowGraph {
    std::string name;
    std::vector<DfgNode> nodes;
    std::vector<std::pair<int, int>> edges;
    std::vector<int> roots;

    std::size_t size() const { return nodes.size(); }
    /// Ids of Input, Inout and Constant nodes.
    std::vector<int> leaves() const;
    /// Throws FormatError when an endpoint, root or id is out of place.
    void validate() const;

    friend bool operator==(const DataFlowGraph&, const DataFlowGraph&) = default;
};

/// Expression tree for one signal's driver. nodes[root] is the signal
/// itself; terminal nodes carry `ref`, the name of the signal they read.
struct SignalTree {
    struct Node {
        NodeKind kind = NodeKind::Unknown;
        std::optional<std::string> label;
        std::optional<std::string> ref;
        SourceLocation loc;
        std::vector<int> children;
    };

    std::string signal;
    std::vector<Node> nodes;
    int root = 0;
};

/// Data-flow tree for `signal`. Conditional assignments in always blocks
/// become Branch(cond, then, else) nodes; a missing arm holds the previous
/// value, which is a terminal reading the signal itself. Blocking and
/// non-blocking assignments are treated alike.
SignalTree analyze_signal(const FlatModule& flat, const std::string& signal);

/// Merges every signal tree into one graph. Terminals of the same signal
/// share one node; internal signals appear as Signal alias nodes pointing at
/// their driver (trim contracts them). Nodes are ordered by
/// (kind, label, source location) before ids are assigned.
DataFlowGraph build_dfg(const FlatModule& flat);

struct TrimOptions {
    /// Also splice out Concat and PartSelect nodes (and their constant
    /// indices), keeping only operator structure.
    bool drop_structural = false;
};

/// Contracts Signal alias nodes, drops nodes unreachable from a root and
/// re-densifies ids. Never increases the node count; idempotent.
DataFlowGraph trim(const DataFlowGraph& g, const TrimOptions& options = {});

/// Kind-preserving directed isomorphism that also maps roots onto roots.
bool isomorphic(const DataFlowGraph& a, const DataFlowGraph& b);

} // namespace ipsim
