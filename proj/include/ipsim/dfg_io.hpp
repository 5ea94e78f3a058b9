#pragma once

#include "ipsim/dfg.hpp"

#include <string>

namespace ipsim {

/// DFG document:
///   {"name": str, "nodes": [{"id": int, "kind": str, "label": str|null}],
///    "edges": [[src, dst], ...], "roots": [int, ...]}
/// Leaves are not stored; they follow from node kinds.
std::string serialize_dfg(const DataFlowGraph& g);

/// Accepts any unique non-negative ids and renumbers them densely in listing
/// order. Throws FormatError on malformed documents or unknown kinds.
DataFlowGraph deserialize_dfg(const std::string& text);

} // namespace ipsim
