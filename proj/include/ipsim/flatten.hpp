#pragma once

#include "ipsim/ast.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>

namespace ipsim {

using ParamEnv = std::map<std::string, std::int64_t>;

/// Folds a constant integer expression; nullopt when it references anything
/// outside `env` or uses x/z literals.
std::optional<std::int64_t> eval_const(const Expr& e, const ParamEnv& env);

/// Rebuilds `e` with every identifier replaced by `map(identifier_node)`.
ExprPtr map_identifiers(const ExprPtr& e, const std::function<ExprPtr(const Expr&)>& map);
StmtPtr map_identifiers(const StmtPtr& s, const std::function<ExprPtr(const Expr&)>& map);

/// Inlines every module instance below `top` and lowers primitive gates to
/// continuous assigns.
///
/// Instance ports are connected by substitution: an input bound to a plain
/// identifier or literal is replaced by it inside the child, an output bound
/// to a plain identifier renames the child's driver to that identifier. Any
/// other binding goes through an alias wire `<path>.<port>`. All other child
/// signals become `<path>.<name>` where path is the dot-joined instance chain.
/// Parameters are folded to literals before widths are evaluated.
FlatModule flatten_hierarchy(const Ast& ast, const std::string& top);

} // namespace ipsim
