#pragma once

#include "ipsim/ast.hpp"

#include <string>

namespace ipsim {

/// Prints an AST back as Verilog in the parser's subset. Expressions are
/// fully parenthesized; comments and original layout are not kept.
std::string write_verilog(const Ast& ast);
std::string write_module(const ModuleDecl& m);
std::string write_expr(const Expr& e);

} // namespace ipsim
