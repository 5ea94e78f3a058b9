#pragma once

#include "ipsim/error.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ipsim {

enum class UnaryOp { Plus, Minus, BitNot, LogNot, RedAnd, RedOr, RedXor, RedNand, RedNor, RedXnor };

// Nand and Nor never come from source text; they appear when primitive gates are lowered.
enum class BinaryOp {
    Add, Sub, Mul, Div, Mod, Pow,
    Shl, Shr, AShl, AShr,
    Lt, Le, Gt, Ge, Eq, Neq, CaseEq, CaseNeq,
    BitAnd, BitOr, BitXor, BitXnor, Nand, Nor,
    LogAnd, LogOr,
};

enum class SelectKind { Bit, Range, IndexedUp, IndexedDown };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Immutable expression tree node. Children are shared, so rewriting passes
/// copy only the spine they change.
struct Expr {
    enum class Kind { Identifier, Number, Unary, Binary, Ternary, Concat, Replicate, Select };

    Kind kind = Kind::Identifier;
    SourceLocation loc;
    std::string text; // identifier name or number literal as written
    UnaryOp unary_op = UnaryOp::Plus;
    BinaryOp binary_op = BinaryOp::Add;
    SelectKind select = SelectKind::Bit;
    // Unary: [arg]. Binary: [lhs, rhs]. Ternary: [cond, then, else].
    // Concat: items. Replicate: [count, items...]. Select: [base, index...].
    std::vector<ExprPtr> operands;

    static ExprPtr identifier(std::string name, SourceLocation loc = {});
    static ExprPtr number(std::string literal, SourceLocation loc = {});
    static ExprPtr unary(UnaryOp op, ExprPtr arg, SourceLocation loc = {});
    static ExprPtr binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs, SourceLocation loc = {});
    static ExprPtr ternary(ExprPtr cond, ExprPtr then_e, ExprPtr else_e, SourceLocation loc = {});
    static ExprPtr concat(std::vector<ExprPtr> items, SourceLocation loc = {});
    static ExprPtr replicate(ExprPtr count, std::vector<ExprPtr> items, SourceLocation loc = {});
    static ExprPtr select_of(SelectKind kind, ExprPtr base, std::vector<ExprPtr> indices, SourceLocation loc = {});
};

/// Structural equality ignoring locations.
bool same_structure(const Expr& a, const Expr& b);

/// Integer value of a number literal without x/z digits.
std::optional<std::int64_t> literal_value(const std::string& literal);

struct Stmt;
using StmtPtr = std::shared_ptr<const Stmt>;

struct CaseItem {
    std::vector<ExprPtr> labels; // empty: default arm
    StmtPtr body;
};

struct Stmt {
    enum class Kind { Block, Assign, If, Case, Null };
    enum class CaseKind { Case, Casex, Casez };

    Kind kind = Kind::Null;
    SourceLocation loc;
    bool blocking = true;
    ExprPtr lhs, rhs;              // Assign
    ExprPtr cond;                  // If condition, Case subject
    StmtPtr then_s, else_s;        // If (else_s may be null)
    std::vector<StmtPtr> body;     // Block
    std::vector<CaseItem> items;   // Case
    CaseKind case_kind = CaseKind::Case;
};

enum class PortDir { Input, Output, Inout };

struct Range {
    ExprPtr msb, lsb;
};

struct PortDecl {
    std::string name;
    PortDir dir = PortDir::Input;
    std::optional<Range> range;
    bool is_reg = false;
    bool is_signed = false;
    SourceLocation loc;
};

struct NetDecl {
    enum class Type { Wire, Reg, Supply0, Supply1 };
    std::string name;
    Type type = Type::Wire;
    std::optional<Range> range;
    bool is_signed = false;
    SourceLocation loc;
};

struct ParamDecl {
    std::string name;
    ExprPtr value;
    bool local = false;
    SourceLocation loc;
};

struct ContinuousAssign {
    ExprPtr lhs, rhs;
    SourceLocation loc;
};

struct SensitivityItem {
    enum class Edge { Any, Pos, Neg };
    Edge edge = Edge::Any;
    ExprPtr signal;
};

struct AlwaysBlock {
    bool star = false;
    std::vector<SensitivityItem> sensitivity;
    StmtPtr body;
    SourceLocation loc;
};

/// Built-in gate primitive (and, or, xor, xnor, nand, nor, not, buf).
/// Terminals are outputs first: one output for n-input gates, all but the
/// last for not/buf.
struct GateInstance {
    std::string gate;
    std::string name;
    std::vector<ExprPtr> terminals;
    SourceLocation loc;
};

struct PortConnection {
    std::string port; // empty: positional
    ExprPtr expr;     // null: explicitly unconnected
};

struct ParamOverride {
    std::string name; // empty: positional
    ExprPtr value;
};

struct ModuleInstance {
    std::string module;
    std::string name;
    std::vector<ParamOverride> params;
    std::vector<PortConnection> connections;
    SourceLocation loc;
};

using ModuleItem = std::variant<NetDecl, ParamDecl, ContinuousAssign, AlwaysBlock, GateInstance, ModuleInstance>;

struct ModuleDecl {
    std::string name;
    SourceLocation loc;
    std::vector<PortDecl> ports; // header order
    std::vector<ModuleItem> items; // body order

    const PortDecl* find_port(const std::string& name) const;

    template <typename T>
    std::vector<const T*> items_of() const {
        std::vector<const T*> out;
        for (const auto& item : items)
            if (const auto* p = std::get_if<T>(&item))
                out.push_back(p);
        return out;
    }
};

struct Ast {
    std::vector<ModuleDecl> modules;

    const ModuleDecl* find(const std::string& name) const;
    /// The unique module never instantiated by another; the last such module
    /// when several qualify.
    std::string default_top() const;
};

/// A module with every child instance inlined. Internal signals of an
/// instance are renamed `<instance_path>.<original>`.
struct FlatModule {
    ModuleDecl module;
};

bool is_primitive_gate(const std::string& name);

} // namespace ipsim
