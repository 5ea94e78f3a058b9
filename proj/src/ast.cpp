#include "ipsim/ast.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace ipsim {

namespace {

std::shared_ptr<Expr> make(Expr::Kind kind, SourceLocation loc) {
    auto e = std::make_shared<Expr>();
    e->kind = kind;
    e->loc = std::move(loc);
    return e;
}

} // namespace

ExprPtr Expr::identifier(std::string name, SourceLocation loc) {
    auto e = make(Kind::Identifier, std::move(loc));
    e->text = std::move(name);
    return e;
}

ExprPtr Expr::number(std::string literal, SourceLocation loc) {
    auto e = make(Kind::Number, std::move(loc));
    e->text = std::move(literal);
    return e;
}

ExprPtr Expr::unary(UnaryOp op, ExprPtr arg, SourceLocation loc) {
    auto e = make(Kind::Unary, std::move(loc));
    e->unary_op = op;
    e->operands = {std::move(arg)};
    return e;
}

ExprPtr Expr::binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs, SourceLocation loc) {
    auto e = make(Kind::Binary, std::move(loc));
    e->binary_op = op;
    e->operands = {std::move(lhs), std::move(rhs)};
    return e;
}

ExprPtr Expr::ternary(ExprPtr cond, ExprPtr then_e, ExprPtr else_e, SourceLocation loc) {
    auto e = make(Kind::Ternary, std::move(loc));
    e->operands = {std::move(cond), std::move(then_e), std::move(else_e)};
    return e;
}

ExprPtr Expr::concat(std::vector<ExprPtr> items, SourceLocation loc) {
    auto e = make(Kind::Concat, std::move(loc));
    e->operands = std::move(items);
    return e;
}

ExprPtr Expr::replicate(ExprPtr count, std::vector<ExprPtr> items, SourceLocation loc) {
    auto e = make(Kind::Replicate, std::move(loc));
    e->operands.push_back(std::move(count));
    for (auto& i : items)
        e->operands.push_back(std::move(i));
    return e;
}

ExprPtr Expr::select_of(SelectKind kind, ExprPtr base, std::vector<ExprPtr> indices, SourceLocation loc) {
    auto e = make(Kind::Select, std::move(loc));
    e->select = kind;
    e->operands.push_back(std::move(base));
    for (auto& i : indices)
        e->operands.push_back(std::move(i));
    return e;
}

bool same_structure(const Expr& a, const Expr& b) {
    if (a.kind != b.kind || a.operands.size() != b.operands.size())
        return false;
    switch (a.kind) {
    case Expr::Kind::Identifier:
    case Expr::Kind::Number:
        if (a.text != b.text)
            return false;
        break;
    case Expr::Kind::Unary:
        if (a.unary_op != b.unary_op)
            return false;
        break;
    case Expr::Kind::Binary:
        if (a.binary_op != b.binary_op)
            return false;
        break;
    case Expr::Kind::Select:
        if (a.select != b.select)
            return false;
        break;
    default:
        break;
    }
    for (std::size_t i = 0; i < a.operands.size(); ++i)
        if (!same_structure(*a.operands[i], *b.operands[i]))
            return false;
    return true;
}

std::optional<std::int64_t> literal_value(const std::string& literal) {
    std::string s;
    for (char c : literal)
        if (c != '_' && !std::isspace(static_cast<unsigned char>(c)))
            s.push_back(c);
    auto tick = s.find('\'');
    int base = 10;
    std::string digits = s;
    if (tick != std::string::npos) {
        std::size_t p = tick + 1;
        if (p < s.size() && (s[p] == 's' || s[p] == 'S'))
            ++p;
        if (p >= s.size())
            return std::nullopt;
        switch (std::tolower(static_cast<unsigned char>(s[p]))) {
        case 'b': base = 2; break;
        case 'o': base = 8; break;
        case 'd': base = 10; break;
        case 'h': base = 16; break;
        default: return std::nullopt;
        }
        digits = s.substr(p + 1);
    }
    if (digits.empty())
        return std::nullopt;
    std::int64_t value = 0;
    for (char c : digits) {
        int d;
        if (std::isdigit(static_cast<unsigned char>(c)))
            d = c - '0';
        else if (std::isxdigit(static_cast<unsigned char>(c)))
            d = 10 + std::tolower(static_cast<unsigned char>(c)) - 'a';
        else
            return std::nullopt;
        if (d >= base)
            return std::nullopt;
        value = value * base + d;
    }
    return value;
}

const PortDecl* ModuleDecl::find_port(const std::string& port) const {
    for (const auto& p : ports)
        if (p.name == port)
            return &p;
    return nullptr;
}

const ModuleDecl* Ast::find(const std::string& name) const {
    for (const auto& m : modules)
        if (m.name == name)
            return &m;
    return nullptr;
}

std::string Ast::default_top() const {
    std::set<std::string> instantiated;
    for (const auto& m : modules)
        for (const auto* inst : m.items_of<ModuleInstance>())
            instantiated.insert(inst->module);
    std::string top;
    for (const auto& m : modules)
        if (!instantiated.count(m.name))
            top = m.name;
    if (top.empty() && !modules.empty())
        top = modules.back().name;
    return top;
}

bool is_primitive_gate(const std::string& name) {
    static const std::set<std::string> gates = {"and", "or", "xor", "xnor", "nand", "nor", "not", "buf"};
    return gates.count(name) > 0;
}

} // namespace ipsim
