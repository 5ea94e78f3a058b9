#include "ipsim/flatten.hpp"

#include <algorithm>
#include <set>
#include <vector>

namespace ipsim {

std::optional<std::int64_t> eval_const(const Expr& e, const ParamEnv& env) {
    switch (e.kind) {
    case Expr::Kind::Number:
        return literal_value(e.text);
    case Expr::Kind::Identifier: {
        auto it = env.find(e.text);
        if (it == env.end())
            return std::nullopt;
        return it->second;
    }
    case Expr::Kind::Unary: {
        auto v = eval_const(*e.operands[0], env);
        if (!v)
            return std::nullopt;
        switch (e.unary_op) {
        case UnaryOp::Plus: return *v;
        case UnaryOp::Minus: return -*v;
        case UnaryOp::BitNot: return ~*v;
        case UnaryOp::LogNot: return *v == 0 ? 1 : 0;
        default: return std::nullopt;
        }
    }
    case Expr::Kind::Binary: {
        auto a = eval_const(*e.operands[0], env);
        auto b = eval_const(*e.operands[1], env);
        if (!a || !b)
            return std::nullopt;
        std::int64_t x = *a, y = *b;
        switch (e.binary_op) {
        case BinaryOp::Add: return x + y;
        case BinaryOp::Sub: return x - y;
        case BinaryOp::Mul: return x * y;
        case BinaryOp::Div: return y == 0 ? std::nullopt : std::optional<std::int64_t>(x / y);
        case BinaryOp::Mod: return y == 0 ? std::nullopt : std::optional<std::int64_t>(x % y);
        case BinaryOp::Pow: {
            if (y < 0 || y > 62)
                return std::nullopt;
            std::int64_t r = 1;
            for (std::int64_t i = 0; i < y; ++i)
                r *= x;
            return r;
        }
        case BinaryOp::Shl:
        case BinaryOp::AShl: return (y < 0 || y > 62) ? std::nullopt : std::optional<std::int64_t>(x << y);
        case BinaryOp::Shr:
        case BinaryOp::AShr: return (y < 0 || y > 62) ? std::nullopt : std::optional<std::int64_t>(x >> y);
        case BinaryOp::Lt: return x < y;
        case BinaryOp::Le: return x <= y;
        case BinaryOp::Gt: return x > y;
        case BinaryOp::Ge: return x >= y;
        case BinaryOp::Eq:
        case BinaryOp::CaseEq: return x == y;
        case BinaryOp::Neq:
        case BinaryOp::CaseNeq: return x != y;
        case BinaryOp::BitAnd: return x & y;
        case BinaryOp::BitOr: return x | y;
        case BinaryOp::BitXor: return x ^ y;
        case BinaryOp::BitXnor: return ~(x ^ y);
        case BinaryOp::LogAnd: return (x != 0 && y != 0) ? 1 : 0;
        case BinaryOp::LogOr: return (x != 0 || y != 0) ? 1 : 0;
        default: return std::nullopt;
        }
    }
    case Expr::Kind::Ternary: {
        auto c = eval_const(*e.operands[0], env);
        if (!c)
            return std::nullopt;
        return eval_const(*e.operands[*c ? 1 : 2], env);
    }
    default:
        return std::nullopt;
    }
}

ExprPtr map_identifiers(const ExprPtr& e, const std::function<ExprPtr(const Expr&)>& map) {
    if (!e)
        return e;
    if (e->kind == Expr::Kind::Identifier)
        return map(*e);
    if (e->operands.empty())
        return e;
    auto copy = std::make_shared<Expr>(*e);
    for (auto& o : copy->operands)
        o = map_identifiers(o, map);
    return copy;
}

StmtPtr map_identifiers(const StmtPtr& s, const std::function<ExprPtr(const Expr&)>& map) {
    if (!s)
        return s;
    auto copy = std::make_shared<Stmt>(*s);
    copy->lhs = map_identifiers(s->lhs, map);
    copy->rhs = map_identifiers(s->rhs, map);
    copy->cond = map_identifiers(s->cond, map);
    copy->then_s = map_identifiers(s->then_s, map);
    copy->else_s = map_identifiers(s->else_s, map);
    for (auto& b : copy->body)
        b = map_identifiers(b, map);
    for (auto& it : copy->items) {
        for (auto& l : it.labels)
            l = map_identifiers(l, map);
        it.body = map_identifiers(it.body, map);
    }
    return copy;
}

namespace {

ExprPtr fold_gate(const std::string& gate, const std::vector<ExprPtr>& inputs, const SourceLocation& loc) {
    BinaryOp chain = BinaryOp::BitAnd, last = BinaryOp::BitAnd;
    if (gate == "and") {
        chain = last = BinaryOp::BitAnd;
    } else if (gate == "or") {
        chain = last = BinaryOp::BitOr;
    } else if (gate == "xor") {
        chain = last = BinaryOp::BitXor;
    } else if (gate == "nand") {
        chain = BinaryOp::BitAnd;
        last = BinaryOp::Nand;
    } else if (gate == "nor") {
        chain = BinaryOp::BitOr;
        last = BinaryOp::Nor;
    } else if (gate == "xnor") {
        chain = BinaryOp::BitXor;
        last = BinaryOp::BitXnor;
    }
    // nand(a,b,c) = ~((a & b) & c): inner links use the plain operator, the
    // outermost carries the inversion.
    ExprPtr acc = inputs[0];
    for (std::size_t i = 1; i < inputs.size(); ++i)
        acc = Expr::binary(i + 1 == inputs.size() ? last : chain, acc, inputs[i], loc);
    return acc;
}

class Flattener {
public:
    explicit Flattener(const Ast& ast) : ast_(ast) {}

    FlatModule run(const std::string& top) {
        const ModuleDecl* m = ast_.find(top);
        if (!m)
            throw UnknownModule(top);
        check_acyclic(top);
        out_.name = m->name;
        out_.loc = m->loc;

        ParamEnv env = evaluate_params(*m, {}, top);
        auto map = [&](const Expr& id) -> ExprPtr {
            auto it = env.find(id.text);
            if (it != env.end())
                return Expr::number(std::to_string(it->second), id.loc);
            return Expr::identifier(id.text, id.loc);
        };
        for (const auto& p : m->ports) {
            PortDecl q = p;
            q.range = resolve_range(p.range, env, p.name);
            out_.ports.push_back(std::move(q));
        }
        inline_body(*m, "", env, map);
        FlatModule flat;
        flat.module = std::move(out_);
        return flat;
    }

private:
    const Ast& ast_;
    ModuleDecl out_;

    void check_acyclic(const std::string& top) {
        std::vector<std::string> stack;
        std::set<std::string> done;
        std::function<void(const std::string&)> visit = [&](const std::string& name) {
            if (std::find(stack.begin(), stack.end(), name) != stack.end()) {
                std::vector<std::string> cycle(std::find(stack.begin(), stack.end(), name), stack.end());
                cycle.push_back(name);
                throw RecursiveInstantiation(cycle);
            }
            if (done.count(name))
                return;
            const ModuleDecl* m = ast_.find(name);
            if (!m)
                throw UnknownModule(name);
            stack.push_back(name);
            for (const auto* inst : m->items_of<ModuleInstance>())
                visit(inst->module);
            stack.pop_back();
            done.insert(name);
        };
        visit(top);
    }

    ParamEnv evaluate_params(const ModuleDecl& m, const std::map<std::string, std::int64_t>& overrides,
                             const std::string& where) {
        ParamEnv env;
        for (const auto* p : m.items_of<ParamDecl>()) {
            auto ov = overrides.find(p->name);
            if (!p->local && ov != overrides.end()) {
                env[p->name] = ov->second;
                continue;
            }
            auto v = eval_const(*p->value, env);
            if (!v)
                throw ElaborationError(p->loc.str() + ": cannot resolve parameter '" + p->name + "' in " + where);
            env[p->name] = *v;
        }
        return env;
    }

    std::optional<Range> resolve_range(const std::optional<Range>& r, const ParamEnv& env, const std::string& name) {
        if (!r)
            return r;
        auto msb = eval_const(*r->msb, env);
        auto lsb = eval_const(*r->lsb, env);
        if (!msb || !lsb || *msb < 0 || *lsb < 0)
            throw ElaborationError(r->msb->loc.str() + ": cannot resolve range of '" + name + "'");
        return Range{Expr::number(std::to_string(*msb), r->msb->loc), Expr::number(std::to_string(*lsb), r->lsb->loc)};
    }

    using IdentMap = std::function<ExprPtr(const Expr&)>;

    void inline_body(const ModuleDecl& m, const std::string& prefix, const ParamEnv& env, const IdentMap& map) {
        for (const auto& item : m.items) {
            if (const auto* n = std::get_if<NetDecl>(&item)) {
                NetDecl d = *n;
                d.name = prefix + n->name;
                d.range = resolve_range(n->range, env, n->name);
                out_.items.emplace_back(std::move(d));
                if (n->type == NetDecl::Type::Supply0 || n->type == NetDecl::Type::Supply1) {
                    ContinuousAssign a;
                    a.loc = n->loc;
                    a.lhs = map(*Expr::identifier(n->name, n->loc));
                    a.rhs = Expr::number(n->type == NetDecl::Type::Supply0 ? "1'b0" : "1'b1", n->loc);
                    out_.items.emplace_back(std::move(a));
                }
            } else if (const auto* a = std::get_if<ContinuousAssign>(&item)) {
                ContinuousAssign c;
                c.loc = a->loc;
                c.lhs = map_identifiers(a->lhs, map);
                c.rhs = map_identifiers(a->rhs, map);
                out_.items.emplace_back(std::move(c));
            } else if (const auto* al = std::get_if<AlwaysBlock>(&item)) {
                AlwaysBlock b = *al;
                for (auto& s : b.sensitivity)
                    s.signal = map_identifiers(s.signal, map);
                b.body = map_identifiers(al->body, map);
                out_.items.emplace_back(std::move(b));
            } else if (const auto* g = std::get_if<GateInstance>(&item)) {
                lower_gate(*g, map);
            } else if (const auto* inst = std::get_if<ModuleInstance>(&item)) {
                inline_instance(*inst, prefix, env, map);
            }
        }
    }

    void lower_gate(const GateInstance& g, const IdentMap& map) {
        std::vector<ExprPtr> terms;
        for (const auto& t : g.terminals)
            terms.push_back(map_identifiers(t, map));
        if (g.gate == "not" || g.gate == "buf") {
            ExprPtr in = terms.back();
            ExprPtr rhs = g.gate == "not" ? Expr::unary(UnaryOp::BitNot, in, g.loc) : in;
            for (std::size_t i = 0; i + 1 < terms.size(); ++i)
                out_.items.emplace_back(ContinuousAssign{terms[i], rhs, g.loc});
            return;
        }
        std::vector<ExprPtr> inputs(terms.begin() + 1, terms.end());
        out_.items.emplace_back(ContinuousAssign{terms[0], fold_gate(g.gate, inputs, g.loc), g.loc});
    }

    void inline_instance(const ModuleInstance& inst, const std::string& prefix, const ParamEnv& env,
                         const IdentMap& parent_map) {
        const ModuleDecl* child = ast_.find(inst.module);
        if (!child)
            throw UnknownModule(inst.module);
        const std::string path = prefix + inst.name;
        const std::string child_prefix = path + ".";

        // Parameter overrides are evaluated in the parent's scope.
        std::map<std::string, std::int64_t> overrides;
        std::vector<const ParamDecl*> settable;
        for (const auto* p : child->items_of<ParamDecl>())
            if (!p->local)
                settable.push_back(p);
        std::size_t positional = 0;
        for (const auto& o : inst.params) {
            auto v = eval_const(*o.value, env);
            if (!v)
                throw ElaborationError(inst.loc.str() + ": cannot resolve parameter override on '" + path + "'");
            if (o.name.empty()) {
                if (positional >= settable.size())
                    throw ElaborationError(inst.loc.str() + ": too many parameter overrides on '" + path + "'");
                overrides[settable[positional++]->name] = *v;
            } else {
                bool found = std::any_of(settable.begin(), settable.end(),
                                         [&](const ParamDecl* p) { return p->name == o.name; });
                if (!found)
                    throw ElaborationError(inst.loc.str() + ": module '" + child->name + "' has no parameter '" +
                                           o.name + "'");
                overrides[o.name] = *v;
            }
        }
        ParamEnv child_env = evaluate_params(*child, overrides, path);

        // Bind ports.
        std::vector<ExprPtr> bound(child->ports.size());
        std::vector<bool> present(child->ports.size(), false);
        bool named = !inst.connections.empty() && !inst.connections.front().port.empty();
        if (named) {
            for (const auto& c : inst.connections) {
                if (c.port.empty())
                    throw ElaborationError(inst.loc.str() + ": mixed named and positional connections on '" + path +
                                           "'");
                auto it = std::find_if(child->ports.begin(), child->ports.end(),
                                       [&](const PortDecl& p) { return p.name == c.port; });
                if (it == child->ports.end())
                    throw ElaborationError(inst.loc.str() + ": module '" + child->name + "' has no port '" + c.port +
                                           "'");
                std::size_t idx = static_cast<std::size_t>(it - child->ports.begin());
                if (present[idx])
                    throw ElaborationError(inst.loc.str() + ": port '" + c.port + "' connected twice on '" + path +
                                           "'");
                present[idx] = true;
                bound[idx] = map_identifiers(c.expr, parent_map);
            }
        } else {
            if (inst.connections.size() != child->ports.size())
                throw PortArityMismatch(path, child->ports.size(), inst.connections.size());
            for (std::size_t i = 0; i < inst.connections.size(); ++i) {
                if (!inst.connections[i].port.empty())
                    throw ElaborationError(inst.loc.str() + ": mixed named and positional connections on '" + path +
                                           "'");
                present[i] = true;
                bound[i] = map_identifiers(inst.connections[i].expr, parent_map);
            }
        }

        std::map<std::string, ExprPtr> substitute;
        for (std::size_t i = 0; i < child->ports.size(); ++i) {
            const PortDecl& p = child->ports[i];
            const ExprPtr& e = bound[i];
            bool direct = e && (e->kind == Expr::Kind::Identifier ||
                                (p.dir == PortDir::Input && e->kind == Expr::Kind::Number));
            if (direct) {
                substitute[p.name] = e;
                continue;
            }
            NetDecl alias;
            alias.name = child_prefix + p.name;
            alias.range = resolve_range(p.range, child_env, p.name);
            alias.type = p.is_reg ? NetDecl::Type::Reg : NetDecl::Type::Wire;
            alias.loc = p.loc;
            out_.items.emplace_back(std::move(alias));
            if (!e)
                continue;
            ExprPtr alias_ref = Expr::identifier(child_prefix + p.name, p.loc);
            if (p.dir == PortDir::Input)
                out_.items.emplace_back(ContinuousAssign{alias_ref, e, inst.loc});
            else
                out_.items.emplace_back(ContinuousAssign{e, alias_ref, inst.loc});
        }

        IdentMap child_map = [&, child_prefix](const Expr& id) -> ExprPtr {
            auto pv = child_env.find(id.text);
            if (pv != child_env.end())
                return Expr::number(std::to_string(pv->second), id.loc);
            auto s = substitute.find(id.text);
            if (s != substitute.end())
                return s->second;
            return Expr::identifier(child_prefix + id.text, id.loc);
        };
        inline_body(*child, child_prefix, child_env, child_map);
    }
};

} // namespace

FlatModule flatten_hierarchy(const Ast& ast, const std::string& top) {
    return Flattener(ast).run(top.empty() ? ast.default_top() : top);
}

} // namespace ipsim
