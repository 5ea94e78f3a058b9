#include "ipsim/verilog_writer.hpp"

#include "ipsim/parser.hpp"

#include <cctype>
#include <sstream>

namespace ipsim {

namespace {

std::string ident(const std::string& name) {
    bool simple = !name.empty() && (std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_');
    for (char c : name)
        simple = simple && (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$');
    if (simple && !is_verilog_keyword(name))
        return name;
    return "\\" + name + " ";
}

const char* unary_text(UnaryOp op) {
    switch (op) {
    case UnaryOp::Plus: return "+";
    case UnaryOp::Minus: return "-";
    case UnaryOp::BitNot: return "~";
    case UnaryOp::LogNot: return "!";
    case UnaryOp::RedAnd: return "&";
    case UnaryOp::RedOr: return "|";
    case UnaryOp::RedXor: return "^";
    case UnaryOp::RedNand: return "~&";
    case UnaryOp::RedNor: return "~|";
    case UnaryOp::RedXnor: return "~^";
    }
    return "+";
}

const char* binary_text(BinaryOp op) {
    switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Mod: return "%";
    case BinaryOp::Pow: return "**";
    case BinaryOp::Shl: return "<<";
    case BinaryOp::Shr: return ">>";
    case BinaryOp::AShl: return "<<<";
    case BinaryOp::AShr: return ">>>";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::Eq: return "==";
    case BinaryOp::Neq: return "!=";
    case BinaryOp::CaseEq: return "===";
    case BinaryOp::CaseNeq: return "!==";
    case BinaryOp::BitAnd: return "&";
    case BinaryOp::BitOr: return "|";
    case BinaryOp::BitXor: return "^";
    case BinaryOp::BitXnor: return "~^";
    case BinaryOp::LogAnd: return "&&";
    case BinaryOp::LogOr: return "||";
    case BinaryOp::Nand: return "&";
    case BinaryOp::Nor: return "|";
    }
    return "+";
}

void write_range(std::ostream& out, const std::optional<Range>& r) {
    if (r)
        out << '[' << write_expr(*r->msb) << ':' << write_expr(*r->lsb) << "] ";
}

void write_stmt(std::ostream& out, const Stmt& s, int depth) {
    std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    switch (s.kind) {
    case Stmt::Kind::Null:
        out << pad << ";\n";
        break;
    case Stmt::Kind::Assign:
        out << pad << write_expr(*s.lhs) << (s.blocking ? " = " : " <= ") << write_expr(*s.rhs) << ";\n";
        break;
    case Stmt::Kind::Block:
        out << pad << "begin\n";
        for (const auto& b : s.body)
            write_stmt(out, *b, depth + 1);
        out << pad << "end\n";
        break;
    case Stmt::Kind::If:
        out << pad << "if (" << write_expr(*s.cond) << ")\n";
        if (s.else_s && s.then_s->kind == Stmt::Kind::If) {
            // Keep the else with this if.
            out << pad << "begin\n";
            write_stmt(out, *s.then_s, depth + 1);
            out << pad << "end\n";
        } else {
            write_stmt(out, *s.then_s, depth + 1);
        }
        if (s.else_s) {
            out << pad << "else\n";
            write_stmt(out, *s.else_s, depth + 1);
        }
        break;
    case Stmt::Kind::Case: {
        const char* kw = s.case_kind == Stmt::CaseKind::Casex   ? "casex"
                         : s.case_kind == Stmt::CaseKind::Casez ? "casez"
                                                                : "case";
        out << pad << kw << " (" << write_expr(*s.cond) << ")\n";
        for (const auto& item : s.items) {
            out << pad << "  ";
            if (item.labels.empty()) {
                out << "default";
            } else {
                for (std::size_t i = 0; i < item.labels.size(); ++i)
                    out << (i ? ", " : "") << write_expr(*item.labels[i]);
            }
            out << ":\n";
            write_stmt(out, *item.body, depth + 2);
        }
        out << pad << "endcase\n";
        break;
    }
    }
}

const char* dir_text(PortDir d) {
    switch (d) {
    case PortDir::Input: return "input";
    case PortDir::Output: return "output";
    case PortDir::Inout: return "inout";
    }
    return "input";
}

} // namespace

std::string write_expr(const Expr& e) {
    const auto& o = e.operands;
    switch (e.kind) {
    case Expr::Kind::Identifier:
        return ident(e.text);
    case Expr::Kind::Number:
        return e.text;
    case Expr::Kind::Unary:
        return std::string("(") + unary_text(e.unary_op) + write_expr(*o[0]) + ")";
    case Expr::Kind::Binary: {
        std::string inner = "(" + write_expr(*o[0]) + " " + binary_text(e.binary_op) + " " + write_expr(*o[1]) + ")";
        if (e.binary_op == BinaryOp::Nand || e.binary_op == BinaryOp::Nor)
            return "(~" + inner + ")";
        return inner;
    }
    case Expr::Kind::Ternary:
        return "(" + write_expr(*o[0]) + " ? " + write_expr(*o[1]) + " : " + write_expr(*o[2]) + ")";
    case Expr::Kind::Concat: {
        std::string s = "{";
        for (std::size_t i = 0; i < o.size(); ++i)
            s += (i ? ", " : "") + write_expr(*o[i]);
        return s + "}";
    }
    case Expr::Kind::Replicate: {
        std::string s = "{" + write_expr(*o[0]) + "{";
        for (std::size_t i = 1; i < o.size(); ++i)
            s += (i > 1 ? ", " : "") + write_expr(*o[i]);
        return s + "}}";
    }
    case Expr::Kind::Select: {
        std::string base = write_expr(*o[0]);
        switch (e.select) {
        case SelectKind::Bit: return base + "[" + write_expr(*o[1]) + "]";
        case SelectKind::Range: return base + "[" + write_expr(*o[1]) + ":" + write_expr(*o[2]) + "]";
        case SelectKind::IndexedUp: return base + "[" + write_expr(*o[1]) + " +: " + write_expr(*o[2]) + "]";
        case SelectKind::IndexedDown: return base + "[" + write_expr(*o[1]) + " -: " + write_expr(*o[2]) + "]";
        }
    }
    }
    return "";
}

std::string write_module(const ModuleDecl& m) {
    std::ostringstream out;
    out << "module " << ident(m.name);
    std::vector<const ParamDecl*> header, local;
    for (const auto* p : m.items_of<ParamDecl>())
        (p->local ? local : header).push_back(p);
    if (!header.empty()) {
        out << " #(";
        for (std::size_t i = 0; i < header.size(); ++i)
            out << (i ? ", " : "") << "parameter " << ident(header[i]->name) << " = " << write_expr(*header[i]->value);
        out << ")";
    }
    out << " (";
    for (std::size_t i = 0; i < m.ports.size(); ++i) {
        const auto& p = m.ports[i];
        out << (i ? "," : "") << "\n  " << dir_text(p.dir) << ' ' << (p.is_reg ? "reg " : "")
            << (p.is_signed ? "signed " : "");
        write_range(out, p.range);
        out << ident(p.name);
    }
    out << (m.ports.empty() ? ");\n" : "\n);\n");

    for (const auto* p : local)
        out << "  localparam " << ident(p->name) << " = " << write_expr(*p->value) << ";\n";
    for (const auto& item : m.items) {
        if (const auto* n = std::get_if<NetDecl>(&item)) {
            const char* kw = n->type == NetDecl::Type::Reg       ? "reg"
                             : n->type == NetDecl::Type::Supply0 ? "supply0"
                             : n->type == NetDecl::Type::Supply1 ? "supply1"
                                                                 : "wire";
            out << "  " << kw << ' ' << (n->is_signed ? "signed " : "");
            write_range(out, n->range);
            out << ident(n->name) << ";\n";
        } else if (const auto* a = std::get_if<ContinuousAssign>(&item)) {
            out << "  assign " << write_expr(*a->lhs) << " = " << write_expr(*a->rhs) << ";\n";
        } else if (const auto* b = std::get_if<AlwaysBlock>(&item)) {
            out << "  always @(";
            if (b->star) {
                out << "*";
            } else {
                for (std::size_t i = 0; i < b->sensitivity.size(); ++i) {
                    const auto& s = b->sensitivity[i];
                    out << (i ? " or " : "")
                        << (s.edge == SensitivityItem::Edge::Pos   ? "posedge "
                            : s.edge == SensitivityItem::Edge::Neg ? "negedge "
                                                                   : "")
                        << write_expr(*s.signal);
                }
            }
            out << ")\n";
            write_stmt(out, *b->body, 2);
        } else if (const auto* g = std::get_if<GateInstance>(&item)) {
            out << "  " << g->gate << ' ' << (g->name.empty() ? "" : ident(g->name)) << '(';
            for (std::size_t i = 0; i < g->terminals.size(); ++i)
                out << (i ? ", " : "") << write_expr(*g->terminals[i]);
            out << ");\n";
        } else if (const auto* inst = std::get_if<ModuleInstance>(&item)) {
            out << "  " << ident(inst->module) << ' ';
            if (!inst->params.empty()) {
                out << "#(";
                for (std::size_t i = 0; i < inst->params.size(); ++i) {
                    const auto& p = inst->params[i];
                    out << (i ? ", " : "");
                    if (p.name.empty())
                        out << write_expr(*p.value);
                    else
                        out << '.' << ident(p.name) << '(' << write_expr(*p.value) << ')';
                }
                out << ") ";
            }
            out << ident(inst->name) << " (";
            for (std::size_t i = 0; i < inst->connections.size(); ++i) {
                const auto& c = inst->connections[i];
                out << (i ? ", " : "");
                if (c.port.empty())
                    out << (c.expr ? write_expr(*c.expr) : "");
                else
                    out << '.' << ident(c.port) << '(' << (c.expr ? write_expr(*c.expr) : "") << ')';
            }
            out << ");\n";
        }
    }
    out << "endmodule\n";
    return out.str();
}

std::string write_verilog(const Ast& ast) {
    std::string out;
    for (std::size_t i = 0; i < ast.modules.size(); ++i)
        out += (i ? "\n" : "") + write_module(ast.modules[i]);
    return out;
}

} // namespace ipsim
