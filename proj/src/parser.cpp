#include "ipsim/parser.hpp"

#include <cctype>
#include <cstring>
#include <functional>
#include <map>
#include <set>

namespace ipsim {

namespace {

struct Token {
    enum class Kind { Ident, Number, String, Symbol, System, End };
    Kind kind = Kind::End;
    std::string text;
    SourceLocation loc;
};

const std::set<std::string>& keywords() {
    static const std::set<std::string> k = {
        "module", "endmodule", "input", "output", "inout", "wire", "reg", "tri", "supply0", "supply1",
        "signed", "parameter", "localparam", "assign", "always", "initial", "begin", "end", "if", "else",
        "case", "casex", "casez", "endcase", "default", "posedge", "negedge", "or", "and", "xor", "xnor",
        "nand", "nor", "not", "buf", "integer", "real", "time", "genvar", "generate", "endgenerate",
        "function", "endfunction", "task", "endtask", "for", "while", "repeat", "forever", "fork", "join",
        "defparam", "specify", "endspecify", "primitive", "table", "event", "wait", "disable", "force",
        "release", "deassign", "realtime", "wand", "wor", "tri0", "tri1", "triand", "trior",
    };
    return k;
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$'; }

class Lexer {
public:
    explicit Lexer(const PreprocessedFile& file) : file_(file), s_(file.text) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (true) {
            skip_space();
            Token t;
            t.loc = here();
            if (pos_ >= s_.size()) {
                t.kind = Token::Kind::End;
                out.push_back(t);
                return out;
            }
            char c = s_[pos_];
            if (ident_start(c)) {
                t.kind = Token::Kind::Ident;
                t.text = take_while(ident_char);
            } else if (c == '\\') {
                ++pos_;
                ++col_;
                t.kind = Token::Kind::Ident;
                t.text = take_while([](char ch) { return !std::isspace(static_cast<unsigned char>(ch)); });
                if (t.text.empty())
                    throw SyntaxError(t.loc, {"escaped identifier"}, "'\\'");
            } else if (c == '$') {
                ++pos_;
                ++col_;
                t.kind = Token::Kind::System;
                t.text = "$" + take_while(ident_char);
            } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '\'') {
                t.kind = Token::Kind::Number;
                t.text = lex_number();
            } else if (c == '"') {
                t.kind = Token::Kind::String;
                std::size_t j = pos_ + 1;
                while (j < s_.size() && s_[j] != '"' && s_[j] != '\n')
                    j += s_[j] == '\\' ? 2 : 1;
                if (j >= s_.size() || s_[j] != '"')
                    throw SyntaxError(t.loc, {"closing '\"'"}, "end of line");
                t.text = s_.substr(pos_, j + 1 - pos_);
                advance(j + 1 - pos_);
            } else {
                t.kind = Token::Kind::Symbol;
                t.text = lex_symbol(t.loc);
            }
            out.push_back(std::move(t));
        }
    }

private:
    const PreprocessedFile& file_;
    const std::string& s_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;

    SourceLocation here() const {
        SourceLocation loc{file_.path, line_, col_};
        if (line_ >= 1 && static_cast<std::size_t>(line_) <= file_.origins.size()) {
            loc.file = file_.origins[line_ - 1].file;
            loc.line = file_.origins[line_ - 1].line;
        }
        return loc;
    }

    void advance(std::size_t n) {
        for (std::size_t i = 0; i < n && pos_ < s_.size(); ++i) {
            if (s_[pos_] == '\n') {
                ++line_;
                col_ = 1;
            } else {
                ++col_;
            }
            ++pos_;
        }
    }

    void skip_space() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
            advance(1);
    }

    template <typename Pred>
    std::string take_while(Pred pred) {
        std::size_t start = pos_;
        while (pos_ < s_.size() && pred(s_[pos_]))
            advance(1);
        return s_.substr(start, pos_ - start);
    }

    std::string lex_number() {
        std::string text;
        auto digits = [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)) || ch == '_'; };
        if (s_[pos_] != '\'')
            text = take_while(digits);
        // Real literal: keep the fraction so the parser can reject it.
        if (pos_ < s_.size() && s_[pos_] == '.' && pos_ + 1 < s_.size() &&
            std::isdigit(static_cast<unsigned char>(s_[pos_ + 1]))) {
            advance(1);
            text += "." + take_while(digits);
            return text;
        }
        std::size_t save_pos = pos_;
        int save_line = line_, save_col = col_;
        skip_space();
        if (pos_ < s_.size() && s_[pos_] == '\'') {
            std::size_t p = pos_ + 1;
            if (p < s_.size() && (s_[p] == 's' || s_[p] == 'S'))
                ++p;
            if (p < s_.size() && std::strchr("bBoOdDhH", s_[p]) != nullptr) {
                std::string base = s_.substr(pos_, p + 1 - pos_);
                advance(p + 1 - pos_);
                skip_space();
                std::string val = take_while([](char ch) {
                    return std::isxdigit(static_cast<unsigned char>(ch)) || ch == '_' || ch == 'x' || ch == 'X' ||
                           ch == 'z' || ch == 'Z' || ch == '?';
                });
                return text + base + val;
            }
        }
        pos_ = save_pos;
        line_ = save_line;
        col_ = save_col;
        if (text.empty())
            throw SyntaxError(here(), {"number"}, "'''");
        return text;
    }

    std::string lex_symbol(const SourceLocation& loc) {
        static const char* multi[] = {"<<<", ">>>", "===", "!==", "==", "!=", "<=", ">=", "&&", "||", "<<", ">>",
                                      "~&", "~|", "~^", "^~", "**", "+:", "-:"};
        for (const char* m : multi) {
            std::size_t n = std::strlen(m);
            if (s_.compare(pos_, n, m) == 0) {
                advance(n);
                return m;
            }
        }
        char c = s_[pos_];
        if (std::strchr("()[]{},;:.#@=+-*/%&|^~!<>?", c) == nullptr)
            throw SyntaxError(loc, {"token"}, std::string("'") + c + "'");
        advance(1);
        return std::string(1, c);
    }
};

struct BinaryInfo {
    int prec;
    BinaryOp op;
};

const std::map<std::string, BinaryInfo>& binary_ops() {
    static const std::map<std::string, BinaryInfo> ops = {
        {"**", {12, BinaryOp::Pow}},     {"*", {11, BinaryOp::Mul}},      {"/", {11, BinaryOp::Div}},
        {"%", {11, BinaryOp::Mod}},      {"+", {10, BinaryOp::Add}},      {"-", {10, BinaryOp::Sub}},
        {"<<", {9, BinaryOp::Shl}},      {">>", {9, BinaryOp::Shr}},      {"<<<", {9, BinaryOp::AShl}},
        {">>>", {9, BinaryOp::AShr}},    {"<", {8, BinaryOp::Lt}},        {"<=", {8, BinaryOp::Le}},
        {">", {8, BinaryOp::Gt}},        {">=", {8, BinaryOp::Ge}},       {"==", {7, BinaryOp::Eq}},
        {"!=", {7, BinaryOp::Neq}},      {"===", {7, BinaryOp::CaseEq}},  {"!==", {7, BinaryOp::CaseNeq}},
        {"&", {6, BinaryOp::BitAnd}},    {"^", {5, BinaryOp::BitXor}},    {"~^", {5, BinaryOp::BitXnor}},
        {"^~", {5, BinaryOp::BitXnor}},  {"|", {4, BinaryOp::BitOr}},     {"&&", {3, BinaryOp::LogAnd}},
        {"||", {2, BinaryOp::LogOr}},
    };
    return ops;
}

const std::map<std::string, UnaryOp>& unary_ops() {
    static const std::map<std::string, UnaryOp> ops = {
        {"+", UnaryOp::Plus},     {"-", UnaryOp::Minus},   {"~", UnaryOp::BitNot},  {"!", UnaryOp::LogNot},
        {"&", UnaryOp::RedAnd},   {"|", UnaryOp::RedOr},   {"^", UnaryOp::RedXor},  {"~&", UnaryOp::RedNand},
        {"~|", UnaryOp::RedNor},  {"~^", UnaryOp::RedXnor}, {"^~", UnaryOp::RedXnor},
    };
    return ops;
}

std::string describe(const Token& t) {
    if (t.kind == Token::Kind::End)
        return "end of input";
    return "'" + t.text + "'";
}

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    void parse_into(Ast& ast) {
        while (!at_end()) {
            if (is_kw("module")) {
                ast.modules.push_back(parse_module());
            } else if (is_kw("primitive")) {
                unsupported("user-defined primitive");
            } else {
                fail({"'module'"});
            }
        }
    }

private:
    std::vector<Token> toks_;
    std::size_t i_ = 0;

    const Token& peek(std::size_t k = 0) const { return toks_[std::min(i_ + k, toks_.size() - 1)]; }
    bool at_end() const { return peek().kind == Token::Kind::End; }
    const Token& next() {
        const Token& t = toks_[i_];
        if (i_ + 1 < toks_.size())
            ++i_;
        return t;
    }
    bool is_sym(const char* s, std::size_t k = 0) const {
        return peek(k).kind == Token::Kind::Symbol && peek(k).text == s;
    }
    bool is_kw(const char* s) const { return peek().kind == Token::Kind::Ident && peek().text == s; }
    bool accept_sym(const char* s) {
        if (is_sym(s)) {
            next();
            return true;
        }
        return false;
    }
    bool accept_kw(const char* s) {
        if (is_kw(s)) {
            next();
            return true;
        }
        return false;
    }
    [[noreturn]] void fail(std::vector<std::string> expected) const {
        throw SyntaxError(peek().loc, std::move(expected), describe(peek()));
    }
    [[noreturn]] void unsupported(const std::string& what) const { throw UnsupportedConstruct(peek().loc, what); }
    void expect_sym(const char* s) {
        if (!accept_sym(s))
            fail({std::string("'") + s + "'"});
    }
    void expect_kw(const char* s) {
        if (!accept_kw(s))
            fail({std::string("'") + s + "'"});
    }
    std::string expect_ident() {
        if (peek().kind != Token::Kind::Ident || keywords().count(peek().text))
            fail({"identifier"});
        return next().text;
    }

    // ---- module structure -------------------------------------------------

    ModuleDecl parse_module() {
        ModuleDecl m;
        m.loc = peek().loc;
        expect_kw("module");
        m.name = expect_ident();
        if (accept_sym("#")) {
            expect_sym("(");
            if (!is_sym(")")) {
                do {
                    bool local = false;
                    if (accept_kw("parameter"))
                        local = false;
                    else if (accept_kw("localparam"))
                        local = true;
                    skip_param_type();
                    parse_param_assignment(m, local);
                } while (accept_sym(","));
            }
            expect_sym(")");
        }
        std::set<std::string> header_names;
        if (accept_sym("(")) {
            if (!is_sym(")")) {
                if (is_kw("input") || is_kw("output") || is_kw("inout")) {
                    parse_ansi_ports(m);
                } else {
                    do {
                        if (is_sym("."))
                            unsupported("explicit port expression");
                        PortDecl p;
                        p.loc = peek().loc;
                        p.name = expect_ident();
                        header_names.insert(p.name);
                        m.ports.push_back(std::move(p));
                    } while (accept_sym(","));
                }
            }
            expect_sym(")");
        }
        expect_sym(";");

        std::set<std::string> directed;
        for (const auto& p : m.ports)
            if (!header_names.count(p.name))
                directed.insert(p.name);
        while (!accept_kw("endmodule")) {
            if (at_end())
                fail({"'endmodule'"});
            parse_item(m, header_names, directed);
        }
        for (const auto& name : header_names)
            if (!directed.count(name))
                throw SyntaxError(m.loc, {"direction declaration for port '" + name + "'"}, "none");
        resolve_identifiers(m);
        return m;
    }

    void skip_param_type() {
        if (is_kw("integer") || is_kw("real") || is_kw("realtime") || is_kw("time")) {
            if (!is_kw("integer"))
                unsupported("non-integer parameter type");
            next();
        }
        accept_kw("signed");
        if (is_sym("["))
            parse_range();
    }

    void parse_param_assignment(ModuleDecl& m, bool local) {
        ParamDecl p;
        p.loc = peek().loc;
        p.local = local;
        p.name = expect_ident();
        expect_sym("=");
        p.value = parse_expr();
        m.items.emplace_back(std::move(p));
    }

    Range parse_range() {
        expect_sym("[");
        Range r;
        r.msb = parse_expr();
        expect_sym(":");
        r.lsb = parse_expr();
        expect_sym("]");
        return r;
    }

    void parse_ansi_ports(ModuleDecl& m) {
        PortDir dir = PortDir::Input;
        bool is_reg = false, is_signed = false;
        std::optional<Range> range;
        do {
            if (is_kw("input") || is_kw("output") || is_kw("inout")) {
                std::string d = next().text;
                dir = d == "input" ? PortDir::Input : d == "output" ? PortDir::Output : PortDir::Inout;
                is_reg = false;
                if (accept_kw("reg"))
                    is_reg = true;
                else
                    accept_kw("wire");
                if (is_kw("integer") || is_kw("real"))
                    unsupported("non-net port type");
                is_signed = accept_kw("signed");
                range.reset();
                if (is_sym("["))
                    range = parse_range();
            }
            PortDecl p;
            p.loc = peek().loc;
            p.name = expect_ident();
            p.dir = dir;
            p.is_reg = is_reg;
            p.is_signed = is_signed;
            p.range = range;
            if (is_sym("["))
                unsupported("unpacked port dimension");
            if (m.find_port(p.name))
                throw SyntaxError(p.loc, {"unique port name"}, "'" + p.name + "'");
            m.ports.push_back(std::move(p));
        } while (accept_sym(","));
    }

    PortDecl* port_named(ModuleDecl& m, const std::string& name) {
        for (auto& p : m.ports)
            if (p.name == name)
                return &p;
        return nullptr;
    }

    void parse_item(ModuleDecl& m, const std::set<std::string>& header, std::set<std::string>& directed) {
        const Token& t = peek();
        if (t.kind != Token::Kind::Ident) {
            if (t.kind == Token::Kind::Symbol && t.text == ";") {
                next();
                return;
            }
            fail({"module item"});
        }
        const std::string& w = t.text;
        if (w == "input" || w == "output" || w == "inout") {
            parse_body_port_decl(m, header, directed);
        } else if (w == "wire" || w == "reg" || w == "tri" || w == "supply0" || w == "supply1") {
            parse_net_decl(m);
        } else if (w == "wand" || w == "wor" || w == "tri0" || w == "tri1" || w == "triand" || w == "trior") {
            unsupported("net type '" + w + "'");
        } else if (w == "parameter" || w == "localparam") {
            bool local = next().text == "localparam";
            skip_param_type();
            do {
                parse_param_assignment(m, local);
            } while (accept_sym(","));
            expect_sym(";");
        } else if (w == "assign") {
            next();
            if (is_sym("#"))
                unsupported("delay control");
            do {
                ContinuousAssign a;
                a.loc = peek().loc;
                a.lhs = parse_lvalue();
                expect_sym("=");
                a.rhs = parse_expr();
                m.items.emplace_back(std::move(a));
            } while (accept_sym(","));
            expect_sym(";");
        } else if (w == "always") {
            m.items.emplace_back(parse_always());
        } else if (is_primitive_gate(w)) {
            parse_gates(m);
        } else if (w == "initial") {
            unsupported("initial block");
        } else if (w == "function") {
            unsupported("function");
        } else if (w == "task") {
            unsupported("task");
        } else if (w == "generate" || w == "genvar") {
            unsupported("generate block");
        } else if (w == "integer" || w == "real" || w == "time" || w == "realtime" || w == "event") {
            unsupported("variable type '" + w + "'");
        } else if (w == "defparam") {
            unsupported("defparam");
        } else if (w == "specify") {
            unsupported("specify block");
        } else if (keywords().count(w)) {
            fail({"module item"});
        } else {
            parse_instances(m);
        }
    }

    void parse_body_port_decl(ModuleDecl& m, const std::set<std::string>& header, std::set<std::string>& directed) {
        std::string d = next().text;
        PortDir dir = d == "input" ? PortDir::Input : d == "output" ? PortDir::Output : PortDir::Inout;
        bool is_reg = accept_kw("reg");
        if (!is_reg)
            accept_kw("wire");
        bool is_signed = accept_kw("signed");
        std::optional<Range> range;
        if (is_sym("["))
            range = parse_range();
        do {
            SourceLocation loc = peek().loc;
            std::string name = expect_ident();
            if (!header.count(name))
                throw SyntaxError(loc, {"port listed in module header"}, "'" + name + "'");
            if (directed.count(name))
                throw SyntaxError(loc, {"single direction declaration"}, "'" + name + "'");
            directed.insert(name);
            PortDecl* p = port_named(m, name);
            p->dir = dir;
            p->is_reg = p->is_reg || is_reg;
            p->is_signed = is_signed;
            p->range = range;
            p->loc = loc;
        } while (accept_sym(","));
        expect_sym(";");
    }

    void parse_net_decl(ModuleDecl& m) {
        std::string kind = next().text;
        NetDecl::Type type = kind == "reg"       ? NetDecl::Type::Reg
                             : kind == "supply0" ? NetDecl::Type::Supply0
                             : kind == "supply1" ? NetDecl::Type::Supply1
                                                 : NetDecl::Type::Wire;
        bool is_signed = accept_kw("signed");
        std::optional<Range> range;
        if (is_sym("["))
            range = parse_range();
        do {
            SourceLocation loc = peek().loc;
            std::string name = expect_ident();
            if (is_sym("["))
                unsupported("memory array");
            if (PortDecl* p = port_named(m, name)) {
                // `output y; reg y;` style redeclaration of a port.
                if (type == NetDecl::Type::Reg)
                    p->is_reg = true;
                if (!p->range && range)
                    p->range = range;
            } else {
                NetDecl n;
                n.name = name;
                n.type = type;
                n.range = range;
                n.is_signed = is_signed;
                n.loc = loc;
                m.items.emplace_back(std::move(n));
            }
            if (accept_sym("=")) {
                if (type == NetDecl::Type::Reg)
                    unsupported("variable initializer");
                ContinuousAssign a;
                a.loc = loc;
                a.lhs = Expr::identifier(name, loc);
                a.rhs = parse_expr();
                m.items.emplace_back(std::move(a));
            }
        } while (accept_sym(","));
        expect_sym(";");
    }

    void parse_gates(ModuleDecl& m) {
        std::string gate = next().text;
        if (is_sym("("))
            if (peek(1).kind == Token::Kind::Ident &&
                (peek(1).text.rfind("strong", 0) == 0 || peek(1).text.rfind("weak", 0) == 0 ||
                 peek(1).text.rfind("pull", 0) == 0 || peek(1).text.rfind("highz", 0) == 0))
                unsupported("drive strength");
        if (is_sym("#"))
            unsupported("delay control");
        do {
            GateInstance g;
            g.loc = peek().loc;
            g.gate = gate;
            if (peek().kind == Token::Kind::Ident)
                g.name = expect_ident();
            if (is_sym("["))
                unsupported("instance array");
            expect_sym("(");
            do {
                g.terminals.push_back(parse_expr());
            } while (accept_sym(","));
            expect_sym(")");
            std::size_t min_terms = (gate == "not" || gate == "buf") ? 2 : 3;
            if (g.terminals.size() < min_terms)
                throw SyntaxError(g.loc, {std::to_string(min_terms) + " or more gate terminals"},
                                  std::to_string(g.terminals.size()));
            m.items.emplace_back(std::move(g));
        } while (accept_sym(","));
        expect_sym(";");
    }

    void parse_instances(ModuleDecl& m) {
        SourceLocation loc = peek().loc;
        std::string module = expect_ident();
        std::vector<ParamOverride> params;
        if (accept_sym("#")) {
            if (accept_sym("(")) {
                if (!is_sym(")")) {
                    do {
                        ParamOverride o;
                        if (accept_sym(".")) {
                            o.name = expect_ident();
                            expect_sym("(");
                            o.value = parse_expr();
                            expect_sym(")");
                        } else {
                            o.value = parse_expr();
                        }
                        params.push_back(std::move(o));
                    } while (accept_sym(","));
                }
                expect_sym(")");
            } else {
                params.push_back({"", parse_primary()});
            }
        }
        if (peek().kind != Token::Kind::Ident)
            fail({"instance name"});
        do {
            ModuleInstance inst;
            inst.loc = peek().loc;
            inst.module = module;
            inst.params = params;
            inst.name = expect_ident();
            if (is_sym("["))
                unsupported("instance array");
            expect_sym("(");
            if (!is_sym(")")) {
                do {
                    PortConnection c;
                    if (accept_sym(".")) {
                        if (is_sym("*"))
                            unsupported("wildcard port connection");
                        c.port = expect_ident();
                        expect_sym("(");
                        if (!is_sym(")"))
                            c.expr = parse_expr();
                        expect_sym(")");
                    } else if (is_sym(",") || is_sym(")")) {
                        c.expr = nullptr;
                    } else {
                        c.expr = parse_expr();
                    }
                    inst.connections.push_back(std::move(c));
                } while (accept_sym(","));
            }
            expect_sym(")");
            m.items.emplace_back(std::move(inst));
        } while (accept_sym(","));
        expect_sym(";");
        (void)loc;
    }

    AlwaysBlock parse_always() {
        AlwaysBlock a;
        a.loc = peek().loc;
        expect_kw("always");
        if (!is_sym("@"))
            unsupported("always block without event control");
        next();
        if (accept_sym("*")) {
            a.star = true;
        } else if (accept_sym("(")) {
            if (accept_sym("*")) {
                a.star = true;
            } else {
                do {
                    SensitivityItem s;
                    if (accept_kw("posedge"))
                        s.edge = SensitivityItem::Edge::Pos;
                    else if (accept_kw("negedge"))
                        s.edge = SensitivityItem::Edge::Neg;
                    s.signal = parse_expr();
                    a.sensitivity.push_back(std::move(s));
                } while (accept_kw("or") || accept_sym(","));
            }
            expect_sym(")");
        } else {
            SensitivityItem s;
            s.signal = Expr::identifier(expect_ident(), peek().loc);
            a.sensitivity.push_back(std::move(s));
        }
        a.body = parse_stmt();
        return a;
    }

    // ---- statements ---------------------------------------------------------

    StmtPtr parse_stmt() {
        auto s = std::make_shared<Stmt>();
        s->loc = peek().loc;
        const Token& t = peek();
        if (t.kind == Token::Kind::Symbol) {
            if (t.text == ";") {
                next();
                s->kind = Stmt::Kind::Null;
                return s;
            }
            if (t.text == "#")
                unsupported("delay control");
            if (t.text == "@")
                unsupported("event control");
            if (t.text == "{")
                return parse_assign_stmt(s);
            fail({"statement"});
        }
        if (t.kind == Token::Kind::System)
            unsupported("system task");
        if (t.kind != Token::Kind::Ident)
            fail({"statement"});
        const std::string w = t.text;
        if (w == "begin") {
            next();
            if (accept_sym(":"))
                expect_ident();
            s->kind = Stmt::Kind::Block;
            while (!accept_kw("end")) {
                if (at_end())
                    fail({"'end'"});
                if (is_kw("integer") || is_kw("reg") || is_kw("wire"))
                    unsupported("block-local declaration");
                s->body.push_back(parse_stmt());
            }
            return s;
        }
        if (w == "if") {
            next();
            s->kind = Stmt::Kind::If;
            expect_sym("(");
            s->cond = parse_expr();
            expect_sym(")");
            s->then_s = parse_stmt();
            if (accept_kw("else"))
                s->else_s = parse_stmt();
            return s;
        }
        if (w == "case" || w == "casex" || w == "casez") {
            next();
            s->kind = Stmt::Kind::Case;
            s->case_kind = w == "case" ? Stmt::CaseKind::Case : w == "casex" ? Stmt::CaseKind::Casex
                                                                             : Stmt::CaseKind::Casez;
            expect_sym("(");
            s->cond = parse_expr();
            expect_sym(")");
            bool seen_default = false;
            while (!accept_kw("endcase")) {
                if (at_end())
                    fail({"'endcase'"});
                CaseItem item;
                if (accept_kw("default")) {
                    if (seen_default)
                        throw SyntaxError(peek().loc, {"single default arm"}, "'default'");
                    seen_default = true;
                    accept_sym(":");
                } else {
                    do {
                        item.labels.push_back(parse_expr());
                    } while (accept_sym(","));
                    expect_sym(":");
                }
                item.body = parse_stmt();
                s->items.push_back(std::move(item));
            }
            return s;
        }
        if (w == "for" || w == "while" || w == "repeat" || w == "forever")
            unsupported("loop statement");
        if (w == "fork")
            unsupported("fork/join");
        if (w == "wait" || w == "disable")
            unsupported(w + " statement");
        if (w == "assign" || w == "deassign" || w == "force" || w == "release")
            unsupported("procedural continuous assignment");
        if (keywords().count(w))
            fail({"statement"});
        if (peek(1).kind == Token::Kind::Symbol && peek(1).text == "(")
            unsupported("task call");
        return parse_assign_stmt(s);
    }

    StmtPtr parse_assign_stmt(std::shared_ptr<Stmt> s) {
        s->kind = Stmt::Kind::Assign;
        s->lhs = parse_lvalue();
        if (accept_sym("="))
            s->blocking = true;
        else if (accept_sym("<="))
            s->blocking = false;
        else
            fail({"'='", "'<='"});
        if (is_sym("#") || is_sym("@"))
            unsupported("intra-assignment timing control");
        s->rhs = parse_expr();
        expect_sym(";");
        return s;
    }

    // ---- expressions --------------------------------------------------------

    ExprPtr parse_lvalue() {
        SourceLocation loc = peek().loc;
        if (accept_sym("{")) {
            std::vector<ExprPtr> items;
            do {
                items.push_back(parse_lvalue());
            } while (accept_sym(","));
            expect_sym("}");
            return Expr::concat(std::move(items), loc);
        }
        return parse_selectable(expect_ident(), loc);
    }

    ExprPtr parse_selectable(std::string name, SourceLocation loc) {
        if (is_sym(".") )
            unsupported("hierarchical reference");
        ExprPtr base = Expr::identifier(std::move(name), loc);
        if (!is_sym("["))
            return base;
        SourceLocation sel_loc = peek().loc;
        next();
        ExprPtr first = parse_expr();
        ExprPtr out;
        if (accept_sym("]")) {
            out = Expr::select_of(SelectKind::Bit, base, {first}, sel_loc);
        } else if (accept_sym(":")) {
            ExprPtr second = parse_expr();
            expect_sym("]");
            out = Expr::select_of(SelectKind::Range, base, {first, second}, sel_loc);
        } else if (accept_sym("+:")) {
            ExprPtr width = parse_expr();
            expect_sym("]");
            out = Expr::select_of(SelectKind::IndexedUp, base, {first, width}, sel_loc);
        } else if (accept_sym("-:")) {
            ExprPtr width = parse_expr();
            expect_sym("]");
            out = Expr::select_of(SelectKind::IndexedDown, base, {first, width}, sel_loc);
        } else {
            fail({"']'", "':'", "'+:'", "'-:'"});
        }
        if (is_sym("["))
            unsupported("multi-dimensional select");
        return out;
    }

    ExprPtr parse_expr() {
        ExprPtr cond = parse_binary(2);
        if (is_sym("?")) {
            SourceLocation loc = peek().loc;
            next();
            ExprPtr a = parse_expr();
            expect_sym(":");
            ExprPtr b = parse_expr();
            return Expr::ternary(cond, a, b, loc);
        }
        return cond;
    }

    ExprPtr parse_binary(int min_prec) {
        ExprPtr lhs = parse_unary();
        while (peek().kind == Token::Kind::Symbol) {
            auto it = binary_ops().find(peek().text);
            if (it == binary_ops().end() || it->second.prec < min_prec)
                break;
            SourceLocation loc = peek().loc;
            next();
            ExprPtr rhs = parse_binary(it->second.prec + 1);
            lhs = Expr::binary(it->second.op, lhs, rhs, loc);
        }
        return lhs;
    }

    ExprPtr parse_unary() {
        if (peek().kind == Token::Kind::Symbol) {
            auto it = unary_ops().find(peek().text);
            if (it != unary_ops().end()) {
                SourceLocation loc = peek().loc;
                next();
                return Expr::unary(it->second, parse_unary(), loc);
            }
        }
        return parse_primary();
    }

    ExprPtr parse_primary() {
        const Token& t = peek();
        SourceLocation loc = t.loc;
        switch (t.kind) {
        case Token::Kind::Number: {
            std::string text = next().text;
            if (text.find('.') != std::string::npos)
                throw UnsupportedConstruct(loc, "real literal");
            return Expr::number(text, loc);
        }
        case Token::Kind::String:
            unsupported("string literal");
        case Token::Kind::System:
            unsupported("system function");
        case Token::Kind::Ident: {
            if (keywords().count(t.text))
                fail({"expression"});
            std::string name = next().text;
            if (is_sym("("))
                throw UnsupportedConstruct(loc, "function call");
            return parse_selectable(std::move(name), loc);
        }
        case Token::Kind::Symbol:
            if (accept_sym("(")) {
                ExprPtr e = parse_expr();
                expect_sym(")");
                return e;
            }
            if (accept_sym("{")) {
                ExprPtr first = parse_expr();
                if (accept_sym("{")) {
                    std::vector<ExprPtr> items;
                    do {
                        items.push_back(parse_expr());
                    } while (accept_sym(","));
                    expect_sym("}");
                    expect_sym("}");
                    return Expr::replicate(first, std::move(items), loc);
                }
                std::vector<ExprPtr> items{first};
                while (accept_sym(","))
                    items.push_back(parse_expr());
                expect_sym("}");
                return Expr::concat(std::move(items), loc);
            }
            fail({"expression"});
        case Token::Kind::End:
            fail({"expression"});
        }
        fail({"expression"});
    }

    // ---- identifier resolution ---------------------------------------------

    void resolve_identifiers(ModuleDecl& m) {
        std::set<std::string> declared;
        for (const auto& p : m.ports)
            declared.insert(p.name);
        for (const auto& item : m.items) {
            if (const auto* n = std::get_if<NetDecl>(&item)) {
                if (!declared.insert(n->name).second)
                    throw SyntaxError(n->loc, {"unique declaration"}, "'" + n->name + "'");
            } else if (const auto* p = std::get_if<ParamDecl>(&item)) {
                if (!declared.insert(p->name).second)
                    throw SyntaxError(p->loc, {"unique declaration"}, "'" + p->name + "'");
            }
        }

        // Implicit nets: plain identifiers on gate terminals and instance ports.
        std::vector<NetDecl> implicit;
        auto implicit_net = [&](const ExprPtr& e) {
            if (e && e->kind == Expr::Kind::Identifier && !declared.count(e->text)) {
                declared.insert(e->text);
                NetDecl n;
                n.name = e->text;
                n.loc = e->loc;
                implicit.push_back(std::move(n));
            }
        };
        for (const auto& item : m.items) {
            if (const auto* g = std::get_if<GateInstance>(&item))
                for (const auto& t : g->terminals)
                    implicit_net(t);
            if (const auto* inst = std::get_if<ModuleInstance>(&item))
                for (const auto& c : inst->connections)
                    implicit_net(c.expr);
        }
        for (auto& n : implicit)
            m.items.emplace_back(std::move(n));

        std::function<void(const ExprPtr&)> check = [&](const ExprPtr& e) {
            if (!e)
                return;
            if (e->kind == Expr::Kind::Identifier && !declared.count(e->text))
                throw SyntaxError(e->loc, {"declared identifier"}, "'" + e->text + "'");
            for (const auto& o : e->operands)
                check(o);
        };
        std::function<void(const StmtPtr&)> check_stmt = [&](const StmtPtr& s) {
            if (!s)
                return;
            check(s->lhs);
            check(s->rhs);
            check(s->cond);
            check_stmt(s->then_s);
            check_stmt(s->else_s);
            for (const auto& b : s->body)
                check_stmt(b);
            for (const auto& it : s->items) {
                for (const auto& l : it.labels)
                    check(l);
                check_stmt(it.body);
            }
        };
        auto check_range = [&](const std::optional<Range>& r) {
            if (r) {
                check(r->msb);
                check(r->lsb);
            }
        };
        for (const auto& p : m.ports)
            check_range(p.range);
        for (const auto& item : m.items) {
            std::visit(
                [&](const auto& it) {
                    using T = std::decay_t<decltype(it)>;
                    if constexpr (std::is_same_v<T, NetDecl>) {
                        check_range(it.range);
                    } else if constexpr (std::is_same_v<T, ParamDecl>) {
                        check(it.value);
                    } else if constexpr (std::is_same_v<T, ContinuousAssign>) {
                        check(it.lhs);
                        check(it.rhs);
                    } else if constexpr (std::is_same_v<T, AlwaysBlock>) {
                        for (const auto& s : it.sensitivity)
                            check(s.signal);
                        check_stmt(it.body);
                    } else if constexpr (std::is_same_v<T, GateInstance>) {
                        for (const auto& t : it.terminals)
                            check(t);
                    } else if constexpr (std::is_same_v<T, ModuleInstance>) {
                        for (const auto& c : it.connections)
                            check(c.expr);
                    }
                },
                item);
        }
    }
};

} // namespace

Ast parse(const PreprocessedFile& file) {
    Ast ast;
    Parser(Lexer(file).run()).parse_into(ast);
    return ast;
}

Ast parse(const std::vector<PreprocessedFile>& files) {
    Ast ast;
    for (const auto& f : files)
        Parser(Lexer(f).run()).parse_into(ast);
    std::set<std::string> names;
    for (const auto& m : ast.modules)
        if (!names.insert(m.name).second)
            throw SyntaxError(m.loc, {"unique module name"}, "'" + m.name + "'");
    return ast;
}

Ast parse_text(const std::string& text, const std::string& path) {
    return parse(std::vector<PreprocessedFile>{preprocess_text(text, path)});
}

bool is_verilog_keyword(const std::string& word) { return keywords().count(word) > 0; }

} // namespace ipsim
