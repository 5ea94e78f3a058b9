#include <doctest.h>

#include "ipsim/flatten.hpp"
#include "ipsim/parser.hpp"
#include "ipsim/preprocess.hpp"
#include "test_util.hpp"

#include <functional>
#include <set>

using namespace ipsim;

TEST_SUITE("preprocess") {
    TEST_CASE("macro substitution") {
        CHECK(preprocess_text("`define W 4\nwire [`W-1:0] x;").text == "wire [4-1:0] x;");
    }

    TEST_CASE("comment stripping") {
        CHECK(preprocess_text("// c\nassign y = a;").text == "assign y = a;");
        CHECK(preprocess_text("assign /* inline */ y = a; // tail").text == "assign   y = a;");
    }

    TEST_CASE("false guard elides body") {
        CHECK(preprocess_text("`ifdef MISSING\nassign y=1;\n`endif").text == "");
    }

    TEST_CASE("ifdef else elsif and ifndef") {
        std::string src = "`define A\n`ifdef A\nx;\n`else\ny;\n`endif\n"
                          "`ifndef A\np;\n`elsif B\nq;\n`else\nr;\n`endif";
        CHECK(preprocess_text(src).text == "x;\nr;");
    }

    TEST_CASE("nested guards inside inactive region stay inactive") {
        std::string src = "`ifdef NO\n`ifdef ALSO\na;\n`else\nb;\n`endif\n`endif\nc;";
        CHECK(preprocess_text(src).text == "c;");
    }

    TEST_CASE("function-like macro and undef") {
        std::string src = "`define AND2(a, b) ((a) & (b))\nassign y = `AND2(p, q);\n`undef AND2\n`ifdef AND2\nz;\n`endif";
        CHECK(preprocess_text(src).text == "assign y = ((p) & (q));");
    }

    TEST_CASE("command-line defines and timescale stripping") {
        auto out = preprocess_text("`timescale 1ns/1ps\n`ifdef FAST\nfast;\n`endif", "t.v", {{"FAST", ""}});
        CHECK(out.text == "fast;");
    }

    TEST_CASE("line origins point at source lines") {
        auto out = preprocess_text("// header\n\nmodule m;\n// c\nendmodule\n", "m.v");
        REQUIRE(out.origins.size() == 2);
        CHECK(out.origins[0].line == 3);
        CHECK(out.origins[1].line == 5);
    }

    TEST_CASE("include resolves relative to the including file") {
        SourceUnit unit;
        unit.files.push_back({"dir/top.v", "`include \"defs.vh\"\nwire [`N:0] w;"});
        unit.files.push_back({"dir/defs.vh", "`define N 7"});
        auto out = preprocess(unit);
        CHECK(out[0].text == "wire [7:0] w;");
    }

    TEST_CASE("errors") {
        CHECK_THROWS_AS(preprocess_text("`include \"nope.vh\""), PreprocessError);
        CHECK_THROWS_AS(preprocess_text("`ifdef X\nfoo;"), PreprocessError);
        CHECK_THROWS_AS(preprocess_text("`define LOOP `LOOP\nx = `LOOP;"), PreprocessError);
        CHECK_THROWS_AS(preprocess_text("x = `UNDEFINED;"), PreprocessError);
        CHECK_THROWS_AS(preprocess_text("`endif"), PreprocessError);
    }

    TEST_CASE("idempotent on its own output") {
        const std::vector<std::string> inputs = {
            read_file(fixture("ripple4.v")),
            read_file(fixture("full_adder.v")),
            "`define A 1\n/* multi\nline */ module m; // x\n`ifdef A\nwire w;\n`endif\nendmodule\n",
        };
        for (const auto& in : inputs) {
            auto once = preprocess_text(in).text;
            CHECK(preprocess_text(once).text == once);
            CHECK(once.find('`') == std::string::npos);
        }
    }
}

TEST_SUITE("parse") {
    TEST_CASE("single module with unary not") {
        Ast ast = parse_text("module m(input a, output y); assign y = ~a; endmodule");
        REQUIRE(ast.modules.size() == 1);
        const auto& m = ast.modules[0];
        CHECK(m.ports.size() == 2);
        auto assigns = m.items_of<ContinuousAssign>();
        REQUIRE(assigns.size() == 1);
        const Expr& rhs = *assigns[0]->rhs;
        CHECK(rhs.kind == Expr::Kind::Unary);
        CHECK(rhs.unary_op == UnaryOp::BitNot);
        CHECK(rhs.operands[0]->kind == Expr::Kind::Identifier);
        CHECK(rhs.operands[0]->text == "a");
    }

    TEST_CASE("xor chain is left associative") {
        Ast ast = parse_text("module m(input a, b, cin, output s); assign s = a ^ b ^ cin; endmodule");
        const Expr& rhs = *ast.modules[0].items_of<ContinuousAssign>()[0]->rhs;
        REQUIRE(rhs.kind == Expr::Kind::Binary);
        CHECK(rhs.binary_op == BinaryOp::BitXor);
        CHECK(rhs.operands[1]->text == "cin");
        const Expr& inner = *rhs.operands[0];
        CHECK(inner.binary_op == BinaryOp::BitXor);
        CHECK(inner.operands[0]->text == "a");
        CHECK(inner.operands[1]->text == "b");
    }

    TEST_CASE("operator precedence follows Verilog") {
        Ast ast = parse_text("module m(input a, b, c, d, output y, z); assign y = a | b & c; "
                             "assign z = a + b << c == d ? a : b; endmodule");
        auto assigns = ast.modules[0].items_of<ContinuousAssign>();
        const Expr& y = *assigns[0]->rhs;
        CHECK(y.binary_op == BinaryOp::BitOr);
        CHECK(y.operands[1]->binary_op == BinaryOp::BitAnd);
        const Expr& z = *assigns[1]->rhs;
        REQUIRE(z.kind == Expr::Kind::Ternary);
        const Expr& cmp = *z.operands[0];
        CHECK(cmp.binary_op == BinaryOp::Eq);
        CHECK(cmp.operands[0]->binary_op == BinaryOp::Shl);
        CHECK(cmp.operands[0]->operands[0]->binary_op == BinaryOp::Add);
    }

    TEST_CASE("full adder drives Sum and Cout") {
        Ast ast = parse_text(read_file(fixture("full_adder.v")), "full_adder.v");
        std::set<std::string> driven;
        for (const auto* a : ast.modules[0].items_of<ContinuousAssign>())
            driven.insert(a->lhs->text);
        CHECK(driven.count("Sum") == 1);
        CHECK(driven.count("Cout") == 1);
    }

    TEST_CASE("always blocks, case, concat, replication and selects") {
        const char* src = R"(
module alu #(parameter W = 4) (input clk, input [1:0] op, input [W-1:0] a, b, output reg [W-1:0] y, output reg z);
  wire [2*W-1:0] wide = {a, b};
  always @(*) begin
    case (op)
      2'b00: y = a + b;
      2'b01, 2'b10: y = a & b;
      default: y = {W{1'b0}};
    endcase
  end
  always @(posedge clk) if (op[0]) z <= wide[3:2] == a[1+:2]; else z <= 1'b0;
endmodule)";
        Ast ast = parse_text(src);
        const auto& m = ast.modules[0];
        CHECK(m.items_of<AlwaysBlock>().size() == 2);
        CHECK(m.items_of<AlwaysBlock>()[0]->star);
        CHECK(m.items_of<AlwaysBlock>()[1]->sensitivity[0].edge == SensitivityItem::Edge::Pos);
        CHECK(m.items_of<ParamDecl>().size() == 1);
        const Stmt& body = *m.items_of<AlwaysBlock>()[0]->body;
        REQUIRE(body.kind == Stmt::Kind::Block);
        const Stmt& cs = *body.body[0];
        CHECK(cs.kind == Stmt::Kind::Case);
        CHECK(cs.items.size() == 3);
        CHECK(cs.items[1].labels.size() == 2);
        CHECK(cs.items[2].labels.empty());
        CHECK(cs.items[2].body->rhs->kind == Expr::Kind::Replicate);
        const Stmt& seq = *m.items_of<AlwaysBlock>()[1]->body;
        CHECK(seq.kind == Stmt::Kind::If);
        CHECK_FALSE(seq.then_s->blocking);
    }

    TEST_CASE("non-ANSI ports and output reg redeclaration") {
        Ast ast = parse_text("module m(a, y); input [3:0] a; output y; reg y; always @(a) y = |a; endmodule");
        const auto& m = ast.modules[0];
        REQUIRE(m.ports.size() == 2);
        CHECK(m.ports[0].dir == PortDir::Input);
        CHECK(m.ports[0].range.has_value());
        CHECK(m.ports[1].dir == PortDir::Output);
        CHECK(m.ports[1].is_reg);
    }

    TEST_CASE("gates and implicit nets") {
        Ast ast = parse_text("module m(input a, b, output y); nand (t, a, b); not n1(y, t); endmodule");
        const auto& m = ast.modules[0];
        CHECK(m.items_of<GateInstance>().size() == 2);
        REQUIRE(m.items_of<NetDecl>().size() == 1);
        CHECK(m.items_of<NetDecl>()[0]->name == "t");
    }

    TEST_CASE("syntax errors carry a location and an expected set") {
        try {
            parse_text("module m(input a, output y);\n  assign y = a +;\nendmodule", "bad.v");
            FAIL("expected SyntaxError");
        } catch (const SyntaxError& e) {
            CHECK(e.location().file == "bad.v");
            CHECK(e.location().line == 2);
            CHECK_FALSE(e.expected().empty());
        }
        CHECK_THROWS_AS(parse_text("module m(input a, output y); assign y = b; endmodule"), SyntaxError);
        CHECK_THROWS_AS(parse_text("module m(a); endmodule"), SyntaxError);
    }

    TEST_CASE("unsupported constructs are distinct from syntax errors") {
        const std::vector<std::pair<std::string, std::string>> cases = {
            {"module m(output reg y); initial y = 0; endmodule", "initial block"},
            {"module m(input a, output y); function f; input x; f = x; endfunction assign y = a; endmodule", "function"},
            {"module m(input a, output y); assign #1 y = a; endmodule", "delay control"},
            {"module m(input a, output reg y); always @(*) $display(a); endmodule", "system task"},
            {"module m(input a, output y); reg [1:0] mem [0:3]; assign y = a; endmodule", "memory array"},
            {"module m(input a, output reg y); integer i; endmodule", "variable type 'integer'"},
            {"module m(input a, output reg y); always @(*) for (y = 0; y < 1; y = y + 1) y = a; endmodule",
             "loop statement"},
        };
        for (const auto& [src, what] : cases) {
            try {
                parse_text(src, "u.v");
                FAIL("expected UnsupportedConstruct for " << what);
            } catch (const UnsupportedConstruct& e) {
                CHECK(e.construct() == what);
                CHECK(e.diagnostic().rfind("u.v:1:", 0) == 0);
            }
        }
    }

    TEST_CASE("every location lies within its file") {
        std::string text = read_file(fixture("ripple4.v"));
        Ast ast = parse_text(text, "ripple4.v");
        int lines = 1 + static_cast<int>(std::count(text.begin(), text.end(), '\n'));
        std::function<void(const ExprPtr&)> check = [&](const ExprPtr& e) {
            if (!e)
                return;
            CHECK(e->loc.line >= 1);
            CHECK(e->loc.line <= lines);
            for (const auto& o : e->operands)
                check(o);
        };
        for (const auto& m : ast.modules) {
            CHECK(m.loc.line <= lines);
            for (const auto* a : m.items_of<ContinuousAssign>()) {
                check(a->lhs);
                check(a->rhs);
            }
            for (const auto* i : m.items_of<ModuleInstance>()) {
                CHECK(i->loc.line <= lines);
                for (const auto& c : i->connections)
                    check(c.expr);
            }
        }
    }

    TEST_CASE("parsing is deterministic") {
        std::string text = read_file(fixture("ripple4.v"));
        Ast a = parse_text(text), b = parse_text(text);
        REQUIRE(a.modules.size() == b.modules.size());
        for (std::size_t i = 0; i < a.modules.size(); ++i) {
            auto aa = a.modules[i].items_of<ContinuousAssign>();
            auto bb = b.modules[i].items_of<ContinuousAssign>();
            REQUIRE(aa.size() == bb.size());
            for (std::size_t k = 0; k < aa.size(); ++k) {
                CHECK(same_structure(*aa[k]->lhs, *bb[k]->lhs));
                CHECK(same_structure(*aa[k]->rhs, *bb[k]->rhs));
            }
        }
    }
}

TEST_SUITE("flatten") {
    std::set<std::string> net_names(const FlatModule& f) {
        std::set<std::string> out;
        for (const auto* n : f.module.items_of<NetDecl>())
            out.insert(n->name);
        return out;
    }

    const char* kTwoInstances = R"(
module half(input a, input b, output s, output c);
  wire w;
  assign w = a ^ b;
  assign s = w;
  assign c = a & b;
endmodule
module top(input x, input y, input z, output s1, output s2, output c1, output c2);
  half u1(.a(x), .b(y), .s(s1), .c(c1));
  half u2(.a(y), .b(z), .s(s2), .c(c2));
endmodule)";

    TEST_CASE("internal wires are mangled by instance path") {
        FlatModule f = flatten_hierarchy(parse_text(kTwoInstances), "top");
        auto nets = net_names(f);
        CHECK(nets.count("u1.w") == 1);
        CHECK(nets.count("u2.w") == 1);
        CHECK(f.module.items_of<ModuleInstance>().empty());
        CHECK(f.module.ports.size() == 7);
        // Ports bound to plain identifiers are substituted, not aliased.
        CHECK(nets.count("u1.a") == 0);
    }

    TEST_CASE("primitive gates lower to assigns") {
        FlatModule f = flatten_hierarchy(parse_text("module n(input a, b, output s); xor g1(s, a, b); endmodule"), "n");
        auto assigns = f.module.items_of<ContinuousAssign>();
        REQUIRE(assigns.size() == 1);
        CHECK(assigns[0]->lhs->text == "s");
        const Expr& rhs = *assigns[0]->rhs;
        CHECK(rhs.binary_op == BinaryOp::BitXor);
        CHECK(rhs.operands[0]->text == "a");
        CHECK(rhs.operands[1]->text == "b");
        CHECK(f.module.items_of<GateInstance>().empty());
    }

    TEST_CASE("n-input nand keeps the inversion outermost") {
        FlatModule f =
            flatten_hierarchy(parse_text("module n(input a, b, c, output y); nand g(y, a, b, c); endmodule"), "n");
        const Expr& rhs = *f.module.items_of<ContinuousAssign>()[0]->rhs;
        CHECK(rhs.binary_op == BinaryOp::Nand);
        CHECK(rhs.operands[0]->binary_op == BinaryOp::BitAnd);
    }

    TEST_CASE("select-bound ports go through alias wires") {
        FlatModule f = flatten_hierarchy(parse_text(read_file(fixture("ripple4.v"))), "ripple4");
        auto nets = net_names(f);
        CHECK(nets.count("u0.a") == 1);
        CHECK(nets.count("u0.co") == 0); // bound to c1 directly
        CHECK(f.module.ports.size() == 5);
        // Macro width resolved to literals.
        REQUIRE(f.module.ports[0].range.has_value());
        CHECK(f.module.ports[0].range->msb->text == "3");
    }

    TEST_CASE("parameter overrides apply before width evaluation") {
        const char* src = R"(
module reg_n #(parameter N = 2) (input [N-1:0] d, output [N-1:0] q);
  localparam M = N * 2;
  wire [M-1:0] t;
  assign t = {d, d};
  assign q = t[N-1:0];
endmodule
module top(input [7:0] d, output [7:0] q);
  reg_n #(.N(8)) r(.d(d), .q(q));
endmodule)";
        FlatModule f = flatten_hierarchy(parse_text(src), "top");
        for (const auto* n : f.module.items_of<NetDecl>())
            if (n->name == "r.t") {
                REQUIRE(n->range.has_value());
                CHECK(n->range->msb->text == "15");
            }
        CHECK(net_names(f).count("r.t") == 1);
    }

    TEST_CASE("elaboration errors") {
        CHECK_THROWS_AS(flatten_hierarchy(parse_text("module t(input a, output y); nope u(a, y); endmodule"), "t"),
                        UnknownModule);
        CHECK_THROWS_AS(flatten_hierarchy(parse_text("module a(input x, output y); b u(x, y); endmodule "
                                                     "module b(input x, output y); a u(x, y); endmodule"),
                                          "a"),
                        RecursiveInstantiation);
        CHECK_THROWS_AS(
            flatten_hierarchy(parse_text("module c(input x, output y); assign y = x; endmodule "
                                         "module t(input a, output y); c u(a); endmodule"),
                              "t"),
            PortArityMismatch);
        CHECK_THROWS_AS(flatten_hierarchy(parse_text("module t(input a, output y); assign y = a; endmodule"), "zz"),
                        UnknownModule);
    }

    TEST_CASE("mangled names are deterministic") {
        Ast ast = parse_text(kTwoInstances);
        CHECK(net_names(flatten_hierarchy(ast, "top")) == net_names(flatten_hierarchy(ast, "top")));
    }
}
