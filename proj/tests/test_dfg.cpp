#include <doctest.h>

#include "ipsim/dfg.hpp"
#include "ipsim/dfg_io.hpp"
#include "ipsim/flatten.hpp"
#include "ipsim/parser.hpp"
#include "ipsim/preprocess.hpp"
#include "test_util.hpp"

#include <map>
#include <queue>
#include <regex>
#include <set>

using namespace ipsim;

namespace {

FlatModule flat_of(const std::string& src, const std::string& top = "") {
    return flatten_hierarchy(parse_text(preprocess_text(src).text), top);
}

DataFlowGraph dfg_of(const std::string& src, const std::string& top = "") { return build_dfg(flat_of(src, top)); }

int node_named(const DataFlowGraph& g, const std::string& label) {
    for (const auto& n : g.nodes)
        if (n.label == label && n.kind != NodeKind::Constant)
            return n.id;
    return -1;
}

// Reference reachability: plain DFS over the edge list.
std::set<int> reachable(const DataFlowGraph& g, int from) {
    std::multimap<int, int> adj;
    for (const auto& [s, d] : g.edges)
        adj.emplace(s, d);
    std::set<int> seen{from};
    std::vector<int> stack{from};
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        auto [lo, hi] = adj.equal_range(v);
        for (auto it = lo; it != hi; ++it)
            if (seen.insert(it->second).second)
                stack.push_back(it->second);
    }
    return seen;
}

std::set<std::string> reached_inputs(const DataFlowGraph& g, const std::string& root) {
    std::set<std::string> out;
    int r = node_named(g, root);
    REQUIRE(r >= 0);
    for (int v : reachable(g, r))
        if (g.nodes[v].kind == NodeKind::Input)
            out.insert(*g.nodes[v].label);
    return out;
}

std::string rename_identifiers(std::string text, const std::map<std::string, std::string>& names) {
    for (const auto& [from, to] : names)
        text = std::regex_replace(text, std::regex("\\b" + from + "\\b"), to);
    return text;
}

const char* kMux = R"(
module mux(input s, input a, input b, output reg y);
  always @(*) begin
    if (s) y = a;
    else y = b;
  end
endmodule)";

} // namespace

TEST_SUITE("dfg") {
    TEST_CASE("conditional assignment becomes a branch") {
        SignalTree t = analyze_signal(flat_of(kMux), "y");
        const auto& root = t.nodes[t.root];
        CHECK(root.kind == NodeKind::Output);
        REQUIRE(root.children.size() == 1);
        const auto& br = t.nodes[root.children[0]];
        CHECK(br.kind == NodeKind::Branch);
        REQUIRE(br.children.size() == 3);
        CHECK(t.nodes[br.children[0]].ref == "s");
        CHECK(t.nodes[br.children[1]].ref == "a");
        CHECK(t.nodes[br.children[2]].ref == "b");
    }

    TEST_CASE("missing else holds the previous value") {
        SignalTree t = analyze_signal(
            flat_of("module l(input clk, input en, input d, output reg q); always @(posedge clk) if (en) q <= d; endmodule"),
            "q");
        const auto& br = t.nodes[t.nodes[t.root].children.at(0)];
        CHECK(br.kind == NodeKind::Branch);
        CHECK(t.nodes[br.children.at(2)].ref == "q");
    }

    TEST_CASE("case statements become nested branches on equality") {
        SignalTree t = analyze_signal(flat_of(R"(
module m(input [1:0] op, input a, b, c, output reg y);
  always @(*) case (op) 2'd0: y = a; 2'd1: y = b; default: y = c; endcase
endmodule)"),
                                      "y");
        std::map<NodeKind, int> kinds;
        for (const auto& n : t.nodes)
            ++kinds[n.kind];
        CHECK(kinds[NodeKind::Branch] == 2);
        CHECK(kinds[NodeKind::Eq] == 2);
    }

    TEST_CASE("full adder outputs reach every input") {
        for (const char* file : {"full_adder.v", "full_adder_gates.v"}) {
            CAPTURE(file);
            DataFlowGraph g = dfg_of(read_file(fixture(file)));
            std::set<std::string> all{"Num1", "Num2", "Cin"};
            CHECK(reached_inputs(g, "Sum") == all);
            CHECK(reached_inputs(g, "Cout") == all);
            CHECK(g.roots.size() == 2);
            g.validate();
        }
    }

    TEST_CASE("RTL and gate-level full adders coincide after trimming") {
        DataFlowGraph rtl = trim(dfg_of(read_file(fixture("full_adder.v"))));
        DataFlowGraph gates = trim(dfg_of(read_file(fixture("full_adder_gates.v"))));
        CHECK(isomorphic(rtl, gates));
        // Trimmed adder: 2 outputs, 3 inputs, 2 Xor, 2 And, 1 Or.
        CHECK(rtl.size() == 10);
    }

    TEST_CASE("hierarchical ripple adder") {
        DataFlowGraph g = trim(dfg_of(read_file(fixture("ripple4.v")), "ripple4"));
        CHECK(reached_inputs(g, "cout") == std::set<std::string>{"x", "y", "cin"});
        CHECK(g.roots.size() == 2);
    }

    TEST_CASE("driver errors") {
        CHECK_THROWS_AS(dfg_of("module m(input a, b, output y); assign y = a; assign y = b; endmodule"),
                        MultipleContinuousDrivers);
        CHECK_THROWS_AS(dfg_of("module m(input a, output y, output z); assign y = a; endmodule"), UndrivenSignal);
        CHECK_THROWS_AS(dfg_of("module m(input a, output y); wire w; assign y = a & w; endmodule"), UndrivenSignal);
        CHECK_THROWS_AS(
            dfg_of("module m(input a, b, output reg y); always @(*) y = a; always @(*) y = b; endmodule"),
            MultipleContinuousDrivers);
    }

    TEST_CASE("bitwise partial drivers concatenate") {
        DataFlowGraph g =
            dfg_of("module m(input a, b, output [1:0] y); assign y[0] = a; assign y[1] = b; endmodule");
        int y = node_named(g, "y");
        REQUIRE(y >= 0);
        std::set<NodeKind> kinds;
        for (int v : reachable(g, y))
            kinds.insert(g.nodes[v].kind);
        CHECK(kinds.count(NodeKind::Concat) == 1);
    }

    TEST_CASE("build is deterministic and ids are dense") {
        std::string src = read_file(fixture("ripple4.v"));
        DataFlowGraph a = dfg_of(src, "ripple4"), b = dfg_of(src, "ripple4");
        CHECK(serialize_dfg(a) == serialize_dfg(b));
        for (std::size_t i = 0; i < a.size(); ++i)
            CHECK(a.nodes[i].id == static_cast<int>(i));
    }
}

TEST_SUITE("trim") {
    const std::vector<std::pair<std::string, std::string>> kDesigns = {
        {"full_adder.v", ""}, {"full_adder_gates.v", ""}, {"ripple4.v", "ripple4"}};

    TEST_CASE("alias chains collapse") {
        DataFlowGraph g = dfg_of("module m(input a, output y); wire w1, w2; assign w1 = a; assign w2 = ~w1; "
                                 "assign y = w2; endmodule");
        DataFlowGraph t = trim(g);
        CHECK(t.size() == 3); // y -> Not -> a
        CHECK(t.edges.size() == 2);
    }

    TEST_CASE("invariants on fixture designs") {
        for (const auto& [file, top] : kDesigns) {
            CAPTURE(file);
            DataFlowGraph g = dfg_of(read_file(fixture(file)), top);
            DataFlowGraph t = trim(g);
            t.validate();
            CHECK(t.size() <= g.size());
            CHECK(trim(t) == t);
            std::set<int> covered;
            for (int r : t.roots)
                for (int v : reachable(t, r))
                    covered.insert(v);
            CHECK(covered.size() == t.size());
            std::vector<int> outdeg(t.size(), 0);
            for (const auto& e : t.edges)
                ++outdeg[e.first];
            std::set<int> roots(t.roots.begin(), t.roots.end());
            for (const auto& n : t.nodes)
                if (n.kind == NodeKind::Signal && !roots.count(n.id))
                    CHECK(outdeg[n.id] != 1);
            for (const auto& e : t.edges)
                CHECK(e.first != e.second);
        }
    }

    TEST_CASE("dropping structural nodes") {
        DataFlowGraph g = dfg_of("module m(input [3:0] a, b, output [3:0] y); assign y = {a[1:0], b[3:2]} ^ a; endmodule");
        DataFlowGraph kept = trim(g);
        DataFlowGraph dropped = trim(g, {true});
        for (const auto& n : dropped.nodes) {
            CHECK(n.kind != NodeKind::Concat);
            CHECK(n.kind != NodeKind::PartSelect);
        }
        CHECK(dropped.size() < kept.size());
        CHECK(trim(dropped, {true}) == dropped);
    }

    TEST_CASE("identifier renaming preserves the trimmed graph") {
        for (const auto& [file, top] : kDesigns) {
            CAPTURE(file);
            std::string src = read_file(fixture(file));
            std::map<std::string, std::string> names = {
                {"Num1", "alpha"}, {"Num2", "beta"}, {"Cin", "carry_in"}, {"p", "prop"}, {"n1", "t1"},
                {"c1", "k1"},      {"c2", "k2"},     {"x", "xx"},         {"fa", "adder_cell"}};
            std::string renamed = rename_identifiers(src, names);
            std::string renamed_top = top.empty() ? top : rename_identifiers(top, names);
            CHECK(isomorphic(trim(dfg_of(src, top)), trim(dfg_of(renamed, renamed_top))));
        }
    }

    TEST_CASE("different circuits are not isomorphic") {
        DataFlowGraph a = trim(dfg_of("module m(input a, b, output y); assign y = a & b; endmodule"));
        DataFlowGraph b = trim(dfg_of("module m(input a, b, output y); assign y = a | b; endmodule"));
        DataFlowGraph c = trim(dfg_of("module m(input a, b, output y); assign y = b & a; endmodule"));
        CHECK_FALSE(isomorphic(a, b));
        CHECK(isomorphic(a, c));
    }
}

TEST_SUITE("dfg_io") {
    TEST_CASE("round trip") {
        for (const char* file : {"full_adder.v", "full_adder_gates.v"}) {
            DataFlowGraph g = trim(dfg_of(read_file(fixture(file))));
            DataFlowGraph back = deserialize_dfg(serialize_dfg(g));
            CHECK(back == g);
        }
        DataFlowGraph r = dfg_of(read_file(fixture("ripple4.v")), "ripple4");
        CHECK(deserialize_dfg(serialize_dfg(r)) == r);
    }

    TEST_CASE("hand-written three node document") {
        const char* doc = R"({"name": "inv", "nodes": [
            {"id": 10, "kind": "Output", "label": "y"},
            {"id": 20, "kind": "Not", "label": null},
            {"id": 30, "kind": "Input", "label": "a"}],
            "edges": [[10, 20], [20, 30], [10, 20]], "roots": [10]})";
        DataFlowGraph g = deserialize_dfg(doc);
        REQUIRE(g.size() == 3);
        CHECK(g.nodes[1].kind == NodeKind::Not);
        CHECK_FALSE(g.nodes[1].label.has_value());
        CHECK(g.edges == std::vector<std::pair<int, int>>{{0, 1}, {1, 2}});
        CHECK(g.roots == std::vector<int>{0});
        CHECK(g.leaves() == std::vector<int>{2});
        CHECK(serialize_dfg(g) ==
              "{\"edges\":[[0,1],[1,2]],\"name\":\"inv\",\"nodes\":[{\"id\":0,\"kind\":\"Output\",\"label\":\"y\"},"
              "{\"id\":1,\"kind\":\"Not\",\"label\":null},{\"id\":2,\"kind\":\"Input\",\"label\":\"a\"}],"
              "\"roots\":[0]}\n");
    }

    TEST_CASE("malformed documents") {
        CHECK_THROWS_AS(deserialize_dfg("{"), FormatError);
        CHECK_THROWS_AS(deserialize_dfg("[]"), FormatError);
        CHECK_THROWS_AS(deserialize_dfg(R"({"name":"x","nodes":[],"edges":[]})"), FormatError);
        CHECK_THROWS_AS(
            deserialize_dfg(R"({"name":"x","nodes":[{"id":0,"kind":"Flux"}],"edges":[],"roots":[]})"), FormatError);
        CHECK_THROWS_AS(
            deserialize_dfg(R"({"name":"x","nodes":[{"id":0,"kind":"Input"}],"edges":[[0,5]],"roots":[]})"),
            FormatError);
        CHECK_THROWS_AS(deserialize_dfg(
                            R"({"name":"x","nodes":[{"id":0,"kind":"Input"},{"id":0,"kind":"Input"}],"edges":[],"roots":[]})"),
                        FormatError);
    }
}
