#include "ipsim/dfg_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>

namespace ipsim {

using nlohmann::json;

std::string serialize_dfg(const DataFlowGraph& g) {
    json doc;
    doc["name"] = g.name;
    json nodes = json::array();
    for (const auto& n : g.nodes) {
        json node;
        node["id"] = n.id;
        node["kind"] = std::string(kind_name(n.kind));
        node["label"] = n.label ? json(*n.label) : json(nullptr);
        nodes.push_back(std::move(node));
    }
    doc["nodes"] = std::move(nodes);
    json edges = json::array();
    for (const auto& [s, d] : g.edges)
        edges.push_back({s, d});
    doc["edges"] = std::move(edges);
    doc["roots"] = g.roots;
    return doc.dump() + "\n";
}

DataFlowGraph deserialize_dfg(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("DFG document: ") + e.what());
    }
    try {
        if (!doc.is_object())
            throw FormatError("DFG document: expected an object");
        for (const char* key : {"name", "nodes", "edges", "roots"})
            if (!doc.contains(key))
                throw FormatError(std::string("DFG document: missing \"") + key + "\"");

        DataFlowGraph g;
        g.name = doc.at("name").get<std::string>();
        std::map<long long, int> ids;
        for (const auto& node : doc.at("nodes")) {
            long long id = node.at("id").get<long long>();
            if (id < 0 || !ids.emplace(id, static_cast<int>(g.nodes.size())).second)
                throw FormatError("DFG document: duplicate or negative node id " + std::to_string(id));
            std::string kind_str = node.at("kind").get<std::string>();
            auto kind = kind_from_name(kind_str);
            if (!kind)
                throw FormatError("DFG document: unknown kind \"" + kind_str + "\"");
            DfgNode n;
            n.id = static_cast<int>(g.nodes.size());
            n.kind = *kind;
            if (node.contains("label") && !node.at("label").is_null())
                n.label = node.at("label").get<std::string>();
            g.nodes.push_back(std::move(n));
        }
        auto lookup = [&](long long id) {
            auto it = ids.find(id);
            if (it == ids.end())
                throw FormatError("DFG document: reference to missing node " + std::to_string(id));
            return it->second;
        };
        for (const auto& e : doc.at("edges")) {
            if (!e.is_array() || e.size() != 2)
                throw FormatError("DFG document: edge must be [src, dst]");
            g.edges.emplace_back(lookup(e[0].get<long long>()), lookup(e[1].get<long long>()));
        }
        std::sort(g.edges.begin(), g.edges.end());
        g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
        for (const auto& r : doc.at("roots"))
            g.roots.push_back(lookup(r.get<long long>()));
        g.validate();
        return g;
    } catch (const json::exception& e) {
        throw FormatError(std::string("DFG document: ") + e.what());
    }
}

} // namespace ipsim
