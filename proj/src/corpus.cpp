#include "ipsim/corpus.hpp"

#include "ipsim/detector.hpp"
#include "ipsim/flatten.hpp"
#include "ipsim/io.hpp"
#include "ipsim/parallel.hpp"
#include "ipsim/parser.hpp"
#include "ipsim/random.hpp"
#include "ipsim/verilog_writer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace ipsim {

const char* abstraction_name(Abstraction a) { return a == Abstraction::Rtl ? "rtl" : "netlist"; }

Abstraction abstraction_from_name(const std::string& name) {
    if (name == "rtl")
        return Abstraction::Rtl;
    if (name == "netlist")
        return Abstraction::Netlist;
    throw FormatError("abstraction must be rtl or netlist, got '" + name + "'");
}

namespace {

std::string trim_ws(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ','))
        out.push_back(trim_ws(field));
    if (!line.empty() && line.back() == ',')
        out.push_back("");
    return out;
}

void sort_families(std::vector<DesignFamily>& families) {
    for (auto& f : families)
        std::sort(f.members.begin(), f.members.end(),
                  [](const DesignEntry& a, const DesignEntry& b) { return a.path < b.path; });
    std::sort(families.begin(), families.end(),
              [](const DesignFamily& a, const DesignFamily& b) { return a.id < b.id; });
}

std::vector<DesignFamily> scan_directory(const fs::path& root) {
    std::vector<DesignFamily> families;
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory())
            dirs.push_back(entry.path());
    for (const auto& dir : dirs) {
        DesignFamily fam;
        fam.id = dir.filename().string();
        for (const auto& entry : fs::recursive_directory_iterator(dir)) {
            if (!entry.is_regular_file() || entry.path().extension() != ".v")
                continue;
            DesignEntry d;
            d.path = entry.path().string();
            const std::string stem = entry.path().stem().string();
            bool netlist = stem.size() >= 8 && stem.compare(stem.size() - 8, 8, "_netlist") == 0;
            for (const auto& part : fs::relative(entry.path(), dir))
                netlist = netlist || part == "netlist";
            d.abstraction = netlist ? Abstraction::Netlist : Abstraction::Rtl;
            fam.members.push_back(std::move(d));
        }
        if (!fam.members.empty())
            families.push_back(std::move(fam));
    }
    return families;
}

std::string failure_reason(const std::exception& e) {
    try {
        std::rethrow_if_nested(e);
    } catch (const UnsupportedConstruct& u) {
        return u.diagnostic();
    } catch (const std::exception& inner) {
        return inner.what();
    }
    return e.what();
}

} // namespace

std::vector<DesignFamily> parse_manifest(const std::string& text, const std::string& base_dir) {
    std::map<std::string, DesignFamily> by_id;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        if (trim_ws(line).empty())
            continue;
        auto fields = split_commas(line);
        if (fields.size() != 3 || fields[0].empty() || fields[1].empty())
            throw FormatError("manifest line " + std::to_string(lineno) + ": expected `family_id, path, rtl|netlist`");
        DesignEntry d;
        fs::path p(fields[1]);
        d.path = (p.is_relative() && !base_dir.empty() ? fs::path(base_dir) / p : p).lexically_normal().string();
        try {
            d.abstraction = abstraction_from_name(fields[2]);
        } catch (const FormatError& e) {
            throw FormatError("manifest line " + std::to_string(lineno) + ": " + e.what());
        }
        if (!seen.insert(d.path).second)
            throw FormatError("manifest line " + std::to_string(lineno) + ": duplicate path " + d.path);
        auto& fam = by_id[fields[0]];
        fam.id = fields[0];
        fam.members.push_back(std::move(d));
    }
    std::vector<DesignFamily> out;
    for (auto& [id, fam] : by_id)
        out.push_back(std::move(fam));
    sort_families(out);
    return out;
}

std::string write_manifest(const std::vector<DesignFamily>& families, const std::string& base_dir) {
    std::string out;
    for (const auto& f : families)
        for (const auto& m : f.members) {
            std::string path = base_dir.empty() ? m.path : fs::path(m.path).lexically_relative(base_dir).string();
            out += f.id + ", " + path + ", " + abstraction_name(m.abstraction) + "\n";
        }
    return out;
}

ScanResult scan(const std::string& root, const std::string& manifest, std::size_t threads) {
    std::vector<DesignFamily> families;
    std::string manifest_path = manifest;
    if (manifest_path.empty() && fs::is_regular_file(fs::path(root) / "manifest.txt"))
        manifest_path = (fs::path(root) / "manifest.txt").string();
    if (!manifest_path.empty()) {
        families = parse_manifest(read_text_file(manifest_path), fs::path(manifest_path).parent_path().string());
    } else {
        if (!fs::is_directory(root))
            throw Error("corpus root '" + root + "' is not a directory");
        families = scan_directory(root);
    }
    sort_families(families);

    std::vector<const DesignEntry*> all;
    for (const auto& f : families)
        for (const auto& m : f.members)
            all.push_back(&m);
    std::vector<std::string> failure(all.size());
    parallel_for(
        all.size(),
        [&](std::size_t i) {
            try {
                extract_dfg(DesignRef(all[i]->path));
            } catch (const std::exception& e) {
                failure[i] = failure_reason(e);
                if (failure[i].empty())
                    failure[i] = "unknown failure";
            }
        },
        threads);

    ScanResult result;
    std::set<std::string> bad;
    for (std::size_t i = 0; i < all.size(); ++i)
        if (!failure[i].empty()) {
            result.skipped.push_back({all[i]->path, failure[i]});
            bad.insert(all[i]->path);
        }
    for (auto& f : families) {
        DesignFamily kept{f.id, {}};
        for (auto& m : f.members)
            if (!bad.count(m.path))
                kept.members.push_back(m);
        if (!kept.members.empty())
            result.families.push_back(std::move(kept));
    }
    if (result.families.empty())
        throw Error("empty corpus: no usable designs under '" + root + "'");
    return result;
}

std::vector<PairRecord> make_pairs(const std::vector<DesignFamily>& families, bool mix_abstractions) {
    std::size_t nonempty = 0;
    for (const auto& f : families)
        nonempty += !f.members.empty();
    if (nonempty < 2)
        throw Error("pair generation needs at least two design families");
    struct Item {
        std::size_t family;
        const DesignEntry* entry;
    };
    std::vector<Item> items;
    for (std::size_t f = 0; f < families.size(); ++f)
        for (const auto& m : families[f].members)
            items.push_back({f, &m});
    std::vector<PairRecord> out;
    for (std::size_t i = 0; i < items.size(); ++i)
        for (std::size_t j = i + 1; j < items.size(); ++j) {
            if (!mix_abstractions && items[i].entry->abstraction != items[j].entry->abstraction)
                continue;
            out.push_back({items[i].entry->path, items[j].entry->path,
                           items[i].family == items[j].family ? 1 : -1, Split::Train});
        }
    return out;
}

std::vector<PairRecord> split(std::vector<PairRecord> pairs, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw Error("test fraction must lie strictly between 0 and 1");
    for (int label : {1, -1}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < pairs.size(); ++i)
            if (pairs[i].label == label)
                idx.push_back(i);
        Rng rng(mix_seed(seed, label == 1 ? 1 : 2));
        rng.shuffle(idx);
        auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(idx.size())));
        for (std::size_t k = 0; k < idx.size(); ++k)
            pairs[idx[k]].split = k < n_test ? Split::Test : Split::Train;
    }
    return pairs;
}

std::string write_pair_manifest(const std::vector<PairRecord>& pairs) {
    std::string out = "a_path,b_path,label,split\n";
    for (const auto& p : pairs) {
        for (const auto* s : {&p.a, &p.b})
            if (s->find_first_of(",\n\"") != std::string::npos)
                throw Error("path not representable in the pair manifest: " + *s);
        out += p.a + "," + p.b + "," + (p.label == 1 ? "1" : "-1") + "," +
               (p.split == Split::Test ? "test" : "train") + "\n";
    }
    return out;
}

std::vector<PairRecord> parse_pair_manifest(const std::string& text) {
    std::vector<PairRecord> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim_ws(line).empty())
            continue;
        auto f = split_commas(line);
        if (lineno == 1 && !f.empty() && f[0] == "a_path")
            continue;
        auto bad = [&](const std::string& what) {
            return FormatError("pair manifest line " + std::to_string(lineno) + ": " + what);
        };
        if (f.size() != 4)
            throw bad("expected 4 fields `a_path,b_path,label,split`");
        PairRecord p;
        p.a = f[0];
        p.b = f[1];
        if (p.a.empty() || p.b.empty())
            throw bad("empty path");
        if (f[2] == "1" || f[2] == "+1")
            p.label = 1;
        else if (f[2] == "-1")
            p.label = -1;
        else
            throw bad("label must be 1 or -1");
        if (f[3] == "train")
            p.split = Split::Train;
        else if (f[3] == "test")
            p.split = Split::Test;
        else
            throw bad("split must be train or test");
        out.push_back(std::move(p));
    }
    return out;
}

Dataset load_dataset(const std::vector<PairRecord>& pairs, std::size_t threads) {
    Dataset ds;
    std::map<std::string, std::size_t> index;
    auto intern = [&](const std::string& path) {
        auto [it, fresh] = index.emplace(path, ds.designs.size());
        if (fresh)
            ds.designs.push_back(path);
        return it->second;
    };
    for (const auto& p : pairs) {
        TrainPair tp;
        tp.a = intern(p.a);
        tp.b = intern(p.b);
        tp.label = p.label;
        tp.test = p.split == Split::Test;
        ds.pairs.push_back(tp);
    }
    ds.graphs.resize(ds.designs.size());
    parallel_for(
        ds.designs.size(), [&](std::size_t i) { ds.graphs[i] = encode(extract_dfg(DesignRef(ds.designs[i]))); },
        threads);
    return ds;
}

const char* transform_name(Transform t) {
    switch (t) {
    case Transform::Rename: return "rename";
    case Transform::ReorderDecls: return "reorder-decls";
    case Transform::ReorderStatements: return "reorder-statements";
    case Transform::Wrapper: return "wrapper";
    case Transform::SplitAssigns: return "split-assigns";
    }
    return "rename";
}

Transform transform_from_name(const std::string& name) {
    for (Transform t : all_transforms())
        if (name == transform_name(t))
            return t;
    throw Error("unknown transform '" + name +
                "' (expected rename, reorder-decls, reorder-statements, wrapper or split-assigns)");
}

const std::vector<Transform>& all_transforms() {
    static const std::vector<Transform> all = {Transform::Rename, Transform::ReorderDecls,
                                               Transform::ReorderStatements, Transform::Wrapper,
                                               Transform::SplitAssigns};
    return all;
}

namespace {

class NameSource {
public:
    NameSource(const Ast& ast, Rng& rng) : rng_(rng) {
        for (const auto& m : ast.modules) {
            used_.insert(m.name);
            for (const auto& p : m.ports)
                used_.insert(p.name);
            for (const auto& item : m.items)
                std::visit([&](const auto& it) { note(it); }, item);
        }
    }

    std::string fresh(const std::string& prefix) {
        static const char* alphabet = "abcdefghijklmnopqrstuvwxyz0123456789";
        for (;;) {
            std::string name = prefix;
            for (int i = 0; i < 5; ++i)
                name += alphabet[rng_.below(i == 0 ? 26 : 36)];
            if (!is_verilog_keyword(name) && used_.insert(name).second)
                return name;
        }
    }

private:
    void note(const NetDecl& n) { used_.insert(n.name); }
    void note(const ParamDecl& p) { used_.insert(p.name); }
    void note(const GateInstance& g) { used_.insert(g.name); }
    void note(const ModuleInstance& i) { used_.insert(i.name); }
    template <typename T>
    void note(const T&) {}

    Rng& rng_;
    std::set<std::string> used_;
};

std::optional<Range> range_of(const ModuleDecl& m, const std::string& signal) {
    if (const auto* p = m.find_port(signal))
        return p->range;
    for (const auto* n : m.items_of<NetDecl>())
        if (n->name == signal)
            return n->range;
    return std::nullopt;
}

std::string base_name(const Expr& lhs) {
    const Expr* e = &lhs;
    while (e->kind == Expr::Kind::Select)
        e = e->operands[0].get();
    return e->kind == Expr::Kind::Identifier ? e->text : "";
}

bool splittable(const Expr& e) {
    return e.kind == Expr::Kind::Unary || e.kind == Expr::Kind::Binary || e.kind == Expr::Kind::Ternary ||
           e.kind == Expr::Kind::Concat || e.kind == Expr::Kind::Replicate;
}

// Counts proper subexpressions that can move into their own wire. Select
// operands and replication counts stay in place.
void collect_sites(const Expr& e, bool is_root, int& count) {
    if (!is_root && splittable(e))
        ++count;
    if (e.kind == Expr::Kind::Select)
        return;
    for (std::size_t i = 0; i < e.operands.size(); ++i) {
        if (e.kind == Expr::Kind::Replicate && i == 0)
            continue;
        collect_sites(*e.operands[i], false, count);
    }
}

ExprPtr replace_site(const ExprPtr& e, bool is_root, int& index, const ExprPtr& with, ExprPtr& taken) {
    if (!is_root && splittable(*e)) {
        if (index-- == 0) {
            taken = e;
            return with;
        }
    }
    if (e->kind == Expr::Kind::Select)
        return e;
    auto copy = std::make_shared<Expr>(*e);
    for (std::size_t i = 0; i < copy->operands.size(); ++i) {
        if (e->kind == Expr::Kind::Replicate && i == 0)
            continue;
        copy->operands[i] = replace_site(e->operands[i], false, index, with, taken);
        if (taken)
            break;
    }
    return copy;
}

void split_assigns(Ast& ast, Rng& rng, NameSource& names) {
    for (auto& m : ast.modules) {
        std::vector<ModuleItem> out;
        std::vector<ModuleItem> fresh_nets;
        for (auto& item : m.items) {
            auto* a = std::get_if<ContinuousAssign>(&item);
            if (!a) {
                out.push_back(std::move(item));
                continue;
            }
            int sites = 0;
            collect_sites(*a->rhs, true, sites);
            if (sites == 0 || rng.uniform() < 0.3) {
                out.push_back(std::move(item));
                continue;
            }
            int index = static_cast<int>(rng.below(static_cast<std::uint64_t>(sites)));
            std::string wire = names.fresh("t_");
            ExprPtr taken;
            ExprPtr rhs = replace_site(a->rhs, true, index, Expr::identifier(wire, a->loc), taken);
            NetDecl n;
            n.name = wire;
            n.range = range_of(m, base_name(*a->lhs));
            n.loc = a->loc;
            fresh_nets.emplace_back(std::move(n));
            out.emplace_back(ContinuousAssign{Expr::identifier(wire, a->loc), taken, a->loc});
            out.emplace_back(ContinuousAssign{a->lhs, rhs, a->loc});
        }
        fresh_nets.insert(fresh_nets.end(), std::make_move_iterator(out.begin()), std::make_move_iterator(out.end()));
        m.items = std::move(fresh_nets);
    }
}

void reorder_decls(Ast& ast, Rng& rng) {
    for (auto& m : ast.modules) {
        std::vector<ModuleItem> nets, params, rest;
        for (auto& item : m.items) {
            if (std::holds_alternative<NetDecl>(item))
                nets.push_back(std::move(item));
            else if (std::holds_alternative<ParamDecl>(item))
                params.push_back(std::move(item));
            else
                rest.push_back(std::move(item));
        }
        rng.shuffle(nets);
        m.items.clear();
        for (auto* group : {&params, &nets, &rest})
            for (auto& item : *group)
                m.items.push_back(std::move(item));
    }
}

void reorder_statements(Ast& ast, Rng& rng) {
    for (auto& m : ast.modules) {
        std::vector<std::size_t> slots;
        std::vector<ModuleItem> stmts;
        for (std::size_t i = 0; i < m.items.size(); ++i)
            if (!std::holds_alternative<NetDecl>(m.items[i]) && !std::holds_alternative<ParamDecl>(m.items[i])) {
                slots.push_back(i);
                stmts.push_back(m.items[i]);
            }
        rng.shuffle(stmts);
        for (std::size_t k = 0; k < slots.size(); ++k)
            m.items[slots[k]] = std::move(stmts[k]);
    }
}

void add_wrapper(Ast& ast, NameSource& names) {
    const std::string top_name = ast.default_top();
    const ModuleDecl* top = ast.find(top_name);
    if (!top)
        return;
    ModuleDecl w;
    w.name = names.fresh("wrap_");
    w.loc = top->loc;
    ModuleInstance inst;
    inst.module = top->name;
    inst.name = names.fresh("u_");
    inst.loc = top->loc;
    for (const auto* p : top->items_of<ParamDecl>()) {
        w.items.emplace_back(*p);
        if (!p->local)
            inst.params.push_back({p->name, Expr::identifier(p->name)});
    }
    for (const auto& p : top->ports) {
        PortDecl q = p;
        q.is_reg = false;
        w.ports.push_back(q);
        inst.connections.push_back({p.name, Expr::identifier(p.name)});
    }
    w.items.emplace_back(std::move(inst));
    ast.modules.push_back(std::move(w));
}

using NameMap = std::map<std::string, std::string>;

ExprPtr rename_expr(const ExprPtr& e, const NameMap& map) {
    if (!e)
        return e;
    return map_identifiers(e, [&](const Expr& id) {
        auto it = map.find(id.text);
        return it == map.end() ? Expr::identifier(id.text, id.loc) : Expr::identifier(it->second, id.loc);
    });
}

void rename_all(Ast& ast, NameSource& names) {
    NameMap module_names;
    std::map<std::string, NameMap> local;
    for (const auto& m : ast.modules) {
        module_names[m.name] = names.fresh("m_");
        NameMap& map = local[m.name];
        for (const auto& p : m.ports)
            map[p.name] = names.fresh("p_");
        for (const auto& item : m.items) {
            if (const auto* n = std::get_if<NetDecl>(&item))
                map[n->name] = names.fresh("w_");
            else if (const auto* p = std::get_if<ParamDecl>(&item))
                map[p->name] = names.fresh("k_");
            else if (const auto* g = std::get_if<GateInstance>(&item); g && !g->name.empty())
                map[g->name] = names.fresh("g_");
            else if (const auto* i = std::get_if<ModuleInstance>(&item))
                map[i->name] = names.fresh("u_");
        }
    }
    auto lookup = [](const NameMap& map, const std::string& name) {
        auto it = map.find(name);
        return it == map.end() ? name : it->second;
    };
    for (auto& m : ast.modules) {
        const NameMap& map = local.at(m.name);
        for (auto& p : m.ports) {
            p.name = lookup(map, p.name);
            if (p.range)
                p.range = Range{rename_expr(p.range->msb, map), rename_expr(p.range->lsb, map)};
        }
        for (auto& item : m.items) {
            std::visit(
                [&](auto& it) {
                    using T = std::decay_t<decltype(it)>;
                    if constexpr (std::is_same_v<T, NetDecl>) {
                        it.name = lookup(map, it.name);
                        if (it.range)
                            it.range = Range{rename_expr(it.range->msb, map), rename_expr(it.range->lsb, map)};
                    } else if constexpr (std::is_same_v<T, ParamDecl>) {
                        it.name = lookup(map, it.name);
                        it.value = rename_expr(it.value, map);
                    } else if constexpr (std::is_same_v<T, ContinuousAssign>) {
                        it.lhs = rename_expr(it.lhs, map);
                        it.rhs = rename_expr(it.rhs, map);
                    } else if constexpr (std::is_same_v<T, AlwaysBlock>) {
                        for (auto& s : it.sensitivity)
                            s.signal = rename_expr(s.signal, map);
                        it.body = map_identifiers(it.body, [&](const Expr& id) {
                            return Expr::identifier(lookup(map, id.text), id.loc);
                        });
                    } else if constexpr (std::is_same_v<T, GateInstance>) {
                        if (!it.name.empty())
                            it.name = lookup(map, it.name);
                        for (auto& t : it.terminals)
                            t = rename_expr(t, map);
                    } else if constexpr (std::is_same_v<T, ModuleInstance>) {
                        auto child = local.find(it.module);
                        it.name = lookup(map, it.name);
                        for (auto& p : it.params) {
                            if (!p.name.empty() && child != local.end())
                                p.name = lookup(child->second, p.name);
                            p.value = rename_expr(p.value, map);
                        }
                        for (auto& c : it.connections) {
                            if (!c.port.empty() && child != local.end())
                                c.port = lookup(child->second, c.port);
                            c.expr = rename_expr(c.expr, map);
                        }
                        it.module = lookup(module_names, it.module);
                    }
                },
                item);
        }
        m.name = module_names.at(m.name);
    }
}

} // namespace

Ast apply_transforms(const Ast& input, const std::vector<Transform>& transforms, std::uint64_t seed) {
    Ast ast = input;
    Rng name_rng(mix_seed(seed, 100));
    NameSource names(ast, name_rng);
    auto has = [&](Transform t) { return std::find(transforms.begin(), transforms.end(), t) != transforms.end(); };
    if (has(Transform::SplitAssigns)) {
        Rng rng(mix_seed(seed, 1));
        split_assigns(ast, rng, names);
    }
    if (has(Transform::ReorderDecls)) {
        Rng rng(mix_seed(seed, 2));
        reorder_decls(ast, rng);
    }
    if (has(Transform::ReorderStatements)) {
        Rng rng(mix_seed(seed, 3));
        reorder_statements(ast, rng);
    }
    if (has(Transform::Wrapper))
        add_wrapper(ast, names);
    if (has(Transform::Rename))
        rename_all(ast, names);
    return ast;
}

std::vector<Variant> synthesize_variants(const std::string& path, const std::vector<Transform>& transforms,
                                         int count, std::uint64_t seed) {
    const std::vector<Transform>& pool = transforms.empty() ? all_transforms() : transforms;
    Ast ast;
    try {
        ast = parse(preprocess(load_unit({path})));
    } catch (const std::exception& e) {
        std::throw_with_nested(StageError("parse", path, e.what()));
    }
    const std::string stem = fs::path(path).stem().string();
    std::vector<Variant> out;
    for (int i = 0; i < count; ++i) {
        Rng pick(mix_seed(seed, 0x7a000 + static_cast<std::uint64_t>(i)));
        std::vector<Transform> chosen;
        for (Transform t : pool)
            if (pick.uniform() < 0.5)
                chosen.push_back(t);
        if (chosen.empty())
            chosen.push_back(pool[pick.below(pool.size())]);
        Variant v;
        v.name = stem + "_v" + std::to_string(i + 1);
        v.applied = chosen;
        std::string header = "// variant of " + fs::path(path).filename().string() + ":";
        for (Transform t : chosen)
            header += std::string(" ") + transform_name(t);
        v.text = header + "\n" +
                 write_verilog(apply_transforms(ast, chosen, mix_seed(seed, static_cast<std::uint64_t>(i))));
        out.push_back(std::move(v));
    }
    return out;
}

bool dataflow_equivalent(const std::string& path_a, const std::string& path_b) {
    return isomorphic(extract_dfg(DesignRef(path_a)), extract_dfg(DesignRef(path_b)));
}

} // namespace ipsim
