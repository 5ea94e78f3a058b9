#include "ipsim/detector.hpp"

#include "ipsim/flatten.hpp"
#include "ipsim/parser.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

namespace ipsim {

double cosine_similarity(const Embedding& h1, const Embedding& h2) {
    if (h1.size() != h2.size())
        throw ShapeError("cosine_similarity: lengths " + std::to_string(h1.size()) + " and " +
                         std::to_string(h2.size()));
    const double n1 = h1.norm(), n2 = h2.norm();
    if (!(n1 > 0.0) || !(n2 > 0.0))
        throw ZeroEmbedding();
    return std::clamp(h1.dot(h2) / (n1 * n2), -1.0, 1.0);
}

Verdict decide(double score, double delta) { return Verdict{score, delta, score > delta}; }

std::string DesignRef::display() const {
    std::string out;
    for (const auto& p : paths)
        out += (out.empty() ? "" : "+") + p;
    return out;
}

namespace {

template <typename F>
auto stage(const char* name, const DesignRef& design, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        std::throw_with_nested(StageError(name, design.display(), e.what()));
    }
}

} // namespace

DataFlowGraph extract_dfg(const DesignRef& design, const TrimOptions& trim_options) {
    SourceUnit unit = stage("read", design, [&] { return load_unit(design.paths, design.top); });
    auto files = stage("preprocess", design, [&] { return preprocess(unit); });
    Ast ast = stage("parse", design, [&] { return parse(files); });
    FlatModule flat = stage("flatten", design, [&] { return flatten_hierarchy(ast, design.top); });
    return stage("dfg", design, [&] { return trim(build_dfg(flat), trim_options); });
}

Embedding embed_design(const DesignRef& design, const ModelParams& params, const TrimOptions& trim_options) {
    DataFlowGraph g = extract_dfg(design, trim_options);
    GraphTensors t = stage("encode", design, [&] { return encode(g); });
    return stage("embed", design, [&] { return embed(t, params); });
}

Verdict compare_designs(const DesignRef& a, const DesignRef& b, const ModelParams& params, double delta) {
    Embedding ha = embed_design(a, params);
    Embedding hb = embed_design(b, params);
    return decide(cosine_similarity(ha, hb), delta);
}

} // namespace ipsim

namespace ipsim {

double Confusion::accuracy() const {
    return total() == 0 ? 0.0 : static_cast<double>(tp + tn) / static_cast<double>(total());
}

Confusion confusion(const std::vector<double>& scores, const std::vector<int>& labels, double delta) {
    if (scores.size() != labels.size())
        throw ShapeError("scores and labels differ in length");
    Confusion c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        bool piracy = decide(scores[i], delta).piracy;
        if (labels[i] == 1)
            ++(piracy ? c.tp : c.fn);
        else if (labels[i] == -1)
            ++(piracy ? c.fp : c.tn);
        else
            throw Error("pair label must be 1 or -1");
    }
    return c;
}

std::vector<SweepPoint> delta_sweep(const std::vector<double>& scores, const std::vector<int>& labels,
                                    const std::vector<double>& deltas) {
    std::vector<SweepPoint> out;
    for (double d : deltas)
        out.push_back({d, confusion(scores, labels, d)});
    return out;
}

std::vector<double> delta_grid(int steps) {
    if (steps < 2)
        throw Error("a threshold sweep needs at least two steps");
    std::vector<double> out;
    for (int i = 0; i < steps; ++i)
        out.push_back((2.0 * static_cast<double>(i) - static_cast<double>(steps - 1)) / static_cast<double>(steps - 1));
    return out;
}

SweepPoint best_delta(const std::vector<SweepPoint>& sweep) {
    if (sweep.empty())
        throw Error("empty threshold sweep");
    SweepPoint best = sweep.front();
    for (const auto& p : sweep) {
        double a = p.counts.accuracy(), b = best.counts.accuracy();
        double da = std::abs(p.delta - kDefaultDelta), db = std::abs(best.delta - kDefaultDelta);
        if (a > b || (a == b && (da < db || (da == db && p.delta < best.delta))))
            best = p;
    }
    return best;
}

} // namespace ipsim
