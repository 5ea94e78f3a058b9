#pragma once

#include "ipsim/dfg.hpp"
#include "ipsim/hw2vec.hpp"

#include <string>
#include <vector>

namespace ipsim {

inline constexpr double kDefaultDelta = 0.5;

/// (h1 . h2) / (|h1| |h2|) clamped to [-1, 1]. Throws ZeroEmbedding when
/// either norm is zero and ShapeError on length mismatch.
double cosine_similarity(const Embedding& h1, const Embedding& h2);

struct Verdict {
    double score = 0.0;
    double delta = kDefaultDelta;
    bool piracy = false;

    const char* label() const { return piracy ? "piracy" : "no-piracy"; }
};

/// piracy iff score > delta.
Verdict decide(double score, double delta = kDefaultDelta);

/// One design: its source files and optional top module.
struct DesignRef {
    std::vector<std::string> paths;
    std::string top;

    DesignRef() = default;
    DesignRef(std::string path) : paths{std::move(path)} {}
    DesignRef(std::vector<std::string> p, std::string t = "") : paths(std::move(p)), top(std::move(t)) {}
    std::string display() const;
};

/// Files -> trimmed DFG. Failures are rethrown as StageError naming the
/// stage (read, preprocess, parse, flatten, dfg) and the design; the
/// original exception is kept as the nested exception.
DataFlowGraph extract_dfg(const DesignRef& design, const TrimOptions& trim_options = {});

/// extract_dfg + encode + embed (inference mode).
Embedding embed_design(const DesignRef& design, const ModelParams& params, const TrimOptions& trim_options = {});

/// Full check of two designs against a trained model.
Verdict compare_designs(const DesignRef& a, const DesignRef& b, const ModelParams& params, double delta = kDefaultDelta);

struct Confusion {
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;

    std::size_t total() const { return tp + tn + fp + fn; }
    double accuracy() const;
};

/// Counts decisions score > delta against labels (+1 similar, -1 different).
Confusion confusion(const std::vector<double>& scores, const std::vector<int>& labels, double delta);

struct SweepPoint {
    double delta = 0.0;
    Confusion counts;
};

/// Confusion at each delta, in the given order.
std::vector<SweepPoint> delta_sweep(const std::vector<double>& scores, const std::vector<int>& labels,
                                    const std::vector<double>& deltas);

/// `steps` evenly spaced thresholds from -1 to 1 inclusive (steps >= 2).
std::vector<double> delta_grid(int steps);

/// Highest accuracy; ties go to the threshold nearest the default 0.5, then
/// the lower one.
SweepPoint best_delta(const std::vector<SweepPoint>& sweep);

} // namespace ipsim
