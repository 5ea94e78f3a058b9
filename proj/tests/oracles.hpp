#pragma once

// Reference implementations used as test oracles. They work on plain nested
// vectors with explicit loops and share no code with the library's numeric
// path.

#include "ipsim/dfg.hpp"
#include "ipsim/hw2vec.hpp"
#include "ipsim/random.hpp"
#include "ipsim/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;
using Vec = std::vector<double>;

inline Mat to_mat(const Eigen::MatrixXd& m) {
    Mat out(static_cast<std::size_t>(m.rows()), Vec(static_cast<std::size_t>(m.cols())));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            out[r][c] = m(r, c);
    return out;
}

inline Mat matmul(const Mat& a, const Mat& b) {
    std::size_t n = a.size(), k = b.size(), m = b.empty() ? 0 : b[0].size();
    Mat out(n, Vec(m, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double s = 0.0;
            for (std::size_t t = 0; t < k; ++t)
                s += a[i][t] * b[t][j];
            out[i][j] = s;
        }
    return out;
}

/// Symmetrized adjacency of a DFG, no self loops.
inline Mat adjacency(const ipsim::DataFlowGraph& g) {
    std::size_t n = g.size();
    Mat a(n, Vec(n, 0.0));
    for (const auto& [s, d] : g.edges)
        if (s != d)
            a[s][d] = a[d][s] = 1.0;
    return a;
}

/// D^-1/2 (A + I) D^-1/2 entry by entry.
inline Mat normalized(const Mat& a) {
    std::size_t n = a.size();
    Vec deg(n, 1.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j)
                deg[i] += a[i][j];
    Mat p(n, Vec(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double ahat = (i == j) ? 1.0 : a[i][j];
            p[i][j] = ahat / std::sqrt(deg[i] * deg[j]);
        }
    return p;
}

inline Mat one_hot(const ipsim::DataFlowGraph& g) {
    Mat x(g.size(), Vec(ipsim::kNodeKindCount, 0.0));
    for (const auto& node : g.nodes)
        x[node.id][static_cast<std::size_t>(node.kind)] = 1.0;
    return x;
}

inline Mat relu(Mat m) {
    for (auto& row : m)
        for (auto& v : row)
            v = std::max(0.0, v);
    return m;
}

/// Inference-mode embedding, step by step.
inline Vec embed(const ipsim::DataFlowGraph& g, const ipsim::ModelParams& params) {
    Mat p = normalized(adjacency(g));
    Mat h = one_hot(g);
    for (const auto& w : params.gcn_weights)
        h = relu(matmul(matmul(p, h), to_mat(w)));
    Mat alpha_m = matmul(matmul(p, h), to_mat(params.score_weight));
    std::size_t n = h.size();
    std::size_t k = static_cast<std::size_t>(std::ceil(params.hyper.pool_ratio * static_cast<double>(n)));
    k = std::max<std::size_t>(1, std::min(k, n));
    // Selection sort by (-alpha, id).
    std::vector<bool> taken(n, false);
    std::vector<std::size_t> sel;
    for (std::size_t r = 0; r < k; ++r) {
        std::size_t best = n;
        for (std::size_t i = 0; i < n; ++i)
            if (!taken[i] && (best == n || alpha_m[i][0] > alpha_m[best][0]))
                best = i;
        taken[best] = true;
        sel.push_back(best);
    }
    std::sort(sel.begin(), sel.end());
    std::size_t d = h[0].size();
    Vec out(d, 0.0);
    for (std::size_t c = 0; c < d; ++c) {
        std::vector<double> col;
        for (std::size_t i : sel)
            col.push_back(h[i][c] * std::tanh(alpha_m[i][0]));
        switch (params.hyper.readout) {
        case ipsim::ReadoutMode::Max: out[c] = *std::max_element(col.begin(), col.end()); break;
        case ipsim::ReadoutMode::Mean:
            out[c] = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(col.size());
            break;
        case ipsim::ReadoutMode::Sum: out[c] = std::accumulate(col.begin(), col.end(), 0.0); break;
        }
    }
    return out;
}

/// Jacobi eigenvalue iteration for a symmetric matrix; returns eigenvalues
/// and eigenvectors (columns), unsorted.
inline std::pair<Vec, Mat> jacobi_eigen(Mat a) {
    std::size_t n = a.size();
    Mat v(n, Vec(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        v[i][i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                off += a[i][j] * a[i][j];
        if (off < 1e-30)
            break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-300)
                    continue;
                double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
    }
    Vec ev(n);
    for (std::size_t i = 0; i < n; ++i)
        ev[i] = a[i][i];
    return {ev, v};
}

/// Random DFG with n nodes: node 0 is an Output root, the rest get random
/// kinds, and every node i > 0 has an edge from some earlier node so the
/// graph is connected.
inline ipsim::DataFlowGraph random_graph(ipsim::Rng& rng, int n, double extra_edge_p = 0.2) {
    ipsim::DataFlowGraph g;
    g.name = "random";
    for (int i = 0; i < n; ++i) {
        auto kind = i == 0 ? ipsim::NodeKind::Output
                           : static_cast<ipsim::NodeKind>(rng.below(ipsim::kNodeKindCount));
        g.nodes.push_back({i, kind, std::nullopt});
    }
    for (int i = 1; i < n; ++i)
        g.edges.emplace_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(i))), i);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (rng.uniform() < extra_edge_p)
                g.edges.emplace_back(i, j);
    std::sort(g.edges.begin(), g.edges.end());
    g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
    g.roots = {0};
    return g;
}

/// Relabels node i as perm[i].
inline ipsim::DataFlowGraph permute(const ipsim::DataFlowGraph& g, const std::vector<int>& perm) {
    ipsim::DataFlowGraph out;
    out.name = g.name;
    out.nodes.resize(g.size());
    for (const auto& node : g.nodes)
        out.nodes[perm[node.id]] = {perm[node.id], node.kind, node.label};
    for (const auto& [s, d] : g.edges)
        out.edges.emplace_back(perm[s], perm[d]);
    std::sort(out.edges.begin(), out.edges.end());
    for (int r : g.roots)
        out.roots.push_back(perm[r]);
    std::sort(out.roots.begin(), out.roots.end());
    return out;
}

/// Non-differentiable choices made by one forward pass.
struct Pattern {
    std::vector<std::vector<bool>> active;
    std::vector<Eigen::Index> selected, argmax;
    bool operator==(const Pattern&) const = default;
};

inline Pattern pattern_of(const ipsim::ForwardTrace& t) {
    Pattern p;
    for (const auto& z : t.Z) {
        std::vector<bool> a;
        for (Eigen::Index i = 0; i < z.size(); ++i)
            a.push_back(z.data()[i] > 0.0);
        p.active.push_back(a);
    }
    p.selected = t.selected;
    p.argmax = t.argmax;
    return p;
}

struct FdReport {
    double max_rel_err = 0.0;
    std::size_t checked = 0, skipped = 0;
    std::vector<std::size_t> per_tensor; // checked entries, ModelParams::tensors() order
};

/// Central differences (step h) of the pair loss against pair_gradient for
/// every parameter entry. Entries whose perturbation changes a ReLU, top-k
/// or argmax decision, or crosses the hinge, are skipped.
inline FdReport finite_difference(const ipsim::GraphTensors& a, const ipsim::GraphTensors& b, int y,
                                  const ipsim::ModelParams& params, double margin, bool training,
                                  std::uint64_t seed, double h = 1e-5) {
    using namespace ipsim;
    auto eval = [&](const ModelParams& p, Pattern& pa, Pattern& pb) {
        ForwardTrace ta, tb;
        Embedding ha = ipsim::embed(a, p, training, mix_seed(seed, 0), &ta);
        Embedding hb = ipsim::embed(b, p, training, mix_seed(seed, 1), &tb);
        pa = pattern_of(ta);
        pb = pattern_of(tb);
        double s = ha.dot(hb) / (ha.norm() * hb.norm());
        return s;
    };
    PairGradient analytic = pair_gradient(a, b, y, params, margin, training, seed);
    Pattern base_a, base_b;
    double base_score = eval(params, base_a, base_b);
    FdReport rep;
    auto grads = analytic.grads.tensors();
    ModelParams probe = params;
    auto tensors = probe.tensors();
    rep.per_tensor.assign(tensors.size(), 0);
    for (std::size_t t = 0; t < tensors.size(); ++t) {
        for (Eigen::Index i = 0; i < tensors[t]->size(); ++i) {
            double orig = tensors[t]->data()[i];
            Pattern pa1, pb1, pa2, pb2;
            tensors[t]->data()[i] = orig + h;
            double s1 = eval(probe, pa1, pb1);
            tensors[t]->data()[i] = orig - h;
            double s2 = eval(probe, pa2, pb2);
            tensors[t]->data()[i] = orig;
            bool hinge_cross = y == -1 && ((s1 > margin) != (base_score > margin) ||
                                           (s2 > margin) != (base_score > margin));
            if (!(pa1 == base_a && pb1 == base_b && pa2 == base_a && pb2 == base_b) || hinge_cross) {
                ++rep.skipped;
                continue;
            }
            double numeric = (cosine_embedding_loss(s1, y, margin) - cosine_embedding_loss(s2, y, margin)) / (2 * h);
            double exact = grads[t]->data()[i];
            double denom = std::max({std::abs(numeric), std::abs(exact), 1e-6});
            rep.max_rel_err = std::max(rep.max_rel_err, std::abs(numeric - exact) / denom);
            ++rep.checked;
            ++rep.per_tensor[t];
        }
    }
    return rep;
}

} // namespace oracle
