#include "ipsim/hw2vec.hpp"

#include "ipsim/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ipsim {

namespace {

std::string shape(const Eigen::MatrixXd& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

Eigen::MatrixXd activate(const Eigen::MatrixXd& Z, Activation act) {
    return act == Activation::Relu ? Eigen::MatrixXd(Z.cwiseMax(0.0)) : Z;
}

Eigen::MatrixXd gated_rows(const Eigen::MatrixXd& H, const std::vector<Eigen::Index>& selected,
                           const Eigen::VectorXd& gate) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(selected.size()), H.cols());
    for (std::size_t i = 0; i < selected.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = H.row(selected[i]) * gate(static_cast<Eigen::Index>(i));
    return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& idx) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = v(idx[i]);
    return out;
}

Embedding readout_impl(const Eigen::MatrixXd& X, ReadoutMode mode, std::vector<Eigen::Index>* argmax) {
    if (X.rows() == 0)
        throw EmptyGraph();
    switch (mode) {
    case ReadoutMode::Max: {
        Embedding h(X.cols());
        if (argmax)
            argmax->assign(static_cast<std::size_t>(X.cols()), 0);
        for (Eigen::Index c = 0; c < X.cols(); ++c) {
            Eigen::Index best = 0;
            for (Eigen::Index r = 1; r < X.rows(); ++r)
                if (X(r, c) > X(best, c))
                    best = r;
            h(c) = X(best, c);
            if (argmax)
                (*argmax)[static_cast<std::size_t>(c)] = best;
        }
        return h;
    }
    case ReadoutMode::Mean:
        return X.colwise().sum().transpose() / static_cast<double>(X.rows());
    case ReadoutMode::Sum:
        return X.colwise().sum().transpose();
    }
    return {};
}

} // namespace

const char* readout_name(ReadoutMode m) {
    switch (m) {
    case ReadoutMode::Max: return "max";
    case ReadoutMode::Mean: return "mean";
    case ReadoutMode::Sum: return "sum";
    }
    return "max";
}

ReadoutMode readout_from_name(const std::string& name) {
    if (name == "max")
        return ReadoutMode::Max;
    if (name == "mean")
        return ReadoutMode::Mean;
    if (name == "sum")
        return ReadoutMode::Sum;
    throw FormatError("unknown readout mode '" + name + "'");
}

ModelParams ModelParams::init(const HyperParams& hyper, std::uint64_t seed, Eigen::Index input_dim) {
    ModelParams p;
    p.hyper = hyper;
    p.input_dim = input_dim;
    Rng rng(seed);
    auto fill = [&](Eigen::Index rows, Eigen::Index cols) {
        double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c)
                m(r, c) = rng.uniform(-bound, bound);
        return m;
    };
    Eigen::Index in = input_dim;
    for (int l = 0; l < hyper.layers; ++l) {
        p.gcn_weights.push_back(fill(in, hyper.hidden));
        in = hyper.hidden;
    }
    p.score_weight = fill(in, 1);
    p.check();
    return p;
}

void ModelParams::check() const {
    if (hyper.layers < 1 || static_cast<int>(gcn_weights.size()) != hyper.layers)
        throw ShapeError("model: expected " + std::to_string(hyper.layers) + " GCN layers, have " +
                         std::to_string(gcn_weights.size()));
    if (!(hyper.pool_ratio > 0.0 && hyper.pool_ratio <= 1.0))
        throw ShapeError("model: pool ratio must lie in (0, 1]");
    if (!(hyper.dropout >= 0.0 && hyper.dropout < 1.0))
        throw ShapeError("model: dropout must lie in [0, 1)");
    Eigen::Index in = input_dim;
    for (std::size_t l = 0; l < gcn_weights.size(); ++l) {
        const auto& W = gcn_weights[l];
        if (W.rows() != in || W.cols() != hyper.hidden)
            throw ShapeError("model: layer " + std::to_string(l) + " weight is " + shape(W) + ", expected " +
                             std::to_string(in) + "x" + std::to_string(hyper.hidden));
        in = W.cols();
    }
    if (score_weight.rows() != in || score_weight.cols() != 1)
        throw ShapeError("model: score weight is " + shape(score_weight) + ", expected " + std::to_string(in) + "x1");
}

std::vector<Eigen::MatrixXd*> ModelParams::tensors() {
    std::vector<Eigen::MatrixXd*> out;
    for (auto& w : gcn_weights)
        out.push_back(&w);
    out.push_back(&score_weight);
    return out;
}

std::vector<const Eigen::MatrixXd*> ModelParams::tensors() const {
    std::vector<const Eigen::MatrixXd*> out;
    for (const auto& w : gcn_weights)
        out.push_back(&w);
    out.push_back(&score_weight);
    return out;
}

ModelGrads ModelGrads::zeros_like(const ModelParams& p) {
    ModelGrads g;
    for (const auto& w : p.gcn_weights)
        g.gcn.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    g.score = Eigen::MatrixXd::Zero(p.score_weight.rows(), p.score_weight.cols());
    return g;
}

std::vector<Eigen::MatrixXd*> ModelGrads::tensors() {
    std::vector<Eigen::MatrixXd*> out;
    for (auto& w : gcn)
        out.push_back(&w);
    out.push_back(&score);
    return out;
}

std::vector<const Eigen::MatrixXd*> ModelGrads::tensors() const {
    std::vector<const Eigen::MatrixXd*> out;
    for (const auto& w : gcn)
        out.push_back(&w);
    out.push_back(&score);
    return out;
}

ModelGrads& ModelGrads::operator+=(const ModelGrads& o) {
    if (gcn.size() != o.gcn.size())
        throw ShapeError("gradient sets differ in layer count");
    for (std::size_t l = 0; l < gcn.size(); ++l)
        gcn[l] += o.gcn[l];
    score += o.score;
    return *this;
}

ModelGrads& ModelGrads::operator*=(double s) {
    for (auto& w : gcn)
        w *= s;
    score *= s;
    return *this;
}

Eigen::MatrixXd gcn_layer(const Eigen::MatrixXd& X, const Eigen::MatrixXd& P, const Eigen::MatrixXd& W,
                          Activation act) {
    if (P.rows() != P.cols() || P.cols() != X.rows() || X.cols() != W.rows())
        throw ShapeError("gcn_layer: P " + shape(P) + ", X " + shape(X) + ", W " + shape(W));
    return activate((P * X) * W, act);
}

Eigen::MatrixXd gcn_layer(const Eigen::MatrixXd& X, const GraphTensors& g, const Eigen::MatrixXd& W,
                          Activation act) {
    if (X.cols() != W.rows())
        throw ShapeError("gcn_layer: X " + shape(X) + ", W " + shape(W));
    return activate(g.propagate(X) * W, act);
}

Eigen::Index pool_size(Eigen::Index n, double ratio) {
    auto k = static_cast<Eigen::Index>(std::ceil(ratio * static_cast<double>(n)));
    return std::clamp<Eigen::Index>(k, 1, std::max<Eigen::Index>(n, 1));
}

std::vector<Eigen::Index> top_k(const Eigen::VectorXd& alpha, Eigen::Index k) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(alpha.size()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    k = std::min(k, alpha.size());
    std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (alpha(a) != alpha(b))
            return alpha(a) > alpha(b);
        return a < b;
    });
    idx.resize(static_cast<std::size_t>(k));
    std::sort(idx.begin(), idx.end());
    return idx;
}

PoolResult sag_pool(const Eigen::MatrixXd& Xprop, const Eigen::MatrixXd& Aprop, const Eigen::MatrixXd& P,
                    const Eigen::MatrixXd& score_weight, double ratio) {
    const Eigen::Index n = Xprop.rows();
    if (n == 0)
        throw EmptyGraph();
    if (Aprop.rows() != n || Aprop.cols() != n || P.rows() != n || P.cols() != n || score_weight.rows() != Xprop.cols() ||
        score_weight.cols() != 1)
        throw ShapeError("sag_pool: X " + shape(Xprop) + ", A " + shape(Aprop) + ", P " + shape(P) + ", s " +
                         shape(score_weight));
    PoolResult r;
    r.alpha = (P * Xprop) * score_weight;
    r.selected = top_k(r.alpha, pool_size(n, ratio));
    r.X = gated_rows(Xprop, r.selected, gather(r.alpha, r.selected).array().tanh().matrix());
    const auto k = static_cast<Eigen::Index>(r.selected.size());
    r.A.resize(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j)
            r.A(i, j) = Aprop(r.selected[static_cast<std::size_t>(i)], r.selected[static_cast<std::size_t>(j)]);
    return r;
}

Embedding readout(const Eigen::MatrixXd& Xpool, ReadoutMode mode) { return readout_impl(Xpool, mode, nullptr); }

Embedding embed(const GraphTensors& g, const ModelParams& params, bool training, std::uint64_t seed,
                ForwardTrace* trace) {
    if (g.X.cols() != params.input_dim)
        throw ShapeError("embed: graph features have " + std::to_string(g.X.cols()) + " columns, model expects " +
                         std::to_string(params.input_dim));
    if (g.size() == 0)
        throw EmptyGraph();
    ForwardTrace local;
    ForwardTrace& t = trace ? *trace : local;
    t = ForwardTrace{};

    const double rate = params.hyper.dropout;
    const bool drop = training && rate > 0.0;
    Eigen::MatrixXd H = g.X;
    for (std::size_t l = 0; l < params.gcn_weights.size(); ++l) {
        Eigen::MatrixXd PH = g.propagate(H);
        Eigen::MatrixXd Z = PH * params.gcn_weights[l];
        H = Z.cwiseMax(0.0);
        Eigen::MatrixXd mask;
        if (drop) {
            Rng rng(mix_seed(seed, l));
            mask.resize(H.rows(), H.cols());
            const double keep_scale = 1.0 / (1.0 - rate);
            for (Eigen::Index r = 0; r < H.rows(); ++r)
                for (Eigen::Index c = 0; c < H.cols(); ++c)
                    mask(r, c) = rng.uniform() < rate ? 0.0 : keep_scale;
            H = H.cwiseProduct(mask);
        }
        if (trace) {
            t.PH.push_back(std::move(PH));
            t.Z.push_back(std::move(Z));
            t.mask.push_back(std::move(mask));
        }
    }

    Eigen::MatrixXd PH = g.propagate(H);
    t.alpha = PH * params.score_weight;
    t.selected = top_k(t.alpha, pool_size(H.rows(), params.hyper.pool_ratio));
    t.gate = gather(t.alpha, t.selected).array().tanh().matrix();
    t.pooled = gated_rows(H, t.selected, t.gate);
    Embedding h = readout_impl(t.pooled, params.hyper.readout, &t.argmax);
    if (trace) {
        t.H = std::move(H);
        t.PH_final = std::move(PH);
    }
    return h;
}

ModelGrads backward(const GraphTensors& g, const ModelParams& params, const ForwardTrace& t,
                    const Eigen::VectorXd& d_embedding) {
    const auto L = params.gcn_weights.size();
    if (t.Z.size() != L || t.H.rows() != g.size())
        throw ShapeError("backward: trace does not match the model (was embed called with a trace?)");
    ModelGrads grads = ModelGrads::zeros_like(params);
    const auto k = static_cast<Eigen::Index>(t.selected.size());
    const Eigen::Index d = t.pooled.cols();

    Eigen::MatrixXd d_pooled = Eigen::MatrixXd::Zero(k, d);
    switch (params.hyper.readout) {
    case ReadoutMode::Max:
        for (Eigen::Index c = 0; c < d; ++c)
            d_pooled(t.argmax[static_cast<std::size_t>(c)], c) = d_embedding(c);
        break;
    case ReadoutMode::Mean:
        d_pooled.rowwise() = d_embedding.transpose() / static_cast<double>(k);
        break;
    case ReadoutMode::Sum:
        d_pooled.rowwise() = d_embedding.transpose();
        break;
    }

    Eigen::MatrixXd dH = Eigen::MatrixXd::Zero(t.H.rows(), t.H.cols());
    Eigen::VectorXd d_alpha = Eigen::VectorXd::Zero(t.H.rows());
    for (Eigen::Index i = 0; i < k; ++i) {
        const Eigen::Index v = t.selected[static_cast<std::size_t>(i)];
        const double gate = t.gate(i);
        dH.row(v) += d_pooled.row(i) * gate;
        const double d_gate = d_pooled.row(i).dot(t.H.row(v));
        d_alpha(v) = d_gate * (1.0 - gate * gate);
    }
    // alpha = P H s with P symmetric.
    grads.score = t.PH_final.transpose() * d_alpha;
    dH += g.propagate(d_alpha) * params.score_weight.transpose();

    for (std::size_t l = L; l-- > 0;) {
        Eigen::MatrixXd dZ = t.mask[l].size() ? Eigen::MatrixXd(dH.cwiseProduct(t.mask[l])) : dH;
        dZ = (t.Z[l].array() > 0.0).select(dZ, 0.0);
        grads.gcn[l] = t.PH[l].transpose() * dZ;
        if (l > 0)
            dH = g.propagate(dZ * params.gcn_weights[l].transpose());
    }
    return grads;
}

} // namespace ipsim
