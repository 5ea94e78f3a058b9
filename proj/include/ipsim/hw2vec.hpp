#pragma once

#include "ipsim/graph_encode.hpp"

#include <cstdint>
#include <vector>

namespace ipsim {

enum class Activation { Relu, Identity };
enum class ReadoutMode { Max, Mean, Sum };

const char* readout_name(ReadoutMode m);
ReadoutMode readout_from_name(const std::string& name);

struct HyperParams {
    int layers = 2;
    int hidden = 16;
    double pool_ratio = 0.5;
    ReadoutMode readout = ReadoutMode::Max;
    double dropout = 0.1;

    friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

using Embedding = Eigen::VectorXd;

/// Trainable weights: one matrix per GCN layer (d_in x d_out) and the
/// pooling score projection (hidden x 1).
struct ModelParams {
    HyperParams hyper;
    std::uint32_t vocab_version = kVocabularyVersion;
    Eigen::Index input_dim = static_cast<Eigen::Index>(kNodeKindCount);
    std::vector<Eigen::MatrixXd> gcn_weights;
    Eigen::MatrixXd score_weight;

    /// Uniform in +-sqrt(6 / (d_in + d_out)) per matrix.
    static ModelParams init(const HyperParams& hyper, std::uint64_t seed,
                            Eigen::Index input_dim = static_cast<Eigen::Index>(kNodeKindCount));

    /// Throws ShapeError when the dimension chain is inconsistent.
    void check() const;
    /// Every trainable matrix in a fixed order: GCN layers, then score.
    std::vector<Eigen::MatrixXd*> tensors();
    std::vector<const Eigen::MatrixXd*> tensors() const;
};

/// Gradient set with the same layout as ModelParams::tensors().
struct ModelGrads {
    std::vector<Eigen::MatrixXd> gcn;
    Eigen::MatrixXd score;

    static ModelGrads zeros_like(const ModelParams& p);
    std::vector<Eigen::MatrixXd*> tensors();
    std::vector<const Eigen::MatrixXd*> tensors() const;
    ModelGrads& operator+=(const ModelGrads& o);
    ModelGrads& operator*=(double s);
};

/// sigma(P X W).
Eigen::MatrixXd gcn_layer(const Eigen::MatrixXd& X, const Eigen::MatrixXd& P, const Eigen::MatrixXd& W,
                          Activation act = Activation::Relu);
Eigen::MatrixXd gcn_layer(const Eigen::MatrixXd& X, const GraphTensors& g, const Eigen::MatrixXd& W,
                          Activation act = Activation::Relu);

/// ceil(ratio * n), at least 1.
Eigen::Index pool_size(Eigen::Index n, double ratio);

/// Indices of the k largest scores, ties broken by smaller index, returned
/// in ascending index order.
std::vector<Eigen::Index> top_k(const Eigen::VectorXd& alpha, Eigen::Index k);

struct PoolResult {
    Eigen::MatrixXd X;           // k x d, rows gated by tanh(alpha)
    Eigen::MatrixXd A;           // k x k induced adjacency
    std::vector<Eigen::Index> selected;
    Eigen::VectorXd alpha;       // scores of all n nodes
};

/// Self-attention top-k pooling: alpha = P Xprop s, keep the top
/// ceil(ratio n) nodes and gate their rows by tanh(alpha).
PoolResult sag_pool(const Eigen::MatrixXd& Xprop, const Eigen::MatrixXd& Aprop, const Eigen::MatrixXd& P,
                    const Eigen::MatrixXd& score_weight, double ratio);

/// Column-wise aggregate. Throws EmptyGraph on zero rows.
Embedding readout(const Eigen::MatrixXd& Xpool, ReadoutMode mode);

/// Intermediate values of one forward pass, enough to run backward().
struct ForwardTrace {
    std::vector<Eigen::MatrixXd> PH;    // P * H_{l-1}, per layer
    std::vector<Eigen::MatrixXd> Z;     // pre-activation, per layer
    std::vector<Eigen::MatrixXd> mask;  // dropout scale (empty when inactive)
    Eigen::MatrixXd H;                  // final node features
    Eigen::MatrixXd PH_final;           // P * H
    Eigen::VectorXd alpha;
    std::vector<Eigen::Index> selected;
    Eigen::VectorXd gate;               // tanh(alpha[selected])
    Eigen::MatrixXd pooled;
    std::vector<Eigen::Index> argmax;   // per column row index (max readout)
};

/// GCN layers (dropout after each when training), pooling, readout.
/// With training=false the seed is ignored and the result is deterministic.
Embedding embed(const GraphTensors& g, const ModelParams& params, bool training = false, std::uint64_t seed = 0,
                ForwardTrace* trace = nullptr);

/// Reverse-mode gradient of a scalar whose derivative with respect to the
/// embedding is `d_embedding`. Top-k selection and max routing are held at
/// the values recorded in `trace`.
ModelGrads backward(const GraphTensors& g, const ModelParams& params, const ForwardTrace& trace,
                    const Eigen::VectorXd& d_embedding);

} // namespace ipsim
