#pragma once

#include "ipsim/hw2vec.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ipsim {

enum class Optimizer { Sgd, Momentum, Adam };

const char* optimizer_name(Optimizer o);
Optimizer optimizer_from_name(const std::string& name);

struct TrainConfig {
    int batch_size = 64;
    double learning_rate = 0.001;
    double margin = 0.5;
    int epochs = 50;
    int patience = 10; // epochs without test-accuracy gain before stopping; 0 disables
    std::uint64_t seed = 0;
    double dropout = 0.1;
    double test_fraction = 0.2;
    double delta = 0.5; // decision boundary for the accuracy columns
    /// Weight pair losses so both labels contribute equally to the objective.
    bool balance_classes = false;
    Optimizer optimizer = Optimizer::Sgd;
    double momentum = 0.9;
    double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;
    HyperParams hyper;
    std::size_t threads = 0; // 0: worker_count()

    /// Throws Error naming the first invalid field.
    void validate() const;
};

/// y = +1: 1 - yhat. y = -1: max(0, yhat - margin). Throws Error for other y.
double cosine_embedding_loss(double yhat, int y, double margin);

/// d loss / d yhat (the hinge is flat at yhat == margin).
double cosine_embedding_loss_grad(double yhat, int y, double margin);

/// d cos(h1, h2) / d h1 = h2/(|h1||h2|) - cos * h1/|h1|^2.
Eigen::VectorXd cosine_grad(const Eigen::VectorXd& h1, const Eigen::VectorXd& h2);

struct PairGradient {
    double score = 0.0;
    double loss = 0.0;
    ModelGrads grads;
};

/// Loss and exact gradient for one labeled pair. With training=true, dropout
/// masks are drawn from `seed` (design a uses stream 0, b stream 1).
PairGradient pair_gradient(const GraphTensors& a, const GraphTensors& b, int y, const ModelParams& params,
                           double margin, bool training = false, std::uint64_t seed = 0);

/// Index-based pair used for training: a and b index the graph store.
struct TrainPair {
    std::size_t a = 0, b = 0;
    int label = 1;
    bool test = false;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double test_acc = 0.0;
};

struct Checkpoint {
    ModelParams params;
    int epoch = 0;
    double loss = 0.0;
    std::uint64_t seed = 0;
};

struct TrainResult {
    Checkpoint checkpoint; // parameters of the epoch with the best test accuracy
    std::vector<EpochStats> trace;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Mini-batch training on the pairs with test=false; accuracy reported on
/// both splits after every epoch. Each design referenced in a batch is
/// embedded once per batch and the per-design gradients are summed in index
/// order, so the result does not depend on the worker count.
TrainResult train(const std::vector<TrainPair>& pairs, const std::vector<GraphTensors>& graphs,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Like train() but continues from existing parameters.
TrainResult train_from(ModelParams params, const std::vector<TrainPair>& pairs,
                       const std::vector<GraphTensors>& graphs, const TrainConfig& config,
                       const EpochCallback& on_epoch = {});

/// Inference embeddings for every graph, computed in parallel.
std::vector<Embedding> embed_all(const std::vector<GraphTensors>& graphs, const ModelParams& params,
                                 std::size_t threads = 0);

/// Binary checkpoint, little-endian:
///   "IPSIMCKP" u32 format_version u32 vocab_version
///   i32 layers i32 hidden f64 pool_ratio u8 readout f64 dropout i64 input_dim
///   i32 epoch f64 loss u64 seed
///   u32 matrix_count, then per matrix: u32 rows u32 cols, rows*cols f64 row-major
std::string serialize_checkpoint(const Checkpoint& c);
/// Throws FormatError on truncation or bad magic and Error on a vocabulary
/// version other than kVocabularyVersion.
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

/// epoch,train_loss,train_acc,test_acc
std::string trace_csv(const std::vector<EpochStats>& trace);

} // namespace ipsim
