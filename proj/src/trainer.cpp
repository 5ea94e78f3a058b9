#include "ipsim/trainer.hpp"

#include "ipsim/detector.hpp"
#include "ipsim/io.hpp"
#include "ipsim/parallel.hpp"
#include "ipsim/random.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>

namespace ipsim {

const char* optimizer_name(Optimizer o) {
    switch (o) {
    case Optimizer::Sgd: return "sgd";
    case Optimizer::Momentum: return "momentum";
    case Optimizer::Adam: return "adam";
    }
    return "sgd";
}

Optimizer optimizer_from_name(const std::string& name) {
    if (name == "sgd")
        return Optimizer::Sgd;
    if (name == "momentum")
        return Optimizer::Momentum;
    if (name == "adam")
        return Optimizer::Adam;
    throw Error("unknown optimizer '" + name + "' (expected sgd, momentum or adam)");
}

void TrainConfig::validate() const {
    if (batch_size < 1)
        throw Error("batch_size must be at least 1");
    if (!(margin >= 0.0 && margin < 1.0))
        throw Error("margin must lie in [0, 1)");
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw Error("test_fraction must lie in (0, 1)");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
        throw Error("learning_rate must be a non-negative number");
    if (epochs < 0)
        throw Error("epochs must be non-negative");
    if (!(dropout >= 0.0 && dropout < 1.0))
        throw Error("dropout must lie in [0, 1)");
}

double cosine_embedding_loss(double yhat, int y, double margin) {
    if (y == 1)
        return 1.0 - yhat;
    if (y == -1)
        return std::max(0.0, yhat - margin);
    throw Error("pair label must be +1 or -1, got " + std::to_string(y));
}

double cosine_embedding_loss_grad(double yhat, int y, double margin) {
    if (y == 1)
        return -1.0;
    if (y == -1)
        return yhat > margin ? 1.0 : 0.0;
    throw Error("pair label must be +1 or -1, got " + std::to_string(y));
}

Eigen::VectorXd cosine_grad(const Eigen::VectorXd& h1, const Eigen::VectorXd& h2) {
    const double n1 = h1.norm(), n2 = h2.norm();
    const double c = h1.dot(h2) / (n1 * n2);
    return h2 / (n1 * n2) - c * h1 / (n1 * n1);
}

namespace {

constexpr double kTinyNorm = 1e-12;

// Score and upstream gradients for one pair of embeddings. A degenerate
// (near-zero) embedding yields score 0 and no gradient.
struct PairHead {
    double score = 0.0;
    double loss = 0.0;
    Eigen::VectorXd da, db;
};

PairHead pair_head(const Embedding& ha, const Embedding& hb, int y, double margin) {
    PairHead out;
    out.da = Eigen::VectorXd::Zero(ha.size());
    out.db = Eigen::VectorXd::Zero(hb.size());
    if (ha.norm() * hb.norm() < kTinyNorm) {
        out.loss = cosine_embedding_loss(0.0, y, margin);
        return out;
    }
    out.score = std::clamp(ha.dot(hb) / (ha.norm() * hb.norm()), -1.0, 1.0);
    out.loss = cosine_embedding_loss(out.score, y, margin);
    double dl = cosine_embedding_loss_grad(out.score, y, margin);
    if (dl != 0.0) {
        out.da = dl * cosine_grad(ha, hb);
        out.db = dl * cosine_grad(hb, ha);
    }
    return out;
}

double safe_score(const Embedding& a, const Embedding& b) {
    if (a.norm() * b.norm() < kTinyNorm)
        return 0.0;
    return cosine_similarity(a, b);
}

struct OptimizerState {
    std::vector<Eigen::MatrixXd> m, v;
    long step = 0;
};

void apply_update(ModelParams& params, const ModelGrads& g, const TrainConfig& cfg, OptimizerState& st) {
    auto p = params.tensors();
    auto gr = g.tensors();
    if (st.m.empty())
        for (auto* t : p) {
            st.m.push_back(Eigen::MatrixXd::Zero(t->rows(), t->cols()));
            st.v.push_back(Eigen::MatrixXd::Zero(t->rows(), t->cols()));
        }
    ++st.step;
    for (std::size_t i = 0; i < p.size(); ++i) {
        switch (cfg.optimizer) {
        case Optimizer::Sgd:
            *p[i] -= cfg.learning_rate * *gr[i];
            break;
        case Optimizer::Momentum:
            st.m[i] = cfg.momentum * st.m[i] + *gr[i];
            *p[i] -= cfg.learning_rate * st.m[i];
            break;
        case Optimizer::Adam: {
            st.m[i] = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * *gr[i];
            st.v[i] = cfg.beta2 * st.v[i] + (1.0 - cfg.beta2) * gr[i]->cwiseProduct(*gr[i]);
            const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
            const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
            *p[i] -= (cfg.learning_rate *
                      ((st.m[i].array() / c1) / ((st.v[i].array() / c2).sqrt() + cfg.epsilon)))
                         .matrix();
            break;
        }
        }
    }
}

struct Evaluation {
    double train_acc = 0.0, test_acc = 0.0, test_loss = 0.0;
};

Evaluation evaluate(const std::vector<TrainPair>& pairs, const std::vector<GraphTensors>& graphs,
                    const ModelParams& params, const TrainConfig& cfg) {
    auto emb = embed_all(graphs, params, cfg.threads);
    std::size_t n_train = 0, n_test = 0, ok_train = 0, ok_test = 0;
    double test_loss = 0.0;
    for (const auto& p : pairs) {
        double s = safe_score(emb[p.a], emb[p.b]);
        bool ok = (s > cfg.delta) == (p.label == 1);
        if (p.test) {
            ++n_test;
            ok_test += ok;
            test_loss += cosine_embedding_loss(s, p.label, cfg.margin);
        } else {
            ++n_train;
            ok_train += ok;
        }
    }
    Evaluation e;
    e.train_acc = n_train ? static_cast<double>(ok_train) / static_cast<double>(n_train) : 0.0;
    e.test_acc = n_test ? static_cast<double>(ok_test) / static_cast<double>(n_test) : 0.0;
    e.test_loss = n_test ? test_loss / static_cast<double>(n_test) : 0.0;
    return e;
}

} // namespace

PairGradient pair_gradient(const GraphTensors& a, const GraphTensors& b, int y, const ModelParams& params,
                           double margin, bool training, std::uint64_t seed) {
    ForwardTrace ta, tb;
    Embedding ha = embed(a, params, training, mix_seed(seed, 0), &ta);
    Embedding hb = embed(b, params, training, mix_seed(seed, 1), &tb);
    PairHead head = pair_head(ha, hb, y, margin);
    PairGradient out;
    out.score = head.score;
    out.loss = head.loss;
    out.grads = backward(a, params, ta, head.da);
    out.grads += backward(b, params, tb, head.db);
    return out;
}

std::vector<Embedding> embed_all(const std::vector<GraphTensors>& graphs, const ModelParams& params,
                                 std::size_t threads) {
    std::vector<Embedding> out(graphs.size());
    parallel_for(graphs.size(), [&](std::size_t i) { out[i] = embed(graphs[i], params); }, threads);
    return out;
}

TrainResult train(const std::vector<TrainPair>& pairs, const std::vector<GraphTensors>& graphs,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
    HyperParams hyper = config.hyper;
    hyper.dropout = config.dropout;
    Eigen::Index input_dim = graphs.empty() ? static_cast<Eigen::Index>(kNodeKindCount) : graphs.front().X.cols();
    return train_from(ModelParams::init(hyper, mix_seed(config.seed, 0x1417), input_dim), pairs, graphs, config,
                      on_epoch);
}

TrainResult train_from(ModelParams params, const std::vector<TrainPair>& pairs,
                       const std::vector<GraphTensors>& graphs, const TrainConfig& config,
                       const EpochCallback& on_epoch) {
    config.validate();
    params.check();
    if (pairs.empty())
        throw Error("no training pairs");
    for (const auto& p : pairs) {
        if (p.a >= graphs.size() || p.b >= graphs.size())
            throw Error("pair references missing graph " + std::to_string(std::max(p.a, p.b)));
        if (p.label != 1 && p.label != -1)
            throw Error("pair label must be +1 or -1, got " + std::to_string(p.label));
    }
    std::vector<std::size_t> train_idx;
    for (std::size_t i = 0; i < pairs.size(); ++i)
        if (!pairs[i].test)
            train_idx.push_back(i);
    if (train_idx.empty())
        throw Error("no pairs in the training split");

    // Per-label weights; with balancing each label carries half the objective.
    double weight[2] = {1.0, 1.0}; // [similar, different]
    if (config.balance_classes) {
        std::size_t n_sim = 0;
        for (std::size_t i : train_idx)
            n_sim += pairs[i].label == 1;
        const std::size_t n_diff = train_idx.size() - n_sim;
        if (n_sim > 0 && n_diff > 0) {
            weight[0] = static_cast<double>(train_idx.size()) / (2.0 * static_cast<double>(n_sim));
            weight[1] = static_cast<double>(train_idx.size()) / (2.0 * static_cast<double>(n_diff));
        }
    }

    TrainResult result;
    result.checkpoint = Checkpoint{params, 0, 0.0, config.seed};
    OptimizerState opt;
    double best_acc = -1.0, best_loss = 0.0;
    int since_best = 0;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        Rng rng(mix_seed(config.seed, 0x5eed0000ULL + static_cast<std::uint64_t>(epoch)));
        std::vector<std::size_t> order = train_idx;
        rng.shuffle(order);

        double loss_sum = 0.0;
        const std::size_t B = static_cast<std::size_t>(config.batch_size);
        for (std::size_t start = 0, batch = 0; start < order.size(); start += B, ++batch) {
            const std::size_t end = std::min(order.size(), start + B);
            std::map<std::size_t, std::size_t> slot;
            for (std::size_t i = start; i < end; ++i) {
                slot.emplace(pairs[order[i]].a, 0);
                slot.emplace(pairs[order[i]].b, 0);
            }
            std::vector<std::size_t> designs;
            for (auto& [d, s] : slot) {
                s = designs.size();
                designs.push_back(d);
            }
            const std::uint64_t batch_seed =
                mix_seed(mix_seed(config.seed, static_cast<std::uint64_t>(epoch)), batch);

            std::vector<ForwardTrace> traces(designs.size());
            std::vector<Embedding> emb(designs.size());
            parallel_for(
                designs.size(),
                [&](std::size_t i) {
                    emb[i] = embed(graphs[designs[i]], params, true, mix_seed(batch_seed, designs[i]), &traces[i]);
                },
                config.threads);

            std::vector<Eigen::VectorXd> upstream(designs.size());
            for (std::size_t i = 0; i < designs.size(); ++i)
                upstream[i] = Eigen::VectorXd::Zero(emb[i].size());
            const double scale = 1.0 / static_cast<double>(end - start);
            for (std::size_t i = start; i < end; ++i) {
                const TrainPair& p = pairs[order[i]];
                const std::size_t sa = slot[p.a], sb = slot[p.b];
                PairHead head = pair_head(emb[sa], emb[sb], p.label, config.margin);
                if (!std::isfinite(head.loss))
                    throw Error("non-finite loss at epoch " + std::to_string(epoch) + " for pair (" +
                                graphs[p.a].name + ", " + graphs[p.b].name + ")");
                const double w = weight[p.label == 1 ? 0 : 1];
                loss_sum += w * head.loss;
                upstream[sa] += (w * scale) * head.da;
                upstream[sb] += (w * scale) * head.db;
            }

            std::vector<ModelGrads> per_design(designs.size());
            parallel_for(
                designs.size(),
                [&](std::size_t i) {
                    if (upstream[i].isZero(0.0))
                        per_design[i] = ModelGrads::zeros_like(params);
                    else
                        per_design[i] = backward(graphs[designs[i]], params, traces[i], upstream[i]);
                },
                config.threads);
            ModelGrads total = ModelGrads::zeros_like(params);
            for (const auto& g : per_design)
                total += g;
            for (const auto* t : total.tensors())
                if (!t->allFinite())
                    throw Error("non-finite gradient at epoch " + std::to_string(epoch));
            apply_update(params, total, config, opt);
        }

        Evaluation ev = evaluate(pairs, graphs, params, config);
        EpochStats stats{epoch, loss_sum / static_cast<double>(order.size()), ev.train_acc, ev.test_acc};
        result.trace.push_back(stats);
        if (on_epoch)
            on_epoch(stats);

        const bool better = ev.test_acc > best_acc || (ev.test_acc == best_acc && ev.test_loss < best_loss);
        if (better) {
            result.checkpoint = Checkpoint{params, epoch, stats.train_loss, config.seed};
            best_loss = ev.test_loss;
        }
        if (ev.test_acc > best_acc) {
            best_acc = ev.test_acc;
            since_best = 0;
        } else if (config.patience > 0 && ++since_best >= config.patience) {
            break;
        }
    }
    if (config.epochs == 0)
        result.checkpoint = Checkpoint{params, 0, 0.0, config.seed};
    return result;
}

namespace {

class Writer {
public:
    void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
    void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i)
            u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i)
            u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class Reader {
public:
    explicit Reader(const std::string& s) : s_(s) {}
    void need(std::size_t n, const char* what) {
        if (pos_ + n > s_.size())
            throw FormatError(std::string("checkpoint truncated while reading ") + what);
    }
    std::uint8_t u8(const char* what) {
        need(1, what);
        return static_cast<std::uint8_t>(s_[pos_++]);
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(s_[pos_++])) << (8 * i);
        return v;
    }
    std::uint64_t u64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(s_[pos_++])) << (8 * i);
        return v;
    }
    std::int32_t i32(const char* what) { return static_cast<std::int32_t>(u32(what)); }
    std::int64_t i64(const char* what) { return static_cast<std::int64_t>(u64(what)); }
    double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
    std::string raw(std::size_t n, const char* what) {
        need(n, what);
        std::string out = s_.substr(pos_, n);
        pos_ += n;
        return out;
    }
    bool done() const { return pos_ == s_.size(); }

private:
    const std::string& s_;
    std::size_t pos_ = 0;
};

constexpr char kMagic[] = "IPSIMCKP";

} // namespace

std::string serialize_checkpoint(const Checkpoint& c) {
    c.params.check();
    Writer w;
    w.bytes(kMagic, 8);
    w.u32(kCheckpointFormatVersion);
    w.u32(c.params.vocab_version);
    const HyperParams& h = c.params.hyper;
    w.i32(h.layers);
    w.i32(h.hidden);
    w.f64(h.pool_ratio);
    w.u8(static_cast<std::uint8_t>(h.readout));
    w.f64(h.dropout);
    w.i64(c.params.input_dim);
    w.i32(c.epoch);
    w.f64(c.loss);
    w.u64(c.seed);
    auto tensors = c.params.tensors();
    w.u32(static_cast<std::uint32_t>(tensors.size()));
    for (const auto* m : tensors) {
        w.u32(static_cast<std::uint32_t>(m->rows()));
        w.u32(static_cast<std::uint32_t>(m->cols()));
        for (Eigen::Index r = 0; r < m->rows(); ++r)
            for (Eigen::Index col = 0; col < m->cols(); ++col)
                w.f64((*m)(r, col));
    }
    return w.take();
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
    Reader r(bytes);
    if (r.raw(8, "magic") != std::string(kMagic, 8))
        throw FormatError("not a checkpoint (bad magic)");
    std::uint32_t format = r.u32("format version");
    if (format != kCheckpointFormatVersion)
        throw FormatError("unsupported checkpoint format version " + std::to_string(format));
    std::uint32_t vocab = r.u32("vocabulary version");
    if (vocab != kVocabularyVersion)
        throw Error("checkpoint vocabulary version " + std::to_string(vocab) + " does not match " +
                    std::to_string(kVocabularyVersion));
    Checkpoint c;
    c.params.vocab_version = vocab;
    HyperParams& h = c.params.hyper;
    h.layers = r.i32("layers");
    h.hidden = r.i32("hidden");
    h.pool_ratio = r.f64("pool ratio");
    std::uint8_t readout = r.u8("readout");
    if (readout > static_cast<std::uint8_t>(ReadoutMode::Sum))
        throw FormatError("checkpoint: bad readout code " + std::to_string(readout));
    h.readout = static_cast<ReadoutMode>(readout);
    h.dropout = r.f64("dropout");
    c.params.input_dim = r.i64("input dim");
    c.epoch = r.i32("epoch");
    c.loss = r.f64("loss");
    c.seed = r.u64("seed");
    if (h.layers < 1 || h.layers > 64 || h.hidden < 1 || h.hidden > 1 << 16)
        throw FormatError("checkpoint: implausible layer shape");
    std::uint32_t count = r.u32("matrix count");
    if (count != static_cast<std::uint32_t>(h.layers) + 1)
        throw FormatError("checkpoint: expected " + std::to_string(h.layers + 1) + " matrices, found " +
                          std::to_string(count));
    std::vector<Eigen::MatrixXd> mats;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint32_t rows = r.u32("matrix rows"), cols = r.u32("matrix cols");
        r.need(static_cast<std::size_t>(rows) * cols * 8, "matrix data");
        Eigen::MatrixXd m(rows, cols);
        for (std::uint32_t a = 0; a < rows; ++a)
            for (std::uint32_t b = 0; b < cols; ++b)
                m(a, b) = r.f64("matrix data");
        mats.push_back(std::move(m));
    }
    if (!r.done())
        throw FormatError("checkpoint: trailing bytes");
    c.params.score_weight = std::move(mats.back());
    mats.pop_back();
    c.params.gcn_weights = std::move(mats);
    try {
        c.params.check();
    } catch (const ShapeError& e) {
        throw FormatError(std::string("checkpoint: ") + e.what());
    }
    return c;
}

void save_checkpoint(const Checkpoint& c, const std::string& path) { write_file_atomic(path, serialize_checkpoint(c)); }

Checkpoint load_checkpoint(const std::string& path) { return deserialize_checkpoint(read_text_file(path)); }

std::string trace_csv(const std::vector<EpochStats>& trace) {
    std::ostringstream out;
    out.precision(17);
    out << "epoch,train_loss,train_acc,test_acc\n";
    for (const auto& e : trace)
        out << e.epoch << ',' << e.train_loss << ',' << e.train_acc << ',' << e.test_acc << '\n';
    return out.str();
}

} // namespace ipsim
