#include <doctest.h>

#include "ipsim/detector.hpp"
#include "ipsim/trainer.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <cmath>
#include <filesystem>

using namespace ipsim;

namespace {

std::vector<GraphTensors> random_graphs(Rng& rng, int count, int min_n, int max_n) {
    std::vector<GraphTensors> out;
    for (int i = 0; i < count; ++i) {
        int n = min_n + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_n - min_n + 1)));
        out.push_back(encode(oracle::random_graph(rng, n, 0.25)));
    }
    return out;
}

double pair_loss(const GraphTensors& a, const GraphTensors& b, int y, const ModelParams& p, double margin) {
    return cosine_embedding_loss(cosine_similarity(embed(a, p), embed(b, p)), y, margin);
}

} // namespace

TEST_SUITE("loss") {
    TEST_CASE("values") {
        CHECK(cosine_embedding_loss(1.0, 1, 0.5) == 0.0);
        CHECK(cosine_embedding_loss(0.3, -1, 0.5) == 0.0);
        CHECK(cosine_embedding_loss(0.9, -1, 0.5) == doctest::Approx(0.4).epsilon(1e-15));
        CHECK(cosine_embedding_loss(-1.0, 1, 0.5) == 2.0);
        CHECK(cosine_embedding_loss(-1.0, -1, 0.5) == 0.0);
        CHECK_THROWS_AS(cosine_embedding_loss(0.5, 0, 0.5), Error);
        CHECK_THROWS_AS(cosine_embedding_loss(0.5, 2, 0.5), Error);
    }

    TEST_CASE("bounds") {
        for (double s = -1.0; s <= 1.0; s += 0.01)
            for (int y : {1, -1}) {
                double l = cosine_embedding_loss(s, y, 0.5);
                CHECK(l >= 0.0);
                CHECK(l <= 2.0);
            }
    }

    TEST_CASE("cosine gradient formula against central differences") {
        Rng rng(3);
        for (int trial = 0; trial < 10; ++trial) {
            Eigen::VectorXd h1(16), h2(16);
            for (int i = 0; i < 16; ++i) {
                h1(i) = rng.uniform(-1, 1);
                h2(i) = rng.uniform(-1, 1);
            }
            Eigen::VectorXd g = cosine_grad(h1, h2);
            for (int i = 0; i < 16; ++i) {
                Eigen::VectorXd up = h1, down = h1;
                up(i) += 1e-6;
                down(i) -= 1e-6;
                double num = (cosine_similarity(up, h2) - cosine_similarity(down, h2)) / 2e-6;
                CHECK(g(i) == doctest::Approx(num).epsilon(1e-6));
            }
            CHECK(std::abs(g.dot(h1)) < 1e-12); // orthogonal to h1
        }
    }
}

TEST_SUITE("gradients") {
    TEST_CASE("flat hinge region gives zero gradients") {
        Rng rng(21);
        auto g = random_graphs(rng, 2, 4, 8);
        ModelParams p = ModelParams::init({}, 4);
        double s = cosine_similarity(embed(g[0], p), embed(g[1], p));
        PairGradient pg = pair_gradient(g[0], g[1], -1, p, std::min(0.99, std::max(s, 0.0) + 0.01));
        CHECK(pg.loss == 0.0);
        for (const auto* t : pg.grads.tensors())
            CHECK(t->isZero(0.0));
    }

    TEST_CASE("finite differences on small random pairs") {
        Rng rng(1234);
        double worst = 0.0;
        std::size_t checked = 0;
        for (int trial = 0; trial < 10; ++trial) {
            auto g = random_graphs(rng, 2, 5, 5);
            ModelParams p = ModelParams::init({}, 100 + trial);
            for (bool training : {false, true}) {
                int y = trial % 2 ? 1 : -1;
                oracle::FdReport r = oracle::finite_difference(g[0], g[1], y, p, y == 1 ? 0.5 : -0.9, training,
                                                               static_cast<std::uint64_t>(trial));
                worst = std::max(worst, r.max_rel_err);
                checked += r.checked;
            }
        }
        CHECK(checked > 1000);
        CHECK(worst <= 1e-4);
    }

    TEST_CASE("mean readout and sum readout gradients") {
        Rng rng(77);
        for (ReadoutMode m : {ReadoutMode::Mean, ReadoutMode::Sum}) {
            HyperParams h;
            h.readout = m;
            auto g = random_graphs(rng, 2, 6, 9);
            ModelParams p = ModelParams::init(h, 9);
            oracle::FdReport r = oracle::finite_difference(g[0], g[1], 1, p, 0.5, false, 0);
            CHECK(r.checked > 100);
            CHECK(r.max_rel_err <= 1e-4);
        }
    }

    TEST_CASE("a small step does not increase the batch loss") {
        Rng rng(55);
        int ok = 0, total = 0;
        for (int trial = 0; trial < 20; ++trial) {
            auto g = random_graphs(rng, 4, 4, 10);
            ModelParams p = ModelParams::init({}, 300 + trial);
            const std::vector<std::pair<std::pair<int, int>, int>> batch = {{{0, 1}, 1}, {{2, 3}, 1}, {{0, 2}, -1}};
            auto loss_of = [&](const ModelParams& q) {
                double l = 0.0;
                for (const auto& [ab, y] : batch)
                    l += pair_loss(g[ab.first], g[ab.second], y, q, -0.9);
                return l;
            };
            ModelGrads total_g = ModelGrads::zeros_like(p);
            for (const auto& [ab, y] : batch)
                total_g += pair_gradient(g[ab.first], g[ab.second], y, p, -0.9).grads;
            ModelParams q = p;
            auto qt = q.tensors();
            auto gt = total_g.tensors();
            for (std::size_t i = 0; i < qt.size(); ++i)
                *qt[i] -= 1e-4 * *gt[i];
            ++total;
            ok += loss_of(q) <= loss_of(p) + 1e-15;
        }
        CHECK(ok >= total - 1);
    }
}

TEST_SUITE("training") {
    struct Toy {
        std::vector<GraphTensors> graphs;
        std::vector<TrainPair> pairs;
    };

    Toy toy() {
        Rng rng(8);
        Toy t;
        t.graphs = random_graphs(rng, 6, 4, 12);
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t j = i + 1; j < 6; ++j)
                t.pairs.push_back({i, j, (i % 2 == j % 2) ? 1 : -1, (i + j) % 5 == 0});
        return t;
    }

    TEST_CASE("zero learning rate leaves parameters unchanged") {
        Toy t = toy();
        TrainConfig cfg;
        cfg.epochs = 1;
        cfg.learning_rate = 0.0;
        cfg.seed = 3;
        std::vector<TrainPair> one = {t.pairs[0]};
        TrainResult r = train(one, t.graphs, cfg);
        HyperParams h;
        ModelParams init = ModelParams::init(h, mix_seed(3, 0x1417));
        for (std::size_t i = 0; i < init.gcn_weights.size(); ++i)
            CHECK(r.checkpoint.params.gcn_weights[i] == init.gcn_weights[i]);
        CHECK(r.checkpoint.params.score_weight == init.score_weight);
    }

    TEST_CASE("identical seeds give byte-identical checkpoints across worker counts") {
        Toy t = toy();
        TrainConfig cfg;
        cfg.epochs = 4;
        cfg.batch_size = 4;
        cfg.learning_rate = 0.01;
        cfg.optimizer = Optimizer::Adam;
        cfg.seed = 42;
        cfg.threads = 1;
        std::string a = serialize_checkpoint(train(t.pairs, t.graphs, cfg).checkpoint);
        cfg.threads = 4;
        std::string b = serialize_checkpoint(train(t.pairs, t.graphs, cfg).checkpoint);
        CHECK(a == b);
        cfg.seed = 43;
        CHECK(serialize_checkpoint(train(t.pairs, t.graphs, cfg).checkpoint) != a);
    }

    TEST_CASE("class balancing weights each label to half the objective") {
        Toy t = toy();
        std::vector<TrainPair> train_pairs;
        for (auto p : t.pairs)
            if (!p.test)
                train_pairs.push_back(p);
        TrainConfig cfg;
        cfg.epochs = 1;
        cfg.batch_size = static_cast<int>(train_pairs.size());
        cfg.learning_rate = 0.05;
        cfg.dropout = cfg.hyper.dropout = 0.0;
        cfg.balance_classes = true;
        cfg.patience = 0;
        cfg.seed = 9;
        ModelParams start = ModelParams::init(cfg.hyper, 21);
        ModelParams got = train_from(start, train_pairs, t.graphs, cfg).checkpoint.params;

        // One full-batch SGD step by hand.
        double n = static_cast<double>(train_pairs.size()), n_sim = 0.0;
        for (const auto& p : train_pairs)
            n_sim += p.label == 1;
        ModelGrads sum = ModelGrads::zeros_like(start);
        for (const auto& p : train_pairs) {
            double w = n / (2.0 * (p.label == 1 ? n_sim : n - n_sim));
            ModelGrads g = pair_gradient(t.graphs[p.a], t.graphs[p.b], p.label, start, cfg.margin).grads;
            g *= w / n;
            sum += g;
        }
        auto st = start.tensors();
        auto gt = sum.tensors();
        auto rt = got.tensors();
        double err = 0.0;
        for (std::size_t i = 0; i < st.size(); ++i)
            err = std::max(err, (*rt[i] - (*st[i] - cfg.learning_rate * *gt[i])).cwiseAbs().maxCoeff());
        CHECK(n_sim > 0);
        CHECK(n_sim < n);
        CHECK(err <= 1e-12);

        // With equal label counts the weights are all 1.
        std::vector<TrainPair> even;
        int sim = 0, diff = 0;
        for (const auto& p : train_pairs)
            if ((p.label == 1 ? sim : diff) < 3) {
                even.push_back(p);
                ++(p.label == 1 ? sim : diff);
            }
        REQUIRE(sim == 3);
        REQUIRE(diff == 3);
        cfg.batch_size = 2;
        cfg.epochs = 2;
        std::string balanced = serialize_checkpoint(train_from(start, even, t.graphs, cfg).checkpoint);
        cfg.balance_classes = false;
        CHECK(serialize_checkpoint(train_from(start, even, t.graphs, cfg).checkpoint) == balanced);
    }

    TEST_CASE("trace has one row per epoch and fixed columns") {
        Toy t = toy();
        TrainConfig cfg;
        cfg.epochs = 3;
        cfg.patience = 0;
        TrainResult r = train(t.pairs, t.graphs, cfg);
        CHECK(r.trace.size() == 3);
        std::string csv = trace_csv(r.trace);
        CHECK(csv.rfind("epoch,train_loss,train_acc,test_acc\n", 0) == 0);
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    }

    TEST_CASE("input errors") {
        Toy t = toy();
        TrainConfig cfg;
        CHECK_THROWS_AS(train({}, t.graphs, cfg), Error);
        CHECK_THROWS_AS(train({{0, 99, 1, false}}, t.graphs, cfg), Error);
        cfg.margin = 1.0;
        CHECK_THROWS_AS(train(t.pairs, t.graphs, cfg), Error);
        cfg.margin = 0.5;
        cfg.batch_size = 0;
        CHECK_THROWS_AS(train(t.pairs, t.graphs, cfg), Error);
        CHECK_THROWS_AS(optimizer_from_name("lbfgs"), Error);
    }
}

TEST_SUITE("checkpoint") {
    TEST_CASE("round trip reproduces inference bit for bit") {
        Checkpoint c{ModelParams::init({}, 12), 7, 0.25, 99};
        std::string bytes = serialize_checkpoint(c);
        Checkpoint back = deserialize_checkpoint(bytes);
        CHECK(back.epoch == 7);
        CHECK(back.loss == 0.25);
        CHECK(back.seed == 99);
        CHECK(back.params.hyper == c.params.hyper);
        CHECK(serialize_checkpoint(back) == bytes);
        GraphTensors g = encode(extract_dfg(DesignRef(fixture("full_adder.v"))));
        CHECK(embed(g, back.params) == embed(g, c.params));

        auto path = (std::filesystem::temp_directory_path() / "ipsim_ckpt_test.bin").string();
        save_checkpoint(c, path);
        CHECK(serialize_checkpoint(load_checkpoint(path)) == bytes);
        std::filesystem::remove(path);
    }

    TEST_CASE("layout is little-endian with the documented header") {
        std::string bytes = serialize_checkpoint({ModelParams::init({}, 1), 0, 0.0, 0});
        CHECK(bytes.substr(0, 8) == "IPSIMCKP");
        CHECK(bytes[8] == 1); // format version
        CHECK(bytes[12] == 1); // vocabulary version
        // header 8+4+4, hyper 4+4+8+1+8, input dim 8, meta 4+8+8, count 4, then matrices
        std::size_t expected = 73 + (8 + 36 * 16 * 8) + (8 + 16 * 16 * 8) + (8 + 16 * 8);
        CHECK(bytes.size() == expected);
    }

    TEST_CASE("guards") {
        std::string bytes = serialize_checkpoint({ModelParams::init({}, 1), 0, 0.0, 0});
        for (std::size_t cut : {std::size_t{0}, std::size_t{5}, std::size_t{40}, bytes.size() - 1})
            CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, cut)), FormatError);
        std::string vocab = bytes;
        vocab[12] = 2;
        CHECK_THROWS_WITH_AS(deserialize_checkpoint(vocab), doctest::Contains("vocabulary"), Error);
        std::string magic = bytes;
        magic[0] = 'X';
        CHECK_THROWS_AS(deserialize_checkpoint(magic), FormatError);
        CHECK_THROWS_AS(deserialize_checkpoint(bytes + "x"), FormatError);
    }
}

TEST_SUITE("detector") {
    TEST_CASE("cosine similarity") {
        Eigen::VectorXd h(3);
        h << 0.3, -1.2, 2.0;
        CHECK(cosine_similarity(h, h) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(cosine_similarity(h, -h) == doctest::Approx(-1.0).epsilon(1e-15));
        CHECK(cosine_similarity(Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 1, 0)) == 0.0);
        CHECK(cosine_similarity(h, 3.5 * h) == doctest::Approx(1.0).epsilon(1e-15));
        Eigen::VectorXd k(3);
        k << 1.0, 0.5, -0.25;
        CHECK(cosine_similarity(h, 7.0 * k) == doctest::Approx(cosine_similarity(h, k)).epsilon(1e-14));
        CHECK(cosine_similarity(h, k) == cosine_similarity(k, h));
        CHECK_THROWS_AS(cosine_similarity(h, Eigen::VectorXd::Zero(3)), ZeroEmbedding);
        CHECK_THROWS_AS(cosine_similarity(h, Eigen::VectorXd::Ones(2)), ShapeError);
        Rng rng(4);
        for (int i = 0; i < 100; ++i) {
            Eigen::VectorXd a(5), b(5);
            for (int j = 0; j < 5; ++j) {
                a(j) = rng.uniform(-1, 1);
                b(j) = rng.uniform(-1, 1);
            }
            double s = cosine_similarity(a, b);
            CHECK(s >= -1.0);
            CHECK(s <= 1.0);
        }
    }

    TEST_CASE("threshold is strict") {
        CHECK_FALSE(decide(0.5, 0.5).piracy);
        CHECK(decide(std::nextafter(0.5, 1.0), 0.5).piracy);
        CHECK(std::string(decide(0.2, 0.5).label()) == "no-piracy");
        CHECK(std::string(decide(0.9, 0.5).label()) == "piracy");
    }

    TEST_CASE("self pair and symmetry") {
        ModelParams p = ModelParams::init({}, 6);
        DesignRef a(fixture("full_adder.v")), b(fixture("full_adder_gates.v"));
        DesignRef r({fixture("ripple4.v")}, "ripple4");
        Verdict self = compare_designs(a, a, p);
        CHECK(std::abs(self.score - 1.0) <= 1e-9);
        CHECK(self.piracy);
        CHECK(compare_designs(a, r, p).score == compare_designs(r, a, p).score);
        // RTL and gate-level adders share a trimmed graph.
        CHECK(compare_designs(a, b, p).score == doctest::Approx(1.0).epsilon(1e-12));
    }

    TEST_CASE("confusion counts and delta sweep against a brute-force recount") {
        Rng rng(12);
        std::vector<double> scores;
        std::vector<int> labels;
        for (int i = 0; i < 200; ++i) {
            scores.push_back(std::round(rng.uniform(-1, 1) * 20) / 20); // many exact ties with the grid
            labels.push_back(rng.uniform() < 0.3 ? 1 : -1);
        }
        std::vector<double> grid = delta_grid(41);
        REQUIRE(grid.size() == 41);
        CHECK(grid.front() == -1.0);
        CHECK(grid.back() == 1.0);
        CHECK(grid[20] == 0.0);
        CHECK(grid[30] == 0.5);
        CHECK(grid[38] == 0.9);
        auto sweep = delta_sweep(scores, labels, grid);
        double best_acc = -1.0;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
            for (std::size_t i = 0; i < scores.size(); ++i) {
                bool pos = scores[i] > grid[k];
                tp += pos && labels[i] == 1;
                fp += pos && labels[i] == -1;
                tn += !pos && labels[i] == -1;
                fn += !pos && labels[i] == 1;
            }
            CHECK(sweep[k].delta == grid[k]);
            CHECK(sweep[k].counts.tp == tp);
            CHECK(sweep[k].counts.tn == tn);
            CHECK(sweep[k].counts.fp == fp);
            CHECK(sweep[k].counts.fn == fn);
            best_acc = std::max(best_acc, static_cast<double>(tp + tn) / 200.0);
        }
        CHECK(best_delta(sweep).counts.accuracy() == best_acc);
        CHECK_THROWS_AS(confusion({0.1}, {0}, 0.5), Error);
        CHECK_THROWS_AS(confusion({0.1, 0.2}, {1}, 0.5), Error);
    }

    TEST_CASE("best delta tie-break") {
        // Scores 0.2 (different) and 0.8 (similar): every delta in [0.2, 0.8) is perfect.
        auto sweep = delta_sweep({0.2, 0.8}, {-1, 1}, delta_grid(11));
        SweepPoint b = best_delta(sweep);
        CHECK(b.delta == doctest::Approx(0.4).epsilon(1e-15)); // grid step 0.2: 0.4 and 0.6 are equally near 0.5
        CHECK(b.counts.accuracy() == 1.0);
        auto one = delta_sweep({0.0}, {1}, {0.5, -0.5});
        CHECK(best_delta(one).delta == -0.5);
    }

    TEST_CASE("pipeline errors name their stage") {
        ModelParams p = ModelParams::init({}, 6);
        try {
            embed_design(DesignRef(fixture("does_not_exist.v")), p);
            FAIL("expected StageError");
        } catch (const StageError& e) {
            CHECK(e.stage() == "read");
        }
        auto path = (std::filesystem::temp_directory_path() / "ipsim_bad.v").string();
        {
            std::ofstream(path) << "module m(input a, output y);\n assign y = a +;\nendmodule\n";
        }
        try {
            extract_dfg(DesignRef(path));
            FAIL("expected StageError");
        } catch (const StageError& e) {
            CHECK(e.stage() == "parse");
            CHECK(e.design() == path);
            CHECK(std::string(e.what()).find(":2:") != std::string::npos);
        }
        std::filesystem::remove(path);
    }
}
