// ipsim: hardware design similarity from the command line.

#include "ipsim/corpus.hpp"
#include "ipsim/detector.hpp"
#include "ipsim/dfg_io.hpp"
#include "ipsim/error.hpp"
#include "ipsim/graph_encode.hpp"
#include "ipsim/io.hpp"
#include "ipsim/parallel.hpp"
#include "ipsim/projection.hpp"
#include "ipsim/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

using namespace ipsim;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Common {
    std::uint64_t seed = 0;
    double delta = kDefaultDelta;
    std::string checkpoint;
    std::string out;
    std::string format = "json";
    bool timing = false;
};

// All command output goes through here: stdout, or one atomic file write.
void emit(const Common& c, const std::string& text) {
    if (c.out.empty())
        std::cout << text << std::flush;
    else
        write_file_atomic(c.out, text);
}

std::string num(double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"')
            out += '"';
        out += ch;
    }
    return out + "\"";
}

DesignRef design_of(const std::vector<std::string>& files, const std::string& top) {
    return DesignRef(files, top);
}

// ---- dfg ---------------------------------------------------------------

struct DfgArgs {
    std::vector<std::string> inputs;
    std::string top;
    bool stats = false;
    bool drop_structural = false;
};

int run_dfg(const DfgArgs& a, const Common& c) {
    TrimOptions opts;
    opts.drop_structural = a.drop_structural;
    DataFlowGraph g = extract_dfg(design_of(a.inputs, a.top), opts);
    if (!a.stats) {
        emit(c, serialize_dfg(g) + "\n");
        return 0;
    }
    std::size_t leaves = g.leaves().size();
    if (c.format == "csv")
        emit(c, "design,nodes,edges,roots,leaves\n" + csv_field(g.name) + "," + std::to_string(g.size()) + "," +
                    std::to_string(g.edges.size()) + "," + std::to_string(g.roots.size()) + "," +
                    std::to_string(leaves) + "\n");
    else
        emit(c, json{{"design", g.name},
                     {"nodes", g.size()},
                     {"edges", g.edges.size()},
                     {"roots", g.roots.size()},
                     {"leaves", leaves}}
                        .dump() +
                    "\n");
    return 0;
}

// ---- train -------------------------------------------------------------

struct TrainArgs {
    std::string root;
    std::string manifest;
    std::string trace;
    std::string pairs_out;
    std::string optimizer = "sgd";
    std::string readout = "max";
    bool mix = false;
    bool quiet = false;
    TrainConfig config;
};

int run_train(TrainArgs a, const Common& c) {
    if (c.out.empty())
        throw Error("train needs --out for the checkpoint");
    a.config.seed = c.seed;
    a.config.delta = c.delta;
    a.config.optimizer = optimizer_from_name(a.optimizer);
    a.config.hyper.readout = readout_from_name(a.readout);
    a.config.hyper.dropout = a.config.dropout;
    a.config.validate();

    auto t_load = Clock::now();
    ScanResult scanned = scan(a.root, a.manifest, a.config.threads);
    for (const auto& s : scanned.skipped)
        std::cerr << "skipped " << s.path << ": " << s.reason << "\n";
    auto records = split(make_pairs(scanned.families, a.mix), a.config.test_fraction, a.config.seed);
    Dataset ds = load_dataset(records, a.config.threads);
    double load_ms = ms_since(t_load);

    std::size_t n_train = 0, n_test = 0;
    for (const auto& p : ds.pairs)
        ++(p.test ? n_test : n_train);
    if (!a.quiet)
        std::cerr << scanned.families.size() << " families, " << ds.designs.size() << " designs, " << n_train
                  << " train / " << n_test << " test pairs\n";

    auto t_train = Clock::now();
    TrainResult r = train(ds.pairs, ds.graphs, a.config, [&](const EpochStats& e) {
        if (!a.quiet)
            std::cerr << "epoch " << e.epoch << " loss " << e.train_loss << " train_acc " << e.train_acc
                      << " test_acc " << e.test_acc << "\n";
    });
    double train_ms = ms_since(t_train);

    save_checkpoint(r.checkpoint, c.out);
    std::string trace_path = a.trace.empty() ? c.out + ".trace.csv" : a.trace;
    write_file_atomic(trace_path, trace_csv(r.trace));
    if (!a.pairs_out.empty())
        write_file_atomic(a.pairs_out, write_pair_manifest(records));

    json summary{{"checkpoint", c.out},
                 {"trace", trace_path},
                 {"epochs_run", r.trace.size()},
                 {"best_epoch", r.checkpoint.epoch},
                 {"families", scanned.families.size()},
                 {"designs", ds.designs.size()},
                 {"train_pairs", n_train},
                 {"test_pairs", n_test},
                 {"skipped", scanned.skipped.size()}};
    for (const auto& e : r.trace)
        if (e.epoch == r.checkpoint.epoch) {
            summary["test_acc"] = e.test_acc;
            summary["train_acc"] = e.train_acc;
        }
    if (c.timing) {
        // Per-sample costs on this machine; the test figure is one full
        // inference (two embeddings and a score) per held-out pair.
        auto t_test = Clock::now();
        auto emb = embed_all(ds.graphs, r.checkpoint.params, a.config.threads);
        double sink = 0.0;
        for (const auto& p : ds.pairs)
            if (p.test && emb[p.a].norm() > 0 && emb[p.b].norm() > 0)
                sink += cosine_similarity(emb[p.a], emb[p.b]);
        (void)sink;
        double test_ms = ms_since(t_test);
        double pair_epochs = static_cast<double>(n_train) * static_cast<double>(std::max<std::size_t>(1, r.trace.size()));
        summary["timing_ms"] = {{"load", load_ms},
                                {"train_total", train_ms},
                                {"train_per_pair_epoch", pair_epochs > 0 ? train_ms / pair_epochs : 0.0},
                                {"test_per_pair", n_test > 0 ? test_ms / static_cast<double>(n_test) : 0.0}};
    }
    std::cout << summary.dump() << "\n";
    return 0;
}

// ---- compare -----------------------------------------------------------

struct CompareArgs {
    std::vector<std::string> designs;
    std::string batch;
    std::string top;
};

std::vector<std::pair<std::string, std::string>> read_batch(const std::string& path) {
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream in(read_text_file(path));
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#')
            continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw FormatError(path + ":" + std::to_string(lineno) + ": expected `a_path,b_path`");
        std::string a = line.substr(0, comma), rest = line.substr(comma + 1);
        std::string b = rest.substr(0, rest.find(','));
        if (lineno == 1 && a == "a_path")
            continue;
        out.emplace_back(a, b);
    }
    return out;
}

int run_compare(const CompareArgs& a, const Common& c) {
    if (c.checkpoint.empty())
        throw Error("compare needs --checkpoint");
    std::vector<std::pair<std::string, std::string>> jobs;
    if (!a.batch.empty()) {
        if (!a.designs.empty())
            throw Error("compare takes either two designs or --batch, not both");
        jobs = read_batch(a.batch);
    } else if (a.designs.size() == 2) {
        jobs.emplace_back(a.designs[0], a.designs[1]);
    } else {
        throw Error("compare needs exactly two designs (or --batch FILE)");
    }
    Checkpoint ck = load_checkpoint(c.checkpoint);

    // Each distinct design is embedded once.
    std::vector<std::string> names;
    std::map<std::string, std::size_t> index;
    for (const auto& [x, y] : jobs)
        for (const auto* s : {&x, &y})
            if (index.emplace(*s, names.size()).second)
                names.push_back(*s);
    std::vector<Embedding> emb(names.size());
    auto t0 = Clock::now();
    parallel_for(names.size(), [&](std::size_t i) {
        emb[i] = embed_design(DesignRef({names[i]}, a.top), ck.params);
    });

    std::string text = c.format == "csv" ? "a,b,score,delta,verdict\n" : "";
    for (const auto& [x, y] : jobs) {
        Verdict v = decide(cosine_similarity(emb[index[x]], emb[index[y]]), c.delta);
        if (c.format == "csv")
            text += csv_field(x) + "," + csv_field(y) + "," + num(v.score) + "," + num(v.delta) + "," + v.label() + "\n";
        else
            text += json{{"a", x}, {"b", y}, {"score", v.score}, {"delta", v.delta}, {"verdict", v.label()}}.dump() +
                    "\n";
    }
    if (c.timing)
        std::cerr << "compare: " << ms_since(t0) / static_cast<double>(jobs.size()) << " ms per pair\n";
    emit(c, text);
    return 0;
}

// ---- eval --------------------------------------------------------------

struct EvalArgs {
    std::string pairs;
    std::string split = "test";
    bool sweep = false;
    int steps = 41;
    std::string scores_out;
};

json confusion_json(const Confusion& k) {
    return json{{"accuracy", k.accuracy()}, {"tp", k.tp}, {"tn", k.tn}, {"fp", k.fp}, {"fn", k.fn}};
}

int run_eval(const EvalArgs& a, const Common& c) {
    if (c.checkpoint.empty())
        throw Error("eval needs --checkpoint");
    if (a.split != "test" && a.split != "train" && a.split != "all")
        throw Error("--split must be test, train or all");
    auto records = parse_pair_manifest(read_text_file(a.pairs));
    std::vector<PairRecord> chosen;
    for (const auto& r : records)
        if (a.split == "all" || (a.split == "test") == (r.split == Split::Test))
            chosen.push_back(r);
    if (chosen.empty())
        throw Error("no pairs in the " + a.split + " split of " + a.pairs);
    Checkpoint ck = load_checkpoint(c.checkpoint);
    auto t0 = Clock::now();
    Dataset ds = load_dataset(chosen);
    auto emb = embed_all(ds.graphs, ck.params);
    std::vector<double> scores;
    std::vector<int> labels;
    std::size_t degenerate = 0;
    for (const auto& p : ds.pairs) {
        // A zero embedding scores 0, as during training, and is counted.
        double s = 0.0;
        try {
            s = cosine_similarity(emb[p.a], emb[p.b]);
        } catch (const ZeroEmbedding&) {
            ++degenerate;
        }
        scores.push_back(s);
        labels.push_back(p.label);
    }
    double per_pair = ms_since(t0) / static_cast<double>(scores.size());

    double sum_sim = 0, sum_diff = 0;
    std::size_t n_sim = 0, n_diff = 0;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (labels[i] == 1) {
            sum_sim += scores[i];
            ++n_sim;
        } else {
            sum_diff += scores[i];
            ++n_diff;
        }
    Confusion at = confusion(scores, labels, c.delta);
    std::vector<SweepPoint> sweep;
    if (a.sweep)
        sweep = delta_sweep(scores, labels, delta_grid(a.steps));

    if (!a.scores_out.empty()) {
        std::string s = "a_path,b_path,label,score\n";
        for (std::size_t i = 0; i < chosen.size(); ++i)
            s += csv_field(chosen[i].a) + "," + csv_field(chosen[i].b) + "," + std::to_string(labels[i]) + "," +
                 num(scores[i]) + "\n";
        write_file_atomic(a.scores_out, s);
    }

    if (c.format == "csv") {
        std::string s = "delta,accuracy,tp,tn,fp,fn\n";
        auto row = [&](double d, const Confusion& k) {
            s += num(d) + "," + num(k.accuracy()) + "," + std::to_string(k.tp) + "," + std::to_string(k.tn) + "," +
                 std::to_string(k.fp) + "," + std::to_string(k.fn) + "\n";
        };
        if (sweep.empty())
            row(c.delta, at);
        for (const auto& p : sweep)
            row(p.delta, p.counts);
        emit(c, s);
    } else {
        json j = confusion_json(at);
        j["delta"] = c.delta;
        j["pairs"] = scores.size();
        j["degenerate_pairs"] = degenerate;
        j["mean_score_similar"] = n_sim ? json(sum_sim / static_cast<double>(n_sim)) : json(nullptr);
        j["mean_score_different"] = n_diff ? json(sum_diff / static_cast<double>(n_diff)) : json(nullptr);
        if (!sweep.empty()) {
            json rows = json::array();
            for (const auto& p : sweep) {
                json r = confusion_json(p.counts);
                r["delta"] = p.delta;
                rows.push_back(r);
            }
            j["sweep"] = rows;
            SweepPoint best = best_delta(sweep);
            j["best"] = confusion_json(best.counts);
            j["best"]["delta"] = best.delta;
        }
        if (c.timing)
            j["ms_per_pair"] = per_pair;
        emit(c, j.dump(2) + "\n");
    }
    return 0;
}

// ---- project -----------------------------------------------------------

struct ProjectArgs {
    std::string embeddings;
    std::string corpus;
    std::string manifest;
    std::string embeddings_out;
    int dims = 2;
};

int run_project(const ProjectArgs& a, const Common& c) {
    LabelledPoints pts;
    if (!a.embeddings.empty()) {
        if (!a.corpus.empty())
            throw Error("project takes either --embeddings or a corpus, not both");
        pts = parse_points_csv(read_text_file(a.embeddings));
    } else {
        if (a.corpus.empty() || c.checkpoint.empty())
            throw Error("project needs --embeddings CSV or a corpus root with --checkpoint");
        Checkpoint ck = load_checkpoint(c.checkpoint);
        ScanResult scanned = scan(a.corpus, a.manifest);
        std::vector<std::string> paths;
        for (const auto& f : scanned.families)
            for (const auto& m : f.members)
                paths.push_back(m.path);
        std::vector<GraphTensors> graphs(paths.size());
        parallel_for(paths.size(), [&](std::size_t i) { graphs[i] = encode(extract_dfg(DesignRef(paths[i]))); });
        auto emb = embed_all(graphs, ck.params);
        pts.names = paths;
        pts.values.resize(static_cast<Eigen::Index>(emb.size()), ck.params.gcn_weights.back().cols());
        for (std::size_t i = 0; i < emb.size(); ++i)
            pts.values.row(static_cast<Eigen::Index>(i)) = emb[i].transpose();
        if (!a.embeddings_out.empty())
            write_file_atomic(a.embeddings_out, write_points_csv(pts, "h"));
    }
    Pca pca = fit_pca(pts.values, a.dims);
    LabelledPoints coords{pts.names, pca.transform(pts.values)};
    emit(c, write_points_csv(coords, "pc"));
    return 0;
}

// ---- variants ----------------------------------------------------------

struct VariantArgs {
    std::string input;
    int count = 6;
    std::vector<std::string> transforms;
    bool check = false;
};

int run_variants(const VariantArgs& a, const Common& c) {
    if (c.out.empty())
        throw Error("variants needs --out DIR");
    if (a.count < 1)
        throw Error("--count must be positive");
    std::vector<Transform> ts;
    for (const auto& t : a.transforms)
        ts.push_back(transform_from_name(t));
    auto variants = synthesize_variants(a.input, ts, a.count, c.seed);
    int bad = 0;
    std::string report = c.format == "csv" ? "variant,transforms,equivalent\n" : "";
    for (const auto& v : variants) {
        std::string path = (fs::path(c.out) / (v.name + ".v")).string();
        write_file_atomic(path, v.text);
        std::string applied;
        for (Transform t : v.applied)
            applied += (applied.empty() ? "" : "+") + std::string(transform_name(t));
        json row{{"variant", path}, {"transforms", applied}};
        std::string eq = "unchecked";
        if (a.check) {
            bool ok = dataflow_equivalent(a.input, path);
            bad += !ok;
            eq = ok ? "true" : "false";
            row["equivalent"] = ok;
        }
        report += c.format == "csv" ? csv_field(path) + "," + applied + "," + eq + "\n" : row.dump() + "\n";
    }
    std::cout << report;
    if (bad > 0) {
        std::cerr << "error: " << bad << " variant(s) changed the trimmed dataflow graph\n";
        return 3;
    }
    return 0;
}

void print_error(const std::exception& e, const std::string& outer = "") {
    // Stage errors already quote their cause; only print causes that add text.
    if (outer.empty())
        std::cerr << "error: " << e.what() << "\n";
    else if (outer.find(e.what()) == std::string::npos)
        std::cerr << "  caused by: " << e.what() << "\n";
    try {
        std::rethrow_if_nested(e);
    } catch (const std::exception& inner) {
        print_error(inner, e.what());
    } catch (...) {
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ipsim: hardware IP similarity via dataflow graph embeddings"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", common.seed, "Seed for every random choice")->capture_default_str();
        sub->add_option("--delta", common.delta, "Decision boundary on the similarity score")->capture_default_str();
        sub->add_option("--checkpoint", common.checkpoint, "Model checkpoint");
        sub->add_option("--out", common.out, "Output path (stdout when omitted)");
        sub->add_option("--format", common.format, "Record format")
            ->check(CLI::IsMember({"json", "csv"}))
            ->capture_default_str();
        sub->add_flag("--timing", common.timing, "Report per-sample milliseconds");
    };

    DfgArgs dfg;
    auto* s_dfg = app.add_subcommand("dfg", "Extract the trimmed dataflow graph of a design");
    s_dfg->add_option("inputs", dfg.inputs, "Verilog source files")->required();
    s_dfg->add_option("--top", dfg.top, "Top module (default: the uninstantiated one)");
    s_dfg->add_flag("--stats", dfg.stats, "Print node and edge counts instead of the graph");
    s_dfg->add_flag("--drop-structural", dfg.drop_structural, "Also splice out concatenation and part-select nodes");
    add_common(s_dfg);

    TrainArgs tr;
    auto* s_train = app.add_subcommand("train", "Train on a corpus of design families");
    s_train->add_option("corpus", tr.root, "Corpus root directory")->required();
    s_train->add_option("--manifest", tr.manifest, "Family manifest (overrides directory layout)");
    s_train->add_option("--trace", tr.trace, "Trace CSV path (default: <out>.trace.csv)");
    s_train->add_option("--pairs-out", tr.pairs_out, "Write the generated pair manifest here");
    s_train->add_flag("--mix-abstractions", tr.mix, "Also pair RTL with netlist designs");
    s_train->add_flag("--balance", tr.config.balance_classes, "Weight similar and different pairs equally");
    s_train->add_option("--epochs", tr.config.epochs)->capture_default_str();
    s_train->add_option("--batch-size", tr.config.batch_size)->capture_default_str();
    s_train->add_option("--lr", tr.config.learning_rate)->capture_default_str();
    s_train->add_option("--margin", tr.config.margin)->capture_default_str();
    s_train->add_option("--patience", tr.config.patience, "0 disables early stopping")->capture_default_str();
    s_train->add_option("--test-fraction", tr.config.test_fraction)->capture_default_str();
    s_train->add_option("--dropout", tr.config.dropout)->capture_default_str();
    s_train->add_option("--optimizer", tr.optimizer)
        ->check(CLI::IsMember({"sgd", "momentum", "adam"}))
        ->capture_default_str();
    s_train->add_option("--layers", tr.config.hyper.layers)->capture_default_str();
    s_train->add_option("--hidden", tr.config.hyper.hidden)->capture_default_str();
    s_train->add_option("--pool-ratio", tr.config.hyper.pool_ratio)->capture_default_str();
    s_train->add_option("--readout", tr.readout)->check(CLI::IsMember({"max", "mean", "sum"}))->capture_default_str();
    s_train->add_option("--threads", tr.config.threads, "Worker count (0: IPSIM_THREADS or all cores)");
    s_train->add_flag("--quiet", tr.quiet, "No per-epoch progress on stderr");
    add_common(s_train);

    CompareArgs cmp;
    auto* s_cmp = app.add_subcommand("compare", "Score two designs against a trained model");
    s_cmp->add_option("designs", cmp.designs, "Two Verilog files");
    s_cmp->add_option("--batch", cmp.batch, "CSV of `a_path,b_path` lines; one record per line");
    s_cmp->add_option("--top", cmp.top, "Top module for both designs");
    add_common(s_cmp);

    EvalArgs ev;
    auto* s_eval = app.add_subcommand("eval", "Accuracy and confusion counts over a pair manifest");
    s_eval->add_option("pairs", ev.pairs, "Pair manifest CSV")->required();
    s_eval->add_option("--split", ev.split, "test, train or all")->capture_default_str();
    s_eval->add_flag("--sweep", ev.sweep, "Also evaluate a grid of thresholds over [-1, 1]");
    s_eval->add_option("--steps", ev.steps, "Grid size for --sweep")->capture_default_str();
    s_eval->add_option("--scores-out", ev.scores_out, "Write per-pair scores here");
    add_common(s_eval);

    ProjectArgs pj;
    auto* s_proj = app.add_subcommand("project", "Principal-component coordinates of design embeddings");
    s_proj->add_option("corpus", pj.corpus, "Corpus root (with --checkpoint)");
    s_proj->add_option("--embeddings", pj.embeddings, "Embedding CSV (name column, then values)");
    s_proj->add_option("--manifest", pj.manifest, "Family manifest for the corpus");
    s_proj->add_option("--embeddings-out", pj.embeddings_out, "Also write the embeddings CSV here");
    s_proj->add_option("--dims", pj.dims)->capture_default_str();
    add_common(s_proj);

    VariantArgs va;
    auto* s_var = app.add_subcommand("variants", "Write dataflow-preserving rewrites of a design");
    s_var->add_option("input", va.input, "Verilog source file")->required();
    s_var->add_option("--count", va.count)->capture_default_str();
    s_var->add_option("--transforms", va.transforms, "Subset of rename, reorder-decls, reorder-statements, wrapper, split-assigns")
        ->delimiter(',');
    s_var->add_flag("--check", va.check, "Verify each variant's trimmed DFG against the original");
    add_common(s_var);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*s_dfg)
            return run_dfg(dfg, common);
        if (*s_train)
            return run_train(tr, common);
        if (*s_cmp)
            return run_compare(cmp, common);
        if (*s_eval)
            return run_eval(ev, common);
        if (*s_proj)
            return run_project(pj, common);
        if (*s_var)
            return run_variants(va, common);
    } catch (const Error& e) {
        print_error(e);
        return 2;
    } catch (const std::exception& e) {
        print_error(e);
        return 3;
    }
    return 3;
}
