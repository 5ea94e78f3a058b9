#include "ipsim/corpus.hpp"
#include "ipsim/detector.hpp"
#include "ipsim/dfg_io.hpp"
#include "ipsim/error.hpp"
#include "ipsim/trainer.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace ipsim;

namespace {

// Stage errors carry their cause as a nested exception; fold it into one message.
std::string describe(const std::exception& e) {
    std::string msg = e.what();
    try {
        std::rethrow_if_nested(e);
    } catch (const std::exception& inner) {
        std::string cause = describe(inner);
        if (msg.find(cause) == std::string::npos)
            msg += ": " + cause;
    } catch (...) {
    }
    return msg;
}

DesignRef design(const py::object& src, const std::string& top) {
    if (py::isinstance<py::str>(src))
        return DesignRef(std::vector<std::string>{src.cast<std::string>()}, top);
    return DesignRef(src.cast<std::vector<std::string>>(), top);
}

HyperParams hyper_from(int layers, int hidden, double pool_ratio, const std::string& readout, double dropout) {
    HyperParams h;
    h.layers = layers;
    h.hidden = hidden;
    h.pool_ratio = pool_ratio;
    h.readout = readout_from_name(readout);
    h.dropout = dropout;
    return h;
}

py::dict trace_dict(const std::vector<EpochStats>& trace) {
    py::list epochs, loss, train_acc, test_acc;
    for (const auto& e : trace) {
        epochs.append(e.epoch);
        loss.append(e.train_loss);
        train_acc.append(e.train_acc);
        test_acc.append(e.test_acc);
    }
    py::dict d;
    d["epoch"] = epochs;
    d["train_loss"] = loss;
    d["train_acc"] = train_acc;
    d["test_acc"] = test_acc;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Hardware design similarity from dataflow graph embeddings";

    static py::exception<Error> py_error(m, "IpsimError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p)
                std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(py_error, describe(e).c_str());
        }
    });

    py::class_<Checkpoint>(m, "Model")
        .def_static(
            "init",
            [](std::uint64_t seed, int layers, int hidden, double pool_ratio, const std::string& readout,
               double dropout) {
                Checkpoint c;
                c.params = ModelParams::init(hyper_from(layers, hidden, pool_ratio, readout, dropout), seed);
                c.seed = seed;
                return c;
            },
            py::arg("seed") = 0, py::arg("layers") = 2, py::arg("hidden") = 16, py::arg("pool_ratio") = 0.5,
            py::arg("readout") = "max", py::arg("dropout") = 0.1)
        .def_static("load", &load_checkpoint, py::arg("path"))
        .def_static("from_bytes", [](const py::bytes& b) { return deserialize_checkpoint(std::string(b)); })
        .def("save", &save_checkpoint, py::arg("path"))
        .def("to_bytes", [](const Checkpoint& c) { return py::bytes(serialize_checkpoint(c)); })
        .def_property_readonly("epoch", [](const Checkpoint& c) { return c.epoch; })
        .def_property_readonly("loss", [](const Checkpoint& c) { return c.loss; })
        .def_property_readonly("hidden", [](const Checkpoint& c) { return c.params.hyper.hidden; })
        .def_property_readonly("readout", [](const Checkpoint& c) { return readout_name(c.params.hyper.readout); })
        .def_property_readonly("weights", [](const Checkpoint& c) {
            std::vector<Eigen::MatrixXd> out;
            for (const auto* t : c.params.tensors())
                out.push_back(*t);
            return out;
        });

    m.def(
        "dfg_json",
        [](const py::object& src, const std::string& top, bool drop_structural) {
            TrimOptions o;
            o.drop_structural = drop_structural;
            return serialize_dfg(extract_dfg(design(src, top), o));
        },
        py::arg("source"), py::arg("top") = "", py::arg("drop_structural") = false,
        "Trimmed dataflow graph of a design as a JSON document.");

    m.def(
        "embed",
        [](const py::object& src, const Checkpoint& model, const std::string& top) {
            return Eigen::VectorXd(embed_design(design(src, top), model.params));
        },
        py::arg("source"), py::arg("model"), py::arg("top") = "");

    m.def("cosine_similarity", &cosine_similarity, py::arg("h1"), py::arg("h2"));
    m.def("cosine_embedding_loss", &cosine_embedding_loss, py::arg("score"), py::arg("label"),
          py::arg("margin") = 0.5);

    m.def(
        "compare",
        [](const py::object& a, const py::object& b, const Checkpoint& model, double delta) {
            Verdict v = compare_designs(design(a, ""), design(b, ""), model.params, delta);
            return py::make_tuple(v.score, v.piracy);
        },
        py::arg("a"), py::arg("b"), py::arg("model"), py::arg("delta") = kDefaultDelta,
        "(score, piracy) for two designs; piracy iff score > delta.");

    m.def(
        "train",
        [](const std::string& corpus, std::uint64_t seed, int epochs, int batch_size, double learning_rate,
           double margin, const std::string& optimizer, const std::string& readout, bool balance, double dropout,
           double test_fraction, int patience, std::size_t threads) {
            TrainConfig cfg;
            cfg.seed = seed;
            cfg.epochs = epochs;
            cfg.batch_size = batch_size;
            cfg.learning_rate = learning_rate;
            cfg.margin = margin;
            cfg.optimizer = optimizer_from_name(optimizer);
            cfg.hyper.readout = readout_from_name(readout);
            cfg.balance_classes = balance;
            cfg.dropout = cfg.hyper.dropout = dropout;
            cfg.test_fraction = test_fraction;
            cfg.patience = patience;
            cfg.threads = threads;
            cfg.validate();
            TrainResult r;
            {
                py::gil_scoped_release release;
                ScanResult scanned = scan(corpus, "", threads);
                Dataset ds = load_dataset(split(make_pairs(scanned.families), test_fraction, seed), threads);
                r = train(ds.pairs, ds.graphs, cfg);
            }
            return py::make_tuple(r.checkpoint, trace_dict(r.trace));
        },
        py::arg("corpus"), py::arg("seed") = 0, py::arg("epochs") = 50, py::arg("batch_size") = 64,
        py::arg("learning_rate") = 0.001, py::arg("margin") = 0.5, py::arg("optimizer") = "sgd",
        py::arg("readout") = "max", py::arg("balance") = false, py::arg("dropout") = 0.1,
        py::arg("test_fraction") = 0.2, py::arg("patience") = 10, py::arg("threads") = 0,
        "Train on a corpus directory. Returns (model, trace).");

    m.def(
        "variants",
        [](const std::string& path, int count, std::uint64_t seed, const std::vector<std::string>& transforms) {
            std::vector<Transform> ts;
            for (const auto& t : transforms)
                ts.push_back(transform_from_name(t));
            std::vector<std::pair<std::string, std::string>> out;
            for (auto& v : synthesize_variants(path, ts, count, seed))
                out.emplace_back(v.name, v.text);
            return out;
        },
        py::arg("path"), py::arg("count") = 6, py::arg("seed") = 0,
        py::arg("transforms") = std::vector<std::string>{}, "[(name, verilog_text)] of dataflow-preserving variants.");

    m.def("dataflow_equivalent", &dataflow_equivalent, py::arg("a"), py::arg("b"));
}
