#pragma once

#include "ipsim/ast.hpp"
#include "ipsim/graph_encode.hpp"
#include "ipsim/trainer.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ipsim {

enum class Abstraction { Rtl, Netlist };

const char* abstraction_name(Abstraction a);
Abstraction abstraction_from_name(const std::string& name);

struct DesignEntry {
    std::string path;
    Abstraction abstraction = Abstraction::Rtl;

    friend bool operator==(const DesignEntry&, const DesignEntry&) = default;
};

struct DesignFamily {
    std::string id;
    std::vector<DesignEntry> members;
};

struct SkipRecord {
    std::string path;
    std::string reason; // diagnostic line
};

struct ScanResult {
    std::vector<DesignFamily> families; // sorted by id, members sorted by path
    std::vector<SkipRecord> skipped;
};

/// Collects design families. With a manifest (lines `family_id, path,
/// rtl|netlist`, paths relative to the manifest, `#` comments) the manifest
/// decides the grouping; `root/manifest.txt` is used when present and no
/// manifest is given. Otherwise every `root/<family>/**/*.v` file is a
/// design of that family, a netlist when a directory on its path is named
/// `netlist` or its stem ends in `_netlist`.
///
/// Every design is run through the front end and DFG builder; files that
/// fail are listed in `skipped` instead. Throws Error when nothing remains.
ScanResult scan(const std::string& root, const std::string& manifest = "", std::size_t threads = 0);

/// Parses a manifest's text. Relative paths are joined to `base_dir`.
std::vector<DesignFamily> parse_manifest(const std::string& text, const std::string& base_dir);
std::string write_manifest(const std::vector<DesignFamily>& families, const std::string& base_dir = "");

enum class Split { Train, Test };

struct PairRecord {
    std::string a, b;
    int label = 1; // +1 same family, -1 different
    Split split = Split::Train;
};

/// Every unordered pair of designs: +1 within a family, -1 across. Designs
/// of different abstractions are only paired when `mix_abstractions`.
/// Throws Error with fewer than two families.
std::vector<PairRecord> make_pairs(const std::vector<DesignFamily>& families, bool mix_abstractions = false);

/// Stratified split: within each label, round(test_fraction * count) pairs
/// chosen by a seeded shuffle go to the test split. test_fraction must lie
/// in (0, 1).
std::vector<PairRecord> split(std::vector<PairRecord> pairs, double test_fraction, std::uint64_t seed);

/// CSV `a_path,b_path,label,split` with a header line.
std::string write_pair_manifest(const std::vector<PairRecord>& pairs);
std::vector<PairRecord> parse_pair_manifest(const std::string& text);

/// Encoded graphs for every design named by `pairs` (first-appearance
/// order) and the pairs re-expressed as indices into them. Extraction runs
/// in parallel; the first failure is rethrown.
struct Dataset {
    std::vector<std::string> designs;
    std::vector<GraphTensors> graphs;
    std::vector<TrainPair> pairs;
};

Dataset load_dataset(const std::vector<PairRecord>& pairs, std::size_t threads = 0);

enum class Transform { Rename, ReorderDecls, ReorderStatements, Wrapper, SplitAssigns };

const char* transform_name(Transform t);
Transform transform_from_name(const std::string& name);
const std::vector<Transform>& all_transforms();

struct Variant {
    std::string name; // `<stem>_v<index>`
    std::string text;
    std::vector<Transform> applied;
};

/// Applies the given transforms (order as for synthesize_variants), seeded.
Ast apply_transforms(const Ast& ast, const std::vector<Transform>& transforms, std::uint64_t seed);

/// `count` variants of the design in `path`. Each draws a non-empty subset
/// of `transforms` (all of them when empty) and applies it in the order
/// split, declaration reorder, statement reorder, wrapper, rename.
std::vector<Variant> synthesize_variants(const std::string& path, const std::vector<Transform>& transforms,
                                         int count, std::uint64_t seed);

/// Whether two source files have kind-isomorphic trimmed DFGs.
bool dataflow_equivalent(const std::string& path_a, const std::string& path_b);

} // namespace ipsim
