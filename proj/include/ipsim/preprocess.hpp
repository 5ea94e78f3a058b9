#pragma once

#include <map>
#include <string>
#include <vector>

namespace ipsim {

struct SourceFile {
    std::string path;
    std::string text;
};

/// A compilation unit: the files of one design, the name of its top module,
/// and macros predefined on the command line.
struct SourceUnit {
    std::vector<SourceFile> files;
    std::string top_module; // empty: pick the unique uninstantiated module
    std::map<std::string, std::string> defines;
    std::string root; // fallback directory for `include; empty = directory of the first file
};

struct LineOrigin {
    std::string file;
    int line = 0;
};

/// One file after directive resolution. `text` has no comments, no backtick
/// directives, no blank lines and no trailing whitespace; `origins[i]` maps
/// output line i+1 back to the line it came from.
struct PreprocessedFile {
    std::string path;
    std::string text;
    std::vector<LineOrigin> origins;
};

std::vector<PreprocessedFile> preprocess(const SourceUnit& unit);

/// Single-file convenience over preprocess(); includes resolve against `path`'s directory.
PreprocessedFile preprocess_text(const std::string& text, const std::string& path = "<input>",
                                 const std::map<std::string, std::string>& defines = {});

/// Reads a file from disk into a SourceUnit with that single file.
SourceUnit load_unit(const std::vector<std::string>& paths, const std::string& top = "");

} // namespace ipsim
