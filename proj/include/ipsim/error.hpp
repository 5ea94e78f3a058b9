#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ipsim {

/// Position inside a source file. Lines and columns are 1-based.
struct SourceLocation {
    std::string file;
    int line = 0;
    int column = 0;

    std::string str() const;
    friend bool operator==(const SourceLocation&, const SourceLocation&) = default;
};

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PreprocessError : public Error {
public:
    PreprocessError(SourceLocation loc, const std::string& message);
    const SourceLocation& location() const { return loc_; }

private:
    SourceLocation loc_;
};

class SyntaxError : public Error {
public:
    SyntaxError(SourceLocation loc, std::vector<std::string> expected, const std::string& found);
    const SourceLocation& location() const { return loc_; }
    const std::vector<std::string>& expected() const { return expected_; }

private:
    SourceLocation loc_;
    std::vector<std::string> expected_;
};

/// Valid Verilog that falls outside the supported synthesizable subset.
/// Corpus scans skip files raising this instead of failing.
class UnsupportedConstruct : public Error {
public:
    UnsupportedConstruct(SourceLocation loc, std::string construct);
    const SourceLocation& location() const { return loc_; }
    const std::string& construct() const { return construct_; }
    /// `path:line:col: unsupported: <name>`
    std::string diagnostic() const;

private:
    SourceLocation loc_;
    std::string construct_;
};

class ElaborationError : public Error {
public:
    using Error::Error;
};

class UnknownModule : public ElaborationError {
public:
    explicit UnknownModule(const std::string& name);
};

class RecursiveInstantiation : public ElaborationError {
public:
    explicit RecursiveInstantiation(const std::vector<std::string>& cycle);
};

class PortArityMismatch : public ElaborationError {
public:
    PortArityMismatch(const std::string& instance, std::size_t expected, std::size_t got);
};

class DataflowError : public Error {
public:
    using Error::Error;
};

class MultipleContinuousDrivers : public DataflowError {
public:
    explicit MultipleContinuousDrivers(const std::string& signal);
};

class UndrivenSignal : public DataflowError {
public:
    explicit UndrivenSignal(const std::string& signal);
};

/// Malformed serialized document (DFG JSON, checkpoint, manifest, CSV).
class FormatError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class EmptyGraph : public Error {
public:
    EmptyGraph() : Error("empty graph") {}
};

/// Raised when a similarity is requested for an all-zero embedding.
class ZeroEmbedding : public Error {
public:
    ZeroEmbedding() : Error("zero-norm embedding (degenerate or untrained model)") {}
};

/// Wraps an upstream failure with the pipeline stage and design it came from.
class StageError : public Error {
public:
    StageError(std::string stage, std::string design, const std::string& message);
    const std::string& stage() const { return stage_; }
    const std::string& design() const { return design_; }

private:
    std::string stage_;
    std::string design_;
};

} // namespace ipsim
