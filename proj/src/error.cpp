#include "ipsim/error.hpp"

#include <sstream>

namespace ipsim {

std::string SourceLocation::str() const {
    std::ostringstream os;
    os << (file.empty() ? "<input>" : file) << ':' << line << ':' << column;
    return os.str();
}

PreprocessError::PreprocessError(SourceLocation loc, const std::string& message)
    : Error(loc.str() + ": " + message), loc_(std::move(loc)) {}

namespace {

std::string syntax_message(const SourceLocation& loc, const std::vector<std::string>& expected,
                           const std::string& found) {
    std::ostringstream os;
    os << loc.str() << ": syntax error: expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (i)
            os << (i + 1 == expected.size() ? " or " : ", ");
        os << expected[i];
    }
    os << ", found " << found;
    return os.str();
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i)
            out += sep;
        out += parts[i];
    }
    return out;
}

} // namespace

SyntaxError::SyntaxError(SourceLocation loc, std::vector<std::string> expected, const std::string& found)
    : Error(syntax_message(loc, expected, found)), loc_(std::move(loc)), expected_(std::move(expected)) {}

UnsupportedConstruct::UnsupportedConstruct(SourceLocation loc, std::string construct)
    : Error(loc.str() + ": unsupported: " + construct), loc_(std::move(loc)), construct_(std::move(construct)) {}

std::string UnsupportedConstruct::diagnostic() const { return loc_.str() + ": unsupported: " + construct_; }

UnknownModule::UnknownModule(const std::string& name) : ElaborationError("unknown module '" + name + "'") {}

RecursiveInstantiation::RecursiveInstantiation(const std::vector<std::string>& cycle)
    : ElaborationError("recursive instantiation: " + join(cycle, " -> ")) {}

PortArityMismatch::PortArityMismatch(const std::string& instance, std::size_t expected, std::size_t got)
    : ElaborationError("port arity mismatch on instance '" + instance + "': expected " + std::to_string(expected) +
                       ", got " + std::to_string(got)) {}

MultipleContinuousDrivers::MultipleContinuousDrivers(const std::string& signal)
    : DataflowError("multiple drivers for signal '" + signal + "'") {}

UndrivenSignal::UndrivenSignal(const std::string& signal) : DataflowError("undriven signal '" + signal + "'") {}

StageError::StageError(std::string stage, std::string design, const std::string& message)
    : Error(design + ": " + stage + ": " + message), stage_(std::move(stage)), design_(std::move(design)) {}

} // namespace ipsim
