#pragma once

#include "ipsim/ast.hpp"
#include "ipsim/preprocess.hpp"

#include <string>
#include <vector>

namespace ipsim {

/// Parses preprocessed Verilog in the supported synthesizable subset.
///
/// Throws SyntaxError for malformed text and UnsupportedConstruct for valid
/// Verilog outside the subset (initial blocks, functions, generate, delays,
/// memories, system tasks, ...). Identifiers used only as gate terminals or
/// instance connections become implicit wires; any other undeclared
/// identifier is a SyntaxError.
Ast parse(const PreprocessedFile& file);
Ast parse(const std::vector<PreprocessedFile>& files);

/// Reserved words the parser recognizes.
bool is_verilog_keyword(const std::string& word);

/// preprocess + parse on an in-memory string.
Ast parse_text(const std::string& text, const std::string& path = "<input>");

} // namespace ipsim
