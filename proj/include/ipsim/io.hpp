#pragma once

#include <string>

namespace ipsim {

/// Whole file as bytes. Throws Error when unreadable.
std::string read_text_file(const std::string& path);

/// Writes to a sibling temporary file, then renames it over `path`, so
/// readers see either the old or the new contents.
void write_file_atomic(const std::string& path, const std::string& bytes);

} // namespace ipsim
