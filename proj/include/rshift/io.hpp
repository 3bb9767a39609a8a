#pragma once

#include <string>

namespace rshift {

/// Writes `content` to a temporary sibling of `path` and renames it into place.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace rshift
