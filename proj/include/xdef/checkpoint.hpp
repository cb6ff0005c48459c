#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "xdef/value.hpp"

namespace xdef::ckpt {

using diff::Value;

// Versioned textual container of named arrays. Values are written as C99
// hex floats, so a save/load round trip is bit-exact.
void save(std::ostream& out, const std::vector<std::pair<std::string, const Value*>>& arrays);
void save_file(const std::string& path, const std::vector<std::pair<std::string, const Value*>>& arrays);

// Arrays are matched by name; shape mismatch or a missing array throws.
void load(std::istream& in, const std::vector<std::pair<std::string, Value*>>& arrays);
void load_file(const std::string& path, const std::vector<std::pair<std::string, Value*>>& arrays);

}  // namespace xdef::ckpt
