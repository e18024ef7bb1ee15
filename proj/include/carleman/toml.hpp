#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace carleman {

// Config values: the TOML subset used by scenario files.  Supported syntax:
// [table] and [dotted.table] headers, bare and quoted keys, dotted keys,
// basic ("...") and literal ('...') strings, integers, floats, booleans,
// (possibly multi-line) arrays with optional trailing comma, and # comments.
// Multi-line strings, inline tables, dates and times are not.
struct TomlValue {
  enum class Kind { boolean, integer, floating, string, array, table };

  Kind kind = Kind::table;
  bool b = false;
  std::int64_t i = 0;
  double d = 0.0;
  std::string s;
  std::vector<TomlValue> array;
  std::map<std::string, TomlValue> table;

  // Source position of the value (1-based), for diagnostics.
  int line = 0;
  int column = 0;
  // Table headers may only be declared once; dotted paths create tables
  // implicitly and a later [header] can still claim those.
  bool declared = false;

  bool is_number() const { return kind == Kind::integer || kind == Kind::floating; }
  double number() const { return kind == Kind::integer ? double(i) : d; }
};

const char* type_name(TomlValue::Kind k);

// Parses a whole document; the result is the root table.  Syntax errors
// throw ParseError with a line/column diagnostic in the message.
TomlValue parse_toml(std::string_view text);

// Reads and parses a file; unreadable paths throw Error(io).
TomlValue parse_toml_file(const std::filesystem::path& path);

}  // namespace carleman
