#include "carleman/toml.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <utility>

#include "carleman/util.hpp"

namespace carleman {

const char* type_name(TomlValue::Kind k) {
  switch (k) {
    case TomlValue::Kind::boolean: return "boolean";
    case TomlValue::Kind::integer: return "integer";
    case TomlValue::Kind::floating: return "float";
    case TomlValue::Kind::string: return "string";
    case TomlValue::Kind::array: return "array";
    case TomlValue::Kind::table: return "table";
  }
  return "?";
}

namespace {

bool bare_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

struct Parser {
  std::string_view src;
  std::size_t pos = 0;
  int line = 1;
  int column = 1;

  bool eof() const { return pos >= src.size(); }
  char peek() const { return src[pos]; }

  char advance() {
    const char c = src[pos++];
    if (c == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
    return c;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    std::ostringstream os;
    os << "config: " << msg << " (line " << line << ", column " << column << ")";
    throw ParseError(os.str(), pos);
  }

  // Space and tab only; newlines are structure.
  void skip_blanks() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) advance();
  }

  void skip_comment() {
    if (!eof() && peek() == '#')
      while (!eof() && peek() != '\n') advance();
  }

  // Whitespace, comments and newlines, e.g. between top-level statements.
  void skip_void() {
    while (!eof()) {
      skip_blanks();
      skip_comment();
      if (!eof() && (peek() == '\n' || peek() == '\r')) {
        advance();
        continue;
      }
      break;
    }
  }

  // After a statement: only blanks and a comment may precede the newline.
  void expect_line_end() {
    skip_blanks();
    skip_comment();
    if (eof()) return;
    if (peek() == '\n' || peek() == '\r') {
      advance();
      return;
    }
    fail("expected end of line");
  }

  std::string parse_basic_string() {
    advance();  // opening quote
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      char c = advance();
      if (c == '"') return out;
      if (c == '\\') {
        if (eof()) fail("unterminated escape");
        const char e = advance();
        switch (e) {
          case '"': out.push_back('"'); break;
          case '\\': out.push_back('\\'); break;
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case 'r': out.push_back('\r'); break;
          default: fail(std::string("unsupported escape '\\") + e + "'");
        }
      } else {
        out.push_back(c);
      }
    }
  }

  std::string parse_literal_string() {
    advance();  // opening quote
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = advance();
      if (c == '\'') return out;
      out.push_back(c);
    }
  }

  std::string parse_key_part() {
    if (eof()) fail("expected a key");
    if (peek() == '"') return parse_basic_string();
    if (peek() == '\'') return parse_literal_string();
    if (!bare_key_char(peek())) fail("expected a key");
    std::string out;
    while (!eof() && bare_key_char(peek())) out.push_back(advance());
    return out;
  }

  // Dotted sequence of keys: a, a.b, "a b".c, ...
  std::vector<std::string> parse_key_path() {
    std::vector<std::string> path;
    path.push_back(parse_key_part());
    while (true) {
      skip_blanks();
      if (eof() || peek() != '.') break;
      advance();
      skip_blanks();
      path.push_back(parse_key_part());
    }
    return path;
  }

  TomlValue parse_number_or_bool() {
    const int vline = line, vcol = column;
    std::string tok;
    while (!eof()) {
      const char c = peek();
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == ',' ||
          c == ']' || c == '#')
        break;
      tok.push_back(advance());
    }
    if (tok.empty()) fail("expected a value");

    TomlValue v;
    v.line = vline;
    v.column = vcol;
    if (tok == "true" || tok == "false") {
      v.kind = TomlValue::Kind::boolean;
      v.b = (tok == "true");
      return v;
    }

    bool integral = true;
    for (std::size_t k = 0; k < tok.size(); ++k) {
      const char c = tok[k];
      if ((c == '+' || c == '-') && k == 0) continue;
      if (!std::isdigit(static_cast<unsigned char>(c))) {
        integral = false;
        break;
      }
    }
    if (integral && tok != "+" && tok != "-") {
      std::int64_t n = 0;
      const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), n);
      if (res.ec == std::errc() && res.ptr == tok.data() + tok.size()) {
        v.kind = TomlValue::Kind::integer;
        v.i = n;
        return v;
      }
    }
    double x = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), x);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
      fail("malformed value '" + tok + "'");
    v.kind = TomlValue::Kind::floating;
    v.d = x;
    return v;
  }

  TomlValue parse_value() {
    if (eof()) fail("expected a value");
    const int vline = line, vcol = column;
    const char c = peek();
    if (c == '"' || c == '\'') {
      TomlValue v;
      v.kind = TomlValue::Kind::string;
      v.s = (c == '"') ? parse_basic_string() : parse_literal_string();
      v.line = vline;
      v.column = vcol;
      return v;
    }
    if (c == '[') {
      advance();
      TomlValue v;
      v.kind = TomlValue::Kind::array;
      v.line = vline;
      v.column = vcol;
      while (true) {
        skip_void();
        if (eof()) fail("unterminated array");
        if (peek() == ']') {
          advance();
          return v;
        }
        v.array.push_back(parse_value());
        skip_void();
        if (eof()) fail("unterminated array");
        if (peek() == ',') {
          advance();
          continue;
        }
        if (peek() == ']') {
          advance();
          return v;
        }
        fail("expected ',' or ']' in array");
      }
    }
    return parse_number_or_bool();
  }

  // Walks `path` from `root`, creating implicit tables; the last component
  // receives `leaf`.  With declare set the leaf must be (or become) a table
  // that has not been declared by an earlier header.
  TomlValue* place(TomlValue& root, const std::vector<std::string>& path,
                   TomlValue leaf, bool declare) {
    TomlValue* node = &root;
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
      TomlValue& next = node->table[path[k]];
      if (next.line == 0 && next.column == 0 && next.table.empty() &&
          next.kind == TomlValue::Kind::table) {
        next.line = line;
        next.column = column;
      }
      if (next.kind != TomlValue::Kind::table)
        fail("key '" + path[k] + "' is a " + type_name(next.kind) +
             ", not a table");
      node = &next;
    }
    const std::string& last = path.back();
    if (declare) {
      TomlValue& slot = node->table[last];
      if (slot.kind != TomlValue::Kind::table)
        fail("key '" + last + "' is a " + type_name(slot.kind) +
             ", not a table");
      if (slot.declared) fail("table '" + last + "' declared twice");
      slot.declared = true;
      if (slot.line == 0) {
        slot.line = leaf.line;
        slot.column = leaf.column;
      }
      return &slot;
    }
    if (node->table.count(last)) fail("duplicate key '" + last + "'");
    TomlValue& slot = node->table[last];
    slot = std::move(leaf);
    return &slot;
  }
};

}  // namespace

TomlValue parse_toml(std::string_view text) {
  TomlValue root;
  root.declared = true;
  TomlValue* current = &root;
  Parser ps{text};
  while (true) {
    ps.skip_void();
    if (ps.eof()) break;
    if (ps.peek() == '[') {
      const int hline = ps.line, hcol = ps.column;
      ps.advance();
      ps.skip_blanks();
      const auto path = ps.parse_key_path();
      ps.skip_blanks();
      if (ps.eof() || ps.peek() != ']') ps.fail("expected ']' after table name");
      ps.advance();
      ps.expect_line_end();
      TomlValue header;
      header.kind = TomlValue::Kind::table;
      header.line = hline;
      header.column = hcol;
      current = ps.place(root, path, std::move(header), /*declare=*/true);
      continue;
    }
    const auto path = ps.parse_key_path();
    ps.skip_blanks();
    if (ps.eof() || ps.peek() != '=') ps.fail("expected '=' after key");
    ps.advance();
    ps.skip_blanks();
    TomlValue value = ps.parse_value();
    ps.place(*current, path, std::move(value), /*declare=*/false);
    ps.expect_line_end();
  }
  return root;
}

TomlValue parse_toml_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::io, "cannot read config file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_toml(buf.str());
}

}  // namespace carleman
