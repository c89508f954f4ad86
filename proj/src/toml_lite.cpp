#include "volbench/toml_lite.hpp"

#include <cctype>
#include <stdexcept>
#include <vector>

namespace volbench {
namespace {

using nlohmann::json;

class Parser {
 public:
  explicit Parser(const std::string& text) : text_(text) {}

  json run() {
    json root = json::object();
    json* table = &root;  // current [header] target
    for (;;) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        table = parse_header(root);
      } else {
        parse_key_value(*table);
      }
      expect_line_end();
    }
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw std::runtime_error("line " + std::to_string(line_) + ": " + what);
  }

  bool eof() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }
  char take() {
    const char c = text_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }

  // Horizontal whitespace and comments only; stops at newline.
  void skip_inline_space() {
    while (!eof()) {
      const char c = peek();
      if (c == ' ' || c == '\t') {
        take();
      } else if (c == '#') {
        while (!eof() && peek() != '\n') take();
      } else {
        break;
      }
    }
  }

  void skip_blank_lines() {
    for (;;) {
      skip_inline_space();
      if (!eof() && peek() == '\n') take();
      else if (!eof() && peek() == '\r') take();
      else return;
    }
  }

  void expect_line_end() {
    skip_inline_space();
    if (eof()) return;
    if (peek() == '\r') take();
    if (eof()) return;
    if (peek() != '\n') fail("unexpected trailing content");
    take();
  }

  std::string parse_basic_string() {
    take();  // opening quote
    std::string out;
    while (!eof() && peek() != '"') {
      char c = take();
      if (c == '\n') fail("unterminated string");
      if (c == '\\') {
        if (eof()) fail("unterminated escape");
        const char e = take();
        switch (e) {
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          case '/': out += '/'; break;
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          default: fail(std::string("unsupported escape '\\") + e + "'");
        }
      } else {
        out += c;
      }
    }
    if (eof()) fail("unterminated string");
    take();  // closing quote
    return out;
  }

  std::string parse_literal_string() {
    take();  // opening quote
    std::string out;
    while (!eof() && peek() != '\'') {
      const char c = take();
      if (c == '\n') fail("unterminated string");
      out += c;
    }
    if (eof()) fail("unterminated string");
    take();
    return out;
  }

  static bool is_bare_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  }

  std::string parse_key_part() {
    skip_inline_space();
    if (eof()) fail("expected key");
    if (peek() == '"') return parse_basic_string();
    if (peek() == '\'') return parse_literal_string();
    std::string out;
    while (!eof() && is_bare_key_char(peek())) out += take();
    if (out.empty()) fail("expected key");
    return out;
  }

  std::vector<std::string> parse_dotted_key() {
    std::vector<std::string> parts{parse_key_part()};
    for (;;) {
      skip_inline_space();
      if (eof() || peek() != '.') break;
      take();
      parts.push_back(parse_key_part());
    }
    return parts;
  }

  // Walk one path component, descending into the newest element of any
  // array-of-tables met along the way.
  json* descend(json* node, const std::string& part) {
    json& child = (*node)[part];
    if (child.is_null()) child = json::object();
    if (child.is_array()) {
      if (child.empty()) fail("cannot extend empty array '" + part + "'");
      return &child.back();
    }
    if (!child.is_object()) fail("key '" + part + "' is not a table");
    return &child;
  }

  json* parse_header(json& root) {
    take();  // '['
    const bool is_array = !eof() && peek() == '[';
    if (is_array) take();
    const std::vector<std::string> parts = parse_dotted_key();
    skip_inline_space();
    // Peek before consuming so a newline does not advance the reported line.
    if (eof() || peek() != ']') fail("expected ']'");
    take();
    if (is_array) {
      if (eof() || peek() != ']') fail("expected ']]'");
      take();
    }

    json* node = &root;
    for (std::size_t p = 0; p + 1 < parts.size(); ++p) node = descend(node, parts[p]);

    json& leaf = (*node)[parts.back()];
    if (is_array) {
      if (leaf.is_null()) leaf = json::array();
      if (!leaf.is_array()) fail("key '" + parts.back() + "' is not an array of tables");
      leaf.push_back(json::object());
      return &leaf.back();
    }
    if (leaf.is_null()) leaf = json::object();
    if (leaf.is_array()) {
      if (leaf.empty()) fail("cannot extend empty array '" + parts.back() + "'");
      return &leaf.back();
    }
    if (!leaf.is_object()) fail("table '" + parts.back() + "' redefines a value");
    return &leaf;
  }

  json parse_number_or_bool() {
    std::string word;
    while (!eof()) {
      const char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' ||
          c == '.' || c == '_') {
        word += take();
      } else {
        break;
      }
    }
    if (word == "true") return json(true);
    if (word == "false") return json(false);
    std::string digits;
    for (char c : word)
      if (c != '_') digits += c;
    try {
      std::size_t used = 0;
      if (digits.find_first_of(".eE") == std::string::npos) {
        const long long v = std::stoll(digits, &used);
        if (used == digits.size()) return json(v);
      } else {
        const double v = std::stod(digits, &used);
        if (used == digits.size()) return json(v);
      }
    } catch (const std::exception&) {
    }
    fail("malformed value '" + word + "'");
  }

  json parse_array() {
    take();  // '['
    json arr = json::array();
    for (;;) {
      skip_blank_lines();
      if (eof()) fail("unterminated array");
      if (peek() == ']') {
        take();
        return arr;
      }
      arr.push_back(parse_value());
      skip_blank_lines();
      if (eof()) fail("unterminated array");
      if (peek() == ',') take();
      else if (peek() != ']') fail("expected ',' or ']' in array");
    }
  }

  json parse_inline_table() {
    take();  // '{'
    json obj = json::object();
    skip_inline_space();
    if (!eof() && peek() == '}') {
      take();
      return obj;
    }
    for (;;) {
      const std::vector<std::string> parts = parse_dotted_key();
      skip_inline_space();
      if (eof() || peek() != '=') fail("expected '=' in inline table");
      take();
      skip_inline_space();
      json* node = &obj;
      for (std::size_t p = 0; p + 1 < parts.size(); ++p) node = descend(node, parts[p]);
      (*node)[parts.back()] = parse_value();
      skip_inline_space();
      if (eof()) fail("unterminated inline table");
      const char c = peek();
      if (c != '}' && c != ',') fail("expected ',' or '}' in inline table");
      take();
      if (c == '}') return obj;
      skip_inline_space();
    }
  }

  json parse_value() {
    skip_inline_space();
    if (eof()) fail("expected value");
    const char c = peek();
    if (c == '"') return json(parse_basic_string());
    if (c == '\'') return json(parse_literal_string());
    if (c == '[') return parse_array();
    if (c == '{') return parse_inline_table();
    return parse_number_or_bool();
  }

  void parse_key_value(json& table) {
    const std::vector<std::string> parts = parse_dotted_key();
    skip_inline_space();
    if (eof() || peek() != '=') fail("expected '=' after key");
    take();
    json* node = &table;
    for (std::size_t p = 0; p + 1 < parts.size(); ++p) node = descend(node, parts[p]);
    if (node->contains(parts.back())) fail("duplicate key '" + parts.back() + "'");
    (*node)[parts.back()] = parse_value();
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

}  // namespace

json parse_toml(const std::string& text) { return Parser(text).run(); }

}  // namespace volbench
