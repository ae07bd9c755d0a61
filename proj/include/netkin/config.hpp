#pragma once

#include <charconv>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "netkin/common.hpp"

namespace netkin {

// TOML-style scenario configuration: [table.subtable] headers, key = value
// pairs with strings, numbers, booleans and (possibly nested, multi-line)
// arrays. Deliberately a small subset; serialize() round-trips exactly.
class ConfigValue {
 public:
  using Array = std::vector<ConfigValue>;
  using Table = std::map<std::string, ConfigValue>;

  ConfigValue() : data_(Table{}) {}
  explicit ConfigValue(std::string s) : data_(std::move(s)) {}
  explicit ConfigValue(const char* s) : data_(std::string(s)) {}
  explicit ConfigValue(double x) : data_(x) {}
  explicit ConfigValue(bool b) : data_(b) {}
  explicit ConfigValue(Array a) : data_(std::move(a)) {}
  explicit ConfigValue(Table t) : data_(std::move(t)) {}

  bool is_string() const { return std::holds_alternative<std::string>(data_); }
  bool is_number() const { return std::holds_alternative<double>(data_); }
  bool is_bool() const { return std::holds_alternative<bool>(data_); }
  bool is_array() const { return std::holds_alternative<Array>(data_); }
  bool is_table() const { return std::holds_alternative<Table>(data_); }

  const std::string& as_string(const std::string& key = "") const {
    require(is_string(), key, "a string");
    return std::get<std::string>(data_);
  }
  double as_number(const std::string& key = "") const {
    require(is_number(), key, "a number");
    return std::get<double>(data_);
  }
  std::size_t as_index(const std::string& key = "") const {
    const double x = as_number(key);
    if (!(x >= 0.0) || x != std::floor(x))
      throw ValidationError("key '" + key + "' must be a nonnegative integer");
    return static_cast<std::size_t>(x);
  }
  bool as_bool(const std::string& key = "") const {
    require(is_bool(), key, "a boolean");
    return std::get<bool>(data_);
  }
  const Array& as_array(const std::string& key = "") const {
    require(is_array(), key, "an array");
    return std::get<Array>(data_);
  }
  const Table& as_table(const std::string& key = "") const {
    require(is_table(), key, "a table");
    return std::get<Table>(data_);
  }
  Table& as_table_mut() { return std::get<Table>(data_); }

  bool contains(const std::string& key) const { return as_table().count(key) != 0; }

  const ConfigValue& at(const std::string& key) const {
    const Table& t = as_table();
    auto it = t.find(key);
    if (it == t.end()) throw ValidationError("missing required key '" + key + "'");
    return it->second;
  }

  const ConfigValue* find(const std::string& key) const {
    const Table& t = as_table();
    auto it = t.find(key);
    return it == t.end() ? nullptr : &it->second;
  }

  void set(const std::string& key, ConfigValue value) {
    as_table_mut()[key] = std::move(value);
  }

  std::vector<double> as_number_array(const std::string& key = "") const {
    std::vector<double> out;
    for (const auto& v : as_array(key)) out.push_back(v.as_number(key));
    return out;
  }

  std::vector<std::vector<double>> as_matrix(const std::string& key = "") const {
    std::vector<std::vector<double>> out;
    for (const auto& row : as_array(key)) out.push_back(row.as_number_array(key));
    return out;
  }

  // ---- parsing ----

  static ConfigValue parse_string(std::string_view text) {
    ConfigValue root;
    ConfigValue* current = &root;
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
      std::size_t eol = text.find('\n', pos);
      if (eol == std::string_view::npos) eol = text.size();
      std::string line(text.substr(pos, eol - pos));
      pos = eol + 1;
      ++line_no;
      strip_comment(line);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      if (trimmed.front() == '[') {
        if (trimmed.back() != ']')
          throw ValidationError("line " + std::to_string(line_no) + ": malformed table header");
        current = &root.descend(trim(trimmed.substr(1, trimmed.size() - 2)));
        continue;
      }
      const std::size_t eq = find_assign(trimmed);
      if (eq == std::string::npos)
        throw ValidationError("line " + std::to_string(line_no) + ": expected key = value");
      const std::string key = trim(trimmed.substr(0, eq));
      std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty() || !valid_key(key))
        throw ValidationError("line " + std::to_string(line_no) + ": invalid key '" + key + "'");
      // multi-line arrays: keep consuming lines until brackets balance
      while (bracket_balance(value) > 0 && pos <= text.size()) {
        if (pos >= text.size())
          throw ValidationError("line " + std::to_string(line_no) + ": unterminated array");
        std::size_t next_eol = text.find('\n', pos);
        if (next_eol == std::string_view::npos) next_eol = text.size();
        std::string cont(text.substr(pos, next_eol - pos));
        pos = next_eol + 1;
        ++line_no;
        strip_comment(cont);
        value += ' ';
        value += trim(cont);
      }
      std::size_t cursor = 0;
      ConfigValue parsed = parse_value(value, cursor, line_no);
      if (trim(value.substr(cursor)) != "")
        throw ValidationError("line " + std::to_string(line_no) + ": trailing characters after value");
      current->as_table_mut()[key] = std::move(parsed);
    }
    return root;
  }

  static ConfigValue parse_file(const std::filesystem::path& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << file.rdbuf();
    return parse_string(buf.str());
  }

  // ---- serialization (deterministic: keys in sorted order) ----

  std::string serialize() const {
    if (!is_table()) throw ArgumentError("serialize: root must be a table");
    std::string out;
    serialize_table(*this, "", out);
    return out;
  }

 private:
  std::variant<std::string, double, bool, Array, Table> data_;

  void require(bool ok, const std::string& key, const char* what) const {
    if (!ok) throw ValidationError("key '" + key + "' must be " + what);
  }

  ConfigValue& descend(const std::string& dotted) {
    ConfigValue* node = this;
    std::size_t start = 0;
    while (start <= dotted.size()) {
      std::size_t dot = dotted.find('.', start);
      if (dot == std::string::npos) dot = dotted.size();
      const std::string part = trim(dotted.substr(start, dot - start));
      if (part.empty() || !valid_key(part))
        throw ValidationError("invalid table name '" + dotted + "'");
      Table& t = node->as_table_mut();
      auto it = t.find(part);
      if (it == t.end()) it = t.emplace(part, ConfigValue(Table{})).first;
      node = &it->second;
      if (dot == dotted.size()) break;
      start = dot + 1;
    }
    return *node;
  }

  static bool valid_key(const std::string& key) {
    for (char c : key)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
    return true;
  }

  static std::string trim(std::string s) {
    const auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)); };
    while (!s.empty() && is_space(s.front())) s.erase(s.begin());
    while (!s.empty() && is_space(s.back())) s.pop_back();
    return s;
  }

  static void strip_comment(std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
      if (line[i] == '#' && !in_string) {
        line.erase(i);
        return;
      }
    }
  }

  static std::size_t find_assign(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_string = !in_string;
      if (line[i] == '=' && !in_string) return i;
    }
    return std::string::npos;
  }

  static int bracket_balance(const std::string& s) {
    int depth = 0;
    bool in_string = false;
    for (char c : s) {
      if (c == '"') in_string = !in_string;
      if (in_string) continue;
      if (c == '[') ++depth;
      if (c == ']') --depth;
    }
    return depth;
  }

  static void skip_ws(const std::string& s, std::size_t& i) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  }

  static ConfigValue parse_value(const std::string& s, std::size_t& i, std::size_t line_no) {
    skip_ws(s, i);
    if (i >= s.size())
      throw ValidationError("line " + std::to_string(line_no) + ": missing value");
    const char c = s[i];
    if (c == '"') {
      ++i;
      std::string out;
      while (i < s.size() && s[i] != '"') {
        if (s[i] == '\\' && i + 1 < s.size()) {
          ++i;
          switch (s[i]) {
            case 'n': out += '\n'; break;
            case 't': out += '\t'; break;
            case '"': out += '"'; break;
            case '\\': out += '\\'; break;
            default:
              throw ValidationError("line " + std::to_string(line_no) + ": bad escape");
          }
        } else {
          out += s[i];
        }
        ++i;
      }
      if (i >= s.size())
        throw ValidationError("line " + std::to_string(line_no) + ": unterminated string");
      ++i;
      return ConfigValue(std::move(out));
    }
    if (c == '[') {
      ++i;
      Array arr;
      skip_ws(s, i);
      if (i < s.size() && s[i] == ']') {
        ++i;
        return ConfigValue(std::move(arr));
      }
      while (true) {
        arr.push_back(parse_value(s, i, line_no));
        skip_ws(s, i);
        if (i < s.size() && s[i] == ',') {
          ++i;
          skip_ws(s, i);
          if (i < s.size() && s[i] == ']') {  // trailing comma
            ++i;
            break;
          }
          continue;
        }
        if (i < s.size() && s[i] == ']') {
          ++i;
          break;
        }
        throw ValidationError("line " + std::to_string(line_no) + ": malformed array");
      }
      return ConfigValue(std::move(arr));
    }
    if (s.compare(i, 4, "true") == 0) {
      i += 4;
      return ConfigValue(true);
    }
    if (s.compare(i, 5, "false") == 0) {
      i += 5;
      return ConfigValue(false);
    }
    std::size_t end = i;
    while (end < s.size() && s[end] != ',' && s[end] != ']' &&
           !std::isspace(static_cast<unsigned char>(s[end])))
      ++end;
    const std::string token = s.substr(i, end - i);
    double value = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
    if (res.ec != std::errc{} || res.ptr != token.data() + token.size())
      throw ValidationError("line " + std::to_string(line_no) + ": cannot parse value '" + token +
                            "'");
    i = end;
    return ConfigValue(value);
  }

  static void append_scalar(const ConfigValue& v, std::string& out) {
    if (v.is_string()) {
      out += '"';
      for (char c : v.as_string()) {
        if (c == '"' || c == '\\') out += '\\';
        if (c == '\n') {
          out += "\\n";
          continue;
        }
        out += c;
      }
      out += '"';
    } else if (v.is_bool()) {
      out += v.as_bool() ? "true" : "false";
    } else if (v.is_number()) {
      char buf[64];
      const auto res = std::to_chars(buf, buf + sizeof(buf), v.as_number());
      out.append(buf, res.ptr);
    } else if (v.is_array()) {
      out += '[';
      bool first = true;
      for (const auto& e : v.as_array()) {
        if (!first) out += ", ";
        first = false;
        append_scalar(e, out);
      }
      out += ']';
    }
  }

  static void serialize_table(const ConfigValue& table, const std::string& prefix,
                              std::string& out) {
    // scalars and arrays first, then subtables
    for (const auto& [key, value] : table.as_table()) {
      if (value.is_table()) continue;
      out += key;
      out += " = ";
      append_scalar(value, out);
      out += '\n';
    }
    for (const auto& [key, value] : table.as_table()) {
      if (!value.is_table()) continue;
      const std::string path = prefix.empty() ? key : prefix + "." + key;
      out += "\n[";
      out += path;
      out += "]\n";
      serialize_table(value, path, out);
    }
  }
};

}  // namespace netkin
