#include "labelforge/toml_lite.h"

#include <cctype>
#include <fstream>
#include <istream>
#include <string>

#include "labelforge/error.h"
#include "labelforge/text.h"

namespace labelforge {
namespace {

class Cursor {
 public:
  Cursor(std::string text, std::size_t line) : text_(std::move(text)), line_(line) {}

  [[noreturn]] void Fail(const std::string& what) const {
    throw Error(ErrorKind::kInvalidConfig, what, line_);
  }

  void SkipSpace() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  bool AtEnd() {
    SkipSpace();
    return pos_ >= text_.size();
  }

  char Peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void Expect(char c) {
    SkipSpace();
    if (Peek() != c) Fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string Key() {
    SkipSpace();
    if (Peek() == '"' || Peek() == '\'') return String();
    std::string out;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') {
        out += c;
        ++pos_;
      } else {
        break;
      }
    }
    if (out.empty()) Fail("expected a key");
    return out;
  }

  std::string String() {
    const char quote = text_[pos_++];
    std::string out;
    while (pos_ < text_.size() && text_[pos_] != quote) {
      char c = text_[pos_++];
      if (c == '\n') Fail("unterminated string");
      if (quote == '"' && c == '\\') {
        if (pos_ >= text_.size()) Fail("bad escape");
        char e = text_[pos_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          case '\\': out += '\\'; break;
          case '"': out += '"'; break;
          default: Fail(std::string("unsupported escape \\") + e);
        }
      } else {
        out += c;
      }
    }
    if (pos_ >= text_.size()) Fail("unterminated string");
    ++pos_;
    return out;
  }

  nlohmann::json Value() {
    SkipSpace();
    char c = Peek();
    if (c == '"' || c == '\'') return String();
    if (c == '[') {
      ++pos_;
      nlohmann::json arr = nlohmann::json::array();
      SkipSpace();
      while (Peek() != ']') {
        arr.push_back(Value());
        SkipSpace();
        if (Peek() == ',') {
          ++pos_;
          SkipSpace();
        } else if (Peek() != ']') {
          Fail("expected ',' or ']'");
        }
      }
      ++pos_;
      return arr;
    }
    std::string word;
    while (pos_ < text_.size()) {
      char d = text_[pos_];
      if (std::isalnum(static_cast<unsigned char>(d)) || d == '.' || d == '-' ||
          d == '+' || d == '_') {
        word += d;
        ++pos_;
      } else {
        break;
      }
    }
    if (word == "true") return true;
    if (word == "false") return false;
    if (word.empty()) Fail("expected a value");
    std::string digits;
    for (char d : word) {
      if (d != '_') digits += d;
    }
    try {
      std::size_t used = 0;
      if (digits.find_first_of(".eE") == std::string::npos) {
        long long v = std::stoll(digits, &used);
        if (used == digits.size()) return v;
      } else {
        double v = std::stod(digits, &used);
        if (used == digits.size()) return v;
      }
    } catch (const std::exception&) {
    }
    Fail("unsupported value '" + word + "'");
  }

 private:
  std::string text_;
  std::size_t pos_ = 0;
  std::size_t line_;
};

// Counts unclosed '[' outside strings and comments.
int BracketDepth(std::string_view s) {
  int depth = 0;
  char quote = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (quote) {
      if (c == '\\' && quote == '"') {
        ++i;
      } else if (c == quote) {
        quote = 0;
      }
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#') {
      break;
    } else if (c == '[') {
      ++depth;
    } else if (c == ']') {
      --depth;
    }
  }
  return depth;
}

}  // namespace

nlohmann::json ParseTomlLite(std::istream& in) {
  nlohmann::json root = nlohmann::json::object();
  nlohmann::json* table = &root;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t first_line = line_no;
    std::string_view trimmed = Trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;

    if (trimmed.front() == '[') {
      Cursor c(std::string(trimmed.substr(1)), line_no);
      table = &root;
      while (true) {
        std::string name = c.Key();
        if (!table->contains(name)) (*table)[name] = nlohmann::json::object();
        table = &(*table)[name];
        if (!table->is_object()) c.Fail("'" + name + "' is not a table");
        c.SkipSpace();
        if (c.Peek() == '.') {
          c.Expect('.');
          continue;
        }
        break;
      }
      c.Expect(']');
      if (!c.AtEnd()) c.Fail("trailing text after table header");
      continue;
    }

    std::string statement = line;
    int depth = BracketDepth(line);
    while (depth > 0) {
      std::string more;
      if (!std::getline(in, more)) {
        throw Error(ErrorKind::kInvalidConfig, "unterminated array", first_line);
      }
      ++line_no;
      statement += "\n" + more;
      depth += BracketDepth(more);
    }
    Cursor c(statement, first_line);
    std::string key = c.Key();
    c.Expect('=');
    nlohmann::json value = c.Value();
    if (!c.AtEnd()) c.Fail("trailing text after value");
    if (table->contains(key)) c.Fail("duplicate key '" + key + "'");
    (*table)[key] = std::move(value);
  }
  return root;
}

nlohmann::json LoadTomlLite(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return ParseTomlLite(in);
}

}  // namespace labelforge
