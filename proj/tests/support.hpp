#pragma once

#include <cctype>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ppdiag/linalg.hpp"

namespace testsupport {

// Fresh scratch directory under the build tree, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() / ("ppdiag_test_" + tag + "_" + std::to_string(counter()++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Just enough XML to check well-formedness of our SVG and walk its tree.
struct XmlNode {
  std::string name;
  std::map<std::string, std::string> attrs;
  std::vector<std::unique_ptr<XmlNode>> children;
  std::string text;

  std::string attr(const std::string& k) const {
    auto it = attrs.find(k);
    return it == attrs.end() ? std::string() : it->second;
  }
  bool has_class(const std::string& c) const { return attr("class") == c; }

  void visit(const std::function<void(const XmlNode&)>& f) const {
    f(*this);
    for (const auto& ch : children) ch->visit(f);
  }
  std::vector<const XmlNode*> find_all(const std::function<bool(const XmlNode&)>& pred) const {
    std::vector<const XmlNode*> hits;
    visit([&](const XmlNode& n) {
      if (pred(n)) hits.push_back(&n);
    });
    return hits;
  }
};

class XmlParser {
 public:
  explicit XmlParser(std::string s) : s_(std::move(s)) {}

  std::unique_ptr<XmlNode> parse() {
    skip_prolog();
    auto root = element();
    skip_ws();
    if (i_ != s_.size()) fail("trailing content");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw std::runtime_error("xml: " + what + " at offset " + std::to_string(i_));
  }
  void skip_ws() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  void skip_prolog() {
    skip_ws();
    if (s_.compare(i_, 5, "<?xml") == 0) {
      auto e = s_.find("?>", i_);
      if (e == std::string::npos) fail("unterminated prolog");
      i_ = e + 2;
    }
    skip_ws();
  }
  std::string name() {
    const auto b = i_;
    while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '-' ||
                              s_[i_] == ':' || s_[i_] == '_'))
      ++i_;
    if (b == i_) fail("expected name");
    return s_.substr(b, i_ - b);
  }
  void check_entities(const std::string& t) const {
    for (std::size_t k = 0; k < t.size(); ++k) {
      if (t[k] == '<') fail("raw '<' in text");
      if (t[k] == '&') {
        const auto semi = t.find(';', k);
        if (semi == std::string::npos) fail("bad entity");
        const auto ent = t.substr(k, semi - k + 1);
        if (ent != "&amp;" && ent != "&lt;" && ent != "&gt;" && ent != "&quot;" && ent != "&apos;")
          fail("unknown entity " + ent);
      }
    }
  }
  std::unique_ptr<XmlNode> element() {
    if (i_ >= s_.size() || s_[i_] != '<') fail("expected '<'");
    ++i_;
    auto node = std::make_unique<XmlNode>();
    node->name = name();
    for (;;) {
      skip_ws();
      if (i_ >= s_.size()) fail("unterminated tag");
      if (s_[i_] == '/') {
        if (s_.compare(i_, 2, "/>") != 0) fail("bad self-close");
        i_ += 2;
        return node;
      }
      if (s_[i_] == '>') {
        ++i_;
        break;
      }
      const std::string key = name();
      skip_ws();
      if (i_ >= s_.size() || s_[i_] != '=') fail("expected '='");
      ++i_;
      skip_ws();
      const char q = s_[i_];
      if (q != '"' && q != '\'') fail("unquoted attribute");
      const auto end = s_.find(q, i_ + 1);
      if (end == std::string::npos) fail("unterminated attribute");
      const std::string val = s_.substr(i_ + 1, end - i_ - 1);
      check_entities(val);
      if (node->attrs.count(key)) fail("duplicate attribute " + key);
      node->attrs[key] = val;
      i_ = end + 1;
    }
    for (;;) {
      const auto lt = s_.find('<', i_);
      if (lt == std::string::npos) fail("unterminated element " + node->name);
      const std::string text = s_.substr(i_, lt - i_);
      check_entities(text);
      node->text += text;
      i_ = lt;
      if (s_.compare(i_, 2, "</") == 0) {
        i_ += 2;
        const std::string close = name();
        if (close != node->name) fail("mismatched </" + close + "> for <" + node->name + ">");
        skip_ws();
        if (i_ >= s_.size() || s_[i_] != '>') fail("expected '>'");
        ++i_;
        return node;
      }
      node->children.push_back(element());
    }
  }

  std::string s_;
  std::size_t i_ = 0;
};

inline std::unique_ptr<XmlNode> parse_xml_file(const std::filesystem::path& p) {
  return XmlParser(read_file(p)).parse();
}

inline std::vector<std::pair<double, double>> parse_points(const std::string& s) {
  std::vector<std::pair<double, double>> pts;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) {
    const auto comma = tok.find(',');
    pts.emplace_back(std::stod(tok.substr(0, comma)), std::stod(tok.substr(comma + 1)));
  }
  return pts;
}

inline ppdiag::Matrix matrix_of(std::size_t rows, std::size_t cols, std::initializer_list<double> row_major) {
  ppdiag::Matrix m(rows, cols);
  auto it = row_major.begin();
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = *it++;
  return m;
}

}  // namespace testsupport
