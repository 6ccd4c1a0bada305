#include "reference_text.hpp"

#include <fstream>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace testsupport {

namespace {

void replace_all(std::string& s, const std::string& from, const std::string& to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
}

bool starts_with_any(const std::string& s, std::initializer_list<const char*> heads) {
  for (const char* h : heads)
    if (s.rfind(h, 0) == 0) return true;
  return false;
}

std::string delatex(const std::vector<std::string>& lines) {
  static const std::regex text_cmd(R"(\\text\{([^}]*)\})");
  static const std::regex tt_placeholder(R"(\\texttt\{\\\{([a-z\\_]+)\\\}\})");
  static const std::regex line_break(R"(\s*\\\\\s*$)");
  std::string out;
  for (std::string l : lines) {
    const auto first = l.find_first_not_of(" \t");
    const std::string trimmed = first == std::string::npos ? "" : l.substr(first);
    if (starts_with_any(trimmed, {"\\footnotesize", "\\vspace", "\\begin{itemize", "\\end{itemize"}))
      continue;
    replace_all(l, "$\\#\\#$", "##");
    replace_all(l, "$\\#$", "#");
    replace_all(l, "$\\%$", "%");
    l = std::regex_replace(l, text_cmd, "$1");
    l = std::regex_replace(l, tt_placeholder, "{$1}");
    replace_all(l, "\\texttt{", "");
    replace_all(l, "</json>}", "</json>");
    replace_all(l, "$", "");
    replace_all(l, "\\{", "{");
    replace_all(l, "\\}", "}");
    replace_all(l, "\\_", "_");
    replace_all(l, "\\&", "&");
    replace_all(l, "\\item ", "");
    l = std::regex_replace(l, line_break, "");
    replace_all(l, "``", "\"");
    replace_all(l, "''", "\"");
    out += l;
    out += '\n';
  }
  return out;
}

}  // namespace

std::string squash_whitespace(const std::string& s) {
  std::istringstream in(s);
  std::string word, out;
  while (in >> word) {
    if (!out.empty()) out += ' ';
    out += word;
  }
  return out;
}

std::map<std::string, std::string> reference_prompts(const std::filesystem::path& reference_md) {
  std::ifstream in(reference_md);
  if (!in) throw std::runtime_error("cannot read " + reference_md.string());
  std::map<std::string, std::string> out;
  std::string line, name;
  std::vector<std::string> body;
  while (std::getline(in, line)) {
    if (line.rfind("\\begin{promptbox}", 0) == 0) {
      if (line.find("Global-scale") != std::string::npos) name = "global_fidelity";
      else if (line.find("Local-scale") != std::string::npos) name = "local_fidelity";
      else if (line.find("Instance-centric") != std::string::npos) name = "ics";
      else name = "unknown";
      body.clear();
    } else if (line.rfind("\\end{promptbox}", 0) == 0) {
      out[name] = delatex(body);
      name.clear();
    } else if (!name.empty()) {
      body.push_back(line);
    }
  }
  return out;
}

}  // namespace testsupport
