#include "fwlb/io.hpp"

#include <cstdio>
#include <fstream>

namespace fwlb::io {

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os_ << ',';
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\n") == std::string::npos) {
      os_ << f;
      continue;
    }
    os_ << '"';
    for (char ch : f) {
      if (ch == '"') os_ << '"';
      os_ << ch;
    }
    os_ << '"';
  }
  os_ << '\n';
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json precision_json(const PrecisionConfig& cfg) {
  json j;
  j["mode"] = cfg.is_extended() ? "extended" : "hardware";
  j["mantissa_bits"] = cfg.bits();
  return j;
}

json rule_json(fwcore::RuleKind kind) {
  switch (kind) {
    case fwcore::RuleKind::ExactLineSearch:
      return "exact_line_search";
    case fwcore::RuleKind::ShortStep:
      return "short_step";
    case fwcore::RuleKind::Schedule:
      return "schedule";
  }
  return nullptr;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace fwlb::io
