#include "trisemi/io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace trisemi {

namespace {

using ojson = nlohmann::ordered_json;

Scalar parse_entry(const std::string& tok, FieldTag field, std::size_t row) {
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty() || !std::isfinite(v))
      throw InvalidInput("matrix file: bad entry '" + tok + "' on row " + std::to_string(row));
    return v;
  };
  const auto comma = tok.find(',');
  if (comma == std::string::npos) return number(tok);
  if (field == FieldTag::real)
    throw InvalidInput("matrix file: complex entry '" + tok + "' in a real matrix on row " + std::to_string(row));
  return {number(tok.substr(0, comma)), number(tok.substr(comma + 1))};
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

Matrix parse_matrix_text(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    lines.push_back(line);
  }
  if (lines.empty()) throw InvalidInput("matrix file: empty");
  std::istringstream hs(lines[0]);
  std::string kw;
  std::string ntok;
  std::string ftok;
  std::string extra;
  hs >> kw >> ntok >> ftok;
  if (kw != "matrix" || ntok.rfind("n=", 0) != 0 || ftok.rfind("field=", 0) != 0 || (hs >> extra))
    throw InvalidInput("matrix file: header must be 'matrix n=<dim> field=<real|complex>'");
  std::size_t n = 0;
  try {
    std::size_t used = 0;
    const long long v = std::stoll(ntok.substr(2), &used);
    if (used != ntok.size() - 2 || v < 1) throw InvalidInput("");
    n = static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw InvalidInput("matrix file: dimension must be a positive integer");
  }
  const FieldTag field = parse_field(ftok.substr(6));
  if (lines.size() != n + 1)
    throw InvalidInput("matrix file: expected " + std::to_string(n) + " rows, found " + std::to_string(lines.size() - 1));
  Matrix m(n, field);
  for (std::size_t i = 0; i < n; ++i) {
    std::istringstream ls(lines[i + 1]);
    std::string tok;
    std::size_t j = 0;
    while (ls >> tok) {
      if (j >= n) throw InvalidInput("matrix file: row " + std::to_string(i + 1) + " has too many entries");
      m(i, j++) = parse_entry(tok, field, i + 1);
    }
    if (j != n) throw InvalidInput("matrix file: row " + std::to_string(i + 1) + " has too few entries");
  }
  return m;
}

std::string matrix_to_text(const Matrix& m) {
  std::string out = "matrix n=" + std::to_string(m.dim()) + " field=" + std::string(to_string(m.field())) + "\n";
  for (std::size_t i = 0; i < m.dim(); ++i) {
    for (std::size_t j = 0; j < m.dim(); ++j) {
      if (j) out += ' ';
      out += fmt(m(i, j).real());
      if (m.field() == FieldTag::complex) out += "," + fmt(m(i, j).imag());
    }
    out += '\n';
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write '" + path + "'");
    out << content;
    out.close();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw InvalidInput("cannot write '" + path + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw InvalidInput("cannot write '" + path + "'");
  }
}

ReportFields report_fields(const ApproxReport& r, const std::string& target_path, double eps) {
  ReportFields f;
  f.target_path = target_path;
  f.eps = eps;
  f.converged = r.converged;
  f.achieved_error = r.achieved_error;
  f.word_length = r.word.length();
  f.nodes = r.stats.nodes;
  f.retries = r.stats.retries;
  f.error_bound = r.stats.error_bound;
  return f;
}

std::string report_to_json(const ReportFields& f) {
  auto num = [](double x) { return std::isfinite(x) ? ojson(x) : ojson(nullptr); };
  ojson j;
  j["target_path"] = f.target_path;
  j["eps"] = num(f.eps);
  j["converged"] = f.converged;
  j["achieved_error"] = num(f.achieved_error);
  j["word_length"] = f.word_length;
  ojson s;
  s["nodes"] = f.nodes;
  s["retries"] = f.retries;
  s["error_bound"] = num(f.error_bound);
  j["stats"] = s;
  if (!f.message.empty()) j["message"] = f.message;
  return j.dump(2) + "\n";
}

std::string word_path_for(const std::string& report_path) { return report_path + ".word"; }

}  // namespace trisemi
