#include "trisemi/genset.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "trisemi/ordering.hpp"

namespace trisemi {

Matrix GeneratorSet::generator(std::size_t id) const {
  if (id >= count()) throw InvalidInput("generator id " + std::to_string(id) + " out of range");
  if (id == 0) return d0() + t;
  return d_gens[id - 1];
}

std::vector<Scalar> GeneratorSet::generator_diag(std::size_t id) const {
  if (id >= count()) throw InvalidInput("generator id " + std::to_string(id) + " out of range");
  if (id == 0) return a;
  return d_gens[id - 1].diag();
}

Word& Word::append(const Factor& f) {
  if (f.exp == 0) throw InvalidInput("word factors need positive exponents");
  factors.push_back(f);
  return *this;
}

Word& Word::append(const Word& w) {
  factors.insert(factors.end(), w.factors.begin(), w.factors.end());
  return *this;
}

std::vector<std::uint64_t> Word::totals(std::size_t generator_count) const {
  std::vector<std::uint64_t> out(generator_count, 0);
  for (const auto& f : factors) {
    if (f.gen >= generator_count) throw InvalidInput("word references generator " + std::to_string(f.gen));
    out[f.gen] += f.exp;
  }
  return out;
}

Word concat(const Word& a, const Word& b) {
  Word w = a;
  w.append(b);
  return w;
}

Word repeat(const Word& w, std::uint64_t k) {
  Word out;
  out.factors.reserve(w.factors.size() * k);
  for (std::uint64_t i = 0; i < k; ++i) out.append(w);
  return out;
}

std::vector<std::uint64_t> first_primes(std::size_t count) {
  std::vector<std::uint64_t> primes;
  for (std::uint64_t c = 2; primes.size() < count; ++c) {
    bool prime = true;
    for (auto p : primes) {
      if (p * p > c) break;
      if (c % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) primes.push_back(c);
  }
  return primes;
}

GeneratorSet build_default_generators(std::size_t n, FieldTag field, std::uint64_t /*seed*/) {
  if (n == 0) throw InvalidInput("n must be >= 1");
  // p: first n primes, used in reverse so that |a_1| < ... < |a_n|.
  // q: n further primes starting at prime number max(n,2)+1.
  const std::size_t q_start = std::max<std::size_t>(n, 2);
  const auto primes = first_primes(q_start + n);
  GeneratorSet g;
  g.n = n;
  g.field = field;
  g.a.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    g.a[i] = std::exp(-std::sqrt(static_cast<double>(primes[n - 1 - i])));
  g.t = Matrix(n, field);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) g.t(i, j) = 1.0;
  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
  for (std::size_t j = 0; j < n; ++j) {
    Matrix d = Matrix::identity(n, field);
    const double mag = std::exp(std::sqrt(static_cast<double>(primes[q_start + j])));
    if (field == FieldTag::real) {
      d(j, j) = -mag;
    } else {
      const double x = static_cast<double>(j + 1) * golden;
      const double phi = x - std::floor(x);
      d(j, j) = std::polar(mag, 2.0 * std::numbers::pi * phi);
    }
    g.d_gens.push_back(std::move(d));
  }
  return g;
}

std::vector<std::string> validate_generators(const GeneratorSet& g) {
  std::vector<std::string> v;
  const std::size_t n = g.n;
  if (n == 0) return {"dimension n must be >= 1"};
  if (g.a.size() != n) v.push_back("a has " + std::to_string(g.a.size()) + " entries, expected n");
  if (g.t.dim() != n) v.push_back("T dimension differs from n");
  if (g.d_gens.size() < n) v.push_back("generator count: need n diagonal generators besides A");
  if (!v.empty()) return v;

  auto pos = [](std::size_t i, std::size_t j) {
    return "(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")";
  };
  if (g.field == FieldTag::real) {
    bool complex_entry = false;
    for (const auto& x : g.a) complex_entry |= x.imag() != 0.0;
    for (const auto& x : g.t.data()) complex_entry |= x.imag() != 0.0;
    for (const auto& d : g.d_gens)
      for (const auto& x : d.data()) complex_entry |= x.imag() != 0.0;
    if (complex_entry) v.push_back("field: real set has complex entries");
  }
  if (!(std::abs(g.a[0]) > 0.0)) v.push_back("ineqdiag at i=1");
  for (std::size_t i = 1; i < n; ++i)
    if (!(std::abs(g.a[i]) >= kMinModulusRatio * std::abs(g.a[i - 1])) || std::abs(g.a[i - 1]) == 0.0)
      v.push_back("ineqdiag at i=" + std::to_string(i + 1));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const bool nonzero = g.t(i, j) != Scalar{};
      if (j < i && !nonzero) v.push_back("condtr at " + pos(i, j));
      if (j >= i && nonzero) v.push_back("condtr at " + pos(i, j));
    }
  for (std::size_t k = 0; k < g.d_gens.size(); ++k) {
    const auto& d = g.d_gens[k];
    const std::string name = "D_" + std::to_string(k + 1);
    if (d.dim() != n) {
      v.push_back(name + " dimension differs from n");
      continue;
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j && d(i, i) == Scalar{}) v.push_back(name + " zero diagonal at " + pos(i, i));
        if (i != j && d(i, j) != Scalar{}) v.push_back(name + " not diagonal at " + pos(i, j));
      }
  }
  return v;
}

GeneratorSet sigma_reduce(const GeneratorSet& g, std::size_t m) {
  if (m < 1 || m > g.n) throw InvalidInput("sigma_reduce: m out of range");
  GeneratorSet r;
  r.n = m;
  r.field = g.field;
  r.a.assign(g.a.begin(), g.a.begin() + static_cast<std::ptrdiff_t>(m));
  r.t = g.t.block(m);
  for (const auto& d : g.d_gens) r.d_gens.push_back(d.block(m));
  return r;
}

namespace {

ExtMatrix power_ext(const GeneratorSet& g, std::size_t id, std::uint64_t k, std::size_t m) {
  if (id == 0) return ext_mat_pow(ExtMatrix::from(g.generator(0).block(m)), k);
  // Diagonal generators: per-entry power in log form.
  const Matrix& d = g.d_gens[id - 1];
  ExtMatrix out = ExtMatrix::from(Matrix(m, g.field));
  const double kd = static_cast<double>(k);
  for (std::size_t i = 0; i < m; ++i) {
    const Scalar x = d(i, i);
    if (k == 1) {
      out(i, i) = ExtScalar::from(x);
      continue;
    }
    Scalar unit;
    if (g.field == FieldTag::real || x.imag() == 0.0) {
      unit = (x.real() < 0.0 && (k & 1U)) ? -1.0 : 1.0;
    } else {
      const long double turns = static_cast<long double>(std::arg(x)) / (2.0L * std::numbers::pi_v<long double>);
      const double kt = static_cast<double>(std::fmod(static_cast<long double>(k) * turns, 1.0L));
      unit = std::polar(1.0, 2.0 * std::numbers::pi * kt);
    }
    out(i, i) = ExtScalar::from_log(kd * std::log(std::abs(x)), unit);
  }
  return out;
}

}  // namespace

ExtMatrix eval_word_ext(const GeneratorSet& g, const Word& w, std::size_t m) {
  if (w.empty()) throw InvalidInput("eval_word: empty word");
  if (m < 1 || m > g.n) throw InvalidInput("eval_word: dimension out of range");
  std::map<std::pair<std::size_t, std::uint64_t>, ExtMatrix> cache;
  ExtMatrix acc;
  bool first = true;
  for (const auto& f : w.factors) {
    if (f.gen >= g.count()) throw InvalidInput("eval_word: generator id " + std::to_string(f.gen) + " out of range");
    if (f.exp == 0) throw InvalidInput("eval_word: zero exponent");
    auto key = std::make_pair(f.gen, f.exp);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, power_ext(g, f.gen, f.exp, m)).first;
    acc = first ? it->second : ext_mat_mul(acc, it->second);
    first = false;
  }
  return acc;
}

Matrix eval_word(const GeneratorSet& g, const Word& w, std::size_t m) {
  const ExtMatrix r = eval_word_ext(g, w, m);
  if (r.max_log_modulus() > std::log(kOverflowGuard))
    throw OverflowError("eval_word: entry exceeds 1e300 (unbalanced word)");
  return r.to_matrix();
}

Matrix eval_word(const GeneratorSet& g, const Word& w) { return eval_word(g, w, g.n); }

// ---------------------------------------------------------------------------
// Serialization

namespace {

using ojson = nlohmann::ordered_json;

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

ojson scalar_to_json(const Scalar& x, FieldTag f) {
  if (f == FieldTag::real) return fmt17(x.real());
  return ojson::array({fmt17(x.real()), fmt17(x.imag())});
}

double number_from_json(const ojson& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw InvalidInput("cannot parse number '" + s + "'");
    }
    if (used != s.size()) throw InvalidInput("cannot parse number '" + s + "'");
    return v;
  }
  throw InvalidInput("expected a number or numeric string");
}

Scalar scalar_from_json(const ojson& j, FieldTag f) {
  if (j.is_array()) {
    if (j.size() != 2) throw InvalidInput("complex scalar must be [re, im]");
    if (f == FieldTag::real) throw InvalidInput("complex scalar in a real generator file");
    return {number_from_json(j[0]), number_from_json(j[1])};
  }
  return {number_from_json(j), 0.0};
}

}  // namespace

std::string generators_to_json(const GeneratorSet& g) {
  ojson out;
  out["n"] = g.n;
  out["field"] = std::string(to_string(g.field));
  ojson a = ojson::array();
  for (const auto& x : g.a) a.push_back(scalar_to_json(x, g.field));
  out["a"] = a;
  ojson t = ojson::array();
  for (std::size_t i = 1; i < g.n; ++i) {
    ojson row = ojson::array();
    for (std::size_t j = 0; j < i; ++j) row.push_back(scalar_to_json(g.t(i, j), g.field));
    t.push_back(row);
  }
  out["T"] = t;
  ojson d = ojson::array();
  for (const auto& m : g.d_gens) {
    ojson row = ojson::array();
    for (const auto& x : m.diag()) row.push_back(scalar_to_json(x, g.field));
    d.push_back(row);
  }
  out["D"] = d;
  return out.dump(2) + "\n";
}

GeneratorSet generators_from_json(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const std::exception& e) {
    throw InvalidInput(std::string("generator file is not valid JSON: ") + e.what());
  }
  for (const char* key : {"n", "field", "a", "T", "D"})
    if (!j.contains(key)) throw InvalidInput(std::string("generator file lacks key '") + key + "'");
  GeneratorSet g;
  if (!j["n"].is_number_unsigned() || j["n"].get<std::size_t>() == 0)
    throw InvalidInput("generator file: n must be a positive integer");
  g.n = j["n"].get<std::size_t>();
  g.field = parse_field(j["field"].get<std::string>());
  const std::size_t n = g.n;
  if (!j["a"].is_array() || j["a"].size() != n) throw InvalidInput("generator file: a must have n entries");
  for (const auto& x : j["a"]) g.a.push_back(scalar_from_json(x, g.field));
  g.t = Matrix(n, g.field);
  if (!j["T"].is_array() || j["T"].size() != n - 1) throw InvalidInput("generator file: T must have n-1 rows");
  for (std::size_t i = 1; i < n; ++i) {
    const auto& row = j["T"][i - 1];
    if (!row.is_array() || row.size() != i)
      throw InvalidInput("generator file: T row " + std::to_string(i + 1) + " must have " + std::to_string(i) +
                         " entries");
    for (std::size_t c = 0; c < i; ++c) g.t(i, c) = scalar_from_json(row[c], g.field);
  }
  if (!j["D"].is_array()) throw InvalidInput("generator file: D must be an array");
  for (const auto& row : j["D"]) {
    if (!row.is_array() || row.size() != n) throw InvalidInput("generator file: each D entry needs n scalars");
    std::vector<Scalar> d;
    for (const auto& x : row) d.push_back(scalar_from_json(x, g.field));
    g.d_gens.push_back(Matrix::diagonal(d, g.field));
  }
  return g;
}

std::string word_to_text(const Word& w) {
  std::ostringstream os;
  for (const auto& f : w.factors) os << f.gen << ' ' << f.exp << '\n';
  return os.str();
}

Word word_from_text(const std::string& text) {
  Word w;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    long long gen = -1;
    long long exp = -1;
    std::string extra;
    if (!(ls >> gen >> exp) || (ls >> extra) || gen < 0 || exp <= 0)
      throw InvalidInput("word file line " + std::to_string(lineno) + ": expected 'gen_id exponent'");
    w.append(Factor{static_cast<std::size_t>(gen), static_cast<std::uint64_t>(exp)});
  }
  return w;
}

}  // namespace trisemi
