#include <chrono>
#include <cstdio>
#include <iostream>
#include <random>
#include <string>

#include "CLI11.hpp"
#include "trisemi/diagengine.hpp"
#include "trisemi/error.hpp"
#include "trisemi/genset.hpp"
#include "trisemi/io.hpp"
#include "trisemi/ordering.hpp"
#include "trisemi/synth.hpp"
#include "trisemi/verify.hpp"

namespace {

using namespace trisemi;

constexpr int kOk = 0;
constexpr int kNotConverged = 2;
constexpr int kInvalid = 3;
constexpr int kInternal = 4;

struct RunConfig {
  std::size_t n = 0;
  std::string field = "real";
  std::uint64_t seed = 0;
  double eps = 0.0;
  double budget = 1e7;
  std::uint64_t box = 0;
  bool oracle = false;
  std::string gens;
  std::string target;
  std::string out;
  std::string suite;
  std::uint64_t trials = 100;
};

std::uint64_t budget_of(double b) {
  if (!(b >= 1.0) || b > 1e18) throw InvalidInput("--budget must be in [1, 1e18]");
  return static_cast<std::uint64_t>(b);
}

GeneratorSet load_generators(const std::string& path) {
  GeneratorSet g = generators_from_json(read_file(path));
  const auto problems = validate_generators(g);
  if (!problems.empty()) throw InvalidInput("generator file '" + path + "' is invalid: " + problems.front());
  return g;
}

void require_eps(double eps) {
  if (!(eps > 0.0)) throw InvalidInput("--eps must be positive");
}

void print_summary(const ReportFields& f, double wall_ms) {
  std::printf("converged=%s achieved_error=%.17g word_length=%zu nodes=%llu wall_ms=%.1f\n",
              f.converged ? "true" : "false", f.achieved_error, f.word_length,
              static_cast<unsigned long long>(f.nodes), wall_ms);
}

int emit(const RunConfig& cfg, const ReportFields& f, const Word& w, double wall_ms) {
  write_file_atomic(word_path_for(cfg.out), word_to_text(w));
  write_file_atomic(cfg.out, report_to_json(f));
  print_summary(f, wall_ms);
  return f.converged ? kOk : kNotConverged;
}

int cmd_gen(const RunConfig& cfg) {
  if (cfg.n < 1) throw InvalidInput("--n must be >= 1");
  const GeneratorSet g = build_default_generators(cfg.n, parse_field(cfg.field), cfg.seed);
  const auto problems = validate_generators(g);
  write_file_atomic(cfg.out, generators_to_json(g));
  std::printf("wrote %zu generators (n=%zu, field=%s) to %s\n", g.count(), g.n, cfg.field.c_str(), cfg.out.c_str());
  std::printf("validation: %zu violation(s)\n", problems.size());
  for (const auto& p : problems) std::printf("  %s\n", p.c_str());
  return problems.empty() ? kOk : kInternal;
}

int cmd_approx(const RunConfig& cfg) {
  require_eps(cfg.eps);
  const std::uint64_t budget = budget_of(cfg.budget);
  const GeneratorSet g = load_generators(cfg.gens);
  const Matrix b = parse_matrix_text(read_file(cfg.target));
  const ApproxReport r = approx_triangular(g, b, cfg.eps, budget, cfg.seed);
  return emit(cfg, report_fields(r, cfg.target, cfg.eps), r.word, r.stats.wall_ms);
}

int cmd_diag(const RunConfig& cfg) {
  require_eps(cfg.eps);
  const std::uint64_t budget = budget_of(cfg.budget);
  const GeneratorSet g = load_generators(cfg.gens);
  const Matrix b = parse_matrix_text(read_file(cfg.target));
  if (!b.is_diagonal()) throw InvalidInput("diag target is not diagonal");
  for (std::size_t i = 0; i < b.dim(); ++i)
    if (b(i, i) == Scalar{}) throw InvalidInput("diag target has a zero entry at position " + std::to_string(i + 1));
  if (!cfg.oracle) {
    const ApproxReport r = diag_closure_word(g, b, cfg.eps, budget);
    return emit(cfg, report_fields(r, cfg.target, cfg.eps), r.word, r.stats.wall_ms);
  }
  if (b.dim() != g.n) throw InvalidInput("--oracle needs a target of the generator dimension");
  if (b.field() == FieldTag::complex && g.field == FieldTag::real)
    throw InvalidInput("complex target for a real generator set");
  const auto t0 = std::chrono::steady_clock::now();
  DiagSolveConfig dc;
  dc.tol = cfg.eps;
  dc.budget = budget;
  dc.box = cfg.box;
  dc.mode = DiagMode::exhaustive;
  ReportFields f;
  f.target_path = cfg.target;
  f.eps = cfg.eps;
  Word w;
  Matrix bg(b.dim(), g.field);
  for (std::size_t i = 0; i < b.dim(); ++i) bg(i, i) = b(i, i);
  try {
    const DiagSolveResult r = diag_solve_exhaustive(g, diag_log_target(bg), dc);
    w = exponent_word(r.exps);
    f.nodes = r.nodes;
    f.achieved_error = w.empty() ? sup_norm(Matrix::identity(b.dim(), g.field) - bg) : word_error(g, w, bg);
    f.converged = f.achieved_error <= cfg.eps;
    char buf[96];
    std::snprintf(buf, sizeof buf, "oracle diagonal minimum %.17g over box %llu", r.error,
                  static_cast<unsigned long long>(cfg.box));
    f.message = buf;
  } catch (const Infeasible& e) {
    f.message = std::string("infeasible: ") + e.what();
    std::printf("%s\n", f.message.c_str());
  }
  f.word_length = w.length();
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return emit(cfg, f, w, ms);
}

int cmd_verify(const RunConfig& cfg) {
  if (cfg.n < 1) throw InvalidInput("--n must be >= 1");
  const auto reports = run_verify(cfg.suite, cfg.n, cfg.trials, cfg.seed);
  bool ok = true;
  for (const auto& rep : reports) {
    if (rep.suite == "order") std::printf("order: chain length %zu for n=%zu\n", delta_chain(cfg.n).size(), cfg.n);
    for (const auto& p : rep.properties) {
      std::printf("%-10s %-32s %llu/%llu %s\n", rep.suite.c_str(), p.name.c_str(),
                  static_cast<unsigned long long>(p.passed), static_cast<unsigned long long>(p.total),
                  p.ok() ? "PASS" : "FAIL");
    }
    ok = ok && rep.ok();
  }
  std::printf("%s\n", ok ? "all properties passed" : "FAILURES detected");
  return ok ? kOk : kInternal;
}

Matrix random_target(std::size_t n, FieldTag f, bool diagonal, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mag(0.2, 3.0);
  std::uniform_real_distribution<double> off(-3.0, 3.0);
  std::uniform_real_distribution<double> ang(0.0, 6.283185307179586);
  Matrix b(n, f);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = mag(rng);
    b(i, i) = f == FieldTag::real ? ((rng() & 1U) ? -r : r) : std::polar(r, ang(rng));
    if (diagonal) continue;
    for (std::size_t j = 0; j < i; ++j) b(i, j) = f == FieldTag::real ? Scalar(off(rng)) : Scalar(off(rng), off(rng));
  }
  return b;
}

int cmd_bench(const RunConfig& cfg) {
  const FieldTag f = parse_field(cfg.field);
  const std::size_t max_n = cfg.n == 0 ? 3 : cfg.n;
  const double eps = cfg.eps > 0.0 ? cfg.eps : 0.5;
  const std::uint64_t budget = budget_of(cfg.budget);
  std::printf("%-3s %-8s %-9s %-24s %-12s %-12s %-12s %s\n", "n", "workload", "converged", "achieved_error",
              "word_length", "nodes", "budget", "wall_ms");
  for (std::size_t n = 1; n <= max_n; ++n) {
    const GeneratorSet g = build_default_generators(n, f);
    for (const char* workload : {"diag", "approx"}) {
      std::mt19937_64 rng(cfg.seed * 1000003ULL + n);
      const bool diag = std::string(workload) == "diag";
      const Matrix b = random_target(n, f, diag, rng);
      const auto t0 = std::chrono::steady_clock::now();
      const ApproxReport r = diag ? diag_closure_word(g, b, eps, budget) : approx_triangular(g, b, eps, budget, cfg.seed);
      const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      std::printf("%-3zu %-8s %-9s %-24.17g %-12zu %-12llu %-12llu %.1f\n", n, workload, r.converged ? "true" : "false",
                  r.achieved_error, r.word.length(), static_cast<unsigned long long>(r.stats.nodes),
                  static_cast<unsigned long long>(budget), ms);
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Word synthesis over dense generator sets of lower-triangular matrices"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto* gen = app.add_subcommand("gen", "Write the default generator set");
  gen->add_option("--n", cfg.n, "Dimension")->required();
  gen->add_option("--field", cfg.field, "real or complex");
  gen->add_option("--seed", cfg.seed, "Seed");
  gen->add_option("--out", cfg.out, "Output JSON path")->required();

  auto* approx = app.add_subcommand("approx", "Approximate a lower-triangular target");
  approx->add_option("--gens", cfg.gens, "Generator JSON")->required();
  approx->add_option("--target", cfg.target, "Target matrix file")->required();
  approx->add_option("--eps", cfg.eps, "Tolerance (sup norm)")->required();
  approx->add_option("--budget", cfg.budget, "Node budget per diagonal solve");
  approx->add_option("--seed", cfg.seed, "Seed for perturbations");
  approx->add_option("--out", cfg.out, "Report path (word goes to <out>.word)")->required();

  auto* diag = app.add_subcommand("diag", "Approximate a diagonal target");
  diag->add_option("--gens", cfg.gens, "Generator JSON")->required();
  diag->add_option("--target", cfg.target, "Target matrix file")->required();
  diag->add_option("--eps", cfg.eps, "Tolerance")->required();
  diag->add_option("--budget", cfg.budget, "Node budget");
  diag->add_option("--box", cfg.box, "Exponent box for --oracle");
  diag->add_flag("--oracle", cfg.oracle, "Exhaustive search over the box (small boxes only)");
  diag->add_option("--seed", cfg.seed, "Seed");
  diag->add_option("--out", cfg.out, "Report path (word goes to <out>.word)")->required();

  auto* verify = app.add_subcommand("verify", "Run randomized property suites");
  verify->add_option("--suite", cfg.suite, "order|lemma1|lemma2|triclass|sigma|factor|eliminate|all")->required();
  verify->add_option("--n", cfg.n, "Dimension")->default_val(3);
  verify->add_option("--trials", cfg.trials, "Random instances per property")->default_val(100);
  verify->add_option("--seed", cfg.seed, "Seed");

  auto* bench = app.add_subcommand("bench", "Timing and node-count table for n = 1..N");
  bench->add_option("--n", cfg.n, "Largest dimension (default 3)");
  bench->add_option("--field", cfg.field, "real or complex");
  bench->add_option("--eps", cfg.eps, "Tolerance (default 0.5)");
  bench->add_option("--budget", cfg.budget, "Node budget")->default_val(1e6);
  bench->add_option("--seed", cfg.seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*gen) return cmd_gen(cfg);
    if (*approx) return cmd_approx(cfg);
    if (*diag) return cmd_diag(cfg);
    if (*verify) return cmd_verify(cfg);
    return cmd_bench(cfg);
  } catch (const InvalidInput& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInvalid;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kInternal;
  }
}
