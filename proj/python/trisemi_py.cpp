#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "trisemi/genset.hpp"
#include "trisemi/io.hpp"
#include "trisemi/ordering.hpp"
#include "trisemi/synth.hpp"
#include "trisemi/verify.hpp"

namespace py = pybind11;
using namespace trisemi;

namespace {

using CArray = py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const CArray& a, FieldTag field) {
  if (a.ndim() != 2 || a.shape(0) != a.shape(1)) throw InvalidInput("expected a square 2-d array");
  const auto n = static_cast<std::size_t>(a.shape(0));
  Matrix m(n, field);
  auto v = a.unchecked<2>();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      m(i, j) = v(i, j);
      if (field == FieldTag::real && m(i, j).imag() != 0.0) throw InvalidInput("complex entry in a real matrix");
    }
  return m;
}

py::array to_array(const Matrix& m) {
  const auto n = static_cast<py::ssize_t>(m.dim());
  if (m.field() == FieldTag::real) {
    py::array_t<double> out({n, n});
    auto w = out.mutable_unchecked<2>();
    for (py::ssize_t i = 0; i < n; ++i)
      for (py::ssize_t j = 0; j < n; ++j) w(i, j) = m(i, j).real();
    return out;
  }
  CArray out({n, n});
  auto w = out.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < n; ++i)
    for (py::ssize_t j = 0; j < n; ++j) w(i, j) = m(i, j);
  return out;
}

Word to_word(const std::vector<std::pair<std::size_t, std::uint64_t>>& w) {
  Word out;
  for (const auto& [gen, exp] : w) out.append(Factor{gen, exp});
  return out;
}

std::vector<std::pair<std::size_t, std::uint64_t>> from_word(const Word& w) {
  std::vector<std::pair<std::size_t, std::uint64_t>> out;
  for (const auto& f : w.factors) out.emplace_back(f.gen, f.exp);
  return out;
}

py::dict report_dict(const ApproxReport& r) {
  py::dict d;
  d["converged"] = r.converged;
  d["achieved_error"] = r.achieved_error;
  d["word"] = from_word(r.word);
  d["word_length"] = r.word.length();
  d["nodes"] = r.stats.nodes;
  d["retries"] = r.stats.retries;
  d["error_bound"] = r.stats.error_bound;
  return d;
}

}  // namespace

PYBIND11_MODULE(_trisemi, m) {
  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);

  py::class_<GeneratorSet>(m, "Generators")
      .def_readonly("n", &GeneratorSet::n)
      .def_property_readonly("field", [](const GeneratorSet& g) { return std::string(to_string(g.field)); })
      .def_property_readonly("count", &GeneratorSet::count)
      .def("generator", [](const GeneratorSet& g, std::size_t id) {
        if (id >= g.count()) throw InvalidInput("generator id out of range");
        return to_array(g.generator(id));
      })
      .def("to_json", &generators_to_json)
      .def_static("from_json", &generators_from_json)
      .def("validate", &validate_generators);

  m.def("default_generators",
        [](std::size_t n, const std::string& field) { return build_default_generators(n, parse_field(field)); },
        py::arg("n"), py::arg("field") = "real");

  m.def("eval_word", [](const GeneratorSet& g, const std::vector<std::pair<std::size_t, std::uint64_t>>& w) {
    return to_array(eval_word(g, to_word(w)));
  });

  m.def("word_error", [](const GeneratorSet& g, const std::vector<std::pair<std::size_t, std::uint64_t>>& w,
                         const CArray& b) { return word_error(g, to_word(w), to_matrix(b, g.field)); });

  m.def(
      "approx",
      [](const GeneratorSet& g, const CArray& b, double eps, double budget, std::uint64_t seed) {
        const Matrix target = to_matrix(b, g.field);
        ApproxReport r;
        {
          py::gil_scoped_release release;
          r = approx_triangular(g, target, eps, static_cast<std::uint64_t>(budget), seed);
        }
        return report_dict(r);
      },
      py::arg("gens"), py::arg("target"), py::arg("eps"), py::arg("budget") = 1e7, py::arg("seed") = 0);

  m.def(
      "diag",
      [](const GeneratorSet& g, const CArray& b, double eps, double budget) {
        const Matrix target = to_matrix(b, g.field);
        ApproxReport r;
        {
          py::gil_scoped_release release;
          r = diag_closure_word(g, target, eps, static_cast<std::uint64_t>(budget));
        }
        return report_dict(r);
      },
      py::arg("gens"), py::arg("target"), py::arg("eps"), py::arg("budget") = 1e6);

  m.def("delta_chain", [](std::size_t n) {
    std::vector<std::pair<int, int>> out;
    for (const auto& p : delta_chain(n)) out.emplace_back(p.r, p.s);
    return out;
  });

  m.def("lambda_bound", [](const CArray& a) { return lambda_bound(to_matrix(a, FieldTag::complex)); });

  m.def("verify", [](const std::string& suite, std::size_t n, std::uint64_t trials, std::uint64_t seed) {
    py::dict out;
    for (const auto& r : run_verify(suite, n, trials, seed)) {
      py::dict props;
      for (const auto& p : r.properties) props[py::str(p.name)] = py::make_tuple(p.passed, p.total);
      out[py::str(r.suite)] = props;
    }
    return out;
  }, py::arg("suite") = "all", py::arg("n") = 3, py::arg("trials") = 100, py::arg("seed") = 0);
}
