// Python bindings for the main operations: systems, cocycles, spectra,
// audits, transfer tables, holonomies and the verification suite.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cocyclelab/verify.hpp"

namespace py = pybind11;
using namespace cocyclelab;

namespace {

std::vector<std::vector<double>> to_nested(const Matrix& m) {
  std::vector<std::vector<double>> out(static_cast<size_t>(m.rows()));
  for (int i = 0; i < m.rows(); ++i) {
    out[static_cast<size_t>(i)].resize(static_cast<size_t>(m.cols()));
    for (int j = 0; j < m.cols(); ++j)
      out[static_cast<size_t>(i)][static_cast<size_t>(j)] = m(i, j);
  }
  return out;
}

Matrix from_nested(const std::vector<std::vector<double>>& rows) {
  if (rows.empty() || rows[0].empty())
    throw py::value_error("matrix must be a nonempty nested list");
  Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size())
      throw py::value_error("ragged matrix rows");
    for (size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  }
  return m;
}

py::dict check_to_dict(const CheckResult& c) {
  py::dict d;
  d["id"] = c.id;
  switch (c.state) {
    case CheckResult::State::kPass: d["state"] = "pass"; break;
    case CheckResult::State::kFail:
      d["state"] = c.expected_fail ? "expected-fail" : "fail";
      break;
    case CheckResult::State::kSkipped: d["state"] = "skipped"; break;
  }
  d["value"] = c.value;
  d["detail"] = c.detail;
  return d;
}

struct PySystem {
  std::shared_ptr<const BaseSystem> sys;
};

struct PyCocycle {
  std::shared_ptr<const BaseSystem> sys;
  std::shared_ptr<CocycleMap> map;
};

struct PyTable {
  std::shared_ptr<const BaseSystem> sys;
  std::shared_ptr<CocycleMap> map;
  std::shared_ptr<TransferTable> table;
};

Point parse_point(const PySystem& s, const py::object& obj) {
  if (py::isinstance<TorusPoint>(obj)) return obj.cast<TorusPoint>();
  if (py::isinstance<SymbolSequence>(obj)) return obj.cast<SymbolSequence>();
  if (s.sys->is_torus()) {
    auto coords = obj.cast<std::vector<double>>();
    Vector v(static_cast<int>(coords.size()));
    for (size_t i = 0; i < coords.size(); ++i) v(static_cast<int>(i)) = coords[i];
    return TorusPoint(v);
  }
  auto word = obj.cast<std::string>();
  std::vector<uint8_t> symbols;
  for (char ch : word) symbols.push_back(static_cast<uint8_t>(ch - '0'));
  return SymbolSequence::periodic_word(s.sys->alphabet(), symbols);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "numerical Livsic-theorem laboratory: matrix cocycles over "
            "hyperbolic systems";

  py::register_exception<Error>(m, "CocycleLabError");

  py::class_<TorusPoint>(m, "TorusPoint")
      .def("__repr__",
           [](const TorusPoint& p) { return point_to_string(Point(p)); })
      .def("coords", [](const TorusPoint& t) {
        std::vector<double> out(static_cast<size_t>(t.dimension()));
        for (int i = 0; i < t.dimension(); ++i) out[static_cast<size_t>(i)] = t[i];
        return out;
      });

  py::class_<SymbolSequence>(m, "SymbolSequence")
      .def("__repr__", [](const SymbolSequence& s) { return s.to_string(); })
      .def("symbol_at", &SymbolSequence::symbol_at)
      .def("window", &SymbolSequence::window_string);

  py::class_<PySystem>(m, "System")
      .def_static("torus_automorphism",
                  [](const std::vector<std::vector<double>>& matrix,
                     double leaf_radius, double bracket_radius) {
                    return PySystem{std::make_shared<BaseSystem>(
                        BaseSystem::torus_automorphism(from_nested(matrix),
                                                       leaf_radius, bracket_radius))};
                  },
                  py::arg("matrix"), py::arg("leaf_radius") = 0.05,
                  py::arg("bracket_radius") = 0.05)
      .def_static("full_shift",
                  [](int alphabet, double bracket_radius) {
                    return PySystem{std::make_shared<BaseSystem>(
                        BaseSystem::full_shift(alphabet, bracket_radius))};
                  },
                  py::arg("alphabet"), py::arg("bracket_radius") = 0.75)
      .def("point", &parse_point, py::arg("value"),
           "Torus: list of coordinates. Shift: a periodic word string.")
      .def("iterate",
           [](const PySystem& s, const py::object& x, int64_t n) {
             return s.sys->iterate(parse_point(s, x), n);
           })
      .def("distance",
           [](const PySystem& s, const py::object& a, const py::object& b) {
             return s.sys->distance(parse_point(s, a), parse_point(s, b));
           })
      .def("periodic_points",
           [](const PySystem& s, int64_t n) {
             std::vector<Point> out;
             for (auto& orbit : s.sys->enumerate_periodic(n))
               out.push_back(orbit.base_point);
             return out;
           })
      .def("shadow",
           [](const PySystem& s, const py::object& y, int64_t n, double h) {
             ShadowResult res = s.sys->shadow(parse_point(s, y), n, h);
             py::dict d;
             d["periodic_point"] = res.periodic_point;
             d["per_step_distances"] = res.per_step_distances;
             d["bound_constant"] = res.bound_constant;
             d["rate"] = res.rate;
             d["bound_satisfied"] = res.bound_satisfied;
             d["fitted_eta"] = res.fitted_eta;
             d["exact_lattice"] = res.exact_lattice;
             return d;
           })
      .def("local_stable_point",
           [](const PySystem& s, const py::object& x, double t) {
             return s.sys->local_stable_point(parse_point(s, x), t);
           })
      .def("local_unstable_point",
           [](const PySystem& s, const py::object& x, double t) {
             return s.sys->local_unstable_point(parse_point(s, x), t);
           })
      .def("bracket",
           [](const PySystem& s, const py::object& z, const py::object& w) {
             return s.sys->bracket(parse_point(s, z), parse_point(s, w));
           })
      .def("sample",
           [](const PySystem& s, uint64_t seed, int64_t count) {
             return s.sys->sample_measure(seed, count);
           })
      .def("__repr__", [](const PySystem& s) { return s.sys->describe(); });

  py::class_<PyCocycle>(m, "Cocycle")
      .def_static("constant",
                  [](const PySystem& s, const std::vector<std::vector<double>>& a0,
                     double alpha) {
                    return PyCocycle{s.sys,
                                     std::make_shared<CocycleMap>(CocycleMap::constant(
                                         from_nested(a0), alpha))};
                  },
                  py::arg("system"), py::arg("matrix"), py::arg("alpha") = 1.0)
      .def_static(
          "coboundary_rotation",
          [](const PySystem& s,
             const std::vector<std::tuple<std::vector<int64_t>, double, double>>& terms,
             double alpha) {
            std::vector<GroundTruthTransfer::TrigTerm> tt;
            for (const auto& [freq, amp, phase] : terms)
              tt.push_back({freq, amp, phase});
            return PyCocycle{
                s.sys, std::make_shared<CocycleMap>(CocycleMap::coboundary(
                           GroundTruthTransfer::rotation_field(tt, alpha), s.sys))};
          },
          py::arg("system"), py::arg("terms"), py::arg("alpha") = 1.0,
          "terms: list of (freq_vector, amplitude, phase); the transfer map is "
          "the rotation by sum_t amp cos(2 pi <freq, x> + phase)")
      .def_static("locally_constant",
                  [](const PySystem& s, int depth,
                     const std::vector<std::vector<std::vector<double>>>& table,
                     double alpha) {
                    std::vector<Matrix> t;
                    for (const auto& rows : table) t.push_back(from_nested(rows));
                    return PyCocycle{s.sys, std::make_shared<CocycleMap>(
                                                CocycleMap::locally_constant(
                                                    s.sys->alphabet(), depth, t, alpha))};
                  },
                  py::arg("system"), py::arg("depth"), py::arg("table"),
                  py::arg("alpha") = 1.0)
      .def("evaluate",
           [](const PyCocycle& c, const py::object& x) {
             return to_nested(c.map->evaluate(parse_point({c.sys}, x)));
           })
      .def("product",
           [](const PyCocycle& c, const py::object& x, int64_t n) {
             ScaledProduct sp =
                 cocycle_product(*c.map, *c.sys, parse_point({c.sys}, x), n);
             py::dict d;
             d["matrix"] = to_nested(sp.to_matrix());
             d["log_scale"] = sp.log_scale();
             d["log_norm"] = sp.log_norm();
             return d;
           })
      .def("spectrum",
           [](const PyCocycle& c, const py::object& x, int64_t n_iters) {
             LyapunovSpectrum spec =
                 lyapunov_spectrum(*c.map, *c.sys, parse_point({c.sys}, x), n_iters);
             py::dict d;
             d["exponents"] = spec.exponents;
             d["multiplicities"] = spec.multiplicities;
             d["drift"] = spec.drift;
             d["converged"] = spec.converged;
             return d;
           })
      .def("zero_exponent_check",
           [](const PyCocycle& c, int64_t samples, uint64_t seed, int64_t iters) {
             ZeroExponentReport rep =
                 zero_exponent_check(*c.map, *c.sys, samples, seed, iters);
             py::dict d;
             d["max_abs_top"] = rep.max_abs_top;
             d["max_abs_bottom"] = rep.max_abs_bottom;
             d["threshold"] = rep.threshold;
             d["pass"] = rep.pass;
             return d;
           },
           py::arg("samples") = 4, py::arg("seed") = 1, py::arg("iters") = 20000)
      .def("c_epsilon",
           [](const PyCocycle& c, const py::object& x, double eps, int truncation) {
             LyapunovNormContext ctx =
                 lyap_gram(*c.map, *c.sys, parse_point({c.sys}, x), eps, truncation);
             return ctx.c_eps;
           },
           py::arg("x"), py::arg("epsilon"), py::arg("truncation") = 200)
      .def("lyapunov_norm",
           [](const PyCocycle& c, const py::object& x, double eps,
              const std::vector<double>& u, int truncation) {
             LyapunovNormContext ctx =
                 lyap_gram(*c.map, *c.sys, parse_point({c.sys}, x), eps, truncation);
             Vector v(static_cast<int>(u.size()));
             for (size_t i = 0; i < u.size(); ++i) v(static_cast<int>(i)) = u[i];
             return lyap_norm_vector(ctx, v);
           },
           py::arg("x"), py::arg("epsilon"), py::arg("u"),
           py::arg("truncation") = 200)
      .def("stable_holonomy",
           [](const PyCocycle& c, const py::object& y, const py::object& z) {
             HolonomySettings st;
             HolonomyMatrix h = stable_holonomy(*c.map, *c.sys,
                                                parse_point({c.sys}, y),
                                                parse_point({c.sys}, z), st);
             py::dict d;
             d["matrix"] = to_nested(h.h);
             d["n_converged"] = h.n_converged;
             d["leaf_distance"] = h.leaf_distance;
             return d;
           })
      .def("unstable_holonomy",
           [](const PyCocycle& c, const py::object& y, const py::object& z) {
             HolonomySettings st;
             HolonomyMatrix h = unstable_holonomy(*c.map, *c.sys,
                                                  parse_point({c.sys}, y),
                                                  parse_point({c.sys}, z), st);
             py::dict d;
             d["matrix"] = to_nested(h.h);
             d["n_converged"] = h.n_converged;
             d["leaf_distance"] = h.leaf_distance;
             return d;
           });

  py::class_<PyTable>(m, "TransferTable")
      .def_property_readonly("size",
                             [](const PyTable& t) { return t.table->entries.size(); })
      .def_property_readonly("in_g_count",
                             [](const PyTable& t) { return t.table->in_g_count; })
      .def_property_readonly("bound_t",
                             [](const PyTable& t) { return t.table->bound_t; })
      .def("entry",
           [](const PyTable& t, int64_t i) {
             const auto& e = t.table->entries.at(static_cast<size_t>(i));
             py::dict d;
             d["n"] = e.n;
             d["point"] = e.point;
             d["p"] = to_nested(e.p.to_matrix());
             d["in_g"] = e.in_g;
             d["c_eps"] = e.c_eps;
             return d;
           })
      .def("near_return_scan",
           [](const PyTable& t, double beta) -> py::dict {
             NearReturnOptions opts;
             opts.beta = beta;
             NearReturnScan scan = near_return_scan(*t.map, *t.sys, *t.table, opts);
             py::dict d;
             d["pairs"] = scan.stats.size();
             d["slope"] = scan.slope;
             d["fitted_K"] = scan.fitted_k;
             d["fitted_L"] = scan.fitted_l;
             d["shadowed"] = scan.shadowed;
             return d;
           },
           py::arg("beta") = 0.01)
      .def("holder_estimate",
           [](const PyTable& t, int64_t pair_budget, double max_distance,
              double alpha) {
             std::vector<char> mask;
             for (const auto& e : t.table->entries) mask.push_back(e.in_g ? 1 : 0);
             HolderOptions opts;
             opts.alpha = alpha;
             opts.max_distance = max_distance;
             HolderEstimate est =
                 holder_estimate(*t.sys, *t.table, mask, pair_budget, opts);
             py::dict d;
             d["slope"] = est.slope;
             d["intercept"] = est.intercept;
             d["pairs_used"] = est.pairs_used;
             d["degenerate"] = est.degenerate;
             return d;
           },
           py::arg("pair_budget") = 20000, py::arg("max_distance") = 0.025,
           py::arg("alpha") = 1.0);

  m.def("obstruction_audit",
        [](const PyCocycle& c, int64_t n_max, double tolerance, int threads) {
          ObstructionReport rep =
              obstruction_audit(*c.map, *c.sys, n_max, tolerance, threads);
          py::dict d;
          d["max_defect"] = rep.max_defect;
          d["audited"] = rep.audited;
          d["counts_per_period"] = rep.counts_per_period;
          d["pass"] = rep.pass;
          py::list worst;
          for (size_t i = 0; i < rep.rows.size() && i < 10; ++i) {
            py::dict row;
            row["period"] = rep.rows[i].period;
            row["point"] = rep.rows[i].label;
            row["defect"] = rep.rows[i].defect;
            worst.append(std::move(row));
          }
          d["worst"] = std::move(worst);
          return d;
        },
        py::arg("cocycle"), py::arg("n_max"), py::arg("tolerance") = 1e-8,
        py::arg("threads") = 1);

  m.def("build_transfer",
        [](const PyCocycle& c, const py::object& anchor, int64_t n_points,
           double epsilon, double block_bound, uint64_t seed, bool override_check) {
          TransferOptions opts;
          opts.n_points = n_points;
          opts.epsilon = epsilon > 0 ? epsilon : 0.05 * c.sys->closing_rate();
          opts.block_bound = block_bound;
          opts.seed = seed;
          opts.override_zero_check = override_check;
          Point x0 = anchor.is_none() ? choose_anchor(*c.sys, seed)
                                      : parse_point({c.sys}, anchor);
          auto table = std::make_shared<TransferTable>(
              build_transfer(*c.map, *c.sys, x0, opts));
          return PyTable{c.sys, c.map, std::move(table)};
        },
        py::arg("cocycle"), py::arg("anchor") = py::none(),
        py::arg("n_points") = 5000, py::arg("epsilon") = 0.0,
        py::arg("block_bound") = 20.0, py::arg("seed") = 1,
        py::arg("override_zero_check") = false);

  m.def("uniqueness_residual", [](const PyTable& t) {
    const GroundTruthTransfer* truth = t.map->ground_truth();
    if (!truth) throw py::value_error("table's cocycle has no ground truth");
    return uniqueness_residual(*t.table, *truth, *t.sys);
  });

  m.def("run_verify",
        [](const std::string& config_json, int threads) {
          ExperimentConfig cfg = parse_config(Json::parse(config_json));
          py::list out;
          for (const auto& c : verify::run_config_suite(cfg, threads))
            out.append(check_to_dict(c));
          return out;
        },
        py::arg("config_json"), py::arg("threads") = 1);

  m.def("make",
        [](const std::string& config_json) {
          ExperimentConfig cfg = parse_config(Json::parse(config_json));
          auto sys = make_system(cfg);
          auto map = std::make_shared<CocycleMap>(make_cocycle(cfg, sys));
          return py::make_tuple(PySystem{sys}, PyCocycle{sys, map});
        },
        py::arg("config_json"),
        "Builds (System, Cocycle) from a full experiment config JSON string.");

  m.attr("__version__") = "0.1.0";
}
