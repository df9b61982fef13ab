#include "cocyclelab/config.hpp"

#include <fstream>

namespace cocyclelab {

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  fail(ErrorCode::kConfigError, path + ": " + what);
}

void check_keys(const Json& j, const std::string& path,
                const std::set<std::string>& allowed) {
  if (!j.is_object()) bad(path, "expected an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key)) bad(path + "." + key, "unknown key");
  }
}

double get_num(const Json& j, const std::string& path, const char* key,
               double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) bad(path + "." + key, "expected a number");
  return j.at(key).get<double>();
}

int64_t get_int(const Json& j, const std::string& path, const char* key,
                int64_t fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer()) bad(path + "." + key, "expected an integer");
  return j.at(key).get<int64_t>();
}

bool get_bool(const Json& j, const std::string& path, const char* key,
              bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) bad(path + "." + key, "expected a boolean");
  return j.at(key).get<bool>();
}

std::string get_str(const Json& j, const std::string& path, const char* key,
                    const std::string& fallback, bool required = false) {
  if (!j.contains(key)) {
    if (required) bad(path + "." + key, "missing required key");
    return fallback;
  }
  if (!j.at(key).is_string()) bad(path + "." + key, "expected a string");
  return j.at(key).get<std::string>();
}

Matrix parse_matrix(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) bad(path, "expected a nested array matrix");
  size_t rows = j.size();
  size_t cols = j.at(0).is_array() ? j.at(0).size() : 0;
  if (cols == 0) bad(path, "expected row arrays");
  Matrix m(static_cast<int>(rows), static_cast<int>(cols));
  for (size_t r = 0; r < rows; ++r) {
    const Json& row = j.at(r);
    if (!row.is_array() || row.size() != cols) bad(path, "ragged matrix rows");
    for (size_t c = 0; c < cols; ++c) {
      if (!row.at(c).is_number()) bad(path, "matrix entries must be numbers");
      m(static_cast<int>(r), static_cast<int>(c)) = row.at(c).get<double>();
    }
  }
  return m;
}

std::vector<int64_t> parse_freq(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) bad(path, "expected an integer frequency vector");
  std::vector<int64_t> out;
  for (const auto& v : j) {
    if (!v.is_number_integer()) bad(path, "frequency entries must be integers");
    out.push_back(v.get<int64_t>());
  }
  return out;
}

std::vector<std::pair<std::string, Matrix>> parse_word_table(
    const Json& j, const std::string& path) {
  if (!j.is_object() || j.empty()) bad(path, "expected a word -> matrix table");
  std::vector<std::pair<std::string, Matrix>> out;
  for (const auto& [word, value] : j.items())
    out.emplace_back(word, parse_matrix(value, path + "." + word));
  return out;
}

std::vector<Matrix> table_by_code(
    const std::vector<std::pair<std::string, Matrix>>& words, int alphabet,
    int depth, const std::string& path) {
  size_t expected = 1;
  for (int i = 0; i < 2 * depth + 1; ++i) expected *= static_cast<size_t>(alphabet);
  std::vector<Matrix> table(expected);
  std::vector<char> seen(expected, 0);
  for (const auto& [word, m] : words) {
    if (static_cast<int>(word.size()) != 2 * depth + 1)
      bad(path, "word '" + word + "' must have length " +
                    std::to_string(2 * depth + 1));
    // code: least significant digit at coordinate -depth (leftmost character)
    int64_t code = 0, pow = 1;
    for (char ch : word) {
      int sym = ch - '0';
      if (sym < 0 || sym >= alphabet) bad(path, "bad symbol in word '" + word + "'");
      code += pow * sym;
      pow *= alphabet;
    }
    if (seen[static_cast<size_t>(code)]) bad(path, "duplicate word '" + word + "'");
    seen[static_cast<size_t>(code)] = 1;
    table[static_cast<size_t>(code)] = m;
  }
  for (char s : seen)
    if (!s) bad(path, "table must cover every word of length " +
                          std::to_string(2 * depth + 1));
  return table;
}

}  // namespace

double ExperimentConfig::effective_epsilon(const BaseSystem& sys) const {
  if (lyapnorm.epsilon > 0) return lyapnorm.epsilon;
  return 0.05 * cocycle.alpha * sys.closing_rate();
}

double ExperimentConfig::effective_delta(const BaseSystem& sys) const {
  if (holonomy.delta > 0) return holonomy.delta;
  return sys.bracket_radius();
}

std::pair<double, double> ExperimentConfig::slope_band() const {
  if (holonomy.slope_min > 0 || holonomy.slope_max > 0)
    return {holonomy.slope_min, holonomy.slope_max};
  return {0.8 * cocycle.alpha, 1.3 * cocycle.alpha};
}

ExperimentConfig parse_config(const Json& j) {
  ExperimentConfig cfg;
  cfg.echo = j;
  check_keys(j, "config",
             {"system", "cocycle", "lyapnorm", "livsic", "holonomy", "output",
              "expect_fail"});
  if (!j.contains("system")) bad("config.system", "missing required block");
  if (!j.contains("cocycle")) bad("config.cocycle", "missing required block");

  {
    const Json& s = j.at("system");
    check_keys(s, "system",
               {"kind", "matrix", "alphabet", "leaf_radius", "bracket_radius",
                "sample_window", "enum_budget"});
    cfg.system.kind = get_str(s, "system", "kind", "", true);
    if (cfg.system.kind == "torus_automorphism") {
      if (!s.contains("matrix")) bad("system.matrix", "missing for torus kind");
      cfg.system.matrix = parse_matrix(s.at("matrix"), "system.matrix");
      cfg.system.bracket_radius = get_num(s, "system", "bracket_radius", 0.05);
    } else if (cfg.system.kind == "full_shift") {
      cfg.system.alphabet =
          static_cast<int>(get_int(s, "system", "alphabet", 2));
      cfg.system.bracket_radius = get_num(s, "system", "bracket_radius", 0.75);
    } else {
      bad("system.kind", "must be torus_automorphism or full_shift");
    }
    cfg.system.leaf_radius = get_num(s, "system", "leaf_radius", 0.05);
    cfg.system.sample_window =
        static_cast<int>(get_int(s, "system", "sample_window", 4096));
    cfg.system.enum_budget =
        static_cast<int>(get_int(s, "system", "enum_budget", 14));
  }

  {
    const Json& c = j.at("cocycle");
    check_keys(c, "cocycle",
               {"variant", "dimension", "alpha", "condition_bound", "matrix",
                "transfer", "depth", "alphabet", "table", "constant_term",
                "terms"});
    cfg.cocycle.variant = get_str(c, "cocycle", "variant", "", true);
    cfg.cocycle.dimension = static_cast<int>(get_int(c, "cocycle", "dimension", 2));
    cfg.cocycle.alpha = get_num(c, "cocycle", "alpha", 1.0);
    cfg.cocycle.condition_bound = get_num(c, "cocycle", "condition_bound", 1e8);
    const std::string& variant = cfg.cocycle.variant;
    if (variant == "constant") {
      if (!c.contains("matrix")) bad("cocycle.matrix", "missing for constant variant");
      cfg.cocycle.matrix = parse_matrix(c.at("matrix"), "cocycle.matrix");
    } else if (variant == "coboundary") {
      if (!c.contains("transfer")) bad("cocycle.transfer", "missing for coboundary");
      const Json& t = c.at("transfer");
      check_keys(t, "cocycle.transfer",
                 {"kind", "terms", "levels", "amplitude", "base", "phase_seed",
                  "alpha", "depth", "alphabet", "table"});
      cfg.cocycle.transfer.kind =
          get_str(t, "cocycle.transfer", "kind", "", true);
      double talpha = get_num(t, "cocycle.transfer", "alpha", cfg.cocycle.alpha);
      cfg.cocycle.alpha = talpha;
      if (cfg.cocycle.transfer.kind == "rotation_field") {
        if (!t.contains("terms")) bad("cocycle.transfer.terms", "missing");
        for (const auto& term : t.at("terms")) {
          check_keys(term, "cocycle.transfer.terms[]",
                     {"freq", "amplitude", "phase"});
          GroundTruthTransfer::TrigTerm tt;
          tt.freq = parse_freq(term.at("freq"), "cocycle.transfer.terms[].freq");
          tt.amplitude = get_num(term, "cocycle.transfer.terms[]", "amplitude", 0.0);
          tt.phase = get_num(term, "cocycle.transfer.terms[]", "phase", 0.0);
          cfg.cocycle.transfer.terms.push_back(std::move(tt));
        }
      } else if (cfg.cocycle.transfer.kind == "rotation_lacunary") {
        cfg.cocycle.transfer.levels =
            static_cast<int>(get_int(t, "cocycle.transfer", "levels", 24));
        cfg.cocycle.transfer.amplitude =
            get_num(t, "cocycle.transfer", "amplitude", 0.35);
        cfg.cocycle.transfer.base =
            static_cast<int>(get_int(t, "cocycle.transfer", "base", 2));
        cfg.cocycle.transfer.phase_seed = static_cast<uint64_t>(
            get_int(t, "cocycle.transfer", "phase_seed", 7));
      } else if (cfg.cocycle.transfer.kind == "cylinder") {
        cfg.cocycle.transfer.depth =
            static_cast<int>(get_int(t, "cocycle.transfer", "depth", 0));
        cfg.cocycle.transfer.alphabet =
            static_cast<int>(get_int(t, "cocycle.transfer", "alphabet", 2));
        if (!t.contains("table")) bad("cocycle.transfer.table", "missing");
        cfg.cocycle.transfer.table =
            parse_word_table(t.at("table"), "cocycle.transfer.table");
      } else {
        bad("cocycle.transfer.kind",
            "must be rotation_field, rotation_lacunary or cylinder");
      }
    } else if (variant == "locally_constant") {
      cfg.cocycle.depth = static_cast<int>(get_int(c, "cocycle", "depth", 0));
      cfg.cocycle.alphabet = static_cast<int>(get_int(c, "cocycle", "alphabet", 2));
      if (!c.contains("table")) bad("cocycle.table", "missing for locally_constant");
      cfg.cocycle.table = parse_word_table(c.at("table"), "cocycle.table");
    } else if (variant == "torus_smooth") {
      if (!c.contains("constant_term"))
        bad("cocycle.constant_term", "missing for torus_smooth");
      cfg.cocycle.constant_term =
          parse_matrix(c.at("constant_term"), "cocycle.constant_term");
      if (c.contains("terms")) {
        for (const auto& term : c.at("terms")) {
          check_keys(term, "cocycle.terms[]", {"freq", "phase", "coeff"});
          CocycleMap::SmoothTerm st;
          st.freq = parse_freq(term.at("freq"), "cocycle.terms[].freq");
          st.phase = get_num(term, "cocycle.terms[]", "phase", 0.0);
          if (!term.contains("coeff")) bad("cocycle.terms[].coeff", "missing");
          st.coeff = parse_matrix(term.at("coeff"), "cocycle.terms[].coeff");
          cfg.cocycle.terms.push_back(std::move(st));
        }
      }
    } else {
      bad("cocycle.variant",
          "must be constant, coboundary, locally_constant or torus_smooth");
    }
  }

  if (j.contains("lyapnorm")) {
    const Json& l = j.at("lyapnorm");
    check_keys(l, "lyapnorm", {"epsilon", "truncation", "block_bound_N"});
    cfg.lyapnorm.epsilon = get_num(l, "lyapnorm", "epsilon", 0.0);
    cfg.lyapnorm.truncation =
        static_cast<int>(get_int(l, "lyapnorm", "truncation", 200));
    cfg.lyapnorm.block_bound_n = get_num(l, "lyapnorm", "block_bound_N", 20.0);
  }

  if (j.contains("livsic")) {
    const Json& l = j.at("livsic");
    check_keys(l, "livsic",
               {"n_max", "n_points", "beta", "seed", "defect_tolerance",
                "residual_tolerance", "spectrum_iters", "spectrum_samples",
                "exponent_iters", "shadow_max_period", "extend_depth",
                "max_return_pairs", "override_zero_check"});
    cfg.livsic.n_max = get_int(l, "livsic", "n_max", 10);
    cfg.livsic.n_points = get_int(l, "livsic", "n_points", 10000);
    cfg.livsic.beta = get_num(l, "livsic", "beta", 0.01);
    cfg.livsic.seed = static_cast<uint64_t>(get_int(l, "livsic", "seed", 20260801));
    cfg.livsic.defect_tolerance = get_num(l, "livsic", "defect_tolerance", 1e-8);
    cfg.livsic.residual_tolerance =
        get_num(l, "livsic", "residual_tolerance", 1e-6);
    cfg.livsic.spectrum_iters = get_int(l, "livsic", "spectrum_iters", 20000);
    cfg.livsic.spectrum_samples = get_int(l, "livsic", "spectrum_samples", 4);
    cfg.livsic.exponent_iters = get_int(l, "livsic", "exponent_iters", 100000);
    cfg.livsic.shadow_max_period = get_int(l, "livsic", "shadow_max_period", 24);
    cfg.livsic.extend_depth = get_int(l, "livsic", "extend_depth", 8);
    cfg.livsic.max_return_pairs = get_int(l, "livsic", "max_return_pairs", 400000);
    cfg.livsic.override_zero_check =
        get_bool(l, "livsic", "override_zero_check", false);
  }

  if (j.contains("holonomy")) {
    const Json& h = j.at("holonomy");
    check_keys(h, "holonomy",
               {"N", "theta", "k_max", "tol", "budget", "pair_budget", "delta",
                "slope_min", "slope_max"});
    cfg.holonomy.block_n = static_cast<int>(get_int(h, "holonomy", "N", 5));
    cfg.holonomy.theta = get_num(h, "holonomy", "theta", 0.1);
    cfg.holonomy.k_max = static_cast<int>(get_int(h, "holonomy", "k_max", 10));
    cfg.holonomy.tol = get_num(h, "holonomy", "tol", 1e-10);
    cfg.holonomy.budget = get_int(h, "holonomy", "budget", 10000);
    cfg.holonomy.pair_budget = get_int(h, "holonomy", "pair_budget", 20000);
    cfg.holonomy.delta = get_num(h, "holonomy", "delta", 0.0);
    cfg.holonomy.slope_min = get_num(h, "holonomy", "slope_min", 0.0);
    cfg.holonomy.slope_max = get_num(h, "holonomy", "slope_max", 0.0);
  }

  if (j.contains("output")) {
    const Json& o = j.at("output");
    check_keys(o, "output", {"directory", "formats"});
    cfg.output.directory = get_str(o, "output", "directory", "out");
    if (o.contains("formats")) {
      cfg.output.formats.clear();
      for (const auto& f : o.at("formats")) {
        if (!f.is_string()) bad("output.formats", "expected strings");
        std::string fmt = f.get<std::string>();
        if (fmt != "csv" && fmt != "json") bad("output.formats", "unknown format " + fmt);
        cfg.output.formats.push_back(fmt);
      }
    }
  }

  if (j.contains("expect_fail")) {
    for (const auto& id : j.at("expect_fail")) {
      if (!id.is_string()) bad("expect_fail", "expected check-id strings");
      cfg.expect_fail.insert(id.get<std::string>());
    }
  }

  // every referenced tolerance must be positive
  if (cfg.livsic.defect_tolerance <= 0) bad("livsic.defect_tolerance", "must be > 0");
  if (cfg.livsic.residual_tolerance <= 0)
    bad("livsic.residual_tolerance", "must be > 0");
  if (cfg.livsic.beta <= 0) bad("livsic.beta", "must be > 0");
  if (cfg.holonomy.tol <= 0) bad("holonomy.tol", "must be > 0");
  if (cfg.holonomy.theta <= 0) bad("holonomy.theta", "must be > 0");
  if (cfg.lyapnorm.epsilon < 0) bad("lyapnorm.epsilon", "must be >= 0");
  if (cfg.lyapnorm.block_bound_n <= 0) bad("lyapnorm.block_bound_N", "must be > 0");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kConfigError, "cannot open config file " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(ErrorCode::kConfigError, std::string("json parse error: ") + e.what());
  }
  return parse_config(j);
}

std::shared_ptr<const BaseSystem> make_system(const ExperimentConfig& cfg) {
  if (cfg.system.kind == "torus_automorphism")
    return std::make_shared<BaseSystem>(BaseSystem::torus_automorphism(
        cfg.system.matrix, cfg.system.leaf_radius, cfg.system.bracket_radius,
        cfg.system.enum_budget));
  return std::make_shared<BaseSystem>(
      BaseSystem::full_shift(cfg.system.alphabet, cfg.system.bracket_radius,
                             cfg.system.sample_window, cfg.system.enum_budget));
}

CocycleMap make_cocycle(const ExperimentConfig& cfg,
                        std::shared_ptr<const BaseSystem> sys) {
  const CocycleConfig& c = cfg.cocycle;
  CocycleMap out = [&]() {
    if (c.variant == "constant") return CocycleMap::constant(c.matrix, c.alpha);
    if (c.variant == "coboundary") {
      const TransferConfig& t = c.transfer;
      GroundTruthTransfer truth = [&]() {
        if (t.kind == "rotation_field")
          return GroundTruthTransfer::rotation_field(t.terms, c.alpha);
        if (t.kind == "rotation_lacunary")
          return GroundTruthTransfer::rotation_lacunary(
              t.levels, t.amplitude, c.alpha, t.base, t.phase_seed);
        return GroundTruthTransfer::cylinder(
            t.alphabet, t.depth,
            table_by_code(t.table, t.alphabet, t.depth, "cocycle.transfer.table"),
            c.alpha);
      }();
      return CocycleMap::coboundary(std::move(truth), std::move(sys));
    }
    if (c.variant == "locally_constant")
      return CocycleMap::locally_constant(
          c.alphabet, c.depth,
          table_by_code(c.table, c.alphabet, c.depth, "cocycle.table"), c.alpha);
    return CocycleMap::torus_smooth(c.constant_term, c.terms, c.alpha);
  }();
  out.set_condition_bound(c.condition_bound);
  return out;
}

}  // namespace cocyclelab
