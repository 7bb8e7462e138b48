#include "nrflow/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nrflow/io.hpp"

namespace nrflow {

namespace {

using json = nlohmann::json;

// Reads keys from one JSON object and rejects any key that was not consumed.
class Block {
 public:
  Block(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    used_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + ": wrong type (" + std::string(it->type_name()) + ")");
    }
  }

  Block sub(const char* key) {
    used_.insert(key);
    static const json empty = json::object();
    auto it = j_.find(key);
    return Block(it == j_.end() ? empty : *it, where(key));
  }

  const json* raw(const char* key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError(where(it.key().c_str()) + ": unknown key");
    }
  }

  std::string where(const char* key = nullptr) const {
    std::string p = path_.empty() ? std::string("<root>") : path_;
    if (key) p = path_.empty() ? std::string(key) : path_ + "." + key;
    return p;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

std::pair<size_t, size_t> line_column(const std::string& text, size_t byte) {
  size_t line = 1, col = 1;
  for (size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col > 1 ? col - 1 : 1};
}

void read_model(Block b, ModelParams& m) {
  b.get("N", m.N);
  b.get("gamma", m.gamma);
  b.get("c_w", m.c_w);
  b.get("c_s", m.c_s);
  b.get("p_at", m.p_at);
  b.get("K", m.K);
  b.get("alpha", m.alpha);
  b.get("T0", m.T0);
  b.get("mu0", m.mu0);
  b.get("eps", m.eps);
  b.get("delta", m.delta);
  b.get("tau", m.tau);
  b.get("K1", m.K1);
  b.get("K2", m.K2);
  b.get("K3", m.K3);
  b.get("a", m.a);
  b.get("alpha_r", m.alpha_r);
  b.get("beta", m.beta);
  b.get("q", m.q);
  b.get("k_p", m.k_p);
  b.get("c_p", m.c_p);
  b.finish();
}

void read_closures(Block b, Closures& c) {
  std::string family = "default";
  b.get("family", family);
  if (family != "default") throw ConfigError(b.where("family") + ": only the \"default\" family is available");
  b.get("f_A", c.f_A);
  b.get("f_B", c.f_B);
  b.get("viscosity", c.viscosity);
  b.get("kappa1", c.kappa1);
  b.get("D", c.D);
  b.get("c0", c.c0);
  b.get("C1", c.C1);
  b.get("b_scale", c.b_scale);
  b.get("porosity", c.porosity);
  b.get("s0", c.s0);
  if (const json* bm = b.raw("b_matrix"); bm && !bm->is_null()) {
    std::vector<std::vector<double>> rows;
    try {
      rows = bm->get<std::vector<std::vector<double>>>();
    } catch (const json::exception&) {
      throw ConfigError(b.where("b_matrix") + ": expected an array of rows");
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd M(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (static_cast<Eigen::Index>(rows[static_cast<size_t>(i)].size()) != n) {
        throw ConfigError(b.where("b_matrix") + ": matrix must be square");
      }
      for (Eigen::Index j = 0; j < n; ++j) M(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
    }
    c.b_matrix = M;
  }
  b.finish();
}

void read_grid(Block b, GridConfig& g) {
  b.get("dim", g.dim);
  b.get("nx", g.nx);
  b.get("ny", g.ny);
  b.get("Lx", g.Lx);
  b.get("Ly", g.Ly);
  b.finish();
}

void read_scheme(Block b, SchemeConfig& s) {
  b.get("newton_tol", s.newton_tol);
  b.get("max_newton", s.max_newton);
  b.get("armijo", s.armijo);
  b.get("backtrack", s.backtrack);
  b.get("min_step", s.min_step);
  b.get("homotopy_steps", s.homotopy_steps);
  b.get("picard_max", s.picard_max);
  b.get("picard_relax", s.picard_relax);
  b.get("polish", s.polish);
  b.finish();
}

void read_initial(Block b, InitialConfig& in) {
  b.get("kind", in.kind);
  b.get("rho", in.rho);
  b.get("T", in.T);
  b.get("S", in.S);
  b.get("rho_amplitude", in.rho_amplitude);
  b.get("T_amplitude", in.T_amplitude);
  b.get("S_amplitude", in.S_amplitude);
  b.get("center", in.center);
  b.get("width", in.width);
  b.get("noise", in.noise);
  b.get("file", in.file);
  b.finish();
}

void read_output(Block b, OutputConfig& o) {
  b.get("directory", o.directory);
  b.get("cadence", o.cadence);
  b.get("formats", o.formats);
  b.get("diagnostics", o.diagnostics);
  b.finish();
}

void read_sweep(Block b, SweepConfig& s) {
  b.get("mode", s.mode);
  b.get("tau", s.tau);
  b.get("eps", s.eps);
  b.get("delta", s.delta);
  b.get("reference_tau", s.reference_tau);
  b.get("workers", s.workers);
  b.finish();
}

void read_run(Block b, RunConfig& c) {
  b.get("horizon", c.horizon);
  b.get("seed", c.seed);
  b.get("threads", c.threads);
  b.finish();
}

std::string failure_text(const HypothesisReport& rep) {
  std::string s;
  for (const auto& c : rep.checks) {
    if (c.pass) continue;
    if (!s.empty()) s += "; ";
    s += c.name + " violated (requires " + c.message + ", " + c.witness + ")";
  }
  return s;
}

void require(HypothesisReport& rep, const char* name, bool ok, double worst, const std::string& msg) {
  rep.checks.push_back({name, ok, worst, "", msg});
}

}  // namespace

Grid GridConfig::make() const {
  if (dim == 1) return Grid(nx, Lx);
  return Grid(nx, ny, Lx, Ly);
}

HypothesisReport validate_config(const RunConfig& cfg) {
  const ModelParams& m = cfg.model;
  if (m.N < 1 || m.N > kMaxSpecies) {
    throw ConfigError("model.N must lie in [1, " + std::to_string(kMaxSpecies) + "]");
  }
  HypothesisReport rep = validate_hypotheses(m, cfg.closures, cfg.seed);

  const GridConfig& g = cfg.grid;
  require(rep, "grid", (g.dim == 1 || g.dim == 2) && g.nx >= 2 && g.ny >= 1 && g.Lx > 0 && g.Ly > 0 &&
                           (g.dim == 2 ? g.ny >= 2 : g.ny == 1),
          g.nx, "dim in {1,2}, nx >= 2, ny = 1 in 1D and >= 2 in 2D, positive lengths");

  const InitialConfig& in = cfg.initial;
  const bool kind_ok = in.kind == "constant" || in.kind == "gaussian_bump" || in.kind == "file";
  bool init_ok = kind_ok && static_cast<int>(in.rho.size()) == m.N && in.T > 0 && in.S >= 0 && in.S <= 1 &&
                 in.width > 0 && in.noise >= 0 && in.noise < 1 && in.center.size() >= static_cast<size_t>(g.dim);
  if (in.kind == "gaussian_bump") init_ok = init_ok && static_cast<int>(in.rho_amplitude.size()) == m.N;
  if (in.kind == "file") init_ok = kind_ok && !in.file.empty();
  require(rep, "initial", init_ok, 0.0,
          "kind in {constant, gaussian_bump, file}, rho and rho_amplitude of length N, T > 0, S in [0,1]");

  const OutputConfig& o = cfg.output;
  bool fmt_ok = o.cadence >= 0;
  for (const auto& f : o.formats) fmt_ok = fmt_ok && (f == "csv" || f == "vtk");
  require(rep, "output", fmt_ok, o.cadence, "cadence >= 0, formats in {csv, vtk}");

  const SchemeConfig& s = cfg.scheme;
  require(rep, "solver", s.newton_tol > 0 && s.max_newton > 0 && s.backtrack > 0 && s.backtrack < 1 &&
                             s.min_step > 0 && s.armijo >= 0 && s.armijo < 1 && s.picard_relax > 0 &&
                             s.picard_relax <= 1 && s.polish >= 0 && !s.homotopy_steps.empty() &&
                             s.homotopy_steps.back() == 1.0,
          s.newton_tol, "positive tolerances, backtrack in (0,1), homotopy ladder ending at 1");

  const SweepConfig& w = cfg.sweep;
  bool sweep_ok = (w.mode == "cartesian" || w.mode == "nested") && w.reference_tau >= 0 && w.workers >= 0;
  for (double t : w.tau) sweep_ok = sweep_ok && t > 0;
  for (double e : w.eps) sweep_ok = sweep_ok && e >= 0;
  for (double d : w.delta) sweep_ok = sweep_ok && d >= 0;
  require(rep, "sweep", sweep_ok, 0.0, "mode in {cartesian, nested}, tau > 0, eps >= 0, delta >= 0");

  require(rep, "run", cfg.horizon >= 0 && cfg.threads >= 1, cfg.horizon, "horizon >= 0, threads >= 1");
  return rep;
}

RunConfig parse_config(const std::string& text, bool validate) {
  RunConfig cfg;
  const bool blank = std::all_of(text.begin(), text.end(), [](unsigned char ch) { return std::isspace(ch); });
  if (!blank) {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      const auto [line, col] = line_column(text, e.byte);
      std::string what = e.what();
      if (const auto k = what.find("column"); k != std::string::npos && what.find(": ", k) != std::string::npos) {
        what = what.substr(what.find(": ", k) + 2);
      }
      throw ConfigError("parse error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                        what);
    }
    if (!j.is_null()) {
      Block root(j, "");
      read_model(root.sub("model"), cfg.model);
      read_closures(root.sub("closures"), cfg.closures);
      read_grid(root.sub("grid"), cfg.grid);
      read_scheme(root.sub("scheme"), cfg.scheme);
      read_initial(root.sub("initial"), cfg.initial);
      read_output(root.sub("output"), cfg.output);
      read_sweep(root.sub("sweep"), cfg.sweep);
      read_run(root.sub("run"), cfg);
      root.finish();
    }
  }
  if (validate) {
    const HypothesisReport rep = validate_config(cfg);
    if (!rep.all_pass()) throw ConfigError("invalid configuration: " + failure_text(rep));
  }
  cfg.scheme.exec = cfg.threads > 1 ? Exec::Parallel : Exec::Serial;
  return cfg;
}

RunConfig load_config(const std::string& path, bool validate) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), validate);
}

std::string serialize_config(const RunConfig& cfg) {
  const ModelParams& m = cfg.model;
  const Closures& c = cfg.closures;
  json j;
  j["model"] = {{"N", m.N},         {"gamma", m.gamma}, {"c_w", m.c_w},     {"c_s", m.c_s},
                {"p_at", m.p_at},   {"K", m.K},         {"alpha", m.alpha}, {"T0", m.T0},
                {"mu0", m.mu0},     {"eps", m.eps},     {"delta", m.delta}, {"tau", m.tau},
                {"K1", m.K1},       {"K2", m.K2},       {"K3", m.K3},       {"a", m.a},
                {"alpha_r", m.alpha_r}, {"beta", m.beta}, {"q", m.q},       {"k_p", m.k_p},
                {"c_p", m.c_p}};
  json bm = nullptr;
  if (c.b_matrix) {
    bm = json::array();
    for (Eigen::Index i = 0; i < c.b_matrix->rows(); ++i) {
      std::vector<double> row(static_cast<size_t>(c.b_matrix->cols()));
      for (Eigen::Index k = 0; k < c.b_matrix->cols(); ++k) row[static_cast<size_t>(k)] = (*c.b_matrix)(i, k);
      bm.push_back(row);
    }
  }
  j["closures"] = {{"family", "default"}, {"f_A", c.f_A},         {"f_B", c.f_B},
                   {"viscosity", c.viscosity}, {"kappa1", c.kappa1}, {"D", c.D},
                   {"c0", c.c0},          {"C1", c.C1},           {"b_scale", c.b_scale},
                   {"b_matrix", bm},      {"porosity", c.porosity}, {"s0", c.s0}};
  const GridConfig& g = cfg.grid;
  j["grid"] = {{"dim", g.dim}, {"nx", g.nx}, {"ny", g.ny}, {"Lx", g.Lx}, {"Ly", g.Ly}};
  const SchemeConfig& s = cfg.scheme;
  j["scheme"] = {{"newton_tol", s.newton_tol}, {"max_newton", s.max_newton},
                 {"armijo", s.armijo},         {"backtrack", s.backtrack},
                 {"min_step", s.min_step},     {"homotopy_steps", s.homotopy_steps},
                 {"picard_max", s.picard_max}, {"picard_relax", s.picard_relax},
                 {"polish", s.polish}};
  const InitialConfig& in = cfg.initial;
  j["initial"] = {{"kind", in.kind},         {"rho", in.rho},
                  {"T", in.T},               {"S", in.S},
                  {"rho_amplitude", in.rho_amplitude}, {"T_amplitude", in.T_amplitude},
                  {"S_amplitude", in.S_amplitude},     {"center", in.center},
                  {"width", in.width},       {"noise", in.noise},
                  {"file", in.file}};
  const OutputConfig& o = cfg.output;
  j["output"] = {{"directory", o.directory}, {"cadence", o.cadence}, {"formats", o.formats},
                 {"diagnostics", o.diagnostics}};
  const SweepConfig& w = cfg.sweep;
  j["sweep"] = {{"mode", w.mode},   {"tau", w.tau}, {"eps", w.eps}, {"delta", w.delta},
                {"reference_tau", w.reference_tau}, {"workers", w.workers}};
  j["run"] = {{"horizon", cfg.horizon}, {"seed", cfg.seed}, {"threads", cfg.threads}};
  return j.dump(2) + "\n";
}

Problem make_problem(const RunConfig& cfg) {
  return Problem::make(cfg.model, cfg.closures, cfg.grid.make());
}

InitialFields make_initial_fields(const RunConfig& cfg, const Problem& pb) {
  const InitialConfig& in = cfg.initial;
  const int N = pb.N();
  const int nc = pb.num_cells();
  if (in.kind == "file") return initial_fields_from_table(read_fields_csv(in.file), nc, N);

  InitialFields f;
  const bool bump = in.kind == "gaussian_bump";
  for (int c = 0; c < nc; ++c) {
    const auto x = pb.grid.center(c);
    double r2 = 0.0;
    for (int d = 0; d < pb.grid.dim(); ++d) {
      const double dx = x[static_cast<size_t>(d)] - in.center[static_cast<size_t>(d)];
      r2 += dx * dx;
    }
    const double g = bump ? std::exp(-r2 / (2.0 * in.width * in.width)) : 0.0;
    for (int i = 0; i < N; ++i) {
      const size_t iu = static_cast<size_t>(i);
      f.rho.push_back(in.rho[iu] + (bump ? in.rho_amplitude[iu] * g : 0.0));
    }
    f.T.push_back(in.T + in.T_amplitude * g);
    f.S.push_back(std::clamp(in.S + in.S_amplitude * g, 0.0, 1.0));
  }
  if (in.noise > 0.0) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> u(-in.noise, in.noise);
    for (double& r : f.rho) r *= 1.0 + u(rng);
    for (double& T : f.T) T *= 1.0 + u(rng);
    for (double& S : f.S) S = std::clamp(S * (1.0 + u(rng)), 0.0, 1.0);
  }
  return f;
}

}  // namespace nrflow
