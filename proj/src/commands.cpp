#include "nrflow/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "nrflow/io.hpp"
#include "nrflow/scheme.hpp"

namespace nrflow {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string step_name(const char* prefix, long step, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%06ld.%s", prefix, step, ext);
  return buf;
}

json violation_json(const InvariantViolation& v) {
  return {{"step", v.step}, {"name", v.name}, {"value", v.value}, {"bound", v.bound}};
}

void write_failure(const std::string& dir, int code, const std::string& message,
                   const std::vector<InvariantViolation>& violations) {
  if (dir.empty()) return;
  json j;
  j["exit_code"] = code;
  j["status"] = code == kExitInvariant ? "invariant_violation" : code == kExitSolver ? "solver_failure" : "error";
  j["message"] = message;
  j["violations"] = json::array();
  for (const auto& v : violations) j["violations"].push_back(violation_json(v));
  std::ofstream(fs::path(dir) / "failure.json") << j.dump(2) << '\n';
}

std::string point_label(double tau, double eps, double delta) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "tau%.6g_eps%.6g_delta%.6g", tau, eps, delta);
  return buf;
}

SweepPoint make_point(double tau, double eps, double delta) {
  SweepPoint p;
  p.tau = tau;
  p.eps = eps;
  p.delta = delta;
  return p;
}

void fill_summary(SweepPoint& p, const RunOutcome& o) {
  p.exit_code = o.exit_code;
  p.message = o.message;
  p.steps = o.steps;
  p.newton_iterations = o.newton_iterations;
  p.final_state = o.final_state;
  p.min_production = INFINITY;
  for (size_t k = 0; k < o.records.size(); ++k) {
    const auto& r = o.records[k];
    if (k == 0) p.lyapunov_initial = r.lyapunov;
    p.lyapunov_final = r.lyapunov;
    if (k == 0) continue;
    p.max_energy_residual = std::max(p.max_energy_residual, std::abs(r.energy_residual));
    for (double m : r.mass_residual) p.max_mass_residual = std::max(p.max_mass_residual, std::abs(m));
    p.min_production = std::min(p.min_production, r.production_min);
    if (r.lyapunov > o.records[k - 1].lyapunov) ++p.lyapunov_increases;
  }
  if (o.records.size() < 2) p.min_production = 0.0;
}

void run_pool(size_t count, int workers, const std::function<void(size_t)>& job) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const size_t n = std::min(count, static_cast<size_t>(workers > 0 ? static_cast<unsigned>(workers) : hw));
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  for (size_t t = 0; t < n; ++t) {
    pool.emplace_back([&] {
      for (size_t k = next++; k < count; k = next++) job(k);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

double state_l2_distance(const Problem& pb, const EntropyState& a, const EntropyState& b) {
  const auto fa = compute_fields(pb, a);
  const auto fb = compute_fields(pb, b);
  double s = 0.0;
  for (size_t k = 0; k < fa.rho.size(); ++k) s += (fa.rho[k] - fb.rho[k]) * (fa.rho[k] - fb.rho[k]);
  for (size_t c = 0; c < fa.T.size(); ++c) {
    s += (fa.T[c] - fb.T[c]) * (fa.T[c] - fb.T[c]) + (a.S[c] - b.S[c]) * (a.S[c] - b.S[c]);
  }
  return std::sqrt(s * pb.grid.cell_volume());
}

InvariantTolerances run_tolerances(const RunConfig& cfg, const Problem& pb, const EntropyState& initial) {
  InvariantTolerances tol;
  tol.newton_tol = cfg.scheme.newton_tol;
  tol.check_floor = cfg.model.eps > 0.0;
  tol.check_lyapunov = is_isolated(pb) && cfg.model.delta == 0.0;
  tol.scale = std::max(1.0, std::abs(total_energy(pb, initial)));
  return tol;
}

RunOutcome simulate(const RunConfig& cfg, const std::string& out_dir) {
  RunOutcome out;
  const Problem pb = make_problem(cfg);
  const EntropyState init = initial_state(pb, make_initial_fields(cfg, pb));
  const InvariantTolerances tol = run_tolerances(cfg, pb, init);
  const long L = step_count(cfg.horizon, cfg.model.tau);
  const OutputConfig& oc = cfg.output;
  const bool files = !out_dir.empty();

  std::ofstream diag, steps;
  std::unique_ptr<DiagnosticsWriter> writer;
  if (files) {
    fs::create_directories(out_dir);
    std::ofstream(fs::path(out_dir) / "config.json") << serialize_config(cfg);
    if (oc.diagnostics) {
      diag.open(fs::path(out_dir) / "diagnostics.csv");
      writer = std::make_unique<DiagnosticsWriter>(diag, pb.N());
    }
    steps.open(fs::path(out_dir) / "steps.csv");
    steps << "step,newton_iterations,final_residual,homotopy_path_used,picard_used,wallclock\n";
  }

  auto dump = [&](long step, const EntropyState& st) {
    if (!files) return;
    const bool due = step == 0 || step == L || (oc.cadence > 0 && step % oc.cadence == 0);
    if (!due) return;
    for (const auto& f : oc.formats) {
      if (f == "csv") write_fields_csv((fs::path(out_dir) / step_name("fields", step, "csv")).string(), pb, st);
      if (f == "vtk") write_fields_vtk((fs::path(out_dir) / step_name("fields", step, "vtk")).string(), pb, st);
    }
  };

  auto observe = [&](const StepEvent& ev) {
    DiagnosticsRecord rec = make_record(pb, ev.step, ev.time, *ev.state, ev.previous);
    const auto v = check_invariants(pb, rec, out.records.empty() ? nullptr : &out.records.back(), tol);
    out.violations.insert(out.violations.end(), v.begin(), v.end());
    if (writer) writer->write(rec);
    if (ev.report) {
      out.newton_iterations += ev.report->newton_iterations;
      if (ev.report->homotopy_path_used || ev.report->picard_used) ++out.fallback_steps;
      if (files) {
        steps << ev.step << ',' << ev.report->newton_iterations << ',' << format_double(ev.report->final_residual)
              << ',' << ev.report->homotopy_path_used << ',' << ev.report->picard_used << ','
              << format_double(ev.report->wallclock) << '\n';
      }
    }
    out.records.push_back(std::move(rec));
    out.steps = ev.step;
    dump(ev.step, *ev.state);
  };

  try {
    out.final_state = run_simulation(pb, init, cfg.scheme, cfg.horizon, observe);
  } catch (const StepFailure& e) {
    out.exit_code = kExitSolver;
    out.message = e.what();
    write_failure(out_dir, out.exit_code, out.message, out.violations);
    return out;
  }
  if (!out.violations.empty()) {
    out.exit_code = kExitInvariant;
    out.message = std::to_string(out.violations.size()) + " invariant violation(s), first: " +
                  out.violations.front().name + " at step " + std::to_string(out.violations.front().step);
    write_failure(out_dir, out.exit_code, out.message, out.violations);
  }
  return out;
}

int cmd_run(const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
  RunOutcome o;
  try {
    o = simulate(cfg, out_dir);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    write_failure(out_dir, kExitConfig, e.what(), {});
    return kExitConfig;
  }
  if (o.exit_code != kExitOk) {
    log << "error: " << o.message << '\n';
    return o.exit_code;
  }
  const auto& last = o.records.back();
  log << "run: " << o.steps << " steps, " << o.newton_iterations << " Newton iterations, lyapunov "
      << format_double(last.lyapunov) << ", sat_min " << format_double(last.sat_min) << ", output in " << out_dir
      << '\n';
  return kExitOk;
}

std::vector<SweepPoint> run_sweep(const RunConfig& cfg, const std::string& out_dir) {
  const SweepConfig& sw = cfg.sweep;
  auto or_default = [](std::vector<double> v, double d) {
    if (v.empty()) v.push_back(d);
    return v;
  };
  std::vector<double> taus = or_default(sw.tau, cfg.model.tau);
  std::vector<double> epss = or_default(sw.eps, cfg.model.eps);
  std::vector<double> deltas = or_default(sw.delta, cfg.model.delta);

  std::vector<SweepPoint> points;
  if (sw.mode == "nested") {
    // Limit order: delta innermost, then tau, then eps, each ladder decreasing.
    for (auto* v : {&taus, &epss, &deltas}) std::sort(v->begin(), v->end(), std::greater<>());
    for (double e : epss)
      for (double t : taus)
        for (double d : deltas) points.push_back(make_point(t, e, d));
  } else {
    for (double t : taus)
      for (double e : epss)
        for (double d : deltas) points.push_back(make_point(t, e, d));
  }

  std::vector<SweepPoint> refs;
  if (sw.reference_tau > 0.0) {
    for (double e : epss)
      for (double d : deltas) refs.push_back(make_point(sw.reference_tau, e, d));
  }

  std::vector<SweepPoint*> jobs;
  for (auto& p : refs) jobs.push_back(&p);
  for (auto& p : points) jobs.push_back(&p);
  for (size_t k = 0; k < jobs.size() && !out_dir.empty(); ++k) {
    const bool ref = k < refs.size();
    jobs[k]->directory = (fs::path(out_dir) / ((ref ? "reference_" : "point_") +
                                               point_label(jobs[k]->tau, jobs[k]->eps, jobs[k]->delta)))
                             .string();
  }

  run_pool(jobs.size(), sw.workers, [&](size_t k) {
    SweepPoint& p = *jobs[k];
    RunConfig pc = cfg;
    pc.model.tau = p.tau;
    pc.model.eps = p.eps;
    pc.model.delta = p.delta;
    pc.sweep = SweepConfig{};
    const HypothesisReport rep = validate_config(pc);
    if (!rep.all_pass()) {
      p.exit_code = kExitConfig;
      for (const auto& f : rep.failures()) p.message += (p.message.empty() ? "" : ", ") + f;
      p.message = "invalid point: " + p.message;
      return;
    }
    try {
      fill_summary(p, simulate(pc, p.directory));
    } catch (const std::exception& e) {
      p.exit_code = kExitConfig;
      p.message = e.what();
    }
  });

  if (!refs.empty()) {
    const Problem pb = make_problem(cfg);
    for (auto& p : points) {
      for (const auto& r : refs) {
        if (r.eps != p.eps || r.delta != p.delta) continue;
        if (p.exit_code == kExitOk && r.exit_code == kExitOk) p.error_l2 = state_l2_distance(pb, p.final_state, r.final_state);
      }
    }
    for (auto& p : points) {
      const SweepPoint* coarser = nullptr;
      for (const auto& q : points) {
        if (q.eps != p.eps || q.delta != p.delta || !(q.tau > p.tau)) continue;
        if (!coarser || q.tau < coarser->tau) coarser = &q;
      }
      if (coarser && p.error_l2 > 0 && coarser->error_l2 > 0) {
        p.order_pairwise = std::log(coarser->error_l2 / p.error_l2) / std::log(coarser->tau / p.tau);
      }
    }
  }
  return points;
}

double fitted_order(const std::vector<SweepPoint>& points, size_t k) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& q : points) {
    if (q.eps != points[k].eps || q.delta != points[k].delta || !(q.error_l2 > 0)) continue;
    const double x = std::log(q.tau), y = std::log(q.error_l2);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return NAN;
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

int cmd_sweep(const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
  fs::create_directories(out_dir);
  const auto points = run_sweep(cfg, out_dir);
  const bool with_ref = cfg.sweep.reference_tau > 0.0;

  std::ofstream csv(fs::path(out_dir) / "sweep_summary.csv");
  csv << "tau,eps,delta,exit_code,steps,max_energy_residual,max_mass_residual,min_production,lyapunov_initial,"
         "lyapunov_final,lyapunov_increases,newton_iterations,error_l2,order_pairwise,order_fitted,directory\n";
  log << std::left << std::setw(12) << "tau" << std::setw(10) << "eps" << std::setw(10) << "delta" << std::setw(6)
      << "exit" << std::setw(13) << "max|dE|" << std::setw(13) << "max|dM|" << std::setw(15) << "lyapunov_end"
      << std::setw(6) << "incr";
  if (with_ref) log << std::setw(13) << "L2 error" << std::setw(9) << "order" << "fitted";
  log << '\n';

  int code = kExitOk;
  json failures = json::array();
  for (size_t k = 0; k < points.size(); ++k) {
    const auto& p = points[k];
    const double fit = with_ref ? fitted_order(points, k) : NAN;
    csv << format_double(p.tau) << ',' << format_double(p.eps) << ',' << format_double(p.delta) << ','
        << p.exit_code << ',' << p.steps << ',' << format_double(p.max_energy_residual) << ','
        << format_double(p.max_mass_residual) << ',' << format_double(p.min_production) << ','
        << format_double(p.lyapunov_initial) << ',' << format_double(p.lyapunov_final) << ','
        << p.lyapunov_increases << ',' << p.newton_iterations << ',' << format_double(p.error_l2) << ','
        << format_double(p.order_pairwise) << ',' << format_double(fit) << ',' << p.directory << '\n';
    char line[256];
    std::snprintf(line, sizeof line, "%-12.6g%-10.4g%-10.4g%-6d%-13.3e%-13.3e%-15.8g%-6ld", p.tau, p.eps, p.delta,
                  p.exit_code, p.max_energy_residual, p.max_mass_residual, p.lyapunov_final, p.lyapunov_increases);
    log << line;
    if (with_ref) {
      std::snprintf(line, sizeof line, "%-13.4e%-9.3f%.3f", p.error_l2, p.order_pairwise, fit);
      log << line;
    }
    log << '\n';
    if (p.exit_code != kExitOk) {
      code = std::max(code, p.exit_code);
      failures.push_back({{"tau", p.tau}, {"eps", p.eps}, {"delta", p.delta}, {"exit_code", p.exit_code},
                          {"message", p.message}, {"directory", p.directory}});
    }
  }
  if (code != kExitOk) {
    std::ofstream(fs::path(out_dir) / "failure.json") << json{{"exit_code", code}, {"points", failures}}.dump(2)
                                                      << '\n';
    log << "sweep: " << failures.size() << " point(s) failed, see failure.json\n";
  }
  return code;
}

int cmd_validate(const RunConfig& cfg, std::ostream& out) {
  HypothesisReport rep;
  try {
    rep = validate_config(cfg);
  } catch (const ConfigError& e) {
    out << json{{"all_pass", false}, {"error", e.what()}}.dump(2) << '\n';
    return kExitConfig;
  }
  json checks = json::array();
  for (const auto& c : rep.checks) {
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"worst", c.worst}, {"witness", c.witness},
                      {"condition", c.message}});
  }
  out << json{{"all_pass", rep.all_pass()}, {"failures", rep.failures()}, {"checks", checks}}.dump(2) << '\n';
  return rep.all_pass() ? kExitOk : kExitConfig;
}

int cmd_diagnose(const std::string& run_dir, std::ostream& log) {
  RunConfig cfg;
  try {
    cfg = load_config((fs::path(run_dir) / "config.json").string());
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  const Problem pb = make_problem(cfg);

  std::map<long, fs::path> dumps;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    const std::string name = entry.path().filename().string();
    long step = 0;
    if (std::sscanf(name.c_str(), "fields_%ld.csv", &step) == 1 && entry.path().extension() == ".csv") {
      dumps[step] = entry.path();
    }
  }
  if (dumps.empty()) {
    log << "error: no field dumps in " << run_dir << '\n';
    return kExitConfig;
  }

  std::ofstream csv(fs::path(run_dir) / "diagnostics_recomputed.csv");
  DiagnosticsWriter writer(csv, pb.N());
  std::vector<InvariantViolation> violations;
  InvariantTolerances tol;
  std::optional<EntropyState> prev;
  std::optional<DiagnosticsRecord> prev_rec;
  long prev_step = -2;
  for (const auto& [step, path] : dumps) {
    const EntropyState st = state_from_table(read_fields_csv(path.string()));
    if (!prev) tol = run_tolerances(cfg, pb, st);
    const bool consecutive = prev && step == prev_step + 1;
    const auto rec = make_record(pb, step, step * cfg.model.tau, st, consecutive ? &*prev : nullptr);
    writer.write(rec);
    InvariantTolerances t = tol;
    t.check_lyapunov = tol.check_lyapunov && prev_rec.has_value();
    // Field dumps carry 17 digits, not the solver state, so budgets get a looser floor.
    t.newton_tol = std::max(tol.newton_tol, 1e-12);
    const auto v = check_invariants(pb, rec, prev_rec ? &*prev_rec : nullptr, t);
    violations.insert(violations.end(), v.begin(), v.end());
    prev = st;
    prev_rec = rec;
    prev_step = step;
  }
  log << "diagnose: " << dumps.size() << " dump(s), " << violations.size() << " violation(s)\n";
  if (!violations.empty()) {
    write_failure(run_dir, kExitInvariant, "invariant violation in recomputed diagnostics", violations);
    return kExitInvariant;
  }
  return kExitOk;
}

}  // namespace nrflow
