#include "shellreg/experiment.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace shellreg {

namespace {

std::string cell_tag(double epsilon, double h) { return "eps" + format_number(epsilon) + "_h" + format_number(h); }

struct ViRun {
  TriMesh mesh;
  HalfSpaceObstacle obstacle;
  VISolution vi;
};

ViRun solve_vi(const ExperimentConfig& config, double epsilon, double target_h, double radius) {
  const SurfaceChart chart = SurfaceChart::parse(config.surface);
  ViRun run;
  run.mesh = make_disk_mesh(radius, target_h);
  const AssembledSystem sys =
      assemble(run.mesh, chart, config.material(epsilon), config.load(), AssemblyOptions{true, false});
  run.obstacle = obstacle_rows(run.mesh, chart, config.q);
  SolveOptions opts;
  opts.method = config.method;
  opts.tol = config.tol;
  run.vi = solve_obstacle(sys, run.obstacle, opts);
  const KktCertificate kkt = kkt_report(run.vi, sys, run.obstacle);
  if (!kkt.passes()) {
    std::ostringstream os;
    os << "obstacle solve at epsilon " << epsilon << ", mesh h " << target_h << " fails its optimality check"
       << " (slack " << kkt.min_slack << ", complementarity " << kkt.max_complementarity << ", stationarity "
       << kkt.stationarity << ")";
    throw Error(ErrorCode::SingularSystem, os.str());
  }
  return run;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::ostream& log_of(StageContext& ctx) {
  static std::ostringstream sink;
  return ctx.log ? *ctx.log : sink;
}

}  // namespace

std::string CertifyOutcome::to_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "kappa_min=" << ellipticity.kappa_min << "\n"
     << "elliptic=" << (ellipticity.is_elliptic ? "true" : "false") << "\n"
     << "density.min_theta_q=" << density.min_theta_q << "\n"
     << "density.min_a3_q=" << density.min_a3_q << "\n"
     << "density.holds=" << (density.holds ? "true" : "false") << "\n"
     << prolongation.to_text();
  os << "failures=";
  for (std::size_t i = 0; i < failures.size(); ++i) os << (i ? "," : "") << failures[i];
  os << "\n";
  return os.str();
}

CertifyOutcome certify(const ExperimentConfig& config) {
  config.validate();
  const SurfaceChart chart = SurfaceChart::parse(config.surface);
  const PlanarDomain inner{config.radius};
  const PlanarDomain outer{config.outer_radius};
  CertifyOutcome out;
  for (const Vec2& y : sample_closed_disk(inner.disk(), 101)) {
    if (!chart.defined_at(y)) {
      out.failures.push_back("chart_defined_on_domain");
      return out;
    }
  }
  out.ellipticity = check_ellipticity(chart, inner);
  if (!out.ellipticity.is_elliptic) out.failures.push_back("ellipticity");
  out.density = check_density_condition(chart, inner, config.q);
  if (!out.density.holds) out.failures.push_back("density_condition");
  try {
    out.prolongation = prolong(chart, inner, outer, config.q);
    if (!out.prolongation.holds_a) out.failures.push_back("prolongation_a");
    if (!out.prolongation.holds_b) out.failures.push_back("prolongation_b");
    if (!out.prolongation.holds_c) out.failures.push_back("prolongation_c");
    if (!out.prolongation.holds_d) out.failures.push_back("prolongation_d");
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ChartUndefinedOnOuter && e.code() != ErrorCode::DegenerateImmersion) throw;
    out.prolongation.inner = inner;
    out.prolongation.outer = outer;
    out.prolongation.q = config.q;
    out.failures.push_back(std::string("prolongation (") + e.what() + ")");
  }
  return out;
}

CellOutcome solve_cell(const ExperimentConfig& config, double epsilon, double target_h) {
  const SurfaceChart chart = SurfaceChart::parse(config.surface);
  const ShellMaterial material = config.material(epsilon);
  const LoadSpec load = config.load();
  CellOutcome c;
  c.epsilon = epsilon;
  c.target_h = target_h;
  c.mesh = make_disk_mesh(config.radius, target_h);
  const AssembledSystem sys = assemble(c.mesh, chart, material, load, AssemblyOptions{true, false});
  c.obstacle = obstacle_rows(c.mesh, chart, config.q);

  const Vector lin = solve_linear_free(sys);
  c.linear = MixedFEField{sys.dofs.expand(lin)};
  c.linear_energy = sys.energy(lin);

  SolveOptions opts;
  opts.method = config.method;
  opts.tol = config.tol;
  c.vi = solve_obstacle(sys, c.obstacle, opts);
  c.kkt = kkt_report(c.vi, sys, c.obstacle);

  const SeparatedSolution sep = solve_separated(c.mesh, chart, material, load);
  c.separated_gap = separated_l2_gap(c.mesh, c.linear, sep);
  c.trace_formula_residual = trace_formula_check(c.mesh, chart, material, load, c.linear).relative_residual;
  return c;
}

ScanSettings scan_settings(const ExperimentConfig& config, const Vec2& center, double h_mesh,
                           const std::string& label) {
  const Disk domain{Vec2::Zero(), config.radius};
  const Disk outer{Vec2::Zero(), config.outer_radius};
  const GapConstant gap = gap_constant(GapSets{Disk{config.scan.y0, config.scan.u1_radius},
                                               Disk{config.scan.y0, config.scan.u0_radius}, outer, domain});
  ScanSettings s;
  s.u1 = Disk{center, config.scan.u1_radius};
  s.field_domain = outer;
  s.shell = domain;
  s.gap_d = gap.d;
  s.h_mesh = h_mesh;
  s.bound_ratio = config.scan.bound_ratio;
  s.label = label;
  return s;
}

CutoffFunction scan_cutoff(const ExperimentConfig& config, const Vec2& center) {
  return CutoffFunction{center, config.scan.phi_inner, config.scan.phi_support};
}

ScanOutcome run_scan(const ExperimentConfig& config) {
  config.validate();
  const ScanConfig& sc = config.scan;
  const SurfaceChart chart = SurfaceChart::parse(config.surface);
  const Disk domain{Vec2::Zero(), config.radius};
  const Disk outer{Vec2::Zero(), config.outer_radius};
  ScanOutcome out;

  // Guards first so a bad h list fails before any solve.
  const TriMesh probe = make_disk_mesh(config.radius, sc.mesh_h);
  if (!config.load().h10_flag(probe)) {
    throw Error(ErrorCode::ConfigError, "the scan needs a load vanishing on the boundary circle");
  }
  for (double h : sc.h_list) {
    if (h < 2.0 * probe.h_mesh) {
      std::ostringstream os;
      os << "h = " << h << " is below 2 * h_mesh = " << 2.0 * probe.h_mesh << " (mesh h " << sc.mesh_h << ")";
      throw Error(ErrorCode::ScanTooCoarse, os.str());
    }
  }
  out.gap = gap_constant(GapSets{Disk{sc.y0, sc.u1_radius}, Disk{sc.y0, sc.u0_radius}, outer, domain});

  out.convexifier = build_convexifier(chart, config.q, sc.y0, sc.u0_radius);
  out.epsilon = epsilon_of_h(out.convexifier.convexified(chart), chart, config.q, Disk{sc.y0, sc.u1_radius}, outer,
                             sc.h_list);

  {
    const ViRun run = solve_vi(config, sc.epsilon, sc.mesh_h, config.radius);
    out.scan_h_mesh = run.mesh.h_mesh;
    const FieldEvaluator eval(run.mesh, run.vi.zeta.values);
    const FieldSampler zeta = zero_extension(eval);
    out.boundary = uniform_bound_scan(zeta, scan_cutoff(config, sc.y0), sc.h_list,
                                      scan_settings(config, sc.y0, run.mesh.h_mesh, "boundary"));
    out.interior = uniform_bound_scan(zeta, scan_cutoff(config, sc.interior_center), sc.h_list,
                                      scan_settings(config, sc.interior_center, run.mesh.h_mesh, "augint"));
    out.boundary.epsilon_of_h = out.epsilon.epsilon;
    out.interior.epsilon_of_h = out.epsilon.epsilon;
  }

  const double max_depth = 0.4 * config.radius;
  out.trace_ok = true;
  for (std::size_t k = 0; k < sc.trace_mesh_h_list.size(); ++k) {
    const ViRun run = solve_vi(config, sc.epsilon, sc.trace_mesh_h_list[k], config.radius);
    TraceRow row;
    row.level = static_cast<int>(k);
    row.h_mesh = run.mesh.h_mesh;
    row.max_trace = max_boundary_transverse(run.mesh, run.vi.zeta);
    row.layer_width = radial_profile(run.mesh, run.vi.zeta, sc.y0, run.mesh.h_mesh, max_depth).layer_width;
    if (k > 0) {
      const double prev = out.trace.back().max_trace;
      const double decay = row.max_trace > 0.0 ? prev / row.max_trace : (prev > 0.0 ? INFINITY : 1.0);
      out.trace_decay.push_back(decay);
      // both levels exactly zero means the trace already vanished
      if (!(prev == 0.0 && row.max_trace == 0.0) && !(decay >= sc.trace_decay_factor)) out.trace_ok = false;
    }
    out.trace.push_back(row);
  }

  out.layer_shrinks = true;
  for (double eps : sc.layer_epsilon_list) {
    const ViRun run = solve_vi(config, eps, sc.layer_mesh_h, config.radius);
    LayerRow row;
    row.epsilon = eps;
    row.h_mesh = run.mesh.h_mesh;
    row.max_trace = max_boundary_transverse(run.mesh, run.vi.zeta);
    row.profile = radial_profile(run.mesh, run.vi.zeta, sc.y0, run.mesh.h_mesh, max_depth);
    if (!out.layers.empty() && !(row.profile.layer_width < out.layers.back().profile.layer_width)) {
      out.layer_shrinks = false;
    }
    out.layers.push_back(row);
  }

  if (sc.solve_extended) {
    // Re-solve on the outer disk and compare with the zero extension of the
    // solution on the domain, at the nodes of the outer mesh.
    const double h = sc.trace_mesh_h_list.front();
    const ViRun inner = solve_vi(config, sc.epsilon, h, config.radius);
    const ViRun ext = solve_vi(config, sc.epsilon, h, config.outer_radius);
    const FieldEvaluator eval(inner.mesh, inner.vi.zeta.values);
    double diff = 0.0, norm = 0.0;
    for (int n = 0; n < ext.mesh.num_nodes(); ++n) {
      const Vec3 z = ext.vi.zeta.at_node(n);
      diff += (z - eval.value(ext.mesh.nodes[n])).squaredNorm();
      norm += z.squaredNorm();
    }
    out.extended_difference = norm > 0.0 ? std::sqrt(diff / norm) : std::sqrt(diff);
  }
  return out;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::IoError:
    case ErrorCode::ScanTooCoarse:
    case ErrorCode::RegionOverflow:
    case ErrorCode::NotCompactlyContained:
    case ErrorCode::EmptyIntersection:
      return 2;
    case ErrorCode::DegenerateImmersion:
    case ErrorCode::NotElliptic:
    case ErrorCode::ChartUndefinedOnOuter:
      return 3;
    case ErrorCode::MeshTooCoarse:
    case ErrorCode::ObstacleViolatedByRest:
    case ErrorCode::KornFailure:
    case ErrorCode::SingularSystem:
    case ErrorCode::InfeasibleStart:
    case ErrorCode::DbreveSingular:
      return 4;
    case ErrorCode::NotConcave:
    case ErrorCode::RhoTooLarge:
    case ErrorCode::SearchExhausted:
      return 5;
  }
  return 4;
}

int stage_certify(StageContext& ctx) {
  const Stopwatch sw;
  const CertifyOutcome c = certify(ctx.config);
  write_text_file(std::filesystem::path(ctx.config.out_dir) / "certificates.txt", c.to_text());
  ctx.manifest.stage_seconds.emplace_back("certify", sw.seconds());
  ctx.manifest.checks.emplace_back("certify", c.passes());
  auto& log = log_of(ctx);
  if (c.passes()) {
    log << "certify: all geometric conditions hold\n";
    return 0;
  }
  for (const auto& f : c.failures) log << "certify: FAILED " << f << "\n";
  return 3;
}

int stage_solve(StageContext& ctx) {
  auto& log = log_of(ctx);
  if (!ctx.force) {
    const CertifyOutcome c = certify(ctx.config);
    if (!c.passes()) {
      for (const auto& f : c.failures) log << "solve: certification failed: " << f << " (use --force to override)\n";
      return 3;
    }
  }
  const Stopwatch sw;
  const std::filesystem::path dir(ctx.config.out_dir);
  std::vector<CellOutcome> cells;
  bool all_pass = true;
  for (double eps : ctx.config.epsilon_list) {
    for (double h : ctx.config.mesh_h_list) {
      CellOutcome c;
      try {
        c = solve_cell(ctx.config, eps, h);
      } catch (const Error& e) {
        throw Error(e.code(), "cell " + cell_tag(eps, h) + ": " + e.what());
      }
      const std::string tag = cell_tag(eps, h);
      log << "solve " << tag << ": nodes " << c.mesh.num_nodes() << ", energy " << c.vi.energy << ", kkt "
          << (c.kkt.passes() ? "pass" : "FAIL") << "\n";
      all_pass = all_pass && c.kkt.passes();
      if (ctx.config.write_csv) {
        write_text_file(dir / ("vi_" + tag + ".csv"), solution_csv(c.mesh, c.vi.zeta, c.obstacle, c.vi.multipliers));
        write_text_file(dir / ("linear_" + tag + ".csv"), solution_csv(c.mesh, c.linear, c.obstacle, Vector()));
      }
      if (ctx.config.write_vtk) {
        write_text_file(dir / ("vi_" + tag + ".vtk"),
                        solution_vtk(c.mesh, c.vi.zeta, c.obstacle, c.vi.multipliers, "obstacle solution " + tag));
      }
      cells.push_back(std::move(c));
    }
  }
  write_text_file(dir / "cells.csv", cells_csv(cells));
  ctx.manifest.stage_seconds.emplace_back("solve", sw.seconds());
  ctx.manifest.checks.emplace_back("kkt", all_pass);
  return all_pass ? 0 : 4;
}

int stage_scan(StageContext& ctx) {
  const Stopwatch sw;
  const ScanOutcome s = run_scan(ctx.config);
  const std::filesystem::path dir(ctx.config.out_dir);
  write_text_file(dir / "scan.csv", scan_csv(s));
  write_text_file(dir / "trace.csv", trace_csv(s));
  write_text_file(dir / "layer.csv", layer_csv(s));
  write_text_file(dir / "convexifier.txt", s.convexifier.to_text());
  write_text_file(dir / "summary.txt", scan_summary(ctx.config, s));
  ctx.manifest.stage_seconds.emplace_back("scan", sw.seconds());
  ctx.manifest.checks.emplace_back("scan.boundary_bounded", s.boundary.bounded_verdict);
  ctx.manifest.checks.emplace_back("scan.augint_bounded", s.interior.bounded_verdict);
  ctx.manifest.checks.emplace_back("scan.trace_decay", s.trace_ok);
  auto& log = log_of(ctx);
  log << "scan: boundary ratio " << s.boundary.ratio << (s.boundary.bounded_verdict ? " bounded" : " NOT bounded")
      << "; augint ratio " << s.interior.ratio << (s.interior.bounded_verdict ? " bounded" : " NOT bounded")
      << "; trace decay " << (s.trace_ok ? "met" : "NOT met") << "\n";
  return s.passes() ? 0 : 5;
}

void write_manifest(const StageContext& ctx) {
  write_text_file(std::filesystem::path(ctx.config.out_dir) / "manifest.txt", ctx.manifest.to_text());
}

}  // namespace shellreg
