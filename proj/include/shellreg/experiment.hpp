#pragma once

#include "shellreg/obstacle_solver.hpp"
#include "shellreg/regularity_lab.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace shellreg {

struct ScanConfig {
  Vec2 y0{1.0, 0.0};
  double u1_radius = 0.14;   // integration disk around y0
  double u0_radius = 0.32;   // convexifier disk around y0
  double phi_inner = 0.05;
  double phi_support = 0.12;
  std::vector<double> h_list{0.08, 0.04, 0.02, 0.01};
  double mesh_h = 0.005;
  double epsilon = 0.01;
  double bound_ratio = 2.0;
  Vec2 interior_center{0.0, 0.0};
  std::vector<double> trace_mesh_h_list{0.1, 0.05, 0.025};
  std::vector<double> layer_epsilon_list{0.1, 0.05, 0.025};
  double layer_mesh_h = 0.025;
  double trace_decay_factor = 1.5;
  bool solve_extended = false;
};

struct ExperimentConfig {
  std::string surface = "sphere_r2";
  double radius = 1.0;
  double outer_radius = 1.5;
  Vec3 q{0.0, 0.0, 1.0};
  double lambda = 1.0;
  double mu = 1.0;
  std::vector<double> epsilon_list{0.01};
  std::vector<double> mesh_h_list{0.1, 0.05, 0.025};
  std::vector<Bump> bumps{Bump{Vec2::Zero(), 0.5, -1.0, 3}};
  ScanConfig scan;
  SolverMethod method = SolverMethod::active_set;
  double tol = 1e-10;
  std::string out_dir = "out";
  bool write_csv = true;
  bool write_vtk = true;

  /// Throws ConfigError naming the offending key.
  void validate() const;
  LoadSpec load() const;
  ShellMaterial material(double epsilon) const { return {lambda, mu, epsilon}; }
};

/// key = value lines under [section] headers; '#' starts a comment.  Errors
/// carry the line number.  Unknown keys are rejected.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical text; parse(serialize(c)) reproduces c exactly.
std::string serialize_config(const ExperimentConfig& config);

std::vector<double> parse_number_list(std::string_view text);
Vec3 parse_vec3(std::string_view text);

// ---------------------------------------------------------------- stages

struct CertifyOutcome {
  EllipticityReport ellipticity;
  DensityConditionReport density;
  ProlongationCertificate prolongation;
  std::vector<std::string> failures;  // names of the failing properties

  bool passes() const { return failures.empty(); }
  std::string to_text() const;
};

CertifyOutcome certify(const ExperimentConfig& config);

struct CellOutcome {
  double epsilon = 0.0;
  double target_h = 0.0;
  TriMesh mesh;
  HalfSpaceObstacle obstacle;
  MixedFEField linear;
  double linear_energy = 0.0;
  VISolution vi;
  KktCertificate kkt;
  double separated_gap = 0.0;
  double trace_formula_residual = 0.0;
};

/// Linear, separated and obstacle solves on one (epsilon, mesh) cell.
CellOutcome solve_cell(const ExperimentConfig& config, double epsilon, double target_h);

struct TraceRow {
  int level = 0;
  double h_mesh = 0.0;
  double max_trace = 0.0;
  double layer_width = 0.0;
};

struct LayerRow {
  double epsilon = 0.0;
  double h_mesh = 0.0;
  double max_trace = 0.0;
  RadialProfile profile;
};

struct ScanOutcome {
  GapConstant gap;
  Convexifier convexifier;
  EpsilonReport epsilon;
  double scan_h_mesh = 0.0;
  QuotientScanReport boundary;
  QuotientScanReport interior;
  std::vector<TraceRow> trace;
  std::vector<double> trace_decay;  // ratio of consecutive levels
  bool trace_ok = false;
  std::vector<LayerRow> layers;
  bool layer_shrinks = false;
  std::optional<double> extended_difference;

  bool passes() const { return boundary.bounded_verdict && interior.bounded_verdict && trace_ok; }
};

/// Scan geometry derived from the config: u1, the field domain and the gap sets.
ScanSettings scan_settings(const ExperimentConfig& config, const Vec2& center, double h_mesh, const std::string& label);
CutoffFunction scan_cutoff(const ExperimentConfig& config, const Vec2& center);

ScanOutcome run_scan(const ExperimentConfig& config);

// ---------------------------------------------------------------- output

std::string format_number(double v);
std::string sha256_hex(std::string_view data);
void write_text_file(const std::filesystem::path& path, const std::string& text);

std::string solution_csv(const TriMesh& mesh, const MixedFEField& field, const HalfSpaceObstacle& obstacle,
                         const Vector& multipliers);
std::string solution_vtk(const TriMesh& mesh, const MixedFEField& field, const HalfSpaceObstacle& obstacle,
                         const Vector& multipliers, const std::string& title);
std::string cells_csv(const std::vector<CellOutcome>& cells);
std::string scan_csv(const ScanOutcome& scan);
std::string trace_csv(const ScanOutcome& scan);
std::string layer_csv(const ScanOutcome& scan);
std::string scan_summary(const ExperimentConfig& config, const ScanOutcome& scan);

/// Config hash, version, stage timings and checks; the only file holding wall-clock data.
struct RunManifest {
  std::string config_hash;
  std::string version;
  std::vector<std::pair<std::string, double>> stage_seconds;
  std::vector<std::pair<std::string, bool>> checks;

  std::string to_text() const;
};

/// Stage drivers writing into config.out_dir.  They return CLI exit codes:
/// 0 pass, 3 certification failure, 4 solver failure, 5 scan verdict failure.
struct StageContext {
  ExperimentConfig config;
  bool force = false;
  std::ostream* log = nullptr;
  RunManifest manifest;
};

/// CLI exit code of a library error: 2 configuration, 3 certification, 4 solver, 5 scan.
int exit_code_for(ErrorCode code);

int stage_certify(StageContext& ctx);
int stage_solve(StageContext& ctx);
int stage_scan(StageContext& ctx);
void write_manifest(const StageContext& ctx);

}  // namespace shellreg
