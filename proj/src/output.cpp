#include "shellreg/experiment.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace shellreg {

std::string format_number(double v) {
  if (v == 0.0) return "0";  // also folds -0
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::IoError, "sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

namespace {

// Multiplier and slack per node; nodes without a row get 0 and NaN-free defaults.
struct NodeContact {
  std::vector<double> lambda, gap;
  std::vector<int> active;
};

NodeContact node_contact(const TriMesh& mesh, const MixedFEField& field, const HalfSpaceObstacle& obstacle,
                         const Vector& multipliers) {
  NodeContact c;
  c.lambda.assign(mesh.num_nodes(), 0.0);
  c.gap.assign(mesh.num_nodes(), 0.0);
  c.active.assign(mesh.num_nodes(), 0);
  const Vector slack = obstacle.slack(field.values);
  for (std::size_t k = 0; k < obstacle.rows.size(); ++k) {
    const int n = obstacle.rows[k].node;
    c.gap[n] = slack[k];
    if (multipliers.size() > static_cast<Eigen::Index>(k)) c.lambda[n] = multipliers[k];
    c.active[n] = c.lambda[n] > 0.0 ? 1 : 0;
  }
  return c;
}

}  // namespace

std::string solution_csv(const TriMesh& mesh, const MixedFEField& field, const HalfSpaceObstacle& obstacle,
                         const Vector& multipliers) {
  const NodeContact c = node_contact(mesh, field, obstacle, multipliers);
  std::ostringstream os;
  os << "node_id,y1,y2,zeta1,zeta2,zeta3,lambda,active,gap\n";
  for (int n = 0; n < mesh.num_nodes(); ++n) {
    os << n << ',' << format_number(mesh.nodes[n].x()) << ',' << format_number(mesh.nodes[n].y()) << ','
       << format_number(field.eta(n, 0)) << ',' << format_number(field.eta(n, 1)) << ','
       << format_number(field.eta(n, 2)) << ',' << format_number(c.lambda[n]) << ',' << c.active[n] << ','
       << format_number(c.gap[n]) << '\n';
  }
  return os.str();
}

std::string solution_vtk(const TriMesh& mesh, const MixedFEField& field, const HalfSpaceObstacle& obstacle,
                         const Vector& multipliers, const std::string& title) {
  const NodeContact c = node_contact(mesh, field, obstacle, multipliers);
  std::ostringstream os;
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << mesh.num_nodes() << " double\n";
  for (const Vec2& p : mesh.nodes) os << format_number(p.x()) << ' ' << format_number(p.y()) << " 0\n";
  os << "CELLS " << mesh.num_triangles() << ' ' << 4 * mesh.num_triangles() << '\n';
  for (const auto& t : mesh.triangles) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  os << "CELL_TYPES " << mesh.num_triangles() << '\n';
  for (int t = 0; t < mesh.num_triangles(); ++t) os << "5\n";
  os << "POINT_DATA " << mesh.num_nodes() << "\nVECTORS zeta double\n";
  for (int n = 0; n < mesh.num_nodes(); ++n) {
    os << format_number(field.eta(n, 0)) << ' ' << format_number(field.eta(n, 1)) << ' '
       << format_number(field.eta(n, 2)) << '\n';
  }
  os << "SCALARS lambda double 1\nLOOKUP_TABLE default\n";
  for (double v : c.lambda) os << format_number(v) << '\n';
  os << "SCALARS gap double 1\nLOOKUP_TABLE default\n";
  for (double v : c.gap) os << format_number(v) << '\n';
  return os.str();
}

std::string cells_csv(const std::vector<CellOutcome>& cells) {
  std::ostringstream os;
  os << "epsilon,target_h,h_mesh,nodes,energy_linear,energy_vi,iterations,active_rows,min_slack,"
        "max_complementarity,stationarity,kkt_pass,separated_gap,trace_formula_residual\n";
  for (const CellOutcome& c : cells) {
    os << format_number(c.epsilon) << ',' << format_number(c.target_h) << ',' << format_number(c.mesh.h_mesh) << ','
       << c.mesh.num_nodes() << ',' << format_number(c.linear_energy) << ',' << format_number(c.vi.energy) << ','
       << c.vi.iterations << ',' << c.vi.active_rows.size() << ',' << format_number(c.kkt.min_slack) << ','
       << format_number(c.kkt.max_complementarity) << ',' << format_number(c.kkt.stationarity) << ','
       << (c.kkt.passes() ? "true" : "false") << ',' << format_number(c.separated_gap) << ','
       << format_number(c.trace_formula_residual) << '\n';
  }
  return os.str();
}

std::string scan_csv(const ScanOutcome& scan) {
  std::ostringstream os;
  os << "scan_id,rho,h,norm_h1h1l2,epsilon_of_h,verdict\n";
  for (const QuotientScanReport* r : {&scan.boundary, &scan.interior}) {
    for (int rho = 0; rho < 2; ++rho) {
      for (std::size_t k = 0; k < r->h_values.size(); ++k) {
        const double eps = k < r->epsilon_of_h.size() ? r->epsilon_of_h[k] : 0.0;
        os << r->label << ',' << rho + 1 << ',' << format_number(r->h_values[k]) << ','
           << format_number(r->norms[rho][k]) << ',' << format_number(eps) << ','
           << (r->bounded_verdict ? "bounded" : "unbounded") << '\n';
      }
    }
  }
  return os.str();
}

std::string trace_csv(const ScanOutcome& scan) {
  std::ostringstream os;
  os << "level,h_mesh,max_trace_zeta3,layer_width\n";
  for (const TraceRow& t : scan.trace) {
    os << t.level << ',' << format_number(t.h_mesh) << ',' << format_number(t.max_trace) << ','
       << format_number(t.layer_width) << '\n';
  }
  return os.str();
}

std::string layer_csv(const ScanOutcome& scan) {
  std::ostringstream os;
  os << "epsilon,h_mesh,depth,abs_zeta3\n";
  for (const LayerRow& l : scan.layers) {
    for (std::size_t k = 0; k < l.profile.depth.size(); ++k) {
      os << format_number(l.epsilon) << ',' << format_number(l.h_mesh) << ',' << format_number(l.profile.depth[k])
         << ',' << format_number(l.profile.value[k]) << '\n';
    }
  }
  return os.str();
}

std::string scan_summary(const ExperimentConfig& config, const ScanOutcome& scan) {
  std::ostringstream os;
  os.precision(6);
  auto verdict_block = [&](const QuotientScanReport& r, const std::string& heading) {
    os << heading << "\n";
    os << "  norms of D_{rho h}(phi zeta) over the scan disk, h = ";
    for (std::size_t k = 0; k < r.h_values.size(); ++k) os << (k ? ", " : "") << r.h_values[k];
    os << "\n";
    for (int rho = 0; rho < 2; ++rho) {
      os << "    rho=" << rho + 1 << ":";
      for (double v : r.norms[rho]) os << ' ' << v;
      os << "\n";
    }
    os << "  max/min ratio " << r.ratio << " against bound " << r.bound_ratio << ": "
       << (r.bounded_verdict ? "BOUNDED" : "NOT BOUNDED") << "\n\n";
  };
  os << "Regularity scan\n===============\n\n";
  os << "surface " << config.surface << ", epsilon " << config.scan.epsilon << ", scan mesh h " << scan.scan_h_mesh
     << ", boundary point (" << config.scan.y0.x() << ", " << config.scan.y0.y() << ")\n";
  os << "gap constant d = " << scan.gap.d << "; convexifier r = " << scan.convexifier.r << ", B = " << scan.convexifier.B
     << ", B0 = " << scan.convexifier.B0 << " on radius " << scan.convexifier.radius << "\n";
  os << "epsilon(h):";
  for (std::size_t k = 0; k < scan.epsilon.h.size(); ++k) os << " " << scan.epsilon.h[k] << "->" << scan.epsilon.epsilon[k];
  os << "\n\n";
  verdict_block(scan.boundary, "Boundary scan (zero extension across the boundary)");
  verdict_block(scan.interior, "Interior control scan [" + scan.interior.label + "]");
  os << "Boundary trace of zeta3\n";
  for (std::size_t k = 0; k < scan.trace.size(); ++k) {
    os << "  level " << scan.trace[k].level << " h_mesh " << scan.trace[k].h_mesh << ": max |zeta3| on boundary "
       << scan.trace[k].max_trace;
    if (k > 0) os << " (decay x" << scan.trace_decay[k - 1] << ")";
    os << "\n";
  }
  os << "  required decay per refinement >= " << config.scan.trace_decay_factor << ": "
     << (scan.trace_ok ? "MET" : "NOT MET") << "\n\n";
  os << "Layer width by epsilon (mesh h " << config.scan.layer_mesh_h << ")\n";
  for (const LayerRow& l : scan.layers) {
    os << "  epsilon " << l.epsilon << ": width " << l.profile.layer_width << ", plateau " << l.profile.plateau
       << ", boundary value " << l.profile.value.front() << "\n";
  }
  os << "  shrinks with epsilon: " << (scan.layer_shrinks ? "yes" : "no") << "\n";
  if (scan.extended_difference) {
    os << "\nExtended-domain cross-check: relative difference to the zero extension " << *scan.extended_difference
       << "\n";
  }
  os << "\nOverall: " << (scan.passes() ? "PASS" : "FAIL") << "\n";
  return os.str();
}

std::string RunManifest::to_text() const {
  std::ostringstream os;
  os << "config_sha256=" << config_hash << "\n";
  os << "version=" << version << "\n";
  for (const auto& [stage, seconds] : stage_seconds) os << "seconds." << stage << "=" << seconds << "\n";
  for (const auto& [check, ok] : checks) os << "check." << check << "=" << (ok ? "pass" : "fail") << "\n";
  return os.str();
}

}  // namespace shellreg
