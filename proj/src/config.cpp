#include "shellreg/experiment.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

namespace shellreg {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(std::string_view text) {
  text = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty() || !std::isfinite(v)) {
    throw Error(ErrorCode::ConfigError, "'" + std::string(text) + "' is not a number");
  }
  return v;
}

bool parse_bool(std::string_view text) {
  text = trim(text);
  if (text == "true") return true;
  if (text == "false") return false;
  throw Error(ErrorCode::ConfigError, "'" + std::string(text) + "' is not true or false");
}

Vec2 parse_vec2(std::string_view text) {
  const auto v = parse_number_list(text);
  if (v.size() != 2) throw Error(ErrorCode::ConfigError, "expected two comma-separated numbers");
  return {v[0], v[1]};
}

std::vector<Bump> parse_bumps(std::string_view text) {
  std::vector<Bump> out;
  if (trim(text) == "none") return out;
  for (std::string_view item : split(text, ';')) {
    const auto v = parse_number_list(item);
    if (v.size() != 5) {
      throw Error(ErrorCode::ConfigError, "a bump is 'center1,center2,radius,height,component'");
    }
    Bump b{Vec2(v[0], v[1]), v[2], v[3], static_cast<int>(v[4])};
    if (static_cast<double>(b.component) != v[4]) throw Error(ErrorCode::ConfigError, "bump component must be 1, 2 or 3");
    out.push_back(b);
  }
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_number(v[i]);
  return s;
}

std::string vec(const Vec2& v) { return format_number(v.x()) + "," + format_number(v.y()); }
std::string vec(const Vec3& v) { return format_number(v.x()) + "," + format_number(v.y()) + "," + format_number(v.z()); }

struct KeyHandler {
  std::function<void(ExperimentConfig&, std::string_view)> set;
};

const std::map<std::string, KeyHandler>& handlers() {
  static const std::map<std::string, KeyHandler> table = {
      {"surface.chart", {[](auto& c, auto v) { c.surface = std::string(trim(v)); }}},
      {"surface.radius", {[](auto& c, auto v) { c.radius = parse_number(v); }}},
      {"surface.outer_radius", {[](auto& c, auto v) { c.outer_radius = parse_number(v); }}},
      {"surface.q", {[](auto& c, auto v) { c.q = parse_vec3(v); }}},
      {"material.lambda", {[](auto& c, auto v) { c.lambda = parse_number(v); }}},
      {"material.mu", {[](auto& c, auto v) { c.mu = parse_number(v); }}},
      {"solve.epsilon_list", {[](auto& c, auto v) { c.epsilon_list = parse_number_list(v); }}},
      {"solve.mesh_h_list", {[](auto& c, auto v) { c.mesh_h_list = parse_number_list(v); }}},
      {"solve.method",
       {[](auto& c, auto v) {
         try {
           c.method = parse_method(trim(v));
         } catch (const Error& e) {
           throw Error(ErrorCode::ConfigError, e.what());
         }
       }}},
      {"solve.tol", {[](auto& c, auto v) { c.tol = parse_number(v); }}},
      {"load.bumps", {[](auto& c, auto v) { c.bumps = parse_bumps(v); }}},
      {"scan.y0", {[](auto& c, auto v) { c.scan.y0 = parse_vec2(v); }}},
      {"scan.u1_radius", {[](auto& c, auto v) { c.scan.u1_radius = parse_number(v); }}},
      {"scan.u0_radius", {[](auto& c, auto v) { c.scan.u0_radius = parse_number(v); }}},
      {"scan.phi_inner", {[](auto& c, auto v) { c.scan.phi_inner = parse_number(v); }}},
      {"scan.phi_support", {[](auto& c, auto v) { c.scan.phi_support = parse_number(v); }}},
      {"scan.h_list", {[](auto& c, auto v) { c.scan.h_list = parse_number_list(v); }}},
      {"scan.mesh_h", {[](auto& c, auto v) { c.scan.mesh_h = parse_number(v); }}},
      {"scan.epsilon", {[](auto& c, auto v) { c.scan.epsilon = parse_number(v); }}},
      {"scan.bound_ratio", {[](auto& c, auto v) { c.scan.bound_ratio = parse_number(v); }}},
      {"scan.interior_center", {[](auto& c, auto v) { c.scan.interior_center = parse_vec2(v); }}},
      {"scan.trace_mesh_h_list", {[](auto& c, auto v) { c.scan.trace_mesh_h_list = parse_number_list(v); }}},
      {"scan.layer_epsilon_list", {[](auto& c, auto v) { c.scan.layer_epsilon_list = parse_number_list(v); }}},
      {"scan.layer_mesh_h", {[](auto& c, auto v) { c.scan.layer_mesh_h = parse_number(v); }}},
      {"scan.trace_decay_factor", {[](auto& c, auto v) { c.scan.trace_decay_factor = parse_number(v); }}},
      {"scan.solve_extended", {[](auto& c, auto v) { c.scan.solve_extended = parse_bool(v); }}},
      {"output.dir", {[](auto& c, auto v) { c.out_dir = std::string(trim(v)); }}},
      {"output.formats",
       {[](auto& c, auto v) {
         c.write_csv = c.write_vtk = false;
         for (auto f : split(v, ',')) {
           if (f == "csv") c.write_csv = true;
           else if (f == "vtk") c.write_vtk = true;
           else throw Error(ErrorCode::ConfigError, "unknown output format '" + std::string(f) + "'");
         }
       }}},
  };
  return table;
}

struct Issue {
  std::string key;
  std::string message;
};

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

bool all_positive(const std::vector<double>& v) {
  for (double x : v)
    if (!(x > 0.0)) return false;
  return true;
}

std::optional<Issue> first_issue(const ExperimentConfig& c) {
  try {
    (void)SurfaceChart::parse(c.surface);
  } catch (const Error& e) {
    return Issue{"surface.chart", e.what()};
  }
  if (!(c.radius > 0.0)) return Issue{"surface.radius", "must be positive"};
  if (!(c.outer_radius > c.radius)) return Issue{"surface.outer_radius", "must exceed the domain radius"};
  if (!(c.q.norm() > 0.0)) return Issue{"surface.q", "must be nonzero"};
  if (!(c.mu > 0.0)) return Issue{"material.mu", "must be positive"};
  if (!(c.lambda >= 0.0)) return Issue{"material.lambda", "must be nonnegative"};
  if (c.epsilon_list.empty() || !all_positive(c.epsilon_list)) {
    return Issue{"solve.epsilon_list", "must be a nonempty list of positive values"};
  }
  if (c.mesh_h_list.empty() || !all_positive(c.mesh_h_list)) {
    return Issue{"solve.mesh_h_list", "must be a nonempty list of positive values"};
  }
  for (double h : c.mesh_h_list)
    if (!(h < c.radius)) return Issue{"solve.mesh_h_list", "mesh sizes must be below the domain radius"};
  if (!(c.tol > 0.0)) return Issue{"solve.tol", "must be positive"};
  for (const Bump& b : c.bumps) {
    if (!(b.radius > 0.0)) return Issue{"load.bumps", "bump radius must be positive"};
    if (b.component < 1 || b.component > 3) return Issue{"load.bumps", "bump component must be 1, 2 or 3"};
  }
  const ScanConfig& s = c.scan;
  if (std::abs(s.y0.norm() - c.radius) > 1e-12 * c.radius) return Issue{"scan.y0", "must lie on the boundary circle"};
  if (!(s.phi_inner > 0.0 && s.phi_inner < s.phi_support)) {
    return Issue{"scan.phi_inner", "must be positive and below scan.phi_support"};
  }
  if (!(s.phi_support < s.u1_radius)) return Issue{"scan.phi_support", "must be below scan.u1_radius"};
  if (!(s.u1_radius < s.u0_radius)) return Issue{"scan.u0_radius", "must exceed scan.u1_radius"};
  if (!(c.radius + s.u0_radius < c.outer_radius)) {
    return Issue{"scan.u0_radius", "the convexifier disk must lie inside the outer disk"};
  }
  if (!(s.interior_center.norm() + s.u1_radius < c.radius)) {
    return Issue{"scan.interior_center", "the interior scan disk must lie inside the domain"};
  }
  if (s.h_list.empty() || !all_positive(s.h_list) || !strictly_decreasing(s.h_list)) {
    return Issue{"scan.h_list", "must be a strictly decreasing list of positive values"};
  }
  if (!(s.mesh_h > 0.0 && s.mesh_h < c.radius)) return Issue{"scan.mesh_h", "must lie in (0, radius)"};
  if (!(s.epsilon > 0.0)) return Issue{"scan.epsilon", "must be positive"};
  if (!(s.bound_ratio >= 1.0)) return Issue{"scan.bound_ratio", "must be at least 1"};
  if (s.trace_mesh_h_list.size() < 3 || !all_positive(s.trace_mesh_h_list) ||
      !strictly_decreasing(s.trace_mesh_h_list)) {
    return Issue{"scan.trace_mesh_h_list", "needs at least three strictly decreasing mesh sizes"};
  }
  if (!(s.trace_mesh_h_list.front() < c.radius)) return Issue{"scan.trace_mesh_h_list", "must lie below the radius"};
  if (s.layer_epsilon_list.empty() || !all_positive(s.layer_epsilon_list)) {
    return Issue{"scan.layer_epsilon_list", "must be a nonempty list of positive values"};
  }
  if (!(s.layer_mesh_h > 0.0 && s.layer_mesh_h < c.radius)) return Issue{"scan.layer_mesh_h", "must lie in (0, radius)"};
  if (!(s.trace_decay_factor > 1.0)) return Issue{"scan.trace_decay_factor", "must exceed 1"};
  if (c.out_dir.empty()) return Issue{"output.dir", "must not be empty"};
  return std::nullopt;
}

}  // namespace

std::vector<double> parse_number_list(std::string_view text) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  for (auto item : split(text, ',')) out.push_back(parse_number(item));
  return out;
}

Vec3 parse_vec3(std::string_view text) {
  const auto v = parse_number_list(text);
  if (v.size() != 3) throw Error(ErrorCode::ConfigError, "expected three comma-separated numbers");
  return {v[0], v[1], v[2]};
}

void ExperimentConfig::validate() const {
  if (auto issue = first_issue(*this)) throw Error(ErrorCode::ConfigError, issue->key + ": " + issue->message);
}

LoadSpec ExperimentConfig::load() const {
  LoadSpec l;
  l.bumps = bumps;
  return l;
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig c;
  std::map<std::string, int> lines;
  std::string section;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto fail = [&](const std::string& msg) {
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(line_no) + ": " + msg);
    };
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail("expected key = value");
    const std::string key = section + "." + std::string(trim(line.substr(0, eq)));
    const auto it = handlers().find(key);
    if (it == handlers().end()) fail("unknown key '" + key + "'");
    if (lines.count(key)) fail("duplicate key '" + key + "'");
    lines[key] = line_no;
    try {
      it->second.set(c, line.substr(eq + 1));
    } catch (const Error& e) {
      fail(key + ": " + e.what());
    }
  }
  if (auto issue = first_issue(c)) {
    const auto it = lines.find(issue->key);
    const std::string where = it != lines.end() ? "line " + std::to_string(it->second) + ": " : "default value: ";
    throw Error(ErrorCode::ConfigError, where + issue->key + " " + issue->message);
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "[surface]\n"
     << "chart = " << c.surface << "\n"
     << "radius = " << format_number(c.radius) << "\n"
     << "outer_radius = " << format_number(c.outer_radius) << "\n"
     << "q = " << vec(c.q) << "\n\n"
     << "[material]\n"
     << "lambda = " << format_number(c.lambda) << "\n"
     << "mu = " << format_number(c.mu) << "\n\n"
     << "[solve]\n"
     << "epsilon_list = " << join(c.epsilon_list) << "\n"
     << "mesh_h_list = " << join(c.mesh_h_list) << "\n"
     << "method = " << to_string(c.method) << "\n"
     << "tol = " << format_number(c.tol) << "\n\n"
     << "[load]\n"
     << "bumps = ";
  if (c.bumps.empty()) os << "none";
  for (std::size_t i = 0; i < c.bumps.size(); ++i) {
    const Bump& b = c.bumps[i];
    os << (i ? "; " : "") << vec(b.center) << "," << format_number(b.radius) << "," << format_number(b.height) << ","
       << b.component;
  }
  const ScanConfig& s = c.scan;
  os << "\n\n[scan]\n"
     << "y0 = " << vec(s.y0) << "\n"
     << "u1_radius = " << format_number(s.u1_radius) << "\n"
     << "u0_radius = " << format_number(s.u0_radius) << "\n"
     << "phi_inner = " << format_number(s.phi_inner) << "\n"
     << "phi_support = " << format_number(s.phi_support) << "\n"
     << "h_list = " << join(s.h_list) << "\n"
     << "mesh_h = " << format_number(s.mesh_h) << "\n"
     << "epsilon = " << format_number(s.epsilon) << "\n"
     << "bound_ratio = " << format_number(s.bound_ratio) << "\n"
     << "interior_center = " << vec(s.interior_center) << "\n"
     << "trace_mesh_h_list = " << join(s.trace_mesh_h_list) << "\n"
     << "layer_epsilon_list = " << join(s.layer_epsilon_list) << "\n"
     << "layer_mesh_h = " << format_number(s.layer_mesh_h) << "\n"
     << "trace_decay_factor = " << format_number(s.trace_decay_factor) << "\n"
     << "solve_extended = " << (s.solve_extended ? "true" : "false") << "\n\n"
     << "[output]\n"
     << "dir = " << c.out_dir << "\n"
     << "formats = ";
  std::string formats;
  if (c.write_csv) formats += "csv";
  if (c.write_vtk) formats += formats.empty() ? "vtk" : ",vtk";
  os << formats << "\n";
  return os.str();
}

}  // namespace shellreg
