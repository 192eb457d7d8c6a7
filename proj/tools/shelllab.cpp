// Command-line driver: certify | solve | scan | all.

#include "shellreg/experiment.hpp"
#include "shellreg/sparse_solver.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

constexpr const char* kVersion = "1.0.0";

struct Flags {
  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::string> surface;
  std::optional<std::string> eps;
  std::optional<std::string> mesh_h;
  std::optional<std::string> q;
  std::optional<std::string> method;
  std::optional<double> tol;
  bool force = false;
};

shellreg::ExperimentConfig resolve_config(const Flags& f, std::string& canonical) {
  using namespace shellreg;
  ExperimentConfig c;
  if (!f.config_path.empty()) c = load_config(f.config_path);
  // Flags override config keys; the overridden text goes through the parser
  // again so the same validation applies.
  std::string text = serialize_config(c);
  auto set = [&](const std::string& section, const std::string& key, const std::string& value) {
    std::istringstream in(text);
    std::ostringstream out;
    std::string line, current;
    while (std::getline(in, line)) {
      if (!line.empty() && line.front() == '[') current = line.substr(1, line.size() - 2);
      if (current == section && line.rfind(key + " = ", 0) == 0) line = key + " = " + value;
      out << line << "\n";
    }
    text = out.str();
  };
  if (f.out) set("output", "dir", *f.out);
  if (f.surface) set("surface", "chart", *f.surface);
  if (f.eps) set("solve", "epsilon_list", *f.eps);
  if (f.mesh_h) set("solve", "mesh_h_list", *f.mesh_h);
  if (f.q) set("surface", "q", *f.q);
  if (f.method) set("solve", "method", *f.method);
  if (f.tol) set("solve", "tol", format_number(*f.tol));
  c = parse_config(text);
  canonical = serialize_config(c);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  shellreg::prepare_linear_algebra(argv);

  CLI::App app{"Obstacle problems for elliptic membrane shells and their regularity scans"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", kVersion);
  Flags flags;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config_path, "key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--surface", flags.surface, "sphere_r2 or ellipsoid:a=..,b=..,c=..");
    sub->add_option("--eps", flags.eps, "comma-separated half-thicknesses");
    sub->add_option("--mesh-h", flags.mesh_h, "comma-separated mesh sizes");
    sub->add_option("--q", flags.q, "obstacle normal x,y,z");
    sub->add_option("--method", flags.method, "psor or active_set");
    sub->add_option("--tol", flags.tol, "solver tolerance");
    sub->add_flag("--force", flags.force, "solve even when certification fails");
  };
  auto* certify = app.add_subcommand("certify", "check the geometric hypotheses");
  auto* solve = app.add_subcommand("solve", "linear, separated and obstacle solves per (epsilon, mesh) cell");
  auto* scan = app.add_subcommand("scan", "difference-quotient scans and boundary trace study");
  auto* all = app.add_subcommand("all", "certify, solve and scan");
  for (auto* s : {certify, solve, scan, all}) add_common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  using namespace shellreg;
  StageContext ctx;
  ctx.log = &std::cout;
  ctx.force = flags.force;
  ctx.manifest.version = kVersion;
  int code = 0;
  try {
    std::string canonical;
    ctx.config = resolve_config(flags, canonical);
    ctx.manifest.config_hash = sha256_hex(canonical);
    write_text_file(std::filesystem::path(ctx.config.out_dir) / "config.cfg", canonical);

    if (*certify) {
      code = stage_certify(ctx);
    } else if (*solve) {
      code = stage_solve(ctx);
    } else if (*scan) {
      code = stage_scan(ctx);
    } else {
      code = stage_certify(ctx);
      if (code != 0 && !ctx.force) {
        write_manifest(ctx);
        return code;
      }
      const int solved = stage_solve(ctx);
      const int scanned = solved == 0 || ctx.force ? stage_scan(ctx) : 0;
      code = code != 0 ? code : (solved != 0 ? solved : scanned);
    }
    write_manifest(ctx);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return code;
}
