#include "shellreg/experiment.hpp"

#include <gtest/gtest.h>

using namespace shellreg;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, DefaultFileMatchesBuiltInDefaults) {
  const ExperimentConfig file = load_config(std::filesystem::path(SHELLREG_CONFIG_DIR) / "default.cfg");
  EXPECT_EQ(serialize_config(file), serialize_config(ExperimentConfig{}));
}

TEST(Config, SerializeRoundTrip) {
  ExperimentConfig c = load_config(std::filesystem::path(SHELLREG_CONFIG_DIR) / "ellipsoid.cfg");
  c.bumps.push_back(Bump{Vec2(0.1, -0.05), 0.1, 0.3, 1});
  c.tol = 1.0 / 3.0 * 1e-9;
  const std::string text = serialize_config(c);
  EXPECT_EQ(serialize_config(parse_config(text)), text);
}

TEST(Config, PartialFileKeepsDefaults) {
  const ExperimentConfig c = parse_config("[solve]\nepsilon_list = 0.02, 0.01\n");
  EXPECT_EQ(c.epsilon_list, (std::vector<double>{0.02, 0.01}));
  EXPECT_EQ(c.mesh_h_list, ExperimentConfig{}.mesh_h_list);
}

TEST(Config, ErrorsCarryLineNumbers) {
  EXPECT_NE(message_of([] { parse_config("[solve]\n\nnot_a_key = 1\n"); }).find("line 3"), std::string::npos);
  EXPECT_NE(message_of([] { parse_config("[solve]\ntol = abc\n"); }).find("line 2"), std::string::npos);
  EXPECT_NE(message_of([] { parse_config("[solve]\ntol = 1\ntol = 2\n"); }).find("line 3"), std::string::npos);
  EXPECT_EQ(code_of([] { parse_config("[nowhere]\nx = 1\n"); }), ErrorCode::ConfigError);
}

TEST(Config, SemanticChecks) {
  EXPECT_EQ(code_of([] { parse_config("[solve]\nepsilon_list =\n"); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { parse_config("[solve]\nmesh_h_list = 0.1,-0.05\n"); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { parse_config("[scan]\ny0 = 0.5,0\n"); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { parse_config("[scan]\ntrace_mesh_h_list = 0.1,0.05\n"); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { parse_config("[load]\nbumps = 0,0,0.5,-1\n"); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { parse_config("[solve]\nmethod = newton\n"); }), ErrorCode::ConfigError);
}

TEST(Config, BumpsNoneMeansZeroLoad) {
  EXPECT_TRUE(parse_config("[load]\nbumps = none\n").load().is_zero());
}

TEST(Config, NumberLists) {
  EXPECT_EQ(parse_number_list("1, 2.5,3e-2"), (std::vector<double>{1.0, 2.5, 0.03}));
  EXPECT_EQ(parse_vec3("0,0,1"), Vec3(0, 0, 1));
  EXPECT_THROW(parse_vec3("0,1"), Error);
}

TEST(ExitCodes, ByFailureKind) {
  EXPECT_EQ(exit_code_for(ErrorCode::ConfigError), 2);
  EXPECT_EQ(exit_code_for(ErrorCode::ScanTooCoarse), 2);
  EXPECT_EQ(exit_code_for(ErrorCode::NotElliptic), 3);
  EXPECT_EQ(exit_code_for(ErrorCode::ChartUndefinedOnOuter), 3);
  EXPECT_EQ(exit_code_for(ErrorCode::SingularSystem), 4);
  EXPECT_EQ(exit_code_for(ErrorCode::KornFailure), 4);
  EXPECT_EQ(exit_code_for(ErrorCode::NotConcave), 5);
  EXPECT_EQ(exit_code_for(ErrorCode::SearchExhausted), 5);
}

TEST(Output, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Output, NumbersRoundTripExactly) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 12345.678}) EXPECT_EQ(std::stod(format_number(v)), v);
  EXPECT_EQ(format_number(-0.0), "0");
}

TEST(Certify, NegativeCases) {
  ExperimentConfig c;
  EXPECT_TRUE(certify(c).passes());
  c.q = Vec3(1, 0, 0);
  EXPECT_FALSE(certify(c).passes());
  c = ExperimentConfig{};
  c.outer_radius = 2.5;
  EXPECT_FALSE(certify(c).passes());
  c = ExperimentConfig{};
  c.surface = "ellipsoid:a=1,b=1,c=1";
  EXPECT_FALSE(certify(c).passes());
}

TEST(SolveCell, CoarseCellPassesKkt) {
  ExperimentConfig c;
  const CellOutcome cell = solve_cell(c, 0.01, 0.2);
  EXPECT_TRUE(cell.kkt.passes());
  EXPECT_GE(cell.vi.energy, cell.linear_energy - 1e-12);  // constrained minimum
  EXPECT_FALSE(cell.vi.active_rows.empty());
}

TEST(Stages, SolveWritesCsvFiles) {
  StageContext ctx;
  ctx.config.mesh_h_list = {0.2};
  ctx.config.write_vtk = false;
  ctx.config.out_dir = (std::filesystem::temp_directory_path() / "shellreg_stage_test").string();
  std::filesystem::remove_all(ctx.config.out_dir);
  EXPECT_EQ(stage_solve(ctx), 0);
  EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(ctx.config.out_dir) / "cells.csv"));
  std::filesystem::remove_all(ctx.config.out_dir);
}
