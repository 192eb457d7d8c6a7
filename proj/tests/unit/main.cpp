#include "shellreg/sparse_solver.hpp"

#include <gtest/gtest.h>

int main(int argc, char** argv) {
  shellreg::prepare_linear_algebra(argv);
  ::testing::InitGoogleTest(&argc, argv);
  return RUN_ALL_TESTS();
}
