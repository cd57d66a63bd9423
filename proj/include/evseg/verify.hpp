#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace evseg {

struct GradCheckReport {
  std::string name;
  int instances = 0;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

// Central finite-difference verification (double precision, h = 1e-5) of
// every differentiable operation and of all four full architectures at a
// reduced configuration (widths [2,4,8,16], 32x32 input, 3 classes, sampled
// parameter coordinates). Deterministic per seed.
std::vector<GradCheckReport> run_gradient_suite(int instances, double tolerance,
                                                uint64_t seed);

bool all_pass(const std::vector<GradCheckReport>& reports);

}  // namespace evseg
