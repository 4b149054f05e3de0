#pragma once

#include <string>
#include <vector>

namespace rendersynth {

struct GradCheckRow {
  std::string stage;
  double max_rel_err = 0.0;
  int checks = 0;
};

struct GradCheckReport {
  std::vector<GradCheckRow> rows;
  double tolerance = 1e-4;
  bool passed = false;
  std::string to_string() const;
};

/// Central finite differences against every analytic gradient path: each
/// augmentation stage, the clip layer, the composed pipeline, and the
/// generator/discriminator nets end to end on small inputs.
/// `inject_sign_flip` deliberately corrupts one vjp so harness failure
/// detection itself can be exercised.
GradCheckReport run_gradient_checks(int seeds = 20, double tolerance = 1e-4,
                                    bool inject_sign_flip = false);

}  // namespace rendersynth
