// Built-in invariant checks on a fixed mesh ladder: exactness of the
// discrete complex, harmonic dimension, Hodge splitting, geostrophic
// balance, and the semidiscrete conservation budgets.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tfe {

struct VerifyCheck {
  std::string name;
  bool pass = false;
  double value = 0.0;      // measured quantity (smaller is better)
  double threshold = 0.0;  // pass iff value <= threshold
};

struct VerifyOptions {
  // Test hook: perturb one divergence-matrix entry so the complex-identity
  // check must fail.
  bool inject_div_fault = false;
};

std::vector<VerifyCheck> run_verification(const VerifyOptions& opts = {});

bool all_passed(const std::vector<VerifyCheck>& checks);
void print_verification_table(const std::vector<VerifyCheck>& checks,
                              std::ostream& out);

}  // namespace tfe
