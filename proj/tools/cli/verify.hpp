#pragma once

// Property suite behind `stogeo verify`: bracket identities, tangency,
// divergence, Ito correction, convergence orders, multiplier equivalence,
// conservation, closed-form orbits, partition volumes, and planner
// endpoints. The drift and diffusion fields are injectable so a mutated
// field can be shown to fail.

#include <string>
#include <vector>

#include "cli/io.hpp"
#include "cli/options.hpp"
#include "stogeo/geometry.hpp"

namespace stogeo::cli {

struct CheckResult {
  std::string name;
  double value = 0.0;      // measured residual or statistic
  double tolerance = 0.0;  // after tolerance_scale
  bool pass = false;
  std::string detail;
};

struct VerifyFields {
  VectorField f = field(FieldId::f);
  VectorField g = field(FieldId::g);
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool pass() const;
  std::vector<std::string> failures() const;
  Json to_json() const;
};

VerifyReport run_verification(const VerifyOptions& opt,
                              const VerifyFields& fields = VerifyFields{});

int cmd_verify(const VerifyOptions& opt, std::ostream& out, std::ostream& log,
               const VerifyFields& fields = VerifyFields{});

}  // namespace stogeo::cli
