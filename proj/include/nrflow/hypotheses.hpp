#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nrflow/params.hpp"

namespace nrflow {

struct HypothesisCheck {
  std::string name;
  bool pass = true;
  double worst = 0.0;    // worst sampled value of the tested quantity
  std::string witness;   // where the worst value was found
  std::string message;   // condition being tested
};

struct HypothesisReport {
  std::vector<HypothesisCheck> checks;

  bool all_pass() const;
  std::vector<std::string> failures() const;
  const HypothesisCheck* find(const std::string& name) const;
};

/// lambda0 = inf_{0<s<s0} P_c(s) / f(s), sampled on a dense geometric + uniform grid.
double capillary_floor_constant(const ModelParams& m, const Closures& c);

/// Largest admissible eps for the saturation floor: min(s0, f^-1(p_at / lambda0)).
double saturation_floor_eps_bound(const ModelParams& m, const Closures& c);

/// Samples every structural hypothesis on deterministic grids and seeded random draws.
HypothesisReport validate_hypotheses(const ModelParams& m, const Closures& c,
                                     std::uint64_t seed = 20240611);

}  // namespace nrflow
