#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace pinchflow {

// Identity families verified by the identity-suite experiment: the
// reaction-term cross identities, the derivative decompositions, the traced
// Codazzi relations, and the two routes to Q.
struct IdentitySuiteResult {
  double maxReaction = 0.0;
  double maxDerivative = 0.0;
  double maxCodazzi = 0.0;
  double maxQ = 0.0;
  uint64_t count = 0;
  double worst() const {
    return std::max(std::max(maxReaction, maxDerivative), std::max(maxCodazzi, maxQ));
  }
};

IdentitySuiteResult run_identity_suite(int n, int m, uint64_t count, uint64_t seed);

// Exit codes: 0 all pass-conditions hold, 1 a pass-condition failed,
// 2 config/summary parse error, 3 validation error, 4 runtime failure.
// Subcommands:
//   pinchflow run <config.json> [--threads K] [--out DIR]
//   pinchflow report <summary.json>...
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pinchflow
