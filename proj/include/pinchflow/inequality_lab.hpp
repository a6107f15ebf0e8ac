#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pinchflow/jet_core.hpp"
#include "pinchflow/rng.hpp"
#include "pinchflow/tensor_core.hpp"

namespace pinchflow {

// One evaluated lemma instance. Slack is rhs - lhs, so nonnegativity is the
// pass condition for every checker. `applicable` is false when the branch
// hypothesis of a two-branch lemma is not satisfied by the constants.
struct SlackReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  std::string inputsHash;
  bool applicable = true;
};

struct SamplerStats {
  uint64_t tried = 0;
  uint64_t accepted = 0;
};

// Rejection-free cone sampler: hRing and hatA Gaussian, |H| then chosen to
// place |A|^2/|H|^2 uniformly in (1/n, c). Stays one part in 1e6 away from
// the cone boundary so slack signs remain certifiable in binary64.
// Errors: "precondition-error" for c <= 1/n or m < 1; "cone-too-thin" if the
// acceptance rate drops below 1e-6 (unreachable for this construction).
CurvaturePoint sample_pinched_point(int n, int m, double c, Rng& rng,
                                    SamplerStats* stats = nullptr);

// Same contract plus a totally symmetric Gaussian jet scaled by |A|^2.
CurvatureJet sample_pinched_jet(int n, int m, double c, Rng& rng,
                                SamplerStats* stats = nullptr);

// Cached per-sample evaluations shared by the checkers.
struct EvaluatedPoint {
  DecomposedCurvature dec;
  ReactionTerms reaction;
  std::string hash;
  double scale = 0.0;  // |A| Frobenius
};

struct EvaluatedJet {
  CurvatureJet jet;
  GradientTerms grad;
  ReactionTerms reaction;
  std::string hash;
  double scale = 0.0;  // max(|A|, sqrt(|T|))
};

EvaluatedPoint evaluate_point(const CurvaturePoint& P);
EvaluatedJet evaluate_jet(CurvatureJet J);

// The reaction gap c0 |<A,H>|^2 - |<A,A>|^2 - |R_perp|^2 in its exact
// decomposed form, which is free of the |H|^4-level cancellation of the
// direct expression near the cone boundary.
double reaction_gap(const DecomposedCurvature& D, const ReactionTerms& R, double f,
                    const PinchingConstants& K);

// --- one checker per lemma of the ladder ---------------------------------

std::pair<SlackReport, SlackReport> check_ab_estimates(const EvaluatedPoint& E);
SlackReport check_reaction_upper(const EvaluatedPoint& E);
// Errors: "outside-pinching-cone" when f <= 0.
SlackReport check_reaction_lower(const EvaluatedPoint& E, const PinchingConstants& K);
SlackReport check_reaction_combined(const EvaluatedPoint& E, const PinchingConstants& K);
SlackReport check_f_evolution_lower(const EvaluatedJet& E, const PinchingConstants& K);
std::pair<SlackReport, SlackReport> check_bochner_A(const EvaluatedJet& E,
                                                    const PinchingConstants& K);
std::pair<SlackReport, SlackReport> check_bochner_f(const EvaluatedJet& E,
                                                    const PinchingConstants& K);
std::pair<SlackReport, SlackReport> check_gradient_Q(const EvaluatedJet& E,
                                                     const PinchingConstants& K);
// Errors: "precondition-error" naming the failed branch when neither branch
// hypothesis holds.
SlackReport check_gradient_combined(const EvaluatedJet& E, const PinchingConstants& K);

// Stable checker identifiers, in report order. Two-branch lemmas appear as
// separate streams so branch applicability is visible in the output.
inline constexpr std::array<const char*, 13> kCheckerIds = {
    "ab-simple",        "ab-matrix",        "reaction-upper",  "reaction-lower",
    "reaction-combined", "f-evolution-lower", "bochner-A-1",    "bochner-A-2",
    "bochner-f-1",      "bochner-f-2",      "gradient-Q-1",    "gradient-Q-2",
    "gradient-combined"};

bool checker_needs_jet(const std::string& id);

// All thirteen streams for one jet sample (point checkers use the base).
std::vector<SlackReport> evaluate_all_checkers(const EvaluatedJet& E,
                                               const PinchingConstants& K);

// One stream by id; branch checkers return only the requested branch.
SlackReport run_checker(const std::string& id, const EvaluatedJet& E,
                        const PinchingConstants& K);

// --- batch driver ----------------------------------------------------------

struct BatchOptions {
  int n = 8;
  int m = 2;
  uint64_t count = 1000;
  uint64_t seed = 1;
  int threads = 1;
  double eps0 = 0.0;  // forwarded to make_constants; must be > 0 for n <= 7
};

struct CheckerSummary {
  std::string name;
  int n = 0, m = 0;
  double c0 = 0.0, delta = 0.0;
  double minSlack = 0.0;        // most negative slack seen
  double minScaledSlack = 0.0;  // min of slack / scale^4 (the pass metric)
  std::string argminHash;
  uint64_t count = 0;
};

// Deterministic for fixed (seed, count) regardless of thread count: samples
// are partitioned into fixed sub-streams and merged in stream order.
std::vector<CheckerSummary> run_inequality_batch(const BatchOptions& opt);

// JSON-line form of one summary (17 significant digits).
std::string to_json_line(const CheckerSummary& s);

// --- sharpness probe -------------------------------------------------------

struct ViolationSearchOptions {
  uint64_t budget = 2000;   // descent evaluations after the initial samples
  uint64_t restarts = 32;   // random starting samples
  uint64_t seed = 1;
};

// Projected local descent on normalized inputs, restarted from random pinched
// samples; returns the smallest slack found (with its reproducible hash).
SlackReport violation_search(const std::string& checkerId, int n, int m,
                             const PinchingConstants& K, const ViolationSearchOptions& opt);

}  // namespace pinchflow
