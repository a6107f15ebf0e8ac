#pragma once

#include <limits>
#include <string>
#include <vector>

#include "pinchflow/immersion_engine.hpp"

namespace pinchflow {

// Grid-backend MCF state. Geometry is recomputed from the immersion on
// demand; positions are the only evolving data.
struct FlowState {
  GridImmersion immersion;
  double t = 0.0;
  long stepIndex = 0;
};

// Parabolic stability bound for the explicit scheme,
// kappa / max_nodes sum_a 4 g^{aa} / h_a^2 (the metric-aware CFL cap).
double stability_bound(const GridImmersion& G, double kappa = 0.2);

// Mean-curvature velocity H at every node (normal projection of the
// metric-traced second differences); frame-free fast path for stepping.
// Errors: "flow-degenerate" (naming the node) when the metric degenerates.
std::vector<double> mcf_velocity(const GridImmersion& G);

// One explicit RK4 step of dF/dt = H. Errors: "timestep-too-large" when dt
// exceeds the stability bound, plus propagated degeneracies.
FlowState step_mcf(const FlowState& S, double dt);

struct DiagnosticsRecord {
  double t = 0.0;
  long step = 0;
  double minF = 0.0;
  double maxPinchRatio = 0.0;
  double maxHatAoverF1s = 0.0;  // max |hatA|^2 / f^(1-sigma)
  double maxHatAoverH2s = 0.0;  // max |hatA|^2 / |H|^(2-sigma)
  double maxH2 = 0.0;
  double resG = std::numeric_limits<double>::quiet_NaN();
  double resH2 = std::numeric_limits<double>::quiet_NaN();
  double resA2 = std::numeric_limits<double>::quiet_NaN();
  double resHatA2 = std::numeric_limits<double>::quiet_NaN();
  std::string stopReason;  // empty until the run terminates
};

struct FlowPolicy {
  double dt = 0.0;  // 0 selects the stability bound at every step
  double tEnd = std::numeric_limits<double>::infinity();
  long maxSteps = 1000;
  double maxA2 = std::numeric_limits<double>::infinity();
  double minF = -std::numeric_limits<double>::infinity();
  int recordEvery = 1;
  bool verifyEvolution = false;  // attach evolution residuals to records
  double c0 = 0.0;               // 0 selects the formal c_n extension
  double sigma = 1.0 / 32.0;
};

struct FlowRun {
  std::vector<DiagnosticsRecord> records;
  GridImmersion finalImmersion;
  std::string stopReason;
  bool insideTheoremHypothesis = false;  // n >= 5 never holds on grids
  double c0 = 0.0, sigma = 0.0;
};

FlowRun run_flow(const FlowState& S0, const FlowPolicy& policy);

// Central-difference verification of the evolution equations of g, |H|^2,
// |A|^2 and |hatA|^2 against their assembled right-hand sides; max-norm
// residuals over nodes, O(dt^2 + h^2) under joint refinement.
struct EvolutionResiduals {
  double g = 0.0;
  double H2 = 0.0;
  double A2 = 0.0;
  double hatA2 = 0.0;
  double max() const { return std::max(std::max(g, H2), std::max(A2, hatA2)); }
};

EvolutionResiduals verify_evolution_equations(const FlowState& S, double dt);

// Diagnostics CSV: t,min_f,max_pinch_ratio,max_hatA_over_f1s,
// max_hatA_over_H2s,max_H2,res_g,res_H2,res_A2,res_hatA2,stop_reason.
std::string diagnostics_csv(const FlowRun& run);

// Formal extension of the theorem constant to every n >= 1 (equals c_n for
// n >= 5); grid diagnostics use it with an explicit out-of-hypothesis flag.
double formal_cn(int n);

}  // namespace pinchflow
