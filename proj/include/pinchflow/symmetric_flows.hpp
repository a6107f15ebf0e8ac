#pragma once

#include <string>
#include <vector>

#include "pinchflow/tensor_core.hpp"

namespace pinchflow {

// S^p(a) x S^q(b) in R^{p+q+2}; MCF reduces to the radii ODE a' = -p/a,
// b' = -q/b. q = 0 selects the dedicated round-sphere mode S^p(a) (b unused),
// avoiding the 0/0 in v = q/b^2.
struct ProductSphereState {
  int p = 0;
  int q = 0;
  double a = 1.0;
  double b = 1.0;
  double t = 0.0;

  int n() const { return p + q; }
  bool roundMode() const { return q == 0; }
};

// Degree-two curvature scalars in the (u, v) = (p/a^2, q/b^2) variables.
struct ProductSphereScalars {
  double u = 0.0, v = 0.0;
  double A2 = 0.0;      // u + v
  double H2 = 0.0;      // p u + q v
  double hatA2 = 0.0;   // n u v / (p u + q v)
  double hRing2 = 0.0;
  double h2 = 0.0;
  double pinchRatio = 0.0;  // |A|^2 / |H|^2
};

ProductSphereScalars product_sphere_scalars(const ProductSphereState& S);

// Exact decomposition, built from the closed-form second fundamental form
// and pushed through the generic pointwise algebra.
DecomposedCurvature product_sphere_curvature(const ProductSphereState& S);

// The underlying curvature point (used by cross-validation against grids).
CurvaturePoint product_sphere_point(const ProductSphereState& S);

// First factor collapse: min{a^2/2p, b^2/2q}.
double collapse_time(const ProductSphereState& S);

struct ProductTrajectory {
  std::vector<ProductSphereState> states;
  bool collapsed = false;
  double collapseTime = 0.0;  // reported when the requested horizon hits it
};

// Classical RK4 at fixed dt with an exact landing step on tEnd; truncates in
// front of the first factor collapse and reports the collapse time.
// Errors: "precondition-error" for dt <= 0 or invalid radii.
ProductTrajectory evolve_product_sphere(const ProductSphereState& S0, double dt, double tEnd);

struct MonotonicityRow {
  double t = 0.0, a = 0.0, b = 0.0;
  double f = 0.0;
  double pinchRatio = 0.0;
  double hatA2 = 0.0;
  double ratioFsigma = 0.0;  // |hatA|^2 / f^(1-sigma)
  double ratioHsigma = 0.0;  // |hatA|^2 / |H|^(2-sigma)
};

struct MonotonicityReport {
  std::vector<MonotonicityRow> rows;
  bool pinchingPreserved = false;   // f > 0 throughout
  bool fNondecreasing = false;      // df/dt >= 0 (homogeneous case)
  bool fStrictlyIncreasing = false;
  bool ratioFNonincreasing = false; // d/dt |hatA|^2/f^(1-sigma) <= tol
  bool ratioHBounded = false;       // |hatA|^2/|H|^(2-sigma) <= initial value
  double maxRatioHsigma = 0.0;
  double initialF = 0.0;            // the measured eps1 of this trajectory
};

// Errors: "precondition-error" when the initial state is not c0-pinched.
MonotonicityReport monotonicity_report(const ProductTrajectory& traj,
                                       const PinchingConstants& K);

// CSV export: t,a,b,f,pinch_ratio,hatA2,ratio_f_sigma,ratio_H_sigma.
std::string trajectory_csv(const MonotonicityReport& report);

}  // namespace pinchflow
