#pragma once

#include <vector>

#include "pinchflow/tensor_core.hpp"

namespace pinchflow {

// First-order curvature data: a base point together with the totally
// symmetric covariant derivative T_{ijk,a} = (nabla^perp_i A_{jk})_a.
// T is stored flat with layout ((i*n + j)*n + k)*m + a, derivative index
// first; total symmetry in (i,j,k) is the Codazzi equation in Euclidean
// ambient space and is a validity requirement, not an option.
struct CurvatureJet {
  CurvaturePoint base;
  DecomposedCurvature dec;   // decomposition of base
  std::vector<double> T;     // n^3 * m entries

  int n() const { return base.n; }
  int m() const { return base.m; }
  double tAt(int i, int j, int k, int a) const {
    const int n_ = base.n;
    return T[(static_cast<size_t>(i) * n_ + j) * n_ * base.m + static_cast<size_t>(k) * base.m + a];
  }
};

CurvatureJet make_jet(CurvaturePoint base, std::vector<double> T);

// Applies an orthogonal rotation Q to the normal frame of both A and T.
CurvatureJet rotate_normal_frame(const CurvatureJet& J, const Eigen::MatrixXd& Q);

// Frobenius scale of the jet part.
double jet_scale(const CurvatureJet& J);

// Every gradient-level quantity of the theory, derived from traces of T.
// Rank-3 arrays use the same derivative-first flat layout as T; arrays with a
// normal index carry full normal-frame coordinates (the nu1 component of
// hat-projected arrays is zero by construction). Tangent components live in
// the g-orthonormalized basis of the base decomposition.
struct GradientTerms {
  int n = 0, m = 0;

  Eigen::VectorXd gradNormH;          // nabla_i |H|
  Eigen::MatrixXd gradPerpNu1;        // n x m, nabla^perp_i nu1
  std::vector<double> hatGradHatA;    // n^3 m, hat-nabla^perp_i hatA_jk
  std::vector<double> projHatA;       // n^3, <nabla^perp_i hatA_jk, nu1>
  std::vector<double> gradH;          // n^3, nabla_i h_jk
  std::vector<double> gradHRing;      // n^3, nabla_i hRing_jk
  std::vector<double> Q;              // n^3, derivative index first

  double gradH2 = 0.0;        // |nabla^perp H|^2
  double gradNormH2 = 0.0;    // |nabla |H||^2
  double gradPerpNu1_2 = 0.0; // |nabla^perp nu1|^2
  double normGradA2 = 0.0;    // |nabla^perp A|^2
  double projHatA2 = 0.0;     // |<nabla^perp hatA, nu1>|^2
  double hatGradHatA2 = 0.0;  // |hat-nabla^perp hatA|^2
  double gradHatA2 = 0.0;     // |nabla^perp hatA|^2 (sum of the previous two)
  double projRingA2 = 0.0;    // |<nabla^perp ringA, nu1>|^2
  double hatPlusRingNu2 = 0.0;// |hat-nabla^perp hatA + hRing nabla^perp nu1|^2
  double E1_2 = 0.0;          // |E^(1)|^2 = 3/(n+2) |nabla|H||^2
  double Eperp_2 = 0.0;       // |E^(perp)|^2 = 3/(n+2) |H|^2 |nabla^perp nu1|^2
  double QdotHatAGradNu = 0.0;// sum Q_kij <hatA_ij, nabla^perp_k nu1>
};

// Errors: "invalid-jet" when the Codazzi symmetry of T is violated beyond
// tolerance; degenerate base errors propagate from decompose_curvature.
GradientTerms derive_gradient_quantities(const CurvatureJet& J);

struct DerivativeResiduals {
  double normGradA = 0.0;   // Eq. splitting |nabla^perp A|^2 into the two blocks
  double gradH = 0.0;       // |nabla^perp H|^2 = |H|^2|nabla nu1|^2 + |nabla|H||^2
  double gradHatA = 0.0;    // |nabla^perp hatA|^2 = hat part + nu1 part
  double max() const { return std::max(normGradA, std::max(gradH, gradHatA)); }
};

DerivativeResiduals check_derivative_decomposition(const CurvatureJet& J);

struct CodazziResiduals {
  double traceToNu1 = 0.0;  // sum_k nabla_k h_ik + <nabla_k hatA_ik, nu1> = nabla_i |H|
  double traceToHat = 0.0;  // sum_k hat-nabla_k hatA_ik + h_ik nabla_k nu1 = |H| nabla_i nu1
  double max() const { return std::max(traceToNu1, traceToHat); }
};

CodazziResiduals check_traced_codazzi(const CurvatureJet& J);

// Relative disagreement between the definition of Q through nabla hRing and
// the route through <nabla^perp ringA, nu1> with the orthogonality relation.
double q_route_residual(const CurvatureJet& J);

// Signed slacks (rhs - lhs) of the improved trace estimates; all three are
// nonnegative for every valid jet.
struct ImprovedTraceSlacks {
  double classic = 0.0;    // |nabla^perp A|^2 - 3/(n+2) |nabla^perp H|^2
  double principal = 0.0;  // |<nabla ringA, nu1>|^2 - 2(n-1)/n(n+2) |nabla|H||^2
  double hat = 0.0;        // |hat-nabla hatA + hRing nabla nu1|^2 - 2(n-1)/n(n+2)|H|^2|nabla nu1|^2
};

ImprovedTraceSlacks improved_trace_slacks(const GradientTerms& G, const DecomposedCurvature& D);

}  // namespace pinchflow
