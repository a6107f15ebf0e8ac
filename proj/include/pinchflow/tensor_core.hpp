#pragma once

#include <Eigen/Dense>
#include <vector>

namespace pinchflow {

// Dimensional constants of the pinching theory. All fields are fixed by the
// intrinsic dimension n and the initial slack eps0; sigma always equals delta.
struct PinchingConstants {
  int n = 0;
  double cn = 0.0;    // theorem pinching constant min{4/3n, 3(n+1)/2n(n+2)}
  double c0 = 0.0;    // working constant (cn, or cn - eps0 for n in {5,6,7})
  double c1 = 0.0;    // min{4/3n, 1/(n-1)}
  double c2 = 0.0;    // min{4/3n, 1/(n-2)}
  double eps0 = 0.0;
  double eps1 = 0.0;  // measured (min of f over initial data), not chosen
  double delta = 0.0;
  double sigma = 0.0;  // = delta
  double eps = 0.0;    // 2n(n+2) eps0 / (3(n-1))
};

// Errors: "unsupported-dimension" for n < 5, "invalid-slack" when eps0 leaves
// c0 <= 1/n (or eps0 <= 0 for n in {5,6,7}).
PinchingConstants make_constants(int n, double eps0);

// Raw pointwise curvature data for an n-manifold in R^N with codimension m.
// A is stored in an orthonormal normal frame; g may be any SPD bilinear form.
struct CurvaturePoint {
  int n = 0;
  int m = 0;
  Eigen::MatrixXd g;                // n x n, symmetric positive definite
  std::vector<Eigen::MatrixXd> A;   // m symmetric n x n matrices A_alpha
};

// Convenience constructor with g = identity.
CurvaturePoint make_point(int n, int m, std::vector<Eigen::MatrixXd> A);

// Derived decomposition of A relative to the principal normal nu1 = H/|H|.
//
// Tangent components are stored in the g-orthonormalized basis (for
// g = identity this is the input basis verbatim); `choleskyL` records the
// change of basis, so reconstruct_point can return to the input coordinates.
// hatA holds the components of A orthogonal to nu1, expressed in the
// orthonormal frame of nu1-perp given by the columns of hatFrame.
struct DecomposedCurvature {
  int n = 0;
  int m = 0;
  double normH = 0.0;               // |H| > 0
  Eigen::VectorXd nu1;              // m coordinates in the input normal frame
  Eigen::MatrixXd h;                // h_ij = <A_ij, nu1>
  Eigen::MatrixXd hRing;            // traceless part of h
  std::vector<Eigen::MatrixXd> hatA;  // m-1 traceless symmetric matrices
  Eigen::MatrixXd hatFrame;         // m x (m-1), orthonormal, columns _|_ nu1
  Eigen::MatrixXd choleskyL;        // g = L L^T
  bool metricIsIdentity = true;

  double A2 = 0.0;      // |A|^2
  double H2 = 0.0;      // |H|^2
  double h2 = 0.0;      // |h|^2
  double hRing2 = 0.0;  // |hRing|^2
  double hatA2 = 0.0;   // |hatA|^2
};

// Errors: "degenerate-mean-curvature" when |H| <= 1e-14 |A|;
// "invalid-curvature-point" for non-symmetric or non-SPD inputs.
DecomposedCurvature decompose_curvature(const CurvaturePoint& P);

// Rebuilds A_ij = hatA_ij + hRing_ij nu1 + (|H|/n) g_ij nu1 in the original
// basis and frame; used by the round-trip property tests.
CurvaturePoint reconstruct_point(const DecomposedCurvature& D);

// Applies an orthogonal rotation Q to the normal frame: A'_a = sum_b Q_ab A_b.
CurvaturePoint rotate_normal_frame(const CurvaturePoint& P, const Eigen::MatrixXd& Q);

// Scalar reaction terms appearing in the evolution equations. hatAA2 is kept
// alongside the six decomposition-level fields because every reaction-term
// estimate consumes it.
struct ReactionTerms {
  double AdotH2 = 0.0;       // |<A_ij, H>|^2
  double AA2 = 0.0;          // |<A_ij, A_kl>|^2
  double Rperp2 = 0.0;       // |R_perp|^2
  double Rperp_nu1_2 = 0.0;  // |R_perp_ij(nu1)|^2
  double hatRperp2 = 0.0;    // |hat R_perp|^2
  double hRingHatA2 = 0.0;   // |sum_ij hRing_ij hatA_ij|^2
  double hatAA2 = 0.0;       // |<hatA_ij, hatA_kl>|^2
};

// Assembled from the decomposition pieces (the right-hand sides of the
// reaction-term identities).
ReactionTerms reaction_terms(const DecomposedCurvature& D);

// Independent route: contracts the raw A_alpha with g and g^{-1} only, never
// touching the decomposition beyond the principal-normal projection.
ReactionTerms reaction_terms_direct(const CurvaturePoint& P);

// Relative residuals of the three cross-identities between the two routes:
//   |<A,H>|^2   = |H|^2 |h|^2
//   |<A,A>|^2   = |h|^4 + 2|hRing.hatA|^2 + |<hatA,hatA>|^2
//   |R_perp|^2  = |hat R_perp|^2 + 2|R_perp(nu1)|^2
struct ReactionResiduals {
  double adotH = 0.0;
  double aa = 0.0;
  double rperp = 0.0;
  double max() const { return std::max(adotH, std::max(aa, rperp)); }
};

ReactionResiduals reaction_identity_residuals(const CurvaturePoint& P,
                                              const DecomposedCurvature& D);

// f = c0 |H|^2 - |A|^2. May be <= 0; callers interpret the sign.
double pinching_f(const DecomposedCurvature& D, const PinchingConstants& K);

// Relative residual of (n c0 - 1)/n |H|^2 = |hatA|^2 + |hRing|^2 + f.
double pinching_identity_residual(const DecomposedCurvature& D, const PinchingConstants& K);

// Frobenius scale of the curvature input, used for relative tolerances.
double curvature_scale(const CurvaturePoint& P);

}  // namespace pinchflow
