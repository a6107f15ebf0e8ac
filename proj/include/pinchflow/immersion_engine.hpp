#pragma once

#include <array>
#include <string>
#include <vector>

#include "pinchflow/jet_core.hpp"
#include "pinchflow/tensor_core.hpp"

namespace pinchflow {

// Periodic parametric immersion F: T^n -> R^N sampled on a uniform grid.
// Intrinsic dimension is limited to n <= 3; the theory's n >= 5 regime is
// reached through the symmetric backend instead.
struct GridImmersion {
  int n = 0;
  int N = 0;
  std::array<int, 3> shape{1, 1, 1};
  std::array<double, 3> spacing{0.0, 0.0, 0.0};
  std::vector<double> positions;  // nodeCount * N, row-major over (i0,i1,i2)
  bool fourthOrder = false;       // stencil order flag (second order default)

  size_t nodeCount() const {
    size_t c = 1;
    for (int a = 0; a < n; ++a) c *= shape[a];
    return c;
  }
  size_t nodeIndex(int i0, int i1 = 0, int i2 = 0) const {
    size_t idx = static_cast<size_t>(i0);
    if (n > 1) idx = idx * shape[1] + i1;
    if (n > 2) idx = idx * shape[2] + i2;
    return idx;
  }
  double* position(size_t node) { return positions.data() + node * N; }
  const double* position(size_t node) const { return positions.data() + node * N; }
};

// --- builders ---------------------------------------------------------------

// Product of n circles (a_k cos t_k, a_k sin t_k) in R^{2n}; n = 1 gives a
// round circle in R^2.
GridImmersion make_clifford_torus(int n, const std::vector<double>& radii,
                                  const std::vector<int>& shape);

// Torus of revolution in R^3 (hypersurface test case, n = 2).
GridImmersion make_torus_of_revolution(double R, double r, int shape0, int shape1);

// Double cover of the round sphere S^2(radius) in R^3 on a pole-offset chart;
// valid for static geometry (the metric degenerates like sin(h/2) near the
// chart poles, so it is not used for explicit flows).
GridImmersion make_sphere_chart(double radius, int shape0, int shape1);

// Perturbed Clifford-type torus in R^4 with genuinely curved normal bundle;
// used by the structure-equation convergence studies.
GridImmersion make_generic_torus4(double eps, int shape0, int shape1);

// Rigid motion into general position: pads to R^N, applies a seeded random
// rotation and translation.
GridImmersion embed_rotated(const GridImmersion& G, int N, uint64_t seed,
                            bool translate = true);

// Graph perturbation F + eps * phi * w with w a seeded unit vector supported
// on the fresh coordinates (requires targetN > G.N) and phi a product of
// cosines with the given integer wave numbers.
GridImmersion make_graph_perturbation(const GridImmersion& G, double eps, int targetN,
                                      const std::vector<int>& waves, uint64_t seed);

// --- discrete geometry -------------------------------------------------------

struct NodeGeometry {
  Eigen::MatrixXd dF;                // N x n
  Eigen::MatrixXd g, gInv;           // n x n
  std::vector<double> christoffel;   // n^3, layout [c][a][b] for Gamma^c_ab
  Eigen::MatrixXd frame;             // N x m, coherent orthonormal normal frame
  std::vector<Eigen::MatrixXd> A;    // m symmetric n x n
  Eigen::VectorXd H;                 // m
  std::vector<double> omega;         // n m^2, [c][alpha][beta] = <d_c nu_a, nu_b>
  std::vector<double> T;             // n^3 m, derivative-first (as CurvatureJet)
};

struct GeometryField {
  int n = 0, N = 0, m = 0;
  std::array<int, 3> shape{1, 1, 1};
  std::array<double, 3> spacing{0.0, 0.0, 0.0};
  bool fourthOrder = false;
  std::vector<NodeGeometry> nodes;

  // Node-wise scalars (NaN where |H| degenerates).
  std::vector<double> normH, A2, H2, hatA2, hRing2;
  std::vector<double> minEigHgMinusH;  // positivity diagnostic for |H|g - h

  CurvatureJet jet_at(size_t node) const;
  size_t nodeIndex(int i0, int i1 = 0, int i2 = 0) const {
    size_t idx = static_cast<size_t>(i0);
    if (n > 1) idx = idx * shape[1] + i1;
    if (n > 2) idx = idx * shape[2] + i2;
    return idx;
  }
};

// Central-difference geometry of the immersion. Errors: "immersion-degenerate"
// when dF loses rank; "frame-incoherent" (naming the node) when the normal
// frame cannot be aligned across neighbors.
GeometryField compute_geometry(const GridImmersion& G);

// Max-norm residuals of the Gauss, Codazzi, and Ricci equations; each O(h^2)
// under refinement (vacuous entries report 0).
struct StructureResiduals {
  double gauss = 0.0;
  double codazzi = 0.0;
  double ricci = 0.0;
};

StructureResiduals structure_equation_residuals(const GeometryField& GF);

// Planarity diagnostics embodying the hatA = 0 <=> hypersurface statement.
struct PlanarityReport {
  double maxHatARatio = 0.0;    // max over nodes of |hatA| / |H|
  double affineResidual = 0.0;  // RMS distance to the best-fit (n+1)-plane
  int estimatedCodim = 0;       // N minus singular values above tol * largest
  double minConvexityEig = 0.0; // min over nodes of lambda_min(|H| g - h)
};

// Errors: "degenerate-mean-curvature" if |H| vanishes at any node.
PlanarityReport planarity_test(const GridImmersion& G, const GeometryField& GF, double tol);

// --- snapshot persistence ----------------------------------------------------

// Flat binary layout: u64 n, N, shape[n]; f64 spacing[n]; f64 positions
// (row-major, N components per node). A JSON sidecar <path>.json records the
// build metadata.
void save_immersion(const GridImmersion& G, const std::string& path,
                    const std::string& metaJson);
GridImmersion load_immersion(const std::string& path);

}  // namespace pinchflow
