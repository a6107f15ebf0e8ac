#include "pinchflow/immersion_engine.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

#include "pinchflow/error.hpp"
#include "pinchflow/rng.hpp"

namespace pinchflow {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

int wrap(int i, int s) { return ((i % s) + s) % s; }

struct Coords {
  int i[3] = {0, 0, 0};
};

// Iterates nodes in row-major order, calling fn(nodeIndex, coords).
template <typename F>
void for_each_node(int n, const std::array<int, 3>& shape, F&& fn) {
  size_t idx = 0;
  Coords c;
  const int s0 = shape[0], s1 = n > 1 ? shape[1] : 1, s2 = n > 2 ? shape[2] : 1;
  for (c.i[0] = 0; c.i[0] < s0; ++c.i[0])
    for (c.i[1] = 0; c.i[1] < s1; ++c.i[1])
      for (c.i[2] = 0; c.i[2] < s2; ++c.i[2]) fn(idx++, c);
}

}  // namespace

GridImmersion make_clifford_torus(int n, const std::vector<double>& radii,
                                  const std::vector<int>& shape) {
  require(n >= 1 && n <= 3, "precondition-error", "grid supports n in {1,2,3}");
  require(static_cast<int>(radii.size()) == n && static_cast<int>(shape.size()) == n,
          "precondition-error", "need one radius and one resolution per axis");
  GridImmersion G;
  G.n = n;
  G.N = 2 * n;
  for (int a = 0; a < n; ++a) {
    require(shape[a] >= 8, "precondition-error", "resolution must be at least 8 per axis");
    G.shape[a] = shape[a];
    G.spacing[a] = kTwoPi / shape[a];
  }
  G.positions.resize(G.nodeCount() * G.N);
  for_each_node(n, G.shape, [&](size_t idx, const Coords& c) {
    double* p = G.position(idx);
    for (int a = 0; a < n; ++a) {
      const double t = c.i[a] * G.spacing[a];
      p[2 * a] = radii[a] * std::cos(t);
      p[2 * a + 1] = radii[a] * std::sin(t);
    }
  });
  return G;
}

GridImmersion make_torus_of_revolution(double R, double r, int shape0, int shape1) {
  require(R > r && r > 0.0, "precondition-error", "need R > r > 0");
  require(shape0 >= 8 && shape1 >= 8, "precondition-error",
          "resolution must be at least 8 per axis");
  GridImmersion G;
  G.n = 2;
  G.N = 3;
  G.shape = {shape0, shape1, 1};
  G.spacing = {kTwoPi / shape0, kTwoPi / shape1, 0.0};
  G.positions.resize(G.nodeCount() * G.N);
  for_each_node(2, G.shape, [&](size_t idx, const Coords& c) {
    const double th = c.i[0] * G.spacing[0];
    const double ph = c.i[1] * G.spacing[1];
    double* p = G.position(idx);
    p[0] = (R + r * std::cos(ph)) * std::cos(th);
    p[1] = (R + r * std::cos(ph)) * std::sin(th);
    p[2] = r * std::sin(ph);
  });
  return G;
}

GridImmersion make_sphere_chart(double radius, int shape0, int shape1) {
  require(radius > 0.0, "precondition-error", "radius must be positive");
  require(shape0 >= 8 && shape1 >= 8, "precondition-error",
          "resolution must be at least 8 per axis");
  require(shape0 % 2 == 0, "precondition-error",
          "pole offset needs an even polar resolution");
  GridImmersion G;
  G.n = 2;
  G.N = 3;
  G.shape = {shape0, shape1, 1};
  G.spacing = {kTwoPi / shape0, kTwoPi / shape1, 0.0};
  G.positions.resize(G.nodeCount() * G.N);
  for_each_node(2, G.shape, [&](size_t idx, const Coords& c) {
    // Polar angle offset by half a step; the chart double-covers the sphere
    // and never hits the poles.
    const double th = (c.i[0] + 0.5) * G.spacing[0];
    const double ph = c.i[1] * G.spacing[1];
    double* p = G.position(idx);
    p[0] = radius * std::sin(th) * std::cos(ph);
    p[1] = radius * std::sin(th) * std::sin(ph);
    p[2] = radius * std::cos(th);
  });
  return G;
}

GridImmersion make_generic_torus4(double eps, int shape0, int shape1) {
  require(eps >= 0.0 && eps < 0.5, "precondition-error", "perturbation must stay small");
  require(shape0 >= 8 && shape1 >= 8, "precondition-error",
          "resolution must be at least 8 per axis");
  GridImmersion G;
  G.n = 2;
  G.N = 4;
  G.shape = {shape0, shape1, 1};
  G.spacing = {kTwoPi / shape0, kTwoPi / shape1, 0.0};
  G.positions.resize(G.nodeCount() * G.N);
  for_each_node(2, G.shape, [&](size_t idx, const Coords& c) {
    const double th = c.i[0] * G.spacing[0];
    const double ph = c.i[1] * G.spacing[1];
    const double a = 1.0 + eps * std::cos(th + 2.0 * ph);
    const double b = 1.0 + eps * std::cos(2.0 * th - ph);
    double* p = G.position(idx);
    p[0] = a * std::cos(th);
    p[1] = a * std::sin(th);
    p[2] = b * std::cos(ph);
    p[3] = b * std::sin(ph);
  });
  return G;
}

GridImmersion embed_rotated(const GridImmersion& G, int N, uint64_t seed, bool translate) {
  require(N >= G.N, "precondition-error", "target ambient dimension too small");
  Rng rng(seed);
  Eigen::MatrixXd M(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) M(i, j) = rng.gaussian();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
  Eigen::MatrixXd Q = qr.householderQ();
  Eigen::VectorXd shift = Eigen::VectorXd::Zero(N);
  if (translate)
    for (int i = 0; i < N; ++i) shift[i] = rng.gaussian();

  GridImmersion out = G;
  out.N = N;
  out.positions.assign(G.nodeCount() * N, 0.0);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(N);
  for (size_t node = 0; node < G.nodeCount(); ++node) {
    x.setZero();
    for (int k = 0; k < G.N; ++k) x[k] = G.position(node)[k];
    Eigen::VectorXd y = Q * x + shift;
    std::memcpy(out.position(node), y.data(), sizeof(double) * N);
  }
  return out;
}

GridImmersion make_graph_perturbation(const GridImmersion& G, double eps, int targetN,
                                      const std::vector<int>& waves, uint64_t seed) {
  require(targetN > G.N, "precondition-error",
          "graph perturbation needs at least one fresh ambient direction");
  require(static_cast<int>(waves.size()) == G.n, "precondition-error",
          "need one wave number per axis");
  Rng rng(seed);
  const int fresh = targetN - G.N;
  Eigen::VectorXd w(fresh);
  for (int i = 0; i < fresh; ++i) w[i] = rng.gaussian();
  w.normalize();

  GridImmersion out = G;
  out.N = targetN;
  out.positions.assign(G.nodeCount() * targetN, 0.0);
  for_each_node(G.n, G.shape, [&](size_t idx, const Coords& c) {
    double phi = 1.0;
    for (int a = 0; a < G.n; ++a) phi *= std::cos(waves[a] * c.i[a] * G.spacing[a]);
    double* p = out.position(idx);
    std::memcpy(p, G.position(idx), sizeof(double) * G.N);
    for (int i = 0; i < fresh; ++i) p[G.N + i] = eps * phi * w[i];
  });
  return out;
}

namespace {

// First/second/mixed central differences of an R^d-valued node field.
class Stencil {
public:
  Stencil(int n, const std::array<int, 3>& shape, const std::array<double, 3>& spacing,
          bool fourth)
      : n_(n), shape_(shape), spacing_(spacing), fourth_(fourth) {}

  template <typename Field>
  void d1(const Field& f, const Coords& c, int axis, double* out, int d) const {
    const double h = spacing_[axis];
    if (!fourth_) {
      const double* fp = f(offset(c, axis, 1));
      const double* fm = f(offset(c, axis, -1));
      for (int k = 0; k < d; ++k) out[k] = (fp[k] - fm[k]) / (2.0 * h);
    } else {
      const double* fp1 = f(offset(c, axis, 1));
      const double* fm1 = f(offset(c, axis, -1));
      const double* fp2 = f(offset(c, axis, 2));
      const double* fm2 = f(offset(c, axis, -2));
      for (int k = 0; k < d; ++k)
        out[k] = (-fp2[k] + 8.0 * fp1[k] - 8.0 * fm1[k] + fm2[k]) / (12.0 * h);
    }
  }

  template <typename Field>
  void d2(const Field& f, const Coords& c, int a, int b, double* out, int d) const {
    if (a == b) {
      const double h2 = spacing_[a] * spacing_[a];
      const double* f0 = f(nodeOf(c));
      if (!fourth_) {
        const double* fp = f(offset(c, a, 1));
        const double* fm = f(offset(c, a, -1));
        for (int k = 0; k < d; ++k) out[k] = (fp[k] - 2.0 * f0[k] + fm[k]) / h2;
      } else {
        const double* fp1 = f(offset(c, a, 1));
        const double* fm1 = f(offset(c, a, -1));
        const double* fp2 = f(offset(c, a, 2));
        const double* fm2 = f(offset(c, a, -2));
        for (int k = 0; k < d; ++k)
          out[k] = (-fp2[k] + 16.0 * fp1[k] - 30.0 * f0[k] + 16.0 * fm1[k] - fm2[k]) /
                   (12.0 * h2);
      }
      return;
    }
    if (!fourth_) {
      const double s = 1.0 / (4.0 * spacing_[a] * spacing_[b]);
      const double* fpp = f(offset2(c, a, 1, b, 1));
      const double* fpm = f(offset2(c, a, 1, b, -1));
      const double* fmp = f(offset2(c, a, -1, b, 1));
      const double* fmm = f(offset2(c, a, -1, b, -1));
      for (int k = 0; k < d; ++k) out[k] = (fpp[k] - fpm[k] - fmp[k] + fmm[k]) * s;
    } else {
      // Tensor product of two fourth-order first-derivative stencils.
      static const int off[4] = {-2, -1, 1, 2};
      static const double cf[4] = {1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0};
      for (int k = 0; k < d; ++k) out[k] = 0.0;
      for (int ia = 0; ia < 4; ++ia)
        for (int ib = 0; ib < 4; ++ib) {
          const double wgt = cf[ia] * cf[ib] / (spacing_[a] * spacing_[b]);
          const double* fv = f(offset2(c, a, off[ia], b, off[ib]));
          for (int k = 0; k < d; ++k) out[k] += wgt * fv[k];
        }
    }
  }

  size_t nodeOf(const Coords& c) const {
    size_t idx = static_cast<size_t>(c.i[0]);
    if (n_ > 1) idx = idx * shape_[1] + c.i[1];
    if (n_ > 2) idx = idx * shape_[2] + c.i[2];
    return idx;
  }

private:
  size_t offset(const Coords& c, int axis, int d) const {
    Coords o = c;
    o.i[axis] = wrap(o.i[axis] + d, shape_[axis]);
    return nodeOf(o);
  }
  size_t offset2(const Coords& c, int a, int da, int b, int db) const {
    Coords o = c;
    o.i[a] = wrap(o.i[a] + da, shape_[a]);
    o.i[b] = wrap(o.i[b] + db, shape_[b]);
    return nodeOf(o);
  }

  int n_;
  std::array<int, 3> shape_;
  std::array<double, 3> spacing_;
  bool fourth_;
};

// Orthonormal completion of the tangent space by Gram-Schmidt over the
// ambient basis with largest-residual pivoting. When a seed direction is
// supplied (the mean-curvature direction at the root node), it becomes the
// first frame vector; this keeps planar-embedded data exactly split between
// in-plane and out-of-plane normals.
Eigen::MatrixXd complete_frame(const Eigen::MatrixXd& tangentQ,
                               const Eigen::VectorXd* seed = nullptr) {
  const int N = tangentQ.rows();
  const int m = N - static_cast<int>(tangentQ.cols());
  Eigen::MatrixXd frame(N, m);
  std::vector<Eigen::VectorXd> chosen;
  std::vector<bool> used(N, false);
  if (seed && m > 0) {
    Eigen::VectorXd v = *seed;
    v -= tangentQ * (tangentQ.transpose() * v);
    const double nv = v.norm();
    if (nv > 1e-10 * seed->norm()) {
      chosen.push_back(v / nv);
      frame.col(0) = chosen.back();
    }
  }
  for (int col = static_cast<int>(chosen.size()); col < m; ++col) {
    int best = -1;
    double bestNorm = -1.0;
    Eigen::VectorXd bestVec;
    for (int k = 0; k < N; ++k) {
      if (used[k]) continue;
      Eigen::VectorXd v = Eigen::VectorXd::Unit(N, k);
      v -= tangentQ * (tangentQ.transpose() * v);
      for (const auto& u : chosen) v -= u * u.dot(v);
      const double nv = v.norm();
      if (nv > bestNorm) {
        bestNorm = nv;
        best = k;
        bestVec = v;
      }
    }
    require(best >= 0 && bestNorm > 1e-8, "frame-incoherent",
            "cannot complete the root normal frame");
    used[best] = true;
    chosen.push_back(bestVec / bestNorm);
    frame.col(col) = chosen.back();
  }
  return frame;
}

}  // namespace

CurvatureJet GeometryField::jet_at(size_t node) const {
  const NodeGeometry& nd = nodes[node];
  CurvaturePoint P;
  P.n = n;
  P.m = m;
  P.g = nd.g;
  P.A = nd.A;
  // Project onto the Codazzi-symmetric subspace; the discarded asymmetry is
  // exactly the discrete Codazzi residual reported elsewhere.
  std::vector<double> T(nd.T.size(), 0.0);
  auto at = [&](int i, int j, int k, int al) {
    return nd.T[(static_cast<size_t>(i) * n + j) * n * m + static_cast<size_t>(k) * m + al];
  };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int al = 0; al < m; ++al)
          T[(static_cast<size_t>(i) * n + j) * n * m + static_cast<size_t>(k) * m + al] =
              (at(i, j, k, al) + at(i, k, j, al) + at(j, i, k, al) + at(j, k, i, al) +
               at(k, i, j, al) + at(k, j, i, al)) /
              6.0;
  return make_jet(std::move(P), std::move(T));
}

GeometryField compute_geometry(const GridImmersion& G) {
  require(G.n >= 1 && G.n <= 3, "precondition-error", "grid supports n in {1,2,3}");
  require(G.N > G.n, "precondition-error", "ambient dimension must exceed n");
  const int n = G.n, N = G.N, m = N - n;
  const size_t count = G.nodeCount();
  require(G.positions.size() == count * N, "precondition-error", "position buffer size");

  GeometryField GF;
  GF.n = n;
  GF.N = N;
  GF.m = m;
  GF.shape = G.shape;
  GF.spacing = G.spacing;
  GF.fourthOrder = G.fourthOrder;
  GF.nodes.resize(count);

  const Stencil st(n, G.shape, G.spacing, G.fourthOrder);
  auto posField = [&](size_t idx) { return G.position(idx); };

  const int nPairs = n * (n + 1) / 2;
  std::vector<double> d2F(count * nPairs * N);
  std::vector<Eigen::MatrixXd> tangentQ(count);
  auto pairIndex = [&](int a, int b) {
    if (a > b) std::swap(a, b);
    return a * n - a * (a - 1) / 2 + (b - a);
  };

  // Pass 1: first/second derivatives, metric, tangent projectors.
  for_each_node(n, G.shape, [&](size_t idx, const Coords& c) {
    NodeGeometry& nd = GF.nodes[idx];
    nd.dF.resize(N, n);
    Eigen::VectorXd col(N);
    for (int a = 0; a < n; ++a) {
      st.d1(posField, c, a, col.data(), N);
      nd.dF.col(a) = col;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(nd.dF);
    require(svd.singularValues().minCoeff() > 1e-8, "immersion-degenerate",
            "dF loses rank at node " + std::to_string(idx));

    nd.g = nd.dF.transpose() * nd.dF;
    nd.gInv = nd.g.inverse();

    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b)
        st.d2(posField, c, a, b, d2F.data() + (idx * nPairs + pairIndex(a, b)) * N, N);

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(nd.dF);
    tangentQ[idx] = Eigen::MatrixXd(qr.householderQ()).leftCols(n);
  });

  // Pass 2: coherent normal frame by projection transport along the
  // row-major spanning tree.
  for_each_node(n, G.shape, [&](size_t idx, const Coords& c) {
    NodeGeometry& nd = GF.nodes[idx];
    if (idx == 0) {
      // Seed with the ambient mean-curvature direction (frame-independent).
      Eigen::VectorXd Hvec = Eigen::VectorXd::Zero(N);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          Hvec += nd.gInv(a, b) *
                  Eigen::Map<const Eigen::VectorXd>(
                      d2F.data() + (idx * nPairs + pairIndex(a, b)) * N, N);
      Hvec -= tangentQ[idx] * (tangentQ[idx].transpose() * Hvec);
      nd.frame = complete_frame(tangentQ[idx], &Hvec);
      return;
    }
    Coords pc = c;
    if (n > 2 && c.i[2] > 0) {
      pc.i[2] -= 1;
    } else if (n > 1 && c.i[1] > 0) {
      pc.i[1] -= 1;
    } else {
      pc.i[0] -= 1;
    }
    const NodeGeometry& prev = GF.nodes[st.nodeOf(pc)];
    nd.frame.resize(N, m);
    for (int col = 0; col < m; ++col) {
      Eigen::VectorXd v = prev.frame.col(col);
      v -= tangentQ[idx] * (tangentQ[idx].transpose() * v);
      for (int k = 0; k < col; ++k) v -= nd.frame.col(k) * nd.frame.col(k).dot(v);
      const double nv = v.norm();
      require(nv > 0.2, "frame-incoherent",
              "normal bundle twist too strong for the grid at node " + std::to_string(idx));
      nd.frame.col(col) = v / nv;
    }
  });

  // Pass 3: second fundamental form, Christoffel symbols, mean curvature,
  // and the frame-independent normal projection of d^2 F.
  std::vector<double> Avec(count * nPairs * N);
  for_each_node(n, G.shape, [&](size_t idx, const Coords&) {
    NodeGeometry& nd = GF.nodes[idx];
    nd.A.assign(m, Eigen::MatrixXd::Zero(n, n));
    nd.christoffel.assign(static_cast<size_t>(n) * n * n, 0.0);
    nd.H = Eigen::VectorXd::Zero(m);

    for (int a = 0; a < n; ++a) {
      for (int b = a; b < n; ++b) {
        Eigen::Map<const Eigen::VectorXd> dd(d2F.data() + (idx * nPairs + pairIndex(a, b)) * N,
                                             N);
        for (int al = 0; al < m; ++al) {
          const double v = nd.frame.col(al).dot(dd);
          nd.A[al](a, b) = nd.A[al](b, a) = v;
        }
        // Gamma^c_ab = g^{cd} <d2F_ab, dF_d>
        Eigen::VectorXd lower = nd.dF.transpose() * dd;
        Eigen::VectorXd gamma = nd.gInv * lower;
        for (int cc = 0; cc < n; ++cc) {
          nd.christoffel[(static_cast<size_t>(cc) * n + a) * n + b] = gamma[cc];
          nd.christoffel[(static_cast<size_t>(cc) * n + b) * n + a] = gamma[cc];
        }
        // Normal projection of d2F (tangent part removed).
        Eigen::VectorXd perp = dd - nd.dF * gamma;
        std::memcpy(Avec.data() + (idx * nPairs + pairIndex(a, b)) * N, perp.data(),
                    sizeof(double) * N);
      }
    }
    for (int al = 0; al < m; ++al) nd.H[al] = (nd.gInv * nd.A[al]).trace();
  });

  // Pass 4: normal connection (frame differences) and nabla^perp A through
  // ambient differences of the frame-independent Avec field, so the seam of
  // the frame gauge never contaminates T.
  auto frameField = [&](size_t idx) { return GF.nodes[idx].frame.data(); };
  std::vector<double> dcol(N);
  for_each_node(n, G.shape, [&](size_t idx, const Coords& c) {
    NodeGeometry& nd = GF.nodes[idx];
    nd.omega.assign(static_cast<size_t>(n) * m * m, 0.0);
    std::vector<double> dframe(static_cast<size_t>(N) * m);
    for (int cc = 0; cc < n; ++cc) {
      st.d1(frameField, c, cc, dframe.data(), N * m);
      for (int al = 0; al < m; ++al)
        for (int be = 0; be < m; ++be) {
          double s = 0.0;
          for (int k = 0; k < N; ++k) s += dframe[al * N + k] * nd.frame(k, be);
          nd.omega[(static_cast<size_t>(cc) * m + al) * m + be] = s;
        }
      // omega is antisymmetric; remove the rounding-level symmetric part.
      for (int al = 0; al < m; ++al)
        for (int be = al; be < m; ++be) {
          const size_t ij = (static_cast<size_t>(cc) * m + al) * m + be;
          const size_t ji = (static_cast<size_t>(cc) * m + be) * m + al;
          const double v = 0.5 * (nd.omega[ij] - nd.omega[ji]);
          nd.omega[ij] = v;
          nd.omega[ji] = -v;
        }
    }

    nd.T.assign(static_cast<size_t>(n) * n * n * m, 0.0);
    auto avecField = [&](size_t node) { return Avec.data() + node * nPairs * N; };
    std::vector<double> dAvec(static_cast<size_t>(nPairs) * N);
    for (int cc = 0; cc < n; ++cc) {
      st.d1(avecField, c, cc, dAvec.data(), nPairs * N);
      for (int a = 0; a < n; ++a) {
        for (int b = a; b < n; ++b) {
          Eigen::Map<const Eigen::VectorXd> da(dAvec.data() + pairIndex(a, b) * N, N);
          for (int ga = 0; ga < m; ++ga) {
            double v = nd.frame.col(ga).dot(da);
            for (int d = 0; d < n; ++d) {
              const double gca = nd.christoffel[(static_cast<size_t>(d) * n + cc) * n + a];
              const double gcb = nd.christoffel[(static_cast<size_t>(d) * n + cc) * n + b];
              v -= gca * nd.A[ga](d, b) + gcb * nd.A[ga](a, d);
            }
            nd.T[(static_cast<size_t>(cc) * n + a) * n * m + static_cast<size_t>(b) * m + ga] = v;
            nd.T[(static_cast<size_t>(cc) * n + b) * n * m + static_cast<size_t>(a) * m + ga] = v;
          }
        }
      }
    }
  });

  // Node-wise scalars through the pointwise algebra.
  GF.normH.assign(count, 0.0);
  GF.A2.assign(count, 0.0);
  GF.H2.assign(count, 0.0);
  GF.hatA2.assign(count, std::numeric_limits<double>::quiet_NaN());
  GF.hRing2.assign(count, std::numeric_limits<double>::quiet_NaN());
  GF.minEigHgMinusH.assign(count, std::numeric_limits<double>::quiet_NaN());
  for (size_t idx = 0; idx < count; ++idx) {
    const NodeGeometry& nd = GF.nodes[idx];
    CurvaturePoint P;
    P.n = n;
    P.m = m;
    P.g = nd.g;
    P.A = nd.A;
    const double scale = curvature_scale(P);
    double h2 = 0.0;
    for (int al = 0; al < m; ++al) h2 += nd.H[al] * nd.H[al];
    GF.H2[idx] = h2;
    GF.normH[idx] = std::sqrt(h2);
    if (GF.normH[idx] > 1e-13 * scale) {
      const auto D = decompose_curvature(P);
      GF.A2[idx] = D.A2;
      GF.hatA2[idx] = D.hatA2;
      GF.hRing2[idx] = D.hRing2;
      Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
      for (int al = 0; al < m; ++al) h += (nd.H[al] / GF.normH[idx]) * nd.A[al];
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(GF.normH[idx] * nd.g - h);
      GF.minEigHgMinusH[idx] = eig.eigenvalues().minCoeff();
    } else {
      double a2 = 0.0;
      for (int al = 0; al < m; ++al) a2 += (nd.gInv * nd.A[al] * nd.gInv * nd.A[al]).trace();
      GF.A2[idx] = a2;
    }
  }
  return GF;
}

StructureResiduals structure_equation_residuals(const GeometryField& GF) {
  const int n = GF.n, m = GF.m;
  StructureResiduals res;
  const Stencil st(n, GF.shape, GF.spacing, GF.fourthOrder);
  const int r = GF.fourthOrder ? 2 : 1;

  // Codazzi: asymmetry of T between the derivative slot and the pair.
  for (const auto& nd : GF.nodes) {
    for (int c = 0; c < n; ++c)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          for (int ga = 0; ga < m; ++ga) {
            const double tc =
                nd.T[(static_cast<size_t>(c) * n + a) * n * m + static_cast<size_t>(b) * m + ga];
            const double ta =
                nd.T[(static_cast<size_t>(a) * n + c) * n * m + static_cast<size_t>(b) * m + ga];
            res.codazzi = std::max(res.codazzi, std::abs(tc - ta));
          }
  }

  if (n < 2) return res;  // Gauss and Ricci are vacuous on curves

  auto gammaField = [&](size_t idx) { return GF.nodes[idx].christoffel.data(); };
  auto omegaField = [&](size_t idx) { return GF.nodes[idx].omega.data(); };

  std::vector<double> dGamma(static_cast<size_t>(n) * n * n * n);  // [axis][c][a][b]
  std::vector<double> dOmega(static_cast<size_t>(n) * n * m * m);  // [axis][c][al][be]

  for_each_node(n, GF.shape, [&](size_t idx, const Coords& c) {
    const NodeGeometry& nd = GF.nodes[idx];
    for (int ax = 0; ax < n; ++ax)
      st.d1(gammaField, c, ax, dGamma.data() + static_cast<size_t>(ax) * n * n * n, n * n * n);

    auto dG = [&](int ax, int e, int a, int b) {
      return dGamma[((static_cast<size_t>(ax) * n + e) * n + a) * n + b];
    };
    auto Ga = [&](int e, int a, int b) {
      return nd.christoffel[(static_cast<size_t>(e) * n + a) * n + b];
    };

    // Gauss: Rm(a,b,c,d) = g_de Rm^e_{cab} vs <A_ad, A_bc> - <A_ac, A_bd>.
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        for (int cc = 0; cc < n; ++cc)
          for (int d = 0; d < n; ++d) {
            double lhs = 0.0;
            for (int e = 0; e < n; ++e) {
              double re = dG(a, e, b, cc) - dG(b, e, a, cc);
              for (int fidx = 0; fidx < n; ++fidx)
                re += Ga(fidx, b, cc) * Ga(e, a, fidx) - Ga(fidx, a, cc) * Ga(e, b, fidx);
              lhs += nd.g(d, e) * re;
            }
            double rhs = 0.0;
            for (int ga = 0; ga < m; ++ga)
              rhs += nd.A[ga](a, d) * nd.A[ga](b, cc) - nd.A[ga](a, cc) * nd.A[ga](b, d);
            res.gauss = std::max(res.gauss, std::abs(lhs - rhs));
          }

    // Ricci: masked to nodes whose omega stencil does not cross the frame
    // gauge seam of the spanning tree.
    if (m >= 2) {
      bool interior = true;
      for (int ax = 0; ax < n; ++ax)
        interior = interior && c.i[ax] >= 2 * r && c.i[ax] < GF.shape[ax] - 2 * r;
      if (interior) {
        for (int ax = 0; ax < n; ++ax)
          st.d1(omegaField, c, ax, dOmega.data() + static_cast<size_t>(ax) * n * m * m,
                n * m * m);
        auto dW = [&](int ax, int cw, int al, int be) {
          return dOmega[((static_cast<size_t>(ax) * n + cw) * m + al) * m + be];
        };
        auto W = [&](int cw, int al, int be) {
          return nd.omega[(static_cast<size_t>(cw) * m + al) * m + be];
        };
        for (int a = 0; a < n; ++a)
          for (int b = a + 1; b < n; ++b)
            for (int al = 0; al < m; ++al)
              for (int be = al + 1; be < m; ++be) {
                double lhs = dW(a, b, al, be) - dW(b, a, al, be);
                for (int de = 0; de < m; ++de)
                  lhs += W(b, al, de) * W(a, de, be) - W(a, al, de) * W(b, de, be);
                // Shape-operator commutator with one raised index.
                const Eigen::MatrixXd comm = nd.A[be] * nd.gInv * nd.A[al] -
                                             nd.A[al] * nd.gInv * nd.A[be];
                res.ricci = std::max(res.ricci, std::abs(lhs - comm(a, b)));
              }
      }
    }
  });
  return res;
}

PlanarityReport planarity_test(const GridImmersion& G, const GeometryField& GF, double tol) {
  const size_t count = GF.nodes.size();
  PlanarityReport rep;
  rep.minConvexityEig = std::numeric_limits<double>::infinity();
  for (size_t idx = 0; idx < count; ++idx) {
    require(std::isfinite(GF.hatA2[idx]), "degenerate-mean-curvature",
            "|H| vanishes at node " + std::to_string(idx));
    rep.maxHatARatio = std::max(rep.maxHatARatio, std::sqrt(GF.hatA2[idx]) / GF.normH[idx]);
    rep.minConvexityEig = std::min(rep.minConvexityEig, GF.minEigHgMinusH[idx]);
  }

  // Best-fit affine (n+1)-plane through the second moments.
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(G.N);
  for (size_t idx = 0; idx < count; ++idx)
    mean += Eigen::Map<const Eigen::VectorXd>(G.position(idx), G.N);
  mean /= static_cast<double>(count);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(G.N, G.N);
  for (size_t idx = 0; idx < count; ++idx) {
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(G.position(idx), G.N) - mean;
    cov += x * x.transpose();
  }
  cov /= static_cast<double>(count);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd ev = eig.eigenvalues();  // ascending

  // RMS distance to the plane spanned by the top n+1 principal directions,
  // measured point by point. The direct projection keeps exact-plane data at
  // rounding level instead of the sqrt of the eigenvalue cancellation floor.
  const int keep = std::min(G.n + 1, G.N);
  const Eigen::MatrixXd V = eig.eigenvectors().rightCols(keep);
  double residual2 = 0.0;
  for (size_t idx = 0; idx < count; ++idx) {
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(G.position(idx), G.N) - mean;
    residual2 += (x - V * (V.transpose() * x)).squaredNorm();
  }
  rep.affineResidual = std::sqrt(residual2 / static_cast<double>(count));

  const double top = std::sqrt(std::max(ev[G.N - 1], 0.0));
  int above = 0;
  for (int k = 0; k < G.N; ++k)
    if (std::sqrt(std::max(ev[k], 0.0)) > tol * top) ++above;
  rep.estimatedCodim = G.N - above;
  return rep;
}

void save_immersion(const GridImmersion& G, const std::string& path,
                    const std::string& metaJson) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "precondition-error", "cannot open " + path);
  auto writeU64 = [&](uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); };
  auto writeF64 = [&](double v) { out.write(reinterpret_cast<const char*>(&v), 8); };
  writeU64(static_cast<uint64_t>(G.n));
  writeU64(static_cast<uint64_t>(G.N));
  for (int a = 0; a < G.n; ++a) writeU64(static_cast<uint64_t>(G.shape[a]));
  for (int a = 0; a < G.n; ++a) writeF64(G.spacing[a]);
  for (double v : G.positions) writeF64(v);
  require(out.good(), "precondition-error", "short write to " + path);
  out.close();

  std::ofstream meta(path + ".json");
  meta << metaJson << "\n";
}

GridImmersion load_immersion(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "precondition-error", "cannot open " + path);
  auto readU64 = [&]() {
    uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  auto readF64 = [&]() {
    double v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  GridImmersion G;
  G.n = static_cast<int>(readU64());
  G.N = static_cast<int>(readU64());
  require(G.n >= 1 && G.n <= 3 && G.N > G.n && G.N <= 64, "precondition-error",
          "corrupt immersion header");
  for (int a = 0; a < G.n; ++a) G.shape[a] = static_cast<int>(readU64());
  for (int a = 0; a < G.n; ++a) G.spacing[a] = readF64();
  G.positions.resize(G.nodeCount() * G.N);
  for (auto& v : G.positions) v = readF64();
  require(in.good(), "precondition-error", "short read from " + path);
  return G;
}

}  // namespace pinchflow
