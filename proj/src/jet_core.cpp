#include "pinchflow/jet_core.hpp"

#include <cmath>

#include "pinchflow/error.hpp"

namespace pinchflow {

namespace {

inline size_t idx3(int n, int i, int j, int k) {
  return (static_cast<size_t>(i) * n + j) * n + k;
}

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

// Applies L^{-1} to one tangent mode of the flat rank-3 (+normal) array.
std::vector<double> mode_solve(const std::vector<double>& T, int n, int m,
                               const Eigen::MatrixXd& L, int mode) {
  std::vector<double> out(T.size(), 0.0);
  const auto Lv = L.triangularView<Eigen::Lower>();
  // Forward substitution along the chosen mode for every fixed other index.
  Eigen::VectorXd col(n);
  for (int p = 0; p < n; ++p) {
    for (int q = 0; q < n; ++q) {
      for (int a = 0; a < m; ++a) {
        for (int r = 0; r < n; ++r) {
          int i = 0, j = 0, k = 0;
          if (mode == 0) { i = r; j = p; k = q; }
          if (mode == 1) { i = p; j = r; k = q; }
          if (mode == 2) { i = p; j = q; k = r; }
          col[r] = T[idx3(n, i, j, k) * m + a];
        }
        Eigen::VectorXd sol = Lv.solve(col);
        for (int r = 0; r < n; ++r) {
          int i = 0, j = 0, k = 0;
          if (mode == 0) { i = r; j = p; k = q; }
          if (mode == 1) { i = p; j = r; k = q; }
          if (mode == 2) { i = p; j = q; k = r; }
          out[idx3(n, i, j, k) * m + a] = sol[r];
        }
      }
    }
  }
  return out;
}

}  // namespace

CurvatureJet make_jet(CurvaturePoint base, std::vector<double> T) {
  CurvatureJet J;
  J.dec = decompose_curvature(base);
  J.base = std::move(base);
  require(T.size() == static_cast<size_t>(J.base.n) * J.base.n * J.base.n * J.base.m,
          "invalid-jet", "T must have n^3 m entries");
  J.T = std::move(T);
  return J;
}

CurvatureJet rotate_normal_frame(const CurvatureJet& J, const Eigen::MatrixXd& Q) {
  CurvaturePoint base = rotate_normal_frame(J.base, Q);
  const int n = J.n(), m = J.m();
  std::vector<double> T(J.T.size(), 0.0);
  for (size_t t = 0; t < J.T.size() / m; ++t) {
    for (int a = 0; a < m; ++a) {
      double s = 0.0;
      for (int b = 0; b < m; ++b) s += Q(a, b) * J.T[t * m + b];
      T[t * m + a] = s;
    }
  }
  (void)n;
  return make_jet(std::move(base), std::move(T));
}

double jet_scale(const CurvatureJet& J) { return std::sqrt(norm2(J.T)); }

GradientTerms derive_gradient_quantities(const CurvatureJet& J) {
  const int n = J.n();
  const int m = J.m();
  const DecomposedCurvature& D = J.dec;

  // Codazzi validity: total symmetry in the three tangent slots.
  const double tScale = std::sqrt(norm2(J.T)) + 1e-300;
  double asym = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      for (int k = j; k < n; ++k)
        for (int a = 0; a < m; ++a) {
          const double ref = J.T[idx3(n, i, j, k) * m + a];
          asym = std::max(asym, std::abs(J.T[idx3(n, j, i, k) * m + a] - ref));
          asym = std::max(asym, std::abs(J.T[idx3(n, i, k, j) * m + a] - ref));
          asym = std::max(asym, std::abs(J.T[idx3(n, k, j, i) * m + a] - ref));
        }
  require(asym <= 1e-8 * tScale, "invalid-jet",
          "nabla^perp A violates the Codazzi symmetry beyond tolerance");

  // Orthonormalize tangent components if the base metric is nontrivial.
  std::vector<double> Tt;
  const std::vector<double>* Tp = &J.T;
  if (!D.metricIsIdentity) {
    Tt = mode_solve(J.T, n, m, D.choleskyL, 0);
    Tt = mode_solve(Tt, n, m, D.choleskyL, 1);
    Tt = mode_solve(Tt, n, m, D.choleskyL, 2);
    Tp = &Tt;
  }
  const std::vector<double>& T = *Tp;

  GradientTerms G;
  G.n = n;
  G.m = m;

  // nabla^perp_i H = trace_{jk} T_ijk
  Eigen::MatrixXd gradH = Eigen::MatrixXd::Zero(n, m);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      for (int a = 0; a < m; ++a) gradH(i, a) += T[idx3(n, i, k, k) * m + a];

  G.gradH2 = gradH.squaredNorm();
  G.gradNormH = gradH * D.nu1;
  G.gradNormH2 = G.gradNormH.squaredNorm();
  G.gradPerpNu1 = (gradH - G.gradNormH * D.nu1.transpose()) / D.normH;
  G.gradPerpNu1_2 = G.gradPerpNu1.squaredNorm();

  // hatA in full normal coordinates.
  std::vector<Eigen::MatrixXd> hatFull(m, Eigen::MatrixXd::Zero(n, n));
  for (int a = 0; a < m; ++a)
    for (int b = 0; b + 1 < m; ++b) hatFull[a] += D.hatFrame(a, b) * D.hatA[b];

  const size_t n3 = static_cast<size_t>(n) * n * n;
  G.projHatA.assign(n3, 0.0);
  G.gradH.assign(n3, 0.0);
  G.gradHRing.assign(n3, 0.0);
  G.Q.assign(n3, 0.0);
  G.hatGradHatA.assign(n3 * m, 0.0);

  const double invH = 1.0 / D.normH;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        const size_t t = idx3(n, i, j, k);
        double tDotNu = 0.0;
        for (int a = 0; a < m; ++a) tDotNu += T[t * m + a] * D.nu1[a];
        double proj = 0.0;  // <nabla_i hatA_jk, nu1> = -<hatA_jk, nabla_i nu1>
        for (int a = 0; a < m; ++a) proj -= hatFull[a](j, k) * G.gradPerpNu1(i, a);
        G.projHatA[t] = proj;
        const double dh = tDotNu - proj;
        G.gradH[t] = dh;
        const double dhRing = dh - (j == k ? G.gradNormH[i] / n : 0.0);
        G.gradHRing[t] = dhRing;
        G.Q[t] = dhRing - invH * D.hRing(j, k) * G.gradNormH[i];
        for (int a = 0; a < m; ++a) {
          G.hatGradHatA[t * m + a] =
              T[t * m + a] - tDotNu * D.nu1[a] - D.h(j, k) * G.gradPerpNu1(i, a);
        }
      }
    }
  }

  G.normGradA2 = norm2(T);
  G.projHatA2 = norm2(G.projHatA);
  G.hatGradHatA2 = norm2(G.hatGradHatA);
  G.gradHatA2 = G.hatGradHatA2 + G.projHatA2;
  G.E1_2 = 3.0 / (n + 2.0) * G.gradNormH2;
  G.Eperp_2 = 3.0 / (n + 2.0) * D.H2 * G.gradPerpNu1_2;

  double projRing = 0.0, hatPlusRing = 0.0, qDot = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        const size_t t = idx3(n, i, j, k);
        const double pr = G.gradHRing[t] + G.projHatA[t];
        projRing += pr * pr;
        double hatDot = 0.0;
        for (int a = 0; a < m; ++a) {
          const double v = G.hatGradHatA[t * m + a] + D.hRing(j, k) * G.gradPerpNu1(i, a);
          hatPlusRing += v * v;
          hatDot += hatFull[a](j, k) * G.gradPerpNu1(i, a);
        }
        qDot += G.Q[t] * hatDot;
      }
    }
  }
  G.projRingA2 = projRing;
  G.hatPlusRingNu2 = hatPlusRing;
  G.QdotHatAGradNu = qDot;
  return G;
}

DerivativeResiduals check_derivative_decomposition(const CurvatureJet& J) {
  const int n = J.n();
  const int m = J.m();
  const DecomposedCurvature& D = J.dec;
  const GradientTerms G = derive_gradient_quantities(J);

  // Reassemble the two orthogonal blocks of nabla^perp A and the full
  // nabla^perp hatA vector, then compare norms along the independent routes.
  double blockHat = 0.0, blockNu = 0.0, gradHatDirect = 0.0;
  std::vector<Eigen::MatrixXd> hatFull(m, Eigen::MatrixXd::Zero(n, n));
  for (int a = 0; a < m; ++a)
    for (int b = 0; b + 1 < m; ++b) hatFull[a] += D.hatFrame(a, b) * D.hatA[b];
  (void)hatFull;

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        const size_t t = idx3(n, i, j, k);
        const double nuPart = G.projHatA[t] + G.gradH[t];
        blockNu += nuPart * nuPart;
        for (int a = 0; a < m; ++a) {
          const double hatPart = G.hatGradHatA[t * m + a] + D.h(j, k) * G.gradPerpNu1(i, a);
          blockHat += hatPart * hatPart;
          const double gha =
              G.hatGradHatA[t * m + a] + G.projHatA[t] * D.nu1[a];
          gradHatDirect += gha * gha;
        }
      }
    }
  }

  const double s4 = std::max(G.normGradA2, 1e-300);
  DerivativeResiduals r;
  r.normGradA = std::abs(G.normGradA2 - (blockHat + blockNu)) / s4;
  r.gradH = std::abs(G.gradH2 - (D.H2 * G.gradPerpNu1_2 + G.gradNormH2)) /
            std::max(G.gradH2, s4 * 1e-6);
  r.gradHatA = std::abs(gradHatDirect - G.gradHatA2) / s4;
  return r;
}

CodazziResiduals check_traced_codazzi(const CurvatureJet& J) {
  const int n = J.n();
  const int m = J.m();
  const DecomposedCurvature& D = J.dec;
  const GradientTerms G = derive_gradient_quantities(J);

  double r1 = 0.0, rp = 0.0;
  for (int i = 0; i < n; ++i) {
    double lhs = 0.0;
    for (int k = 0; k < n; ++k) {
      const size_t t = idx3(n, k, i, k);
      lhs += G.gradH[t] + G.projHatA[t];
    }
    r1 += (lhs - G.gradNormH[i]) * (lhs - G.gradNormH[i]);

    for (int a = 0; a < m; ++a) {
      double lhsP = 0.0;
      for (int k = 0; k < n; ++k) {
        const size_t t = idx3(n, k, i, k);
        lhsP += G.hatGradHatA[t * m + a] + D.h(i, k) * G.gradPerpNu1(k, a);
      }
      const double diff = lhsP - D.normH * G.gradPerpNu1(i, a);
      rp += diff * diff;
    }
  }

  const double scale = std::max(G.normGradA2, 1e-300);
  CodazziResiduals r;
  r.traceToNu1 = std::sqrt(r1 / scale);
  r.traceToHat = std::sqrt(rp / scale);
  return r;
}

double q_route_residual(const CurvatureJet& J) {
  const int n = J.n();
  const int m = J.m();
  const DecomposedCurvature& D = J.dec;
  const GradientTerms G = derive_gradient_quantities(J);

  // Route 2: <nabla_k ringA_ij, nu1> - <nabla_k hatA_ij, nu1> - hRing grad|H|/|H|,
  // taking the first term straight from T and the second from orthogonality.
  std::vector<double> Tt;
  const std::vector<double>* Tp = &J.T;
  if (!D.metricIsIdentity) {
    Tt = mode_solve(J.T, n, m, D.choleskyL, 0);
    Tt = mode_solve(Tt, n, m, D.choleskyL, 1);
    Tt = mode_solve(Tt, n, m, D.choleskyL, 2);
    Tp = &Tt;
  }
  const std::vector<double>& T = *Tp;

  double num = 0.0, den = 1e-300;
  const double invH = 1.0 / D.normH;
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const size_t t = idx3(n, k, i, j);
        double tDotNu = 0.0;
        for (int a = 0; a < m; ++a) tDotNu += T[t * m + a] * D.nu1[a];
        const double ringProj = tDotNu - (i == j ? G.gradNormH[k] / n : 0.0);
        const double alt = ringProj - G.projHatA[t] - invH * D.hRing(i, j) * G.gradNormH[k];
        num += (alt - G.Q[t]) * (alt - G.Q[t]);
        den = std::max(den, std::abs(G.Q[t]));
      }
    }
  }
  const double scale = std::max(den, std::sqrt(G.normGradA2));
  return std::sqrt(num) / scale;
}

ImprovedTraceSlacks improved_trace_slacks(const GradientTerms& G, const DecomposedCurvature& D) {
  const double n = G.n;
  ImprovedTraceSlacks s;
  s.classic = G.normGradA2 - 3.0 / (n + 2.0) * G.gradH2;
  const double c = 2.0 * (n - 1.0) / (n * (n + 2.0));
  s.principal = G.projRingA2 - c * G.gradNormH2;
  s.hat = G.hatPlusRingNu2 - c * D.H2 * G.gradPerpNu1_2;
  return s;
}

}  // namespace pinchflow
