#include "pinchflow/flow_engine.hpp"

#include <cmath>
#include <cstdio>

#include "pinchflow/error.hpp"
#include "pinchflow/inequality_lab.hpp"
#include "pinchflow/jet_core.hpp"

namespace pinchflow {

namespace {

int wrap(int i, int s) { return ((i % s) + s) % s; }

// Inverts the small SPD metric in place; returns false when degenerate.
bool invert_metric(int n, const double* g, double* gInv) {
  if (n == 1) {
    if (g[0] <= 1e-300) return false;
    gInv[0] = 1.0 / g[0];
    return true;
  }
  if (n == 2) {
    const double det = g[0] * g[3] - g[1] * g[2];
    if (det <= 1e-300) return false;
    gInv[0] = g[3] / det;
    gInv[1] = -g[1] / det;
    gInv[2] = -g[2] / det;
    gInv[3] = g[0] / det;
    return true;
  }
  Eigen::Map<const Eigen::Matrix3d> G(g);
  const double det = G.determinant();
  if (det <= 1e-300) return false;
  Eigen::Map<Eigen::Matrix3d> Out(gInv);
  Out = G.inverse();
  return true;
}

}  // namespace

double formal_cn(int n) {
  const double nd = n;
  return std::min(4.0 / (3.0 * nd), 3.0 * (nd + 1.0) / (2.0 * nd * (nd + 2.0)));
}

std::vector<double> mcf_velocity(const GridImmersion& G) {
  const int n = G.n, N = G.N;
  const size_t count = G.nodeCount();
  std::vector<double> vel(count * N, 0.0);

  const int s0 = G.shape[0], s1 = n > 1 ? G.shape[1] : 1, s2 = n > 2 ? G.shape[2] : 1;
  const bool fourth = G.fourthOrder;

  std::vector<double> dF(static_cast<size_t>(N) * n), d2F(static_cast<size_t>(N) * n * n);
  double g[9], gInv[9];

  size_t idx = 0;
  for (int i0 = 0; i0 < s0; ++i0) {
    for (int i1 = 0; i1 < s1; ++i1) {
      for (int i2 = 0; i2 < s2; ++i2, ++idx) {
        auto nodeAt = [&](int d0, int d1, int d2) {
          size_t j = static_cast<size_t>(wrap(i0 + d0, s0));
          if (n > 1) j = j * s1 + wrap(i1 + d1, s1);
          if (n > 2) j = j * s2 + wrap(i2 + d2, s2);
          return G.position(j);
        };
        auto shift = [&](int axis, int d) {
          return nodeAt(axis == 0 ? d : 0, axis == 1 ? d : 0, axis == 2 ? d : 0);
        };

        const double* p0 = G.position(idx);
        for (int a = 0; a < n; ++a) {
          const double h = G.spacing[a];
          const double* fp = shift(a, 1);
          const double* fm = shift(a, -1);
          if (!fourth) {
            for (int k = 0; k < N; ++k) {
              dF[a * N + k] = (fp[k] - fm[k]) / (2.0 * h);
              d2F[(a * n + a) * N + k] = (fp[k] - 2.0 * p0[k] + fm[k]) / (h * h);
            }
          } else {
            const double* fp2 = shift(a, 2);
            const double* fm2 = shift(a, -2);
            for (int k = 0; k < N; ++k) {
              dF[a * N + k] = (-fp2[k] + 8.0 * fp[k] - 8.0 * fm[k] + fm2[k]) / (12.0 * h);
              d2F[(a * n + a) * N + k] =
                  (-fp2[k] + 16.0 * fp[k] - 30.0 * p0[k] + 16.0 * fm[k] - fm2[k]) /
                  (12.0 * h * h);
            }
          }
        }
        for (int a = 0; a < n; ++a) {
          for (int b = a + 1; b < n; ++b) {
            const double s = 1.0 / (4.0 * G.spacing[a] * G.spacing[b]);
            auto two = [&](int da, int db) {
              int d[3] = {0, 0, 0};
              d[a] = da;
              d[b] = db;
              return nodeAt(d[0], d[1], d[2]);
            };
            if (!fourth) {
              const double* fpp = two(1, 1);
              const double* fpm = two(1, -1);
              const double* fmp = two(-1, 1);
              const double* fmm = two(-1, -1);
              for (int k = 0; k < N; ++k) {
                const double v = (fpp[k] - fpm[k] - fmp[k] + fmm[k]) * s;
                d2F[(a * n + b) * N + k] = v;
                d2F[(b * n + a) * N + k] = v;
              }
            } else {
              static const int off[4] = {-2, -1, 1, 2};
              static const double cf[4] = {1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0};
              for (int k = 0; k < N; ++k) d2F[(a * n + b) * N + k] = 0.0;
              for (int ia = 0; ia < 4; ++ia)
                for (int ib = 0; ib < 4; ++ib) {
                  const double wgt =
                      cf[ia] * cf[ib] / (G.spacing[a] * G.spacing[b]);
                  const double* fv = two(off[ia], off[ib]);
                  for (int k = 0; k < N; ++k) d2F[(a * n + b) * N + k] += wgt * fv[k];
                }
              for (int k = 0; k < N; ++k) d2F[(b * n + a) * N + k] = d2F[(a * n + b) * N + k];
            }
          }
        }

        for (int a = 0; a < n; ++a)
          for (int b = a; b < n; ++b) {
            double s = 0.0;
            for (int k = 0; k < N; ++k) s += dF[a * N + k] * dF[b * N + k];
            g[a * n + b] = g[b * n + a] = s;
          }
        require(invert_metric(n, g, gInv), "flow-degenerate",
                "metric degenerates at node " + std::to_string(idx));

        // v = g^{ab} d2F_ab, then remove the tangential part.
        double* v = vel.data() + idx * N;
        for (int k = 0; k < N; ++k) {
          double s = 0.0;
          for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) s += gInv[a * n + b] * d2F[(a * n + b) * N + k];
          v[k] = s;
        }
        double proj[3];
        for (int a = 0; a < n; ++a) {
          double s = 0.0;
          for (int k = 0; k < N; ++k) s += dF[a * N + k] * v[k];
          proj[a] = s;
        }
        double coef[3];
        for (int a = 0; a < n; ++a) {
          double s = 0.0;
          for (int b = 0; b < n; ++b) s += gInv[a * n + b] * proj[b];
          coef[a] = s;
        }
        for (int a = 0; a < n; ++a)
          for (int k = 0; k < N; ++k) v[k] -= coef[a] * dF[a * N + k];
      }
    }
  }
  return vel;
}

double stability_bound(const GridImmersion& G, double kappa) {
  const int n = G.n;
  // Recompute the metric diagonal cheaply through the velocity-kernel path.
  double worst = 0.0;
  const int s0 = G.shape[0], s1 = n > 1 ? G.shape[1] : 1, s2 = n > 2 ? G.shape[2] : 1;
  size_t idx = 0;
  std::vector<double> dF(static_cast<size_t>(G.N) * n);
  double g[9], gInv[9];
  for (int i0 = 0; i0 < s0; ++i0)
    for (int i1 = 0; i1 < s1; ++i1)
      for (int i2 = 0; i2 < s2; ++i2, ++idx) {
        auto shift = [&](int axis, int d) {
          int c[3] = {i0, i1, i2};
          c[axis] = wrap(c[axis] + d, G.shape[axis]);
          size_t j = static_cast<size_t>(c[0]);
          if (n > 1) j = j * s1 + c[1];
          if (n > 2) j = j * s2 + c[2];
          return G.position(j);
        };
        for (int a = 0; a < n; ++a) {
          const double* fp = shift(a, 1);
          const double* fm = shift(a, -1);
          for (int k = 0; k < G.N; ++k)
            dF[a * G.N + k] = (fp[k] - fm[k]) / (2.0 * G.spacing[a]);
        }
        for (int a = 0; a < n; ++a)
          for (int b = a; b < n; ++b) {
            double s = 0.0;
            for (int k = 0; k < G.N; ++k) s += dF[a * G.N + k] * dF[b * G.N + k];
            g[a * n + b] = g[b * n + a] = s;
          }
        require(invert_metric(n, g, gInv), "flow-degenerate",
                "metric degenerates at node " + std::to_string(idx));
        double sum = 0.0;
        for (int a = 0; a < n; ++a)
          sum += 4.0 * gInv[a * n + a] / (G.spacing[a] * G.spacing[a]);
        worst = std::max(worst, sum);
      }
  return kappa / worst;
}

FlowState step_mcf(const FlowState& S, double dt) {
  const double bound = stability_bound(S.immersion);
  require(std::abs(dt) <= bound, "timestep-too-large",
          "dt = " + std::to_string(std::abs(dt)) + " exceeds the stability bound " +
              std::to_string(bound));

  const size_t total = S.immersion.positions.size();
  FlowState out = S;
  GridImmersion work = S.immersion;

  const auto k1 = mcf_velocity(S.immersion);
  for (size_t i = 0; i < total; ++i)
    work.positions[i] = S.immersion.positions[i] + 0.5 * dt * k1[i];
  const auto k2 = mcf_velocity(work);
  for (size_t i = 0; i < total; ++i)
    work.positions[i] = S.immersion.positions[i] + 0.5 * dt * k2[i];
  const auto k3 = mcf_velocity(work);
  for (size_t i = 0; i < total; ++i)
    work.positions[i] = S.immersion.positions[i] + dt * k3[i];
  const auto k4 = mcf_velocity(work);

  for (size_t i = 0; i < total; ++i)
    out.immersion.positions[i] =
        S.immersion.positions[i] +
        dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  out.t = S.t + dt;
  out.stepIndex = S.stepIndex + (dt >= 0 ? 1 : -1);
  return out;
}

namespace {

// Laplace-Beltrami of a node scalar field at every node (second order).
std::vector<double> scalar_laplacian(const GeometryField& GF, const std::vector<double>& f) {
  const int n = GF.n;
  const int s0 = GF.shape[0], s1 = n > 1 ? GF.shape[1] : 1, s2 = n > 2 ? GF.shape[2] : 1;
  std::vector<double> out(f.size(), 0.0);
  size_t idx = 0;
  for (int i0 = 0; i0 < s0; ++i0)
    for (int i1 = 0; i1 < s1; ++i1)
      for (int i2 = 0; i2 < s2; ++i2, ++idx) {
        auto at = [&](int d0, int d1, int d2) {
          size_t j = static_cast<size_t>(wrap(i0 + d0, s0));
          if (n > 1) j = j * s1 + wrap(i1 + d1, s1);
          if (n > 2) j = j * s2 + wrap(i2 + d2, s2);
          return f[j];
        };
        const NodeGeometry& nd = GF.nodes[idx];
        double d1f[3] = {0, 0, 0}, d2f[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
        for (int a = 0; a < n; ++a) {
          int da[3] = {0, 0, 0};
          da[a] = 1;
          const double h = GF.spacing[a];
          d1f[a] = (at(da[0], da[1], da[2]) - at(-da[0], -da[1], -da[2])) / (2.0 * h);
          d2f[a * n + a] =
              (at(da[0], da[1], da[2]) - 2.0 * f[idx] + at(-da[0], -da[1], -da[2])) / (h * h);
        }
        for (int a = 0; a < n; ++a)
          for (int b = a + 1; b < n; ++b) {
            int dd[3] = {0, 0, 0};
            auto two = [&](int sa, int sb) {
              dd[0] = dd[1] = dd[2] = 0;
              dd[a] = sa;
              dd[b] = sb;
              return at(dd[0], dd[1], dd[2]);
            };
            const double v = (two(1, 1) - two(1, -1) - two(-1, 1) + two(-1, -1)) /
                             (4.0 * GF.spacing[a] * GF.spacing[b]);
            d2f[a * n + b] = d2f[b * n + a] = v;
          }
        double lap = 0.0;
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) {
            double hess = d2f[a * n + b];
            for (int c = 0; c < n; ++c)
              hess -= nd.christoffel[(static_cast<size_t>(c) * n + a) * n + b] * d1f[c];
            lap += nd.gInv(a, b) * hess;
          }
        out[idx] = lap;
      }
  return out;
}

struct ScalarFields {
  std::vector<double> gEntries;  // node * n(n+1)/2
  std::vector<double> H2, A2, hatA2;
};

ScalarFields collect_fields(const GeometryField& GF) {
  const int n = GF.n;
  const int nPairs = n * (n + 1) / 2;
  ScalarFields out;
  const size_t count = GF.nodes.size();
  out.gEntries.resize(count * nPairs);
  out.H2 = GF.H2;
  out.A2 = GF.A2;
  out.hatA2 = GF.hatA2;
  for (size_t idx = 0; idx < count; ++idx) {
    int k = 0;
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) out.gEntries[idx * nPairs + k++] = GF.nodes[idx].g(a, b);
  }
  return out;
}

}  // namespace

EvolutionResiduals verify_evolution_equations(const FlowState& S, double dt) {
  require(dt > 0.0, "precondition-error", "dt must be positive");
  const FlowState plus = step_mcf(S, dt);
  const FlowState minus = step_mcf(S, -dt);

  const GeometryField GF = compute_geometry(S.immersion);
  const ScalarFields now = collect_fields(GF);
  const ScalarFields fwd = collect_fields(compute_geometry(plus.immersion));
  const ScalarFields bwd = collect_fields(compute_geometry(minus.immersion));

  const int n = GF.n;
  const int nPairs = n * (n + 1) / 2;
  const size_t count = GF.nodes.size();

  const auto lapH2 = scalar_laplacian(GF, now.H2);
  const auto lapA2 = scalar_laplacian(GF, now.A2);
  const auto lapHatA2 = scalar_laplacian(GF, now.hatA2);

  EvolutionResiduals res;
  for (size_t idx = 0; idx < count; ++idx) {
    const NodeGeometry& nd = GF.nodes[idx];

    // d/dt g_ab = -2 <A_ab, H>
    int k = 0;
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b, ++k) {
        const double fd =
            (fwd.gEntries[idx * nPairs + k] - bwd.gEntries[idx * nPairs + k]) / (2.0 * dt);
        double rhs = 0.0;
        for (int al = 0; al < GF.m; ++al) rhs += nd.A[al](a, b) * nd.H[al];
        res.g = std::max(res.g, std::abs(fd + 2.0 * rhs));
      }

    const auto J = GF.jet_at(idx);
    const auto G = derive_gradient_quantities(J);
    const auto R = reaction_terms(J.dec);

    const double fdH2 = (fwd.H2[idx] - bwd.H2[idx]) / (2.0 * dt);
    res.H2 = std::max(res.H2,
                      std::abs(fdH2 - (lapH2[idx] - 2.0 * G.gradH2 + 2.0 * R.AdotH2)));

    const double fdA2 = (fwd.A2[idx] - bwd.A2[idx]) / (2.0 * dt);
    res.A2 = std::max(
        res.A2,
        std::abs(fdA2 - (lapA2[idx] - 2.0 * G.normGradA2 + 2.0 * (R.AA2 + R.Rperp2))));

    const double fdHatA2 = (fwd.hatA2[idx] - bwd.hatA2[idx]) / (2.0 * dt);
    const double rhsHat = lapHatA2[idx] +
                          2.0 * (R.hatAA2 + R.hatRperp2 + R.Rperp_nu1_2) -
                          2.0 * (G.hatGradHatA2 + G.projHatA2) + 4.0 * G.QdotHatAGradNu;
    res.hatA2 = std::max(res.hatA2, std::abs(fdHatA2 - rhsHat));
  }
  return res;
}

FlowRun run_flow(const FlowState& S0, const FlowPolicy& policy) {
  FlowRun run;
  const int n = S0.immersion.n;
  run.insideTheoremHypothesis = n >= 5;
  run.c0 = policy.c0 > 0.0 ? policy.c0 : formal_cn(n);
  run.sigma = policy.sigma;

  FlowState S = S0;
  double lastMaxA2 = 0.0;
  double lastMinF = std::numeric_limits<double>::infinity();
  auto record = [&](const FlowState& state) {
    const GeometryField GF = compute_geometry(state.immersion);
    DiagnosticsRecord rec;
    rec.t = state.t;
    rec.step = state.stepIndex;
    rec.minF = std::numeric_limits<double>::infinity();
    lastMaxA2 = 0.0;
    for (size_t i = 0; i < GF.nodes.size(); ++i) {
      const double f = run.c0 * GF.H2[i] - GF.A2[i];
      rec.minF = std::min(rec.minF, f);
      rec.maxH2 = std::max(rec.maxH2, GF.H2[i]);
      lastMaxA2 = std::max(lastMaxA2, GF.A2[i]);
      if (GF.H2[i] > 0.0) {
        rec.maxPinchRatio = std::max(rec.maxPinchRatio, GF.A2[i] / GF.H2[i]);
        if (std::isfinite(GF.hatA2[i])) {
          rec.maxHatAoverH2s = std::max(
              rec.maxHatAoverH2s, GF.hatA2[i] / std::pow(GF.H2[i], 1.0 - 0.5 * run.sigma));
          if (f > 0.0)
            rec.maxHatAoverF1s = std::max(rec.maxHatAoverF1s,
                                          GF.hatA2[i] / std::pow(f, 1.0 - run.sigma));
        }
      }
    }
    lastMinF = rec.minF;
    if (policy.verifyEvolution) {
      const double dtv = policy.dt > 0.0 ? policy.dt : stability_bound(state.immersion);
      const auto ev = verify_evolution_equations(state, dtv);
      rec.resG = ev.g;
      rec.resH2 = ev.H2;
      rec.resA2 = ev.A2;
      rec.resHatA2 = ev.hatA2;
    }
    run.records.push_back(rec);
  };

  record(S);
  for (long step = 1; step <= policy.maxSteps && run.stopReason.empty(); ++step) {
    double dt = policy.dt > 0.0 ? policy.dt : stability_bound(S.immersion);
    bool lastStep = false;
    if (S.t + dt >= policy.tEnd - 1e-15 * std::max(1.0, policy.tEnd)) {
      dt = policy.tEnd - S.t;
      lastStep = true;
      if (dt <= 0.0) {
        run.stopReason = "t-end";
        break;
      }
    }
    S = step_mcf(S, dt);

    const bool atRecord =
        (step % policy.recordEvery == 0) || lastStep || step == policy.maxSteps;
    if (!atRecord) continue;

    record(S);
    if (lastMaxA2 > policy.maxA2) run.stopReason = "max-A2-exceeded";
    if (lastMinF < policy.minF) run.stopReason = "min-f-reached";
    if (lastStep && run.stopReason.empty()) run.stopReason = "t-end";
    if (step == policy.maxSteps && run.stopReason.empty()) run.stopReason = "max-steps";
  }
  if (run.stopReason.empty()) run.stopReason = "max-steps";
  run.records.back().stopReason = run.stopReason;
  run.finalImmersion = S.immersion;
  return run;
}

std::string diagnostics_csv(const FlowRun& run) {
  std::string out =
      "t,min_f,max_pinch_ratio,max_hatA_over_f1s,max_hatA_over_H2s,max_H2,"
      "res_g,res_H2,res_A2,res_hatA2,stop_reason\n";
  char buf[640];
  for (const auto& r : run.records) {
    std::snprintf(buf, sizeof buf,
                  "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%s\n", r.t,
                  r.minF, r.maxPinchRatio, r.maxHatAoverF1s, r.maxHatAoverH2s, r.maxH2, r.resG,
                  r.resH2, r.resA2, r.resHatA2, r.stopReason.c_str());
    out += buf;
  }
  return out;
}

}  // namespace pinchflow
