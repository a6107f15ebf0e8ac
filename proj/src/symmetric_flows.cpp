#include "pinchflow/symmetric_flows.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "pinchflow/error.hpp"

namespace pinchflow {

namespace {

void validate(const ProductSphereState& S) {
  require(S.p >= 1, "precondition-error", "sphere factor dimension must be >= 1");
  require(S.q >= 0, "precondition-error", "second factor dimension must be >= 0");
  require(S.a > 0.0 && (S.roundMode() || S.b > 0.0), "precondition-error",
          "radii must be positive");
}

}  // namespace

ProductSphereScalars product_sphere_scalars(const ProductSphereState& S) {
  validate(S);
  ProductSphereScalars r;
  r.u = S.p / (S.a * S.a);
  r.v = S.roundMode() ? 0.0 : S.q / (S.b * S.b);
  r.A2 = r.u + r.v;
  r.H2 = S.p * r.u + S.q * r.v;
  const int n = S.n();
  r.hatA2 = n * r.u * r.v / r.H2;
  r.h2 = (S.p * r.u * r.u + S.q * r.v * r.v) / r.H2;
  r.hRing2 = r.h2 - r.H2 / n;
  r.pinchRatio = r.A2 / r.H2;
  return r;
}

CurvaturePoint product_sphere_point(const ProductSphereState& S) {
  validate(S);
  const int n = S.n();
  const int m = S.roundMode() ? 1 : 2;
  std::vector<Eigen::MatrixXd> A(m, Eigen::MatrixXd::Zero(n, n));
  for (int i = 0; i < S.p; ++i) A[0](i, i) = 1.0 / S.a;
  if (!S.roundMode())
    for (int i = S.p; i < n; ++i) A[1](i, i) = 1.0 / S.b;
  return make_point(n, m, std::move(A));
}

DecomposedCurvature product_sphere_curvature(const ProductSphereState& S) {
  return decompose_curvature(product_sphere_point(S));
}

double collapse_time(const ProductSphereState& S) {
  validate(S);
  const double ta = S.a * S.a / (2.0 * S.p);
  if (S.roundMode()) return ta;
  return std::min(ta, S.b * S.b / (2.0 * S.q));
}

ProductTrajectory evolve_product_sphere(const ProductSphereState& S0, double dt, double tEnd) {
  validate(S0);
  require(dt > 0.0, "precondition-error", "dt must be positive");
  require(tEnd >= 0.0, "precondition-error", "tEnd must be nonnegative");

  ProductTrajectory traj;
  const double tc = collapse_time(S0);
  double horizon = tEnd;
  if (tEnd >= tc) {
    traj.collapsed = true;
    traj.collapseTime = tc;
    // Truncate one step in front of the singular time.
    horizon = std::max(0.0, tc - dt);
  }

  ProductSphereState s = S0;
  s.t = 0.0;
  traj.states.push_back(s);

  auto rhsA = [&](double a) { return -S0.p / a; };
  auto rhsB = [&](double b) { return -S0.q / b; };

  double t = 0.0;
  while (t < horizon - 1e-15 * std::max(1.0, horizon)) {
    const double h = std::min(dt, horizon - t);
    const double a1 = rhsA(s.a), b1 = s.roundMode() ? 0.0 : rhsB(s.b);
    const double a2 = rhsA(s.a + 0.5 * h * a1),
                 b2 = s.roundMode() ? 0.0 : rhsB(s.b + 0.5 * h * b1);
    const double a3 = rhsA(s.a + 0.5 * h * a2),
                 b3 = s.roundMode() ? 0.0 : rhsB(s.b + 0.5 * h * b2);
    const double a4 = rhsA(s.a + h * a3), b4 = s.roundMode() ? 0.0 : rhsB(s.b + h * b3);
    s.a += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
    if (!s.roundMode()) s.b += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
    t += h;
    s.t = t;
    require(s.a > 0.0 && (s.roundMode() || s.b > 0.0), "precondition-error",
            "integrator stepped past factor collapse");
    traj.states.push_back(s);
  }
  return traj;
}

MonotonicityReport monotonicity_report(const ProductTrajectory& traj,
                                       const PinchingConstants& K) {
  require(!traj.states.empty(), "precondition-error", "empty trajectory");
  MonotonicityReport rep;
  rep.rows.reserve(traj.states.size());

  for (const auto& s : traj.states) {
    const auto c = product_sphere_scalars(s);
    MonotonicityRow row;
    row.t = s.t;
    row.a = s.a;
    row.b = s.roundMode() ? std::numeric_limits<double>::quiet_NaN() : s.b;
    row.f = K.c0 * c.H2 - c.A2;
    row.pinchRatio = c.pinchRatio;
    row.hatA2 = c.hatA2;
    row.ratioFsigma = row.f > 0.0 ? c.hatA2 / std::pow(row.f, 1.0 - K.sigma)
                                  : std::numeric_limits<double>::quiet_NaN();
    row.ratioHsigma = c.hatA2 / std::pow(c.H2, 1.0 - 0.5 * K.sigma);
    rep.rows.push_back(row);
  }

  require(rep.rows.front().pinchRatio < K.c0, "precondition-error",
          "initial state is not c0-pinched");

  rep.initialF = rep.rows.front().f;
  rep.pinchingPreserved = true;
  rep.fNondecreasing = true;
  rep.fStrictlyIncreasing = true;
  rep.ratioFNonincreasing = true;
  rep.ratioHBounded = true;
  rep.maxRatioHsigma = rep.rows.front().ratioHsigma;

  const double tol = 1e-10;
  for (size_t i = 0; i < rep.rows.size(); ++i) {
    const auto& row = rep.rows[i];
    rep.maxRatioHsigma = std::max(rep.maxRatioHsigma, row.ratioHsigma);
    if (!(row.f > 0.0)) rep.pinchingPreserved = false;
    if (i == 0) continue;
    const auto& prev = rep.rows[i - 1];
    if (row.f < prev.f - tol * std::max(1.0, std::abs(prev.f))) rep.fNondecreasing = false;
    if (!(row.f > prev.f)) rep.fStrictlyIncreasing = false;
    if (row.ratioFsigma > prev.ratioFsigma + tol * std::max(1.0, std::abs(prev.ratioFsigma)))
      rep.ratioFNonincreasing = false;
    if (row.ratioHsigma >
        rep.rows.front().ratioHsigma + tol * std::max(1.0, rep.rows.front().ratioHsigma))
      rep.ratioHBounded = false;
  }
  return rep;
}

std::string trajectory_csv(const MonotonicityReport& report) {
  std::string out = "t,a,b,f,pinch_ratio,hatA2,ratio_f_sigma,ratio_H_sigma\n";
  char buf[512];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t,
                  r.a, r.b, r.f, r.pinchRatio, r.hatA2, r.ratioFsigma, r.ratioHsigma);
    out += buf;
  }
  return out;
}

}  // namespace pinchflow
