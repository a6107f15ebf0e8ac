#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pinchflow/error.hpp"
#include "pinchflow/tensor_core.hpp"
#include "test_util.hpp"

using namespace pinchflow;
using namespace pinchflow::testutil;

namespace {

// Closed-form curvature of S^p(a) x S^q(b): in a tangent frame ordered
// (sphere directions, circle directions) the two normal components are
// diag((1/a) I_p, 0) and diag(0, (1/b) I_q). Used here as the hand-checkable
// oracle; the flow backend has its own copy under test.
CurvaturePoint product_sphere_point(int p, double a, int q, double b) {
  const int n = p + q;
  Eigen::MatrixXd A1 = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd A2 = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < p; ++i) A1(i, i) = 1.0 / a;
  for (int i = p; i < n; ++i) A2(i, i) = 1.0 / b;
  return make_point(n, 2, {A1, A2});
}

CurvaturePoint round_sphere_point(int n, double r, int m = 1) {
  std::vector<Eigen::MatrixXd> A(m, Eigen::MatrixXd::Zero(n, n));
  A[0] = (1.0 / r) * Eigen::MatrixXd::Identity(n, n);
  return make_point(n, m, A);
}

}  // namespace

TEST_CASE("make_constants reproduces the dimensional constants") {
  const auto K8 = make_constants(8, 0.0);
  CHECK(K8.cn == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(K8.c0 == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(K8.delta == doctest::Approx(1.0 / 32.0).epsilon(1e-15));
  CHECK(K8.sigma == K8.delta);
  CHECK(K8.c2 == doctest::Approx(1.0 / 6.0).epsilon(1e-15));

  const auto K5 = make_constants(5, 0.01);
  CHECK(K5.cn == doctest::Approx(9.0 / 35.0).epsilon(1e-15));
  CHECK(K5.c0 == doctest::Approx(9.0 / 35.0 - 0.01).epsilon(1e-15));
  CHECK(K5.eps == doctest::Approx(2.0 * 5 * 7 * 0.01 / (3.0 * 4)).epsilon(1e-15));
  CHECK(K5.delta == doctest::Approx(std::min(1.0 / 17.0, K5.eps)).epsilon(1e-15));

  // The two formulas coincide at n = 7.
  const auto K7 = make_constants(7, 0.001);
  CHECK(K7.cn == doctest::Approx(4.0 / 21.0).epsilon(1e-15));
  CHECK(3.0 * 8.0 / (2.0 * 7.0 * 9.0) == doctest::Approx(4.0 / 21.0).epsilon(1e-15));

  CHECK_THROWS_WITH_AS(make_constants(4, 0.0), doctest::Contains("unsupported-dimension"), Error);
  CHECK_THROWS_WITH_AS(make_constants(5, 0.0), doctest::Contains("invalid-slack"), Error);
  // 9/35 - 1/5 = 2/35, so anything above that collapses the cone.
  CHECK_THROWS_WITH_AS(make_constants(5, 0.06), doctest::Contains("invalid-slack"), Error);
  CHECK_THROWS_WITH_AS(make_constants(8, -1e-3), doctest::Contains("invalid-slack"), Error);
}

TEST_CASE("decompose_curvature on the round sphere S^8(1)") {
  const auto D = decompose_curvature(round_sphere_point(8, 1.0, 3));
  CHECK(D.H2 == doctest::Approx(64.0).epsilon(1e-14));
  CHECK(D.hatA2 <= 1e-24);
  CHECK(D.hRing2 <= 1e-24);
  CHECK(D.A2 == doctest::Approx(8.0).epsilon(1e-14));
}

TEST_CASE("decompose_curvature on S^7(1) x S^1(1) in R^10") {
  const auto D = decompose_curvature(product_sphere_point(7, 1.0, 1, 1.0));
  CHECK(D.H2 == doctest::Approx(50.0).epsilon(1e-13));
  CHECK(D.hRing2 == doctest::Approx(0.63).epsilon(1e-13));
  CHECK(D.hatA2 == doctest::Approx(1.12).epsilon(1e-13));
  CHECK(D.A2 == doctest::Approx(8.0).epsilon(1e-13));
  CHECK(D.hatA2 + D.hRing2 + D.H2 / 8.0 == doctest::Approx(D.A2).epsilon(1e-13));
}

TEST_CASE("pure trace along one normal reduces to codimension one") {
  Rng rng(11);
  Eigen::MatrixXd B = random_symmetric(6, rng);
  B += (std::abs(B.trace()) + 3.0) * Eigen::MatrixXd::Identity(6, 6);
  std::vector<Eigen::MatrixXd> A(4, Eigen::MatrixXd::Zero(6, 6));
  A[2] = B;
  const auto D = decompose_curvature(make_point(6, 4, A));
  CHECK(D.hatA2 <= 1e-22 * D.A2);
}

TEST_CASE("decompose_curvature refuses degenerate mean curvature") {
  Rng rng(12);
  Eigen::MatrixXd B = random_symmetric_traceless(5, rng);
  CHECK_THROWS_WITH_AS(decompose_curvature(make_point(5, 1, {B})),
                       doctest::Contains("degenerate-mean-curvature"), Error);
}

TEST_CASE("round-trip reconstruction reproduces the input point") {
  Rng rng(21);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 3 + static_cast<int>(rng.uniform() * 8);
    const int m = 1 + static_cast<int>(rng.uniform() * 4);
    CurvaturePoint P;
    P.n = n;
    P.m = m;
    P.g = (rep % 2 == 0) ? Eigen::MatrixXd::Identity(n, n) : random_spd(n, rng);
    for (int a = 0; a < m; ++a) P.A.push_back(random_symmetric(n, rng));
    P.A[0] += 4.0 * Eigen::MatrixXd::Identity(n, n);  // keep |H| > 0

    const auto D = decompose_curvature(P);
    const auto Q = reconstruct_point(D);
    double scale = curvature_scale(P);
    for (int a = 0; a < m; ++a) {
      CHECK((Q.A[a] - P.A[a]).cwiseAbs().maxCoeff() <= 1e-12 * scale);
    }
    CHECK((Q.g - P.g).cwiseAbs().maxCoeff() <= 1e-12 * P.g.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("normal-frame rotations leave every scalar invariant") {
  Rng rng(31);
  const auto K = make_constants(8, 0.0);
  for (int rep = 0; rep < 40; ++rep) {
    const int n = 8;
    const int m = 2 + static_cast<int>(rng.uniform() * 3);
    CurvaturePoint P;
    P.n = n;
    P.m = m;
    P.g = Eigen::MatrixXd::Identity(n, n);
    for (int a = 0; a < m; ++a) P.A.push_back(random_symmetric(n, rng));
    P.A[0] += 3.0 * Eigen::MatrixXd::Identity(n, n);

    const auto Q = random_orthogonal(m, rng);
    const auto Pr = rotate_normal_frame(P, Q);

    const auto D = decompose_curvature(P);
    const auto Dr = decompose_curvature(Pr);
    const auto R = reaction_terms(D);
    const auto Rr = reaction_terms(Dr);

    const double tol = 1e-12;
    CHECK(Dr.A2 == doctest::Approx(D.A2).epsilon(tol));
    CHECK(Dr.H2 == doctest::Approx(D.H2).epsilon(tol));
    CHECK(Dr.hatA2 == doctest::Approx(D.hatA2).epsilon(tol));
    CHECK(Dr.hRing2 == doctest::Approx(D.hRing2).epsilon(tol));
    CHECK(pinching_f(Dr, K) == doctest::Approx(pinching_f(D, K)).epsilon(tol));
    const double s4 = std::pow(curvature_scale(P), 4);
    CHECK(std::abs(Rr.AdotH2 - R.AdotH2) <= tol * s4);
    CHECK(std::abs(Rr.AA2 - R.AA2) <= tol * s4);
    CHECK(std::abs(Rr.Rperp2 - R.Rperp2) <= tol * s4);
    CHECK(std::abs(Rr.Rperp_nu1_2 - R.Rperp_nu1_2) <= tol * s4);
    CHECK(std::abs(Rr.hatRperp2 - R.hatRperp2) <= tol * s4);
    CHECK(std::abs(Rr.hRingHatA2 - R.hRingHatA2) <= tol * s4);
  }
}

TEST_CASE("reaction terms: hatA = 0 collapses the identities") {
  const auto D = decompose_curvature(round_sphere_point(8, 1.0, 2));
  const auto R = reaction_terms(D);
  CHECK(R.Rperp2 == 0.0);
  CHECK(R.AA2 == doctest::Approx(D.h2 * D.h2).epsilon(1e-14));
}

TEST_CASE("reaction terms on the product-sphere oracle") {
  const auto D = decompose_curvature(product_sphere_point(7, 1.0, 1, 1.0));
  const auto R = reaction_terms(D);
  // Hand-computed diagonal contraction: trace(hRing * hatA) = -0.84.
  CHECK(R.hRingHatA2 == doctest::Approx(0.7056).epsilon(1e-13));
  CHECK(R.Rperp_nu1_2 <= 1e-20);
  CHECK(R.hatRperp2 <= 1e-20);
  // One hat direction, so |<hatA,hatA>|^2 = |hatA|^4.
  CHECK(R.hatAA2 == doctest::Approx(1.2544).epsilon(1e-13));
  CHECK(R.hatAA2 == doctest::Approx(D.hatA2 * D.hatA2).epsilon(1e-13));
}

TEST_CASE("reaction-term cross-identities hold for random points") {
  Rng rng(41);
  for (int n = 5; n <= 10; ++n) {
    for (int m = 1; m <= 4; ++m) {
      for (int rep = 0; rep < 250; ++rep) {
        CurvaturePoint P;
        P.n = n;
        P.m = m;
        P.g = (rep % 5 == 0) ? random_spd(n, rng) : Eigen::MatrixXd::Identity(n, n);
        for (int a = 0; a < m; ++a) P.A.push_back(random_symmetric(n, rng));
        P.A[0] += 2.5 * Eigen::MatrixXd::Identity(n, n);
        const auto D = decompose_curvature(P);
        const auto res = reaction_identity_residuals(P, D);
        CHECK(res.max() <= 1e-12);
      }
    }
  }
}

TEST_CASE("pinching_f on closed forms") {
  const auto K = make_constants(8, 0.0);
  const auto Dsphere = decompose_curvature(round_sphere_point(8, 1.0));
  CHECK(pinching_f(Dsphere, K) == doctest::Approx(8.0 / 3.0).epsilon(1e-14));
  CHECK(pinching_identity_residual(Dsphere, K) <= 1e-13);

  const auto Dprod = decompose_curvature(product_sphere_point(7, 1.0, 1, 1.0));
  CHECK(pinching_f(Dprod, K) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(pinching_identity_residual(Dprod, K) <= 1e-13);

  // Boundary of the pinching cone: |A|^2 = c0 |H|^2 exactly.
  Rng rng(55);
  auto P = round_sphere_point(8, 1.0);
  const auto D0 = decompose_curvature(P);
  const double lambda = std::sqrt(D0.A2 / (K.c0 * D0.H2));
  // Scaling A does not move the ratio; instead mix in traceless part.
  // Construct diag matrix with |A|^2 = c0 |H|^2: use a multiple of a
  // rank-one trace direction plus traceless noise solved for the boundary.
  Eigen::MatrixXd hRing = random_symmetric_traceless(8, rng);
  const double H2target = 64.0;
  // |A|^2 = |hRing|^2 s^2 + H2/n; choose s so that |A|^2 = c0 H2.
  const double s2 = (K.c0 * H2target - H2target / 8.0) / hRing.squaredNorm();
  Eigen::MatrixXd A0 =
      std::sqrt(s2) * hRing + (std::sqrt(H2target) / 8.0) * Eigen::MatrixXd::Identity(8, 8);
  const auto Db = decompose_curvature(make_point(8, 1, {A0}));
  CHECK(pinching_f(Db, K) == doctest::Approx(0.0).epsilon(1e-11));
  (void)lambda;
}

TEST_CASE("scaling covariance: A -> lambda A") {
  Rng rng(61);
  const int n = 7, m = 3;
  CurvaturePoint P;
  P.n = n;
  P.m = m;
  P.g = Eigen::MatrixXd::Identity(n, n);
  for (int a = 0; a < m; ++a) P.A.push_back(random_symmetric(n, rng));
  P.A[0] += 3.0 * Eigen::MatrixXd::Identity(n, n);

  const double lambda = 1.7;
  CurvaturePoint Ps = P;
  for (auto& Aa : Ps.A) Aa *= lambda;

  const auto K = make_constants(7, 0.001);
  const auto D = decompose_curvature(P);
  const auto Ds = decompose_curvature(Ps);
  const double l2 = lambda * lambda, l4 = l2 * l2;
  CHECK(Ds.H2 == doctest::Approx(l2 * D.H2).epsilon(1e-13));
  CHECK(Ds.A2 == doctest::Approx(l2 * D.A2).epsilon(1e-13));
  CHECK(Ds.hatA2 == doctest::Approx(l2 * D.hatA2).epsilon(1e-13));
  CHECK(pinching_f(Ds, K) == doctest::Approx(l2 * pinching_f(D, K)).epsilon(1e-13));
  const auto R = reaction_terms(D);
  const auto Rs = reaction_terms(Ds);
  CHECK(Rs.AA2 == doctest::Approx(l4 * R.AA2).epsilon(1e-13));
  CHECK(Rs.Rperp2 == doctest::Approx(l4 * R.Rperp2).epsilon(1e-13));
  CHECK(Rs.AdotH2 == doctest::Approx(l4 * R.AdotH2).epsilon(1e-13));
}
