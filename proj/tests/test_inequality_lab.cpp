#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pinchflow/error.hpp"
#include "pinchflow/inequality_lab.hpp"
#include "test_util.hpp"

using namespace pinchflow;
using namespace pinchflow::testutil;

namespace {

CurvaturePoint product_sphere_point(int p, double a, int q, double b) {
  const int n = p + q;
  Eigen::MatrixXd A1 = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd A2 = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < p; ++i) A1(i, i) = 1.0 / a;
  for (int i = p; i < n; ++i) A2(i, i) = 1.0 / b;
  return make_point(n, 2, {A1, A2});
}

EvaluatedJet zero_jet_from(const CurvaturePoint& P) {
  return evaluate_jet(
      make_jet(P, std::vector<double>(static_cast<size_t>(P.n) * P.n * P.n * P.m, 0.0)));
}

double slack_floor(const EvaluatedJet& E) { return -1e-10 * std::pow(E.scale, 4); }

}  // namespace

TEST_CASE("sampler lands strictly inside the cone and is deterministic") {
  const auto K = make_constants(8, 0.0);
  Rng rng(42);
  SamplerStats stats;
  for (int i = 0; i < 10000; ++i) {
    const auto P = sample_pinched_point(8, 2, 1.0 / 6.0, rng, &stats);
    const auto D = decompose_curvature(P);
    CHECK(D.A2 < (1.0 / 6.0) * D.H2);
    CHECK(D.normH > 0.0);
    CHECK(pinching_f(D, K) > 0.0);
  }
  CHECK(stats.accepted == stats.tried);

  // Byte-identical replay with the same seed.
  Rng r1(7), r2(7);
  const auto Pa = sample_pinched_point(6, 3, 0.19, r1);
  const auto Pb = sample_pinched_point(6, 3, 0.19, r2);
  for (int a = 0; a < 3; ++a) CHECK((Pa.A[a] - Pb.A[a]).cwiseAbs().maxCoeff() == 0.0);
  const auto Ja = sample_pinched_jet(6, 3, 0.19, r1);
  Rng r3(7);
  sample_pinched_point(6, 3, 0.19, r3);
  const auto Jb = sample_pinched_jet(6, 3, 0.19, r3);
  CHECK(Ja.T == Jb.T);

  CHECK_THROWS_WITH_AS(sample_pinched_point(8, 2, 0.1, r1), doctest::Contains("precondition"),
                       Error);
}

TEST_CASE("a nearly closed cone degenerates to umbilic points") {
  Rng rng(43);
  const int n = 8;
  const double c = 1.0 / n + 1e-9;
  for (int i = 0; i < 100; ++i) {
    const auto D = decompose_curvature(sample_pinched_point(n, 2, c, rng));
    // The traceless budget is (ratio - 1/n)|H|^2 <= 1e-9 |H|^2 << |H|^2/n.
    CHECK(D.hRing2 + D.hatA2 <= 1e-8 * D.H2);
    CHECK(D.hRing2 + D.hatA2 <= 1e-6 * D.H2 / n);
  }
}

TEST_CASE("ab estimates: trivial, commuting, and oracle cases") {
  // hatA = 0: both slacks vanish.
  auto sphere = make_point(8, 2, {Eigen::MatrixXd::Identity(8, 8), Eigen::MatrixXd::Zero(8, 8)});
  const auto Es = evaluate_point(sphere);
  const auto [s1, s2] = check_ab_estimates(Es);
  CHECK(s1.slack == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(s2.slack == doctest::Approx(0.0).epsilon(1e-14));

  // m = 2: a single normal direction beyond nu1 commutes with itself, so
  // hatRperp = 0 and the matrix-inequality slack is exactly |hatA|^4 / 2.
  Rng rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    const auto E = evaluate_point(sample_pinched_point(8, 2, 1.0 / 6.0, rng));
    const auto [a1, a2] = check_ab_estimates(E);
    CHECK(a1.slack >= -1e-10 * std::pow(E.scale, 4));
    CHECK(a2.slack ==
          doctest::Approx(0.5 * E.dec.hatA2 * E.dec.hatA2).epsilon(1e-12));
  }

  // Product-sphere oracle values.
  const auto Ep = evaluate_point(product_sphere_point(7, 1.0, 1, 1.0));
  const auto [p1, p2] = check_ab_estimates(Ep);
  CHECK(p1.slack == doctest::Approx(0.7056).epsilon(1e-12));
  CHECK(p2.slack == doctest::Approx(0.6272).epsilon(1e-12));
}

TEST_CASE("reaction-term estimates on the product-sphere oracle") {
  const auto K = make_constants(8, 0.0);
  const auto Ep = evaluate_point(product_sphere_point(7, 1.0, 1, 1.0));

  CHECK(check_reaction_upper(Ep).slack == doctest::Approx(2.0384).epsilon(1e-12));
  CHECK(check_reaction_lower(Ep, K).slack >= 0.0);
  CHECK(check_reaction_combined(Ep, K).slack > 0.0);

  // f = 1/3 at c0 = 1/6 feeds the ratio |hatA|^2/f = 3.36.
  CHECK(pinching_f(Ep.dec, K) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("reaction-lower throws outside the cone") {
  const auto K = make_constants(8, 0.0);
  // S^4 x S^4 is not c_n-pinched: ratio = 1/4 > 1/6.
  const auto E = evaluate_point(product_sphere_point(4, 1.0, 4, 1.0));
  CHECK_THROWS_WITH_AS(check_reaction_lower(E, K), doctest::Contains("outside-pinching-cone"),
                       Error);
}

TEST_CASE("reaction-combined slack is affine in delta with nonnegative coefficient") {
  Rng rng(31);
  auto K = make_constants(8, 0.0);
  for (int rep = 0; rep < 200; ++rep) {
    const auto E = evaluate_point(sample_pinched_point(8, 3, K.c0, rng));
    auto Ka = K, Kb = K;
    Ka.delta = 0.1;
    Kb.delta = 0.4;
    const double sa = check_reaction_combined(E, Ka).slack;
    const double sb = check_reaction_combined(E, Kb).slack;
    const double f = pinching_f(E.dec, K);
    const double coeff = E.dec.hatA2 / f * reaction_gap(E.dec, E.reaction, f, K);
    CHECK(coeff >= -1e-10 * std::pow(E.scale, 4));
    // slack(delta) = slack(0) - delta * coeff.
    CHECK(sb - sa == doctest::Approx(-(0.4 - 0.1) * coeff)
                         .epsilon(1e-9)
                         .scale(std::max(1.0, std::abs(coeff))));
    // Larger delta gives smaller slack.
    CHECK(sb <= sa + 1e-10 * std::pow(E.scale, 4));
  }
}

TEST_CASE("batched point checkers stay nonnegative across dimensions") {
  for (int n : {8, 10}) {
    Rng rng(100 + n);
    const auto K = make_constants(n, 0.0);
    for (int m : {1, 2, 4}) {
      for (int i = 0; i < 2000; ++i) {
        const auto E = evaluate_point(sample_pinched_point(n, m, K.c0, rng));
        const double floor = -1e-10 * std::pow(E.scale, 4);
        const auto [a1, a2] = check_ab_estimates(E);
        CHECK(a1.slack >= floor);
        CHECK(a2.slack >= floor);
        CHECK(check_reaction_upper(E).slack >= floor);
        CHECK(check_reaction_lower(E, K).slack >= floor);
        CHECK(check_reaction_combined(E, K).slack >= floor);
      }
    }
  }
}

TEST_CASE("the sharp delta = 1/2 case stays nonnegative") {
  Rng rng(77);
  auto K = make_constants(8, 0.0);
  K.delta = 0.5;
  for (int i = 0; i < 5000; ++i) {
    const auto E = evaluate_point(sample_pinched_point(8, 2, K.c0, rng));
    CHECK(check_reaction_combined(E, K).slack >= -1e-10 * std::pow(E.scale, 4));
  }
}

TEST_CASE("zero jets sit on the boundary of the jet estimates") {
  const auto K = make_constants(8, 0.0);
  // Umbilic base + zero jet: f-evolution slack collapses to 0 exactly.
  auto E = zero_jet_from(
      make_point(8, 2, {Eigen::MatrixXd::Identity(8, 8), Eigen::MatrixXd::Zero(8, 8)}));
  const auto fe = check_f_evolution_lower(E, K);
  CHECK(fe.applicable);
  CHECK(fe.slack == doctest::Approx(0.0).epsilon(1e-12));

  const auto [b1, b2] = check_bochner_A(E, K);
  CHECK(b1.slack == 0.0);
  CHECK(b2.slack == 0.0);
  const auto [g1, g2] = check_gradient_Q(E, K);
  CHECK(g1.slack == 0.0);
  CHECK(g2.slack == 0.0);
  CHECK(check_gradient_combined(E, K).slack == 0.0);
}

TEST_CASE("jet checkers stay nonnegative for n = 8 (branch 1)") {
  Rng rng(200);
  const auto K = make_constants(8, 0.0);
  for (int m : {1, 3}) {
    for (int i = 0; i < 2000; ++i) {
      const auto E = evaluate_jet(sample_pinched_jet(8, m, K.c0, rng));
      const double floor = slack_floor(E);
      for (const auto& r : evaluate_all_checkers(E, K)) {
        if (!r.applicable) continue;
        INFO(r.name);
        CHECK(r.slack >= floor);
      }
    }
  }
}

TEST_CASE("jet checkers stay nonnegative for n = 5 (branch 2)") {
  Rng rng(300);
  const auto K = make_constants(5, 0.01);
  for (int i = 0; i < 2000; ++i) {
    const auto E = evaluate_jet(sample_pinched_jet(5, 3, K.c0, rng));
    const double floor = slack_floor(E);
    const auto reports = evaluate_all_checkers(E, K);
    bool sawBranch2 = false;
    for (const auto& r : reports) {
      if (!r.applicable) continue;
      INFO(r.name);
      CHECK(r.slack >= floor);
      sawBranch2 |= (r.name == "gradient-Q-2" || r.name == "bochner-f-2");
    }
    CHECK(sawBranch2);
  }
}

TEST_CASE("checker slacks are homogeneous of degree four") {
  Rng rng(400);
  const auto K = make_constants(8, 0.0);
  const auto J = sample_pinched_jet(8, 3, K.c0, rng);
  const auto E = evaluate_jet(J);

  const double lambda = 1.9;
  CurvaturePoint Ps = J.base;
  for (auto& Aa : Ps.A) Aa *= lambda;
  std::vector<double> Ts = J.T;
  for (auto& t : Ts) t *= lambda * lambda;
  const auto Es = evaluate_jet(make_jet(Ps, Ts));

  const auto r0 = evaluate_all_checkers(E, K);
  const auto r1 = evaluate_all_checkers(Es, K);
  const double l4 = std::pow(lambda, 4);
  for (size_t i = 0; i < r0.size(); ++i) {
    if (!r0[i].applicable) continue;
    INFO(r0[i].name);
    CHECK(r1[i].slack == doctest::Approx(l4 * r0[i].slack)
                             .epsilon(1e-11)
                             .scale(std::max(1.0, l4 * std::abs(r0[i].slack))));
  }
}

TEST_CASE("batch runner is deterministic and thread-count invariant") {
  BatchOptions opt;
  opt.n = 8;
  opt.m = 3;
  opt.count = 1500;
  opt.seed = 42;
  opt.threads = 1;
  const auto one = run_inequality_batch(opt);
  opt.threads = 2;
  const auto two = run_inequality_batch(opt);
  REQUIRE(one.size() == two.size());
  for (size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].minSlack == two[i].minSlack);
    CHECK(one[i].argminHash == two[i].argminHash);
    CHECK(one[i].count == two[i].count);
    CHECK(one[i].minScaledSlack >= -1e-10);
    CHECK(to_json_line(one[i]) == to_json_line(two[i]));
  }
}

TEST_CASE("violation search: commuting m = 2 case pins the matrix inequality") {
  const auto K = make_constants(8, 0.0);
  ViolationSearchOptions opt;
  opt.budget = 600;
  opt.restarts = 8;
  opt.seed = 9;
  const auto best = violation_search("ab-matrix", 8, 2, K, opt);
  CHECK(best.applicable);
  CHECK(best.slack >= -1e-10);
  // With one hat direction the slack is exactly rhs/3 = |hatA|^4 / 2.
  CHECK(best.slack == doctest::Approx(best.rhs / 3.0).epsilon(1e-10).scale(1.0));
}

TEST_CASE("violation search with budget 0 returns best-of-samples") {
  const auto K = make_constants(8, 0.0);
  ViolationSearchOptions opt;
  opt.budget = 0;
  opt.restarts = 16;
  opt.seed = 10;
  const auto best = violation_search("reaction-upper", 8, 3, K, opt);
  CHECK(best.applicable);
  CHECK(!best.inputsHash.empty());
  CHECK(best.slack >= -1e-10);
}

TEST_CASE("violation search drives the sharp reaction estimate toward equality") {
  auto K = make_constants(8, 0.0);
  K.delta = 0.5;  // the coefficients of the proof become equalities
  ViolationSearchOptions opt;
  opt.budget = 4000;
  opt.restarts = 10;
  opt.seed = 11;
  const auto best = violation_search("reaction-combined", 8, 2, K, opt);
  CHECK(best.slack >= -1e-10);

  // Umbilic-limit cross-check: the slack vanishes linearly in |hatA|^2.
  Rng rng(12);
  Eigen::MatrixXd hatA = 1e-5 * random_symmetric_traceless(8, rng);
  Eigen::MatrixXd A1 = Eigen::MatrixXd::Identity(8, 8);
  const auto E = evaluate_point(make_point(8, 2, {A1, hatA}));
  const double s = check_reaction_combined(E, K).slack;
  CHECK(s >= -1e-10);
  CHECK(s <= 1e-7);
  CHECK(best.slack <= 0.05);  // descent reached the near-equality region
}
