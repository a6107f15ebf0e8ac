#include "pinchflow/inequality_lab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

#include "pinchflow/error.hpp"
#include "pinchflow/hash.hpp"

namespace pinchflow {

namespace {

constexpr double kBoundaryMargin = 1e-6;   // keep-away from the cone boundary
constexpr double kUmbilicMargin = 1e-9;    // keep-away from the umbilic axis

Eigen::MatrixXd gaussian_symmetric_traceless(int n, Rng& rng) {
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) M(i, j) = M(j, i) = rng.gaussian();
  M -= (M.trace() / n) * Eigen::MatrixXd::Identity(n, n);
  return M;
}

// Assembles the point from the cone coordinates (hRing, hatA, u): nu1 = e1,
// |H| fixed so that |A|^2/|H|^2 = 1/n + u (c - 1/n).
CurvaturePoint assemble_pinched(int n, int m, double c, const Eigen::MatrixXd& hRing,
                                const std::vector<Eigen::MatrixXd>& hatA, double u) {
  const double traceless2 = hRing.squaredNorm() +
                            [&] {
                              double s = 0.0;
                              for (const auto& M : hatA) s += M.squaredNorm();
                              return s;
                            }();
  const double ratio = 1.0 / n + u * (c - 1.0 / n);
  const double H2 = traceless2 / (ratio - 1.0 / n);
  const double normH = std::sqrt(H2);

  CurvaturePoint P;
  P.n = n;
  P.m = m;
  P.g = Eigen::MatrixXd::Identity(n, n);
  P.A.resize(m);
  P.A[0] = hRing + (normH / n) * Eigen::MatrixXd::Identity(n, n);
  for (int b = 1; b < m; ++b) P.A[b] = hatA[b - 1];
  return P;
}

void note_draw(SamplerStats* stats) {
  if (stats) {
    ++stats->tried;
    ++stats->accepted;
    if (stats->tried > 1000000 &&
        static_cast<double>(stats->accepted) < 1e-6 * static_cast<double>(stats->tried))
      fail("cone-too-thin", "sampler acceptance rate collapsed; enlarge the trace bias");
  }
}

}  // namespace

CurvaturePoint sample_pinched_point(int n, int m, double c, Rng& rng, SamplerStats* stats) {
  require(m >= 1, "precondition-error", "codimension must be at least 1");
  require(c > 1.0 / n, "precondition-error", "cone parameter must exceed 1/n");

  Eigen::MatrixXd hRing = gaussian_symmetric_traceless(n, rng);
  std::vector<Eigen::MatrixXd> hatA;
  for (int b = 1; b < m; ++b) hatA.push_back(gaussian_symmetric_traceless(n, rng));
  const double u =
      std::clamp(rng.uniform(), kUmbilicMargin, 1.0 - kBoundaryMargin);
  note_draw(stats);
  return assemble_pinched(n, m, c, hRing, hatA, u);
}

namespace {

std::vector<double> gaussian_symmetric_T(int n, int m, Rng& rng, double scale) {
  std::vector<double> T(static_cast<size_t>(n) * n * n * m, 0.0);
  auto at = [&](int i, int j, int k, int a) -> double& {
    return T[(static_cast<size_t>(i) * n + j) * n * m + static_cast<size_t>(k) * m + a];
  };
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      for (int k = j; k < n; ++k)
        for (int a = 0; a < m; ++a) {
          const double v = scale * rng.gaussian();
          at(i, j, k, a) = at(i, k, j, a) = at(j, i, k, a) = v;
          at(j, k, i, a) = at(k, i, j, a) = at(k, j, i, a) = v;
        }
  return T;
}

}  // namespace

CurvatureJet sample_pinched_jet(int n, int m, double c, Rng& rng, SamplerStats* stats) {
  CurvaturePoint P = sample_pinched_point(n, m, c, rng, stats);
  const double scale = curvature_scale(P);
  // T carries curvature^2 units; scaling by |A|^2 keeps the jet and point
  // contributions commensurate across the whole cone.
  return make_jet(std::move(P), gaussian_symmetric_T(n, m, rng, scale * scale));
}

EvaluatedPoint evaluate_point(const CurvaturePoint& P) {
  EvaluatedPoint E;
  E.dec = decompose_curvature(P);
  E.reaction = reaction_terms(E.dec);
  E.scale = curvature_scale(P);
  Fnv1a h;
  h.add(P.n);
  h.add(P.m);
  for (const auto& Aa : P.A)
    h.add_bytes(Aa.data(), sizeof(double) * Aa.size());
  E.hash = h.hex();
  return E;
}

EvaluatedJet evaluate_jet(CurvatureJet J) {
  EvaluatedJet E;
  E.grad = derive_gradient_quantities(J);
  E.reaction = reaction_terms(J.dec);
  Fnv1a h;
  h.add(J.base.n);
  h.add(J.base.m);
  for (const auto& Aa : J.base.A) h.add_bytes(Aa.data(), sizeof(double) * Aa.size());
  h.add_bytes(J.T.data(), sizeof(double) * J.T.size());
  E.hash = h.hex();
  E.scale = std::max(curvature_scale(J.base), std::sqrt(jet_scale(J)));
  E.jet = std::move(J);
  return E;
}

double reaction_gap(const DecomposedCurvature& D, const ReactionTerms& R, double f,
                    const PinchingConstants& K) {
  // Exact rewrite of c0 |<A,H>|^2 - |<A,A>|^2 - |R_perp|^2 in decomposition
  // pieces; avoids the |H|^4-level cancellation near the cone boundary.
  const double q = K.n * K.c0 - 1.0;
  return f * (f + 2.0 * D.hatA2 + D.hRing2) / q + f * D.hRing2 +
         D.hatA2 * D.hatA2 / q + (K.n * K.c0 / q) * D.hatA2 * D.hRing2 -
         2.0 * R.hRingHatA2 - 2.0 * R.Rperp_nu1_2 - R.hatAA2 - R.hatRperp2;
}

namespace {

SlackReport report(const char* name, double lhs, double rhs, const std::string& hash,
                   bool applicable = true) {
  SlackReport r;
  r.name = name;
  r.lhs = lhs;
  r.rhs = rhs;
  r.slack = rhs - lhs;
  r.inputsHash = hash;
  r.applicable = applicable;
  return r;
}

// Loose upper-bound comparisons for branch hypotheses.
bool leq(double a, double b) { return a <= b * (1.0 + 1e-12) + 1e-300; }

}  // namespace

std::pair<SlackReport, SlackReport> check_ab_estimates(const EvaluatedPoint& E) {
  const auto& D = E.dec;
  const auto& R = E.reaction;
  return {report("ab-simple", R.hRingHatA2 + R.Rperp_nu1_2, 2.0 * D.hRing2 * D.hatA2, E.hash),
          report("ab-matrix", R.hatAA2 + R.hatRperp2, 1.5 * D.hatA2 * D.hatA2, E.hash)};
}

SlackReport check_reaction_upper(const EvaluatedPoint& E) {
  const auto& D = E.dec;
  const auto& R = E.reaction;
  return report("reaction-upper", R.hatAA2 + R.hatRperp2 + R.Rperp_nu1_2,
                1.5 * D.hatA2 * D.hatA2 + 2.0 * D.hRing2 * D.hatA2, E.hash);
}

SlackReport check_reaction_lower(const EvaluatedPoint& E, const PinchingConstants& K) {
  const auto& D = E.dec;
  const double f = pinching_f(D, K);
  require(f > 0.0, "outside-pinching-cone", "reaction lower bound needs f > 0");
  require(K.c0 > 1.0 / K.n && leq(K.c0, 4.0 / (3.0 * K.n)), "precondition-error",
          "reaction lower bound needs 1/n < c0 <= 4/3n");
  const double q = K.n * K.c0 - 1.0;
  const double lhs = 2.0 / q * D.hatA2 * D.hatA2 + (K.n * K.c0 / q) * D.hRing2 * D.hatA2;
  const double rhs = D.hatA2 / f * reaction_gap(D, E.reaction, f, K);
  return report("reaction-lower", lhs, rhs, E.hash);
}

SlackReport check_reaction_combined(const EvaluatedPoint& E, const PinchingConstants& K) {
  const auto& D = E.dec;
  const auto& R = E.reaction;
  const double f = pinching_f(D, K);
  require(f > 0.0, "outside-pinching-cone", "reaction estimate needs f > 0");
  require(leq(K.delta, 0.5) && leq(K.c0, 4.0 / (3.0 * K.n)), "precondition-error",
          "reaction estimate needs delta <= 1/2 and c0 <= 4/3n");
  const double lhs = R.hatAA2 + R.hatRperp2 + R.Rperp_nu1_2;
  const double rhs = (1.0 - K.delta) * D.hatA2 / f * reaction_gap(D, R, f, K);
  return report("reaction-combined", lhs, rhs, E.hash);
}

SlackReport check_f_evolution_lower(const EvaluatedJet& E, const PinchingConstants& K) {
  const auto& D = E.jet.dec;
  const auto& G = E.grad;
  const double f = pinching_f(D, K);
  if (f < 0.0) return report("f-evolution-lower", 0.0, 0.0, E.hash, false);
  const double q = K.n * K.c0 - 1.0;
  const double evolution = 2.0 * (G.normGradA2 - K.c0 * G.gradH2) +
                           2.0 * reaction_gap(D, E.reaction, f, K);
  const double bound = 2.0 * D.h2 * f + 2.0 / q * D.hatA2 * f +
                       (1.0 - K.c0 * (K.n + 2.0) / 3.0) * G.normGradA2;
  return report("f-evolution-lower", bound, evolution, E.hash);
}

std::pair<SlackReport, SlackReport> check_bochner_A(const EvaluatedJet& E,
                                                    const PinchingConstants& K) {
  const auto& D = E.jet.dec;
  const auto& G = E.grad;
  const double n = K.n;
  const double f = pinching_f(D, K);
  const double gpn2 = G.gradPerpNu1_2;
  const double rhs = 2.0 * G.hatGradHatA2;

  const bool ok1 = leq(K.c0, 4.0 / (3.0 * n)) && f >= 0.0;
  const double lhs1 = ((4.0 * n - 10.0) / (n + 2.0) * D.hRing2 +
                       6.0 * (n - 1.0) / (n + 2.0) * (D.hatA2 + f)) *
                      gpn2;
  const bool ok2 = leq(K.c0, 3.0 * (n + 1.0) / (2.0 * n * (n + 2.0))) && f >= 0.0;
  const double lhs2 = (2.0 * D.hRing2 + 4.0 * D.hatA2 + 4.0 * f) * gpn2;

  return {report("bochner-A-1", ok1 ? lhs1 : 0.0, ok1 ? rhs : 0.0, E.hash, ok1),
          report("bochner-A-2", ok2 ? lhs2 : 0.0, ok2 ? rhs : 0.0, E.hash, ok2)};
}

std::pair<SlackReport, SlackReport> check_bochner_f(const EvaluatedJet& E,
                                                    const PinchingConstants& K) {
  const auto& D = E.jet.dec;
  const auto& G = E.grad;
  const double n = K.n;
  const double f = pinching_f(D, K);
  const bool havePositiveF = f > 0.0;
  const double ratio = havePositiveF ? D.hatA2 / f : 0.0;
  const double rhs = 2.0 * ratio * (G.normGradA2 - K.c0 * G.gradH2);

  const bool ok1 = havePositiveF && leq(K.c0, 4.0 / (3.0 * n));
  const double lhs1 = (5.0 * n - 8.0) / (3.0 * (n - 1.0)) * ratio * G.projRingA2 +
                      (10.0 * n - 16.0) / (n + 2.0) * D.hatA2 * G.gradPerpNu1_2;
  const bool ok2 = havePositiveF && leq(K.c0, 3.0 * (n + 1.0) / (2.0 * n * (n + 2.0)));
  const double lhs2 = 1.5 * ratio * G.projRingA2 + 6.0 * D.hatA2 * G.gradPerpNu1_2;

  return {report("bochner-f-1", ok1 ? lhs1 : 0.0, ok1 ? rhs : 0.0, E.hash, ok1),
          report("bochner-f-2", ok2 ? lhs2 : 0.0, ok2 ? rhs : 0.0, E.hash, ok2)};
}

std::pair<SlackReport, SlackReport> check_gradient_Q(const EvaluatedJet& E,
                                                     const PinchingConstants& K) {
  const auto& D = E.jet.dec;
  const auto& G = E.grad;
  const double n = K.n;
  const double f = pinching_f(D, K);
  require(f > 0.0, "outside-pinching-cone", "gradient term estimate needs f > 0");
  const double ratio = D.hatA2 / f;
  const double lhs = 4.0 * G.QdotHatAGradNu;
  const double gpn2 = G.gradPerpNu1_2;

  const bool ok1 = leq(K.c0, 4.0 / (3.0 * n));
  const double rhs1 = 2.0 * G.projHatA2 +
                      (5.0 * n - 9.0) / (3.0 * (n - 1.0)) * ratio * G.projRingA2 +
                      2.0 * D.hatA2 * gpn2 + 3.0 * (n - 1.0) / (n - 3.0) * f * gpn2 +
                      2.0 * (n + 2.0) / (n + 3.0) * D.hRing2 * gpn2;

  const bool ok2 = leq(K.c0, 3.0 * (n + 1.0) / (2.0 * n * (n + 2.0)) - K.eps0);
  const double rhs2 = 2.0 * G.projHatA2 + (1.0 - K.eps) * 1.5 * ratio * G.projRingA2 +
                      2.0 * D.hatA2 * gpn2 + 4.0 * f * gpn2 + 2.0 * D.hRing2 * gpn2;

  return {report("gradient-Q-1", ok1 ? lhs : 0.0, ok1 ? rhs1 : 0.0, E.hash, ok1),
          report("gradient-Q-2", ok2 ? lhs : 0.0, ok2 ? rhs2 : 0.0, E.hash, ok2)};
}

SlackReport check_gradient_combined(const EvaluatedJet& E, const PinchingConstants& K) {
  const auto& D = E.jet.dec;
  const auto& G = E.grad;
  const double n = K.n;
  const double f = pinching_f(D, K);
  require(f > 0.0, "outside-pinching-cone", "gradient term estimate needs f > 0");

  const bool branch1 = K.n >= 8 && leq(K.c0, 4.0 / (3.0 * n)) && leq(K.delta, 1.0 / (5.0 * n - 8.0));
  const bool branch2 = leq(K.c0, 3.0 * (n + 1.0) / (2.0 * n * (n + 2.0)) - K.eps0) &&
                       K.eps > 0.0 && leq(K.delta, std::min(0.5, K.eps));
  require(branch1 || branch2, "precondition-error",
          K.n >= 8 ? "n >= 8 branch needs delta <= 1/(5n-8) and c0 <= 4/3n"
                   : "n in {5,6,7} branch needs c0 <= 3(n+1)/2n(n+2) - eps0 and delta <= min(1/2, eps)");

  const double lhs = 4.0 * G.QdotHatAGradNu;
  const double rhs = 2.0 * (G.hatGradHatA2 + G.projHatA2) +
                     2.0 * (1.0 - K.delta) * D.hatA2 / f * (G.normGradA2 - K.c0 * G.gradH2);
  return report("gradient-combined", lhs, rhs, E.hash);
}

bool checker_needs_jet(const std::string& id) {
  return !(id == "ab-simple" || id == "ab-matrix" || id == "reaction-upper" ||
           id == "reaction-lower" || id == "reaction-combined");
}

std::vector<SlackReport> evaluate_all_checkers(const EvaluatedJet& E,
                                               const PinchingConstants& K) {
  EvaluatedPoint P;
  P.dec = E.jet.dec;
  P.reaction = E.reaction;
  P.hash = E.hash;
  P.scale = E.scale;

  std::vector<SlackReport> out;
  out.reserve(kCheckerIds.size());
  auto ab = check_ab_estimates(P);
  out.push_back(ab.first);
  out.push_back(ab.second);
  out.push_back(check_reaction_upper(P));
  out.push_back(check_reaction_lower(P, K));
  out.push_back(check_reaction_combined(P, K));
  out.push_back(check_f_evolution_lower(E, K));
  auto bA = check_bochner_A(E, K);
  out.push_back(bA.first);
  out.push_back(bA.second);
  auto bf = check_bochner_f(E, K);
  out.push_back(bf.first);
  out.push_back(bf.second);
  auto gQ = check_gradient_Q(E, K);
  out.push_back(gQ.first);
  out.push_back(gQ.second);
  out.push_back(check_gradient_combined(E, K));
  return out;
}

SlackReport run_checker(const std::string& id, const EvaluatedJet& E,
                        const PinchingConstants& K) {
  EvaluatedPoint P;
  P.dec = E.jet.dec;
  P.reaction = E.reaction;
  P.hash = E.hash;
  P.scale = E.scale;

  if (id == "ab-simple") return check_ab_estimates(P).first;
  if (id == "ab-matrix") return check_ab_estimates(P).second;
  if (id == "reaction-upper") return check_reaction_upper(P);
  if (id == "reaction-lower") return check_reaction_lower(P, K);
  if (id == "reaction-combined") return check_reaction_combined(P, K);
  if (id == "f-evolution-lower") return check_f_evolution_lower(E, K);
  if (id == "bochner-A-1") return check_bochner_A(E, K).first;
  if (id == "bochner-A-2") return check_bochner_A(E, K).second;
  if (id == "bochner-f-1") return check_bochner_f(E, K).first;
  if (id == "bochner-f-2") return check_bochner_f(E, K).second;
  if (id == "gradient-Q-1") return check_gradient_Q(E, K).first;
  if (id == "gradient-Q-2") return check_gradient_Q(E, K).second;
  if (id == "gradient-combined") return check_gradient_combined(E, K);
  fail("precondition-error", "unknown checker id: " + id);
}

std::vector<CheckerSummary> run_inequality_batch(const BatchOptions& opt) {
  const PinchingConstants K = make_constants(opt.n, opt.eps0);
  const int streams = static_cast<int>(kCheckerIds.size());

  // Fixed substream partition: results do not depend on the thread count.
  constexpr uint64_t kChunks = 64;
  struct ChunkResult {
    std::vector<double> minScaled;
    std::vector<double> minSlack;
    std::vector<std::string> argmin;
    std::vector<uint64_t> counted;
  };
  std::vector<ChunkResult> chunks(kChunks);

  const Rng root(opt.seed);
  std::atomic<uint64_t> nextChunk{0};
  const int nThreads = std::max(1, opt.threads);

  auto worker = [&]() {
    for (;;) {
      const uint64_t ci = nextChunk.fetch_add(1);
      if (ci >= kChunks) return;
      const uint64_t lo = opt.count * ci / kChunks;
      const uint64_t hi = opt.count * (ci + 1) / kChunks;
      Rng rng = root.substream(ci);
      ChunkResult& res = chunks[ci];
      res.minScaled.assign(streams, std::numeric_limits<double>::infinity());
      res.minSlack.assign(streams, std::numeric_limits<double>::infinity());
      res.argmin.assign(streams, "");
      res.counted.assign(streams, 0);
      for (uint64_t s = lo; s < hi; ++s) {
        const auto E = evaluate_jet(sample_pinched_jet(opt.n, opt.m, K.c0, rng));
        const double scale4 = std::pow(E.scale, 4);
        const auto reports = evaluate_all_checkers(E, K);
        for (int c = 0; c < streams; ++c) {
          if (!reports[c].applicable) continue;
          ++res.counted[c];
          const double scaled = reports[c].slack / scale4;
          if (scaled < res.minScaled[c]) {
            res.minScaled[c] = scaled;
            res.minSlack[c] = reports[c].slack;
            res.argmin[c] = reports[c].inputsHash;
          }
        }
      }
    }
  };

  if (nThreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nThreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<CheckerSummary> out(streams);
  for (int c = 0; c < streams; ++c) {
    CheckerSummary& s = out[c];
    s.name = kCheckerIds[c];
    s.n = opt.n;
    s.m = opt.m;
    s.c0 = K.c0;
    s.delta = K.delta;
    s.minScaledSlack = std::numeric_limits<double>::infinity();
    s.minSlack = std::numeric_limits<double>::infinity();
    for (uint64_t ci = 0; ci < kChunks; ++ci) {
      const ChunkResult& r = chunks[ci];
      if (r.minScaled.empty()) continue;
      s.count += r.counted[c];
      if (r.minScaled[c] < s.minScaledSlack) {
        s.minScaledSlack = r.minScaled[c];
        s.minSlack = r.minSlack[c];
        s.argminHash = r.argmin[c];
      }
    }
    if (s.count == 0) {
      s.minScaledSlack = 0.0;
      s.minSlack = 0.0;
    }
  }
  return out;
}

std::string to_json_line(const CheckerSummary& s) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "{\"name\":\"%s\",\"n\":%d,\"m\":%d,\"c0\":%.17g,\"delta\":%.17g,"
                "\"minSlack\":%.17g,\"minScaledSlack\":%.17g,\"argminHash\":\"%s\","
                "\"count\":%llu}",
                s.name.c_str(), s.n, s.m, s.c0, s.delta, s.minSlack, s.minScaledSlack,
                s.argminHash.c_str(), static_cast<unsigned long long>(s.count));
  return buf;
}

namespace {

// Candidate coordinates for the sharpness search: the cone parameters the
// sampler uses, flattened. The decode path normalizes |A| to 1 so slacks are
// comparable across candidates (every lemma is homogeneous of degree 4).
struct Candidate {
  int n = 0, m = 0;
  bool jet = false;
  std::vector<double> x;  // [hRing upper | hatA uppers | u | T entries]
};

size_t upper_count(int n) { return static_cast<size_t>(n) * (n + 1) / 2; }

Candidate random_candidate(int n, int m, bool jet, Rng& rng) {
  Candidate c;
  c.n = n;
  c.m = m;
  c.jet = jet;
  const size_t nu = upper_count(n);
  size_t total = nu * m + 1;
  const size_t tCount = jet ? static_cast<size_t>(n) * n * n * m : 0;
  total += tCount;
  c.x.resize(total);
  for (size_t i = 0; i < nu * m; ++i) c.x[i] = rng.gaussian();
  c.x[nu * m] = rng.uniform();
  for (size_t i = 0; i < tCount; ++i) c.x[nu * m + 1 + i] = rng.gaussian();
  return c;
}

Eigen::MatrixXd unpack_symmetric(const double* p, int n) {
  Eigen::MatrixXd M(n, n);
  size_t k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      M(i, j) = M(j, i) = p[k];
      ++k;
    }
  return M;
}

// Decodes a candidate into an evaluated, |A|-normalized jet sample.
EvaluatedJet decode(const Candidate& c, double coneC) {
  const int n = c.n, m = c.m;
  const size_t nu = upper_count(n);
  Eigen::MatrixXd hRing = unpack_symmetric(c.x.data(), n);
  hRing -= (hRing.trace() / n) * Eigen::MatrixXd::Identity(n, n);
  std::vector<Eigen::MatrixXd> hatA;
  for (int b = 1; b < m; ++b) {
    Eigen::MatrixXd M = unpack_symmetric(c.x.data() + nu * b, n);
    M -= (M.trace() / n) * Eigen::MatrixXd::Identity(n, n);
    hatA.push_back(M);
  }
  const double u = std::clamp(c.x[nu * m], kUmbilicMargin, 1.0 - kBoundaryMargin);
  CurvaturePoint P = assemble_pinched(n, m, coneC, hRing, hatA, u);

  const double lambda = 1.0 / curvature_scale(P);
  for (auto& Aa : P.A) Aa *= lambda;

  std::vector<double> T(static_cast<size_t>(n) * n * n * m, 0.0);
  if (c.jet) {
    // Symmetrize the raw block so the Codazzi constraint stays satisfied
    // throughout the search.
    auto raw = [&](int i, int j, int k, int a) {
      return c.x[nu * m + 1 +
                 ((static_cast<size_t>(i) * n + j) * n + k) * m + a];
    };
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int a = 0; a < m; ++a) {
            const double v = (raw(i, j, k, a) + raw(i, k, j, a) + raw(j, i, k, a) +
                              raw(j, k, i, a) + raw(k, i, j, a) + raw(k, j, i, a)) /
                             6.0;
            T[((static_cast<size_t>(i) * n + j) * n + k) * m + a] = v * lambda * lambda;
          }
  }
  return evaluate_jet(make_jet(std::move(P), std::move(T)));
}

double checker_slack(const std::string& id, const EvaluatedJet& E,
                     const PinchingConstants& K, SlackReport* out) {
  const SlackReport r = run_checker(id, E, K);
  if (out) *out = r;
  return r.applicable ? r.slack : std::numeric_limits<double>::infinity();
}

}  // namespace

SlackReport violation_search(const std::string& checkerId, int n, int m,
                             const PinchingConstants& K, const ViolationSearchOptions& opt) {
  bool known = false;
  for (const char* id : kCheckerIds) known |= (checkerId == id);
  require(known, "precondition-error", "unknown checker id: " + checkerId);
  const bool jet = checker_needs_jet(checkerId);

  Rng rng(opt.seed);
  SlackReport best;
  best.slack = std::numeric_limits<double>::infinity();
  best.applicable = false;

  const uint64_t restarts = std::max<uint64_t>(1, opt.restarts);
  const uint64_t perRestart = opt.budget / restarts;

  for (uint64_t r = 0; r < restarts; ++r) {
    Candidate cur = random_candidate(n, m, jet, rng);
    SlackReport curReport;
    double curSlack;
    try {
      curSlack = checker_slack(checkerId, decode(cur, K.c0), K, &curReport);
    } catch (const Error&) {
      continue;
    }
    if (curSlack < best.slack) best = curReport;

    double step = 0.4;
    int stale = 0;
    for (uint64_t e = 0; e < perRestart; ++e) {
      Candidate prop = cur;
      // Sparse Gaussian perturbation; the cone coordinate moves with the rest.
      for (auto& v : prop.x)
        if (rng.uniform() < 0.25) v += step * rng.gaussian();
      SlackReport propReport;
      double propSlack;
      try {
        propSlack = checker_slack(checkerId, decode(prop, K.c0), K, &propReport);
      } catch (const Error&) {
        continue;
      }
      if (propSlack < curSlack) {
        cur = std::move(prop);
        curSlack = propSlack;
        curReport = propReport;
        stale = 0;
      } else if (++stale >= 12) {
        step *= 0.5;
        stale = 0;
        if (step < 1e-6) break;
      }
      if (curSlack < best.slack) best = curReport;
    }
  }
  return best;
}

}  // namespace pinchflow
