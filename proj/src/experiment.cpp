#include "pinchflow/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <vector>

#include <json.hpp>

#include "pinchflow/error.hpp"
#include "pinchflow/flow_engine.hpp"
#include "pinchflow/inequality_lab.hpp"
#include "pinchflow/symmetric_flows.hpp"

namespace pinchflow {

namespace {

using nlohmann::json;

// Deterministic float formatting: 17 significant digits round-trip exactly.
std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string qerr(const std::string& key) { return "field \"" + key + "\""; }

// Config accessor that rejects unknown keys and reports missing ones.
class Config {
public:
  Config(const json& j, std::string scope) : j_(j), scope_(std::move(scope)) {
    require(j_.is_object(), "validation", scope_ + " must be a JSON object");
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      require(seen_.count(it.key()) > 0, "validation",
              "unknown " + qerr(it.key()) + " in " + scope_);
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  json need(const std::string& key) const {
    seen_.insert(key);
    require(j_.contains(key), "validation", "missing " + qerr(key) + " in " + scope_);
    return j_.at(key);
  }

  template <typename T>
  T get(const std::string& key, T fallback) const {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      fail("validation", "bad type for " + qerr(key) + " in " + scope_);
    }
  }

  template <typename T>
  T req(const std::string& key) const {
    const json v = need(key);
    try {
      return v.get<T>();
    } catch (const json::exception&) {
      fail("validation", "bad type for " + qerr(key) + " in " + scope_);
    }
  }

  json raw(const std::string& key) const {
    seen_.insert(key);
    return j_.contains(key) ? j_.at(key) : json();
  }

private:
  const json& j_;
  std::string scope_;
  mutable std::set<std::string> seen_;
};

struct OutputPaths {
  std::filesystem::path dir;
  std::string baseName;
  std::filesystem::path summary() const { return dir / (baseName + ".summary.json"); }
  std::filesystem::path series(const std::string& tag) const {
    return dir / (baseName + "." + tag);
  }
};

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "runtime", "cannot open " + path.string() + " for writing");
  out << content;
  require(out.good(), "runtime", "short write to " + path.string());
}

PinchingConstants constants_from_config(const Config& cfg, int n) {
  const double eps0 = cfg.get<double>("eps0", n <= 7 ? 0.01 : 0.0);
  PinchingConstants K = make_constants(n, eps0);
  if (cfg.has("c0")) {
    const double c0 = cfg.get<double>("c0", K.c0);
    require(c0 <= K.cn * (1.0 + 1e-12), "validation", "c0 exceeds c_n");
    require(c0 > 1.0 / n, "validation", "c0 must exceed 1/n");
    K.c0 = c0;
  }
  if (cfg.has("delta")) {
    const double delta = cfg.get<double>("delta", K.delta);
    require(delta > 0.0 && delta <= 0.5, "validation", "delta must lie in (0, 1/2]");
    K.delta = delta;
    K.sigma = delta;
  }
  if (cfg.has("sigma")) {
    const double sigma = cfg.get<double>("sigma", K.sigma);
    require(sigma > 0.0 && sigma <= 0.5, "validation", "sigma must lie in (0, 1/2]");
    K.sigma = sigma;
  }
  return K;
}

// --- immersion specs ---------------------------------------------------------

GridImmersion immersion_from_config(const json& spec) {
  Config cfg(spec, "immersion");
  const std::string type = cfg.req<std::string>("type");
  GridImmersion G;
  if (type == "clifford-torus") {
    const auto radii = cfg.req<std::vector<double>>("radii");
    const auto shape = cfg.req<std::vector<int>>("shape");
    G = make_clifford_torus(static_cast<int>(radii.size()), radii, shape);
  } else if (type == "circle") {
    G = make_clifford_torus(1, {cfg.get<double>("radius", 1.0)},
                            {cfg.get<int>("nodes", 256)});
  } else if (type == "torus-of-revolution") {
    G = make_torus_of_revolution(cfg.get<double>("R", 2.0), cfg.get<double>("r", 0.5),
                                 cfg.get<int>("shape0", 64), cfg.get<int>("shape1", 32));
  } else if (type == "sphere-chart") {
    G = make_sphere_chart(cfg.get<double>("radius", 1.0), cfg.get<int>("shape0", 64),
                          cfg.get<int>("shape1", 64));
  } else if (type == "generic-torus4") {
    G = make_generic_torus4(cfg.get<double>("eps", 0.1), cfg.get<int>("shape0", 32),
                            cfg.get<int>("shape1", 32));
  } else {
    fail("validation", "unknown immersion type \"" + type + "\"");
  }
  if (cfg.has("perturb")) {
    Config p(cfg.raw("perturb"), "immersion.perturb");
    G = make_graph_perturbation(G, p.req<double>("eps"), p.req<int>("targetN"),
                                p.req<std::vector<int>>("waves"),
                                p.get<uint64_t>("seed", 1));
    p.finish();
  }
  if (cfg.has("rotateInto")) {
    G = embed_rotated(G, cfg.req<int>("rotateInto"), cfg.get<uint64_t>("rotateSeed", 1),
                      cfg.get<bool>("translate", true));
  } else {
    cfg.get<uint64_t>("rotateSeed", 1);
    cfg.get<bool>("translate", true);
  }
  G.fourthOrder = cfg.get<bool>("fourthOrder", false);
  cfg.finish();
  return G;
}

// --- experiment kinds ----------------------------------------------------------

int run_inequality_batch_experiment(const Config& cfg, const OutputPaths& out, int threads,
                                    std::ostream& log) {
  BatchOptions opt;
  opt.n = cfg.req<int>("n");
  opt.m = cfg.req<int>("m");
  opt.count = cfg.get<uint64_t>("count", 10000);
  opt.seed = cfg.get<uint64_t>("seed", 1);
  opt.eps0 = cfg.get<double>("eps0", opt.n <= 7 ? 0.01 : 0.0);
  opt.threads = threads;
  require(!cfg.has("c0"), "validation", "inequality-batch derives c0 from (n, eps0)");
  cfg.finish();

  const auto summaries = run_inequality_batch(opt);

  std::string lines;
  bool pass = true;
  double worst = 0.0;
  for (const auto& s : summaries) {
    lines += to_json_line(s) + "\n";
    if (s.count > 0) {
      pass = pass && s.minScaledSlack >= -1e-10;
      worst = std::min(worst, s.minScaledSlack);
    }
  }
  write_file(out.series("batch.jsonl"), lines);

  std::string summary = "{\"kind\":\"inequality-batch\",\"n\":" + std::to_string(opt.n) +
                        ",\"m\":" + std::to_string(opt.m) +
                        ",\"count\":" + std::to_string(opt.count) +
                        ",\"seed\":" + std::to_string(opt.seed) +
                        ",\"worstScaledSlack\":" + fmt(worst) +
                        ",\"pass\":" + (pass ? "true" : "false") + ",\"checkers\":[\n";
  for (size_t i = 0; i < summaries.size(); ++i)
    summary += to_json_line(summaries[i]) + (i + 1 < summaries.size() ? ",\n" : "\n");
  summary += "]}\n";
  write_file(out.summary(), summary);
  log << "inequality-batch n=" << opt.n << " m=" << opt.m
      << " worstScaledSlack=" << fmt(worst) << (pass ? " PASS" : " FAIL") << "\n";
  return pass ? 0 : 1;
}

int run_violation_search_experiment(const Config& cfg, const OutputPaths& out,
                                    std::ostream& log) {
  const int n = cfg.req<int>("n");
  const int m = cfg.req<int>("m");
  const std::string checker = cfg.req<std::string>("checker");
  const PinchingConstants K = constants_from_config(cfg, n);
  ViolationSearchOptions opt;
  opt.budget = cfg.get<uint64_t>("budget", 2000);
  opt.restarts = cfg.get<uint64_t>("restarts", 32);
  opt.seed = cfg.get<uint64_t>("seed", 1);
  cfg.finish();

  const auto best = violation_search(checker, n, m, K, opt);
  const bool pass = best.slack >= -1e-10;
  std::string summary = "{\"kind\":\"violation-search\",\"checker\":\"" + checker +
                        "\",\"n\":" + std::to_string(n) + ",\"m\":" + std::to_string(m) +
                        ",\"minSlack\":" + fmt(best.slack) + ",\"lhs\":" + fmt(best.lhs) +
                        ",\"rhs\":" + fmt(best.rhs) + ",\"argminHash\":\"" + best.inputsHash +
                        "\",\"pass\":" + (pass ? "true" : "false") + "}\n";
  write_file(out.summary(), summary);
  log << "violation-search " << checker << " minSlack=" << fmt(best.slack)
      << (pass ? " PASS" : " FAIL") << "\n";
  return pass ? 0 : 1;
}

int run_identity_suite_experiment(const Config& cfg, const OutputPaths& out,
                                  std::ostream& log) {
  const int n = cfg.req<int>("n");
  const int m = cfg.req<int>("m");
  const uint64_t count = cfg.get<uint64_t>("count", 10000);
  const uint64_t seed = cfg.get<uint64_t>("seed", 1);
  cfg.finish();

  const auto r = run_identity_suite(n, m, count, seed);
  const bool pass = r.worst() <= 1e-12;
  std::string summary = "{\"kind\":\"identity-suite\",\"n\":" + std::to_string(n) +
                        ",\"m\":" + std::to_string(m) +
                        ",\"count\":" + std::to_string(r.count) +
                        ",\"maxReaction\":" + fmt(r.maxReaction) +
                        ",\"maxDerivative\":" + fmt(r.maxDerivative) +
                        ",\"maxCodazzi\":" + fmt(r.maxCodazzi) + ",\"maxQ\":" + fmt(r.maxQ) +
                        ",\"pass\":" + (pass ? "true" : "false") + "}\n";
  write_file(out.summary(), summary);
  log << "identity-suite n=" << n << " m=" << m << " worst=" << fmt(r.worst())
      << (pass ? " PASS" : " FAIL") << "\n";
  return pass ? 0 : 1;
}

int run_product_flow_experiment(const Config& cfg, const OutputPaths& out,
                                std::ostream& log) {
  ProductSphereState S0;
  S0.p = cfg.req<int>("p");
  S0.q = cfg.get<int>("q", 0);
  S0.a = cfg.get<double>("a", 1.0);
  S0.b = cfg.get<double>("b", 1.0);
  const double dt = cfg.get<double>("dt", 1e-6);
  const double tEnd = cfg.req<double>("tEnd");
  const PinchingConstants K = constants_from_config(cfg, S0.n());
  cfg.get<uint64_t>("seed", 1);  // accepted for config uniformity
  cfg.finish();

  const auto traj = evolve_product_sphere(S0, dt, tEnd);
  const auto rep = monotonicity_report(traj, K);
  write_file(out.series("trajectory.csv"), trajectory_csv(rep));

  const bool pass = rep.pinchingPreserved && rep.fNondecreasing && rep.ratioFNonincreasing &&
                    rep.ratioHBounded;
  std::string summary =
      "{\"kind\":\"product-flow\",\"p\":" + std::to_string(S0.p) +
      ",\"q\":" + std::to_string(S0.q) + ",\"a\":" + fmt(S0.a) + ",\"b\":" + fmt(S0.b) +
      ",\"c0\":" + fmt(K.c0) + ",\"sigma\":" + fmt(K.sigma) + ",\"steps\":" +
      std::to_string(rep.rows.size()) + ",\"collapsed\":" +
      (traj.collapsed ? "true" : "false") + ",\"collapseTime\":" + fmt(traj.collapseTime) +
      ",\"initialF\":" + fmt(rep.initialF) +
      ",\"pinchingPreserved\":" + (rep.pinchingPreserved ? "true" : "false") +
      ",\"fNondecreasing\":" + (rep.fNondecreasing ? "true" : "false") +
      ",\"fStrictlyIncreasing\":" + (rep.fStrictlyIncreasing ? "true" : "false") +
      ",\"ratioFNonincreasing\":" + (rep.ratioFNonincreasing ? "true" : "false") +
      ",\"ratioHBounded\":" + (rep.ratioHBounded ? "true" : "false") +
      ",\"maxRatioHsigma\":" + fmt(rep.maxRatioHsigma) +
      ",\"pass\":" + (pass ? "true" : "false") + "}\n";
  write_file(out.summary(), summary);
  log << "product-flow S^" << S0.p << "xS^" << S0.q << " flags "
      << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? 0 : 1;
}

int run_grid_flow_experiment(const Config& cfg, const OutputPaths& out, std::ostream& log) {
  const GridImmersion G = immersion_from_config(cfg.need("immersion"));
  FlowPolicy policy;
  policy.dt = cfg.get<double>("dt", 0.0);
  policy.tEnd = cfg.get<double>("tEnd", std::numeric_limits<double>::infinity());
  policy.maxSteps = cfg.get<long>("maxSteps", 1000);
  policy.recordEvery = cfg.get<int>("recordEvery", 10);
  policy.maxA2 = cfg.get<double>("maxA2", std::numeric_limits<double>::infinity());
  policy.minF = cfg.get<double>("minF", -std::numeric_limits<double>::infinity());
  policy.verifyEvolution = cfg.get<bool>("verifyEvolution", false);
  policy.c0 = cfg.get<double>("c0", 0.0);
  policy.sigma = cfg.get<double>("sigma", 1.0 / 32.0);
  const std::string snapshot = cfg.get<std::string>("saveImmersion", "");
  cfg.finish();

  const auto run = run_flow(FlowState{G, 0.0, 0}, policy);
  write_file(out.series("diagnostics.csv"), diagnostics_csv(run));
  if (!snapshot.empty()) {
    const auto path = out.dir / snapshot;
    save_immersion(run.finalImmersion, path.string(),
                   "{\"kind\":\"grid-flow-final\",\"t\":" + fmt(run.records.back().t) + "}");
  }

  std::string summary =
      "{\"kind\":\"grid-flow\",\"n\":" + std::to_string(G.n) +
      ",\"N\":" + std::to_string(G.N) + ",\"stopReason\":\"" + run.stopReason +
      "\",\"steps\":" + std::to_string(run.records.back().step) +
      ",\"insideTheoremHypothesis\":" + (run.insideTheoremHypothesis ? "true" : "false") +
      ",\"constantsFlag\":\"" +
      (run.insideTheoremHypothesis ? "" : "outside-theorem-hypothesis(n<5)") +
      "\",\"c0\":" + fmt(run.c0) + ",\"sigma\":" + fmt(run.sigma) +
      ",\"finalMinF\":" + fmt(run.records.back().minF) +
      ",\"finalMaxPinchRatio\":" + fmt(run.records.back().maxPinchRatio) +
      ",\"finalMaxHatAoverH2s\":" + fmt(run.records.back().maxHatAoverH2s) +
      ",\"pass\":true}\n";
  write_file(out.summary(), summary);
  log << "grid-flow n=" << G.n << " stop=" << run.stopReason << " PASS\n";
  return 0;
}

int run_planarity_experiment(const Config& cfg, const OutputPaths& out, std::ostream& log) {
  const GridImmersion G = immersion_from_config(cfg.need("immersion"));
  const double tol = cfg.get<double>("tol", 1e-6);
  const double expectBelow = cfg.get<double>("expectRatioBelow",
                                             std::numeric_limits<double>::infinity());
  const double expectAbove = cfg.get<double>("expectRatioAbove", 0.0);
  cfg.finish();

  const auto GF = compute_geometry(G);
  const auto rep = planarity_test(G, GF, tol);
  const bool pass = rep.maxHatARatio <= expectBelow && rep.maxHatARatio >= expectAbove;
  std::string summary =
      "{\"kind\":\"planarity\",\"n\":" + std::to_string(G.n) +
      ",\"N\":" + std::to_string(G.N) + ",\"maxHatARatio\":" + fmt(rep.maxHatARatio) +
      ",\"affineResidual\":" + fmt(rep.affineResidual) +
      ",\"estimatedCodim\":" + std::to_string(rep.estimatedCodim) +
      ",\"minConvexityEig\":" + fmt(rep.minConvexityEig) +
      ",\"pass\":" + (pass ? "true" : "false") + "}\n";
  write_file(out.summary(), summary);
  log << "planarity maxHatARatio=" << fmt(rep.maxHatARatio) << (pass ? " PASS" : " FAIL")
      << "\n";
  return pass ? 0 : 1;
}

// --- report subcommand ---------------------------------------------------------

int run_report(const std::vector<std::string>& paths, std::ostream& out) {
  struct BatchRow {
    double minSlack = 0.0, minScaledSlack = 0.0;
    uint64_t count = 0;
    std::string source;
  };
  std::map<std::string, BatchRow> lemmaRows;  // key "name|n|m"
  struct FlowRow {
    std::string flags;
    std::string source;
  };
  std::map<std::string, FlowRow> flowRows;
  std::vector<std::string> warnings;

  for (const auto& path : paths) {
    std::ifstream in(path);
    require(in.good(), "missing", "cannot open summary " + path);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      fail("missing", "cannot parse summary " + path + ": " + e.what());
    }
    const std::string kind = j.value("kind", "");
    if (kind == "inequality-batch") {
      for (const auto& c : j.value("checkers", json::array())) {
        const std::string key = c.value("name", "?") + "|" +
                                std::to_string(c.value("n", 0)) + "|" +
                                std::to_string(c.value("m", 0));
        if (lemmaRows.count(key))
          warnings.push_back("duplicate key " + key + ": " + path + " wins");
        lemmaRows[key] = {c.value("minSlack", 0.0), c.value("minScaledSlack", 0.0),
                          c.value("count", uint64_t{0}), path};
      }
    } else if (kind == "product-flow" || kind == "grid-flow") {
      const std::string key = kind + "|" + path;
      std::string flags = j.value("pass", false) ? "pass" : "fail";
      if (kind == "product-flow") {
        flags += j.value("pinchingPreserved", false) ? ",pinching" : ",NO-pinching";
        flags += j.value("ratioFNonincreasing", false) ? ",ratioF" : ",NO-ratioF";
        flags += j.value("ratioHBounded", false) ? ",ratioH" : ",NO-ratioH";
      } else {
        flags += ",stop=" + j.value("stopReason", std::string("?"));
      }
      flowRows[key] = {flags, path};
    }
    // Other kinds contribute nothing tabular; they are already summaries.
  }

  for (const auto& w : warnings) out << "warning: " << w << "\n";
  if (!lemmaRows.empty()) {
    out << "| lemma | n | m | min slack | min slack/scale^4 | samples |\n";
    out << "|---|---|---|---|---|---|\n";
    for (const auto& [key, row] : lemmaRows) {
      std::string name = key;
      std::replace(name.begin(), name.end(), '|', ' ');
      std::istringstream is(name);
      std::string lemma, n, m;
      is >> lemma >> n >> m;
      out << "| " << lemma << " | " << n << " | " << m << " | " << fmt(row.minSlack)
          << " | " << fmt(row.minScaledSlack) << " | " << row.count << " |\n";
    }
  }
  if (!flowRows.empty()) {
    out << "| flow | flags |\n|---|---|\n";
    for (const auto& [key, row] : flowRows)
      out << "| " << row.source << " | " << row.flags << " |\n";
  }
  return 0;
}

std::pair<int, int> line_column(const std::string& text, size_t byte) {
  int line = 1, col = 1;
  for (size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

IdentitySuiteResult run_identity_suite(int n, int m, uint64_t count, uint64_t seed) {
  require(n >= 1 && m >= 1, "validation", "identity suite needs n >= 1, m >= 1");
  Rng rng(seed);
  IdentitySuiteResult res;
  const size_t tSize = static_cast<size_t>(n) * n * n * m;
  for (uint64_t i = 0; i < count; ++i) {
    // General (unpinched) curvature data: the identities hold on all of it.
    CurvaturePoint P;
    P.n = n;
    P.m = m;
    P.g = Eigen::MatrixXd::Identity(n, n);
    P.A.resize(m);
    for (int a = 0; a < m; ++a) {
      Eigen::MatrixXd M(n, n);
      for (int r = 0; r < n; ++r)
        for (int c = r; c < n; ++c) M(r, c) = M(c, r) = rng.gaussian();
      P.A[a] = M;
    }
    P.A[0] += (2.0 + rng.uniform()) * Eigen::MatrixXd::Identity(n, n);

    std::vector<double> T(tSize, 0.0);
    auto at = [&](int a, int b, int c, int al) -> double& {
      return T[(static_cast<size_t>(a) * n + b) * n * m + static_cast<size_t>(c) * m + al];
    };
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b)
        for (int c = b; c < n; ++c)
          for (int al = 0; al < m; ++al) {
            const double v = rng.gaussian();
            at(a, b, c, al) = at(a, c, b, al) = at(b, a, c, al) = v;
            at(b, c, a, al) = at(c, a, b, al) = at(c, b, a, al) = v;
          }

    const auto J = make_jet(P, std::move(T));
    res.maxReaction =
        std::max(res.maxReaction, reaction_identity_residuals(P, J.dec).max());
    res.maxDerivative = std::max(res.maxDerivative, check_derivative_decomposition(J).max());
    res.maxCodazzi = std::max(res.maxCodazzi, check_traced_codazzi(J).max());
    res.maxQ = std::max(res.maxQ, q_route_residual(J));
    ++res.count;
  }
  return res;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty() || (args[0] != "run" && args[0] != "report")) {
    err << "usage: pinchflow run <config.json> [--threads K] [--out DIR]\n"
        << "       pinchflow report <summary.json>...\n";
    return 3;
  }

  if (args[0] == "report") {
    std::vector<std::string> paths(args.begin() + 1, args.end());
    try {
      return run_report(paths, out);
    } catch (const Error& e) {
      err << e.what() << "\n";
      return 2;
    }
  }

  // run subcommand
  std::string configPath;
  std::string outDir = ".";
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  for (size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--threads" && i + 1 < args.size()) {
      threads = std::max(1, std::atoi(args[++i].c_str()));
    } else if (args[i] == "--out" && i + 1 < args.size()) {
      outDir = args[++i];
    } else if (configPath.empty()) {
      configPath = args[i];
    } else {
      err << "unexpected argument " << args[i] << "\n";
      return 3;
    }
  }
  if (configPath.empty()) {
    err << "missing config path\n";
    return 3;
  }

  std::ifstream in(configPath, std::ios::binary);
  if (!in.good()) {
    err << "cannot open config " << configPath << "\n";
    return 2;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();

  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    err << "parse error at line " << line << ", column " << col << ": " << e.what() << "\n";
    return 2;
  }

  try {
    std::filesystem::create_directories(outDir);
    Config cfg(j, "config");
    const std::string kind = cfg.req<std::string>("kind");
    OutputPaths paths;
    paths.dir = outDir;
    paths.baseName = cfg.get<std::string>("name", kind);

    if (kind == "inequality-batch")
      return run_inequality_batch_experiment(cfg, paths, threads, out);
    if (kind == "violation-search") return run_violation_search_experiment(cfg, paths, out);
    if (kind == "identity-suite") return run_identity_suite_experiment(cfg, paths, out);
    if (kind == "product-flow") return run_product_flow_experiment(cfg, paths, out);
    if (kind == "grid-flow") return run_grid_flow_experiment(cfg, paths, out);
    if (kind == "planarity") return run_planarity_experiment(cfg, paths, out);
    fail("validation", "unknown experiment kind \"" + kind + "\"");
  } catch (const Error& e) {
    err << e.what() << "\n";
    const std::string kind = e.kind();
    if (kind == "validation") return 3;
    return 4;
  } catch (const std::exception& e) {
    err << "runtime failure: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace pinchflow
