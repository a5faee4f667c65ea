#include "spinelab/cli.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "spinelab/error.hpp"
#include "spinelab/parallel.hpp"

namespace spinelab {
namespace {

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first == std::string::npos) throw SpecError(std::string("empty entry in ") + what);
    const std::string token = item.substr(first, last - first + 1);
    double v = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size())
      throw SpecError(std::string("cannot parse ") + what + " entry '" + token + "'");
    out.push_back(v);
  }
  if (out.empty()) throw SpecError(std::string(what) + " is empty");
  return out;
}

nlohmann::json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nlohmann::json mat_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) r[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(r);
  }
  return rows;
}

struct Context {
  ModelSpec spec;
  SpectralData sd;
  Vector mu;
  std::vector<double> eval;
  unsigned threads = 1;
  std::string hash;
};

Context prepare(const RunConfig& cfg, const std::vector<double>& default_eval) {
  Context ctx;
  ctx.spec = load_spec_file(cfg.spec_path);
  ctx.sd = analyse(ctx.spec);
  ctx.hash = spec_hash(ctx.spec);
  const int K = ctx.spec.K;
  if (cfg.mu.empty()) {
    ctx.mu = Vector::Zero(K);
    ctx.mu[0] = 1.0;
  } else {
    if (static_cast<int>(cfg.mu.size()) != K) throw SpecError("--mu needs " + std::to_string(K) + " entries");
    ctx.mu = Eigen::Map<const Vector>(cfg.mu.data(), K);
    if ((ctx.mu.array() < 0.0).any()) throw SpecError("--mu must be non-negative");
  }
  ctx.eval = cfg.eval_times.empty() ? default_eval : cfg.eval_times;
  if (!std::is_sorted(ctx.eval.begin(), ctx.eval.end()) || (!ctx.eval.empty() && ctx.eval.front() < 0.0))
    throw SpecError("eval times must be non-negative and increasing");
  ctx.threads = cfg.threads == 0 ? default_threads() : cfg.threads;
  return ctx;
}

nlohmann::json header_json(const RunConfig& cfg, const Context& ctx, const char* command) {
  return {{"tool", "spinelab"},
          {"version", kToolVersion},
          {"command", command},
          {"spec_hash", ctx.hash},
          {"seed", cfg.seed},
          {"thresholds", cfg.thresholds.to_json()}};
}

std::string header_csv(const RunConfig& cfg, const Context& ctx, const char* command) {
  std::ostringstream os;
  os << "# spinelab " << kToolVersion << " " << command << " spec_hash=" << ctx.hash << " seed=" << cfg.seed
     << " paths=" << cfg.n_paths << " horizon=" << num(cfg.horizon) << " mu=";
  for (Eigen::Index i = 0; i < ctx.mu.size(); ++i) os << (i ? "," : "") << num(ctx.mu[i]);
  os << "\n# thresholds " << cfg.thresholds.to_json().dump() << "\n";
  return os.str();
}

void emit(const RunConfig& cfg, std::ostream& out, const std::string& body) {
  if (cfg.out_path.empty()) {
    out << body;
    return;
  }
  std::ofstream f(cfg.out_path, std::ios::binary);
  if (!f) throw SpecError("cannot write " + cfg.out_path);
  f << body;
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw SpecError("cannot write " + path);
  f << body;
}

std::string trajectory_csv(const RunConfig& cfg, const Context& ctx, const TrajectoryBundle& b, const char* cmd) {
  std::ostringstream os;
  os << header_csv(cfg, ctx, cmd) << "path_id,t";
  for (int i = 0; i < b.K; ++i) os << ",X_" << (i + 1);
  os << "\n";
  for (std::size_t p = 0; p < b.n_paths; ++p)
    for (std::size_t e = 0; e < b.eval_times.size(); ++e) {
      os << p << "," << num(b.eval_times[e]);
      for (int i = 0; i < b.K; ++i) os << "," << num(b.masses[e](static_cast<Eigen::Index>(p), i));
      os << "\n";
    }
  return os.str();
}

int cmd_spectral(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Context ctx = prepare(cfg, {});
  const SpectralData& sd = ctx.sd;
  std::vector<double> grid;
  const double span = 10.0 / std::max(sd.gap, 1e-6);
  for (int k = 1; k <= 20; ++k) grid.push_back(span * k / 20.0);
  const Assumption4Report a4 = assumption4_scan(sd, grid, 1e-3);
  nlohmann::json scan = nlohmann::json::array();
  for (const auto& p : a4.points) scan.push_back({{"t", p.t}, {"deviation", p.deviation}});
  const RegimeClassification rc = classify_regime(ctx.spec, sd);
  nlohmann::json j = header_json(cfg, ctx, "spectral");
  j["Lambda"] = sd.Lambda;
  j["lambda1"] = sd.lambda1;
  j["u"] = vec_json(sd.u);
  j["v"] = vec_json(sd.v);
  j["h"] = vec_json(sd.h);
  j["h_hat"] = vec_json(sd.h_hat);
  j["q"] = vec_json(sd.q);
  j["Q_spine"] = mat_json(sd.Q_spine);
  j["pi_h"] = mat_json(sd.pi_h);
  j["rho"] = vec_json(sd.rho);
  j["gap"] = sd.gap;
  j["assumption4"] = scan;
  j["regime"] = to_string(rc.regime);
  emit(cfg, out, j.dump(2) + "\n");
  err << "Lambda=" << num(sd.Lambda) << " lambda1=" << num(sd.lambda1) << " regime=" << to_string(rc.regime)
      << "\n";
  return 0;
}

int cmd_forward(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Context ctx = prepare(cfg, {cfg.horizon});
  if (ctx.eval.back() > cfg.horizon) throw SpecError("eval times exceed the horizon");
  const ForwardSimulator sim(ctx.spec);
  const TrajectoryBundle b = ensemble(sim, ctx.mu, cfg.horizon, ctx.eval, cfg.n_paths, cfg.seed, ctx.threads);
  emit(cfg, out, trajectory_csv(cfg, ctx, b, "forward"));
  std::uint64_t events = 0;
  for (auto c : b.event_counts) events += c;
  err << "forward: " << b.n_paths << " paths, " << events << " jumps\n";
  return 0;
}

nlohmann::json realization_json(std::size_t p, const GammaRealization& g) {
  nlohmann::json segs = nlohmann::json::array(), revs = nlohmann::json::array(), imm = nlohmann::json::array();
  for (const auto& s : g.spine.segments) segs.push_back({s.state + 1, s.start, s.end});
  for (const auto& r : g.spine.revivals)
    revs.push_back({{"time", r.time}, {"from", r.from + 1}, {"to", r.to + 1}, {"log_mark", num(r.log_mark)}});
  for (const auto& e : g.events)
    imm.push_back({{"time", e.time},
                   {"kind", e.kind == ImmigrationKind::Revival ? "revival" : "discontinuous"},
                   {"type", e.type + 1},
                   {"log_mass", num(e.log_mass)},
                   {"initial", vec_json(e.initial)}});
  return {{"path_id", p}, {"segments", segs}, {"revivals", revs}, {"immigration", imm}};
}

int cmd_spine(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Context ctx = prepare(cfg, {cfg.horizon});
  if (ctx.eval.back() > cfg.horizon) throw SpecError("eval times exceed the horizon");
  const ForwardSimulator sim(ctx.spec);
  std::vector<GammaRealization> reals(cfg.n_paths);
  parallel_for(cfg.n_paths, ctx.threads, [&](std::size_t p) {
    Rng rng(cfg.seed, p);
    reals[p] = assemble_gamma(sim, ctx.sd, ctx.mu, cfg.horizon, ctx.eval, rng);
  });
  std::ostringstream os;
  os << header_csv(cfg, ctx, "spine") << "path_id,t";
  for (int i = 0; i < ctx.spec.K; ++i) os << ",Gamma_" << (i + 1);
  os << "\n";
  nlohmann::json paths = nlohmann::json::array();
  for (std::size_t p = 0; p < reals.size(); ++p) {
    for (std::size_t e = 0; e < ctx.eval.size(); ++e) {
      os << p << "," << num(ctx.eval[e]);
      for (int i = 0; i < ctx.spec.K; ++i) os << "," << num(reals[p].gamma[e][i]);
      os << "\n";
    }
    paths.push_back(realization_json(p, reals[p]));
  }
  emit(cfg, out, os.str());
  nlohmann::json side = header_json(cfg, ctx, "spine");
  side["horizon"] = cfg.horizon;
  side["paths"] = paths;
  if (!cfg.out_path.empty()) write_file(cfg.out_path + ".events.json", side.dump(1) + "\n");
  err << "spine: " << reals.size() << " realizations\n";
  return 0;
}

int cmd_verify_analytic(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const Context ctx = prepare(cfg, {0.0, 0.5, 1.0, 2.0});
  const int K = ctx.spec.K;
  Vector f = Vector::Ones(K);
  if (!cfg.f.empty()) {
    if (static_cast<int>(cfg.f.size()) != K) throw SpecError("--f needs " + std::to_string(K) + " entries");
    f = Eigen::Map<const Vector>(cfg.f.data(), K);
  }
  const CumulantSolution sol = solve_V(ctx.spec, f, ctx.eval, cfg.thresholds.ode);
  std::ostringstream os;
  os << header_csv(cfg, ctx, "verify-analytic") << "t";
  for (int i = 0; i < K; ++i) os << ",V_t_f_" << (i + 1);
  os << ",laplace,q_laplace,mean_check_residual\n";
  for (std::size_t e = 0; e < ctx.eval.size(); ++e) {
    const double t = ctx.eval[e];
    const double laplace = std::exp(-sol.V[e].dot(ctx.mu));
    const double ql = q_measure_laplace(ctx.spec, ctx.sd, ctx.mu, f, t, cfg.thresholds.ode);
    const double resid =
        (mean_semigroup(ctx.sd, f, t) - mean_semigroup_ode(ctx.spec, f, t, cfg.thresholds.ode)).cwiseAbs().maxCoeff();
    os << num(t);
    for (int i = 0; i < K; ++i) os << "," << num(sol.V[e][i]);
    os << "," << num(laplace) << "," << num(ql) << "," << num(resid) << "\n";
  }
  emit(cfg, out, os.str());
  return 0;
}

int cmd_verify_all(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  Context ctx = prepare(cfg, {0.5, 1.0, 2.0});
  SuiteOptions opt;
  opt.mu = ctx.mu;
  opt.eval_times = ctx.eval;
  opt.n_paths = cfg.n_paths;
  opt.seed = cfg.seed;
  opt.threads = ctx.threads;
  opt.config = cfg.thresholds;
  const SuiteReport report = run_suite(ctx.spec, ctx.sd, opt);
  nlohmann::json j = header_json(cfg, ctx, "verify");
  j["paths"] = cfg.n_paths;
  j["eval_times"] = ctx.eval;
  j["mu"] = vec_json(ctx.mu);
  j["results"] = report.to_json(cfg.thresholds.z_max);
  j["pass"] = report.pass;
  emit(cfg, out, j.dump(2) + "\n");
  std::size_t failed = 0;
  for (const auto& e : report.estimates) failed += e.passes(cfg.thresholds.z_max) ? 0 : 1;
  err << "verify: " << report.estimates.size() - failed << "/" << report.estimates.size() << " passed\n";
  return report.pass ? 0 : 1;
}

int cmd_kslimit(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  Context ctx = prepare(cfg, {});
  const double lam = std::abs(ctx.sd.lambda1);
  if (cfg.eval_times.empty()) {
    const double top = lam > 1e-12 ? 10.0 / lam : cfg.horizon;
    ctx.eval.clear();
    for (int k = 1; k <= 6; ++k) ctx.eval.push_back(top * k / 6.0);
  }
  const ForwardSimulator sim(ctx.spec);
  const RegimeReport report =
      kesten_stigum_experiment(sim, ctx.sd, ctx.mu, ctx.eval, cfg.n_paths, cfg.seed, ctx.threads, cfg.thresholds);
  nlohmann::json j = header_json(cfg, ctx, "kslimit");
  j["paths"] = cfg.n_paths;
  j["mu"] = vec_json(ctx.mu);
  j["experiment"] = report.to_json();
  bool pass = report.consistent;
  if (ctx.sd.lambda1 > 0.0) {
    const TrajectoryBundle b =
        ensemble(sim, ctx.mu, ctx.eval.back(), ctx.eval, cfg.n_paths, cfg.seed, ctx.threads, CapPolicy::Censor);
    const ExtinctionReport ext = weak_extinction_test(b, ctx.sd, cfg.thresholds);
    j["weak_extinction"] = ext.to_json();
    pass = pass && ext.passes();
  }
  j["pass"] = pass;
  emit(cfg, out, j.dump(2) + "\n");
  err << "kslimit: classification=" << to_string(report.classification.regime)
      << " verdict=" << to_string(report.verdict) << (report.consistent ? " (consistent)" : " (disagrees)") << "\n";
  return pass ? 0 : 1;
}

}  // namespace

std::string spec_hash(const ModelSpec& spec) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : spec_to_json(spec)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    switch (config.command) {
      case Command::Spectral: return cmd_spectral(config, out, err);
      case Command::Forward: return cmd_forward(config, out, err);
      case Command::Spine: return cmd_spine(config, out, err);
      case Command::VerifyAll: return cmd_verify_all(config, out, err);
      case Command::VerifyAnalytic: return cmd_verify_analytic(config, out, err);
      case Command::KsLimit: return cmd_kslimit(config, out, err);
    }
  } catch (const EventCapError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const SpecError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulation and verification lab for multitype CSBPs and their spine decomposition", "spinelab"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string mu, eval, f, ladder;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--spec", cfg.spec_path, "model spec JSON")->required();
    sub->add_option("--out", cfg.out_path, "output file (default stdout)");
    sub->add_option("--threads", cfg.threads, "worker threads (default SPINELAB_THREADS or all cores)");
  };
  auto sampling = [&](CLI::App* sub) {
    sub->add_option("--mu", mu, "initial masses, comma separated (default delta at type 1)");
    sub->add_option("--paths", cfg.n_paths, "number of paths");
    sub->add_option("--seed", cfg.seed, "master seed");
  };
  auto thresholds = [&](CLI::App* sub) {
    sub->add_option("--z-max", cfg.thresholds.z_max, "pass threshold on |z|");
    sub->add_option("--median-keep", cfg.thresholds.median_keep, "non-degenerate median cutoff");
    sub->add_option("--median-collapse", cfg.thresholds.median_collapse, "degenerate median cutoff");
    sub->add_option("--epsilon", cfg.thresholds.extinction_level, "weak-extinction level");
  };

  auto* spectral = app.add_subcommand("spectral", "Perron data, spine generator and ergodicity scan");
  common(spectral);

  auto* forward = app.add_subcommand("forward", "forward Monte Carlo trajectories as CSV");
  common(forward);
  sampling(forward);
  forward->add_option("--horizon", cfg.horizon, "final time")->required();
  forward->add_option("--eval", eval, "evaluation times, comma separated (default horizon)");

  auto* spine = app.add_subcommand("spine", "spine decomposition realizations as CSV plus events sidecar");
  common(spine);
  sampling(spine);
  spine->add_option("--horizon", cfg.horizon, "final time")->required();
  spine->add_option("--eval", eval, "evaluation times, comma separated (default horizon)");

  auto* verify = app.add_subcommand("verify", "statistical verification suite (default: all)");
  common(verify);
  sampling(verify);
  thresholds(verify);
  verify->add_option("--eval", eval, "evaluation times (default 0.5,1,2)");
  verify->require_subcommand(0, 1);
  auto* v_all = verify->add_subcommand("all", "full Monte Carlo suite, JSON report");
  auto* v_analytic = verify->add_subcommand("analytic", "cumulant ODE values as CSV");
  v_analytic->add_option("--f", f, "test function, comma separated (default all ones)");
  v_all->fallthrough();
  v_analytic->fallthrough();

  auto* ks = app.add_subcommand("kslimit", "Kesten-Stigum experiment on a T ladder");
  common(ks);
  sampling(ks);
  thresholds(ks);
  ks->add_option("--ladder", ladder, "increasing horizons (default six rungs up to 10/|lambda1|)");
  ks->add_option("--horizon", cfg.horizon, "top rung when lambda1 = 0");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (!mu.empty()) cfg.mu = parse_list(mu, "--mu");
    if (!eval.empty()) cfg.eval_times = parse_list(eval, "--eval");
    if (!ladder.empty()) cfg.eval_times = parse_list(ladder, "--ladder");
    if (!f.empty()) cfg.f = parse_list(f, "--f");
  } catch (const SpecError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  if (cfg.n_paths < 1) {
    err << "error: --paths must be positive\n";
    return 2;
  }

  if (spectral->parsed())
    cfg.command = Command::Spectral;
  else if (forward->parsed())
    cfg.command = Command::Forward;
  else if (spine->parsed())
    cfg.command = Command::Spine;
  else if (verify->parsed())
    cfg.command = v_analytic->parsed() ? Command::VerifyAnalytic : Command::VerifyAll;
  else
    cfg.command = Command::KsLimit;
  return run(cfg, out, err);
}

}  // namespace spinelab
