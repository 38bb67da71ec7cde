#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include "kramers/dynamics.hpp"
#include "kramers/errors.hpp"
#include "kramers/exitlab.hpp"
#include "kramers/parallel.hpp"
#include "kramers/report.hpp"
#include "kramers/statistics.hpp"
#include "kramers/text.hpp"

namespace kramers::cli {

namespace {

// Stream identifiers; everything else derives from the master seed through
// derive_seed(seed, stream, index).
constexpr std::uint64_t kSimulateStream = 0x51;
constexpr std::uint64_t kSampleStream = 0x5A;

struct Context {
  const Invocation& inv;
  const ExperimentConfig& cfg;
  std::string config_text;
  std::filesystem::path out;
  Report manifest;

  std::string path(const std::string& name) const { return (out / name).string(); }

  void emit(const std::string& name, const std::string& content) {
    write_file(path(name), content);
    const std::string n = std::to_string(files++);
    manifest.set("file." + n + ".name", name);
    manifest.set("file." + n + ".fnv1a", hex64(fnv1a(content)));
  }

  int files = 0;
};

std::string vec_list(const std::vector<Vec>& points) {
  std::string s;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i) s += "; ";
    s += format_vec(points[i], ", ");
  }
  return s;
}

std::vector<Vec> parse_vec_list(const std::string& text) {
  std::vector<Vec> out;
  for (const auto& part : split(text, ';')) {
    if (trim(part).empty()) continue;
    const auto v = parse_list(part);
    out.push_back(Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  return out;
}

Report header(const Context& ctx) {
  Report r;
  r.set("command", ctx.inv.command);
  r.set("seed", std::to_string(ctx.cfg.seed));
  r.set("config.fnv1a", hex64(fnv1a(ctx.config_text)));
  return r;
}

bool cmd_simulate(Context& ctx) {
  const auto& cfg = ctx.cfg;
  if (cfg.epsilons.empty()) throw ConfigError("run.epsilon is empty");
  const double eps = cfg.epsilons.front();
  SimOptions opts;
  opts.dt = cfg.dt;
  opts.jump_cap = cfg.jump_cap;
  std::vector<std::string> dumps(static_cast<std::size_t>(cfg.paths));
  std::vector<Trajectory> trajs(dumps.size());
  parallel_for(dumps.size(), static_cast<unsigned>(cfg.workers), [&](std::size_t i) {
    Rng rng(derive_seed(cfg.seed, kSimulateStream, i));
    trajs[i] = simulate_sde(cfg.system, *cfg.measure, cfg.start, eps, cfg.horizon, rng, opts);
    std::ostringstream ss;
    write_trajectory_csv(ss, trajs[i]);
    dumps[i] = ss.str();
  });
  ctx.manifest.set("epsilon", eps);
  ctx.manifest.set("horizon", cfg.horizon);
  ctx.manifest.set("paths", cfg.paths);
  for (std::size_t i = 0; i < dumps.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "trajectory_%04zu.csv", i);
    ctx.emit(name, dumps[i]);
    const std::string p = "path." + std::to_string(i);
    ctx.manifest.set(p + ".jumps", static_cast<long long>(trajs[i].jumps));
    ctx.manifest.set(p + ".exited", trajs[i].exited);
    if (trajs[i].exited) ctx.manifest.set(p + ".exit_time", trajs[i].exit_time);
    ctx.manifest.set(p + ".terminal", format_vec(trajs[i].terminal_state, ", "));
  }
  return false;
}

bool cmd_sample_measure(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const LevyMeasure& nu = *cfg.measure;
  const int d = nu.dimension();
  Rng rng(derive_seed(cfg.seed, kSampleStream));
  std::vector<std::string> header;
  for (int i = 0; i < d; ++i) header.push_back("z_" + std::to_string(i + 1));
  Table table(header);
  double m2 = 0.0;
  Vec m1 = Vec::Zero(d);
  for (int n = 0; n < cfg.sample_count; ++n) {
    const Vec z = nu.sample_jump(rng);
    m2 += z.squaredNorm();
    m1 += z;
    std::vector<std::string> row;
    for (int i = 0; i < d; ++i) row.push_back(format_double(z(i)));
    table.add(std::move(row));
  }
  const double mass = nu.effective_mass();
  ctx.emit("samples.csv", table.str());
  ctx.manifest.set("measure.kind", to_string(nu.kind()));
  ctx.manifest.set("samples", cfg.sample_count);
  ctx.manifest.set("effective_mass", mass);
  ctx.manifest.set("second_moment.exact", nu.effective_second_moment());
  ctx.manifest.set("second_moment.sampled", mass * m2 / cfg.sample_count);
  ctx.manifest.set("first_moment.exact", format_vec(nu.first_moment(), ", "));
  ctx.manifest.set("first_moment.sampled", format_vec(Vec(mass * m1 / cfg.sample_count), ", "));
  return false;
}

QuasiPotentialResult compute_quasipotential(const ExperimentConfig& cfg) {
  if (cfg.qp_target) return quasipotential_point(cfg.start, *cfg.qp_target, cfg.system, *cfg.measure, cfg.qp);
  return barrier_height(cfg.system, *cfg.measure, cfg.qp);
}

Report quasipotential_report(const Context& ctx, const QuasiPotentialResult& res) {
  Report r = header(ctx);
  r.set("mode", ctx.cfg.qp_target ? "point" : "barrier");
  r.append(serialize_result(res, "result"));
  return r;
}

bool cmd_quasipotential(Context& ctx) {
  const QuasiPotentialResult res = compute_quasipotential(ctx.cfg);
  const Report r = quasipotential_report(ctx, res);
  ctx.emit("quasipotential.txt", r.str());
  ctx.manifest.set("value", res.value);
  ctx.manifest.set("certificate.endpoint_error", res.endpoint_error);
  return false;
}

BarrierInfo barrier_from_report(const Report& r) {
  BarrierInfo info;
  info.vbar = r.get_double("result.value");
  info.argmin = r.has("result.argmin") ? parse_vec_list(r.get("result.argmin"))
                                       : parse_vec_list(r.get("result.target"));
  const double gap = r.has("result.runner_up_gap") ? r.get_double("result.runner_up_gap") : kInfinite;
  info.unique = info.argmin.size() == 1 && gap > 2.0 * r.get_double("result.tolerance");
  return info;
}

void put_rows(Report& rep, const KramersReport& k) {
  rep.set("vbar", k.vbar);
  rep.set("argmin", vec_list(k.argmin));
  rep.set("concentration.label", k.concentration_label);
  rep.set("window_delta", k.window_delta);
  rep.set("location_delta", k.location_delta);
  for (std::size_t i = 0; i < k.rows.size(); ++i) {
    const EpsilonRow& r = k.rows[i];
    const std::string p = "row." + std::to_string(i) + ".";
    rep.set(p + "epsilon", r.epsilon);
    rep.set(p + "paths", r.paths);
    rep.set(p + "timeouts", r.timeouts);
    rep.set(p + "timeout_fraction", r.timeout_fraction);
    rep.set(p + "t_cap", r.t_cap);
    rep.set(p + "mean", r.mean.estimate);
    rep.set(p + "mean.ci", format_double(r.mean.lo) + ", " + format_double(r.mean.hi));
    rep.set(p + "median", r.median);
    rep.set(p + "eps_log_mean", r.eps_log_mean);
    rep.set(p + "window", r.window.estimate);
    rep.set(p + "window.ci", format_double(r.window.lo) + ", " + format_double(r.window.hi));
    rep.set(p + "concentration", r.concentration.estimate);
    rep.set(p + "concentration.ci", format_double(r.concentration.lo) + ", " + format_double(r.concentration.hi));
    rep.set(p + "location_mass", format_list(r.location_mass));
    rep.set(p + "invalid_for_mean", r.invalid_for_mean);
  }
  rep.set("trend.spearman", k.trend_spearman);
  rep.set("trend.slope", k.trend_fit.slope);
  rep.set("trend.intercept", k.trend_fit.intercept);
  std::string flags;
  for (std::size_t i = 0; i < k.flags.size(); ++i) flags += (i ? ", " : "") + k.flags[i];
  rep.set("flags", flags.empty() ? "none" : flags);
}

std::string summary_table(const KramersReport& k) {
  Table t({"epsilon", "mean", "ci_lo", "ci_hi", "eps_log_mean", "window_prob", "concentration", "timeout_fraction"});
  for (const auto& r : k.rows) {
    t.add({format_double(r.epsilon), format_double(r.mean.estimate), format_double(r.mean.lo),
           format_double(r.mean.hi), format_double(r.eps_log_mean), format_double(r.window.estimate),
           format_double(r.concentration.estimate), format_double(r.timeout_fraction)});
  }
  return t.str();
}

std::string histogram_table(const KramersReport& k) {
  std::vector<std::string> header = {"bin_lo", "bin_hi"};
  for (const auto& r : k.rows) header.push_back("eps_" + format_double(r.epsilon));
  Table t(header);
  for (std::size_t b = 0; b + 1 < k.histogram_edges.size(); ++b) {
    std::vector<std::string> row = {format_double(k.histogram_edges[b]), format_double(k.histogram_edges[b + 1])};
    for (const auto& r : k.rows) row.push_back(std::to_string(r.histogram[b]));
    t.add(std::move(row));
  }
  return t.str();
}

bool cmd_exit_stats(Context& ctx) {
  const ExitExperiment exp = ctx.cfg.experiment();
  BarrierInfo none;
  none.argmin.clear();
  const auto samples = simulate_exits(exp, none);
  const KramersReport k = summarize_exits(exp, none, samples);
  std::vector<std::string> header = {"epsilon", "path", "time", "timeout"};
  for (int i = 0; i < ctx.cfg.system.dimension; ++i) header.push_back("exit_" + std::to_string(i + 1));
  Table raw(header);
  for (std::size_t e = 0; e < samples.size(); ++e) {
    for (std::size_t i = 0; i < samples[e].size(); ++i) {
      const ExitSample& s = samples[e][i];
      std::vector<std::string> row = {format_double(exp.epsilons[e]), std::to_string(i), format_double(s.time),
                                      s.timeout ? "1" : "0"};
      for (Eigen::Index j = 0; j < s.point.size(); ++j) row.push_back(format_double(s.point(j)));
      raw.add(std::move(row));
    }
  }
  Table t({"epsilon", "paths", "timeouts", "timeout_fraction", "mean", "ci_lo", "ci_hi", "median", "eps_log_mean"});
  for (const auto& r : k.rows) {
    t.add({format_double(r.epsilon), std::to_string(r.paths), std::to_string(r.timeouts),
           format_double(r.timeout_fraction), format_double(r.mean.estimate), format_double(r.mean.lo),
           format_double(r.mean.hi), format_double(r.median), format_double(r.eps_log_mean)});
  }
  ctx.emit("exit_samples.csv", raw.str());
  ctx.emit("exit_stats.csv", t.str());
  ctx.manifest.set("invalid_for_mean", k.invalid_for_mean);
  return k.invalid_for_mean;
}

bool cmd_kramers(Context& ctx) {
  const auto& cfg = ctx.cfg;
  std::string qp_text;
  if (!cfg.kramers.quasipotential_report.empty()) {
    qp_text = read_file(cfg.kramers.quasipotential_report);
  } else {
    qp_text = quasipotential_report(ctx, barrier_height(cfg.system, *cfg.measure, cfg.qp)).str();
    ctx.emit("quasipotential.txt", qp_text);
  }
  const BarrierInfo barrier = barrier_from_report(Report::parse(qp_text));
  const KramersReport k = run_exit_mc(cfg.experiment(), barrier);
  Report rep = header(ctx);
  rep.set("quasipotential.fnv1a", hex64(fnv1a(qp_text)));
  put_rows(rep, k);
  ctx.emit("kramers.txt", rep.str());
  ctx.emit("kramers.csv", summary_table(k));
  ctx.emit("kramers_histogram.csv", histogram_table(k));
  ctx.manifest.set("quasipotential.fnv1a", hex64(fnv1a(qp_text)));
  ctx.manifest.set("invalid_for_mean", k.invalid_for_mean);
  return k.invalid_for_mean;
}

bool cmd_cycle_diag(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto rows = cycle_diagnostic(cfg.experiment(), cfg.cycle.rho, cfg.cycle.rho_prime, cfg.cycle.t_cap);
  Table t({"epsilon", "paths", "timeouts", "mean_attempts", "q_hat", "mean_cycle", "mean_exit_time",
           "wald_relative_error", "chi_square", "dof", "p_value"});
  Report rep = header(ctx);
  rep.set("rho", cfg.cycle.rho);
  rep.set("rho_prime", cfg.cycle.rho_prime);
  bool flagged = false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const CycleRow& r = rows[i];
    t.add({format_double(r.epsilon), std::to_string(r.paths), std::to_string(r.timeouts),
           format_double(r.mean_attempts), format_double(r.q_hat), format_double(r.mean_cycle),
           format_double(r.mean_exit_time), format_double(r.wald_relative_error),
           format_double(r.chi_square.statistic), std::to_string(r.chi_square.dof),
           format_double(r.chi_square.p_value)});
    const std::string p = "row." + std::to_string(i) + ".";
    rep.set(p + "epsilon", r.epsilon);
    rep.set(p + "q_hat", r.q_hat);
    rep.set(p + "wald_ok", r.wald_ok);
    rep.set(p + "geometric_ok", r.geometric_ok);
    flagged = flagged || !r.wald_ok || !r.geometric_ok || r.paths == 0;
  }
  rep.set("flags", flagged ? "CHECK-FAILED" : "none");
  ctx.emit("cycle.txt", rep.str());
  ctx.emit("cycle.csv", t.str());
  return flagged;
}

Control is_tilt(const ExperimentConfig& cfg) {
  const LevyMeasure& nu = *cfg.measure;
  if (cfg.is.tilt == "identity") return Control::identity(nu, cfg.is.horizon);
  if (cfg.is.tilt == "constant") return Control::constant_tilt(nu, cfg.is.level, cfg.is.horizon);
  if (cfg.is.tilt == "report") {
    if (cfg.is.report.empty()) throw ConfigError("missing required key 'is.report'");
    const Report r = Report::read(cfg.is.report);
    std::map<std::string, std::string> entries;
    for (const auto& [k, v] : r.with_prefix("result.control")) entries[k] = v;
    return deserialize_control(entries, cfg.system, nu, "result.control");
  }
  if (!cfg.is.target) throw ConfigError("missing required key 'is.target'");
  const QuasiPotentialResult res = transfer_cost(cfg.start, *cfg.is.target, cfg.is.horizon, cfg.system, nu, cfg.qp);
  return *res.control;
}

bool cmd_is_exit(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Control tilt = is_tilt(cfg);
  const auto rows = importance_sampled_exit(cfg.experiment(), tilt, cfg.is.horizon);
  Table t({"epsilon", "horizon", "paths", "direct", "direct_se", "weighted", "weighted_se", "ess", "unreliable",
           "agree"});
  Report rep = header(ctx);
  rep.append(serialize_control(tilt, "tilt"));
  bool flagged = false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const IsRow& r = rows[i];
    t.add({format_double(r.epsilon), format_double(r.horizon), std::to_string(r.paths), format_double(r.direct),
           format_double(r.direct_se), format_double(r.weighted), format_double(r.weighted_se), format_double(r.ess),
           r.unreliable ? "1" : "0", r.agree ? "1" : "0"});
    const std::string p = "row." + std::to_string(i) + ".";
    rep.set(p + "epsilon", r.epsilon);
    rep.set(p + "direct", r.direct);
    rep.set(p + "weighted", r.weighted);
    rep.set(p + "ess", r.ess);
    rep.set(p + "unreliable", r.unreliable);
    flagged = flagged || r.unreliable;
  }
  rep.set("flags", flagged ? "UNRELIABLE" : "none");
  ctx.emit("is_exit.txt", rep.str());
  ctx.emit("is_exit.csv", t.str());
  return flagged;
}

int dispatch(const Invocation& inv) {
  if (inv.config_path.empty()) throw ConfigError("--config is required");
  const std::string text = read_file(inv.config_path);
  ExperimentConfig cfg = ExperimentConfig::from(ConfigFile::parse(text));
  if (inv.seed) {
    cfg.seed = *inv.seed;
    cfg.qp.seed = *inv.seed;
  }
  if (inv.workers) {
    if (*inv.workers < 1) throw ConfigError("--workers must be >= 1");
    cfg.workers = *inv.workers;
    cfg.qp.workers = *inv.workers;
  }
  std::error_code ec;
  std::filesystem::create_directories(inv.out_dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + inv.out_dir + "'");
  Context ctx{inv, cfg, text, inv.out_dir, Report()};
  ctx.manifest = header(ctx);
  bool flagged = false;
  if (inv.command == "simulate") flagged = cmd_simulate(ctx);
  else if (inv.command == "sample-measure") flagged = cmd_sample_measure(ctx);
  else if (inv.command == "quasipotential") flagged = cmd_quasipotential(ctx);
  else if (inv.command == "exit-stats") flagged = cmd_exit_stats(ctx);
  else if (inv.command == "kramers") flagged = cmd_kramers(ctx);
  else if (inv.command == "cycle-diag") flagged = cmd_cycle_diag(ctx);
  else if (inv.command == "is-exit") flagged = cmd_is_exit(ctx);
  else throw ConfigError("unknown command '" + inv.command + "'");
  ctx.manifest.set("flagged", flagged);
  ctx.manifest.set("files", ctx.files);
  write_file(ctx.path("manifest.txt"), ctx.manifest.str());
  return flagged && inv.strict ? kFlagged : kOk;
}

}  // namespace

int run(const Invocation& inv) {
  try {
    return dispatch(inv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return kNumericalError;
  }
}

}  // namespace kramers::cli
