// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only if all pass.

#include "codress/body_sim.hpp"
#include "codress/checkpoint.hpp"
#include "codress/config.hpp"
#include "codress/curriculum.hpp"
#include "codress/gae.hpp"
#include "codress/harness.hpp"
#include "codress/policy.hpp"
#include "codress/reward.hpp"
#include "codress/sensors.hpp"
#include "codress/trpo.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

using namespace codress;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * std::generate_canonical<double, 53>(rng); }

MatX random_matrix(Rng& rng, int rows, int cols, double scale = 1.0) {
  MatX m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = uniform(rng, -scale, scale);
  return m;
}

double rel_err(const VecX& a, const VecX& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------- shared context

struct Context {
  fs::path source;
  fs::path out;
  int workers = 1;
  int eval_episodes = 100;
  std::uint64_t eval_seed = 1000000;
  int max_iterations = 200;

  // Fully capable seed-1 policy after the full iteration budget; reused by criteria 7 and 8.
  std::optional<checkpoint::Checkpoint> reference;
  // Weakness-trained seed-1 policy with the full observation; reused by criterion 10.
  std::optional<checkpoint::Checkpoint> weakness;

  config::ExperimentConfig load(const std::string& name) const {
    auto cfg = config::load(source / "configs" / name);
    cfg.workers = workers;
    return cfg;
  }
};

harness::Summary evaluate(const Context& ctx, const env::TaskConfig& task, const rl::JointPolicy& policy,
                          std::vector<harness::MetricsRow>* rows = nullptr) {
  const auto records =
      harness::evaluate(task, harness::policy_controller(policy), ctx.eval_episodes, ctx.eval_seed, ctx.workers);
  auto r = harness::metrics_rows("acceptance", "eval", records);
  if (rows) *rows = r;
  return harness::summarize(r, 50.0);
}

struct TrainResult {
  checkpoint::Checkpoint checkpoint;
  std::optional<int> first_hit;  // iterations after which evaluation first reached the bar
  double hit_success = 0.0;
  double final_success = 0.0;
  double seconds = 0.0;
};

/// Trains in chunks, evaluating after each. Stops at the first chunk reaching
/// `bar` unless `full` is set.
TrainResult train_with_checks(const Context& ctx, const config::ExperimentConfig& cfg, int chunk, double bar,
                              bool full, const std::string& label) {
  const auto t0 = Clock::now();
  const env::TaskConfig task = config::phase_task(cfg, cfg.phases.front());
  TrainResult out;
  out.checkpoint = curriculum::initial_checkpoint(cfg, task);
  config::PhaseSpec spec = cfg.phases.front();
  for (int done = 0; done < ctx.max_iterations;) {
    spec.iterations = std::min(chunk, ctx.max_iterations - done);
    out.checkpoint = curriculum::run_phase(cfg, spec, out.checkpoint, done, {}).checkpoint;
    done += spec.iterations;
    const double success = evaluate(ctx, task, out.checkpoint.policy).success_rate;
    std::cerr << fmt("  [%s] %3d iterations  eval success %5.1f%%  %.0fs\n", label.c_str(), done, 100.0 * success,
                     seconds_since(t0));
    out.final_success = success;
    if (!out.first_hit && success >= bar) {
      out.first_hit = done;
      out.hit_success = success;
      if (!full) break;
    }
  }
  out.seconds = seconds_since(t0);
  return out;
}

checkpoint::Checkpoint train_full(const Context& ctx, const config::ExperimentConfig& cfg, const std::string& label) {
  const auto t0 = Clock::now();
  const auto r = curriculum::run_curriculum(cfg, ctx.out / label, [&](const curriculum::LogRow& row) {
    if ((row.iteration + 1) % 25 == 0) {
      std::cerr << fmt("  [%s] %3d iterations  train success %5.1f%%  %.0fs\n", label.c_str(), row.iteration + 1,
                       100.0 * row.success_rate, seconds_since(t0));
    }
  });
  return r.final;
}

const checkpoint::Checkpoint& weakness_policy(Context& ctx) {
  if (!ctx.weakness) {
    auto cfg = ctx.load("weakness.json");
    cfg.seed = 1;
    ctx.weakness = train_full(ctx, cfg, "weakness");
  }
  return *ctx.weakness;
}

const checkpoint::Checkpoint& reference(Context& ctx) {
  if (!ctx.reference) {
    auto cfg = ctx.load("base.json");
    cfg.seed = 1;
    ctx.reference = train_with_checks(ctx, cfg, 25, 0.8, true, "reference").checkpoint;
  }
  return *ctx.reference;
}

// ---------------------------------------------------------------- criteria

Outcome force_penalty_exactness(Context&) {
  const auto t0 = Clock::now();
  Rng rng(1);
  double worst_mid = 0.0;
  bool monotone = true, bounded = true;
  for (int trial = 0; trial < 100; ++trial) {
    const double w_mid = uniform(rng, 1.0, 100.0), w_scale = uniform(rng, 0.01, 1.0);
    worst_mid = std::max(worst_mid, std::abs(reward::perceived_force_penalty(w_mid, w_mid, w_scale) + 0.5));
  }
  // Strict decrease is required wherever the exact step exceeds the double spacing near the
  // value; deeper in the saturated tail neighbouring values may round equal.
  double prev = 0.0;
  int strict_checked = 0;
  for (int i = 0; i < 10000; ++i) {
    const double f = 200.0 * i / 9999.0;
    const double r = reward::perceived_force_penalty(f, 30.0, 0.1);
    if (i > 0) {
      const double x = 0.1 * (f - 30.0);
      const double slope = 0.1 / (2.0 * std::cosh(x) * std::cosh(x));
      const double exact_step = slope * (200.0 / 9999.0);
      if (r > prev) monotone = false;
      if (exact_step > 4.0 * std::nextafter(std::abs(r), 2.0) - 4.0 * std::abs(r)) {
        ++strict_checked;
        if (!(r < prev)) monotone = false;
      }
    }
    if (!(r > -1.0 && r < 0.0)) bounded = false;
    prev = r;
  }
  const double secs = seconds_since(t0);
  return {worst_mid <= 1e-12 && monotone && bounded && secs < 1.0,
          fmt("max |r_c(w_mid) + 0.5| = %.1e, decreasing %s (strict on %d resolvable steps), inside (-1, 0) %s, %.3fs",
              worst_mid, monotone ? "yes" : "no", strict_checked, bounded ? "yes" : "no", secs)};
}

Outcome reward_presets(Context&) {
  const auto one = reward::weight_preset("gown-one-arm");
  const auto two = reward::weight_preset("gown-two-arms");
  const reward::GroupVector w5_one{40, 4, 8, 4, 0.5}, w5_two{45, 5, 4, 0.25, 0.25};
  bool exact = one.w1 == 40 && one.w2 == 5 && one.w3 == 0 && one.w4 == 5 && one.w5 == w5_one && two.w1 == 40 &&
               two.w2 == 5 && two.w3 == 0 && two.w4 == 5 && two.w5 == w5_two;
  double worst = 0.0;
  for (const auto& w : {one, two}) {
    reward::RewardBreakdown unit;
    unit.r_p = unit.r_d = unit.r_g = unit.r_c = 1.0;
    unit.r_r.fill(1.0);
    const double oracle_terms[] = {w.w1, w.w2, w.w3, w.w4, w.w5[0], w.w5[1], w.w5[2], w.w5[3], w.w5[4]};
    double oracle = 0.0;
    for (double t : oracle_terms) oracle += t;
    worst = std::max(worst, std::abs(reward::total_reward(unit, w).total - oracle));
  }
  return {exact && worst <= 1e-12, fmt("presets exact %s, max |total - dot oracle| = %.1e", exact ? "yes" : "no", worst)};
}

Outcome trpo_suite(Context&) {
  const auto t0 = Clock::now();
  Rng rng(3);

  // (a) policy gradient on a 10-parameter net
  std::vector<rl::PolicyNet> small{rl::PolicyNet::create(2, 1, rng, {2}, -0.4, 0.8)};
  rl::JointPolicy p(std::move(small));
  const MatX obs = random_matrix(rng, 2, 64);
  const auto f0 = p.forward(obs);
  const MatX actions = f0.mean + 0.5 * random_matrix(rng, 1, 64);
  VecX adv(64);
  for (int i = 0; i < 64; ++i) adv[i] = uniform(rng, -1, 1);
  const VecX old_lp = p.log_prob(f0, actions);
  const VecX g = rl::surrogate_gradient(p, f0, actions, adv);
  const VecX theta = p.flat_params();
  VecX fd(p.num_params());
  for (int k = 0; k < p.num_params(); ++k) {
    VecX e = VecX::Zero(p.num_params());
    e[k] = 1e-6;
    fd[k] = (rl::surrogate(p, p.forward(obs, theta + e), actions, old_lp, adv) -
             rl::surrogate(p, p.forward(obs, theta - e), actions, old_lp, adv)) / 2e-6;
  }
  const double grad_err = rel_err(g, fd);

  // (b) Fisher-vector product vs finite differences of the KL gradient
  std::vector<rl::PolicyNet> two{rl::PolicyNet::create(3, 2, rng, {4}, -0.5, 0.5),
                                 rl::PolicyNet::create(2, 2, rng, {4}, -0.3, 0.5)};
  rl::JointPolicy q(std::move(two));
  const MatX qobs = random_matrix(rng, 5, 40);
  const VecX qtheta = q.flat_params();
  const auto qf = q.forward(qobs, qtheta);
  double fvp_err = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    VecX v(q.num_params());
    for (int i = 0; i < v.size(); ++i) v[i] = uniform(rng, -1, 1);
    const double h = 1e-5;
    const VecX fdv = (rl::kl_gradient(q, qf, q.forward(qobs, qtheta + h * v)) -
                      rl::kl_gradient(q, qf, q.forward(qobs, qtheta - h * v))) / (2 * h);
    fvp_err = std::max(fvp_err, rel_err(rl::fisher_vector_product(q, qf, v, 0.0), fdv));
  }

  // (c) 50 updates of a two-agent bandit
  std::vector<rl::PolicyNet> bandit{rl::PolicyNet::create(1, 1, rng, {}, -0.5, 0.0),
                                    rl::PolicyNet::create(1, 1, rng, {}, -0.5, 0.0)};
  rl::JointPolicy b(std::move(bandit));
  const rl::TrpoConfig cfg;
  const int n = 400;
  const MatX bobs = MatX::Ones(2, n);
  int accepted = 0, violations = 0;
  double worst_kl = 0.0, worst_improvement = 1e9;
  for (int u = 0; u < 50; ++u) {
    MatX acts(2, n);
    VecX rewards(n);
    for (int i = 0; i < n; ++i) {
      acts.col(i) = b.sample(bobs.col(i), rng).action;
      rewards[i] = -(acts(0, i) - 1.0) * (acts(0, i) - 1.0) - (acts(1, i) + 0.5) * (acts(1, i) + 0.5);
    }
    const VecX centred = rewards.array() - rewards.mean();
    const VecX badv = centred / std::sqrt(centred.array().square().mean());
    const auto d = rl::trpo_update(b, bobs, acts, badv, cfg);
    if (!d.accepted) continue;
    ++accepted;
    worst_kl = std::max(worst_kl, d.kl);
    worst_improvement = std::min(worst_improvement, d.surrogate_improvement);
    if (d.kl > 1.5 * cfg.kl_delta || d.surrogate_improvement < 0.0) ++violations;
  }

  // (d) conjugate gradient on random SPD systems
  double cg_err = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const MatX a = random_matrix(rng, 6, 6);
    const MatX A = a * a.transpose() + 0.5 * MatX::Identity(6, 6);
    VecX rhs(6);
    for (int i = 0; i < 6; ++i) rhs[i] = uniform(rng, -1, 1);
    const auto cg = rl::conjugate_gradient([&](const VecX& v) { return VecX(A * v); }, rhs, 10, 1e-30);
    cg_err = std::max(cg_err, rel_err(cg.x, A.ldlt().solve(rhs)));
  }

  const double secs = seconds_since(t0);
  const bool pass = grad_err <= 1e-5 && fvp_err <= 1e-4 && accepted > 0 && violations == 0 && cg_err <= 1e-8 &&
                    secs < 30.0;
  return {pass, fmt("(a) gradient rel err %.1e, (b) FVP rel err %.1e, (c) %d/50 accepted, max KL %.4f, "
                    "min improvement %.2e, (d) CG rel err %.1e, %.2fs",
                    grad_err, fvp_err, accepted, worst_kl, worst_improvement, cg_err, secs)};
}

Outcome gae_oracle(Context&) {
  const auto t0 = Clock::now();
  Rng rng(4);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<rl::EpisodeSpan> eps;
    int start = 0;
    for (int e = 0; e < 3; ++e) {
      const int len = 1 + static_cast<int>(uniform(rng, 0, 60));
      eps.push_back({start, len, uniform(rng, -5, 5)});
      start += len;
    }
    VecX r(start), v(start);
    for (int i = 0; i < start; ++i) {
      r[i] = uniform(rng, -3, 3);
      v[i] = uniform(rng, -3, 3);
    }
    const double gamma = uniform(rng, 0.8, 1.0), lambda = uniform(rng, 0.0, 1.0);
    const auto out = rl::compute_gae(r, v, eps, gamma, lambda);
    for (const auto& ep : eps) {
      const int end = ep.start + ep.length;
      for (int t = ep.start; t < end; ++t) {
        double a = 0.0;
        for (int k = t; k < end; ++k) {
          const double next = k + 1 < end ? v[k + 1] : ep.bootstrap_value;
          a += std::pow(gamma * lambda, k - t) * (r[k] + gamma * next - v[k]);
        }
        worst = std::max(worst, std::abs(out.advantages_raw[t] - a));
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-10 && secs < 5.0, fmt("max |GAE - brute force| = %.1e over 100 batches, %.3fs", worst, secs)};
}

Outcome sensor_contracts(Context&) {
  Rng rng(5);
  double lo = 1e9, hi = -1e9;
  for (int trial = 0; trial < 10000; ++trial) {
    const Vec3 a(uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5));
    const Vec3 b = a + Vec3(uniform(rng, -0.3, 0.3), uniform(rng, -0.3, 0.3), uniform(rng, -0.3, 0.3));
    const Capsule cap{a, b, uniform(rng, 0.02, 0.1), 0, 1};
    const Vec3 axis = Vec3(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)).normalized();
    const Transform ee = make_transform(Vec3(uniform(rng, -0.6, 0.6), uniform(rng, -0.6, 0.6), uniform(rng, -0.6, 0.6)),
                                        Eigen::AngleAxisd(uniform(rng, -3.2, 3.2), axis).toRotationMatrix());
    for (double v : sensors::capacitive_reading(sensors::capacitive_grid(ee), std::span(&cap, 1))) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const bool in_range = lo >= 0.0 && hi <= sensors::kCapacitiveRange;

  const Capsule limb{Vec3(0, 0, 0), Vec3(0.3, 0, 0), 0.05, 1, 1};
  std::array<Vec3, sensors::kCapacitiveCount> far;
  far.fill(Vec3(0.1, 0.35, 0.0));  // 0.30 m from the surface
  const double clipped = sensors::capacitive_reading(far, std::span(&limb, 1))[0];

  double worst = 0.0;
  int checked = 0;
  std::normal_distribution<double> gauss;
  while (checked < 20) {
    const Vec3 a(uniform(rng, -0.3, 0.3), uniform(rng, -0.3, 0.3), uniform(rng, -0.3, 0.3));
    const Vec3 dir = Vec3(gauss(rng), gauss(rng), gauss(rng)).normalized();
    const Vec3 b = a + uniform(rng, 0.1, 0.4) * dir;
    const Capsule cap{a, b, uniform(rng, 0.03, 0.08), 0, 0};
    const Vec3 p = 0.5 * (a + b) + uniform(rng, 0.1, 0.3) * Vec3(gauss(rng), gauss(rng), gauss(rng)).normalized();
    if ((closest_point_on_segment(a, b, p) - p).norm() < cap.radius + 0.01) continue;
    const Vec3 u = dir.unitOrthogonal(), w = dir.cross(u);
    double oracle = 1e9;
    for (int k = 0; k < 10000; ++k) {
      Vec3 s;
      if (k % 2 == 0) {
        const double t = uniform(rng, 0, 1), phi = uniform(rng, 0, 2 * M_PI);
        s = a + t * (b - a) + cap.radius * (std::cos(phi) * u + std::sin(phi) * w);
      } else {
        const Vec3 d = Vec3(gauss(rng), gauss(rng), gauss(rng)).normalized();
        s = (d.dot(dir) > 0 ? b : a) + cap.radius * d;
      }
      oracle = std::min(oracle, (s - p).norm());
    }
    worst = std::max(worst, std::abs(body::closest_point_on_body(std::span(&cap, 1), p).distance - oracle));
    ++checked;
  }
  return {in_range && clipped == 0.15 && worst <= 2e-3,
          fmt("readings in [%.4f, %.4f] over 6e4 sensors, clip reading %.17g, closest-point max err %.2e m", lo, hi,
              clipped, worst)};
}

Outcome end_to_end_learning(Context& ctx) {
  int passed = 0, tried = 0;
  std::vector<std::string> parts;
  double worst_seconds = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    if (passed >= 3 || passed + (6 - static_cast<int>(seed)) < 3) break;
    auto cfg = ctx.load("base.json");
    cfg.seed = seed;
    const bool keep = seed == 1 && !ctx.reference;
    const auto r = train_with_checks(ctx, cfg, 25, 0.8, keep, "c6 seed " + std::to_string(seed));
    if (keep) ctx.reference = r.checkpoint;
    ++tried;
    worst_seconds = std::max(worst_seconds, r.seconds);
    const bool ok = r.first_hit.has_value() && r.seconds <= 7200.0;
    passed += ok;
    parts.push_back(r.first_hit ? fmt("seed %d: %.0f%% at %d it", static_cast<int>(seed), 100.0 * r.hit_success, *r.first_hit)
                                : fmt("seed %d: best below 80%% (final %.0f%%)", static_cast<int>(seed), 100.0 * r.final_success));
  }
  std::string detail = fmt("%d/%d seeds reached >= 80%% eval success within 200 iterations", passed, tried);
  for (const auto& p : parts) detail += "; " + p;
  detail += fmt("; longest run %.0fs", worst_seconds);
  return {passed >= 3, detail};
}

Outcome impairment_specialization(Context& ctx) {
  const auto cfg = ctx.load("weakness.json");
  const auto& weak = weakness_policy(ctx);
  const auto& capable = reference(ctx);
  const env::TaskConfig weak_task = cfg.task;
  const double s_weak = evaluate(ctx, weak_task, weak.policy).success_rate;
  const double s_capable = evaluate(ctx, weak_task, capable.policy).success_rate;
  const double gain = s_weak - s_capable;
  return {gain >= 0.15, fmt("under weakness: weakness-trained %.0f%%, capable-trained %.0f%%, gain %+.0f points",
                            100 * s_weak, 100 * s_capable, 100 * gain)};
}

Outcome action_scaling(Context& ctx) {
  const auto& ref = reference(ctx);
  auto cfg = ctx.load("base.json");
  env::TaskConfig task = cfg.task;
  task.horizon = 600;  // long enough for the slowest scale to finish
  std::vector<harness::MetricsRow> rows;
  const std::vector<double> scales{1.0, 0.8, 0.6, 0.4, 0.2};
  const auto report = harness::sweep_action_scale(task, harness::policy_controller(ref.policy), scales,
                                                  ctx.eval_episodes, ctx.eval_seed, ctx.workers, "acceptance", rows);
  harness::write_metrics(ctx.out / "c8_sweep_metrics.csv", rows);
  const auto& first = report.points.front().summary;
  const auto& last = report.points.back().summary;
  std::string detail;
  for (const auto& p : report.points) {
    detail += fmt("scale %.1f: %.0f%% tts %s; ", p.action_scale, 100 * p.summary.success_rate,
                  p.summary.mean_time_to_success_s ? fmt("%.2fs", *p.summary.mean_time_to_success_s).c_str() : "n/a");
  }
  if (!first.mean_time_to_success_s || !last.mean_time_to_success_s) return {false, detail + "no successes"};
  const double ratio = *last.mean_time_to_success_s / *first.mean_time_to_success_s;
  const double drop = first.success_rate - last.success_rate;
  detail += fmt("time ratio %.2f, success drop %.0f points", ratio, 100 * drop);
  return {ratio >= 1.5 && drop <= 0.15, detail};
}

Outcome curriculum_trend(Context& ctx) {
  auto cfg = ctx.load("curriculum.json");
  cfg.seed = 1;
  const auto t0 = Clock::now();
  const auto r = curriculum::run_curriculum(cfg, ctx.out / "c9_curriculum", [&](const curriculum::LogRow& row) {
    if ((row.iteration + 1) % 30 == 0) {
      std::cerr << fmt("  [c9 %s] %3d iterations  train success %5.1f%%  %.0fs\n", row.phase.c_str(),
                       row.iteration + 1, 100.0 * row.success_rate, seconds_since(t0));
    }
  });
  const env::TaskConfig task = cfg.task;
  const auto before = evaluate(ctx, task, r.phase_checkpoints.front().policy);
  const auto after = evaluate(ctx, task, r.phase_checkpoints.back().policy);
  const double below_gain = after.fraction_below_threshold - before.fraction_below_threshold;
  const double success_drop = before.success_rate - after.success_rate;
  return {below_gain >= 0.20 && success_drop <= 0.15,
          fmt("episodes with max force < 50 N: %.0f%% -> %.0f%% (%+.0f points); success %.0f%% -> %.0f%%",
              100 * before.fraction_below_threshold, 100 * after.fraction_below_threshold, 100 * below_gain,
              100 * before.success_rate, 100 * after.success_rate)};
}

Outcome ablation_direction(Context& ctx) {
  // Ablations run under muscle weakness, where the arm pose varies per episode.
  const auto& full = weakness_policy(ctx);
  const auto weak = ctx.load("weakness.json");
  const double s_full = evaluate(ctx, weak.task, full.policy).success_rate;
  bool pass = true;
  std::string detail = fmt("under weakness: full observation %.0f%%", 100 * s_full);
  for (const char* name : {"ablate_capacitive", "ablate_jointpos"}) {
    auto cfg = ctx.load(std::string(name) + ".json");
    cfg.seed = 1;
    const auto ck = train_full(ctx, cfg, std::string("c10_") + name);
    const double s = evaluate(ctx, cfg.task, ck.policy).success_rate;
    const double drop = s_full - s;
    pass = pass && drop >= 0.05;
    detail += fmt("; %s %.0f%% (%+.0f points)", name, 100 * s, -100 * drop);
  }
  return {pass, detail};
}

Outcome determinism(Context& ctx) {
  auto make = [&](int workers) {
    auto cfg = ctx.load("base.json");
    cfg.seed = 11;
    cfg.workers = workers;
    cfg.training.samples_per_iteration = 600;
    cfg.training.checkpoint_every = 0;
    cfg.phases.front().iterations = 3;
    return cfg;
  };
  std::vector<fs::path> dirs;
  const int worker_counts[] = {1, 1, 4};
  for (int i = 0; i < 3; ++i) {
    const auto cfg = make(worker_counts[i]);
    const fs::path dir = ctx.out / fmt("c11_run%d_w%d", i, worker_counts[i]);
    fs::remove_all(dir);
    const auto r = curriculum::run_curriculum(cfg, dir);
    const auto records = harness::evaluate(cfg.task, harness::policy_controller(r.final.policy), 20, ctx.eval_seed,
                                           worker_counts[i]);
    harness::write_metrics(dir / "metrics.csv", harness::metrics_rows("determinism", "eval", records));
    dirs.push_back(dir);
  }
  int compared = 0, differing = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dirs[0])) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), dirs[0]);
    const auto ext = rel.extension();
    if (ext != ".bin" && ext != ".csv" && rel.filename() != "manifest.json") continue;
    if (rel.filename() == "training_log.csv") continue;  // holds wall-clock times
    const std::string ref = read_bytes(entry.path());
    for (size_t k = 1; k < dirs.size(); ++k) {
      ++compared;
      if (read_bytes(dirs[k] / rel) != ref) {
        ++differing;
        std::cerr << "  differs: " << (dirs[k] / rel).string() << "\n";
      }
    }
  }
  return {compared > 0 && differing == 0,
          fmt("%d file comparisons (checkpoints and metrics, two runs with 1 worker and one with 4), %d differ",
              compared, differing)};
}

Outcome pd_closed_form(Context&) {
  body::ChainModel m;
  body::ChainLink link;
  const double omega = 10.0;
  link.joint.kp = omega * omega;
  link.joint.kd = 2.0 * omega;
  link.joint.torque_limit = 1e6;
  link.joint.q_min = -10.0;
  link.joint.q_max = 10.0;
  m.links = {link};
  m.q_rest = VecX::Zero(1);
  body::ChainState s{VecX::Zero(1), VecX::Zero(1)};
  const VecX target = VecX::Constant(1, 0.8);
  const double dt = 0.0025;
  const int steps = static_cast<int>(std::lround(5.0 / dt));
  for (int k = 0; k < steps; ++k) s = body::step_pd(m, s, target, m.torque_limits(), dt).state;
  const double t = steps * dt;
  const double exact = 0.8 * (1.0 - (1.0 + omega * t) * std::exp(-omega * t));
  const double err = std::abs(s.q[0] - exact);
  return {err <= 1e-3, fmt("|q(5 s) - closed form| = %.2e after %d substeps", err, steps)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  Context ctx;
  ctx.source = CODRESS_SOURCE_DIR;
  std::string out = "acceptance_out";
  std::vector<int> only;
  app.add_option("--out", out, "Directory for training artifacts");
  app.add_option("--only", only, "Run only these criteria");
  app.add_option("--workers", ctx.workers, "Rollout and evaluation workers")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);
  ctx.out = out;
  fs::create_directories(ctx.out);

  const std::vector<std::pair<int, std::function<Outcome(Context&)>>> criteria{
      {1, force_penalty_exactness}, {2, reward_presets},     {3, trpo_suite},          {4, gae_oracle},
      {5, sensor_contracts},        {12, pd_closed_form},    {11, determinism},        {6, end_to_end_learning},
      {7, impairment_specialization}, {8, action_scaling},   {9, curriculum_trend},    {10, ablation_direction},
  };
  const std::set<int> selected(only.begin(), only.end());
  std::map<int, std::pair<Outcome, double>> results;
  for (const auto& [id, fn] : criteria) {
    if (!selected.empty() && !selected.count(id)) continue;
    std::cerr << "running criterion " << id << "\n";
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = fn(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    results[id] = {o, seconds_since(t0)};
    std::cout << fmt("criterion %2d  %s  %s  [%.1fs]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                     results[id].second)
              << std::flush;
  }

  nlohmann::json report = nlohmann::json::array();
  int failed = 0;
  std::cout << "\nsummary\n";
  for (const auto& [id, r] : results) {
    std::cout << fmt("criterion %2d  %s\n", id, r.first.pass ? "PASS" : "FAIL");
    failed += !r.first.pass;
    report.push_back({{"criterion", id}, {"pass", r.first.pass}, {"detail", r.first.detail}, {"seconds", r.second}});
  }
  std::ofstream(ctx.out / "acceptance_report.json") << report.dump(2) << "\n";
  return failed == 0 ? 0 : 1;
}
