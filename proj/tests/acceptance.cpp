// Acceptance checks. Prints one PASS/FAIL line per criterion, followed by
// indented detail lines, and exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "oracles.hpp"
#include "radt/augment.hpp"
#include "radt/classifiers.hpp"
#include "radt/config.hpp"
#include "radt/data.hpp"
#include "radt/envs.hpp"
#include "radt/experiment.hpp"
#include "radt/rcsl.hpp"
#include "radt/rng.hpp"
#include "radt/shift.hpp"
#include "radt/stats.hpp"

using namespace radt;

namespace {

// Pinned tolerances and budgets.
constexpr double kPolicyTol = 1e-9;
constexpr double kC1Seconds = 10.0;
constexpr double kBayesTol = 1e-9;
constexpr double kTrainedTol = 0.1;
constexpr std::size_t kTrainedTransitions = 10000;
constexpr double kC2Seconds = 30.0;
constexpr std::size_t kMomentTrajectories = 100000;
constexpr double kMomentSe = 3.0;
constexpr double kWideClipLo = 1e-3;
constexpr double kWideClipHi = 1e3;
constexpr std::size_t kMomentMinSamples = 100;
constexpr double kC3Seconds = 60.0;
constexpr std::size_t kChiTrajectories = 100000;
constexpr double kChiAlpha = 0.001;
constexpr double kChiPassRate = 0.95;
constexpr double kChiMinSamples = 50.0;
constexpr double kHeadlineSe = 2.0;
constexpr double kDaraSe = 1.0;
constexpr double kC5Seconds = 300.0;
constexpr double kNullSe = 3.0;
constexpr std::size_t kSlicePairs = 1000;
constexpr double kC8Seconds = 5.0;
constexpr double kGradTol = 1e-4;
constexpr double kFdStep = 1e-5;
constexpr double kNormTol = 1e-10;

struct Outcome {
  bool pass = false;
  std::vector<std::string> details;
};

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::string fmt(double x) {
  std::ostringstream out;
  out.precision(4);
  out << x;
  return out.str();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

double total(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum;
}

int default_jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

// (target, source, behavior) triples with |S| <= 6, |A| <= 3, H <= 6.
struct Pair {
  std::string name;
  TabularMdp target;
  TabularMdp source;
  StationaryPolicy beta;
};

std::vector<Pair> small_pairs() {
  std::vector<Pair> pairs;
  const auto cw = chain_walk(5, 0.9, 5);
  pairs.push_back({"chainwalk5/perturb0.5", cw, apply_shift(cw, {ShiftKind::TransitionPerturb, 0.5, 7}),
                   StationaryPolicy::uniform(5, 5, 2)});
  const auto r1 = random_mdp(6, 3, 6, 1);
  pairs.push_back({"random6x3/action_noise0.4", r1, apply_shift(r1, {ShiftKind::ActionNoise, 0.4, 2}),
                   StationaryPolicy::uniform(6, 6, 3)});
  const auto r2 = random_mdp(4, 2, 4, 3);
  pairs.push_back({"random4x2/perturb0.7", r2, apply_shift(r2, {ShiftKind::TransitionPerturb, 0.7, 4}),
                   StationaryPolicy::uniform(4, 4, 2)});
  const auto r3 = random_mdp(5, 3, 5, 5);
  pairs.push_back({"random5x3/restrict0.6", r3, apply_shift(r3, {ShiftKind::ActionRestrict, 0.6, 6}),
                   StationaryPolicy::epsilon_greedy(value_iteration(r3).policy, 0.3)});
  return pairs;
}

Outcome criterion1() {
  Outcome out;
  Timer timer;
  double worst = 0.0;
  std::size_t pairs = 0;
  for (const auto& p : small_pairs()) {
    const auto r = oracle::pushforward_policy_gap(p.target, p.source, p.beta);
    out.details.push_back(p.name + ": max gap " + fmt(r.max_gap) + " over " + std::to_string(r.cells) + " cells");
    if (r.cells > 0) ++pairs;
    worst = std::max(worst, r.max_gap);
  }
  const double secs = timer.seconds();
  out.pass = pairs >= 3 && worst <= kPolicyTol && secs < kC1Seconds;
  out.details.push_back("max gap " + fmt(worst) + " (tol " + fmt(kPolicyTol) + "), " + fmt(secs) + " s (budget " +
                        fmt(kC1Seconds) + " s)");
  return out;
}

// Max |delta_r - log p_T/p_S| over transitions supported by both domains.
double delta_r_error(const DeltaRTable& dr, const TabularMdp& source, const TabularMdp& target) {
  double worst = 0.0;
  for (int s = 0; s < source.num_states(); ++s) {
    for (int a = 0; a < source.num_actions(); ++a) {
      for (int n = 0; n < source.num_states(); ++n) {
        const double ps = source.p(s, a, n);
        const double pt = target.p(s, a, n);
        if (ps <= 0.0 || pt <= 0.0) continue;
        worst = std::max(worst, std::abs(dr.at(s, a, n) - (std::log(pt) - std::log(ps))));
      }
    }
  }
  return worst;
}

Outcome criterion2() {
  Outcome out;
  Timer timer;
  double bayes_worst = 0.0;
  for (const auto& p : small_pairs()) {
    const std::size_t cells = static_cast<std::size_t>(p.target.num_states()) * p.target.num_actions();
    const std::vector<double> visit(cells, 1.0 / static_cast<double>(cells));
    const auto dr = delta_r(bayes_classifier_oracle(p.source, p.target, visit), kDefaultDeltaRClamp);
    bayes_worst = std::max(bayes_worst, delta_r_error(dr, p.source, p.target));
  }
  out.details.push_back("Bayes oracle: max error " + fmt(bayes_worst) + " (tol " + fmt(kBayesTol) + ")");

  const auto target = two_state(0.6, 1);
  const auto source = two_state(0.4, 1);
  const auto beta = StationaryPolicy::uniform(1, 2, 2);
  const std::size_t half = kTrainedTransitions / 2;
  const auto t_ds = collect(target, beta, half, 11, Domain::Target);
  const auto s_ds = collect(source, beta, half, 12, Domain::Source);
  const auto trained = train_classifiers(s_ds, t_ds, ClassifierConfig{0.02, 60, 256, 13, 1e-6});
  const double trained_worst = delta_r_error(delta_r(trained, kDefaultDeltaRClamp), source, target);
  out.details.push_back("trained on two-state 0.6 vs 0.4, " + std::to_string(kTrainedTransitions) +
                        " balanced transitions: max error " + fmt(trained_worst) + " (tol " + fmt(kTrainedTol) + ")");
  const double secs = timer.seconds();
  out.details.push_back(fmt(secs) + " s (budget " + fmt(kC2Seconds) + " s)");
  out.pass = bayes_worst <= kBayesTol && trained_worst <= kTrainedTol && secs < kC2Seconds;
  return out;
}

struct MomentCheck {
  std::size_t checked = 0;
  std::size_t matched = 0;
  std::size_t out_of_range = 0;
  double worst_mean_z = 0.0;
  double worst_sd_z = 0.0;
};

MomentCheck moment_check(const TabularMdp& target, const TabularMdp& source, const StationaryPolicy& beta,
                         std::uint64_t seed) {
  const auto ds = collect(source, beta, kMomentTrajectories, seed, Domain::Source);
  const auto src = exact_return_stats(source, beta);
  const auto tgt = exact_return_stats(target, beta);
  const auto aug = psi_mean_variance(ds, src, tgt, ClipConfig{kWideClipLo, kWideClipHi, 1e-6});
  std::vector<std::vector<double>> samples(src.mu.size());
  for (const auto& traj : aug.data.trajectories) {
    for (std::size_t t = 0; t < traj.length(); ++t) {
      samples[src.index(static_cast<int>(t), traj.steps[t].state, traj.steps[t].action)].push_back(traj.rtg[t]);
    }
  }
  MomentCheck out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].size() < kMomentMinSamples) continue;
    const bool both_degenerate = src.sigma[i] <= 0.0 && tgt.sigma[i] <= 0.0;
    const double ratio = src.sigma[i] > 0.0 ? tgt.sigma[i] / src.sigma[i] : INFINITY;
    if (!both_degenerate && (ratio < kWideClipLo || ratio > kWideClipHi)) {
      // The clip bounds the scale factor, so a law with no spread cannot be
      // stretched onto a spread-out target, nor squashed onto a point mass.
      ++out.out_of_range;
      continue;
    }
    ++out.checked;
    const auto m = mean_se(samples[i]);
    double m4 = 0.0;
    for (double x : samples[i]) m4 += std::pow(x - m.mean, 4);
    m4 /= static_cast<double>(m.n);
    const double var = m.sd * m.sd;
    const double se_sd =
        std::sqrt(std::max(0.0, m4 - var * var) / static_cast<double>(m.n)) / (2.0 * std::max(m.sd, 1e-12));
    const double se_mean = tgt.sigma[i] / std::sqrt(static_cast<double>(m.n));
    const double mean_err = std::abs(m.mean - tgt.mu[i]);
    const double sd_err = std::abs(m.sd - tgt.sigma[i]);
    if (mean_err <= kMomentSe * se_mean + 1e-9 && sd_err <= kMomentSe * se_sd + 1e-9) ++out.matched;
    if (se_mean > 0.0) out.worst_mean_z = std::max(out.worst_mean_z, mean_err / se_mean);
    if (se_sd > 0.0) out.worst_sd_z = std::max(out.worst_sd_z, sd_err / se_sd);
  }
  return out;
}

// The verdict rests on the benchmark pair. The other small pairs are
// reported for information: with hundreds of cells and two 3-SE tests each,
// a handful of misses is expected by chance alone.
Outcome criterion3() {
  Outcome out;
  Timer timer;
  bool verdict = false;
  std::uint64_t seed = 21;
  const auto pairs = small_pairs();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    const auto r = moment_check(p.target, p.source, p.beta, seed++);
    if (i == 0) verdict = r.checked > 0 && r.matched == r.checked;
    out.details.push_back(std::string(i == 0 ? "" : "(info) ") + p.name + ": " + std::to_string(r.matched) + "/" +
                          std::to_string(r.checked) + " cells within " + fmt(kMomentSe) + " SE (worst mean z " +
                          fmt(r.worst_mean_z) + ", sd z " + fmt(r.worst_sd_z) + "); " +
                          std::to_string(r.out_of_range) + " cells with a spread ratio outside the clip range");
  }
  const double secs = timer.seconds();
  out.details.push_back(fmt(secs) + " s (budget " + fmt(kC3Seconds) + " s)");
  out.pass = verdict && secs < kC3Seconds;
  return out;
}

Outcome criterion4() {
  Outcome out;
  const auto target = chain_walk(5, 0.9, 5);
  const auto source = apply_shift(target, {ShiftKind::TransitionPerturb, 0.5, 7});
  const auto beta = StationaryPolicy::uniform(5, 5, 2);
  const auto law = return_table(target, beta);
  const auto ds = collect(source, beta, kChiTrajectories, 31, Domain::Source);
  const auto aug = psi_exact_cdf(ds, return_table(source, beta), law, 32);
  const auto& data = aug.data;
  std::vector<std::map<std::int64_t, double>> counts(static_cast<std::size_t>(data.horizon) * data.num_states *
                                                     data.num_actions);
  for (const auto& traj : data.trajectories) {
    for (std::size_t t = 0; t < traj.length(); ++t) {
      const auto& st = traj.steps[t];
      counts[(t * data.num_states + st.state) * data.num_actions + st.action][std::llround(traj.rtg[t] / law.grid())] +=
          1.0;
    }
  }
  std::size_t cells = 0, passed = 0;
  for (int t = 0; t < data.horizon; ++t) {
    for (int s = 0; s < data.num_states; ++s) {
      for (int a = 0; a < data.num_actions; ++a) {
        const auto& c = counts[(static_cast<std::size_t>(t) * data.num_states + s) * data.num_actions + a];
        double n = 0.0;
        for (const auto& [k, v] : c) n += v;
        if (n < kChiMinSamples) continue;
        std::vector<double> observed(law.width(), 0.0);
        bool off_support = false;
        for (const auto& [k, v] : c) {
          const auto idx = k - law.lo_units();
          if (idx < 0 || idx >= static_cast<std::int64_t>(law.width())) {
            off_support = true;
            continue;
          }
          observed[static_cast<std::size_t>(idx)] = v;
        }
        ++cells;
        const auto probs = law.masses(t, s, a);
        if (!off_support && chi_square_gof(observed, probs).p_value >= kChiAlpha) ++passed;
      }
    }
  }
  const double rate = cells > 0 ? static_cast<double>(passed) / static_cast<double>(cells) : 0.0;
  out.details.push_back(std::to_string(passed) + "/" + std::to_string(cells) + " cells not rejected at alpha " +
                        fmt(kChiAlpha) + " (rate " + fmt(rate) + ", need " + fmt(kChiPassRate) + ")");
  out.pass = cells > 0 && rate >= kChiPassRate;
  return out;
}

ExperimentConfig shipped_config(const std::string& name, const std::filesystem::path& output_dir) {
  auto cfg = load_experiment_config(std::filesystem::path(RADT_SOURCE_DIR) / "configs" / name, {}, false);
  cfg.run.output_dir = output_dir;
  return cfg;
}

std::string cell_line(const MatrixResult& result, Cell cell) {
  const auto s = result.summary(cell);
  return cell_name(cell) + ": mean " + fmt(s.headline.mean) + " (SE " + fmt(s.headline.se) + ", failures " +
         std::to_string(s.failures) + ")";
}

Outcome criterion5(const std::filesystem::path& work) {
  Outcome out;
  Timer timer;
  const auto cfg = shipped_config("demo.ini", work / "demo_a");
  const auto result = run_matrix(cfg, RunOptions{default_jobs(), true, {}});
  const double secs = timer.seconds();
  const auto cdf = result.summary(Cell::ExactCdf);
  const auto mv = result.summary(Cell::MeanVariance);
  const auto id = result.summary(Cell::Identity);
  const auto dara = result.summary(Cell::Dara);
  for (auto cell : {Cell::ExactCdf, Cell::MeanVariance, Cell::Identity, Cell::Dara}) {
    out.details.push_back(cell_line(result, cell));
  }
  const bool order = cdf.headline.mean >= mv.headline.mean && mv.headline.mean >= id.headline.mean;
  const double gap_se = pooled_se(cdf.headline, id.headline);
  const double dara_se = pooled_se(dara.headline, id.headline);
  const bool spread = cdf.headline.mean - id.headline.mean >= kHeadlineSe * gap_se;
  const bool dara_ok = dara.headline.mean - id.headline.mean >= kDaraSe * dara_se;
  const bool no_failures = cdf.failures + mv.failures + id.failures + dara.failures == 0;
  out.details.push_back(std::string("ordering ExactCDF >= MV >= Identity: ") + (order ? "yes" : "no"));
  out.details.push_back("ExactCDF - Identity = " + fmt(cdf.headline.mean - id.headline.mean) + " (need >= " +
                        fmt(kHeadlineSe) + " x pooled SE " + fmt(gap_se) + ")");
  out.details.push_back("DARA - Identity = " + fmt(dara.headline.mean - id.headline.mean) + " (need >= " +
                        fmt(kDaraSe) + " x pooled SE " + fmt(dara_se) + ")");
  out.details.push_back(fmt(secs) + " s (budget " + fmt(kC5Seconds) + " s)");
  out.pass = order && spread && dara_ok && no_failures && secs < kC5Seconds;
  return out;
}

double clip_rate(const MatrixResult& result, Cell cell) {
  double clipped = 0.0, steps = 0.0;
  for (const auto& r : result.results) {
    if (r.cell != cell) continue;
    clipped += static_cast<double>(r.diagnostics.clipped_steps);
    steps += static_cast<double>(r.diagnostics.steps);
  }
  return steps > 0.0 ? clipped / steps : 0.0;
}

Outcome criterion6(const std::filesystem::path& work) {
  Outcome out;
  const auto cfg = shipped_config("zero_shift.ini", work / "zero_shift");
  const auto result = run_matrix(cfg, RunOptions{default_jobs(), false, {}});
  const auto id = result.summary(Cell::Identity);
  out.details.push_back(cell_line(result, Cell::Identity));
  bool all = id.failures == 0;
  for (auto cell : {Cell::Dara, Cell::MeanVariance, Cell::MeanVarianceEmpirical, Cell::ExactCdf}) {
    const auto s = result.summary(cell);
    const double se = pooled_se(s.headline, id.headline);
    const double diff = s.headline.mean - id.headline.mean;
    const bool ok = s.failures == 0 && std::abs(diff) <= kNullSe * se;
    all = all && ok;
    out.details.push_back(cell_line(result, cell) + "; diff " + fmt(diff) + " vs " + fmt(kNullSe) + " x pooled SE " +
                          fmt(se) + (ok ? "" : "  <- outside"));
  }
  out.details.push_back("(info) clip engagement: RADT-MV " + fmt(clip_rate(result, Cell::MeanVariance)) +
                        ", RADT-MV-empirical " + fmt(clip_rate(result, Cell::MeanVarianceEmpirical)));
  // Control: the same run with exact moments in place of the estimated ones
  // separates the transform from the estimation noise in its inputs.
  auto exact_cfg = cfg;
  exact_cfg.augment.estimator = Estimator::ExactDP;
  exact_cfg.run.cells = {cell_name(Cell::Identity), cell_name(Cell::MeanVariance)};
  const auto control = run_matrix(exact_cfg, RunOptions{default_jobs(), false, {}});
  const auto cid = control.summary(Cell::Identity);
  const auto cmv = control.summary(Cell::MeanVariance);
  out.details.push_back("(info) RADT-MV with exact moments: mean " + fmt(cmv.headline.mean) + ", diff " +
                        fmt(cmv.headline.mean - cid.headline.mean) + " vs Identity");
  out.pass = all;
  return out;
}

Outcome criterion7(const std::filesystem::path& work) {
  Outcome out;
  Timer timer;
  const auto cfg = shipped_config("rate_study.ini", work / "rate_study");
  const auto result = rate_study(cfg, RunOptions{default_jobs(), true, {}});
  std::size_t failures = 0;
  for (const auto& p : result.points) {
    failures += p.failures;
    out.details.push_back("N = " + std::to_string(p.n_total) + " (" + std::to_string(p.n_target) + "T + " +
                          std::to_string(p.n_source) + "S): median suboptimality " + fmt(p.median) + ", failures " +
                          std::to_string(p.failures));
  }
  out.details.push_back("log-log slope " + fmt(result.slope) + ", " + fmt(timer.seconds()) + " s");
  out.pass = result.points.size() == 4 && failures == 0 && result.monotone_non_increasing();
  return out;
}

Outcome criterion8() {
  Outcome out;
  Timer timer;
  Rng rng(81);
  std::size_t windows = 0, bad = 0;
  for (std::size_t pair = 0; pair < kSlicePairs; ++pair) {
    const int S = 2 + static_cast<int>(rng.below(5));
    const int A = 1 + static_cast<int>(rng.below(3));
    const int H = 1 + static_cast<int>(rng.below(8));
    const auto mdp = random_mdp(S, A, H, rng.next_u64());
    auto traj = collect(mdp, StationaryPolicy::uniform(H, S, A), 1, rng.next_u64()).trajectories[0];
    // Half of the trajectories carry arbitrary relabelled returns, as after
    // an augmentation.
    if (pair % 2 == 1) {
      for (double& g : traj.rtg) g = 4.0 * rng.normal();
    }
    const std::size_t k = 1 + rng.below(static_cast<std::uint64_t>(H));
    const bool partial = rng.below(2) == 1;
    const auto slices = consistent_return_slices(traj, k, partial);
    const std::size_t expected = partial ? static_cast<std::size_t>(H) : static_cast<std::size_t>(H) - k + 1;
    if (slices.size() != expected) ++bad;
    for (const auto& w : slices) {
      ++windows;
      bool ok = !w.steps.empty() && w.steps.size() == w.rtg.size() && w.steps.size() <= k &&
                w.start + w.steps.size() <= traj.length();
      if (ok) {
        const std::size_t last = w.start + w.steps.size() - 1;
        ok = w.rtg.back() == traj.rtg[last];
        for (std::size_t i = 0; ok && i < w.steps.size(); ++i) {
          ok = w.steps[i] == traj.steps[w.start + i];
          if (ok && i + 1 < w.steps.size()) ok = w.rtg[i] == w.steps[i].reward + w.rtg[i + 1];
        }
      }
      if (!ok) ++bad;
    }
  }
  const double secs = timer.seconds();
  out.details.push_back(std::to_string(kSlicePairs) + " pairs, " + std::to_string(windows) + " windows, " +
                        std::to_string(bad) + " violations, " + fmt(secs) + " s (budget " + fmt(kC8Seconds) + " s)");
  out.pass = bad == 0 && secs < kC8Seconds;
  return out;
}

// Largest relative deviation between an analytic gradient and central
// differences of `loss` around the current parameters.
double gradient_error(std::vector<double>& params, const std::vector<double>& grad,
                      const std::function<double()>& loss) {
  double worst = 0.0;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + kFdStep;
    const double up = loss();
    params[i] = saved - kFdStep;
    const double down = loss();
    params[i] = saved;
    const double fd = (up - down) / (2.0 * kFdStep);
    worst = std::max(worst, std::abs(fd - grad[i]) / std::max(1.0, std::abs(grad[i])));
  }
  return worst;
}

Outcome criterion9() {
  Outcome out;
  Rng rng(91);
  double logistic_worst = 0.0;
  for (auto kind : {FeatureKind::SAS, FeatureKind::SA}) {
    LogisticModel model(kind, 4, 3);
    std::vector<LabeledTransition> batch;
    for (int i = 0; i < 60; ++i) {
      batch.push_back({static_cast<int>(rng.below(4)), static_cast<int>(rng.below(3)), static_cast<int>(rng.below(4)),
                       static_cast<double>(rng.below(2)), 0.5 + rng.uniform()});
    }
    for (int point = 0; point < 10; ++point) {
      // Bias is packed after the weights so one vector covers both.
      std::vector<double> params(model.num_features() + 1);
      for (double& w : params) w = rng.normal();
      const auto load = [&] {
        std::copy(params.begin(), params.end() - 1, model.weights().begin());
        model.bias() = params.back();
      };
      load();
      std::vector<double> grad;
      cross_entropy(model, batch, 1e-3, &grad);
      logistic_worst = std::max(logistic_worst, gradient_error(params, grad, [&] {
                                  load();
                                  return cross_entropy(model, batch, 1e-3);
                                }));
    }
  }
  double neural_worst = 0.0;
  const auto ds = collect(chain_walk(), StationaryPolicy::uniform(5, 5, 2), 30, 92);
  const auto samples = neural_samples(ds);
  for (bool time_indexed : {false, true}) {
    NeuralConfig cfg;
    cfg.hidden = 8;
    cfg.time_indexed = time_indexed;
    NeuralRcslPolicy policy(5, 2, 5, cfg, 0.3, 0.5);
    for (int point = 0; point < 10; ++point) {
      for (double& w : policy.params()) w = 0.8 * rng.normal();
      std::vector<double> grad;
      policy.nll(samples, &grad);
      neural_worst = std::max(neural_worst, gradient_error(policy.params(), grad, [&] { return policy.nll(samples); }));
    }
  }
  out.details.push_back("logistic gradient max relative error " + fmt(logistic_worst) + ", neural " +
                        fmt(neural_worst) + " (tol " + fmt(kGradTol) + ")");

  double norm_worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const int S = 2 + static_cast<int>(seed % 5);
    const int A = 1 + static_cast<int>(seed % 3);
    const int H = 1 + static_cast<int>(seed % 6);
    const auto mdp = random_mdp(S, A, H, seed);
    const auto beta = StationaryPolicy::uniform(H, S, A);
    const auto table = return_table(mdp, beta);
    const auto occ = joint_occupancy(mdp, beta);
    const auto state_occ = state_occupancy(mdp, beta);
    for (int t = 0; t < H; ++t) {
      double occ_t = 0.0;
      double joint_t = 0.0;
      for (int s = 0; s < S; ++s) {
        occ_t += state_occ[static_cast<std::size_t>(t) * S + s];
        for (int a = 0; a < A; ++a) {
          const auto m = table.masses(t, s, a);
          norm_worst = std::max(norm_worst, std::abs(total(m) - 1.0));
          for (double x : m) norm_worst = std::max(norm_worst, std::max(0.0, -x));
          const auto d = return_to_go_distribution(mdp, beta, t, s, a);
          norm_worst = std::max(norm_worst, std::abs(total(d.mass) - 1.0));
          joint_t += total(occ.joint.masses(t, s, a));
        }
      }
      norm_worst = std::max(norm_worst, std::abs(occ_t - 1.0));
      norm_worst = std::max(norm_worst, std::abs(joint_t - 1.0));
    }
  }
  out.details.push_back("DP normalization max deviation " + fmt(norm_worst) + " (tol " + fmt(kNormTol) + ")");
  out.pass = logistic_worst <= kGradTol && neural_worst <= kGradTol && norm_worst <= kNormTol;
  return out;
}

Outcome criterion10(const std::filesystem::path& work) {
  Outcome out;
  const auto first_path = work / "demo_a" / "reports" / "matrix.csv";
  if (!std::filesystem::exists(first_path)) {
    const auto cfg = shipped_config("demo.ini", work / "demo_a");
    run_matrix(cfg, RunOptions{default_jobs(), true, {}});
  }
  const auto cfg = shipped_config("demo.ini", work / "demo_b");
  // A different job count on the second run; the output must not depend on it.
  run_matrix(cfg, RunOptions{std::max(1, default_jobs() / 2), true, {}});
  const auto a = read_file(first_path);
  const auto b = read_file(work / "demo_b" / "reports" / "matrix.csv");
  out.details.push_back("matrix.csv sizes " + std::to_string(a.size()) + " and " + std::to_string(b.size()) + " bytes");
  out.pass = !a.empty() && a == b;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::filesystem::path work = std::filesystem::temp_directory_path() / "radt_acceptance";
  std::vector<int> only;
  app.add_option("--work-dir", work, "Scratch directory for experiment outputs");
  app.add_option("--only", only, "Run only these criteria")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  std::filesystem::remove_all(work);
  std::filesystem::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"exact transform gives the target infinite-data policy", criterion1},
      {"DARA reward correction equals the dynamics log-ratio", criterion2},
      {"mean-variance transform matches target moments", criterion3},
      {"exact CDF transform passes per-cell chi-square", criterion4},
      {"demo benchmark ordering", [&] { return criterion5(work); }},
      {"no-shift null", [&] { return criterion6(work); }},
      {"rate study medians non-increasing", [&] { return criterion7(work); }},
      {"consistent return slices", criterion8},
      {"gradients and DP normalization", criterion9},
      {"demo runs are byte-identical", [&] { return criterion10(work); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome outcome;
    Timer timer;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.details.push_back(std::string("exception: ") + e.what());
    }
    if (!outcome.pass) ++failed;
    std::cout << "criterion " << id << (id < 10 ? "  " : " ") << (outcome.pass ? "PASS" : "FAIL") << "  "
              << criteria[i].first << "  [" << fmt(timer.seconds()) << " s]\n";
    for (const auto& line : outcome.details) std::cout << "    " << line << "\n";
    std::cout.flush();
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << "\n";
  return failed == 0 ? 0 : 1;
}
