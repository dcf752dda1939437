#include "ivtest/mlik.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <atomic>
#include <cmath>
#include <future>
#include <limits>
#include <mutex>
#include <thread>

#include "ivtest/logspace.hpp"
#include "ivtest/rng.hpp"

namespace ivtest {

namespace {

std::atomic<std::uint64_t> g_evidence_evals{0};

// substream tags for the per-evidence estimators
constexpr std::uint64_t kTagValid = 0x56414c4944ULL;
constexpr std::uint64_t kTagExclFull = 0x4558434cULL;
constexpr std::uint64_t kTagExclSub = 0x53554200000ULL;
constexpr std::uint64_t kTagExclScreen = 0x53435200000ULL;

// Run fn(i) for i in [0, n) across threads; results must be written to
// per-index slots so the outcome does not depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  unsigned workers = std::thread::hardware_concurrency();
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  workers = std::min<std::size_t>(workers, n);
  std::atomic<std::size_t> next{0};
  std::vector<std::future<void>> futs;
  futs.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    futs.push_back(std::async(std::launch::async, [&]() {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    }));
  }
  for (auto& f : futs) f.get();
}

// shared by prior_mc and the AIS initial rung: draws dim unit-rate
// exponentials and normalizes, so both estimators see identical points
void draw_exp_point(RngStream& rng, std::size_t dim, std::vector<double>& raw,
                    std::vector<double>& theta) {
  raw.resize(dim);
  theta.resize(dim);
  double total = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    raw[i] = rng.next_exponential();
    total += raw[i];
  }
  for (std::size_t i = 0; i < dim; ++i) theta[i] = raw[i] / total;
}

// restrict an integrand to a component subset, remapping indices
GroupedIntegrand restrict_integrand(const GroupedIntegrand& gi,
                                    const std::vector<std::uint32_t>& allowed) {
  std::vector<std::int64_t> remap(gi.dim, -1);
  for (std::size_t i = 0; i < allowed.size(); ++i) remap[allowed[i]] = i;
  GroupedIntegrand out;
  out.dim = allowed.size();
  out.counts = gi.counts;
  out.groups.resize(gi.groups.size());
  for (std::size_t j = 0; j < gi.groups.size(); ++j) {
    for (std::uint32_t g : gi.groups[j])
      if (remap[g] >= 0)
        out.groups[j].push_back(static_cast<std::uint32_t>(remap[g]));
  }
  return out;
}

LogEvidence estimate(const GroupedIntegrand& gi, const EvidenceConfig& cfg,
                     std::uint64_t tag) {
  std::uint64_t seed = stream_seed(cfg.seed, tag);
  if (cfg.method == EvidenceMethod::PriorMc) {
    LogIntegrand f = [gi](const double* theta) { return gi(theta); };
    return prior_mc(f, gi.dim, cfg.prior_mc_samples, seed);
  }
  return ais_hyperdirichlet(gi, cfg.ais, seed);
}

std::vector<std::uint32_t> exclusion_respecting_ry(const ResponseSpec& spec) {
  std::vector<std::uint32_t> out;
  for (std::size_t ry = 0; ry < spec.ry_count; ++ry) {
    bool flat = true;
    for (int x = 0; x < spec.levels.x && flat; ++x)
      for (int z = 1; z < spec.levels.z; ++z)
        if (spec.y_value(ry, x, z) != spec.y_value(ry, x, 0)) {
          flat = false;
          break;
        }
    if (flat) out.push_back(static_cast<std::uint32_t>(ry));
  }
  return out;
}

}  // namespace

GroupedIntegrand conditional_integrand(const ResponseSpec& spec,
                                       const ContingencyTable& t) {
  GroupedIntegrand gi;
  gi.dim = spec.rxy_dim();
  for (std::size_t cell = 0; cell < t.counts.size(); ++cell) {
    if (t.counts[cell] == 0) continue;
    gi.groups.push_back(spec.cell_groups[cell]);
    gi.counts.push_back(static_cast<double>(t.counts[cell]));
  }
  return gi;
}

double log_instrument_evidence(const ContingencyTable& t) {
  std::vector<std::uint64_t> nz(t.levels.z);
  for (int z = 0; z < t.levels.z; ++z) nz[z] = t.stratum_total(z);
  return log_dirichlet_multinomial(nz, 1.0);
}

double GroupedIntegrand::operator()(const double* theta) const {
  double out = 0.0;
  for (std::size_t j = 0; j < groups.size(); ++j) {
    double s = 0.0;
    for (std::uint32_t g : groups[j]) s += theta[g];
    if (s <= 0.0) return kNegInf;
    out += counts[j] * std::log(s);
  }
  return out;
}

double log_likelihood(const ThetaVector& theta, const ContingencyTable& t,
                      const ResponseSpec& spec) {
  if (!(t.levels == spec.levels))
    raise(ErrorCode::LayoutMismatch, "table levels do not match spec");
  std::vector<double> cells = forward_distribution(theta, spec);
  double out = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (t.counts[i] == 0) continue;
    if (cells[i] <= 0.0) return kNegInf;
    out += static_cast<double>(t.counts[i]) * std::log(cells[i]);
  }
  return out;
}

LogEvidence ml_air(const ContingencyTable& t) {
  ++g_evidence_evals;
  validate_levels(t.levels);
  const Levels& lv = t.levels;
  std::uint64_t group = checked_pow_u64(lv.x, lv.z - 1) *
                        checked_pow_u64(lv.y, lv.x - 1);
  LogEvidence e;
  e.value = log_dirichlet_multinomial(t.counts, static_cast<double>(group));
  e.method = EvidenceMethod::ClosedForm;
  return e;
}

LogEvidence ml_both(const ContingencyTable& t) {
  ++g_evidence_evals;
  validate_levels(t.levels);
  const Levels& lv = t.levels;
  std::uint64_t fy = outcome_function_count_excl(lv);
  if (fy == 0 ||
      treatment_function_count(lv) > kResponseSpaceCeiling / fy)
    raise(ErrorCode::CeilingExceeded, "response space too large for class");
  std::uint64_t group = checked_pow_u64(lv.x, lv.z - 1) *
                        checked_pow_u64(lv.y,
                                        static_cast<std::uint64_t>(lv.z) * lv.x - 1);
  LogEvidence e;
  e.value = log_dirichlet_multinomial(t.counts, static_cast<double>(group));
  e.method = EvidenceMethod::ClosedForm;
  return e;
}

LogEvidence ml_valid(const ContingencyTable& t, const EvidenceConfig& cfg) {
  ++g_evidence_evals;
  ResponseSpec spec = build_spec(ViolationClass::Valid, t.levels);
  GroupedIntegrand gi = conditional_integrand(spec, t);
  LogEvidence e = estimate(gi, cfg, kTagValid);
  e.value += log_instrument_evidence(t);
  return e;
}

ExclEvidence ml_excl_detail(const ContingencyTable& t,
                            const EvidenceConfig& cfg) {
  ++g_evidence_evals;
  ResponseSpec spec = build_spec(ViolationClass::Excl, t.levels);
  GroupedIntegrand gi = conditional_integrand(spec, t);
  double zf = log_instrument_evidence(t);

  std::vector<std::uint32_t> respecting = exclusion_respecting_ry(spec);
  std::vector<bool> is_respecting(spec.ry_count, false);
  for (std::uint32_t ry : respecting) is_respecting[ry] = true;

  ExclEvidence out;
  std::vector<std::uint32_t> violating;
  for (std::uint32_t ry = 0; ry < spec.ry_count; ++ry)
    if (!is_respecting[ry]) violating.push_back(ry);

  std::vector<GroupedIntegrand> subs(violating.size());
  for (std::size_t i = 0; i < violating.size(); ++i) {
    std::uint32_t v = violating[i];
    std::vector<std::uint32_t> allowed;
    for (std::size_t rx = 0; rx < spec.rx_count; ++rx) {
      for (std::uint32_t ry : respecting)
        allowed.push_back(static_cast<std::uint32_t>(rx * spec.ry_count + ry));
      allowed.push_back(static_cast<std::uint32_t>(rx * spec.ry_count + v));
    }
    std::sort(allowed.begin(), allowed.end());
    subs[i] = restrict_integrand(gi, allowed);
  }

  const bool two_stage =
      cfg.excl_screen.has_value() && cfg.method == EvidenceMethod::Ais;

  auto run_batch = [&](const std::vector<std::size_t>& idx,
                       const EvidenceConfig& batch_cfg, std::uint64_t tag_base) {
    std::exception_ptr first_error;
    std::mutex err_mutex;
    parallel_for(idx.size(), [&](std::size_t b) {
      try {
        std::size_t i = idx[b];
        LogEvidence e = estimate(subs[i], batch_cfg, tag_base + violating[i]);
        e.value += zf;
        out.submodels[i] = e;
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
    if (first_error) std::rethrow_exception(first_error);
  };

  out.submodels.resize(violating.size());
  std::vector<std::size_t> all(violating.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

  if (two_stage) {
    EvidenceConfig screen_cfg = cfg;
    screen_cfg.ais = *cfg.excl_screen;
    screen_cfg.ais.ess_floor = 0.0;  // ranking pass only
    run_batch(all, screen_cfg, kTagExclScreen);
    double screen_best = kNegInf;
    for (const LogEvidence& e : out.submodels)
      screen_best = std::max(screen_best, e.value);
    std::vector<std::size_t> contenders;
    for (std::size_t i = 0; i < out.submodels.size(); ++i)
      if (out.submodels[i].value >= screen_best - cfg.excl_screen_margin)
        contenders.push_back(i);
    // near-ties are statistically interchangeable; keep the fine pass bounded
    constexpr std::size_t kMaxContenders = 6;
    if (contenders.size() > kMaxContenders) {
      std::stable_sort(contenders.begin(), contenders.end(),
                       [&](std::size_t a, std::size_t b) {
                         return out.submodels[a].value > out.submodels[b].value;
                       });
      contenders.resize(kMaxContenders);
      std::sort(contenders.begin(), contenders.end());
    }
    run_batch(contenders, cfg, kTagExclSub);
  } else {
    run_batch(all, cfg, kTagExclSub);
  }

  out.best = out.submodels.front();
  for (const LogEvidence& e : out.submodels)
    if (e.value > out.best.value) out.best = e;

  if (cfg.excl_include_full) {
    LogEvidence full = estimate(gi, cfg, kTagExclFull);
    full.value += zf;
    out.full = full;
    if (full.value > out.best.value) out.best = full;
  }
  return out;
}

LogEvidence ml_excl(const ContingencyTable& t, const EvidenceConfig& cfg) {
  return ml_excl_detail(t, cfg).best;
}

LogEvidence prior_mc(const LogIntegrand& log_integrand, std::size_t dim,
                     std::uint64_t samples, std::uint64_t seed) {
  if (samples == 0) raise(ErrorCode::BadConfig, "prior_mc needs samples >= 1");
  constexpr std::uint64_t kBatch = 65536;
  LogMeanAccumulator acc;
  std::vector<double> logw(std::min(samples, kBatch));
  for (std::uint64_t start = 0; start < samples; start += kBatch) {
    std::uint64_t count = std::min(kBatch, samples - start);
    parallel_for(count, [&](std::size_t i) {
      RngStream rng = substream(seed, start + i);
      thread_local std::vector<double> raw, theta;
      draw_exp_point(rng, dim, raw, theta);
      logw[i] = log_integrand(theta.data());
    });
    for (std::uint64_t i = 0; i < count; ++i) acc.add(logw[i]);
  }
  LogEvidence e;
  e.value = acc.log_mean();
  e.stderr_ = acc.log_mean_stderr();
  e.method = EvidenceMethod::PriorMc;
  e.samples = samples;
  return e;
}

namespace {

struct AisChainState {
  std::vector<double> logits;
  std::vector<double> theta;
  double prior_term = 0.0;  // sum_i (l_i - e^{l_i})
  double log_like = 0.0;
};

void refresh_theta(AisChainState& s) {
  double m = kNegInf;
  for (double l : s.logits) m = std::max(m, l);
  double total = 0.0;
  for (std::size_t i = 0; i < s.logits.size(); ++i) {
    s.theta[i] = std::exp(s.logits[i] - m);
    total += s.theta[i];
  }
  for (double& v : s.theta) v /= total;
}

void init_chain(AisChainState& s, RngStream& rng, std::size_t dim,
                const LogIntegrand& f) {
  std::vector<double> raw;
  draw_exp_point(rng, dim, raw, s.theta);
  s.logits.resize(dim);
  s.prior_term = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    s.logits[i] = std::log(raw[i]);
    s.prior_term += s.logits[i] - raw[i];
  }
  s.log_like = f(s.theta.data());
}

struct MoveStats {
  int rw_proposals = 0;
  int rw_accepts = 0;
};

// Within-rung kernel: symmetric random walks in logit space (the log-gamma
// base measure keeps the implied prior on the simplex exactly uniform),
// interleaved with independence refreshes of the simplex point from the
// rung's Dirichlet surrogate at fixed total mass. The radial part of the
// target factorizes out exactly, so the refresh acceptance only sees the
// gap between the grouped likelihood and the surrogate.
MoveStats move_chain(AisChainState& s, RngStream& rng, const LogIntegrand& f,
                     double beta, double step, int moves,
                     const std::vector<double>& alphas) {
  const std::size_t dim = s.logits.size();
  MoveStats stats;
  AisChainState prop = s;

  auto commit = [&](double log_ratio) {
    if (std::log(rng.next_unit()) < log_ratio) {
      std::swap(s.logits, prop.logits);
      std::swap(s.theta, prop.theta);
      s.prior_term = prop.prior_term;
      s.log_like = prop.log_like;
      return true;
    }
    return false;
  };

  for (int m = 0; m < moves; ++m) {
    if (!alphas.empty() && m % 2 == 1) {
      double total_mass = 0.0;
      for (std::size_t i = 0; i < dim; ++i)
        total_mass += std::exp(s.logits[i]);
      double log_r = std::log(total_mass);

      double sum_v = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        double v = rng.next_gamma(alphas[i]);
        prop.theta[i] = v;
        sum_v += v;
      }
      prop.prior_term = 0.0;
      double lin_new = 0.0, lin_cur = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        double d = prop.theta[i] / sum_v;
        double g = total_mass * d;
        prop.theta[i] = d;
        prop.logits[i] = std::log(g);
        prop.prior_term += prop.logits[i] - g;
        lin_new += (alphas[i] - 1.0) * std::log(d);
        lin_cur += (alphas[i] - 1.0) * (s.logits[i] - log_r);
      }
      prop.log_like = f(prop.theta.data());
      commit(beta * prop.log_like - lin_new - (beta * s.log_like - lin_cur));
    } else {
      prop.prior_term = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        double width =
            alphas.empty() ? step : step / std::sqrt(alphas[i]);
        double l = s.logits[i] + width * rng.next_normal();
        prop.logits[i] = l;
        prop.prior_term += l - std::exp(l);
      }
      refresh_theta(prop);
      prop.log_like = f(prop.theta.data());
      ++stats.rw_proposals;
      if (commit(prop.prior_term + beta * prop.log_like -
                 (s.prior_term + beta * s.log_like)))
        ++stats.rw_accepts;
    }
  }
  return stats;
}

std::vector<double> geometric_ladder(int rungs, double beta_min) {
  std::vector<double> betas(rungs + 1, 0.0);
  if (rungs == 1) {
    betas[1] = 1.0;
    return betas;
  }
  double ratio = std::pow(1.0 / beta_min, 1.0 / static_cast<double>(rungs - 1));
  betas[1] = beta_min;
  for (int k = 2; k <= rungs; ++k) betas[k] = betas[k - 1] * ratio;
  betas[rungs] = 1.0;
  return betas;
}

// shared AIS driver; alphas[k] parameterizes rung k's Dirichlet surrogate
// (empty: plain random walk with unit scales)
LogEvidence ais_core(const LogIntegrand& f, std::size_t dim,
                     const AisConfig& cfg, std::uint64_t seed,
                     const std::vector<double>& betas,
                     const std::vector<std::vector<double>>& alphas) {
  const int K = cfg.rungs;
  static const std::vector<double> kNoAlphas;
  auto rung_alphas = [&](int k) -> const std::vector<double>& {
    return alphas.empty() ? kNoAlphas : alphas[k];
  };

  // pilot pass: freeze a per-rung step size before the weighted run
  std::vector<double> steps(K + 1, cfg.initial_step);
  if (K >= 2 && cfg.pilot_chains > 0 && cfg.moves > 0) {
    std::vector<AisChainState> pilots(cfg.pilot_chains);
    std::vector<RngStream> prng;
    prng.reserve(cfg.pilot_chains);
    for (int p = 0; p < cfg.pilot_chains; ++p) {
      prng.push_back(substream(seed, (1ULL << 40) + p));
      init_chain(pilots[p], prng.back(), dim, f);
    }
    double step = cfg.initial_step;
    for (int k = 1; k < K; ++k) {
      steps[k] = step;
      MoveStats stats;
      for (int p = 0; p < cfg.pilot_chains; ++p) {
        MoveStats one = move_chain(pilots[p], prng[p], f, betas[k], step,
                                   cfg.moves, rung_alphas(k));
        stats.rw_proposals += one.rw_proposals;
        stats.rw_accepts += one.rw_accepts;
      }
      if (stats.rw_proposals > 0) {
        double rate = static_cast<double>(stats.rw_accepts) /
                      static_cast<double>(stats.rw_proposals);
        step = std::clamp(step * std::exp(rate - 0.3), 1e-3, 10.0);
      }
    }
  }

  std::vector<double> logw(cfg.chains);
  parallel_for(cfg.chains, [&](std::size_t c) {
    RngStream rng = substream(seed, c);
    AisChainState s;
    init_chain(s, rng, dim, f);
    double w = 0.0;
    for (int k = 1; k <= K; ++k) {
      w += (betas[k] - betas[k - 1]) * s.log_like;
      if (k < K && cfg.moves > 0)
        move_chain(s, rng, f, betas[k], steps[k], cfg.moves, rung_alphas(k));
    }
    logw[c] = w;
  });

  LogMeanAccumulator acc;
  for (double w : logw) acc.add(w);
  LogEvidence e;
  e.value = acc.log_mean();
  e.stderr_ = acc.log_mean_stderr();
  e.method = EvidenceMethod::Ais;
  e.samples = cfg.chains;
  if (acc.effective_sample_size() < cfg.ess_floor)
    raise(ErrorCode::EstimatorDiverged,
          "AIS effective sample size below floor");
  return e;
}

void validate_ais_config(const AisConfig& cfg) {
  if (cfg.rungs < 1 || cfg.chains < 1 || cfg.moves < 0)
    raise(ErrorCode::BadConfig, "bad AIS configuration");
  if (!(cfg.beta_min > 0.0 && cfg.beta_min <= 1.0))
    raise(ErrorCode::BadConfig, "beta_min must lie in (0, 1]");
}

}  // namespace

LogEvidence ais_hyperdirichlet(const LogIntegrand& log_integrand,
                               std::size_t dim, const AisConfig& cfg,
                               std::uint64_t seed,
                               const std::vector<double>& coordinate_counts) {
  validate_ais_config(cfg);
  if (!coordinate_counts.empty() && coordinate_counts.size() != dim)
    raise(ErrorCode::BadConfig, "coordinate count size mismatch");

  std::vector<double> betas = geometric_ladder(cfg.rungs, cfg.beta_min);
  std::vector<std::vector<double>> alphas;
  if (!coordinate_counts.empty()) {
    alphas.resize(cfg.rungs + 1);
    for (int k = 1; k < cfg.rungs; ++k) {
      alphas[k].resize(dim);
      for (std::size_t i = 0; i < dim; ++i)
        alphas[k][i] = 1.0 + betas[k] * coordinate_counts[i];
    }
  }
  return ais_core(log_integrand, dim, cfg, seed, betas, alphas);
}

LogEvidence ais_hyperdirichlet(const GroupedIntegrand& integrand,
                               const AisConfig& cfg, std::uint64_t seed) {
  validate_ais_config(cfg);
  const std::size_t dim = integrand.dim;
  std::vector<double> betas = geometric_ladder(cfg.rungs, cfg.beta_min);

  // self-consistent Dirichlet surrogate per rung: split each tempered cell
  // count over its group proportionally to the surrogate itself
  std::vector<std::vector<double>> alphas(cfg.rungs + 1);
  std::vector<double> q(dim, 0.0), next(dim);
  for (int k = 1; k < cfg.rungs; ++k) {
    for (int iter = 0; iter < (k == 1 ? 60 : 8); ++iter) {
      std::fill(next.begin(), next.end(), 0.0);
      for (std::size_t j = 0; j < integrand.groups.size(); ++j) {
        double denom = 0.0;
        for (std::uint32_t g : integrand.groups[j]) denom += 1.0 + q[g];
        if (denom <= 0.0) continue;
        double scale = betas[k] * integrand.counts[j] / denom;
        for (std::uint32_t g : integrand.groups[j])
          next[g] += scale * (1.0 + q[g]);
      }
      q = next;
    }
    alphas[k].resize(dim);
    for (std::size_t i = 0; i < dim; ++i) alphas[k][i] = 1.0 + q[i];
  }

  LogIntegrand f = [&integrand](const double* theta) {
    return integrand(theta);
  };
  return ais_core(f, dim, cfg, seed, betas, alphas);
}

const char* ratio_decision_name(RatioDecision d) {
  switch (d) {
    case RatioDecision::Accept: return "ACCEPT";
    case RatioDecision::Reject: return "REJECT";
    case RatioDecision::Inconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

ValidityReport validity_ratio(const ContingencyTable& t,
                              const std::set<ViolationClass>& violations,
                              double prior_ratio, double gamma,
                              const EvidenceConfig& cfg) {
  if (violations.empty())
    raise(ErrorCode::BadConfig, "at least one violation class is required");
  if (violations.count(ViolationClass::Valid))
    raise(ErrorCode::BadConfig, "violations must be invalid-model classes");
  if (!(gamma > 1.0)) raise(ErrorCode::BadConfig, "gamma must exceed 1");
  if (!(prior_ratio > 0.0))
    raise(ErrorCode::BadConfig, "prior ratio must be positive");

  ValidityReport rep;
  rep.prior_ratio = prior_ratio;
  rep.log_prior_ratio = std::log(prior_ratio);
  rep.gamma = gamma;

  try {
    rep.valid = ml_valid(t, cfg);
    rep.valid_ok = true;
  } catch (const Error& e) {
    rep.estimator_errors.push_back(std::string("valid: ") + e.what());
  }

  for (ViolationClass cls : violations) {
    try {
      switch (cls) {
        case ViolationClass::Excl: {
          ExclEvidence ee = ml_excl_detail(t, cfg);
          rep.invalid[cls] = ee.best;
          rep.excl_full = ee.full;
          break;
        }
        case ViolationClass::Air:
          rep.invalid[cls] = ml_air(t);
          break;
        case ViolationClass::Both:
          rep.invalid[cls] = ml_both(t);
          break;
        default:
          break;
      }
    } catch (const Error& e) {
      rep.estimator_errors.push_back(
          std::string(violation_class_name(cls)) + ": " + e.what());
    }
  }

  if (!rep.valid_ok || rep.invalid.empty()) {
    rep.log_ratio = std::numeric_limits<double>::quiet_NaN();
    rep.decision = RatioDecision::Inconclusive;
    return rep;
  }

  double best_invalid = kNegInf;
  for (const auto& [cls, e] : rep.invalid)
    best_invalid = std::max(best_invalid, e.value);
  rep.log_ratio = rep.valid.value - best_invalid + rep.log_prior_ratio;

  double lg = std::log(gamma);
  if (!rep.estimator_errors.empty())
    rep.decision = RatioDecision::Inconclusive;
  else if (rep.log_ratio > lg)
    rep.decision = RatioDecision::Accept;
  else if (rep.log_ratio < -lg)
    rep.decision = RatioDecision::Reject;
  else
    rep.decision = RatioDecision::Inconclusive;
  return rep;
}

std::uint64_t evidence_eval_count() { return g_evidence_evals.load(); }

}  // namespace ivtest
