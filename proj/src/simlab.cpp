#include "ivtest/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "ivtest/logspace.hpp"

namespace ivtest {

WaldEstimate wald_estimate(const CondProbVector& f) {
  if (!f.levels.all_binary())
    raise(ErrorCode::NotBinary, "Wald estimator needs binary data");
  double num = (f.at(1, 0, 1) + f.at(1, 1, 1)) - (f.at(0, 0, 1) + f.at(0, 1, 1));
  double den = (f.at(1, 1, 0) + f.at(1, 1, 1)) - (f.at(0, 1, 0) + f.at(0, 1, 1));
  WaldEstimate w;
  if (den == 0.0) return w;
  w.defined = true;
  w.value = std::clamp(num / den, -1.0, 1.0);
  return w;
}

double binary_instrument_strength(const CondProbVector& f) {
  if (!f.levels.all_binary())
    raise(ErrorCode::NotBinary, "instrument strength needs binary data");
  return (f.at(1, 1, 0) + f.at(1, 1, 1)) - (f.at(0, 1, 0) + f.at(0, 1, 1));
}

double average_causal_effect(const ThetaVector& theta,
                             const ResponseSpec& spec) {
  if (!spec.levels.all_binary())
    raise(ErrorCode::NotBinary, "causal effect contrast needs binary data");
  validate_theta(theta, spec);
  const std::size_t rxy = spec.rxy_dim();

  if (!spec.y_depends_on_z) {
    // ry marginal; intervention on x reads the response table directly
    std::vector<double> p_ry(spec.ry_count, 0.0);
    if (spec.joint_layout) {
      for (std::size_t i = 0; i < theta.response.size(); ++i)
        p_ry[(i % rxy) % spec.ry_count] += theta.response[i];
    } else {
      for (std::size_t i = 0; i < rxy; ++i)
        p_ry[i % spec.ry_count] += theta.response[i];
    }
    double ace = 0.0;
    for (std::size_t ry = 0; ry < spec.ry_count; ++ry)
      ace += p_ry[ry] * (spec.y_value(ry, 1, 0) - spec.y_value(ry, 0, 0));
    return ace;
  }

  // direct z->y dependence; average the contrast at the z marginal
  double ace = 0.0;
  for (int z = 0; z < spec.levels.z; ++z) {
    std::vector<double> p_ry(spec.ry_count, 0.0);
    double pz = 0.0;
    if (spec.joint_layout) {
      const double* block = theta.response.data() + z * rxy;
      for (std::size_t i = 0; i < rxy; ++i) {
        p_ry[i % spec.ry_count] += block[i];
        pz += block[i];
      }
    } else {
      pz = theta.z_probs[z];
      for (std::size_t i = 0; i < rxy; ++i)
        p_ry[i % spec.ry_count] += pz * theta.response[i];
    }
    (void)pz;
    for (std::size_t ry = 0; ry < spec.ry_count; ++ry)
      ace += p_ry[ry] * (spec.y_value(ry, 1, z) - spec.y_value(ry, 0, z));
  }
  return ace;
}

TrueBias true_bias(const ThetaVector& theta, const ResponseSpec& spec) {
  std::vector<double> cells = forward_distribution(theta, spec);
  CondProbVector f = cond_prob_from_joint(cells, spec.levels);
  WaldEstimate w = wald_estimate(f);
  TrueBias b;
  if (!w.defined) return b;
  b.defined = true;
  b.value = w.value - average_causal_effect(theta, spec);
  return b;
}

PowerCurve run_power_experiment(const PowerConfig& cfg) {
  if (cfg.model_count < 1 || cfg.bins < 1)
    raise(ErrorCode::BadConfig, "power experiment needs models and bins");
  if (cfg.cls == ViolationClass::Valid)
    raise(ErrorCode::BadConfig, "power experiment samples invalid models");

  ResponseSpec spec = build_spec(cfg.cls, Levels{2, 2, 2});

  PowerCurve curve;
  curve.descriptor = cfg.descriptor;
  curve.model_count = cfg.model_count;
  curve.bins.resize(cfg.bins);
  std::vector<double> bias_sum(cfg.bins, 0.0);
  for (int b = 0; b < cfg.bins; ++b) {
    curve.bins[b].lo = static_cast<double>(b) / cfg.bins;
    curve.bins[b].hi = static_cast<double>(b + 1) / cfg.bins;
  }

  for (int i = 0; i < cfg.model_count; ++i) {
    RngStream rng = substream(cfg.seed, i);
    ThetaVector theta = sample_model(spec, cfg.constraint, rng);
    std::vector<double> cells = forward_distribution(theta, spec);
    CondProbVector f = cond_prob_from_joint(cells, spec.levels);

    bool pass = pearl_binary_test(f).passed() && monotonicity_test(f).passed();
    double strength = std::abs(binary_instrument_strength(f));
    int b = std::min(cfg.bins - 1,
                     static_cast<int>(strength * cfg.bins));
    PowerBin& bin = curve.bins[b];
    ++bin.models;
    if (pass) {
      ++bin.passed;
      ++curve.passed_total;
    }
    TrueBias bias = true_bias(theta, spec);
    if (bias.defined) {
      ++bin.wald_defined;
      bias_sum[b] += std::abs(bias.value);
    }
  }
  for (int b = 0; b < cfg.bins; ++b)
    if (curve.bins[b].wald_defined > 0)
      curve.bins[b].mean_abs_bias = bias_sum[b] / curve.bins[b].wald_defined;
  return curve;
}

std::vector<double> model_cell_probabilities(const BernoulliIvModel& m) {
  auto rate = [](double p, const char* what) {
    if (p < 0.0 || p > 1.0)
      raise(ErrorCode::InvalidProbability,
            std::string(what) + " rate outside [0,1]");
    return p;
  };
  Levels lv{2, 2, 2};
  std::vector<double> cells(cell_count(lv), 0.0);
  for (int u = 0; u < 2; ++u) {
    double pz1 = rate(m.pz + m.uz * u, "instrument");
    for (int z = 0; z < 2; ++z) {
      double pz = z ? pz1 : 1.0 - pz1;
      double px1 = rate(m.bx + m.zx * z + m.ux * u, "treatment");
      for (int x = 0; x < 2; ++x) {
        double px = x ? px1 : 1.0 - px1;
        double py1 = rate(m.by + m.zy * z + m.xy * x + m.uy * u, "outcome");
        for (int y = 0; y < 2; ++y) {
          double py = y ? py1 : 1.0 - py1;
          cells[cell_index(lv, z, x, y)] += 0.5 * pz * px * py;
        }
      }
    }
  }
  return cells;
}

std::vector<double> threshold_function_probs(const std::vector<double>& t) {
  const std::size_t k = t.size();
  std::vector<double> breaks{0.0, 1.0};
  for (double v : t) breaks.push_back(std::clamp(v, 0.0, 1.0));
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  std::vector<double> probs(std::size_t{1} << k, 0.0);
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    double a = breaks[i], b = breaks[i + 1];
    if (b <= a) continue;
    double v = 0.5 * (a + b);
    std::size_t idx = 0;
    for (std::size_t p = 0; p < k; ++p)
      idx = (idx << 1) | (v <= t[p] ? 1u : 0u);
    probs[idx] += b - a;
  }
  return probs;
}

EncodedModel encode_bernoulli_model(const BernoulliIvModel& m) {
  if (m.uz != 0.0)
    raise(ErrorCode::BadConfig,
          "response encoding covers models with an exogenous instrument");
  (void)model_cell_probabilities(m);  // probability-bound check

  const bool excl = m.zy != 0.0;
  EncodedModel enc;
  enc.spec = build_spec(excl ? ViolationClass::Excl : ViolationClass::Valid,
                        Levels{2, 2, 2});
  enc.theta.cls = enc.spec.cls;
  enc.theta.z_probs = {1.0 - m.pz, m.pz};
  enc.theta.response.assign(enc.spec.rxy_dim(), 0.0);

  for (int u = 0; u < 2; ++u) {
    // treatment responses: thresholds over z, domain order z = 0, 1
    std::vector<double> tx{m.bx + m.ux * u, m.bx + m.zx + m.ux * u};
    std::vector<double> dx = threshold_function_probs(tx);

    std::vector<double> ty;
    if (excl) {
      // outcome responses over (x, z), x-major domain
      for (int x = 0; x < 2; ++x)
        for (int z = 0; z < 2; ++z)
          ty.push_back(m.by + m.zy * z + m.xy * x + m.uy * u);
    } else {
      for (int x = 0; x < 2; ++x) ty.push_back(m.by + m.xy * x + m.uy * u);
    }
    std::vector<double> dy = threshold_function_probs(ty);

    for (std::size_t rx = 0; rx < dx.size(); ++rx)
      for (std::size_t ry = 0; ry < dy.size(); ++ry)
        enc.theta.response[rx * enc.spec.ry_count + ry] +=
            0.5 * dx[rx] * dy[ry];
  }
  return enc;
}

std::vector<PalmerModel> palmer_models() {
  std::vector<PalmerModel> out;
  const double direct[3] = {0.0, 0.2, 0.05};
  for (int i = 0; i < 3; ++i) {
    PalmerModel pm;
    pm.name = "D" + std::to_string(i);
    pm.model.zy = direct[i];
    EncodedModel enc = encode_bernoulli_model(pm.model);
    pm.spec = std::move(enc.spec);
    pm.theta = std::move(enc.theta);
    out.push_back(std::move(pm));
  }
  return out;
}

BernoulliIvModel GridPoint::model() const {
  BernoulliIvModel m;
  m.zx = zx;
  m.xy = xy;
  m.ux = u;
  m.uy = u;
  m.uz = uz;
  m.zy = zy;
  return m;
}

std::vector<GridPoint> full_grid() {
  const double zx_vals[] = {0.1, 0.3, 0.5, 0.7, 0.9};
  const double xy_vals[] = {0.1, 0.3, 0.5, 0.7, 0.9};
  const double u_vals[] = {0.0, 0.1, 0.3, 0.5};
  std::vector<GridPoint> out;
  for (double zx : zx_vals)
    for (double xy : xy_vals)
      for (double u : u_vals)
        for (double uz : u_vals)
          for (double zy : u_vals) {
            GridPoint p{zx, xy, u, uz, zy};
            try {
              (void)model_cell_probabilities(p.model());
            } catch (const Error&) {
              continue;
            }
            out.push_back(p);
          }
  return out;
}

std::vector<GridPoint> default_grid_subset() {
  std::vector<GridPoint> out;
  // valid instruments: uz = 0, zy = 0
  for (double zx : {0.1, 0.3, 0.5, 0.7, 0.9})
    for (double xy : {0.1, 0.5}) out.push_back({zx, xy, 0.0, 0.0, 0.0});
  for (double zx : {0.1, 0.3, 0.5, 0.7})
    for (double xy : {0.1, 0.5}) out.push_back({zx, xy, 0.1, 0.0, 0.0});
  out.push_back({0.1, 0.1, 0.3, 0.0, 0.0});
  out.push_back({0.1, 0.3, 0.3, 0.0, 0.0});
  // weak-instrument exclusion violations: zx in {0.1, 0.3}, zy >= 0.3
  for (double zx : {0.1, 0.3})
    for (double zy : {0.3, 0.5})
      for (double xy : {0.1, 0.3})
        for (double u : {0.0, 0.1}) out.push_back({zx, xy, u, 0.0, zy});
  out.push_back({0.1, 0.5, 0.0, 0.0, 0.3});
  out.push_back({0.3, 0.5, 0.0, 0.0, 0.3});
  out.push_back({0.1, 0.1, 0.3, 0.0, 0.3});
  out.push_back({0.3, 0.1, 0.3, 0.0, 0.3});
  return out;
}

std::vector<GridResult> run_grid_experiment(const std::vector<GridPoint>& grid,
                                            std::uint64_t size, double alpha,
                                            double gamma,
                                            const EvidenceConfig& cfg,
                                            std::uint64_t seed) {
  if (size < 1) raise(ErrorCode::BadConfig, "dataset size must be >= 1");
  std::vector<GridResult> results;
  results.reserve(grid.size());
  const std::set<ViolationClass> violations{
      ViolationClass::Excl, ViolationClass::Air, ViolationClass::Both};

  for (std::size_t i = 0; i < grid.size(); ++i) {
    GridResult r;
    r.point = grid[i];
    r.dataset_seed = stream_seed(seed, i);
    r.size = size;
    try {
      std::vector<double> cells = model_cell_probabilities(grid[i].model());
      RngStream rng(r.dataset_seed);
      Dataset d = sample_dataset_from_cells(cells, Levels{2, 2, 2}, size, rng);
      ContingencyTable t = build_contingency(d);
      r.nec_pass = exact_test(t, alpha, NecessaryMode::Pearl).passed;

      EvidenceConfig point_cfg = cfg;
      point_cfg.seed = stream_seed(seed, 0x10000 + i);
      ValidityReport rep =
          validity_ratio(t, violations, 1.0, gamma, point_cfg);
      if (!rep.estimator_errors.empty()) r.error = rep.estimator_errors.front();
      r.log_ratio = rep.log_ratio;
      if (rep.valid_ok) r.valid_evidence = rep.valid.value;
      if (rep.invalid.count(ViolationClass::Excl))
        r.excl_evidence = rep.invalid.at(ViolationClass::Excl).value;
      if (rep.invalid.count(ViolationClass::Air))
        r.air_evidence = rep.invalid.at(ViolationClass::Air).value;
      if (rep.invalid.count(ViolationClass::Both))
        r.both_evidence = rep.invalid.at(ViolationClass::Both).value;
    } catch (const Error& e) {
      r.error = e.what();
      r.log_ratio = std::numeric_limits<double>::quiet_NaN();
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace ivtest
