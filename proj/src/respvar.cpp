#include "ivtest/respvar.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numeric>

#include <json.hpp>

namespace ivtest {

const char* violation_class_name(ViolationClass cls) {
  switch (cls) {
    case ViolationClass::Valid: return "valid";
    case ViolationClass::Excl: return "excl";
    case ViolationClass::Air: return "air";
    case ViolationClass::Both: return "both";
  }
  return "?";
}

ViolationClass violation_class_from_name(const std::string& name) {
  if (name == "valid") return ViolationClass::Valid;
  if (name == "excl") return ViolationClass::Excl;
  if (name == "air") return ViolationClass::Air;
  if (name == "both") return ViolationClass::Both;
  raise(ErrorCode::BadConfig, "unknown violation class '" + name + "'");
}

namespace {

void decode_function(std::uint64_t idx, int base, int points,
                     std::vector<int>& out) {
  out.resize(points);
  for (int p = points - 1; p >= 0; --p) {
    out[p] = static_cast<int>(idx % base);
    idx /= base;
  }
}

}  // namespace

ResponseSpec build_spec(ViolationClass cls, const Levels& levels) {
  validate_levels(levels);

  ResponseSpec spec;
  spec.cls = cls;
  spec.levels = levels;
  spec.joint_layout = cls == ViolationClass::Air || cls == ViolationClass::Both;
  spec.y_depends_on_z = cls == ViolationClass::Excl || cls == ViolationClass::Both;

  spec.rx_count = treatment_function_count(levels);
  std::uint64_t ry = spec.y_depends_on_z ? outcome_function_count_excl(levels)
                                         : outcome_function_count(levels);
  if (ry == 0 || spec.rx_count > kResponseSpaceCeiling / ry)
    raise(ErrorCode::CeilingExceeded, "response space too large for class");
  spec.ry_count = ry;

  spec.g_table.resize(spec.rx_count);
  for (std::uint64_t i = 0; i < spec.rx_count; ++i)
    decode_function(i, levels.x, levels.z, spec.g_table[i]);

  int y_points = spec.y_depends_on_z ? levels.x * levels.z : levels.x;
  spec.y_table.resize(spec.ry_count);
  for (std::uint64_t i = 0; i < spec.ry_count; ++i)
    decode_function(i, levels.y, y_points, spec.y_table[i]);

  spec.cell_groups.assign(cell_count(levels), {});
  for (std::size_t rx = 0; rx < spec.rx_count; ++rx) {
    for (int z = 0; z < levels.z; ++z) {
      int x = spec.g_table[rx][z];
      for (std::size_t ry = 0; ry < spec.ry_count; ++ry) {
        int y = spec.y_value(ry, x, z);
        spec.cell_groups[cell_index(levels, z, x, y)].push_back(
            static_cast<std::uint32_t>(rx * spec.ry_count + ry));
      }
    }
  }
  return spec;
}

void validate_theta(const ThetaVector& theta, const ResponseSpec& spec,
                    double tol) {
  if (theta.cls != spec.cls)
    raise(ErrorCode::LayoutMismatch, "theta class does not match spec");
  auto check_simplex = [&](const std::vector<double>& v, std::size_t want,
                           const char* what) {
    if (v.size() != want)
      raise(ErrorCode::LayoutMismatch, std::string(what) + " has wrong size");
    double s = 0.0;
    for (double p : v) {
      if (p < 0.0 || !std::isfinite(p))
        raise(ErrorCode::InvalidProbability, std::string(what) + " entry < 0");
      s += p;
    }
    if (std::abs(s - 1.0) > tol)
      raise(ErrorCode::InvalidProbability,
            std::string(what) + " does not sum to 1");
  };
  if (spec.joint_layout) {
    if (!theta.z_probs.empty())
      raise(ErrorCode::LayoutMismatch, "joint layout carries no z factor");
    check_simplex(theta.response, spec.levels.z * spec.rxy_dim(), "joint");
  } else {
    check_simplex(theta.z_probs, spec.levels.z, "z factor");
    check_simplex(theta.response, spec.rxy_dim(), "response factor");
  }
}

std::vector<double> forward_distribution(const ThetaVector& theta,
                                         const ResponseSpec& spec) {
  validate_theta(theta, spec);
  const Levels& lv = spec.levels;
  std::vector<double> cells(cell_count(lv), 0.0);
  const std::size_t rxy = spec.rxy_dim();
  for (int z = 0; z < lv.z; ++z) {
    for (int x = 0; x < lv.x; ++x) {
      for (int y = 0; y < lv.y; ++y) {
        std::size_t ci = cell_index(lv, z, x, y);
        double s = 0.0;
        if (spec.joint_layout) {
          const double* block = theta.response.data() + z * rxy;
          for (std::uint32_t g : spec.cell_groups[ci]) s += block[g];
        } else {
          for (std::uint32_t g : spec.cell_groups[ci]) s += theta.response[g];
          s *= theta.z_probs[z];
        }
        cells[ci] = s;
      }
    }
  }
  return cells;
}

SamplingConstraint SamplingConstraint::nondecreasing_zy(double alpha) {
  SamplingConstraint c;
  c.kind = Kind::NondecreasingZY;
  c.alpha = alpha;
  return c;
}

SamplingConstraint SamplingConstraint::nondecreasing_zy_xy(double alpha) {
  SamplingConstraint c;
  c.kind = Kind::NondecreasingZYXY;
  c.alpha = alpha;
  return c;
}

SamplingConstraint SamplingConstraint::mi_threshold_nats(double tau) {
  SamplingConstraint c;
  c.kind = Kind::MiThreshold;
  c.mi_threshold = tau;
  return c;
}

SamplingConstraint SamplingConstraint::fixed_conditional(double value,
                                                         int ry_index) {
  SamplingConstraint c;
  c.kind = Kind::FixedConditional;
  c.value = value;
  c.ry_index = ry_index;
  return c;
}

NondecreasingSets classify_nondecreasing(const ResponseSpec& spec) {
  if (!spec.y_depends_on_z)
    raise(ErrorCode::LayoutMismatch,
          "nondecreasing classification needs (x,z) outcome functions");
  NondecreasingSets sets;
  const Levels& lv = spec.levels;
  for (std::size_t ry = 0; ry < spec.ry_count; ++ry) {
    bool nd_z = true, nd_x = true;
    for (int x = 0; x < lv.x && nd_z; ++x)
      for (int z = 0; z + 1 < lv.z; ++z)
        if (spec.y_value(ry, x, z + 1) < spec.y_value(ry, x, z)) {
          nd_z = false;
          break;
        }
    for (int z = 0; z < lv.z && nd_x; ++z)
      for (int x = 0; x + 1 < lv.x; ++x)
        if (spec.y_value(ry, x + 1, z) < spec.y_value(ry, x, z)) {
          nd_x = false;
          break;
        }
    if (nd_z) sets.in_z.push_back(static_cast<std::uint32_t>(ry));
    if (nd_x) sets.in_x.push_back(static_cast<std::uint32_t>(ry));
  }
  return sets;
}

std::vector<std::uint32_t> monotone_rx_indices(const ResponseSpec& spec) {
  std::vector<std::uint32_t> out;
  for (std::size_t rx = 0; rx < spec.rx_count; ++rx) {
    bool nd = true;
    for (int z = 0; z + 1 < spec.levels.z; ++z)
      if (spec.g_table[rx][z + 1] < spec.g_table[rx][z]) {
        nd = false;
        break;
      }
    if (nd) out.push_back(static_cast<std::uint32_t>(rx));
  }
  return out;
}

namespace {

// Uniform Dirichlet draw over the component subset `idx`, scaled to `mass`.
void fill_block(RngStream& rng, const std::vector<std::uint32_t>& idx,
                double mass, std::vector<double>& out) {
  if (idx.empty()) {
    if (mass > 0.0)
      raise(ErrorCode::ConstraintUnsatisfiable, "empty block with mass");
    return;
  }
  double total = 0.0;
  std::vector<double> raw(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    raw[i] = rng.next_exponential();
    total += raw[i];
  }
  for (std::size_t i = 0; i < idx.size(); ++i)
    out[idx[i]] = mass * raw[i] / total;
}

// components of the (rx, ry) space allowed by the monotone-treatment flag
std::vector<std::uint32_t> allowed_rxy(const ResponseSpec& spec,
                                       bool monotone_treatment) {
  std::vector<std::uint32_t> out;
  std::vector<bool> rx_ok(spec.rx_count, true);
  if (monotone_treatment) {
    rx_ok.assign(spec.rx_count, false);
    for (std::uint32_t rx : monotone_rx_indices(spec)) rx_ok[rx] = true;
  }
  for (std::size_t rx = 0; rx < spec.rx_count; ++rx) {
    if (!rx_ok[rx]) continue;
    for (std::size_t ry = 0; ry < spec.ry_count; ++ry)
      out.push_back(static_cast<std::uint32_t>(rx * spec.ry_count + ry));
  }
  return out;
}

// expand an (rx, ry) component list to the joint layout across all z strata
std::vector<std::uint32_t> expand_joint(const ResponseSpec& spec,
                                        const std::vector<std::uint32_t>& rxy) {
  std::vector<std::uint32_t> out;
  out.reserve(rxy.size() * spec.levels.z);
  const std::uint32_t block = static_cast<std::uint32_t>(spec.rxy_dim());
  for (int z = 0; z < spec.levels.z; ++z)
    for (std::uint32_t g : rxy) out.push_back(z * block + g);
  return out;
}

double tv_from_independence(const ResponseSpec& spec,
                            const std::vector<double>& joint) {
  const std::size_t rxy = spec.rxy_dim();
  std::vector<double> pz(spec.levels.z, 0.0), pw(rxy, 0.0);
  for (int z = 0; z < spec.levels.z; ++z)
    for (std::size_t w = 0; w < rxy; ++w) {
      pz[z] += joint[z * rxy + w];
      pw[w] += joint[z * rxy + w];
    }
  double tv = 0.0;
  for (int z = 0; z < spec.levels.z; ++z)
    for (std::size_t w = 0; w < rxy; ++w)
      tv += std::abs(joint[z * rxy + w] - pz[z] * pw[w]);
  return 0.5 * tv;
}

// split `components` into (inside, outside) by whether the ry digit is in set
void split_by_ry(const ResponseSpec& spec,
                 const std::vector<std::uint32_t>& components,
                 const std::vector<std::uint32_t>& ry_set,
                 std::vector<std::uint32_t>& inside,
                 std::vector<std::uint32_t>& outside) {
  std::vector<bool> in_set(spec.ry_count, false);
  for (std::uint32_t ry : ry_set) in_set[ry] = true;
  for (std::uint32_t comp : components) {
    std::uint32_t ry = comp % spec.ry_count;
    (in_set[ry] ? inside : outside).push_back(comp);
  }
}

ThetaVector draw_once(const ResponseSpec& spec,
                      const SamplingConstraint& constraint, RngStream& rng,
                      double knob_value) {
  using Kind = SamplingConstraint::Kind;
  ThetaVector theta;
  theta.cls = spec.cls;

  const std::size_t resp_dim =
      spec.joint_layout ? spec.levels.z * spec.rxy_dim() : spec.rxy_dim();
  theta.response.assign(resp_dim, 0.0);

  std::vector<std::uint32_t> base = allowed_rxy(spec, constraint.monotone_treatment);
  if (spec.joint_layout) base = expand_joint(spec, base);

  switch (constraint.kind) {
    case Kind::None:
      fill_block(rng, base, 1.0, theta.response);
      break;
    case Kind::NondecreasingZY:
    case Kind::NondecreasingZYXY: {
      NondecreasingSets sets = classify_nondecreasing(spec);
      std::vector<std::uint32_t> ry_set = sets.in_z;
      if (constraint.kind == Kind::NondecreasingZYXY) {
        std::vector<std::uint32_t> both;
        std::set_intersection(sets.in_z.begin(), sets.in_z.end(),
                              sets.in_x.begin(), sets.in_x.end(),
                              std::back_inserter(both));
        ry_set = both;
      }
      std::vector<std::uint32_t> inside, outside;
      if (spec.joint_layout) {
        // classify on the rxy digit; joint components keep it modulo rxy_dim
        std::vector<bool> in_set(spec.ry_count, false);
        for (std::uint32_t ry : ry_set) in_set[ry] = true;
        for (std::uint32_t comp : base) {
          std::uint32_t ry = (comp % spec.rxy_dim()) % spec.ry_count;
          (in_set[ry] ? inside : outside).push_back(comp);
        }
      } else {
        split_by_ry(spec, base, ry_set, inside, outside);
      }
      fill_block(rng, inside, constraint.alpha, theta.response);
      if (constraint.alpha < 1.0)
        fill_block(rng, outside, 1.0 - constraint.alpha, theta.response);
      break;
    }
    case Kind::FixedConditional:
    case Kind::MiThreshold: {
      if (!spec.joint_layout)
        raise(ErrorCode::BadConfig,
              "conditional knob requires a joint (Air/Both) layout");
      fill_block(rng, base, 1.0, theta.response);
      std::size_t target_ry = constraint.ry_index >= 0
                                  ? static_cast<std::size_t>(constraint.ry_index)
                                  : spec.const_max_ry_index();
      if (target_ry >= spec.ry_count)
        raise(ErrorCode::BadConfig, "conditional ry index out of range");
      // rescale stratum r_z = 1 so P(r_y = target | r_z = 1) = v
      const std::size_t rxy = spec.rxy_dim();
      double* block = theta.response.data() + rxy;  // stratum z = 1
      double stratum = 0.0, hit = 0.0;
      for (std::size_t w = 0; w < rxy; ++w) {
        stratum += block[w];
        if (w % spec.ry_count == target_ry) hit += block[w];
      }
      if (hit <= 0.0 || hit >= stratum)
        raise(ErrorCode::ConstraintUnsatisfiable, "degenerate stratum draw");
      double v = knob_value;
      for (std::size_t w = 0; w < rxy; ++w) {
        if (w % spec.ry_count == target_ry)
          block[w] *= v * stratum / hit;
        else
          block[w] *= (1.0 - v) * stratum / (stratum - hit);
      }
      break;
    }
  }

  if (!spec.joint_layout) uniform_simplex(rng, spec.levels.z, theta.z_probs);
  return theta;
}

}  // namespace

ThetaVector sample_model(const ResponseSpec& spec,
                         const SamplingConstraint& constraint, RngStream& rng) {
  using Kind = SamplingConstraint::Kind;
  if (constraint.kind == Kind::NondecreasingZY ||
      constraint.kind == Kind::NondecreasingZYXY) {
    if (!spec.y_depends_on_z)
      raise(ErrorCode::BadConfig,
            "nondecreasing constraints need Excl/Both outcome functions");
    if (constraint.alpha < 0.5 || constraint.alpha > 1.0)
      raise(ErrorCode::BadConfig, "block mass alpha must lie in [0.5, 1]");
  }

  // conditional-knob grid scanned for the MI threshold
  static const double kKnobGrid[] = {0.5,  0.6,  0.7,  0.8,
                                     0.9,  0.95, 0.99, 0.999};

  for (int attempt = 0; attempt < constraint.redraw_budget; ++attempt) {
    double knob = constraint.value;
    if (constraint.kind == Kind::MiThreshold)
      knob = kKnobGrid[std::min<std::size_t>(attempt, std::size(kKnobGrid) - 1)];

    ThetaVector theta;
    try {
      theta = draw_once(spec, constraint, rng, knob);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ConstraintUnsatisfiable) continue;
      throw;
    }

    if (spec.joint_layout) {
      // an exactly factorized joint would not violate as-if-random
      if (tv_from_independence(spec, theta.response) <= 1e-9) continue;
    }
    if (constraint.kind == Kind::MiThreshold &&
        mutual_information(theta, spec) < constraint.mi_threshold)
      continue;
    return theta;
  }
  raise(ErrorCode::ConstraintUnsatisfiable,
        "redraw budget exhausted for sampling constraint");
}

double mutual_information(const ThetaVector& theta, const ResponseSpec& spec) {
  validate_theta(theta, spec);
  if (!spec.joint_layout)
    raise(ErrorCode::LayoutMismatch, "mutual information needs a joint layout");
  const std::size_t rxy = spec.rxy_dim();
  std::vector<double> pz(spec.levels.z, 0.0), pw(rxy, 0.0);
  for (int z = 0; z < spec.levels.z; ++z)
    for (std::size_t w = 0; w < rxy; ++w) {
      double p = theta.response[z * rxy + w];
      pz[z] += p;
      pw[w] += p;
    }
  double mi = 0.0;
  for (int z = 0; z < spec.levels.z; ++z)
    for (std::size_t w = 0; w < rxy; ++w) {
      double p = theta.response[z * rxy + w];
      if (p > 0.0 && pz[z] > 0.0 && pw[w] > 0.0)
        mi += p * std::log(p / (pz[z] * pw[w]));
    }
  return std::max(mi, 0.0);
}

Dataset sample_dataset_from_cells(const std::vector<double>& cells,
                                  const Levels& levels, std::uint64_t size,
                                  RngStream& rng) {
  if (size == 0) raise(ErrorCode::EmptyDataset, "requested size 0");
  if (cells.size() != cell_count(levels))
    raise(ErrorCode::LayoutMismatch, "cell count does not match levels");
  std::vector<double> cdf(cells.size());
  std::partial_sum(cells.begin(), cells.end(), cdf.begin());
  cdf.back() = 1.0;

  Dataset d;
  d.levels = levels;
  d.rows.reserve(size);
  for (std::uint64_t i = 0; i < size; ++i) {
    double u = rng.next_unit();
    std::size_t cell =
        std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
    if (cell >= cells.size()) cell = cells.size() - 1;
    int z = static_cast<int>(cell / (levels.x * levels.y));
    int rem = static_cast<int>(cell % (levels.x * levels.y));
    d.rows.push_back(Obs{z, rem / levels.y, rem % levels.y});
  }
  return d;
}

Dataset sample_dataset(const ThetaVector& theta, const ResponseSpec& spec,
                       std::uint64_t size, RngStream& rng) {
  return sample_dataset_from_cells(forward_distribution(theta, spec),
                                   spec.levels, size, rng);
}

std::string response_spec_to_json(const ResponseSpec& spec) {
  nlohmann::ordered_json j;
  j["class"] = violation_class_name(spec.cls);
  j["levels"] = {{"z", spec.levels.z}, {"x", spec.levels.x}, {"y", spec.levels.y}};
  j["rx_count"] = spec.rx_count;
  j["ry_count"] = spec.ry_count;
  j["factorized"] = !spec.joint_layout;
  return j.dump();
}

std::string theta_to_json(const ThetaVector& theta) {
  nlohmann::ordered_json j;
  j["class"] = violation_class_name(theta.cls);
  if (!theta.z_probs.empty()) j["z_probs"] = theta.z_probs;
  j["response"] = theta.response;
  return j.dump();
}

ThetaVector theta_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  ThetaVector theta;
  theta.cls = violation_class_from_name(j.at("class").get<std::string>());
  if (j.contains("z_probs"))
    theta.z_probs = j["z_probs"].get<std::vector<double>>();
  theta.response = j.at("response").get<std::vector<double>>();
  return theta;
}

}  // namespace ivtest
