#include "hkframe/verify.hpp"

#include "hkframe/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace hkframe {

namespace {

double norm_mu(const Eigen::VectorXd& f, const Eigen::VectorXd& mu) { return std::sqrt(f.cwiseAbs2().dot(mu)); }

// Projection of the indicator of point 0 onto the eigenspace nearest to
// `target` (in sqrt(lambda)). Fixes the basis inside degenerate eigenspaces
// by geometry rather than by the eigensolver.
Eigen::VectorXd eigenspace_probe(const SpectralOperator& op, double target) {
  const Eigen::Index n = op.size();
  Eigen::Index best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double dd = std::abs(std::sqrt(op.eigenvalues(i)) - target);
    if (dd < bd - 1e-12) {
      bd = dd;
      best = i;
    }
  }
  const double lam = op.eigenvalues(best);
  const double tol = 1e-9 * std::max(1.0, op.lambda_max);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::abs(op.eigenvalues(i) - lam) <= tol) f += op.eigenvectors(0, i) * op.mu(0) * op.eigenvectors.col(i);
  if (norm_mu(f, op.mu) < 1e-12) f = op.eigenvectors.col(best);
  return f;
}

void add(FunctionBattery& b, const std::string& name, Eigen::VectorXd f, const Eigen::VectorXd& mu) {
  const double nf = norm_mu(f, mu);
  if (!(nf > 1e-14)) return;
  b.functions.push_back({name, f / nf});
}

}  // namespace

FunctionBattery make_battery(const SpectralOperator& op, const BumpPair& bumps, std::uint64_t seed, int size) {
  if (size < 5) throw Error(ErrorKind::InvalidParams, "battery size must be >= 5");
  const Eigen::Index n = op.size();
  const Eigen::VectorXd& mu = op.mu;
  const double top = std::sqrt(op.lambda_max);
  FunctionBattery b;
  b.seed = seed;
  std::vector<BatteryFunction> structured;

  // One eigenvector per nonzero band: the eigenvalue where that band's profile peaks.
  FunctionBattery tmp;
  const int J = lp_level_count(op.lambda_max, bumps.a);
  for (int j = 0; j <= J; ++j) {
    Eigen::Index arg = -1;
    double best = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = bumps.level(j, std::sqrt(op.eigenvalues(i)));
      if (v > best + 1e-14) {
        best = v;
        arg = i;
      }
    }
    if (arg >= 0) add(tmp, "band_" + std::to_string(j), eigenspace_probe(op, std::sqrt(op.eigenvalues(arg))), mu);
  }
  for (double frac : {0.15, 0.35, 0.6, 0.85, 1.0}) {
    std::ostringstream os;
    os << "eig_frac_" << frac;
    add(tmp, os.str(), eigenspace_probe(op, frac * top), mu);
  }
  {
    Eigen::VectorXd e0 = Eigen::VectorXd::Zero(n);
    e0(0) = 1.0;
    add(tmp, "point_0", e0, mu);
    if (n > 1) {
      Eigen::VectorXd e1 = Eigen::VectorXd::Zero(n);
      e1(n / 2) = 1.0;
      add(tmp, "point_mid", e1, mu);
    }
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  const Eigen::VectorXd coefs_scale = Eigen::VectorXd::Ones(n);
  for (double t : {0.5, 2.0}) {
    Eigen::VectorXd xi(n);
    for (Eigen::Index i = 0; i < n; ++i) xi(i) = g(rng);
    const Eigen::VectorXd c = op.eigenvectors.transpose() * xi.cwiseProduct(mu);
    const Eigen::VectorXd h = (-t * op.eigenvalues.array()).exp().matrix();
    std::ostringstream os;
    os << "heat_noise_t" << t;
    add(tmp, os.str(), op.eigenvectors * h.cwiseProduct(c), mu);
  }
  const double fracs[] = {0.25, 0.5, 0.75, 1.0};
  int r = 0;
  while (static_cast<int>(tmp.functions.size()) < size && r < 10 * size) {
    const double frac = fracs[r % 4];
    Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i)
      if (std::sqrt(op.eigenvalues(i)) <= frac * top + 1e-12) f += g(rng) * op.eigenvectors.col(i);
    std::ostringstream os;
    os << "bandlimited_" << r << "_frac" << frac;
    add(tmp, os.str(), f, mu);
    ++r;
  }
  tmp.functions.resize(std::min<std::size_t>(tmp.functions.size(), static_cast<std::size_t>(size)));
  b.functions = std::move(tmp.functions);
  b.size = static_cast<int>(b.functions.size());
  return b;
}

void EquivalenceReport::finish() {
  min_ratio = std::numeric_limits<double>::infinity();
  max_ratio = 0.0;
  for (double r : ratios) {
    min_ratio = std::min(min_ratio, r);
    max_ratio = std::max(max_ratio, r);
  }
  if (ratios.empty()) min_ratio = max_ratio = 1.0;
  spread = (min_ratio > 0.0) ? max_ratio / min_ratio : std::numeric_limits<double>::infinity();
}

namespace {

nlohmann::json num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

}  // namespace

nlohmann::json to_json(const EquivalenceReport& r) {
  nlohmann::json per = nlohmann::json::array();
  for (std::size_t i = 0; i < r.ratios.size(); ++i)
    per.push_back({{"function", i < r.names.size() ? r.names[i] : std::to_string(i)}, {"ratio", num(r.ratios[i])}});
  nlohmann::json j = {{"claim", r.claim},       {"norm_a", r.norm_a},          {"norm_b", r.norm_b},
                      {"ratios", per},          {"min_ratio", num(r.min_ratio)}, {"max_ratio", num(r.max_ratio)},
                      {"spread", num(r.spread)}, {"parameters", r.parameters}, {"extra", r.extra}};
  if (r.spread_refined) j["spread_refined"] = num(*r.spread_refined);
  return j;
}

const std::vector<std::string>& claim_ids() {
  static const std::vector<std::string> ids{"thm6.2",  "thm6.7",  "thm6.8",  "thm7.5",           "thm7.8",
                                            "prop4.9", "prop4.10", "prop7.9", "bump_independence"};
  return ids;
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::PrerequisiteMissing, what + " is required for this claim");
}

void refuse(const std::string& why) { throw Error(ErrorKind::HypothesisViolated, why); }

SpaceParams params_of(const ClaimConfig& c, double d) {
  SpaceParams p;
  p.s = c.s;
  p.tau = c.tau;
  p.p = c.p;
  p.q = c.q;
  p.family = c.family;
  p.variant = c.variant;
  p.d = d;
  return p;
}

std::string describe(const SpaceParams& p) {
  std::ostringstream os;
  os << (p.variant == Variant::Tilde ? "~" : "") << to_string(p.family) << "^{s=" << p.s << ",tau=" << p.tau
     << "}_{p=" << p.p << ",q=" << p.q << "}";
  return os.str();
}

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i);
  return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2) return 1.0;
  const auto ra = ranks(a), rb = ranks(b);
  double s = 0.0;
  const double n = static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) s += (ra[i] - rb[i]) * (ra[i] - rb[i]);
  return 1.0 - 6.0 * s / (n * (n * n - 1.0));
}

double spread_of(const std::vector<double>& v) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

EquivalenceReport run_equivalence(const std::string& claim, const VerifyContext& ctx, const ClaimConfig& config) {
  require(ctx.space != nullptr, "the space");
  require(ctx.cubes != nullptr, "the cube system");
  require(ctx.calib != nullptr, "the calibration");
  require(!ctx.battery.functions.empty(), "a function battery");
  const MetricMeasureSpace& space = *ctx.space;
  const CubeSystem& cubes = *ctx.cubes;
  const LPCalibration& calib = *ctx.calib;
  const double beta0 = calib.beta0();
  SpaceParams P = params_of(config, ctx.d);

  EquivalenceReport rep;
  rep.claim = claim;
  rep.parameters = {{"s", config.s},          {"tau", config.tau}, {"p", num(config.p)}, {"q", num(config.q)},
                    {"family", to_string(config.family)}, {"variant", to_string(config.variant)},
                    {"d", ctx.d},             {"delta", calib.delta()}, {"beta0", beta0},
                    {"battery_size", ctx.battery.functions.size()}, {"battery_seed", ctx.battery.seed}};

  std::vector<double> va, vb;
  auto record = [&](const std::string& name, double a, double b) {
    va.push_back(a);
    vb.push_back(b);
    if (a == 0.0 && b == 0.0) return;
    rep.names.push_back(name);
    rep.ratios.push_back(b > 0.0 ? a / b : std::numeric_limits<double>::infinity());
  };

  if (claim == "thm6.2") {
    const double thr = peetre_threshold(P, ctx.d);
    const double a = config.a ? *config.a : thr + 1.0;
    if (!(a > thr)) {
      std::ostringstream os;
      os << "Peetre exponent a = " << a << " must exceed " << thr;
      refuse(os.str());
    }
    rep.norm_a = "peetre " + describe(P);
    rep.norm_b = describe(P);
    rep.parameters["a"] = a;
    rep.parameters["a_threshold"] = thr;
    for (const auto& bf : ctx.battery.functions)
      record(bf.name, peetre_norm(bf.values, calib, space, cubes, P, a).value,
             function_norm(bf.values, calib, space, cubes, P).value);
  } else if (claim == "thm6.7") {
    const int m = config.m ? *config.m : static_cast<int>(std::ceil(config.s / beta0)) + 1;
    if (!(m > config.s / beta0)) refuse("heat exponent m = " + std::to_string(m) + " must exceed s/beta0");
    rep.norm_a = "heat_discrete(m=" + std::to_string(m) + ") " + describe(P);
    rep.norm_b = describe(P);
    rep.parameters["m"] = m;
    for (const auto& bf : ctx.battery.functions)
      record(bf.name, heat_norm_discrete(bf.values, calib, space, cubes, P, m).value,
             function_norm(bf.values, calib, space, cubes, P).value);
  } else if (claim == "thm6.8") {
    const int m = config.m ? *config.m : static_cast<int>(std::ceil(config.s / beta0)) + 1;
    if (!(m > config.s / beta0)) refuse("heat exponent m = " + std::to_string(m) + " must exceed s/beta0");
    if (!(config.p >= 1.0)) refuse("continuous heat characterisation needs p >= 1");
    if (config.family == Family::F && !(config.q >= 1.0)) refuse("continuous heat characterisation of F needs q >= 1");
    rep.norm_a = "heat_continuous(m=" + std::to_string(m) + ") " + describe(P);
    rep.norm_b = describe(P);
    rep.parameters["m"] = m;
    rep.parameters["points_per_octave"] = config.points_per_octave;
    for (const auto& bf : ctx.battery.functions)
      record(bf.name, heat_norm_continuous(bf.values, calib, space, cubes, P, m, config.points_per_octave).value,
             function_norm(bf.values, calib, space, cubes, P).value);
  } else if (claim == "thm7.5") {
    require(ctx.grid != nullptr, "the subcube grid");
    require(ctx.frame != nullptr, "the synthesis frame");
    rep.norm_a = "sequence " + describe(P) + " of analysis coefficients";
    rep.norm_b = describe(P);
    double worst = 0.0;
    std::vector<double> synth;
    for (const auto& bf : ctx.battery.functions) {
      const FrameCoefficients c = analysis(bf.values, calib, *ctx.grid);
      record(bf.name, sequence_norm(c, *ctx.grid, space, cubes, P).value,
             function_norm(bf.values, calib, space, cubes, P).value);
      const Eigen::VectorXd back = synthesis(c, *ctx.frame);
      worst = std::max(worst, norm_mu(back - bf.values, space.mu()) / norm_mu(bf.values, space.mu()));
    }
    // Synthesis direction on random coefficient sequences.
    std::mt19937_64 rng(ctx.battery.seed + 7);
    std::normal_distribution<double> g;
    for (int t = 0; t < 10; ++t) {
      FrameCoefficients c = analysis(Eigen::VectorXd::Zero(space.size()), calib, *ctx.grid);
      for (auto& lvl : c.values)
        for (auto& v : lvl) v = g(rng);
      const double na = sequence_norm(c, *ctx.grid, space, cubes, P).value;
      const double nf = function_norm(synthesis(c, *ctx.frame), calib, space, cubes, P).value;
      if (na > 0.0) synth.push_back(nf / na);
    }
    rep.extra["max_reconstruction_error"] = worst;
    rep.extra["synthesis_ratio_spread"] = num(spread_of(synth));
    rep.extra["eps0"] = ctx.frame->eps0;
  } else if (claim == "thm7.8") {
    P.family = Family::F;
    P.tau = 1.0 / config.p;
    rep.norm_a = "F^{s}_{inf,q} = F^{s,1/q}_{q,q}";
    rep.norm_b = describe(P);
    rep.parameters["tau"] = P.tau;
    rep.parameters["family"] = "F";
    for (const auto& bf : ctx.battery.functions)
      record(bf.name, endpoint_finfty_norm(bf.values, calib, space, cubes, config.s, config.q, config.variant, ctx.d).value,
             function_norm(bf.values, calib, space, cubes, P).value);
  } else if (claim == "prop4.9") {
    if (!(config.tau > 1.0 / config.p)) refuse("collapse needs tau > 1/p");
    SpaceParams Bp = P, Fp = P, Ip = P;
    Bp.family = Family::B;
    Fp.family = Family::F;
    Ip.family = Family::B;
    Ip.p = Ip.q = std::numeric_limits<double>::infinity();
    Ip.tau = 0.0;
    Ip.s = config.s + ctx.d * config.tau - ctx.d / config.p;
    rep.norm_a = describe(Bp);
    rep.norm_b = describe(Ip);
    std::vector<double> nb, nf, ni, rf, rbf;
    for (const auto& bf : ctx.battery.functions) {
      const double b = function_norm(bf.values, calib, space, cubes, Bp).value;
      const double f = function_norm(bf.values, calib, space, cubes, Fp).value;
      const double i = function_norm(bf.values, calib, space, cubes, Ip).value;
      record(bf.name, b, i);
      nb.push_back(b);
      nf.push_back(f);
      ni.push_back(i);
      if (i > 0.0) rf.push_back(f / i);
      if (f > 0.0) rbf.push_back(b / f);
    }
    rep.extra["F_over_Binf_spread"] = num(spread_of(rf));
    rep.extra["B_over_F_spread"] = num(spread_of(rbf));
    rep.extra["rank_correlation_B_Binf"] = spearman(nb, ni);
    rep.extra["rank_correlation_F_Binf"] = spearman(nf, ni);
    rep.extra["argmax_agree"] = argmax(nb) == argmax(ni) && argmax(nf) == argmax(ni);
  } else if (claim == "prop4.10") {
    if (!(config.tau >= 1.0 / config.p)) refuse("restricting to k >= 0 needs tau >= 1/p");
    SpaceParams Np = P;
    Np.k_range = KRange::NonnegativeOnly;
    rep.norm_a = describe(P) + " over all k";
    rep.norm_b = describe(P) + " over k >= 0";
    bool ordered = true;
    for (const auto& bf : ctx.battery.functions) {
      const double full = function_norm(bf.values, calib, space, cubes, P).value;
      const double half = function_norm(bf.values, calib, space, cubes, Np).value;
      if (half > full) ordered = false;
      record(bf.name, full, half);
    }
    rep.extra["nonnegative_le_full"] = ordered;
  } else if (claim == "prop7.9") {
    require(ctx.grid != nullptr, "the subcube grid");
    SpaceParams Qp = P, Pp = P;
    Qp.family = Pp.family = Family::F;
    Qp.p = config.q;
    Qp.tau = 1.0 / config.q;
    Pp.tau = 1.0 / config.p;
    rep.norm_a = "sequence " + describe(Qp);
    rep.norm_b = "sequence " + describe(Pp);
    std::vector<double> na, nb;
    for (const auto& bf : ctx.battery.functions) {
      const FrameCoefficients c = analysis(bf.values, calib, *ctx.grid);
      const double a = sequence_norm(c, *ctx.grid, space, cubes, Qp).value;
      const double b = sequence_norm(c, *ctx.grid, space, cubes, Pp).value;
      record(bf.name, a, b);
      na.push_back(a);
      nb.push_back(b);
    }
    rep.extra["argmax_agree"] = argmax(na) == argmax(nb);
  } else if (claim == "bump_independence") {
    const BumpPair other = make_bump_pair(calib.delta(), beta0, config.glue_exponent);
    const LPCalibration calib2 = build_calibration(calib.op, other);
    rep.norm_a = describe(P) + " with glue exponent " + std::to_string(config.glue_exponent);
    rep.norm_b = describe(P) + " with the default bump pair";
    rep.parameters["glue_exponent"] = config.glue_exponent;
    for (const auto& bf : ctx.battery.functions)
      record(bf.name, function_norm(bf.values, calib2, space, cubes, P).value,
             function_norm(bf.values, calib, space, cubes, P).value);
  } else {
    throw Error(ErrorKind::InvalidParams, "unknown claim '" + claim + "'");
  }
  rep.finish();
  return rep;
}

double peetre_domination_check(const Eigen::VectorXd& f, const LPCalibration& calib, const MetricMeasureSpace& space,
                               double d, double r, double nu, double gamma) {
  if (!(r > 0.0) || !(nu > 0.0)) throw Error(ErrorKind::InvalidParams, "r and nu must be positive");
  const int L = calib.J_max + 1;
  const double delta = calib.delta();
  const Eigen::VectorXd mf = f.cwiseProduct(space.mu());
  std::vector<Eigen::VectorXd> maxes(static_cast<std::size_t>(L));
  for (int j = 0; j < L; ++j) {
    Eigen::VectorXd g = (calib.level_ops[static_cast<std::size_t>(j)] * mf).cwiseAbs();
    if (gamma != 0.0) g = g.cwiseProduct(ball_measures(space, std::pow(delta, j)).array().pow(gamma).matrix());
    maxes[static_cast<std::size_t>(j)] = hl_maximal(g, space, r);
  }
  double C = 0.0;
  for (int l = 0; l < L; ++l) {
    const Eigen::VectorXd lhs = peetre_maximal(f, calib, space, l, nu + d / r, gamma);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(space.size());
    for (int j = l; j < L; ++j) rhs += std::pow(delta, (j - l) * nu) * maxes[static_cast<std::size_t>(j)];
    for (Eigen::Index x = 0; x < lhs.size(); ++x) {
      if (lhs(x) == 0.0) continue;
      C = std::max(C, rhs(x) > 0.0 ? lhs(x) / rhs(x) : std::numeric_limits<double>::infinity());
    }
  }
  return C;
}

double composition_constant(const MetricMeasureSpace& space, const SubcubeGrid& grid, int j, double delta,
                            double gamma, double beta) {
  const Eigen::MatrixXd E = subexp_envelope(space, std::pow(delta, j), gamma, beta);
  const GridLevel& gl = grid.level(j);
  const Eigen::Index ns = static_cast<Eigen::Index>(gl.subcubes.size());
  Eigen::MatrixXd Es(E.rows(), ns);
  Eigen::VectorXd w(ns);
  for (Eigen::Index c = 0; c < ns; ++c) {
    Es.col(c) = E.col(static_cast<Eigen::Index>(gl.subcubes[static_cast<std::size_t>(c)].sample));
    w(c) = gl.subcubes[static_cast<std::size_t>(c)].measure;
  }
  const Eigen::MatrixXd S = Es * w.asDiagonal() * Es.transpose();
  return S.cwiseQuotient(E).maxCoeff();
}

double reconstruction_error(const Eigen::VectorXd& f, const LPCalibration& calib, const SubcubeGrid& grid,
                            const SynthesisFrame& frame) {
  const Eigen::VectorXd back = synthesis(analysis(f, calib, grid), frame);
  const double nf = norm_mu(f, calib.op.mu);
  return nf > 0.0 ? norm_mu(back - f, calib.op.mu) / nf : norm_mu(back, calib.op.mu);
}

}  // namespace hkframe
