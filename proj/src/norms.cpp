#include "hkframe/norms.hpp"

#include "hkframe/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hkframe {

void SpaceParams::validate() const {
  if (!(p > 0.0) || !(q > 0.0)) throw Error(ErrorKind::InvalidParams, "p and q must be positive");
  if (!(tau >= 0.0)) throw Error(ErrorKind::InvalidParams, "tau must be nonnegative");
  if (!std::isfinite(s)) throw Error(ErrorKind::InvalidParams, "s must be finite");
  if (family == Family::F && std::isinf(p)) throw Error(ErrorKind::InvalidParams, "family F needs p < infinity");
  if (d && !(*d > 0.0) && variant == Variant::Tilde)
    throw Error(ErrorKind::InvalidParams, "tilde variants need a positive dimension d");
}

Family parse_family(const std::string& s) {
  if (s == "B" || s == "b") return Family::B;
  if (s == "F" || s == "f") return Family::F;
  throw Error(ErrorKind::InvalidParams, "unknown family '" + s + "'");
}

Variant parse_variant(const std::string& s) {
  if (s == "plain") return Variant::Plain;
  if (s == "tilde") return Variant::Tilde;
  throw Error(ErrorKind::InvalidParams, "unknown variant '" + s + "'");
}

std::string to_string(Family f) { return f == Family::B ? "B" : "F"; }
std::string to_string(Variant v) { return v == Variant::Plain ? "plain" : "tilde"; }

double NormBreakdown::recompute() const {
  double total = 0.0;
  if (family == Family::B && p != q) {
    for (std::size_t c = 0; c < per_level_terms.size(); ++c) {
      if (std::isinf(q)) total = std::max(total, per_level_terms[c]);
      else total += column_weights[c] * std::pow(per_level_terms[c], q);
    }
    if (!std::isinf(q)) total = std::pow(total, 1.0 / q);
  } else {
    for (std::size_t i = 0; i < per_point_terms.size(); ++i) {
      if (std::isinf(p)) total = std::max(total, per_point_terms[i]);
      else total += point_measures[i] * std::pow(per_point_terms[i], p);
    }
    if (!std::isinf(p)) total = std::pow(total, 1.0 / p);
  }
  return std::pow(cube_measure, -tau) * total;
}

namespace {

nlohmann::json num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

}  // namespace

nlohmann::json to_json(const NormBreakdown& b) {
  return {{"value", num(b.value)},
          {"argmax_cube", {{"k", b.k}, {"alpha", b.alpha}, {"measure", b.cube_measure}}},
          {"p", num(b.p)},
          {"q", num(b.q)},
          {"tau", b.tau},
          {"family", to_string(b.family)},
          {"levels", b.columns},
          {"level_weights", b.column_weights},
          {"per_level_terms", b.per_level_terms},
          {"members", b.members},
          {"per_point_terms", b.per_point_terms},
          {"below_threshold", b.below_threshold}};
}

double homogeneous_dimension(const MetricMeasureSpace& space) { return geometry_report(space).d; }

std::vector<int> outer_levels(const CubeSystem& cubes, KRange range) {
  const int lo = range == KRange::Full ? std::min(cubes.k_min, 0) : 0;
  const int hi = std::max(cubes.k_max, lo);
  std::vector<int> ks;
  for (int k = lo; k <= hi; ++k) ks.push_back(k);
  return ks;
}

Eigen::VectorXd ball_measures(const MetricMeasureSpace& space, double r) {
  Eigen::VectorXd v(space.size());
  for (Index x = 0; x < space.size(); ++x) v(static_cast<Eigen::Index>(x)) = ball_measure(space, x, r);
  return v;
}

namespace {

double dimension(const SpaceParams& params, const MetricMeasureSpace& space) {
  if (params.d) return *params.d;
  return homogeneous_dimension(space);
}

// Discrete level problems: column c enters at cube level k iff c >= max(k, 0).
MixedNormProblem level_problem(const Eigen::MatrixXd& G, const CubeSystem& cubes, const SpaceParams& params) {
  MixedNormProblem pr;
  pr.samples = &G;
  pr.p = params.p;
  pr.q = params.q;
  pr.tau = params.tau;
  pr.order = params.family == Family::B ? MixedOrder::LevelOuter : MixedOrder::SpaceOuter;
  pr.ks = outer_levels(cubes, params.k_range);
  for (int k : pr.ks) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(G.cols());
    for (Eigen::Index c = std::max(k, 0); c < G.cols(); ++c) w(c) = 1.0;
    pr.weights.push_back(std::move(w));
  }
  return pr;
}

NormBreakdown breakdown(const MixedNormProblem& pr, const MixedNormResult& res, const CubeSystem& cubes,
                        const Eigen::VectorXd& mu, Family family) {
  NormBreakdown b;
  b.value = res.value;
  b.k = res.k;
  b.alpha = res.alpha;
  b.p = pr.p;
  b.q = pr.q;
  b.tau = pr.tau;
  b.family = family;
  const CubeLevel& lvl = cubes.level(res.k);
  if (lvl.cubes.empty()) return b;
  const Cube& Q = lvl.cubes[res.alpha];
  b.cube_measure = Q.measure;
  b.members = Q.members;
  const auto t = static_cast<std::size_t>(std::find(pr.ks.begin(), pr.ks.end(), res.k) - pr.ks.begin());
  const Eigen::VectorXd& w = pr.weights[t];
  const Eigen::MatrixXd& G = *pr.samples;
  for (Eigen::Index c = 0; c < G.cols(); ++c) {
    if (w(c) == 0.0) continue;
    b.columns.push_back(static_cast<int>(c));
    b.column_weights.push_back(w(c));
    double a = 0.0;
    for (Index x : Q.members) {
      const double v = std::abs(G(static_cast<Eigen::Index>(x), c));
      if (std::isinf(pr.p)) a = std::max(a, v);
      else a += mu(static_cast<Eigen::Index>(x)) * std::pow(v, pr.p);
    }
    b.per_level_terms.push_back(std::isinf(pr.p) ? a : std::pow(a, 1.0 / pr.p));
  }
  for (Index x : Q.members) {
    b.point_measures.push_back(mu(static_cast<Eigen::Index>(x)));
    double h = 0.0;
    for (Eigen::Index c = 0; c < G.cols(); ++c) {
      if (w(c) == 0.0) continue;
      const double v = std::abs(G(static_cast<Eigen::Index>(x), c));
      if (std::isinf(pr.q)) h = std::max(h, v);
      else h += w(c) * std::pow(v, pr.q);
    }
    b.per_point_terms.push_back(std::isinf(pr.q) ? h : std::pow(h, 1.0 / pr.q));
  }
  return b;
}

// Per-point level weights: delta^{-js} or |B(x, delta^j)|^{-s/d}.
Eigen::VectorXd level_weight(int j, const MetricMeasureSpace& space, const CubeSystem* cubes, double delta,
                             const SpaceParams& params, double d) {
  const Index n = space.size();
  if (params.variant == Variant::Plain) return Eigen::VectorXd::Constant(n, std::pow(delta, -j * params.s));
  if (!(d > 0.0)) throw Error(ErrorKind::InvalidParams, "tilde variants need a positive dimension d");
  // Past singleton scale the balls stop shrinking.
  int jj = j;
  if (cubes && jj > cubes->k_max + 1) jj = cubes->k_max + 1;
  const Eigen::VectorXd b = ball_measures(space, std::pow(delta, jj));
  return b.array().pow(-params.s / d).matrix();
}

void check_same_delta(const LPCalibration& calib, const CubeSystem& cubes) {
  if (calib.delta() != cubes.delta)
    throw Error(ErrorKind::InvalidDelta, "cube system and calibration use different delta");
}

}  // namespace

NormBreakdown lp_tau_seq_norm(const Eigen::MatrixXd& levels, const MetricMeasureSpace& space, const CubeSystem& cubes,
                              const SpaceParams& params) {
  params.validate();
  if (levels.rows() != static_cast<Eigen::Index>(space.size()))
    throw Error(ErrorKind::IndexMismatch, "level functions do not match the space size");
  MixedNormProblem pr = level_problem(levels, cubes, params);
  MixedNormResult res = mixed_norm(pr, cubes, space.mu());
  return breakdown(pr, res, cubes, space.mu(), params.family);
}

Eigen::MatrixXd weighted_levels(const Eigen::VectorXd& f, const LPCalibration& calib, const MetricMeasureSpace& space,
                                const SpaceParams& params) {
  const Index n = space.size();
  if (f.size() != static_cast<Eigen::Index>(n)) throw Error(ErrorKind::IndexMismatch, "function length mismatch");
  const double d = params.variant == Variant::Tilde ? dimension(params, space) : 0.0;
  const int J = calib.J_max;
  Eigen::MatrixXd G(n, J + 1);
  const Eigen::VectorXd mf = f.cwiseProduct(space.mu());
  for (int j = 0; j <= J; ++j) {
    Eigen::VectorXd g = calib.level_ops[static_cast<std::size_t>(j)] * mf;
    G.col(j) = g.cwiseProduct(level_weight(j, space, nullptr, calib.delta(), params, d));
  }
  return G;
}

NormBreakdown besov_type_norm(const Eigen::VectorXd& f, const LPCalibration& calib, const MetricMeasureSpace& space,
                              const CubeSystem& cubes, const SpaceParams& params) {
  if (params.family != Family::B) throw Error(ErrorKind::InvalidParams, "besov_type_norm needs family B");
  check_same_delta(calib, cubes);
  params.validate();
  return lp_tau_seq_norm(weighted_levels(f, calib, space, params), space, cubes, params);
}

NormBreakdown triebel_type_norm(const Eigen::VectorXd& f, const LPCalibration& calib,
                                const MetricMeasureSpace& space, const CubeSystem& cubes, const SpaceParams& params) {
  if (params.family != Family::F) throw Error(ErrorKind::InvalidParams, "triebel_type_norm needs family F");
  check_same_delta(calib, cubes);
  params.validate();
  return lp_tau_seq_norm(weighted_levels(f, calib, space, params), space, cubes, params);
}

NormBreakdown function_norm(const Eigen::VectorXd& f, const LPCalibration& calib, const MetricMeasureSpace& space,
                            const CubeSystem& cubes, const SpaceParams& params) {
  return params.family == Family::B ? besov_type_norm(f, calib, space, cubes, params)
                                    : triebel_type_norm(f, calib, space, cubes, params);
}

Eigen::VectorXd peetre_maximal(const Eigen::VectorXd& f, const LPCalibration& calib, const MetricMeasureSpace& space,
                               int level, double a, double gamma) {
  if (!(a > 0.0)) throw Error(ErrorKind::InvalidParams, "Peetre exponent a must be positive");
  const double scale = std::pow(calib.delta(), level);
  Eigen::VectorXd g = calib.level(level) * f.cwiseProduct(space.mu());
  Eigen::VectorXd w = gamma == 0.0 ? Eigen::VectorXd::Ones(space.size())
                                   : Eigen::VectorXd(ball_measures(space, scale).array().pow(gamma).matrix());
  return peetre_sup(space, g, w, scale, a);
}

double peetre_threshold(const SpaceParams& params, double d) {
  const double r = params.family == Family::B ? params.p : std::min(params.p, params.q);
  return d * (params.tau + 1.0 / r);
}

NormBreakdown peetre_norm(const Eigen::VectorXd& f, const LPCalibration& calib, const MetricMeasureSpace& space,
                          const CubeSystem& cubes, const SpaceParams& params, double a) {
  params.validate();
  check_same_delta(calib, cubes);
  const double d = dimension(params, space);
  const int J = calib.J_max;
  Eigen::MatrixXd G(space.size(), J + 1);
  for (int j = 0; j <= J; ++j) {
    if (params.variant == Variant::Plain) {
      G.col(j) = std::pow(calib.delta(), -j * params.s) * peetre_maximal(f, calib, space, j, a, 0.0);
    } else {
      if (!(d > 0.0)) throw Error(ErrorKind::InvalidParams, "tilde variants need a positive dimension d");
      G.col(j) = peetre_maximal(f, calib, space, j, a, -params.s / d);
    }
  }
  NormBreakdown b = lp_tau_seq_norm(G, space, cubes, params);
  b.below_threshold = !(a > peetre_threshold(params, d));
  return b;
}

double heat_level_profile(int j, double l, double a, int m) {
  if (j == 0) return std::exp(-l * l);
  const double u = std::pow(a, j) * l;
  return std::pow(u * u, m) * std::exp(-u * u);
}

NormBreakdown heat_norm_discrete(const Eigen::VectorXd& f, const LPCalibration& calib, const MetricMeasureSpace& space,
                                 const CubeSystem& cubes, const SpaceParams& params, int m) {
  params.validate();
  if (!(m > params.s / calib.beta0()))
    throw Error(ErrorKind::InvalidM, "heat characterisation needs m > s/beta0");
  check_same_delta(calib, cubes);
  const Index n = space.size();
  if (f.size() != static_cast<Eigen::Index>(n)) throw Error(ErrorKind::IndexMismatch, "function length mismatch");
  const double d = params.variant == Variant::Tilde ? dimension(params, space) : 0.0;
  const double a = calib.bumps.a;
  const double delta = calib.delta();
  const double top = std::sqrt(calib.op.lambda_max);
  const Eigen::VectorXd coef = calib.op.eigenvectors.transpose() * f.cwiseProduct(space.mu());
  const Eigen::VectorXd& lam = calib.spectral_grid;

  // Levels decay like delta^{j(beta0 m - s)} once a^j sqrt(lambda_max) is
  // below sqrt(m), where u^{2m} e^{-u^2} is increasing.
  int J = calib.J_max;
  const int cap = calib.J_max + 2000;
  while (J < cap) {
    const double u = std::pow(a, J) * top;
    const double bound = std::pow(u * u, m) * std::pow(delta, -J * std::max(params.s, 0.0));
    if (u * u <= m && bound <= 1e-17) break;
    if (top == 0.0) break;
    ++J;
  }
  Eigen::MatrixXd G(n, J + 1);
  for (int j = 0; j <= J; ++j) {
    Eigen::VectorXd h(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i) h(i) = heat_level_profile(j, lam(i), a, m);
    Eigen::VectorXd g = calib.op.eigenvectors * h.cwiseProduct(coef);
    G.col(j) = g.cwiseProduct(level_weight(j, space, &cubes, delta, params, d));
  }
  return lp_tau_seq_norm(G, space, cubes, params);
}

ContinuousHeatNorm heat_norm_continuous(const Eigen::VectorXd& f, const LPCalibration& calib,
                                        const MetricMeasureSpace& space, const CubeSystem& cubes,
                                        const SpaceParams& params, int m, int points_per_octave) {
  params.validate();
  if (!(m > params.s / calib.beta0()))
    throw Error(ErrorKind::InvalidM, "heat characterisation needs m > s/beta0");
  check_same_delta(calib, cubes);
  if (points_per_octave < 1) throw Error(ErrorKind::InvalidParams, "points_per_octave must be >= 1");
  const Index n = space.size();
  if (f.size() != static_cast<Eigen::Index>(n)) throw Error(ErrorKind::IndexMismatch, "function length mismatch");
  const double d = params.variant == Variant::Tilde ? dimension(params, space) : 0.0;
  if (params.variant == Variant::Tilde && !(d > 0.0))
    throw Error(ErrorKind::InvalidParams, "tilde variants need a positive dimension d");
  const double beta0 = calib.beta0();
  const double delta = calib.delta();
  const double lmax = calib.op.lambda_max;
  const Eigen::VectorXd coef = calib.op.eigenvectors.transpose() * f.cwiseProduct(space.mu());
  const Eigen::VectorXd& lam = calib.op.eigenvalues;

  // Node set in log t: the uniform grid down to the truncation point plus delta^k.
  std::vector<double> logt;
  const double step = std::log(2.0) / points_per_octave;
  const int max_nodes = 200 * points_per_octave;
  const double smin = params.variant == Variant::Plain ? std::max(params.s, 0.0) : 0.0;
  for (int i = 0; i <= max_nodes; ++i) {
    const double lt = -i * step;
    logt.push_back(lt);
    const double t = std::exp(lt);
    const double bound = std::pow(std::pow(t, beta0) * lmax, m) * std::pow(t, -smin);
    const bool below_balls = params.variant == Variant::Plain || t < space.min_distance() || n == 1;
    if (i > 0 && below_balls && bound <= 1e-10) break;
  }
  for (int k = 1; k <= cubes.k_max; ++k) {
    const double lt = k * std::log(delta);
    if (lt > logt.back()) logt.push_back(lt);
  }
  std::sort(logt.begin(), logt.end());
  logt.erase(std::unique(logt.begin(), logt.end(), [](double x, double y) { return std::abs(x - y) < 1e-13; }),
             logt.end());
  const Eigen::Index C = static_cast<Eigen::Index>(logt.size());

  Eigen::MatrixXd G(n, C);
  for (Eigen::Index c = 0; c < C; ++c) {
    const double t = std::exp(logt[static_cast<std::size_t>(c)]);
    const double tb = std::pow(t, beta0);
    Eigen::VectorXd h(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i) h(i) = std::pow(tb * lam(i), m) * std::exp(-tb * lam(i));
    Eigen::VectorXd g = calib.op.eigenvectors * h.cwiseProduct(coef);
    if (params.variant == Variant::Plain) g *= std::pow(t, -params.s);
    else g = g.cwiseProduct(ball_measures(space, t).array().pow(-params.s / d).matrix());
    G.col(c) = g;
  }

  MixedNormProblem pr;
  pr.samples = &G;
  pr.p = params.p;
  pr.q = params.q;
  pr.tau = params.tau;
  pr.order = params.family == Family::B ? MixedOrder::LevelOuter : MixedOrder::SpaceOuter;
  pr.ks = outer_levels(cubes, params.k_range);
  for (int k : pr.ks) {
    const double upper = std::min(0.0, k * std::log(delta));
    Eigen::VectorXd w = Eigen::VectorXd::Zero(C);
    Eigen::Index last = -1;
    for (Eigen::Index c = 0; c < C; ++c)
      if (logt[static_cast<std::size_t>(c)] <= upper + 1e-13) last = c;
    for (Eigen::Index c = 0; c <= last; ++c) {
      const double left = c > 0 ? logt[static_cast<std::size_t>(c)] - logt[static_cast<std::size_t>(c - 1)] : 0.0;
      const double right = c < last ? logt[static_cast<std::size_t>(c + 1)] - logt[static_cast<std::size_t>(c)] : 0.0;
      w(c) = 0.5 * (left + right);
    }
    pr.weights.push_back(std::move(w));
  }
  MixedNormResult res = mixed_norm(pr, cubes, space.mu());

  // Boundary term: sup over k <= 0 of [|Q|^{-tau} int_Q |w e^{-L} f|^p]^{1/p}.
  Eigen::MatrixXd H(n, 1);
  {
    Eigen::VectorXd h = (-lam.array()).exp().matrix();
    Eigen::VectorXd g = calib.op.eigenvectors * h.cwiseProduct(coef);
    if (params.variant == Variant::Tilde) g = g.cwiseProduct(ball_measures(space, 1.0).array().pow(-params.s / d).matrix());
    H.col(0) = g;
  }
  MixedNormProblem bp;
  bp.samples = &H;
  bp.p = params.p;
  bp.q = params.p;
  bp.tau = std::isinf(params.p) ? 0.0 : params.tau / params.p;
  for (int k = std::min(cubes.k_min, 0); k <= 0; ++k) {
    bp.ks.push_back(k);
    bp.weights.push_back(Eigen::VectorXd::Ones(1));
  }
  MixedNormResult bres = mixed_norm(bp, cubes, space.mu());

  ContinuousHeatNorm out;
  out.boundary = bres.value;
  out.integral = res.value;
  out.value = bres.value + res.value;
  out.nodes = static_cast<int>(C);
  out.t_min = std::exp(logt.front());
  out.breakdown = breakdown(pr, res, cubes, space.mu(), params.family);
  return out;
}

NormBreakdown endpoint_finfty_norm(const Eigen::VectorXd& f, const LPCalibration& calib,
                                   const MetricMeasureSpace& space, const CubeSystem& cubes, double s, double q,
                                   Variant variant, std::optional<double> d) {
  SpaceParams p;
  p.s = s;
  p.variant = variant;
  p.d = d;
  if (std::isinf(q)) {
    p.family = Family::B;
    p.p = p.q = std::numeric_limits<double>::infinity();
    p.tau = 0.0;
  } else {
    p.family = Family::F;
    p.p = p.q = q;
    p.tau = 1.0 / q;
  }
  return function_norm(f, calib, space, cubes, p);
}

Eigen::VectorXd hl_maximal(const Eigen::VectorXd& g, const MetricMeasureSpace& space, double r) {
  if (!(r > 0.0)) throw Error(ErrorKind::InvalidParams, "maximal exponent r must be positive");
  if (r == 1.0) return hl_maximal_sup(space, g);
  Eigen::VectorXd gr = g.cwiseAbs().array().pow(r).matrix();
  return hl_maximal_sup(space, gr).array().pow(1.0 / r).matrix();
}

double quasi_triangle_constant(double p, double q) {
  const double r = std::min({p, q, 1.0});
  return std::pow(2.0, std::max(1.0 / r - 1.0, 0.0) + 1.0);
}

}  // namespace hkframe
