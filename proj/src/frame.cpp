#include "hkframe/frame.hpp"

#include "hkframe/error.hpp"
#include "hkframe/nnls.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <climits>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace hkframe {

FrameCoefficients analysis(const Eigen::VectorXd& f, const LPCalibration& calib, const SubcubeGrid& grid) {
  if (f.size() != calib.op.size()) throw Error(ErrorKind::IndexMismatch, "function length mismatch");
  FrameCoefficients c;
  const Eigen::VectorXd mf = f.cwiseProduct(calib.op.mu);
  for (int j = 0; j <= calib.J_max; ++j) {
    const Eigen::VectorXd g = calib.level_ops[static_cast<std::size_t>(j)] * mf;
    const GridLevel& gl = grid.level(j);
    std::vector<double> v, m;
    std::vector<Index> s;
    for (const auto& sc : gl.subcubes) {
      if (sc.sample >= static_cast<Index>(g.size())) throw Error(ErrorKind::IndexMismatch, "grid sample outside the space");
      v.push_back(g(static_cast<Eigen::Index>(sc.sample)));
      m.push_back(sc.measure);
      s.push_back(sc.sample);
    }
    c.values.push_back(std::move(v));
    c.measures.push_back(std::move(m));
    c.samples.push_back(std::move(s));
  }
  return c;
}

double FrameProfiles::window0(double l) const { return Cutoff{1.0 / a, 1.0 / (a * a)}(l); }

double FrameProfiles::window(double l) const {
  return Cutoff{1.0 / a, 1.0 / (a * a)}(l) * (1.0 - Cutoff{a * a, a}(l));
}

double FrameProfiles::sampler(double l) const { return Cutoff{std::pow(a, -3), std::pow(a, -4)}(l); }

double FrameProfiles::window_level(int j, double l) const {
  return j == 0 ? window0(l) : window(std::pow(a, j) * l);
}

double FrameProfiles::sampler_level(int j, double l) const { return sampler(std::pow(a, j) * l); }

nlohmann::json FrameProfiles::tag() const {
  return {{"a", a},
          {"window", {{"one_on", {a, 1.0 / a}}, {"support", {a * a, 1.0 / (a * a)}}}},
          {"window0", {{"one_on", {0.0, 1.0 / a}}, {"support", {0.0, 1.0 / (a * a)}}}},
          {"sampler", {{"one_on", {0.0, std::pow(a, -3)}}, {"support", {0.0, std::pow(a, -4)}}}},
          {"glue", "exp(-1/x)"}};
}

double SynthesisFrame::total_tail() const {
  double t = 0.0;
  for (const auto& l : levels) t += l.tail_bound;
  return t;
}

double SynthesisFrame::max_residual() const {
  double r = 0.0;
  for (const auto& l : levels) r = std::max(r, l.residual_norm);
  return r;
}

int neumann_terms_needed(double r, double tol) {
  if (r <= 0.0) return 0;
  if (r >= 1.0) return -1;
  int K = 0;
  while (std::pow(r, K + 1) / (1.0 - r) > tol) {
    ++K;
    if (K > 100000) return -1;
  }
  return K;
}

namespace {

// mu-self-adjoint operator matrix -> spectral norm via its symmetric form.
double self_adjoint_norm(const Eigen::MatrixXd& A, const Eigen::VectorXd& mu) {
  if (A.rows() == 0) return 0.0;
  Eigen::VectorXd s = mu.cwiseSqrt();
  Eigen::MatrixXd S = s.asDiagonal() * A * s.cwiseInverse().asDiagonal();
  S = 0.5 * (S + S.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

struct LevelParts {
  Eigen::MatrixXd window;    // Gamma_j kernel
  Eigen::MatrixXd square;    // Gamma_j^2 as an operator matrix
  Eigen::MatrixXd sampled;   // Gamma_j U Gamma_j / c as an operator matrix
  std::vector<Index> samples;
  std::vector<double> measures;
};

}  // namespace

SynthesisFrame build_synthesis_frame(const LPCalibration& calib, const SubcubeGrid& grid, double tol) {
  if (!(tol > 0.0)) throw Error(ErrorKind::InvalidParams, "Neumann tolerance must be positive");
  const SpectralOperator& op = calib.op;
  const Eigen::Index n = op.size();
  const Eigen::VectorXd& mu = op.mu;
  const int L = calib.J_max + 1;

  SynthesisFrame fr;
  fr.tol = tol;
  fr.profiles.a = calib.bumps.a;

  std::vector<LevelParts> parts(static_cast<std::size_t>(L));
#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j < L; ++j) {
    LevelParts& P = parts[static_cast<std::size_t>(j)];
    Eigen::VectorXd gv(n), tv(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      gv(i) = fr.profiles.window_level(j, calib.spectral_grid(i));
      tv(i) = fr.profiles.sampler_level(j, calib.spectral_grid(i));
    }
    P.window = apply_spectral_values(op, gv);
    const Eigen::MatrixXd theta = apply_spectral_values(op, tv);
    const GridLevel& gl = grid.level(j);
    const Eigen::Index ns = static_cast<Eigen::Index>(gl.subcubes.size());
    Eigen::MatrixXd ts(n, ns);
    Eigen::VectorXd w(ns);
    for (Eigen::Index c = 0; c < ns; ++c) {
      const Subcube& sc = gl.subcubes[static_cast<std::size_t>(c)];
      ts.col(c) = theta.col(static_cast<Eigen::Index>(sc.sample));
      w(c) = sc.measure;
      P.samples.push_back(sc.sample);
      P.measures.push_back(sc.measure);
    }
    const Eigen::MatrixXd Gop = P.window * mu.asDiagonal();
    const Eigen::MatrixXd Uop = ts * w.asDiagonal() * ts.transpose() * mu.asDiagonal();
    P.square = Gop * Gop;
    P.sampled = Gop * Uop * Gop;
  }

  // eps0: 0.1, halved until every |R_j| <= 1/2.
  double chosen = -1.0, best_eps = 0.1, best_r = std::numeric_limits<double>::infinity();
  std::vector<double> best_norms;
  int worst_level = 0;
  double eps = 0.1;
  for (int attempt = 0; attempt <= 10; ++attempt, eps *= 0.5) {
    const double c = 1.0 / ((1.0 + eps) * (1.0 + eps));
    std::vector<double> norms(static_cast<std::size_t>(L));
#pragma omp parallel for schedule(dynamic)
    for (int j = 0; j < L; ++j) {
      const LevelParts& P = parts[static_cast<std::size_t>(j)];
      norms[static_cast<std::size_t>(j)] = self_adjoint_norm(P.square - c * P.sampled, mu);
    }
    double r = 0.0;
    int wl = 0;
    for (int j = 0; j < L; ++j)
      if (norms[static_cast<std::size_t>(j)] > r) {
        r = norms[static_cast<std::size_t>(j)];
        wl = j;
      }
    fr.eps0_tried.push_back(eps);
    fr.max_residual_tried.push_back(r);
    if (r < best_r) {
      best_r = r;
      best_eps = eps;
      best_norms = norms;
      worst_level = wl;
    }
    if (r <= 0.5) {
      chosen = eps;
      break;
    }
  }
  if (chosen < 0.0) {
    if (!(best_r < 1.0)) {
      std::ostringstream os;
      os << "|R_j| = " << best_r << " >= 1 at level j = " << worst_level << " for every eps0 tried; refine the grid";
      throw Error(ErrorKind::NeumannDivergence, os.str());
    }
    chosen = best_eps;
  }
  fr.eps0 = chosen;
  const double c = 1.0 / ((1.0 + chosen) * (1.0 + chosen));

  fr.levels.resize(static_cast<std::size_t>(L));
#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j < L; ++j) {
    const LevelParts& P = parts[static_cast<std::size_t>(j)];
    FrameLevel& F = fr.levels[static_cast<std::size_t>(j)];
    F.j = j;
    F.samples = P.samples;
    F.measures = P.measures;
    F.residual_norm = best_norms[static_cast<std::size_t>(j)];
    F.neumann_terms = neumann_terms_needed(F.residual_norm, tol);
    F.tail_bound = F.residual_norm > 0.0 ? std::pow(F.residual_norm, F.neumann_terms + 1) / (1.0 - F.residual_norm)
                                         : 0.0;
    const Eigen::MatrixXd R = P.square - c * P.sampled;
    // T_j applied to every column Gamma_j(., z), one Neumann term at a time.
    Eigen::MatrixXd term = P.window;
    Eigen::MatrixXd acc = term;
    for (int k = 1; k <= F.neumann_terms; ++k) {
      term = R * term;
      acc += term;
    }
    const Eigen::MatrixXd atoms =
        calib.dual_ops[static_cast<std::size_t>(j)] * mu.asDiagonal() * (c * acc);  // atoms(x, z)
    F.psi = atoms.transpose();
  }
  return fr;
}

Eigen::VectorXd synthesis(const FrameCoefficients& coeffs, const SynthesisFrame& frame) {
  if (coeffs.levels() != static_cast<int>(frame.levels.size()))
    throw Error(ErrorKind::IndexMismatch, "coefficient levels do not match the frame");
  if (frame.levels.empty()) return Eigen::VectorXd();
  const Eigen::Index n = frame.levels.front().psi.cols();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (std::size_t j = 0; j < frame.levels.size(); ++j) {
    const FrameLevel& F = frame.levels[j];
    if (coeffs.values[j].size() != F.samples.size())
      throw Error(ErrorKind::IndexMismatch, "coefficient count does not match the frame at level " + std::to_string(j));
    for (std::size_t i = 0; i < F.samples.size(); ++i) {
      if (coeffs.samples[j][i] != F.samples[i])
        throw Error(ErrorKind::IndexMismatch, "coefficient sample points differ from the frame grid");
      out += (F.measures[i] * coeffs.values[j][i]) * F.psi.row(static_cast<Eigen::Index>(F.samples[i])).transpose();
    }
  }
  return out;
}

NormBreakdown sequence_norm(const FrameCoefficients& coeffs, const SubcubeGrid& grid, const MetricMeasureSpace& space,
                            const CubeSystem& cubes, const SpaceParams& params) {
  params.validate();
  const Index n = space.size();
  double d = 0.0;
  if (params.variant == Variant::Tilde) {
    d = params.d ? *params.d : homogeneous_dimension(space);
    if (!(d > 0.0)) throw Error(ErrorKind::InvalidParams, "tilde variants need a positive dimension d");
  }
  const int J = coeffs.levels();
  Eigen::MatrixXd G(n, J);
  for (int j = 0; j < J; ++j) {
    const GridLevel& gl = grid.level(j);
    if (gl.subcubes.size() != coeffs.values[static_cast<std::size_t>(j)].size())
      throw Error(ErrorKind::IndexMismatch, "coefficients do not match the grid at level " + std::to_string(j));
    const double plain = std::pow(cubes.delta, -j * params.s);
    for (Index i = 0; i < gl.subcubes.size(); ++i) {
      const Subcube& sc = gl.subcubes[i];
      const double w = params.variant == Variant::Plain ? plain : std::pow(sc.measure, -params.s / d);
      const double v = w * std::abs(coeffs.values[static_cast<std::size_t>(j)][i]);
      for (Index x : sc.members) G(static_cast<Eigen::Index>(x), j) = v;
    }
  }
  return lp_tau_seq_norm(G, space, cubes, params);
}

double quartile_threshold(std::vector<std::pair<double, double>> vm, double total) {
  if (vm.empty()) return 0.0;
  std::sort(vm.begin(), vm.end(), [](const auto& u, const auto& v) { return u.first > v.first; });
  double above = 0.0;  // mass strictly above the current candidate
  double ans = vm.front().first;
  std::size_t i = 0;
  while (i < vm.size()) {
    const double v = vm[i].first;
    if (!(above < total / 4.0)) break;
    ans = v;
    while (i < vm.size() && vm[i].first == v) above += vm[i++].second;
  }
  return std::max(ans, 0.0);
}

Eigen::VectorXd stopping_functional(const FrameCoefficients& coeffs, const SubcubeGrid& grid,
                                    const MetricMeasureSpace& space, double s, double q, Variant variant, double d,
                                    double delta) {
  if (!(q > 0.0)) throw Error(ErrorKind::InvalidParams, "q must be positive");
  if (variant == Variant::Tilde && !(d > 0.0)) throw Error(ErrorKind::InvalidParams, "tilde needs d > 0");
  const Index n = space.size();
  const int J = coeffs.levels();
  // Weighted level values at every point.
  Eigen::MatrixXd W(n, J);
  for (int j = 0; j < J; ++j) {
    const GridLevel& gl = grid.level(j);
    for (Index i = 0; i < gl.subcubes.size(); ++i) {
      const Subcube& sc = gl.subcubes[i];
      const double w = variant == Variant::Tilde ? std::pow(sc.measure, -s / d) : std::pow(delta, -j * s);
      for (Index x : sc.members)
        W(static_cast<Eigen::Index>(x), j) = w * std::abs(coeffs.values[static_cast<std::size_t>(j)][i]);
    }
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < J; ++k) {
    const GridLevel& gl = grid.level(k);
    for (const Subcube& Q : gl.subcubes) {
      std::vector<std::pair<double, double>> vm;
      for (Index x : Q.members) {
        double g = 0.0;
        for (int j = k; j < J; ++j) {
          const double v = W(static_cast<Eigen::Index>(x), j);
          if (std::isinf(q)) g = std::max(g, v);
          else g += std::pow(v, q);
        }
        if (!std::isinf(q)) g = std::pow(g, 1.0 / q);
        vm.emplace_back(g, space.mu(x));
      }
      const double m = quartile_threshold(vm, Q.measure);
      for (Index x : Q.members) out(static_cast<Eigen::Index>(x)) = std::max(out(static_cast<Eigen::Index>(x)), m);
    }
  }
  return out;
}

int min_sampling_level(double band, double delta, double beta0) {
  if (!(band > 0.0)) return INT_MIN / 2;
  const double v = -(2.0 / beta0) * std::log(band) / std::log(delta);
  return static_cast<int>(std::ceil(v - 1e-9));
}

namespace {

std::vector<Eigen::Index> band_indices(const SpectralOperator& op, double band) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < op.size(); ++i)
    if (std::sqrt(op.eigenvalues(i)) <= band * (1.0 + 1e-12) + 1e-15) idx.push_back(i);
  return idx;
}

void check_level(int j, double band, double delta, double beta0) {
  const int lo = min_sampling_level(band, delta, beta0);
  if (j < lo) {
    std::ostringstream os;
    os << "level j = " << j << " is too coarse for band " << band << "; need j >= " << lo;
    throw Error(ErrorKind::LevelTooCoarse, os.str());
  }
}

}  // namespace

SamplingRatios mz_sampling_check(const SpectralOperator& op, const SubcubeGrid& grid, int j, double band, double p,
                                 double delta, double beta0, int functions, std::uint64_t seed) {
  if (!(p >= 1.0 && p <= 2.0)) throw Error(ErrorKind::InvalidParams, "sampling check needs p in [1,2]");
  check_level(j, band, delta, beta0);
  const auto idx = band_indices(op, band);
  const GridLevel& gl = grid.level(j);
  const Eigen::VectorXd& mu = op.mu;
  SamplingRatios r;
  r.band_size = static_cast<int>(idx.size());
  r.low = std::numeric_limits<double>::infinity();
  r.high = 0.0;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  for (int t = 0; t < functions; ++t) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(op.size());
    if (t == 0) {
      f = Eigen::VectorXd::Ones(op.size());
    } else {
      for (Eigen::Index i : idx) f += g(rng) * op.eigenvectors.col(i);
    }
    double exact = 0.0, sampled = 0.0;
    for (Eigen::Index x = 0; x < f.size(); ++x) exact += mu(x) * std::pow(std::abs(f(x)), p);
    for (const auto& sc : gl.subcubes) sampled += sc.measure * std::pow(std::abs(f(static_cast<Eigen::Index>(sc.sample))), p);
    if (exact == 0.0) continue;
    const double ratio = std::pow(sampled / exact, 1.0 / p);
    r.low = std::min(r.low, ratio);
    r.high = std::max(r.high, ratio);
    ++r.functions;
  }
  if (r.functions == 0) r.low = r.high = 1.0;
  return r;
}

CubatureResult cubature_weights(const SpectralOperator& op, const SubcubeGrid& grid, int j, double band, double delta,
                                double beta0) {
  check_level(j, band, delta, beta0);
  const auto idx = band_indices(op, band);
  const GridLevel& gl = grid.level(j);
  const Eigen::Index m = static_cast<Eigen::Index>(idx.size());
  const Eigen::Index ns = static_cast<Eigen::Index>(gl.subcubes.size());
  Eigen::MatrixXd A(m, ns);
  Eigen::VectorXd b(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto u = op.eigenvectors.col(idx[static_cast<std::size_t>(r)]);
    b(r) = u.dot(op.mu);
    for (Eigen::Index c = 0; c < ns; ++c) {
      const Subcube& sc = gl.subcubes[static_cast<std::size_t>(c)];
      A(r, c) = sc.measure * u(static_cast<Eigen::Index>(sc.sample));
    }
  }

  CubatureResult res;
  res.moments = static_cast<int>(m);
  for (const auto& sc : gl.subcubes) {
    res.samples.push_back(sc.sample);
    res.measures.push_back(sc.measure);
  }
  // Least-norm correction of the unit weights first; NNLS when it goes negative.
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(ns);
  Eigen::VectorXd eps = ones + A.completeOrthogonalDecomposition().solve(b - A * ones);
  res.method = "min_norm_correction";
  if (eps.minCoeff() < 0.0) {
    eps = nnls(A, b);
    res.method = "nnls";
  }
  res.weights = eps;
  res.residual = m > 0 ? (A * eps - b).cwiseAbs().maxCoeff() : 0.0;
  double mass = 0.0;
  int inside = 0;
  for (Eigen::Index c = 0; c < ns; ++c) {
    mass += eps(c) * res.measures[static_cast<std::size_t>(c)];
    if (eps(c) >= 2.0 / 3.0 && eps(c) <= 2.0) ++inside;
  }
  res.mass_error = std::abs(mass - op.mu.sum());
  res.in_range_fraction = ns > 0 ? static_cast<double>(inside) / static_cast<double>(ns) : 0.0;
  if (res.residual > 1e-8) {
    std::ostringstream os;
    os << "cubature moment residual " << res.residual << " exceeds 1e-8";
    throw Error(ErrorKind::InfeasibleMoments, os.str());
  }
  return res;
}

}  // namespace hkframe
