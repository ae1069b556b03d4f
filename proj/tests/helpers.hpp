#pragma once

#include "hkframe/calibration.hpp"
#include "hkframe/cubes.hpp"
#include "hkframe/generate.hpp"
#include "hkframe/spectral.hpp"

#include <random>
#include <string>

namespace hkt {

using namespace hkframe;

inline SpaceFile generated(const std::string& kind, const std::string& laplacian = "unnormalized") {
  GeneratorSpec spec = parse_generator(kind);
  spec.laplacian = laplacian;
  return parse_space(generate(spec));
}

/// Everything built on one generated geometry with default parameters.
struct Setup {
  SpaceFile sf;
  CubeSystem cubes;
  SpectralOperator op;
  LPCalibration calib;

  const MetricMeasureSpace& space() const { return sf.space; }
};

inline Setup setup(const std::string& kind, double delta = 0.5, double beta0 = 2.0,
                   const std::string& laplacian = "unnormalized") {
  SpaceFile sf = generated(kind, laplacian);
  CubeSystem cubes = build_cubes(sf.space, delta, 0);
  SpectralOperator op = eigendecompose(sf.space, *sf.op, laplacian);
  LPCalibration calib = build_calibration(op, make_bump_pair(delta, beta0));
  return {std::move(sf), std::move(cubes), std::move(op), std::move(calib)};
}

/// Same graph with every distance multiplied by `scale` and the operator by
/// scale^-2, so there are cube levels finer than one graph step's worth of
/// spectrum and the subcube grids stop being singletons.
inline Setup scaled_setup(const std::string& kind, double scale, double delta = 0.5) {
  SpaceFile base = generated(kind);
  MetricMeasureSpace sp = MetricMeasureSpace::from_matrix(base.space.ids(), base.space.rho() * scale, base.space.mu());
  SpaceFile sf{sp, Eigen::MatrixXd(*base.op / (scale * scale)), base.laplacian, base.metadata};
  CubeSystem cubes = build_cubes(sf.space, delta, 0);
  SpectralOperator op = eigendecompose(sf.space, *sf.op);
  LPCalibration calib = build_calibration(op, make_bump_pair(delta, 2.0));
  return {std::move(sf), std::move(cubes), std::move(op), std::move(calib)};
}

inline Eigen::VectorXd random_vector(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

inline double rel_diff(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

}  // namespace hkt
