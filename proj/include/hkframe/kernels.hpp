#pragma once

#include "hkframe/cubes.hpp"
#include "hkframe/space.hpp"

#include <Eigen/Dense>

#include <vector>

namespace hkframe {

/// Which sum sits outside: l^q(L^p_tau) puts the level sum outside the
/// cube integral, L^p_tau(l^q) puts the integral outside.
enum class MixedOrder { LevelOuter, SpaceOuter };

/// Columns of `samples` are the level (or time-node) functions g_c. For each
/// entry of `ks` the matching weight vector says which columns enter the
/// level sum at cube level k and with what weight (0 = excluded).
struct MixedNormProblem {
  const Eigen::MatrixXd* samples = nullptr;
  std::vector<int> ks;
  std::vector<Eigen::VectorXd> weights;
  double p = 2.0;
  double q = 2.0;
  double tau = 0.0;
  MixedOrder order = MixedOrder::LevelOuter;
};

struct MixedNormResult {
  double value = 0.0;
  int k = 0;
  Index alpha = 0;
};

/// sup over k in ks and cubes Q at level(k) of |Q|^{-tau} times the mixed
/// sum. p or q = infinity use max. Parallel over cubes; the argmax is taken
/// serially in (k, alpha) order so the result does not depend on threads.
MixedNormResult mixed_norm(const MixedNormProblem& problem, const CubeSystem& cubes, const Eigen::VectorXd& mu);

/// Single-cube value, shared by both implementations and by breakdowns.
double mixed_cube_value(const MixedNormProblem& problem, const std::vector<Index>& members, double measure,
                        const Eigen::VectorXd& weights, const Eigen::VectorXd& mu);

/// max_y w_y |g_y| / (1 + rho(x,y)/scale)^a.
Eigen::VectorXd peetre_sup(const MetricMeasureSpace& space, const Eigen::VectorXd& g, const Eigen::VectorXd& w,
                           double scale, double a);

/// Hardy-Littlewood maximal function over all closed balls B(y, r), r in
/// {0} and the distance set, evaluated as max over balls containing x of the
/// mu-average of |g|.
Eigen::VectorXd hl_maximal_sup(const MetricMeasureSpace& space, const Eigen::VectorXd& g);

/// Straightforward serial versions kept as test oracles and benchmark baselines.
namespace reference {

MixedNormResult mixed_norm(const MixedNormProblem& problem, const CubeSystem& cubes, const Eigen::VectorXd& mu);
Eigen::VectorXd peetre_sup(const MetricMeasureSpace& space, const Eigen::VectorXd& g, const Eigen::VectorXd& w,
                           double scale, double a);
Eigen::VectorXd hl_maximal_sup(const MetricMeasureSpace& space, const Eigen::VectorXd& g);

}  // namespace reference

}  // namespace hkframe
