#include "hkframe/kernels.hpp"

#include "hkframe/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace hkframe {

namespace {

MixedOrder effective_order(const MixedNormProblem& pr) {
  // With p == q both orders are the same double sum; use one code path so the
  // two families agree bit for bit.
  if (pr.p == pr.q) return MixedOrder::SpaceOuter;
  return pr.order;
}

double lp_combine(double acc, double p) {
  if (std::isinf(p)) return acc;
  return std::pow(acc, 1.0 / p);
}

void check_problem(const MixedNormProblem& pr) {
  if (!pr.samples) throw Error(ErrorKind::InvalidParams, "mixed norm without samples");
  if (!(pr.p > 0.0) || !(pr.q > 0.0)) throw Error(ErrorKind::InvalidParams, "p and q must be positive");
  if (pr.ks.size() != pr.weights.size()) throw Error(ErrorKind::InvalidParams, "one weight vector per k");
  for (const auto& w : pr.weights)
    if (w.size() != pr.samples->cols()) throw Error(ErrorKind::IndexMismatch, "weight vector length mismatch");
}

bool better(double v, double best) { return v > best; }

}  // namespace

double mixed_cube_value(const MixedNormProblem& pr, const std::vector<Index>& members, double measure,
                        const Eigen::VectorXd& w, const Eigen::VectorXd& mu) {
  const Eigen::MatrixXd& G = *pr.samples;
  const double p = pr.p, q = pr.q;
  double total = 0.0;
  if (effective_order(pr) == MixedOrder::LevelOuter) {
    for (Eigen::Index c = 0; c < G.cols(); ++c) {
      if (w(c) == 0.0) continue;
      double a = 0.0;
      for (Index x : members) {
        const double v = std::abs(G(static_cast<Eigen::Index>(x), c));
        if (std::isinf(p)) a = std::max(a, v);
        else a += mu(static_cast<Eigen::Index>(x)) * std::pow(v, p);
      }
      a = lp_combine(a, p);
      if (std::isinf(q)) total = std::max(total, a);
      else total += w(c) * std::pow(a, q);
    }
    total = lp_combine(total, q);
  } else {
    for (Index x : members) {
      double h = 0.0;
      for (Eigen::Index c = 0; c < G.cols(); ++c) {
        if (w(c) == 0.0) continue;
        const double v = std::abs(G(static_cast<Eigen::Index>(x), c));
        if (std::isinf(q)) h = std::max(h, v);
        else h += w(c) * std::pow(v, q);
      }
      h = lp_combine(h, q);
      if (std::isinf(p)) total = std::max(total, h);
      else total += mu(static_cast<Eigen::Index>(x)) * std::pow(h, p);
    }
    total = lp_combine(total, p);
  }
  return std::pow(measure, -pr.tau) * total;
}

MixedNormResult mixed_norm(const MixedNormProblem& pr, const CubeSystem& cubes, const Eigen::VectorXd& mu) {
  check_problem(pr);
  const Eigen::MatrixXd& G = *pr.samples;
  const Eigen::Index n = G.rows();
  const Eigen::Index C = G.cols();
  const double p = pr.p, q = pr.q;
  const MixedOrder order = effective_order(pr);

  // |G|^p (or |G|) once, reused at every level.
  Eigen::MatrixXd Gp(n, C);
  const double e1 = order == MixedOrder::LevelOuter ? p : q;
#pragma omp parallel for schedule(static)
  for (Eigen::Index x = 0; x < n; ++x)
    for (Eigen::Index c = 0; c < C; ++c) {
      const double v = std::abs(G(x, c));
      Gp(x, c) = std::isinf(e1) ? v : std::pow(v, e1);
    }

  std::map<int, Eigen::MatrixXd> level_norms;  // LevelOuter: cube x column L^p norms per cube level
  MixedNormResult best{-1.0, 0, 0};
  for (std::size_t t = 0; t < pr.ks.size(); ++t) {
    const int k = pr.ks[t];
    const Eigen::VectorXd& w = pr.weights[t];
    const CubeLevel& lvl = cubes.level(k);
    const Index ncubes = lvl.cubes.size();
    std::vector<double> vals(ncubes, 0.0);

    if (order == MixedOrder::LevelOuter) {
      auto it = level_norms.find(lvl.k);
      if (it == level_norms.end()) {
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ncubes), C);
#pragma omp parallel for schedule(dynamic)
        for (Index i = 0; i < ncubes; ++i) {
          for (Index x : lvl.cubes[i].members)
            for (Eigen::Index c = 0; c < C; ++c) {
              const double v = Gp(static_cast<Eigen::Index>(x), c);
              auto& a = A(static_cast<Eigen::Index>(i), c);
              if (std::isinf(p)) a = std::max(a, v);
              else a += mu(static_cast<Eigen::Index>(x)) * v;
            }
          if (!std::isinf(p))
            for (Eigen::Index c = 0; c < C; ++c)
              A(static_cast<Eigen::Index>(i), c) = std::pow(A(static_cast<Eigen::Index>(i), c), 1.0 / p);
        }
        it = level_norms.emplace(lvl.k, std::move(A)).first;
      }
      const Eigen::MatrixXd& A = it->second;
#pragma omp parallel for schedule(static)
      for (Index i = 0; i < ncubes; ++i) {
        double total = 0.0;
        for (Eigen::Index c = 0; c < C; ++c) {
          if (w(c) == 0.0) continue;
          const double a = A(static_cast<Eigen::Index>(i), c);
          if (std::isinf(q)) total = std::max(total, a);
          else total += w(c) * std::pow(a, q);
        }
        vals[i] = std::pow(lvl.cubes[i].measure, -pr.tau) * lp_combine(total, q);
      }
    } else {
      Eigen::VectorXd h(n);
#pragma omp parallel for schedule(static)
      for (Eigen::Index x = 0; x < n; ++x) {
        double acc = 0.0;
        for (Eigen::Index c = 0; c < C; ++c) {
          if (w(c) == 0.0) continue;
          if (std::isinf(q)) acc = std::max(acc, Gp(x, c));
          else acc += w(c) * Gp(x, c);
        }
        acc = lp_combine(acc, q);
        h(x) = std::isinf(p) ? acc : std::pow(acc, p);
      }
#pragma omp parallel for schedule(static)
      for (Index i = 0; i < ncubes; ++i) {
        double total = 0.0;
        for (Index x : lvl.cubes[i].members) {
          if (std::isinf(p)) total = std::max(total, h(static_cast<Eigen::Index>(x)));
          else total += mu(static_cast<Eigen::Index>(x)) * h(static_cast<Eigen::Index>(x));
        }
        vals[i] = std::pow(lvl.cubes[i].measure, -pr.tau) * lp_combine(total, p);
      }
    }

    for (Index i = 0; i < ncubes; ++i)
      if (better(vals[i], best.value)) best = {vals[i], k, i};
  }
  if (best.value < 0.0) best.value = 0.0;
  return best;
}

Eigen::VectorXd peetre_sup(const MetricMeasureSpace& space, const Eigen::VectorXd& g, const Eigen::VectorXd& w,
                           double scale, double a) {
  const Index n = space.size();
  Eigen::VectorXd num = w.cwiseProduct(g.cwiseAbs());
  Eigen::VectorXd out(n);
  const double inv = 1.0 / scale;
#pragma omp parallel for schedule(static)
  for (Index x = 0; x < n; ++x) {
    double m = 0.0;
    for (Index y = 0; y < n; ++y) {
      const double v = num(static_cast<Eigen::Index>(y));
      if (v <= m) continue;  // the damping factor is at most 1
      m = std::max(m, v * std::pow(1.0 + inv * space.rho(x, y), -a));
    }
    out(static_cast<Eigen::Index>(x)) = m;
  }
  return out;
}

Eigen::VectorXd hl_maximal_sup(const MetricMeasureSpace& space, const Eigen::VectorXd& g) {
  const Index n = space.size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  const Eigen::VectorXd& mu = space.mu();
#pragma omp parallel
  {
    Eigen::VectorXd local = Eigen::VectorXd::Zero(n);
    std::vector<Index> order(n);
    std::vector<double> avg(n);
#pragma omp for schedule(dynamic)
    for (Index y = 0; y < n; ++y) {
      std::iota(order.begin(), order.end(), Index{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](Index u, Index v) { return space.rho(y, u) < space.rho(y, v); });
      // avg[i]: average over the closed ball ending with the distance group of order[i]
      double s = 0.0, m = 0.0;
      Index i = 0;
      while (i < n) {
        Index e = i;
        const double r = space.rho(y, order[i]);
        while (e < n && space.rho(y, order[e]) == r) {
          s += mu(static_cast<Eigen::Index>(order[e])) * std::abs(g(static_cast<Eigen::Index>(order[e])));
          m += mu(static_cast<Eigen::Index>(order[e]));
          ++e;
        }
        for (Index t = i; t < e; ++t) avg[t] = s / m;
        i = e;
      }
      // a point belongs to every ball from its own group outward
      double run = 0.0;
      for (Index t = n; t-- > 0;) {
        run = std::max(run, avg[t]);
        auto& slot = local(static_cast<Eigen::Index>(order[t]));
        slot = std::max(slot, run);
      }
    }
#pragma omp critical
    out = out.cwiseMax(local);
  }
  return out;
}

namespace reference {

MixedNormResult mixed_norm(const MixedNormProblem& pr, const CubeSystem& cubes, const Eigen::VectorXd& mu) {
  check_problem(pr);
  MixedNormResult best{-1.0, 0, 0};
  for (std::size_t t = 0; t < pr.ks.size(); ++t) {
    const CubeLevel& lvl = cubes.level(pr.ks[t]);
    for (Index i = 0; i < lvl.cubes.size(); ++i) {
      const double v = mixed_cube_value(pr, lvl.cubes[i].members, lvl.cubes[i].measure, pr.weights[t], mu);
      if (better(v, best.value)) best = {v, pr.ks[t], i};
    }
  }
  if (best.value < 0.0) best.value = 0.0;
  return best;
}

Eigen::VectorXd peetre_sup(const MetricMeasureSpace& space, const Eigen::VectorXd& g, const Eigen::VectorXd& w,
                           double scale, double a) {
  const Index n = space.size();
  Eigen::VectorXd out(n);
  for (Index x = 0; x < n; ++x) {
    double m = 0.0;
    for (Index y = 0; y < n; ++y)
      m = std::max(m, w(static_cast<Eigen::Index>(y)) * std::abs(g(static_cast<Eigen::Index>(y))) /
                          std::pow(1.0 + space.rho(x, y) / scale, a));
    out(static_cast<Eigen::Index>(x)) = m;
  }
  return out;
}

Eigen::VectorXd hl_maximal_sup(const MetricMeasureSpace& space, const Eigen::VectorXd& g) {
  const Index n = space.size();
  std::vector<double> radii{0.0};
  radii.insert(radii.end(), space.distances().begin(), space.distances().end());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (Index y = 0; y < n; ++y) {
    for (double r : radii) {
      double s = 0.0, m = 0.0;
      for (Index z = 0; z < n; ++z)
        if (space.rho(y, z) <= r) {
          s += space.mu(z) * std::abs(g(static_cast<Eigen::Index>(z)));
          m += space.mu(z);
        }
      for (Index z = 0; z < n; ++z)
        if (space.rho(y, z) <= r) out(static_cast<Eigen::Index>(z)) = std::max(out(static_cast<Eigen::Index>(z)), s / m);
    }
  }
  return out;
}

}  // namespace reference

}  // namespace hkframe
