#include "hkframe/cubes.hpp"

#include "hkframe/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace hkframe {

std::vector<Index> seeded_permutation(Index n, std::uint64_t seed) {
  std::vector<Index> p(n);
  for (Index i = 0; i < n; ++i) p[i] = i;
  std::mt19937_64 rng(seed);
  for (Index i = n; i > 1; --i) {
    Index j = static_cast<Index>(rng() % i);
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

double CubeSystem::scale(int k) const { return std::pow(delta, k); }

const CubeLevel& CubeSystem::level(int k) const { return levels.at(static_cast<std::size_t>(clamp(k) - k_min)); }

namespace {

void index_level(CubeLevel& lvl, Index n, const MetricMeasureSpace& space) {
  lvl.cube_of_point.assign(n, 0);
  for (auto& c : lvl.cubes) {
    std::sort(c.members.begin(), c.members.end());
    c.measure = 0.0;
    for (Index x : c.members) {
      lvl.cube_of_point[x] = c.id;
      c.measure += space.mu(x);
    }
  }
}

}  // namespace

CubeSystem build_cubes(const MetricMeasureSpace& space, double delta, std::uint64_t seed) {
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::InvalidDelta, "delta must lie in (0,1)");
  const Index n = space.size();
  CubeSystem cs;
  cs.delta = delta;
  cs.seed = seed;

  if (n == 1) {
    cs.k_min = cs.k_max = 0;
  } else {
    const double m = space.min_distance();
    const double diam = space.diameter();
    int k = static_cast<int>(std::floor(std::log(m) / std::log(delta))) - 1;
    while (!(std::pow(delta, k) < m)) ++k;
    while (std::pow(delta, k - 1) < m) --k;
    cs.k_max = k;
    k = static_cast<int>(std::ceil(std::log(diam) / std::log(delta))) + 1;
    while (!(std::pow(delta, k) > diam)) --k;
    while (std::pow(delta, k + 1) > diam) ++k;
    cs.k_min = k;
  }

  const auto order = seeded_permutation(n, seed);
  std::vector<Index> rank(n);
  for (Index i = 0; i < n; ++i) rank[order[i]] = i;

  const int nlev = cs.k_max - cs.k_min + 1;
  cs.levels.resize(static_cast<std::size_t>(nlev));

  CubeLevel& finest = cs.levels.back();
  finest.k = cs.k_max;
  for (Index x = 0; x < n; ++x) finest.cubes.push_back(Cube{x, {x}, x, -1, 0.0});
  index_level(finest, n, space);

  for (int k = cs.k_max - 1; k >= cs.k_min; --k) {
    CubeLevel& fine = cs.levels[static_cast<std::size_t>(k + 1 - cs.k_min)];
    CubeLevel& coarse = cs.levels[static_cast<std::size_t>(k - cs.k_min)];
    coarse.k = k;
    const double sep = std::pow(delta, k);

    std::vector<Index> candidates;
    for (const auto& c : fine.cubes) candidates.push_back(c.center);
    std::sort(candidates.begin(), candidates.end(), [&](Index a, Index b) { return rank[a] < rank[b]; });
    std::vector<Index> net;
    for (Index c : candidates) {
      bool separated = true;
      for (Index q : net) {
        if (!(space.rho(c, q) > sep)) {
          separated = false;
          break;
        }
      }
      if (separated) net.push_back(c);
    }
    std::sort(net.begin(), net.end());
    for (Index i = 0; i < net.size(); ++i) coarse.cubes.push_back(Cube{i, {}, net[i], -1, 0.0});

    for (auto& f : fine.cubes) {
      Index best = 0;
      double bestd = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < net.size(); ++i) {
        double dd = space.rho(f.center, net[i]);
        if (dd < bestd) {  // net is sorted by point index, so ties keep the lowest
          bestd = dd;
          best = i;
        }
      }
      f.parent = static_cast<long>(best);
      auto& dst = coarse.cubes[best].members;
      dst.insert(dst.end(), f.members.begin(), f.members.end());
    }
    index_level(coarse, n, space);
  }

  auto rep = verify_cube_axioms(cs, space);
  cs.c_nat = rep.c_nat;
  cs.C_nat = rep.C_nat;
  return cs;
}

CubeAxiomReport verify_cube_axioms(const CubeSystem& cs, const MetricMeasureSpace& space) {
  CubeAxiomReport rep;
  const Index n = space.size();
  auto fail = [&](bool& flag, const std::string& msg) {
    flag = false;
    if (rep.witnesses.size() < 64) rep.witnesses.push_back(msg);
  };

  double C = 0.0;
  double c = std::numeric_limits<double>::infinity();
  for (std::size_t li = 0; li < cs.levels.size(); ++li) {
    const CubeLevel& lvl = cs.levels[li];
    const int k = cs.k_min + static_cast<int>(li);
    const double scale = std::pow(cs.delta, k);

    // (i) disjoint cover
    std::vector<long> owner(n, -1);
    for (const auto& q : lvl.cubes) {
      for (Index x : q.members) {
        if (x >= n) {
          fail(rep.partition, "level " + std::to_string(k) + " cube " + std::to_string(q.id) + " has invalid member");
          continue;
        }
        if (owner[x] >= 0) {
          std::ostringstream os;
          os << "level " << k << ": cubes " << owner[x] << " and " << q.id << " share point " << x;
          fail(rep.partition, os.str());
        } else {
          owner[x] = static_cast<long>(q.id);
        }
      }
    }
    for (Index x = 0; x < n; ++x)
      if (owner[x] < 0) fail(rep.partition, "level " + std::to_string(k) + " does not cover point " + std::to_string(x));

    // (ii)-(iii) nesting
    if (li > 0) {
      const CubeLevel& up = cs.levels[li - 1];
      for (const auto& q : lvl.cubes) {
        if (q.parent < 0 || static_cast<std::size_t>(q.parent) >= up.cubes.size()) {
          fail(rep.nesting, "level " + std::to_string(k) + " cube " + std::to_string(q.id) + " has no parent");
          continue;
        }
        const auto& pm = up.cubes[static_cast<std::size_t>(q.parent)].members;
        for (Index x : q.members) {
          if (!std::binary_search(pm.begin(), pm.end(), x)) {
            std::ostringstream os;
            os << "level " << k << " cube " << q.id << " point " << x << " outside parent " << q.parent;
            fail(rep.nesting, os.str());
            break;
          }
        }
      }
    }

    // (iv) diameter and inner ball
    for (const auto& q : lvl.cubes) {
      double diam = 0.0;
      for (Index a : q.members)
        for (Index b : q.members) diam = std::max(diam, space.rho(a, b));
      C = std::max(C, diam / scale);
      if (!std::binary_search(q.members.begin(), q.members.end(), q.center)) {
        fail(rep.inner_ball, "level " + std::to_string(k) + " cube " + std::to_string(q.id) + " center outside cube");
        continue;
      }
      double out = std::numeric_limits<double>::infinity();
      for (Index y = 0; y < n; ++y)
        if (!std::binary_search(q.members.begin(), q.members.end(), y)) out = std::min(out, space.rho(q.center, y));
      if (std::isfinite(out)) c = std::min(c, out / scale);
    }
  }

  if (!cs.levels.empty()) {
    if (cs.levels.front().cubes.size() != 1) fail(rep.extremes, "coarsest level is not a single cube");
    for (const auto& q : cs.levels.back().cubes)
      if (q.members.size() != 1) fail(rep.extremes, "finest level has a non-singleton cube " + std::to_string(q.id));
  } else {
    fail(rep.extremes, "no levels");
  }

  rep.C_nat = C;
  if (!std::isfinite(c)) c = (C > 0.0) ? C : 1.0;  // single cube everywhere: any ball fits
  // Any smaller constant also satisfies the inclusion, so report c_nat <= C_nat.
  rep.c_nat = (C > 0.0) ? std::min(c, C) : c;
  if (!(rep.c_nat > 0.0)) fail(rep.inner_ball, "inner-ball constant is not positive");
  return rep;
}

const GridLevel& SubcubeGrid::level(int j) const {
  int jj = std::clamp(j, j_lo, j_hi);
  return levels.at(static_cast<std::size_t>(jj - j_lo));
}

SubcubeGrid subcube_grid(const CubeSystem& cs, int j0, double eps0, SampleRule rule, std::uint64_t seed) {
  if (j0 < 1) throw Error(ErrorKind::InvalidParams, "j0 must be >= 1");
  if (!(eps0 > 0.0 && eps0 < 1.0)) throw Error(ErrorKind::InvalidParams, "eps0 must lie in (0,1)");
  SubcubeGrid g;
  g.j0 = j0;
  g.eps0 = eps0;
  g.rule = rule;
  g.seed = seed;
  g.j_lo = cs.k_min - j0;
  g.j_hi = cs.k_max;
  const Index n = cs.levels.empty() ? 0 : cs.levels.front().cube_of_point.size();

  for (int j = g.j_lo; j <= g.j_hi; ++j) {
    GridLevel gl;
    gl.j = j;
    gl.parent_level = cs.clamp(j);
    gl.sample_level = cs.clamp(j + j0);
    gl.clamped = (j + j0 != gl.sample_level);
    const CubeLevel& parents = cs.level(gl.parent_level);
    const CubeLevel& fine = cs.level(gl.sample_level);
    for (const auto& q : fine.cubes) {
      Subcube sc;
      sc.cube = q.id;
      sc.parent = parents.cube_of_point[q.members.front()];
      sc.members = q.members;
      sc.measure = q.measure;
      switch (rule) {
        case SampleRule::Center: sc.sample = q.center; break;
        case SampleRule::MinId: sc.sample = q.members.front(); break;
        case SampleRule::Random: {
          std::seed_seq ss{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                           static_cast<std::uint32_t>(j + 1000000), static_cast<std::uint32_t>(q.id)};
          std::mt19937_64 rng(ss);
          sc.sample = q.members[static_cast<std::size_t>(rng() % q.members.size())];
          break;
        }
      }
      gl.subcubes.push_back(std::move(sc));
    }
    std::stable_sort(gl.subcubes.begin(), gl.subcubes.end(),
                     [](const Subcube& a, const Subcube& b) { return a.parent < b.parent; });
    gl.subcube_of_point.assign(n, 0);
    for (Index i = 0; i < gl.subcubes.size(); ++i)
      for (Index x : gl.subcubes[i].members) gl.subcube_of_point[x] = i;
    g.levels.push_back(std::move(gl));
  }
  return g;
}

SampleRule parse_sample_rule(const std::string& s) {
  if (s == "center") return SampleRule::Center;
  if (s == "min_id") return SampleRule::MinId;
  if (s == "random") return SampleRule::Random;
  throw Error(ErrorKind::InvalidParams, "unknown sample rule '" + s + "'");
}

std::string to_string(SampleRule rule) {
  switch (rule) {
    case SampleRule::Center: return "center";
    case SampleRule::MinId: return "min_id";
    case SampleRule::Random: return "random";
  }
  return "center";
}

nlohmann::json to_json(const CubeSystem& cs) {
  nlohmann::json doc;
  doc["delta"] = cs.delta;
  doc["seed"] = cs.seed;
  doc["k_min"] = cs.k_min;
  doc["k_max"] = cs.k_max;
  doc["c_nat"] = cs.c_nat;
  doc["C_nat"] = cs.C_nat;
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& lvl : cs.levels) {
    nlohmann::json cubes = nlohmann::json::array();
    for (const auto& q : lvl.cubes)
      cubes.push_back({{"id", q.id}, {"members", q.members}, {"center", q.center}, {"parent", q.parent}});
    levels.push_back({{"k", lvl.k}, {"cubes", cubes}});
  }
  doc["levels"] = levels;
  return doc;
}

CubeSystem cubes_from_json(const nlohmann::json& doc, const MetricMeasureSpace& space) {
  try {
    CubeSystem cs;
    cs.delta = doc.at("delta").get<double>();
    cs.seed = doc.at("seed").get<std::uint64_t>();
    cs.k_min = doc.at("k_min").get<int>();
    cs.k_max = doc.at("k_max").get<int>();
    cs.c_nat = doc.value("c_nat", 0.0);
    cs.C_nat = doc.value("C_nat", 0.0);
    for (const auto& l : doc.at("levels")) {
      CubeLevel lvl;
      lvl.k = l.at("k").get<int>();
      for (const auto& q : l.at("cubes")) {
        Cube c;
        c.id = q.at("id").get<Index>();
        c.members = q.at("members").get<std::vector<Index>>();
        c.center = q.at("center").get<Index>();
        c.parent = q.at("parent").get<long>();
        for (Index x : c.members)
          if (x >= space.size()) throw Error(ErrorKind::IndexMismatch, "cube member outside the space");
        lvl.cubes.push_back(std::move(c));
      }
      index_level(lvl, space.size(), space);
      cs.levels.push_back(std::move(lvl));
    }
    if (static_cast<int>(cs.levels.size()) != cs.k_max - cs.k_min + 1)
      throw Error(ErrorKind::MalformedInput, "cube file level count does not match [k_min, k_max]");
    return cs;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedInput, std::string("cube file: ") + e.what());
  }
}

nlohmann::json to_json(const CubeAxiomReport& r) {
  return {{"partition", r.partition}, {"nesting", r.nesting},     {"diameter", r.diameter},
          {"inner_ball", r.inner_ball}, {"extremes", r.extremes}, {"all_pass", r.all_pass()},
          {"c_nat", r.c_nat},         {"C_nat", r.C_nat},         {"witnesses", r.witnesses}};
}

nlohmann::json to_json(const SubcubeGrid& g) {
  nlohmann::json doc;
  doc["j0"] = g.j0;
  doc["eps0"] = g.eps0;
  doc["rule"] = to_string(g.rule);
  doc["seed"] = g.seed;
  doc["j_lo"] = g.j_lo;
  doc["j_hi"] = g.j_hi;
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& gl : g.levels) {
    nlohmann::json subs = nlohmann::json::array();
    for (const auto& s : gl.subcubes)
      subs.push_back({{"parent", s.parent}, {"cube", s.cube}, {"members", s.members}, {"measure", s.measure},
                      {"sample", s.sample}});
    levels.push_back({{"j", gl.j},
                      {"parent_level", gl.parent_level},
                      {"sample_level", gl.sample_level},
                      {"clamped", gl.clamped},
                      {"subcubes", subs}});
  }
  doc["levels"] = levels;
  return doc;
}

SubcubeGrid grid_from_json(const nlohmann::json& doc) {
  try {
    SubcubeGrid g;
    g.j0 = doc.at("j0").get<int>();
    g.eps0 = doc.at("eps0").get<double>();
    g.rule = parse_sample_rule(doc.at("rule").get<std::string>());
    g.seed = doc.at("seed").get<std::uint64_t>();
    g.j_lo = doc.at("j_lo").get<int>();
    g.j_hi = doc.at("j_hi").get<int>();
    Index n = 0;
    for (const auto& l : doc.at("levels")) {
      GridLevel gl;
      gl.j = l.at("j").get<int>();
      gl.parent_level = l.at("parent_level").get<int>();
      gl.sample_level = l.at("sample_level").get<int>();
      gl.clamped = l.at("clamped").get<bool>();
      for (const auto& s : l.at("subcubes")) {
        Subcube sc;
        sc.parent = s.at("parent").get<Index>();
        sc.cube = s.at("cube").get<Index>();
        sc.members = s.at("members").get<std::vector<Index>>();
        sc.measure = s.at("measure").get<double>();
        sc.sample = s.at("sample").get<Index>();
        for (Index x : sc.members) n = std::max(n, x + 1);
        gl.subcubes.push_back(std::move(sc));
      }
      g.levels.push_back(std::move(gl));
    }
    for (auto& gl : g.levels) {
      gl.subcube_of_point.assign(n, 0);
      for (Index i = 0; i < gl.subcubes.size(); ++i)
        for (Index x : gl.subcubes[i].members) gl.subcube_of_point[x] = i;
    }
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedInput, std::string("grid file: ") + e.what());
  }
}

}  // namespace hkframe
