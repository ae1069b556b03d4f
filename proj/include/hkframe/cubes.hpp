#pragma once

#include "hkframe/space.hpp"

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace hkframe {

struct Cube {
  Index id = 0;
  std::vector<Index> members;  // sorted point indices
  Index center = 0;
  long parent = -1;            // cube id at level k - 1, -1 at the coarsest level
  double measure = 0.0;
};

struct CubeLevel {
  int k = 0;
  std::vector<Cube> cubes;
  std::vector<Index> cube_of_point;  // point index -> cube id
};

/// Nested dyadic partition of a finite space, one partition per level
/// k in [k_min, k_max]. Level k_min is the single cube M and level k_max is
/// all singletons. `level(k)` clamps k into that range, which is exact on a
/// finite space: coarser levels repeat M and finer levels repeat singletons.
struct CubeSystem {
  double delta = 0.5;
  std::uint64_t seed = 0;
  int k_min = 0;
  int k_max = 0;
  std::vector<CubeLevel> levels;  // levels[k - k_min]
  double c_nat = 0.0;
  double C_nat = 0.0;

  const CubeLevel& level(int k) const;
  int clamp(int k) const { return k < k_min ? k_min : (k > k_max ? k_max : k); }
  double scale(int k) const;  // delta^k
};

/// Greedy hierarchical nets: at each level (fine to coarse) a maximal
/// delta^k-separated subset of the finer centers, finer cubes attached to the
/// nearest net point (ties to the lowest point index).
CubeSystem build_cubes(const MetricMeasureSpace& space, double delta = 0.5, std::uint64_t seed = 0);

struct CubeAxiomReport {
  bool partition = true;      // (i) disjoint cover per level
  bool nesting = true;        // (ii)-(iii) every cube inside its parent
  bool diameter = true;       // (iv) diam Q <= C_nat delta^k
  bool inner_ball = true;     // (iv) B(z, c_nat delta^k) inside Q
  bool extremes = true;       // singletons at k_max, M at k_min
  double c_nat = 0.0;
  double C_nat = 0.0;
  std::vector<std::string> witnesses;

  bool all_pass() const { return partition && nesting && diameter && inner_ball && extremes; }
};

CubeAxiomReport verify_cube_axioms(const CubeSystem& cubes, const MetricMeasureSpace& space);

enum class SampleRule { Center, MinId, Random };

struct Subcube {
  Index parent = 0;            // cube id tau at level j
  Index cube = 0;              // cube id at the sample level
  std::vector<Index> members;
  double measure = 0.0;
  Index sample = 0;            // xi
};

struct GridLevel {
  int j = 0;
  int parent_level = 0;        // clamped cube level holding Q_tau^j
  int sample_level = 0;        // clamped level j + j0
  bool clamped = false;        // j + j0 fell outside [k_min, k_max]
  std::vector<Subcube> subcubes;
  std::vector<Index> subcube_of_point;
};

/// For each level j, the level-(j + j0) cubes inside each level-j cube
/// together with one sample point per subcube. Stored for
/// j in [k_min - j0, k_max]; `level(j)` clamps j above k_max.
struct SubcubeGrid {
  int j0 = 1;
  double eps0 = 0.1;
  SampleRule rule = SampleRule::Center;
  std::uint64_t seed = 0;
  int j_lo = 0;
  int j_hi = 0;
  std::vector<GridLevel> levels;

  const GridLevel& level(int j) const;
};

SubcubeGrid subcube_grid(const CubeSystem& cubes, int j0 = 1, double eps0 = 0.1,
                         SampleRule rule = SampleRule::Center, std::uint64_t seed = 0);

SampleRule parse_sample_rule(const std::string& s);
std::string to_string(SampleRule rule);

nlohmann::json to_json(const CubeSystem& cubes);
CubeSystem cubes_from_json(const nlohmann::json& doc, const MetricMeasureSpace& space);
nlohmann::json to_json(const CubeAxiomReport& report);
nlohmann::json to_json(const SubcubeGrid& grid);
SubcubeGrid grid_from_json(const nlohmann::json& doc);

/// Deterministic permutation of 0..n-1 (Fisher-Yates over mt19937_64).
std::vector<Index> seeded_permutation(Index n, std::uint64_t seed);

}  // namespace hkframe
