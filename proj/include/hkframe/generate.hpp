#pragma once

#include "hkframe/space.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace hkframe {

enum class GeneratorKind { Cycle, Torus, Path, BinaryTree, Gasket, RandomGeometric };

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::Cycle;
  int n = 8;          // cycle/path/torus rows/random_geometric points
  int m = 0;          // torus columns
  int depth = 0;      // binary_tree depth, gasket level
  double radius = 0.3;
  std::uint64_t seed = 0;
  std::string laplacian = "unnormalized";  // or "random_walk_symmetrized" (degree measure)
};

/// Parses forms like "cycle(64)", "torus(4,5)", "gasket(3)", "random_geometric(50,0.3,7)".
GeneratorSpec parse_generator(const std::string& text);

struct GeneratedGraph {
  std::vector<std::string> ids;
  std::vector<MetricMeasureSpace::Edge> edges;
  nlohmann::json metadata = nlohmann::json::object();
};

/// Unit-weight graph for the spec. Throws InvalidSize on bad sizes.
GeneratedGraph generate_graph(const GeneratorSpec& spec);

/// Space document with graph metric, measure (unit, or degree for the random
/// walk Laplacian), the Laplacian matrix and generator metadata.
nlohmann::json generate(const GeneratorSpec& spec);

}  // namespace hkframe
