#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace hkframe {

using Index = std::size_t;

/// Finite metric measure space (M, rho, mu). Immutable once built; the
/// factory functions validate the metric axioms.
class MetricMeasureSpace {
public:
  /// Validates and builds a space. `tol` is the absolute slack allowed in the
  /// triangle inequality and symmetry checks.
  static MetricMeasureSpace from_matrix(std::vector<std::string> ids, Eigen::MatrixXd rho,
                                        Eigen::VectorXd mu, double tol = 1e-12);

  /// Shortest-path metric of a weighted undirected graph. Edge triples use
  /// point indices; disconnected graphs are rejected.
  struct Edge {
    Index a;
    Index b;
    double w;
  };
  static MetricMeasureSpace from_edges(std::vector<std::string> ids, const std::vector<Edge>& edges,
                                       Eigen::VectorXd mu);

  Index size() const { return static_cast<Index>(mu_.size()); }
  const std::vector<std::string>& ids() const { return ids_; }
  const Eigen::MatrixXd& rho() const { return rho_; }
  const Eigen::VectorXd& mu() const { return mu_; }
  double rho(Index x, Index y) const { return rho_(x, y); }
  double mu(Index x) const { return mu_(x); }
  double total_measure() const { return total_measure_; }
  double diameter() const { return diameter_; }
  /// Smallest positive distance; 0 for a single point.
  double min_distance() const { return min_distance_; }
  /// Sorted distinct positive distances.
  const std::vector<double>& distances() const { return distances_; }

  Index index_of(const std::string& id) const;

  /// Copy with distances scaled so the minimum positive distance is 1.
  MetricMeasureSpace normalized() const;

private:
  MetricMeasureSpace() = default;
  void finalize();

  std::vector<std::string> ids_;
  Eigen::MatrixXd rho_;
  Eigen::VectorXd mu_;
  double total_measure_ = 0.0;
  double diameter_ = 0.0;
  double min_distance_ = 0.0;
  std::vector<double> distances_;
  std::unordered_map<std::string, Index> lookup_;
};

struct Ball {
  std::vector<Index> members;
  double measure = 0.0;
};

/// Open ball B(x, r) = { y : rho(x, y) < r }.
Ball ball(const MetricMeasureSpace& space, Index x, double r);
Ball ball(const MetricMeasureSpace& space, const std::string& id, double r);
double ball_measure(const MetricMeasureSpace& space, Index x, double r);

struct GeometryReport {
  double K = 1.0;
  double d = 0.0;
  std::optional<double> K_star;  // empty when reverse doubling is not checkable
  std::optional<double> kappa;
  double c0 = 0.0;
  double diam = 0.0;
  std::vector<double> radius_grid;
  std::vector<double> reverse_grid;
};

GeometryReport geometry_report(const MetricMeasureSpace& space);

nlohmann::json to_json(const GeometryReport& report);

/// Parsed space document: the space plus the optional operator and metadata.
struct SpaceFile {
  MetricMeasureSpace space;
  std::optional<Eigen::MatrixXd> op;
  std::string laplacian;  // generator hint, empty when absent
  nlohmann::json metadata = nlohmann::json::object();
};

SpaceFile parse_space(const nlohmann::json& doc);
MetricMeasureSpace load_space(const nlohmann::json& doc);
SpaceFile read_space_file(const std::string& path);
nlohmann::json space_to_json(const MetricMeasureSpace& space, const std::optional<Eigen::MatrixXd>& op = {},
                             const std::string& laplacian = {},
                             const nlohmann::json& metadata = nlohmann::json::object());

}  // namespace hkframe
