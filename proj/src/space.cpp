#include "hkframe/space.hpp"

#include "hkframe/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace hkframe {

namespace {

std::string id_string(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) {
    std::ostringstream os;
    os << v.get<double>();
    return os.str();
  }
  throw Error(ErrorKind::MalformedInput, "point ids must be strings or numbers");
}

// Per-point distance rows sorted ascending with prefix measures, so that
// mu(B(x, r)) is a binary search.
class BallTable {
public:
  explicit BallTable(const MetricMeasureSpace& space) : n_(space.size()) {
    dist_.resize(n_);
    prefix_.resize(n_);
    for (Index x = 0; x < n_; ++x) {
      std::vector<Index> order(n_);
      std::iota(order.begin(), order.end(), Index{0});
      std::sort(order.begin(), order.end(), [&](Index a, Index b) {
        double da = space.rho(x, a), db = space.rho(x, b);
        return da < db || (da == db && a < b);
      });
      dist_[x].resize(n_);
      prefix_[x].resize(n_ + 1);
      prefix_[x][0] = 0.0;
      for (Index i = 0; i < n_; ++i) {
        dist_[x][i] = space.rho(x, order[i]);
        prefix_[x][i + 1] = prefix_[x][i] + space.mu(order[i]);
      }
    }
  }

  double measure(Index x, double r) const {
    auto it = std::lower_bound(dist_[x].begin(), dist_[x].end(), r);
    return prefix_[x][static_cast<Index>(it - dist_[x].begin())];
  }

private:
  Index n_;
  std::vector<std::vector<double>> dist_;
  std::vector<std::vector<double>> prefix_;
};

std::vector<double> unique_sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v) {
    if (out.empty() || x - out.back() > 1e-12 * std::max(1.0, std::abs(x))) out.push_back(x);
  }
  return out;
}

}  // namespace

MetricMeasureSpace MetricMeasureSpace::from_matrix(std::vector<std::string> ids, Eigen::MatrixXd rho,
                                                   Eigen::VectorXd mu, double tol) {
  const Index n = static_cast<Index>(mu.size());
  if (n == 0) throw Error(ErrorKind::MalformedInput, "space has no points");
  if (static_cast<Index>(rho.rows()) != n || static_cast<Index>(rho.cols()) != n)
    throw Error(ErrorKind::MalformedInput, "distance matrix must be N x N with N = number of points");
  if (ids.empty()) {
    ids.resize(n);
    for (Index i = 0; i < n; ++i) ids[i] = std::to_string(i);
  }
  if (ids.size() != n) throw Error(ErrorKind::MalformedInput, "point id count does not match measure length");

  for (Index i = 0; i < n; ++i) {
    if (!(mu(i) > 0.0) || !std::isfinite(mu(i)))
      throw Error(ErrorKind::NonpositiveMeasure, "mu[" + ids[i] + "] = " + std::to_string(mu(i)));
  }
  for (Index i = 0; i < n; ++i) {
    if (rho(i, i) != 0.0)
      throw Error(ErrorKind::MalformedInput, "rho(" + ids[i] + "," + ids[i] + ") must be 0");
    for (Index j = i + 1; j < n; ++j) {
      if (std::abs(rho(i, j) - rho(j, i)) > tol)
        throw Error(ErrorKind::AsymmetricDistance, "rho(" + ids[i] + "," + ids[j] + ") != rho(" + ids[j] + "," +
                                                       ids[i] + ")");
      if (!(rho(i, j) > 0.0) || !std::isfinite(rho(i, j)))
        throw Error(ErrorKind::MalformedInput,
                    "rho(" + ids[i] + "," + ids[j] + ") must be finite and positive");
    }
  }
  for (Index a = 0; a < n; ++a)
    for (Index b = 0; b < n; ++b)
      for (Index c = 0; c < n; ++c) {
        if (rho(a, c) > rho(a, b) + rho(b, c) + tol) {
          std::ostringstream os;
          os << "witness (" << ids[a] << ", " << ids[b] << ", " << ids[c] << "): rho(a,c) = " << rho(a, c)
             << " > rho(a,b) + rho(b,c) = " << rho(a, b) + rho(b, c);
          throw Error(ErrorKind::TriangleInequalityViolation, os.str());
        }
      }

  MetricMeasureSpace s;
  s.ids_ = std::move(ids);
  s.rho_ = std::move(rho);
  s.mu_ = std::move(mu);
  s.finalize();
  return s;
}

MetricMeasureSpace MetricMeasureSpace::from_edges(std::vector<std::string> ids, const std::vector<Edge>& edges,
                                                  Eigen::VectorXd mu) {
  const Index n = static_cast<Index>(mu.size());
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd d = Eigen::MatrixXd::Constant(n, n, inf);
  for (Index i = 0; i < n; ++i) d(i, i) = 0.0;
  for (const auto& e : edges) {
    if (e.a >= n || e.b >= n) throw Error(ErrorKind::UnknownPoint, "edge endpoint out of range");
    if (!(e.w > 0.0) || !std::isfinite(e.w)) throw Error(ErrorKind::MalformedInput, "edge weights must be positive");
    if (e.a == e.b) continue;
    d(e.a, e.b) = std::min(d(e.a, e.b), e.w);
    d(e.b, e.a) = d(e.a, e.b);
  }
  for (Index k = 0; k < n; ++k)
    for (Index i = 0; i < n; ++i) {
      if (d(i, k) == inf) continue;
      for (Index j = 0; j < n; ++j) {
        double via = d(i, k) + d(k, j);
        if (via < d(i, j)) d(i, j) = via;
      }
    }
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (d(i, j) == inf) throw Error(ErrorKind::MalformedInput, "edge graph is disconnected");
  return from_matrix(std::move(ids), std::move(d), std::move(mu));
}

void MetricMeasureSpace::finalize() {
  total_measure_ = mu_.sum();
  diameter_ = rho_.maxCoeff();
  std::vector<double> all;
  all.reserve(size() * (size() - 1) / 2);
  for (Index i = 0; i < size(); ++i)
    for (Index j = i + 1; j < size(); ++j) all.push_back(rho_(i, j));
  distances_ = unique_sorted(std::move(all));
  min_distance_ = distances_.empty() ? 0.0 : distances_.front();
  lookup_.clear();
  for (Index i = 0; i < size(); ++i) lookup_.emplace(ids_[i], i);
}

Index MetricMeasureSpace::index_of(const std::string& id) const {
  auto it = lookup_.find(id);
  if (it == lookup_.end()) throw Error(ErrorKind::UnknownPoint, "no point with id '" + id + "'");
  return it->second;
}

MetricMeasureSpace MetricMeasureSpace::normalized() const {
  MetricMeasureSpace s = *this;
  if (min_distance_ > 0.0) {
    s.rho_ /= min_distance_;
    s.finalize();
  }
  return s;
}

Ball ball(const MetricMeasureSpace& space, Index x, double r) {
  if (x >= space.size()) throw Error(ErrorKind::UnknownPoint, "point index " + std::to_string(x));
  Ball b;
  for (Index y = 0; y < space.size(); ++y) {
    if (space.rho(x, y) < r) {
      b.members.push_back(y);
      b.measure += space.mu(y);
    }
  }
  return b;
}

Ball ball(const MetricMeasureSpace& space, const std::string& id, double r) {
  return ball(space, space.index_of(id), r);
}

double ball_measure(const MetricMeasureSpace& space, Index x, double r) {
  if (x >= space.size()) throw Error(ErrorKind::UnknownPoint, "point index " + std::to_string(x));
  double m = 0.0;
  for (Index y = 0; y < space.size(); ++y)
    if (space.rho(x, y) < r) m += space.mu(y);
  return m;
}

GeometryReport geometry_report(const MetricMeasureSpace& space) {
  GeometryReport rep;
  rep.diam = space.diameter();
  BallTable table(space);

  for (Index x = 0; x < space.size(); ++x) {
    double m = table.measure(x, 1.0);
    rep.c0 = (x == 0) ? m : std::min(rep.c0, m);
  }

  // mu(B(x, r)) is constant on each interval (b_k, b_{k+1}] between the
  // breakpoints {distances} and {distances / 2}, so evaluating at every
  // breakpoint covers all real radii. Midpoints and one radius beyond the
  // diameter are added for readability of the report.
  std::vector<double> breaks;
  for (double dist : space.distances()) {
    breaks.push_back(dist);
    breaks.push_back(dist / 2.0);
  }
  breaks = unique_sorted(std::move(breaks));
  std::vector<double> grid = breaks;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) grid.push_back(0.5 * (breaks[i] + breaks[i + 1]));
  if (!breaks.empty()) grid.push_back(rep.diam + 0.5 * space.min_distance());
  rep.radius_grid = unique_sorted(std::move(grid));

  for (double r : rep.radius_grid) {
    if (r >= space.min_distance() && r <= rep.diam / 3.0) rep.reverse_grid.push_back(r);
  }

  double kmax = 1.0;
  double kmin = std::numeric_limits<double>::infinity();
  for (Index x = 0; x < space.size(); ++x) {
    for (double r : rep.radius_grid) {
      double ratio = table.measure(x, 2.0 * r) / table.measure(x, r);
      kmax = std::max(kmax, ratio);
    }
    for (double r : rep.reverse_grid) {
      double ratio = table.measure(x, 2.0 * r) / table.measure(x, r);
      kmin = std::min(kmin, ratio);
    }
  }
  rep.K = kmax;
  rep.d = std::log2(kmax);
  if (!rep.reverse_grid.empty()) {
    rep.K_star = kmin;
    rep.kappa = std::log2(kmin);
  }
  return rep;
}

nlohmann::json to_json(const GeometryReport& r) {
  nlohmann::json j;
  j["K"] = r.K;
  j["d"] = r.d;
  if (r.K_star) {
    j["K_star"] = *r.K_star;
    j["kappa"] = *r.kappa;
    j["reverse_doubling"] = "checked";
  } else {
    j["K_star"] = nullptr;
    j["kappa"] = nullptr;
    j["reverse_doubling"] = "not checkable";
  }
  j["c0"] = r.c0;
  j["diam"] = r.diam;
  j["radius_grid"] = r.radius_grid;
  return j;
}

namespace {

Eigen::MatrixXd parse_matrix(const nlohmann::json& m, Index n, const char* what) {
  if (!m.is_array() || m.size() != n)
    throw Error(ErrorKind::MalformedInput, std::string(what) + " must have one row per point");
  Eigen::MatrixXd out(n, n);
  for (Index i = 0; i < n; ++i) {
    if (!m[i].is_array() || m[i].size() != n)
      throw Error(ErrorKind::MalformedInput, std::string(what) + " row " + std::to_string(i) + " has wrong length");
    for (Index j = 0; j < n; ++j) out(i, j) = m[i][j].get<double>();
  }
  return out;
}

}  // namespace

SpaceFile parse_space(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("points"))
    throw Error(ErrorKind::MalformedInput, "space document needs a 'points' array");
  std::vector<std::string> ids;
  for (const auto& p : doc.at("points")) ids.push_back(id_string(p));
  const Index n = ids.size();
  if (n == 0) throw Error(ErrorKind::MalformedInput, "space has no points");

  Eigen::VectorXd mu = Eigen::VectorXd::Ones(n);
  if (doc.contains("measure")) {
    const auto& m = doc.at("measure");
    if (!m.is_array() || m.size() != n) throw Error(ErrorKind::MalformedInput, "'measure' must have one entry per point");
    for (Index i = 0; i < n; ++i) mu(i) = m[i].get<double>();
  }

  const bool has_matrix = doc.contains("distance_matrix");
  const bool has_edges = doc.contains("edges");
  if (has_matrix == has_edges)
    throw Error(ErrorKind::MalformedInput, "exactly one of 'distance_matrix' or 'edges' is required");

  std::optional<MetricMeasureSpace> space;
  if (has_matrix) {
    space = MetricMeasureSpace::from_matrix(ids, parse_matrix(doc.at("distance_matrix"), n, "distance_matrix"), mu);
  } else {
    std::unordered_map<std::string, Index> lookup;
    for (Index i = 0; i < n; ++i) lookup.emplace(ids[i], i);
    std::vector<MetricMeasureSpace::Edge> edges;
    for (const auto& e : doc.at("edges")) {
      if (!e.is_array() || e.size() != 3) throw Error(ErrorKind::MalformedInput, "edges are [id, id, weight] triples");
      auto a = lookup.find(id_string(e[0]));
      auto b = lookup.find(id_string(e[1]));
      if (a == lookup.end() || b == lookup.end())
        throw Error(ErrorKind::UnknownPoint, "edge references unknown point " + e.dump());
      edges.push_back({a->second, b->second, e[2].get<double>()});
    }
    space = MetricMeasureSpace::from_edges(ids, edges, mu);
  }

  SpaceFile f{std::move(*space), std::nullopt, {}, nlohmann::json::object()};
  if (doc.contains("operator")) f.op = parse_matrix(doc.at("operator"), n, "operator");
  if (doc.contains("laplacian")) f.laplacian = doc.at("laplacian").get<std::string>();
  if (doc.contains("metadata")) f.metadata = doc.at("metadata");
  return f;
}

MetricMeasureSpace load_space(const nlohmann::json& doc) { return parse_space(doc).space; }

SpaceFile read_space_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MalformedInput, "cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedInput, path + ": " + e.what());
  }
  return parse_space(doc);
}

nlohmann::json space_to_json(const MetricMeasureSpace& space, const std::optional<Eigen::MatrixXd>& op,
                             const std::string& laplacian, const nlohmann::json& metadata) {
  nlohmann::json doc;
  doc["points"] = space.ids();
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < space.size(); ++i) {
    std::vector<double> row(space.size());
    for (Index j = 0; j < space.size(); ++j) row[j] = space.rho(i, j);
    rows.push_back(row);
  }
  doc["distance_matrix"] = rows;
  doc["measure"] = std::vector<double>(space.mu().data(), space.mu().data() + space.size());
  if (op) {
    nlohmann::json m = nlohmann::json::array();
    for (Index i = 0; i < space.size(); ++i) {
      std::vector<double> row(space.size());
      for (Index j = 0; j < space.size(); ++j) row[j] = (*op)(i, j);
      m.push_back(row);
    }
    doc["operator"] = m;
  }
  if (!laplacian.empty()) doc["laplacian"] = laplacian;
  if (!metadata.empty()) doc["metadata"] = metadata;
  return doc;
}

}  // namespace hkframe
