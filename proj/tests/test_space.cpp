#include "helpers.hpp"

#include "hkframe/error.hpp"
#include "hkframe/space.hpp"

#include <doctest.h>

#include <set>

using namespace hkframe;

namespace {

Eigen::MatrixXd floyd_warshall(int n, const std::vector<std::array<int, 3>>& edges) {
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd d = Eigen::MatrixXd::Constant(n, n, inf);
  for (int i = 0; i < n; ++i) d(i, i) = 0;
  for (auto [a, b, w] : edges) d(a, b) = d(b, a) = std::min<double>(d(a, b), w);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) d(i, j) = std::min(d(i, j), d(i, k) + d(k, j));
  return d;
}

nlohmann::json simplex3() {
  return {{"points", {"a", "b", "c"}}, {"distance_matrix", {{0, 1, 1}, {1, 0, 1}, {1, 1, 0}}}, {"measure", {1, 1, 1}}};
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::MalformedInput;
}

// mu(B(x, r)) by direct enumeration.
double brute_ball(const MetricMeasureSpace& s, Index x, double r) {
  double m = 0;
  for (Index y = 0; y < s.size(); ++y)
    if (s.rho(x, y) < r) m += s.mu(y);
  return m;
}

}  // namespace

TEST_CASE("three-point simplex loads with total measure 3") {
  const auto s = load_space(simplex3());
  CHECK(s.size() == 3);
  CHECK(s.total_measure() == 3.0);
  CHECK(s.diameter() == 1.0);
  CHECK(s.min_distance() == 1.0);
}

TEST_CASE("edge list of C8 gives the shortest-path metric") {
  nlohmann::json doc = {{"points", nlohmann::json::array()}, {"edges", nlohmann::json::array()}};
  std::vector<std::array<int, 3>> edges;
  for (int i = 0; i < 8; ++i) {
    doc["points"].push_back(std::to_string(i));
    doc["edges"].push_back({std::to_string(i), std::to_string((i + 1) % 8), 1});
    edges.push_back({i, (i + 1) % 8, 1});
  }
  const auto s = load_space(doc);
  const Eigen::MatrixXd fw = floyd_warshall(8, edges);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      CHECK(s.rho(i, j) == fw(i, j));
      CHECK(s.rho(i, j) == std::min(std::abs(i - j), 8 - std::abs(i - j)));
    }
}

TEST_CASE("load errors") {
  SUBCASE("triangle inequality violation names a witness") {
    nlohmann::json doc = {{"points", {"a", "b", "c"}}, {"distance_matrix", {{0, 1, 5}, {1, 0, 1}, {5, 1, 0}}}};
    try {
      load_space(doc);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::TriangleInequalityViolation);
      const std::string w = e.what();
      CHECK(w.find('a') != std::string::npos);
      CHECK(w.find('c') != std::string::npos);
    }
  }
  SUBCASE("asymmetric") {
    nlohmann::json doc = {{"points", {"a", "b"}}, {"distance_matrix", {{0, 1}, {2, 0}}}};
    CHECK(kind_of([&] { load_space(doc); }) == ErrorKind::AsymmetricDistance);
  }
  SUBCASE("nonpositive measure") {
    nlohmann::json doc = simplex3();
    doc["measure"] = {1, 0, 1};
    CHECK(kind_of([&] { load_space(doc); }) == ErrorKind::NonpositiveMeasure);
  }
  SUBCASE("unknown point in a ball query") {
    const auto s = load_space(simplex3());
    CHECK(kind_of([&] { ball(s, std::string("zz"), 1.0); }) == ErrorKind::UnknownPoint);
  }
  SUBCASE("both matrix and edges") {
    nlohmann::json doc = simplex3();
    doc["edges"] = nlohmann::json::array();
    CHECK(kind_of([&] { load_space(doc); }) == ErrorKind::MalformedInput);
  }
}

TEST_CASE("open balls on C8") {
  const auto s = hkt::generated("cycle(8)").space;
  const Ball b0 = ball(s, 0, 0.5);
  CHECK(b0.members == std::vector<Index>{0});
  CHECK(b0.measure == 1.0);
  const Ball b1 = ball(s, 0, 1.5);
  CHECK(std::set<Index>(b1.members.begin(), b1.members.end()) == std::set<Index>{7, 0, 1});
  CHECK(b1.measure == 3.0);
  const Ball e = ball(s, 3, 0.0);
  CHECK(e.members.empty());
  CHECK(e.measure == 0.0);
  const Ball all = ball(s, 5, s.diameter() + 1);
  CHECK(all.members.size() == 8);
  CHECK(all.measure == s.total_measure());
}

TEST_CASE("ball measure is monotone in r and matches enumeration") {
  for (const char* kind : {"cycle(12)", "gasket(2)", "binary_tree(3)", "random_geometric(30,0.35,3)"}) {
    const auto s = hkt::generated(kind, "random_walk_symmetrized").space;
    for (Index x = 0; x < s.size(); ++x) {
      double prev = 0;
      for (double r = 0; r <= s.diameter() + 1; r += 0.25) {
        const double m = ball_measure(s, x, r);
        CHECK(m == brute_ball(s, x, r));
        CHECK(m >= prev);
        prev = m;
      }
    }
  }
}

TEST_CASE("geometry report") {
  SUBCASE("C8 has c0 = 1") {
    const auto rep = geometry_report(hkt::generated("cycle(8)").space);
    CHECK(rep.c0 == 1.0);
    CHECK(rep.K >= 1.0);
    CHECK(rep.d == doctest::Approx(std::log2(rep.K)));
  }
  SUBCASE("two points: doubling constant by brute force over radii") {
    nlohmann::json doc = {{"points", {"x", "y"}}, {"distance_matrix", {{0, 1}, {1, 0}}}};
    const auto s = load_space(doc);
    const auto rep = geometry_report(s);
    double brute = 1;
    for (double r = 0.001; r < 3; r += 0.001)
      for (Index x = 0; x < 2; ++x) brute = std::max(brute, brute_ball(s, x, 2 * r) / brute_ball(s, x, r));
    CHECK(rep.K == brute);
    CHECK(rep.K == 2.0);
    for (double r : {0.5, 1.0, 1.5})
      CHECK(std::find(rep.radius_grid.begin(), rep.radius_grid.end(), r) != rep.radius_grid.end());
  }
  SUBCASE("single-scale space: reverse doubling not checkable") {
    const auto rep = geometry_report(load_space(simplex3()));
    CHECK_FALSE(rep.K_star.has_value());
    CHECK(to_json(rep)["reverse_doubling"] == "not checkable");
  }
  SUBCASE("grid maximum equals the maximum over a dense radius scan") {
    for (const char* kind : {"path(9)", "gasket(2)", "torus(4,5)"}) {
      const auto s = hkt::generated(kind).space;
      const auto rep = geometry_report(s);
      double brute = 1;
      for (Index x = 0; x < s.size(); ++x) {
        std::vector<double> radii;
        for (double d : s.distances()) {
          radii.push_back(d);
          radii.push_back(d / 2);
          radii.push_back(d / 2 + 1e-9);
          radii.push_back(d + 1e-9);
        }
        for (double r = 0.01; r <= s.diameter() + 1; r += 0.01) radii.push_back(r);
        for (double r : radii) brute = std::max(brute, brute_ball(s, x, 2 * r) / brute_ball(s, x, r));
      }
      CHECK(rep.K == doctest::Approx(brute).epsilon(1e-12));
    }
  }
}

TEST_CASE("normalized rescales the minimum distance to 1") {
  nlohmann::json doc = {{"points", {"a", "b", "c"}}, {"distance_matrix", {{0, 0.5, 1}, {0.5, 0, 0.5}, {1, 0.5, 0}}}};
  const auto s = load_space(doc).normalized();
  CHECK(s.min_distance() == 1.0);
  CHECK(s.diameter() == 2.0);
}

TEST_CASE("space JSON round trip") {
  const SpaceFile sf = hkt::generated("gasket(1)");
  const SpaceFile back = parse_space(space_to_json(sf.space, sf.op, sf.laplacian, sf.metadata));
  CHECK(back.space.rho() == sf.space.rho());
  CHECK(back.space.mu() == sf.space.mu());
  CHECK(*back.op == *sf.op);
  CHECK(back.metadata == sf.metadata);
}
