#include "hkframe/generate.hpp"

#include "hkframe/error.hpp"
#include "hkframe/spectral.hpp"

#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <regex>
#include <sstream>

namespace hkframe {

namespace {

std::string kind_name(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::Cycle: return "cycle";
    case GeneratorKind::Torus: return "torus";
    case GeneratorKind::Path: return "path";
    case GeneratorKind::BinaryTree: return "binary_tree";
    case GeneratorKind::Gasket: return "gasket";
    case GeneratorKind::RandomGeometric: return "random_geometric";
  }
  return "?";
}

std::string describe(const GeneratorSpec& s) {
  std::ostringstream os;
  os << kind_name(s.kind) << '(';
  switch (s.kind) {
    case GeneratorKind::Torus: os << s.n << ',' << s.m; break;
    case GeneratorKind::BinaryTree:
    case GeneratorKind::Gasket: os << s.depth; break;
    case GeneratorKind::RandomGeometric: os << s.n << ',' << s.radius << ',' << s.seed; break;
    default: os << s.n;
  }
  os << ')';
  return os.str();
}

void need(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorKind::InvalidSize, msg);
}

std::vector<std::string> numbered(int n) {
  std::vector<std::string> ids(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = std::to_string(i);
  return ids;
}

bool connected(int n, const std::vector<MetricMeasureSpace::Edge>& edges) {
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
    return x;
  };
  int parts = n;
  for (const auto& e : edges) {
    const int a = find(static_cast<int>(e.a)), b = find(static_cast<int>(e.b));
    if (a != b) {
      parent[static_cast<std::size_t>(a)] = b;
      --parts;
    }
  }
  return parts <= 1;
}

// Sierpinski graph on lattice coordinates (x, y) with corners (0,0), (S,0), (0,S), S = 2^level.
void gasket_edges(int x, int y, int size, std::map<std::pair<int, int>, Index>& ids,
                  std::vector<std::pair<std::pair<int, int>, std::pair<int, int>>>& out) {
  if (size == 1) {
    const std::pair<int, int> p{x, y}, q{x + 1, y}, r{x, y + 1};
    for (const auto& v : {p, q, r}) ids.emplace(v, 0);
    out.push_back({p, q});
    out.push_back({q, r});
    out.push_back({p, r});
    return;
  }
  const int h = size / 2;
  gasket_edges(x, y, h, ids, out);
  gasket_edges(x + h, y, h, ids, out);
  gasket_edges(x, y + h, h, ids, out);
}

}  // namespace

GeneratorSpec parse_generator(const std::string& text) {
  static const std::regex re(R"(^\s*([a-z_]+)\s*\(([^)]*)\)\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, re)) throw Error(ErrorKind::MalformedInput, "cannot parse generator '" + text + "'");
  std::vector<std::string> args;
  {
    std::stringstream ss(m[2].str());
    std::string a;
    while (std::getline(ss, a, ',')) args.push_back(a);
  }
  auto arg = [&](std::size_t i) -> double {
    if (i >= args.size()) throw Error(ErrorKind::MalformedInput, "missing argument in '" + text + "'");
    try {
      return std::stod(args[i]);
    } catch (const std::exception&) {
      throw Error(ErrorKind::MalformedInput, "bad argument '" + args[i] + "' in '" + text + "'");
    }
  };
  GeneratorSpec s;
  const std::string kind = m[1].str();
  if (kind == "cycle") {
    s.kind = GeneratorKind::Cycle;
    s.n = static_cast<int>(arg(0));
  } else if (kind == "path") {
    s.kind = GeneratorKind::Path;
    s.n = static_cast<int>(arg(0));
  } else if (kind == "torus") {
    s.kind = GeneratorKind::Torus;
    s.n = static_cast<int>(arg(0));
    s.m = static_cast<int>(arg(1));
  } else if (kind == "binary_tree") {
    s.kind = GeneratorKind::BinaryTree;
    s.depth = static_cast<int>(arg(0));
  } else if (kind == "gasket") {
    s.kind = GeneratorKind::Gasket;
    s.depth = static_cast<int>(arg(0));
  } else if (kind == "random_geometric") {
    s.kind = GeneratorKind::RandomGeometric;
    s.n = static_cast<int>(arg(0));
    s.radius = arg(1);
    s.seed = args.size() > 2 ? static_cast<std::uint64_t>(arg(2)) : 0;
  } else {
    throw Error(ErrorKind::MalformedInput, "unknown generator '" + kind + "'");
  }
  return s;
}

GeneratedGraph generate_graph(const GeneratorSpec& s) {
  GeneratedGraph g;
  switch (s.kind) {
    case GeneratorKind::Cycle:
      need(s.n >= 2, "cycle needs n >= 2");
      g.ids = numbered(s.n);
      for (int i = 0; i < s.n; ++i)
        if (s.n > 2 || i == 0) g.edges.push_back({Index(i), Index((i + 1) % s.n), 1.0});
      break;
    case GeneratorKind::Path:
      need(s.n >= 2, "path needs n >= 2");
      g.ids = numbered(s.n);
      for (int i = 0; i + 1 < s.n; ++i) g.edges.push_back({Index(i), Index(i + 1), 1.0});
      break;
    case GeneratorKind::Torus: {
      need(s.n >= 2 && s.m >= 2, "torus needs n, m >= 2");
      for (int r = 0; r < s.n; ++r)
        for (int c = 0; c < s.m; ++c) g.ids.push_back(std::to_string(r) + "_" + std::to_string(c));
      auto at = [&](int r, int c) { return Index(((r + s.n) % s.n) * s.m + (c + s.m) % s.m); };
      std::map<std::pair<Index, Index>, bool> seen;
      for (int r = 0; r < s.n; ++r)
        for (int c = 0; c < s.m; ++c)
          for (auto nb : {at(r + 1, c), at(r, c + 1)}) {
            const Index a = at(r, c);
            const auto key = std::minmax(a, nb);
            if (a == nb || seen[key]) continue;
            seen[key] = true;
            g.edges.push_back({a, nb, 1.0});
          }
      break;
    }
    case GeneratorKind::BinaryTree: {
      need(s.depth >= 1 && s.depth <= 16, "binary_tree needs 1 <= depth <= 16");
      const int n = (1 << (s.depth + 1)) - 1;
      g.ids = numbered(n);
      for (int i = 1; i < n; ++i) g.edges.push_back({Index((i - 1) / 2), Index(i), 1.0});
      break;
    }
    case GeneratorKind::Gasket: {
      need(s.depth >= 0 && s.depth <= 7, "gasket needs 0 <= level <= 7");
      std::map<std::pair<int, int>, Index> ids;
      std::vector<std::pair<std::pair<int, int>, std::pair<int, int>>> raw;
      gasket_edges(0, 0, 1 << s.depth, ids, raw);
      Index k = 0;
      for (auto& [xy, id] : ids) {
        id = k++;
        g.ids.push_back(std::to_string(xy.first) + "_" + std::to_string(xy.second));
      }
      for (const auto& [p, q] : raw) g.edges.push_back({ids.at(p), ids.at(q), 1.0});
      g.metadata["beta0_hint"] = std::log(5.0) / std::log(2.0);
      break;
    }
    case GeneratorKind::RandomGeometric: {
      need(s.n >= 2, "random_geometric needs n >= 2");
      need(s.radius > 0.0, "random_geometric needs radius > 0");
      std::mt19937_64 rng(s.seed);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      std::vector<std::pair<double, double>> pts(static_cast<std::size_t>(s.n));
      for (auto& p : pts) {
        p.first = u(rng);
        p.second = u(rng);
      }
      g.ids = numbered(s.n);
      for (int i = 0; i < s.n; ++i)
        for (int j = i + 1; j < s.n; ++j) {
          const double dx = pts[std::size_t(i)].first - pts[std::size_t(j)].first;
          const double dy = pts[std::size_t(i)].second - pts[std::size_t(j)].second;
          if (std::hypot(dx, dy) < s.radius) g.edges.push_back({Index(i), Index(j), 1.0});
        }
      need(connected(s.n, g.edges), "random_geometric graph is disconnected; increase the radius");
      break;
    }
  }
  g.metadata["generator"] = describe(s);
  if (!g.metadata.contains("beta0_hint")) g.metadata["beta0_hint"] = 2.0;
  return g;
}

nlohmann::json generate(const GeneratorSpec& spec) {
  GeneratedGraph g = generate_graph(spec);
  const Eigen::Index n = static_cast<Eigen::Index>(g.ids.size());
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : g.edges) {
    W(Eigen::Index(e.a), Eigen::Index(e.b)) = e.w;
    W(Eigen::Index(e.b), Eigen::Index(e.a)) = e.w;
  }
  Eigen::VectorXd mu = Eigen::VectorXd::Ones(n);
  if (spec.laplacian == "random_walk_symmetrized") mu = W.rowwise().sum();
  else if (spec.laplacian != "unnormalized")
    throw Error(ErrorKind::InvalidParams, "unknown laplacian '" + spec.laplacian + "'");
  const MetricMeasureSpace space = MetricMeasureSpace::from_edges(g.ids, g.edges, mu);
  g.metadata["measure"] = spec.laplacian == "unnormalized" ? "unit" : "degree";
  return space_to_json(space, make_laplacian(spec.laplacian, W, mu), spec.laplacian, g.metadata);
}

}  // namespace hkframe
