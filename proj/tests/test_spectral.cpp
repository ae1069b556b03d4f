#include "helpers.hpp"

#include "hkframe/error.hpp"
#include "hkframe/spectral.hpp"

#include <doctest.h>

#include <cmath>

using namespace hkframe;

namespace {

double orthonormality_error(const SpectralOperator& op) {
  const Eigen::MatrixXd G = op.eigenvectors.transpose() * op.mu.asDiagonal() * op.eigenvectors;
  return (G - Eigen::MatrixXd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff();
}

// exp(A) by a truncated power series.
Eigen::MatrixXd series_exp(const Eigen::MatrixXd& A, int terms) {
  Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(A.rows(), A.cols());
  Eigen::MatrixXd term = sum;
  for (int k = 1; k < terms; ++k) {
    term = term * A / k;
    sum += term;
  }
  return sum;
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

}  // namespace

TEST_CASE("zero operator has zero spectrum and a mu-orthonormal basis") {
  const auto s = hkt::generated("path(5)").space;
  const SpectralOperator op = eigendecompose(s, Eigen::MatrixXd::Zero(5, 5));
  CHECK(op.eigenvalues.cwiseAbs().maxCoeff() == 0.0);
  CHECK(orthonormality_error(op) < 1e-10);
}

TEST_CASE("C8 Laplacian spectrum matches 2 - 2 cos(pi k / 4)") {
  const SpaceFile sf = hkt::generated("cycle(8)");
  const SpectralOperator op = eigendecompose(sf.space, *sf.op);
  std::vector<double> closed;
  for (int k = 0; k < 8; ++k) closed.push_back(2.0 - 2.0 * std::cos(M_PI * k / 4.0));
  std::sort(closed.begin(), closed.end());
  for (int i = 0; i < 8; ++i) CHECK(op.eigenvalues(i) == doctest::Approx(closed[static_cast<std::size_t>(i)]).epsilon(1e-12));
  CHECK(op.lambda_max == doctest::Approx(4.0));
}

TEST_CASE("eigendecomposition invariants under a non-uniform measure") {
  for (const char* kind : {"binary_tree(4)", "gasket(2)", "random_geometric(30,0.4,2)"}) {
    CAPTURE(kind);
    const SpaceFile sf = hkt::generated(kind, "random_walk_symmetrized");
    const SpectralOperator op = eigendecompose(sf.space, *sf.op);
    CHECK(orthonormality_error(op) < 1e-10);
    CHECK(op.eigenvalues.minCoeff() >= 0.0);
    // <L u_a, u_b>_mu = <u_a, L u_b>_mu
    const Eigen::MatrixXd LU = *sf.op * op.eigenvectors;
    const Eigen::MatrixXd A = LU.transpose() * sf.space.mu().asDiagonal() * op.eigenvectors;
    CHECK((A - A.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("eigendecompose errors") {
  const auto s = hkt::generated("path(3)").space;
  Eigen::MatrixXd L(3, 3);
  L << 1, -1, 0, 0, 1, -1, 0, 0, 0;
  CHECK(kind_of([&] { eigendecompose(s, L); }) == ErrorKind::NotSelfAdjoint);
  CHECK(kind_of([&] { eigendecompose(s, -Eigen::MatrixXd::Identity(3, 3)); }) == ErrorKind::NegativeSpectrum);
  CHECK(kind_of([&] { eigendecompose(s, Eigen::MatrixXd::Zero(2, 2)); }) == ErrorKind::IndexMismatch);
}

TEST_CASE("profile calculus") {
  const SpaceFile sf = hkt::generated("binary_tree(3)", "random_walk_symmetrized");
  const auto& mu = sf.space.mu();
  const SpectralOperator op = eigendecompose(sf.space, *sf.op);
  const Eigen::VectorXd g = hkt::random_vector(op.size(), 3);

  SUBCASE("f = 1 is the identity") {
    const KernelMatrix I = apply_profile(op, [](double) { return 1.0; });
    CHECK((apply_kernel(I, g, mu) - g).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("profile supported off the spectrum gives the zero kernel") {
    const double top = std::sqrt(op.lambda_max);
    const KernelMatrix Z = apply_profile(op, [&](double l) { return l > top + 1 ? 1.0 : 0.0; });
    CHECK(Z.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("homomorphism") {
    auto f = [](double l) { return std::exp(-l) * (1 + l); };
    auto h = [](double l) { return std::cos(l); };
    const KernelMatrix lhs = compose(apply_profile(op, f), apply_profile(op, h), mu);
    const KernelMatrix rhs = apply_profile(op, [&](double l) { return f(l) * h(l); });
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-9);
  }
  SUBCASE("heat kernel matches a 30-term exponential series") {
    for (double t : {0.1, 0.5, 1.0}) {
      const Eigen::MatrixXd series = series_exp(-t * *sf.op, 30);
      const Eigen::MatrixXd ours = heat_kernel(op, t) * mu.asDiagonal();
      CHECK((ours - series).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
  SUBCASE("semigroup") {
    const KernelMatrix a = compose(heat_kernel(op, 0.3), heat_kernel(op, 0.7), mu);
    CHECK((a - heat_kernel(op, 1.0)).cwiseAbs().maxCoeff() < 1e-9);
    const KernelMatrix b = compose(heat_kernel(op, 0.5), heat_kernel(op, 0.5), mu);
    CHECK((b - heat_kernel(op, 1.0)).cwiseAbs().maxCoeff() < 1e-9);
  }
  SUBCASE("t <= 0 rejected") {
    CHECK(kind_of([&] { heat_kernel(op, 0.0); }) == ErrorKind::InvalidParams);
  }
}

TEST_CASE("heat kernel on C8") {
  const SpaceFile sf = hkt::generated("cycle(8)");
  const SpectralOperator op = eigendecompose(sf.space, *sf.op);
  const KernelMatrix p1 = heat_kernel(op, 1.0);
  CHECK(((p1 * sf.space.mu()).array() - 1.0).abs().maxCoeff() < 1e-10);
  const KernelMatrix big = heat_kernel(op, 1e6);
  // lambda_0 carries ~1e-16 of rounding, amplified by t
  CHECK((big.array() - 1.0 / 8.0).abs().maxCoeff() < 1e-9);
  const KernelMatrix p = heat_kernel(op, 0.1);
  CHECK((p - p.transpose()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(p.minCoeff() > 0.0);
}

TEST_CASE("single point") {
  nlohmann::json doc = {{"points", {"x"}}, {"distance_matrix", {{0}}}, {"measure", {2.0}}};
  const auto s = load_space(doc);
  const Eigen::MatrixXd W = adjacency_from_metric(s);
  const Eigen::MatrixXd L = random_walk_laplacian(W);
  CHECK(L.rows() == 1);
  CHECK(L(0, 0) == 0.0);
  const SpectralOperator op = eigendecompose(s, L);
  CHECK(op.eigenvalues(0) == 0.0);
  CHECK(heat_kernel(op, 1.0)(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("decay diagnostics") {
  const SpaceFile sf = hkt::generated("cycle(32)");
  const SpectralOperator op = eigendecompose(sf.space, *sf.op);
  const auto& s = sf.space;
  CHECK(decay_diagnostic(KernelMatrix::Zero(32, 32), s, 1.0, 2.0) == 0.0);
  const KernelMatrix I = apply_profile(op, [](double) { return 1.0; });
  CHECK(std::isfinite(decay_diagnostic(I, s, s.min_distance(), 2.0)));
  const double delta = 0.25;
  const KernelMatrix p = heat_kernel(op, std::pow(delta, 2.0));
  double prev = std::numeric_limits<double>::infinity();
  for (double sigma : {3.0, 2.0, 1.0}) {
    const double r = decay_diagnostic(p, s, delta, sigma);
    CHECK(std::isfinite(r));
    CHECK(r <= prev);
    prev = r;
  }
  const Eigen::MatrixXd E = subexp_envelope(s, 2.0, 0.5, 0.5);
  CHECK(subexp_diagnostic(E, s, 2.0, 0.5, 0.5) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(subexp_diagnostic(KernelMatrix::Zero(32, 32), s, 2.0, 0.5, 0.5) == 0.0);
}

TEST_CASE("generated Laplacians annihilate constants") {
  for (const char* kind : {"cycle(10)", "path(7)", "torus(3,4)", "binary_tree(3)", "gasket(2)", "random_geometric(25,0.4,1)"})
    for (const char* lap : {"unnormalized", "random_walk_symmetrized"}) {
      CAPTURE(kind);
      CAPTURE(lap);
      const SpaceFile sf = hkt::generated(kind, lap);
      CHECK((*sf.op * Eigen::VectorXd::Ones(sf.space.size())).cwiseAbs().maxCoeff() < 1e-14);
      CHECK_NOTHROW(eigendecompose(sf.space, *sf.op));
    }
}
