#pragma once

#include "hkframe/space.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string>

namespace hkframe {

/// Scalar function of sqrt(lambda).
using Profile = std::function<double(double)>;

/// Kernel matrix in the mu-convention: (Tf)(x) = sum_y K(x,y) f(y) mu_y.
using KernelMatrix = Eigen::MatrixXd;

/// Eigenpairs of L in the mu-weighted inner product. Columns of
/// `eigenvectors` satisfy U^T diag(mu) U = I.
struct SpectralOperator {
  Eigen::VectorXd eigenvalues;   // ascending, clipped at 0
  Eigen::MatrixXd eigenvectors;
  Eigen::VectorXd mu;
  double lambda_max = 0.0;
  std::string source;

  Eigen::Index size() const { return eigenvalues.size(); }
};

/// L acts on column vectors as a plain matrix: (Lf)(x) = sum_y L(x,y) f(y).
/// It must satisfy diag(mu) L = (diag(mu) L)^T within 1e-8.
SpectralOperator eigendecompose(const MetricMeasureSpace& space, const Eigen::MatrixXd& L,
                                const std::string& source = "user");

/// f(sqrt L) as a kernel matrix.
KernelMatrix apply_profile(const SpectralOperator& op, const Profile& f);
/// Same from precomputed values f(sqrt(lambda_i)).
KernelMatrix apply_spectral_values(const SpectralOperator& op, const Eigen::VectorXd& values);

/// p_t = exp(-t L).
KernelMatrix heat_kernel(const SpectralOperator& op, double t);

/// (Tf)(x) = sum_y K(x,y) f(y) mu_y.
Eigen::VectorXd apply_kernel(const KernelMatrix& K, const Eigen::VectorXd& f, const Eigen::VectorXd& mu);
Eigen::MatrixXd apply_kernel(const KernelMatrix& K, const Eigen::MatrixXd& F, const Eigen::VectorXd& mu);
/// Kernel of the composition A o B: sum_z A(x,z) B(z,y) mu_z.
KernelMatrix compose(const KernelMatrix& A, const KernelMatrix& B, const Eigen::VectorXd& mu);

/// D_{delta,sigma}(x,y) = [|B(x,delta)| |B(y,delta)|]^{-1/2} (1 + rho/delta)^{-sigma}.
Eigen::MatrixXd decay_envelope(const MetricMeasureSpace& space, double delta, double sigma);
/// E_delta^{gamma,beta}(x,y) = [|B(x,delta)| |B(y,delta)|]^{-1/2} exp(-gamma (rho/delta)^beta).
Eigen::MatrixXd subexp_envelope(const MetricMeasureSpace& space, double delta, double gamma, double beta);

/// max |K| / D_{delta,sigma}.
double decay_diagnostic(const KernelMatrix& K, const MetricMeasureSpace& space, double delta, double sigma);
/// max |K| / E_delta^{gamma,beta}.
double subexp_diagnostic(const KernelMatrix& K, const MetricMeasureSpace& space, double delta, double gamma,
                         double beta);

/// Symmetric weighted adjacency read off the metric: x ~ y when no third
/// point lies between them, with weight 1/rho(x,y).
Eigen::MatrixXd adjacency_from_metric(const MetricMeasureSpace& space);

/// (Lf)(x) = mu_x^{-1} sum_y w_xy (f(x) - f(y)). mu-self-adjoint for any mu.
Eigen::MatrixXd unnormalized_laplacian(const Eigen::MatrixXd& W, const Eigen::VectorXd& mu);
/// I - D^{-1} W. Self-adjoint for the degree measure; eigendecomposed through
/// its D^{1/2} symmetrization.
Eigen::MatrixXd random_walk_laplacian(const Eigen::MatrixXd& W);
/// Dispatch on "unnormalized" or "random_walk_symmetrized".
Eigen::MatrixXd make_laplacian(const std::string& kind, const Eigen::MatrixXd& W, const Eigen::VectorXd& mu);

}  // namespace hkframe
