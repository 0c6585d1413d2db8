#pragma once

#include <functional>
#include <optional>
#include <span>

#include "fisherlab/linalg.hpp"

namespace fisherlab {

/// Full eigendecomposition of a symmetric matrix. Eigenvalues are sorted in
/// descending order; column k of `eigenvectors` belongs to eigenvalues[k].
///
/// Within a repeated eigenvalue the choice of basis is unspecified. Callers
/// must only rely on quantities that are invariant to it (the eigenvalue
/// itself, the eigenspace, projectors).
struct Spectrum {
  Vector eigenvalues;
  Matrix eigenvectors;

  std::size_t dim() const noexcept { return eigenvalues.size(); }
  double lambda_max() const { return eigenvalues.front(); }
  double lambda_min() const { return eigenvalues.back(); }
  Vector eigenvector(std::size_t k) const { return eigenvectors.column(k); }
  /// Unit eigenvector of the smallest eigenvalue.
  Vector min_eigenvector() const { return eigenvectors.column(dim() - 1); }
};

/// d×K matrix with orthonormal columns.
class Subspace {
 public:
  Subspace() = default;

  /// Validates ‖BᵀB − I‖_max ≤ 1e-8; throws InvalidSubspace.
  static Subspace from_basis(Matrix basis);
  /// Modified Gram–Schmidt on the columns; throws InvalidSubspace if they
  /// are numerically dependent.
  static Subspace orthonormalize(const Matrix& columns);
  static Subspace span_of(std::span<const Vector> vectors);

  std::size_t ambient_dim() const noexcept { return basis_.rows(); }
  std::size_t rank() const noexcept { return basis_.cols(); }
  const Matrix& basis() const noexcept { return basis_; }

 private:
  explicit Subspace(Matrix b) : basis_(std::move(b)) {}
  Matrix basis_;
};

/// Cyclic Jacobi eigensolver. Sweeps until the off-diagonal Frobenius norm
/// drops below 1e-12·‖A‖_F (at most 100 sweeps). Throws InvalidMatrix.
Spectrum eig_sym(const SymMatrix& a);

double lambda_min(const SymMatrix& a);
double lambda_max(const SymMatrix& a);

/// Shifted power iteration on (c·I − A), c a Gershgorin bound on λ_max.
/// Returns nullopt when the residual has not dropped below
/// tol·max(1, c) within max_iter steps.
std::optional<double> lambda_min_power(const SymMatrix& a, double tol = 1e-10,
                                       int max_iter = 10000);

/// max_i |λ_i(A)|
double opnorm(const SymMatrix& a);

/// uᵀAu for ‖u‖ within 1e-8 of one; throws InvalidDirection otherwise.
double rayleigh(const SymMatrix& a, std::span<const double> u);

/// Largest principal angle between two subspaces of the same ambient space,
/// in radians.
double principal_angle(const Subspace& u, const Subspace& v);
/// sin² of the largest principal angle, computed as 1 − σ_min² so that it
/// stays accurate for nearly aligned subspaces.
double sin2_principal_angle(const Subspace& u, const Subspace& v);

/// Eigenvectors whose eigenvalues lie within rel_tol·(1 + |λ_max|) of λ_min.
Subspace min_eigenspace(const Spectrum& s, double rel_tol = 1e-10);

/// V f(Λ) Vᵀ
SymMatrix spectral_function(const Spectrum& s, const std::function<double(double)>& f);

/// Clips negative eigenvalues to zero. Matrices whose smallest eigenvalue is
/// already ≥ −1e-12·(1 + ‖A‖) are returned unchanged, bit for bit.
SymMatrix psd_project(const SymMatrix& a);

/// Upper bound on λ_max from Gershgorin discs.
double gershgorin_upper(const SymMatrix& a);

}  // namespace fisherlab
