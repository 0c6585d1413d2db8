#pragma once

#include "fisherlab/linalg.hpp"

namespace fisherlab {

struct Preconditioner {
  Matrix T;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  double kappa = 0.0;

  /// Computes the singular values of T; throws SingularCovariance when
  /// σ_min ≤ 1e-12·σ_max.
  static Preconditioner from_matrix(Matrix T);
};

/// T = Σ̂^{-1/2}. Throws SingularCovariance when λ_min(Σ̂) ≤ 1e-10.
Preconditioner whiten_transform(const SymMatrix& sigma_hat);

/// Γ_T = TᵀΓT
SymMatrix precondition_fisher(const SymMatrix& gamma, const Preconditioner& T);

struct SandwichCheck {
  double lower = 0.0;
  double value = 0.0;
  double upper = 0.0;
  bool ok = false;
};

/// σ_min²λ_min(Γ) ≤ λ_min(Γ_T) ≤ σ_max²λ_max(Γ), with 1e-9 slack.
SandwichCheck sandwich_check_general(const SymMatrix& gamma, const Preconditioner& T);

/// With T̃ = T/σ_max: λ_min(Γ)/κ² ≤ λ_min(Γ_T̃) ≤ λ_max(Γ), with 1e-9 slack.
SandwichCheck sandwich_check_kappa(const SymMatrix& gamma, const Preconditioner& T);

/// Robust whitening. Verifies (1−α)Σ ⪯ Σ̂ ⪯ (1+α)Σ first (smallest
/// eigenvalue of each difference ≥ −1e-9, otherwise PreconditionFailed with
/// that eigenvalue as witness), then checks
///   λ_min(A)/(1+α) ≤ λ_min(SAS) ≤ λ_min(A)/(1−α)
/// with A = Σ^{-1/2}ΓΣ^{-1/2} and S = (Σ^{-1/2}Σ̂Σ^{-1/2})^{-1/2}. SAS is
/// orthogonally similar to the Σ̂-whitened Fisher Σ̂^{-1/2}ΓΣ̂^{-1/2}.
SandwichCheck sandwich_check_whitening(const SymMatrix& gamma, const SymMatrix& sigma,
                                       const SymMatrix& sigma_hat, double alpha);

}  // namespace fisherlab
