#include "fisherlab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "fisherlab/errors.hpp"

namespace fisherlab {

Subspace Subspace::from_basis(Matrix basis) {
  if (basis.cols() == 0 || basis.cols() > basis.rows())
    throw InvalidSubspace("rank must be in [1, ambient dim]");
  const Matrix gram = transpose_times(basis, basis);
  for (std::size_t i = 0; i < gram.rows(); ++i)
    for (std::size_t j = 0; j < gram.cols(); ++j)
      if (std::abs(gram(i, j) - (i == j ? 1.0 : 0.0)) > 1e-8)
        throw InvalidSubspace("basis columns are not orthonormal");
  return Subspace(std::move(basis));
}

Subspace Subspace::orthonormalize(const Matrix& columns) {
  if (columns.cols() == 0 || columns.cols() > columns.rows())
    throw InvalidSubspace("rank must be in [1, ambient dim]");
  Matrix q = columns;
  for (std::size_t j = 0; j < q.cols(); ++j) {
    Vector v = q.column(j);
    const double original = norm(v);
    // two passes of modified Gram-Schmidt
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t k = 0; k < j; ++k) {
        const Vector qk = q.column(k);
        axpy(-dot(qk, v), qk, v);
      }
    const double nv = norm(v);
    if (!(nv > 1e-12 * std::max(1.0, original)))
      throw InvalidSubspace("columns are linearly dependent");
    for (double& x : v) x /= nv;
    q.set_column(j, v);
  }
  return Subspace(std::move(q));
}

Subspace Subspace::span_of(std::span<const Vector> vectors) {
  if (vectors.empty()) throw InvalidSubspace("empty vector list");
  Matrix m(vectors.front().size(), vectors.size());
  for (std::size_t j = 0; j < vectors.size(); ++j) {
    if (vectors[j].size() != m.rows()) throw InvalidSubspace("vectors differ in dimension");
    m.set_column(j, vectors[j]);
  }
  return orthonormalize(m);
}

Spectrum eig_sym(const SymMatrix& sym) {
  sym.validate();
  const std::size_t d = sym.dim();
  if (d == 0) throw InvalidMatrix("empty matrix");

  Matrix a = sym.matrix();
  Matrix v = Matrix::identity(d);
  const double scale = frobenius_norm(a);

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < 100; ++sweep) {
    if (off_norm() <= 1e-12 * scale) break;
    for (std::size_t p = 0; p + 1 < d; ++p)
      for (std::size_t q = p + 1; q < d; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < d; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
  }

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  Spectrum out;
  out.eigenvalues.resize(d);
  out.eigenvectors = Matrix(d, d);
  for (std::size_t k = 0; k < d; ++k) {
    out.eigenvalues[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < d; ++i) out.eigenvectors(i, k) = v(i, order[k]);
  }
  return out;
}

double gershgorin_upper(const SymMatrix& a) {
  double bound = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.dim(); ++i) {
    double radius = 0.0;
    for (std::size_t j = 0; j < a.dim(); ++j)
      if (j != i) radius += std::abs(a(i, j));
    bound = std::max(bound, a(i, i) + radius);
  }
  return bound;
}

std::optional<double> lambda_min_power(const SymMatrix& a, double tol, int max_iter) {
  a.validate();
  const std::size_t d = a.dim();
  if (d == 0) throw InvalidMatrix("empty matrix");
  if (d == 1) return a(0, 0);

  const double shift = gershgorin_upper(a);
  // B = shift·I − A is PSD; its dominant eigenvalue is shift − λ_min.
  auto apply_b = [&](const Vector& x) {
    Vector y = a.matrix() * x;
    for (std::size_t i = 0; i < d; ++i) y[i] = shift * x[i] - y[i];
    return y;
  };

  std::mt19937_64 gen(0x5eed5eedULL);
  std::uniform_real_distribution<double> unif(0.5, 1.5);
  Vector x(d);
  for (double& xi : x) xi = unif(gen);
  x = normalized(x);

  const double tol_abs = tol * std::max(1.0, std::abs(shift));
  for (int it = 0; it < max_iter; ++it) {
    Vector y = apply_b(x);
    const double rho = dot(x, y);
    Vector r = y;
    axpy(-rho, x, r);
    if (norm(r) <= tol_abs) return shift - rho;
    const double ny = norm(y);
    if (ny == 0.0) return shift;  // A = shift·I
    for (std::size_t i = 0; i < d; ++i) x[i] = y[i] / ny;
  }
  return std::nullopt;
}

double lambda_min(const SymMatrix& a) {
  if (auto fast = lambda_min_power(a)) return *fast;
  return eig_sym(a).lambda_min();
}

double lambda_max(const SymMatrix& a) { return eig_sym(a).lambda_max(); }

double opnorm(const SymMatrix& a) {
  const Spectrum s = eig_sym(a);
  return std::max(std::abs(s.lambda_max()), std::abs(s.lambda_min()));
}

double rayleigh(const SymMatrix& a, std::span<const double> u) {
  if (u.size() != a.dim()) throw InvalidDirection("dimension mismatch");
  const double nu = norm(u);
  if (!(std::abs(nu - 1.0) <= 1e-8)) throw InvalidDirection("direction is not a unit vector");
  return dot(u, a.matrix() * u);
}

namespace {

// Smallest singular value of UᵀV over the min(K_u, K_v) principal angles.
double min_cosine(const Subspace& u, const Subspace& v) {
  if (u.ambient_dim() != v.ambient_dim())
    throw InvalidSubspace("subspaces live in different ambient spaces");
  if (u.rank() == 0 || v.rank() == 0) throw InvalidSubspace("empty subspace");
  Matrix m = transpose_times(u.basis(), v.basis());  // K_u × K_v
  if (m.rows() > m.cols()) m = m.transposed();
  const SymMatrix gram = SymMatrix::symmetrize(m * m.transposed());
  const double smin2 = std::max(0.0, eig_sym(gram).lambda_min());
  return std::clamp(std::sqrt(smin2), 0.0, 1.0);
}

}  // namespace

double principal_angle(const Subspace& u, const Subspace& v) {
  return std::acos(min_cosine(u, v));
}

double sin2_principal_angle(const Subspace& u, const Subspace& v) {
  const double c = min_cosine(u, v);
  return std::clamp(1.0 - c * c, 0.0, 1.0);
}

Subspace min_eigenspace(const Spectrum& s, double rel_tol) {
  const double lmin = s.lambda_min();
  const double tol = rel_tol * (1.0 + std::abs(s.lambda_max()));
  std::vector<Vector> cols;
  for (std::size_t k = s.dim(); k-- > 0;) {
    if (s.eigenvalues[k] - lmin > tol) break;
    cols.push_back(s.eigenvector(k));
  }
  Matrix b(s.dim(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) b.set_column(j, cols[j]);
  return Subspace::from_basis(std::move(b));
}

SymMatrix spectral_function(const Spectrum& s, const std::function<double(double)>& f) {
  const std::size_t d = s.dim();
  Matrix out(d, d);
  for (std::size_t k = 0; k < d; ++k) {
    const double fk = f(s.eigenvalues[k]);
    if (fk == 0.0) continue;
    for (std::size_t i = 0; i < d; ++i) {
      const double vik = fk * s.eigenvectors(i, k);
      for (std::size_t j = 0; j < d; ++j) out(i, j) += vik * s.eigenvectors(j, k);
    }
  }
  return SymMatrix::symmetrize(out);
}

SymMatrix psd_project(const SymMatrix& a) {
  const Spectrum s = eig_sym(a);
  const double tol = 1e-12 * (1.0 + std::abs(s.lambda_max()));
  if (s.lambda_min() >= -tol) return a;
  return spectral_function(s, [](double l) { return std::max(l, 0.0); });
}

}  // namespace fisherlab
