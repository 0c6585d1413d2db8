#include "fisherlab/kernels.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#include <omp.h>

#include "fisherlab/errors.hpp"
#include "fisherlab/rng.hpp"

namespace fisherlab::kernels {

namespace {

int g_threads = 0;  // 0: OpenMP default

std::size_t block_count(std::size_t n) { return (n + kReductionBlock - 1) / kReductionBlock; }

void add_outer(const Matrix& rows, std::size_t i, Matrix& acc) {
  const std::size_t d = rows.cols();
  const auto r = rows.row(i);
  for (std::size_t a = 0; a < d; ++a) {
    const double ra = r[a];
    for (std::size_t b = a; b < d; ++b) acc(a, b) += ra * r[b];
  }
}

SymMatrix finish_outer(Matrix acc, std::size_t count) {
  const std::size_t d = acc.rows();
  const double inv = 1.0 / static_cast<double>(count);
  SymMatrix out(d);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) out.set(a, b, acc(a, b) * inv);
  return out;
}

void accumulate_loss_grad(const ModelSpec& model, std::span<const double> theta,
                          const Dataset& data, std::size_t i, LossGrad& acc) {
  const SampleView s = data.sample(i);
  acc.loss += loss(model, theta, s);
  const Vector g = score(model, theta, s);
  for (std::size_t j = 0; j < g.size(); ++j) acc.grad[j] += g[j];
}

}  // namespace

int thread_count() { return g_threads > 0 ? g_threads : omp_get_max_threads(); }

void set_thread_count(int n) { g_threads = n > 0 ? n : 0; }

void apply_thread_env() {
  if (const char* env = std::getenv("FISHERLAB_THREADS")) {
    try {
      set_thread_count(std::stoi(env));
    } catch (const std::exception&) {
      throw ConfigError("FISHERLAB_THREADS must be an integer");
    }
  }
}

SymMatrix outer_product_mean(const Matrix& rows, std::size_t begin, std::size_t end) {
  if (end <= begin || end > rows.rows()) throw InvalidInput("empty or out-of-range row range");
  const std::size_t d = rows.cols();
  const std::size_t nb = block_count(end - begin);
  std::vector<Matrix> partial(nb, Matrix(d, d));
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t lo = begin + b * kReductionBlock;
    const std::size_t hi = std::min(end, lo + kReductionBlock);
    for (std::size_t i = lo; i < hi; ++i) add_outer(rows, i, partial[b]);
  }
  Matrix acc(d, d);
  for (const Matrix& p : partial) acc += p;
  return finish_outer(std::move(acc), end - begin);
}

SymMatrix outer_product_mean(const Matrix& rows) {
  return outer_product_mean(rows, 0, rows.rows());
}

Matrix score_matrix(const ModelSpec& model, std::span<const double> theta, const Dataset& data) {
  const std::size_t n = data.n();
  Matrix out(n, data.dim());
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (std::size_t i = 0; i < n; ++i) {
    const Vector s = score(model, theta, data.sample(i));
    std::copy(s.begin(), s.end(), out.row(i).begin());
  }
  return out;
}

LossGrad loss_and_gradient(const ModelSpec& model, std::span<const double> theta,
                           const Dataset& data, std::size_t begin, std::size_t end) {
  if (end <= begin || end > data.n()) throw InvalidInput("empty or out-of-range row range");
  const std::size_t d = data.dim();
  const std::size_t nb = block_count(end - begin);
  std::vector<LossGrad> partial(nb, LossGrad{0.0, Vector(d)});
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t lo = begin + b * kReductionBlock;
    const std::size_t hi = std::min(end, lo + kReductionBlock);
    for (std::size_t i = lo; i < hi; ++i) accumulate_loss_grad(model, theta, data, i, partial[b]);
  }
  LossGrad out{0.0, Vector(d)};
  for (const LossGrad& p : partial) {
    out.loss += p.loss;
    for (std::size_t j = 0; j < d; ++j) out.grad[j] += p.grad[j];
  }
  const double inv = 1.0 / static_cast<double>(end - begin);
  out.loss *= inv;
  for (double& g : out.grad) g *= inv;
  return out;
}

LossGrad loss_and_gradient(const ModelSpec& model, std::span<const double> theta,
                           const Dataset& data) {
  return loss_and_gradient(model, theta, data, 0, data.n());
}

double mean_loss(const ModelSpec& model, std::span<const double> theta, const Dataset& data) {
  const std::size_t n = data.n();
  const std::size_t nb = block_count(n);
  std::vector<double> partial(nb, 0.0);
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t lo = b * kReductionBlock;
    const std::size_t hi = std::min(n, lo + kReductionBlock);
    for (std::size_t i = lo; i < hi; ++i) partial[b] += loss(model, theta, data.sample(i));
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total / static_cast<double>(n);
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  // Exceptions may not cross the OpenMP region boundary; the first one is
  // rethrown afterwards.
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_count())
  for (std::size_t i = 0; i < count; ++i) {
    try {
      body(i);
    } catch (...) {
#pragma omp critical(fisherlab_parallel_for_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

MomentSums blocked_mc_sum(std::size_t count, std::uint64_t seed,
                          const std::function<MomentSums(std::uint64_t, std::size_t)>& block) {
  const std::size_t nb = (count + kMcBlockSize - 1) / kMcBlockSize;
  std::vector<MomentSums> partial(nb);
  parallel_for(nb, [&](std::size_t b) {
    partial[b] = block(mix_seed(seed, b), std::min(kMcBlockSize, count - b * kMcBlockSize));
  });
  MomentSums out;
  for (const MomentSums& p : partial) {
    out.sum += p.sum;
    out.sum_sq += p.sum_sq;
    out.count += p.count;
  }
  return out;
}

namespace reference {

SymMatrix outer_product_mean(const Matrix& rows) {
  if (rows.rows() == 0) throw InvalidInput("empty row range");
  Matrix acc(rows.cols(), rows.cols());
  for (std::size_t i = 0; i < rows.rows(); ++i) add_outer(rows, i, acc);
  return finish_outer(std::move(acc), rows.rows());
}

Matrix score_matrix(const ModelSpec& model, std::span<const double> theta, const Dataset& data) {
  Matrix out(data.n(), data.dim());
  for (std::size_t i = 0; i < data.n(); ++i) {
    const Vector s = score(model, theta, data.sample(i));
    std::copy(s.begin(), s.end(), out.row(i).begin());
  }
  return out;
}

LossGrad loss_and_gradient(const ModelSpec& model, std::span<const double> theta,
                           const Dataset& data) {
  if (data.n() == 0) throw InvalidInput("empty row range");
  LossGrad out{0.0, Vector(data.dim())};
  for (std::size_t i = 0; i < data.n(); ++i) accumulate_loss_grad(model, theta, data, i, out);
  const double inv = 1.0 / static_cast<double>(data.n());
  out.loss *= inv;
  for (double& g : out.grad) g *= inv;
  return out;
}

MomentSums blocked_mc_sum(std::size_t count, std::uint64_t seed,
                          const std::function<MomentSums(std::uint64_t, std::size_t)>& block) {
  MomentSums out;
  for (std::size_t b = 0; b * kMcBlockSize < count; ++b) {
    const MomentSums p = block(mix_seed(seed, b), std::min(kMcBlockSize, count - b * kMcBlockSize));
    out.sum += p.sum;
    out.sum_sq += p.sum_sq;
    out.count += p.count;
  }
  return out;
}

}  // namespace reference

}  // namespace fisherlab::kernels
