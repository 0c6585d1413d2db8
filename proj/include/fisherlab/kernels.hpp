#pragma once

// Data-parallel inner loops. Each kernel has an OpenMP version (the default
// entry points) and a plain serial version in `reference`, which tests and
// the benchmark compare against.
//
// Parallel reductions are blocked over a fixed number of rows
// (kReductionBlock), independent of the thread count, and the block
// partials are summed in block order. Results therefore do not depend on
// how many threads run, although they may differ from `reference` in the
// last bits because the summation order differs.

#include <cstdint>
#include <functional>

#include "fisherlab/linalg.hpp"
#include "fisherlab/models.hpp"

namespace fisherlab::kernels {

inline constexpr std::size_t kReductionBlock = 256;
/// Monte Carlo draws per independently seeded block.
inline constexpr std::size_t kMcBlockSize = 4096;

/// Number of worker threads used by the parallel kernels.
int thread_count();
/// Caps worker threads; values < 1 restore the OpenMP default.
void set_thread_count(int n);
/// Applies FISHERLAB_THREADS from the environment, if set.
void apply_thread_env();

/// (1/n) Σ r rᵀ over rows [begin, end) of `rows`.
SymMatrix outer_product_mean(const Matrix& rows, std::size_t begin, std::size_t end);
SymMatrix outer_product_mean(const Matrix& rows);

/// Per-sample scores for the whole dataset.
Matrix score_matrix(const ModelSpec& model, std::span<const double> theta, const Dataset& data);

struct LossGrad {
  double loss = 0.0;
  Vector grad;
};

/// Mean loss and its gradient over rows [begin, end).
LossGrad loss_and_gradient(const ModelSpec& model, std::span<const double> theta,
                           const Dataset& data, std::size_t begin, std::size_t end);
LossGrad loss_and_gradient(const ModelSpec& model, std::span<const double> theta,
                           const Dataset& data);
double mean_loss(const ModelSpec& model, std::span<const double> theta, const Dataset& data);

/// Runs body(i) for i in [0, count). Bodies must only write to slot i of
/// caller-owned storage.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

struct MomentSums {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;
};

/// Runs block(mix_seed(seed, b), len) over consecutive blocks of
/// kMcBlockSize draws covering `count`, and sums the results in block order,
/// so Monte Carlo estimates are identical for any thread count.
MomentSums blocked_mc_sum(std::size_t count, std::uint64_t seed,
                          const std::function<MomentSums(std::uint64_t, std::size_t)>& block);

namespace reference {

SymMatrix outer_product_mean(const Matrix& rows);
Matrix score_matrix(const ModelSpec& model, std::span<const double> theta, const Dataset& data);
LossGrad loss_and_gradient(const ModelSpec& model, std::span<const double> theta,
                           const Dataset& data);
MomentSums blocked_mc_sum(std::size_t count, std::uint64_t seed,
                          const std::function<MomentSums(std::uint64_t, std::size_t)>& block);

}  // namespace reference

}  // namespace fisherlab::kernels
