#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace fbmstm {

// Uniform time grid t_n = n*dt together with the Hurst parameter of the
// driving fractional Brownian motion. H in [1/2, 1); H = 1/2 is admitted
// only for Brownian-motion comparison runs.
struct FbmGrid {
  double hurst = 0.5;
  double dt = 1.0;
  std::int64_t n_steps = 1;

  void validate() const;  // throws std::domain_error on bad parameters
  double time_at(std::int64_t step) const noexcept { return dt * static_cast<double>(step); }
  bool operator==(const FbmGrid&) const = default;
};

// One sampled block of fGn increments V_n = B^H(t_{n+1}) - B^H(t_n),
// n = 0..n_steps-1. Each entry is N(0, dt^{2H}) marginally.
struct IncrementBlock {
  std::vector<double> values;
  FbmGrid grid;
  std::uint64_t stream_id = 0;
};

enum class SamplingMethod { ExactCholesky, CirculantEmbedding };

// Stationary autocovariance E[V_m V_{m+lag}] of the increment sequence:
// dt^{2H} at lag 0, (dt^{2H}/2)[(k+1)^{2H} - 2 k^{2H} + (k-1)^{2H}] at lag k.
double increment_covariance(std::int64_t lag, double dt, double hurst);

// Dense covariance of the increment vector; symmetric Toeplitz, PSD.
Eigen::MatrixXd covariance_matrix(const FbmGrid& grid);

struct SamplerOptions {
  std::int64_t cholesky_cap = 4096;   // ExactCholesky refuses larger grids
  double circulant_rel_tol = 1e-10;   // eigenvalues below -tol*max are fatal
};

// Exact-in-law fGn sampler. The factorization (Cholesky lower triangle or
// circulant spectrum) is computed once at construction; sample() is a pure
// function of (master_seed, stream_id) and safe to call concurrently.
class FgnSampler {
 public:
  FgnSampler(const FbmGrid& grid, SamplingMethod method, const SamplerOptions& opts = {});
  ~FgnSampler();
  FgnSampler(FgnSampler&&) noexcept;
  FgnSampler& operator=(FgnSampler&&) noexcept;
  FgnSampler(const FgnSampler&) = delete;
  FgnSampler& operator=(const FgnSampler&) = delete;

  IncrementBlock sample(std::uint64_t master_seed, std::uint64_t stream_id) const;
  // As sample(), writing into caller storage of size grid().n_steps.
  void sample_into(std::uint64_t master_seed, std::uint64_t stream_id,
                   std::span<double> out) const;

  const FbmGrid& grid() const noexcept;
  SamplingMethod method() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// One-shot convenience wrapper around FgnSampler. Ensemble code should build
// the sampler once and reuse it.
IncrementBlock sample_increments(const FbmGrid& grid, SamplingMethod method,
                                 std::uint64_t master_seed, std::uint64_t stream_id,
                                 const SamplerOptions& opts = {});

// Reconstructs B^H(t_n) from increments: out[0] = 0, out[n] - out[n-1] =
// values[n-1]; length n_steps + 1.
std::vector<double> cumulative_path(const IncrementBlock& block);

}  // namespace fbmstm
