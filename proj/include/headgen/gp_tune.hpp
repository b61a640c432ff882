// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

namespace headgen {

/// Closed box per dimension.
struct Bounds {
  std::vector<double> lower;
  std::vector<double> upper;

  /// diversity in [0, 2], repetition in [0, 3], length decay in [0.5, 1].
  static Bounds DecodingDefaults();

  std::size_t dims() const { return lower.size(); }
  void Validate() const;
  bool Contains(std::span<const double> x) const;
  std::vector<double> ToUnit(std::span<const double> x) const;
  std::vector<double> FromUnit(std::span<const double> u) const;
};

/// Anisotropic squared-exponential kernel plus i.i.d. observation noise.
struct KernelParams {
  double signal_variance = 1.0;
  std::vector<double> length_scales;
  double noise_variance = 1e-6;
};

double RbfKernel(const KernelParams& k, std::span<const double> a,
                 std::span<const double> b);

struct GpPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Exact GP regression with a constant prior mean equal to the mean of the
/// observed values. The Cholesky factor of K + noise*I is cached.
class GaussianProcess {
 public:
  static GaussianProcess Fit(std::vector<std::vector<double>> points,
                             std::vector<double> values, KernelParams kernel);

  /// Fits after maximizing the log marginal likelihood over log-scaled
  /// kernel hyperparameters with a seeded multi-start pattern search.
  static GaussianProcess FitWithRefit(std::vector<std::vector<double>> points,
                                      std::vector<double> values,
                                      const KernelParams& initial,
                                      std::uint64_t seed);

  GpPrediction Predict(std::span<const double> x) const;
  double LogMarginalLikelihood() const { return log_ml_; }

  const KernelParams& kernel() const { return kernel_; }
  double prior_mean() const { return prior_mean_; }
  double jitter() const { return jitter_; }
  const std::vector<std::vector<double>>& points() const { return points_; }
  const std::vector<double>& values() const { return values_; }
  double best_value() const;

 private:
  GaussianProcess() = default;

  std::vector<std::vector<double>> points_;
  std::vector<double> values_;
  KernelParams kernel_;
  double prior_mean_ = 0.0;
  double jitter_ = 0.0;
  double log_ml_ = 0.0;
  Eigen::MatrixXd chol_;  // lower triangular
  Eigen::VectorXd alpha_;
};

/// Closed-form EI for maximization; max(mean - best, 0) when sigma is 0.
double ExpectedImprovement(double mean, double sigma, double best);
double ExpectedImprovement(const GaussianProcess& gp, std::span<const double> x,
                           double best);

/// Halton points in the unit cube with a seeded Cranley-Patterson shift.
std::vector<std::vector<double>> QuasiRandomPoints(std::size_t n,
                                                   std::size_t dims,
                                                   std::uint64_t seed);

struct SuggestOptions {
  std::size_t candidates = 2048;
  std::size_t refine_top = 5;
};

/// EI argmax for a GP fit on unit-cube coordinates of `bounds`: scores the
/// quasi-random candidates, then refines the best few by coordinate search.
/// Returns a point in the original coordinates.
std::vector<double> SuggestNext(const GaussianProcess& gp, const Bounds& bounds,
                                std::uint64_t seed, SuggestOptions options = {});

struct TraceEntry {
  std::vector<double> point;
  double value = 0.0;
  bool failed = false;
  std::vector<double> incumbent_point;  // empty until a finite value is seen
  double incumbent_value = -std::numeric_limits<double>::infinity();
};

struct TuneResult {
  std::vector<double> best_point;
  double best_value = 0.0;
  std::vector<TraceEntry> trace;
};

using Objective = std::function<double(std::span<const double>)>;

/// n_init quasi-random evaluations, then fit / suggest / evaluate until the
/// budget is spent. Non-finite objective values are recorded as failures at
/// the lowest value seen so far.
/// One JSON object per line: point, value, failed, incumbent (null while
/// no evaluation has succeeded). Numbers are printed with six decimals.
void WriteTrace(std::ostream& out, std::span<const TraceEntry> trace);

TuneResult Tune(const Objective& objective, const Bounds& bounds, int budget,
                int n_init, std::uint64_t seed);

}  // namespace headgen
