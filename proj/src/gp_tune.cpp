// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#include "headgen/gp_tune.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <cstdio>

#include "headgen/common.hpp"

namespace headgen {

Bounds Bounds::DecodingDefaults() { return {{0.0, 0.0, 0.5}, {2.0, 3.0, 1.0}}; }

void Bounds::Validate() const {
  if (lower.empty() || lower.size() != upper.size()) {
    Fail(ErrorKind::kInvalidArgument, "bounds need matching, non-empty limits");
  }
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!(lower[i] < upper[i])) {
      Fail(ErrorKind::kInvalidArgument, "each lower bound must be below its upper bound");
    }
  }
}

bool Bounds::Contains(std::span<const double> x) const {
  if (x.size() != dims()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lower[i] && x[i] <= upper[i])) return false;
  }
  return true;
}

std::vector<double> Bounds::ToUnit(std::span<const double> x) const {
  std::vector<double> u(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    u[i] = (x[i] - lower[i]) / (upper[i] - lower[i]);
  }
  return u;
}

std::vector<double> Bounds::FromUnit(std::span<const double> u) const {
  std::vector<double> x(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    x[i] = std::clamp(lower[i] + u[i] * (upper[i] - lower[i]), lower[i], upper[i]);
  }
  return x;
}

double RbfKernel(const KernelParams& k, std::span<const double> a,
                 std::span<const double> b) {
  double r2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double z = (a[i] - b[i]) / k.length_scales[i];
    r2 += z * z;
  }
  return k.signal_variance * std::exp(-0.5 * r2);
}

GaussianProcess GaussianProcess::Fit(std::vector<std::vector<double>> points,
                                     std::vector<double> values,
                                     KernelParams kernel) {
  if (points.empty() || points.size() != values.size()) {
    Fail(ErrorKind::kInvalidArgument, "GP needs at least one observation per value");
  }
  if (!(kernel.noise_variance > 0.0) || !(kernel.signal_variance > 0.0)) {
    Fail(ErrorKind::kInvalidArgument, "kernel variances must be positive");
  }
  const std::size_t dims = points.front().size();
  if (kernel.length_scales.size() == 1 && dims > 1) {
    kernel.length_scales.assign(dims, kernel.length_scales.front());
  }
  if (kernel.length_scales.size() != dims) {
    Fail(ErrorKind::kInvalidArgument, "one length scale per dimension required");
  }
  for (const auto& p : points) {
    if (p.size() != dims) Fail(ErrorKind::kInvalidArgument, "ragged GP inputs");
  }

  GaussianProcess gp;
  gp.kernel_ = std::move(kernel);
  gp.prior_mean_ =
      std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  const Eigen::Index n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      K(i, j) = K(j, i) = RbfKernel(gp.kernel_, points[i], points[j]);
    }
  }
  K.diagonal().array() += gp.kernel_.noise_variance;

  double jitter = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt;
  for (int attempt = 0;; ++attempt) {
    llt.compute(K);
    if (llt.info() == Eigen::Success && (llt.matrixL().toDenseMatrix().diagonal().array() > 0).all()) {
      break;
    }
    if (attempt >= 8) {
      Fail(ErrorKind::kNumeric, "GP kernel matrix is ill-conditioned even with jitter");
    }
    const double add = (jitter == 0.0 ? 1e-10 : jitter * 9.0) * gp.kernel_.signal_variance;
    jitter = jitter == 0.0 ? 1e-10 : jitter * 10.0;
    K.diagonal().array() += add;
  }
  gp.jitter_ = jitter;
  gp.chol_ = llt.matrixL();
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = values[i] - gp.prior_mean_;
  gp.alpha_ = llt.solve(y);
  gp.log_ml_ = -0.5 * y.dot(gp.alpha_) - gp.chol_.diagonal().array().log().sum() -
               0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  gp.points_ = std::move(points);
  gp.values_ = std::move(values);
  return gp;
}

GaussianProcess GaussianProcess::FitWithRefit(std::vector<std::vector<double>> points,
                                              std::vector<double> values,
                                              const KernelParams& initial,
                                              std::uint64_t seed) {
  if (points.empty()) Fail(ErrorKind::kInvalidArgument, "GP needs observations");
  const std::size_t dims = points.front().size();
  KernelParams init = initial;
  if (init.length_scales.size() != dims) {
    init.length_scales.assign(dims, init.length_scales.empty() ? 0.3 : init.length_scales[0]);
  }
  // theta = [log signal, log length scales..., log noise]
  const std::size_t np = dims + 2;
  std::vector<double> lo(np), hi(np);
  lo[0] = std::log(0.05);
  hi[0] = std::log(20.0);
  for (std::size_t i = 0; i < dims; ++i) {
    lo[1 + i] = std::log(0.02);
    hi[1 + i] = std::log(5.0);
  }
  lo[np - 1] = std::log(1e-8);
  hi[np - 1] = std::log(1e-1);

  const auto to_kernel = [&](const std::vector<double>& th) {
    KernelParams k;
    k.signal_variance = std::exp(th[0]);
    k.length_scales.resize(dims);
    for (std::size_t i = 0; i < dims; ++i) k.length_scales[i] = std::exp(th[1 + i]);
    k.noise_variance = std::exp(th[np - 1]);
    return k;
  };
  const auto objective = [&](const std::vector<double>& th) {
    try {
      return Fit(points, values, to_kernel(th)).LogMarginalLikelihood();
    } catch (const Error&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  std::vector<std::vector<double>> starts;
  {
    std::vector<double> th(np);
    th[0] = std::log(init.signal_variance);
    for (std::size_t i = 0; i < dims; ++i) th[1 + i] = std::log(init.length_scales[i]);
    th[np - 1] = std::log(init.noise_variance);
    for (std::size_t i = 0; i < np; ++i) th[i] = std::clamp(th[i], lo[i], hi[i]);
    starts.push_back(th);
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int s = 0; s < 4; ++s) {
    std::vector<double> th(np);
    for (std::size_t i = 0; i < np; ++i) th[i] = lo[i] + unif(rng) * (hi[i] - lo[i]);
    starts.push_back(th);
  }

  std::vector<double> best_th = starts.front();
  double best = objective(best_th);
  for (const auto& start : starts) {
    std::vector<double> th = start;
    double f = objective(th);
    double step = 1.0;
    for (int iter = 0; iter < 200 && step > 1e-3; ++iter) {
      bool improved = false;
      for (std::size_t i = 0; i < np; ++i) {
        for (double dir : {+1.0, -1.0}) {
          std::vector<double> trial = th;
          trial[i] = std::clamp(th[i] + dir * step, lo[i], hi[i]);
          if (trial[i] == th[i]) continue;
          const double ft = objective(trial);
          if (ft > f) {
            th = std::move(trial);
            f = ft;
            improved = true;
            break;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    if (f > best) {
      best = f;
      best_th = th;
    }
  }
  return Fit(std::move(points), std::move(values), to_kernel(best_th));
}

GpPrediction GaussianProcess::Predict(std::span<const double> x) const {
  const Eigen::Index n = static_cast<Eigen::Index>(points_.size());
  Eigen::VectorXd kstar(n);
  for (Eigen::Index i = 0; i < n; ++i) kstar(i) = RbfKernel(kernel_, x, points_[i]);
  GpPrediction p;
  p.mean = prior_mean_ + kstar.dot(alpha_);
  const Eigen::VectorXd v =
      chol_.triangularView<Eigen::Lower>().solve(kstar);
  p.variance = std::max(0.0, kernel_.signal_variance - v.squaredNorm());
  return p;
}

double GaussianProcess::best_value() const {
  return *std::max_element(values_.begin(), values_.end());
}

double ExpectedImprovement(double mean, double sigma, double best) {
  const double diff = mean - best;
  if (!(sigma > 1e-12)) return std::max(diff, 0.0);
  const double z = diff / sigma;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(0.0, diff * cdf + sigma * pdf);
}

double ExpectedImprovement(const GaussianProcess& gp, std::span<const double> x,
                           double best) {
  const GpPrediction p = gp.Predict(x);
  return ExpectedImprovement(p.mean, std::sqrt(p.variance), best);
}

std::vector<std::vector<double>> QuasiRandomPoints(std::size_t n, std::size_t dims,
                                                   std::uint64_t seed) {
  static constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  if (dims > std::size(kPrimes)) {
    Fail(ErrorKind::kInvalidArgument, "too many dimensions for the Halton sequence");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> shift(dims);
  for (double& s : shift) s = unif(rng);
  std::vector<std::vector<double>> pts(n, std::vector<double>(dims));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < dims; ++d) {
      const int base = kPrimes[d];
      double f = 1.0, r = 0.0;
      for (std::size_t k = i + 1; k > 0; k /= static_cast<std::size_t>(base)) {
        f /= base;
        r += f * static_cast<double>(k % static_cast<std::size_t>(base));
      }
      r += shift[d];
      pts[i][d] = r - std::floor(r);
    }
  }
  return pts;
}

std::vector<double> SuggestNext(const GaussianProcess& gp, const Bounds& bounds,
                                std::uint64_t seed, SuggestOptions options) {
  bounds.Validate();
  const std::size_t dims = bounds.dims();
  const double best = gp.best_value();
  auto cands = QuasiRandomPoints(std::max<std::size_t>(options.candidates, 1), dims, seed);
  std::vector<double> ei(cands.size());
  for (std::size_t i = 0; i < cands.size(); ++i) ei[i] = ExpectedImprovement(gp, cands[i], best);

  std::vector<std::size_t> order(cands.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return ei[a] > ei[b]; });

  std::vector<double> best_u = cands[order.front()];
  double best_ei = ei[order.front()];
  const std::size_t refine = std::min(options.refine_top, order.size());
  for (std::size_t r = 0; r < refine; ++r) {
    std::vector<double> u = cands[order[r]];
    double f = ei[order[r]];
    for (double step = 0.05; step > 1e-4; step *= 0.5) {
      bool improved = true;
      while (improved) {
        improved = false;
        for (std::size_t d = 0; d < dims; ++d) {
          for (double dir : {+1.0, -1.0}) {
            std::vector<double> t = u;
            t[d] = std::clamp(u[d] + dir * step, 0.0, 1.0);
            if (t[d] == u[d]) continue;
            const double ft = ExpectedImprovement(gp, t, best);
            if (ft > f) {
              u = std::move(t);
              f = ft;
              improved = true;
            }
          }
        }
      }
    }
    if (f > best_ei) {
      best_ei = f;
      best_u = u;
    }
  }
  return bounds.FromUnit(best_u);
}

void WriteTrace(std::ostream& out, std::span<const TraceEntry> trace) {
  char buf[64];
  const auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  for (const TraceEntry& t : trace) {
    out << "{\"point\":[";
    for (std::size_t i = 0; i < t.point.size(); ++i) out << (i ? "," : "") << num(t.point[i]);
    out << "],\"value\":" << num(t.value) << ",\"failed\":" << (t.failed ? "true" : "false")
        << ",\"incumbent\":"
        << (std::isfinite(t.incumbent_value) ? num(t.incumbent_value) : std::string("null"))
        << "}\n";
  }
}

TuneResult Tune(const Objective& objective, const Bounds& bounds, int budget,
                int n_init, std::uint64_t seed) {
  bounds.Validate();
  if (n_init < 2 || budget < n_init) {
    Fail(ErrorKind::kInvalidArgument, "need budget >= n_init >= 2");
  }
  const std::size_t dims = bounds.dims();
  TuneResult result;
  std::vector<std::vector<double>> unit_points;
  std::vector<double> values;
  bool have_incumbent = false;
  std::mt19937_64 rng(seed);

  const auto record = [&](std::vector<double> x) {
    double y = objective(x);
    TraceEntry e;
    e.failed = !std::isfinite(y);
    if (e.failed) {
      y = values.empty() ? 0.0 : *std::min_element(values.begin(), values.end());
    }
    e.point = x;
    e.value = y;
    if (!e.failed && (!have_incumbent || y > result.best_value)) {
      result.best_value = y;
      result.best_point = x;
      have_incumbent = true;
    }
    if (have_incumbent) {
      e.incumbent_point = result.best_point;
      e.incumbent_value = result.best_value;
    }
    result.trace.push_back(std::move(e));
    unit_points.push_back(bounds.ToUnit(x));
    values.push_back(y);
  };

  for (const auto& u : QuasiRandomPoints(static_cast<std::size_t>(n_init), dims, rng())) {
    record(bounds.FromUnit(u));
  }

  KernelParams kernel;
  kernel.length_scales.assign(dims, 0.3);
  for (int it = n_init; it < budget; ++it) {
    const double mean =
        std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    double sd = std::sqrt(var / static_cast<double>(values.size()));
    if (!(sd > 1e-12)) sd = 1.0;
    std::vector<double> scaled(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) scaled[i] = (values[i] - mean) / sd;

    const GaussianProcess gp = GaussianProcess::FitWithRefit(unit_points, scaled, kernel, rng());
    kernel = gp.kernel();
    std::vector<double> x = SuggestNext(gp, bounds, rng());
    const std::vector<double> u = bounds.ToUnit(x);
    const bool duplicate = std::any_of(unit_points.begin(), unit_points.end(), [&](const auto& p) {
      double d2 = 0.0;
      for (std::size_t i = 0; i < dims; ++i) d2 += (p[i] - u[i]) * (p[i] - u[i]);
      return d2 < 1e-16;
    });
    if (duplicate) {
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      std::vector<double> r(dims);
      for (double& v : r) v = unif(rng);
      x = bounds.FromUnit(r);
    }
    record(std::move(x));
  }
  if (!have_incumbent) {
    Fail(ErrorKind::kNumeric, "objective never returned a finite value");
  }
  return result;
}

}  // namespace headgen
