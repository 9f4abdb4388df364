#pragma once

// Stochastic estimators of the log-partition gradient (the model moments
// E[xx'] and E[x]): Gibbs chains initialized from a mean-field fit, and
// self-normalized importance sampling. Estimates are clipped entrywise to
// [-1,+1], which caps the error norm at 2 sqrt(d) for d = n^2 + n.
//
// A measurement harness estimates the bias/variance constants (B, V) of an
// estimator empirically against the enumeration oracle: mean and variance
// of ||estimate - exact||_2 over repetitions, fitted against 1/S.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ising/common.hpp"
#include "ising/exact.hpp"
#include "ising/model.hpp"

namespace ising {

// --- mean field -------------------------------------------------------------

struct MeanFieldOptions {
  double tol = 1e-8;
  long max_iter = 10000;
  double damping = 0.5;
};

struct MeanFieldResult {
  Vec mu;
  bool converged = false;
  long iters = 0;        // update steps taken
  double residual = 0.0; // max-norm fixed-point residual at exit
};

/// Damped fixed-point iteration on mu_i = tanh(b_i + 2 sum_j w_ij mu_j)
/// from mu = 0. The first update is taken undamped (it is exact when the
/// target decouples, e.g. W = 0); damping applies from the second on.
/// Non-convergence is reported through the flag, not as an error.
inline MeanFieldResult mean_field(const IsingParams& p, const MeanFieldOptions& opt = {}) {
  validate(p);
  if (opt.tol <= 0.0) throw std::invalid_argument("mean_field: tol must be positive");
  if (opt.damping <= 0.0 || opt.damping > 1.0)
    throw std::invalid_argument("mean_field: damping must be in (0, 1]");
  if (opt.max_iter < 1) throw std::invalid_argument("mean_field: max_iter must be >= 1");
  MeanFieldResult out;
  out.mu.assign(static_cast<size_t>(p.n), 0.0);
  Vec target(static_cast<size_t>(p.n));
  for (long it = 0; it <= opt.max_iter; ++it) {
    double resid = 0.0;
    for (int i = 0; i < p.n; ++i) {
      double h = p.b[i];
      for (int j = 0; j < p.n; ++j) h += 2.0 * p.w(i, j) * out.mu[j];
      target[i] = std::tanh(h);
      resid = std::max(resid, std::abs(target[i] - out.mu[i]));
    }
    out.residual = resid;
    if (resid <= opt.tol) {
      out.converged = true;
      break;
    }
    if (it == opt.max_iter) break;  // budget exhausted, flag stays false
    if (it == 0) {
      out.mu = target;
    } else {
      for (int i = 0; i < p.n; ++i)
        out.mu[i] = (1.0 - opt.damping) * out.mu[i] + opt.damping * target[i];
    }
    out.iters = it + 1;
  }
  return out;
}

// --- estimates --------------------------------------------------------------

/// Moment estimate standing in for the log-partition gradient:
/// w_part approximates E[xx'] off-diagonal (diagonal masked to zero, those
/// parameters are structurally fixed), b_part approximates E[x].
struct GradientEstimate {
  Mat w_part;
  Vec b_part;
  std::string sampler_kind;
  long s_used = 0;
};

/// Entrywise clamp to [-1,+1]. Idempotent; keeps symmetry and the zero
/// diagonal. Guarantees ||estimate||_inf <= 1.
inline GradientEstimate clip(GradientEstimate e) {
  for (size_t i = 0; i < e.w_part.size(); ++i)
    e.w_part.data()[i] = std::clamp(e.w_part.data()[i], -1.0, 1.0);
  for (double& v : e.b_part) v = std::clamp(v, -1.0, 1.0);
  return e;
}

/// l2 distance between an estimate and exact moments (second, first),
/// skipping the structurally fixed diagonal.
inline double moment_error_l2(const GradientEstimate& e, const Mat& second, const Vec& first) {
  double s = 0.0;
  const int n = e.w_part.n();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double d = e.w_part(i, j) - second(i, j);
      s += d * d;
    }
    const double d = e.b_part[i] - first[i];
    s += d * d;
  }
  return std::sqrt(s);
}

/// Turns a moment estimate into a gradient of the average negative
/// log-likelihood: (estimate of E[xx']) - sigma_hat and (E[x]) - mu_hat.
inline IsingParams estimate_to_gradient(const GradientEstimate& e, const EmpiricalMoments& emp) {
  if (e.w_part.n() != emp.n) throw std::invalid_argument("estimate_to_gradient: dimension mismatch");
  IsingParams g = IsingParams::zeros(emp.n);
  for (int i = 0; i < emp.n; ++i) {
    g.b[i] = e.b_part[i] - emp.mu_hat[i];
    for (int j = 0; j < emp.n; ++j)
      g.w(i, j) = i == j ? 0.0 : e.w_part(i, j) - emp.sigma_hat(i, j);
  }
  return g;
}

/// p(x_i = +1 | x_rest). Flipping x_i from -1 to +1 changes the energy by
/// 2 b_i + 4 sum_{j != i} w_ij x_j (each coupling enters the quadratic form
/// twice), so the conditional is the logistic of that difference.
inline double gibbs_conditional_plus(const IsingParams& p, std::span<const int8_t> x, int site) {
  double f = 0.0;
  for (int j = 0; j < p.n; ++j) f += p.w(site, j) * x[j];
  return logistic(2.0 * p.b[site] + 4.0 * f);
}

/// s independent Gibbs chains. Each chain draws its start from the
/// mean-field product distribution (x_i = +1 with probability (1+mu_i)/2),
/// then runs `sweeps` full site sweeps in ascending order, and contributes
/// one configuration to the moment averages.
inline GradientEstimate gibbs_estimate(const IsingParams& p, long s, int sweeps, uint64_t seed,
                                       const MeanFieldOptions& mf_opt = {}) {
  validate(p);
  if (s < 1) throw std::invalid_argument("gibbs_estimate: s must be >= 1");
  if (sweeps < 1) throw std::invalid_argument("gibbs_estimate: sweeps must be >= 1");
  const auto mf = mean_field(p, mf_opt);
  Vec p_plus(static_cast<size_t>(p.n));
  for (int i = 0; i < p.n; ++i) p_plus[i] = 0.5 * (1.0 + mf.mu[i]);

  GradientEstimate est;
  est.w_part = Mat(p.n);
  est.b_part.assign(static_cast<size_t>(p.n), 0.0);
  est.sampler_kind = "gibbs";
  est.s_used = s;
  std::vector<int8_t> x(static_cast<size_t>(p.n));
  for (long chain = 0; chain < s; ++chain) {
    Rng rng(derive_seed(seed, static_cast<uint64_t>(chain)));
    for (int i = 0; i < p.n; ++i) x[i] = rng.bernoulli(p_plus[i]) ? int8_t{1} : int8_t{-1};
    for (int sweep = 0; sweep < sweeps; ++sweep)
      for (int i = 0; i < p.n; ++i)
        x[i] = rng.bernoulli(gibbs_conditional_plus(p, x, i)) ? int8_t{1} : int8_t{-1};
    for (int i = 0; i < p.n; ++i) {
      est.b_part[i] += x[i];
      for (int j = i + 1; j < p.n; ++j) est.w_part(i, j) += x[i] * x[j];
    }
  }
  const double inv = 1.0 / static_cast<double>(s);
  for (int i = 0; i < p.n; ++i) {
    est.b_part[i] *= inv;
    for (int j = i + 1; j < p.n; ++j) {
      est.w_part(i, j) *= inv;
      est.w_part(j, i) = est.w_part(i, j);
    }
  }
  return clip(std::move(est));
}

// --- importance sampling ----------------------------------------------------

struct TrialSpec {
  enum class Kind {
    uniform,        // q(x) = 2^-n
    mean_field,     // product of mean-field marginals, floored away from 0/1
    enumerate_all,  // stratified: every state visited once (exact limit)
  };
  Kind kind = Kind::mean_field;
  double floor = 0.01;  // minimum per-spin marginal for mean_field trials
};

/// Normalizes log-weights in place into probabilities via max subtraction.
/// Throws when no weight is finite (every draw underflowed).
inline Vec self_normalized_weights(const Vec& log_w) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double lw : log_w)
    if (std::isfinite(lw)) mx = std::max(mx, lw);
  if (!std::isfinite(mx))
    throw DegenerateWeightsError("importance weights: no draw has a finite log-weight");
  Vec w(log_w.size());
  double total = 0.0;
  for (size_t i = 0; i < log_w.size(); ++i) {
    w[i] = std::isfinite(log_w[i]) ? std::exp(log_w[i] - mx) : 0.0;
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

/// Self-normalized importance sampling with unnormalized target weights
/// alpha = exp(energy)/q(x). The enumerate_all trial visits every state
/// once (uniform q cancels in the normalization), which reproduces the
/// exact moments and uses s_used = 2^n.
inline GradientEstimate importance_estimate(const IsingParams& p, const TrialSpec& trial, long s,
                                            uint64_t seed, int cap = kDefaultEnumCap) {
  validate(p);
  GradientEstimate est;
  est.w_part = Mat(p.n);
  est.b_part.assign(static_cast<size_t>(p.n), 0.0);
  est.sampler_kind = "importance";

  if (trial.kind == TrialSpec::Kind::enumerate_all) {
    check_capacity(p.n, cap, "importance_estimate(enumerate_all)");
    est.s_used = 1L << p.n;
    double mx = -std::numeric_limits<double>::infinity();
    detail::enumerate_states(p, [&](uint64_t, double e) { mx = std::max(mx, e); });
    double total = 0.0;
    std::vector<int8_t> x(static_cast<size_t>(p.n));
    detail::enumerate_states(p, [&](uint64_t mask, double e) {
      const double w = std::exp(e - mx);
      total += w;
      detail::mask_to_spins(mask, p.n, x);
      for (int i = 0; i < p.n; ++i) {
        est.b_part[i] += w * x[i];
        for (int j = i + 1; j < p.n; ++j) est.w_part(i, j) += w * x[i] * x[j];
      }
    });
    for (int i = 0; i < p.n; ++i) {
      est.b_part[i] /= total;
      for (int j = i + 1; j < p.n; ++j) {
        est.w_part(i, j) /= total;
        est.w_part(j, i) = est.w_part(i, j);
      }
    }
    return clip(std::move(est));
  }

  if (s < 1) throw std::invalid_argument("importance_estimate: s must be >= 1");
  Vec p_plus(static_cast<size_t>(p.n), 0.5);
  if (trial.kind == TrialSpec::Kind::mean_field) {
    if (trial.floor <= 0.0 || trial.floor >= 0.5)
      throw std::invalid_argument("importance_estimate: trial floor must be in (0, 0.5)");
    const auto mf = mean_field(p);
    for (int i = 0; i < p.n; ++i)
      p_plus[i] = std::clamp(0.5 * (1.0 + mf.mu[i]), trial.floor, 1.0 - trial.floor);
  }

  est.s_used = s;
  std::vector<int8_t> draws(static_cast<size_t>(s) * p.n);
  Vec log_w(static_cast<size_t>(s));
  Rng rng(seed);
  for (long d = 0; d < s; ++d) {
    int8_t* x = draws.data() + static_cast<size_t>(d) * p.n;
    double log_q = 0.0;
    for (int i = 0; i < p.n; ++i) {
      const bool plus = rng.bernoulli(p_plus[i]);
      x[i] = plus ? int8_t{1} : int8_t{-1};
      log_q += std::log(plus ? p_plus[i] : 1.0 - p_plus[i]);
    }
    log_w[d] = energy(p, {x, static_cast<size_t>(p.n)}) - log_q;
  }
  const Vec w = self_normalized_weights(log_w);
  for (long d = 0; d < s; ++d) {
    const int8_t* x = draws.data() + static_cast<size_t>(d) * p.n;
    for (int i = 0; i < p.n; ++i) {
      est.b_part[i] += w[d] * x[i];
      for (int j = i + 1; j < p.n; ++j) est.w_part(i, j) += w[d] * x[i] * x[j];
    }
  }
  for (int i = 0; i < p.n; ++i)
    for (int j = i + 1; j < p.n; ++j) est.w_part(j, i) = est.w_part(i, j);
  return clip(std::move(est));
}

// --- dispatch ---------------------------------------------------------------

struct SamplerSpec {
  enum class Kind { gibbs, importance };
  Kind kind = Kind::gibbs;
  int sweeps = 5;       // gibbs chains: full site sweeps per chain
  TrialSpec trial;      // importance trial distribution
  MeanFieldOptions mean_field;
};

inline GradientEstimate estimate_moments(const SamplerSpec& spec, const IsingParams& p, long s,
                                         uint64_t seed, int cap = kDefaultEnumCap) {
  switch (spec.kind) {
    case SamplerSpec::Kind::gibbs:
      return gibbs_estimate(p, s, spec.sweeps, seed, spec.mean_field);
    case SamplerSpec::Kind::importance:
      return importance_estimate(p, spec.trial, s, seed, cap);
  }
  throw std::invalid_argument("estimate_moments: unknown sampler kind");
}

inline std::string sampler_kind_name(const SamplerSpec& spec) {
  return spec.kind == SamplerSpec::Kind::gibbs ? "gibbs" : "importance";
}

// --- bias/variance measurement ----------------------------------------------

using MomentEstimator = std::function<GradientEstimate(const IsingParams&, long s, uint64_t seed)>;

struct BiasVarianceRow {
  long s = 0;
  double mean_err = 0.0;
  double var_err = 0.0;
};

struct BiasVarianceReport {
  std::vector<BiasVarianceRow> rows;  // ascending in s
  double b_hat = 0.0;                 // least squares of mean_err against 1/s
  double v_hat = 0.0;                 // least squares of var_err against 1/s
  double decay_exponent = 0.0;        // slope of log mean_err vs log s (diagnostic)
  long dim = 0;                       // flattened parameter dimension d
  double error_ceiling = 0.0;         // 2 sqrt(d), the clipped-estimate cap
  bool dropped_smallest = false;      // smallest s excluded from the fit
  std::string sampler_kind;
};

struct BiasVarianceConfig {
  std::vector<long> s_grid;
  int reps = 200;
  uint64_t seed = 1;
  unsigned workers = 0;  // 0 = hardware concurrency
  int cap = kDefaultEnumCap;
};

/// Runs `reps` independent estimates per grid point against the exact
/// moments and fits B (mean error vs 1/S) and V (variance vs 1/S) by least
/// squares through the origin. The smallest S is dropped from the fit when
/// its mean sits within 10% of the clipping ceiling, where the higher-order
/// remainder dominates the 1/S law.
inline BiasVarianceReport measure_bias_variance(const MomentEstimator& estimator,
                                                const std::string& kind_name,
                                                const IsingParams& p,
                                                const BiasVarianceConfig& cfg) {
  validate(p);
  check_capacity(p.n, cfg.cap, "measure_bias_variance");
  if (cfg.s_grid.empty()) throw std::invalid_argument("measure_bias_variance: empty s grid");
  for (long s : cfg.s_grid)
    if (s < 1) throw std::invalid_argument("measure_bias_variance: grid entries must be >= 1");
  if (cfg.reps < 30) throw std::invalid_argument("measure_bias_variance: need reps >= 30");

  std::vector<long> grid = cfg.s_grid;
  std::sort(grid.begin(), grid.end());
  const auto [second, first] = exact_moments(p, cfg.cap);

  const long total = static_cast<long>(grid.size()) * cfg.reps;
  Vec errs(static_cast<size_t>(total));
  const unsigned workers = cfg.workers == 0 ? default_workers() : cfg.workers;
  parallel_for(total, workers, [&](long task) {
    const long gi = task / cfg.reps;
    const long rep = task % cfg.reps;
    const auto est = estimator(p, grid[static_cast<size_t>(gi)],
                               derive_seed(cfg.seed, static_cast<uint64_t>(gi),
                                           static_cast<uint64_t>(rep)));
    errs[static_cast<size_t>(task)] = moment_error_l2(est, second, first);
  });

  BiasVarianceReport rep;
  rep.sampler_kind = kind_name;
  rep.dim = static_cast<long>(p.n) * p.n + p.n;
  rep.error_ceiling = 2.0 * std::sqrt(static_cast<double>(rep.dim));
  for (size_t gi = 0; gi < grid.size(); ++gi) {
    const double* block = errs.data() + gi * static_cast<size_t>(cfg.reps);
    double mean = 0.0;
    for (int i = 0; i < cfg.reps; ++i) mean += block[i];
    mean /= cfg.reps;
    double var = 0.0;
    for (int i = 0; i < cfg.reps; ++i) var += (block[i] - mean) * (block[i] - mean);
    var /= (cfg.reps - 1);
    rep.rows.push_back({grid[gi], mean, var});
  }

  rep.dropped_smallest = rep.rows.size() > 1 && rep.rows.front().mean_err > 0.9 * rep.error_ceiling;
  double num_b = 0.0, num_v = 0.0, den = 0.0;
  for (size_t gi = rep.dropped_smallest ? 1 : 0; gi < rep.rows.size(); ++gi) {
    const double inv_s = 1.0 / static_cast<double>(rep.rows[gi].s);
    num_b += rep.rows[gi].mean_err * inv_s;
    num_v += rep.rows[gi].var_err * inv_s;
    den += inv_s * inv_s;
  }
  rep.b_hat = den > 0.0 ? num_b / den : 0.0;
  rep.v_hat = den > 0.0 ? num_v / den : 0.0;

  // log-log slope of the mean column, defined only when all means are positive
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  bool slope_ok = rep.rows.size() > 1;
  for (const auto& row : rep.rows) slope_ok = slope_ok && row.mean_err > 0.0;
  if (slope_ok) {
    for (const auto& row : rep.rows) {
      const double lx = std::log(static_cast<double>(row.s));
      const double ly = std::log(row.mean_err);
      sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    }
    const double m = static_cast<double>(rep.rows.size());
    rep.decay_exponent = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }
  return rep;
}

inline BiasVarianceReport measure_bias_variance(const SamplerSpec& spec, const IsingParams& p,
                                                const BiasVarianceConfig& cfg) {
  const int cap = cfg.cap;
  return measure_bias_variance(
      [spec, cap](const IsingParams& params, long s, uint64_t seed) {
        return estimate_moments(spec, params, s, seed, cap);
      },
      sampler_kind_name(spec), p, cfg);
}

inline void save_bias_variance_csv(const BiasVarianceReport& rep, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "s,mean_err,var_err\n";
  f.precision(17);
  for (const auto& row : rep.rows)
    f << row.s << "," << row.mean_err << "," << row.var_err << "\n";
}

inline nlohmann::json bias_variance_to_json(const BiasVarianceReport& rep) {
  nlohmann::json j;
  j["sampler_kind"] = rep.sampler_kind;
  j["b_hat"] = rep.b_hat;
  j["v_hat"] = rep.v_hat;
  j["decay_exponent"] = rep.decay_exponent;
  j["dim"] = rep.dim;
  j["error_ceiling"] = rep.error_ceiling;
  j["dropped_smallest"] = rep.dropped_smallest;
  auto rows = nlohmann::json::array();
  for (const auto& row : rep.rows)
    rows.push_back({{"s", row.s}, {"mean_err", row.mean_err}, {"var_err", row.var_err}});
  j["rows"] = std::move(rows);
  return j;
}

inline void save_bias_variance_json(const BiasVarianceReport& rep, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << bias_variance_to_json(rep).dump(2) << "\n";
}

}  // namespace ising
