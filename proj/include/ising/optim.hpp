#pragma once

// Optimization engines for the l1-regularized likelihood:
//   - forward-backward splitting with decaying steps eta_k = beta/(G k^r),
//     prox threshold eta_{k+1} * rho, started at theta = 0, reporting the
//     step-weighted average, the plain average, a uniformly random visited
//     iterate, and the last iterate;
//   - basic and accelerated proximal gradient (constant step, r = 0), the
//     accelerated variant with the usual t_k momentum recursion;
// plus the l1 proximal step, sample-count schedules, deterministic error
// injection with exact norms, gradient-oracle adapters, a high-accuracy
// reference solver, and trace persistence.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ising/common.hpp"
#include "ising/exact.hpp"
#include "ising/model.hpp"
#include "ising/sampler.hpp"

namespace ising {

inline double step_size(long k, double beta, double g, double r) {
  if (k < 1) throw std::invalid_argument("step_size: k must be >= 1");
  if (beta <= 0.0 || g <= 0.0) throw std::invalid_argument("step_size: beta and g must be positive");
  if (r < 0.0) throw std::invalid_argument("step_size: r must be >= 0");
  return beta / (g * std::pow(static_cast<double>(k), r));
}

/// Soft-thresholds the interaction block in place: w <- sign(w) max(|w|-tau, 0).
/// Biases carry no penalty and pass through. |w| = tau lands exactly on 0.
inline void prox_l1(IsingParams& p, double tau) {
  if (tau < 0.0) throw std::invalid_argument("prox_l1: tau must be >= 0");
  for (size_t i = 0; i < p.w.size(); ++i) {
    const double v = p.w.data()[i];
    const double m = std::abs(v) - tau;
    p.w.data()[i] = m > 0.0 ? (v > 0.0 ? m : -m) : 0.0;
  }
}

// --- schedules and injected errors -------------------------------------------

struct SampleSchedule {
  enum class Kind { constant, logarithmic, polynomial };
  Kind kind = Kind::constant;
  double c = 1.0;
  double p = 1.0;  // polynomial exponent
};

/// Samples to draw at iteration k: constant c, ceil(c log(k+1)), or
/// ceil(c k^p); never below 1. The tiny slack inside ceil absorbs cases
/// like 16^0.75 evaluating to 8 + 2 ulp.
inline long schedule_eval(const SampleSchedule& s, long k) {
  if (k < 1) throw std::invalid_argument("schedule_eval: k must be >= 1");
  if (s.c <= 0.0) throw std::invalid_argument("schedule_eval: c must be positive");
  double v = 0.0;
  switch (s.kind) {
    case SampleSchedule::Kind::constant: v = s.c; break;
    case SampleSchedule::Kind::logarithmic: v = s.c * std::log(static_cast<double>(k) + 1.0); break;
    case SampleSchedule::Kind::polynomial:
      if (s.p < 0.0) throw std::invalid_argument("schedule_eval: p must be >= 0");
      v = s.c * std::pow(static_cast<double>(k), s.p);
      break;
  }
  const long out = static_cast<long>(std::ceil(v - 1e-9));
  return std::max(1L, out);
}

/// "const:10", "log:10", "poly:1:0.51"
inline SampleSchedule parse_schedule(const std::string& text) {
  std::stringstream ss(text);
  std::string kind, tok;
  if (!std::getline(ss, kind, ':'))
    throw std::invalid_argument("schedule: empty spec");
  SampleSchedule s;
  auto next_number = [&](const char* what) {
    if (!std::getline(ss, tok, ':'))
      throw std::invalid_argument(std::string("schedule '") + text + "': missing " + what);
    return std::stod(tok);
  };
  if (kind == "const") {
    s.kind = SampleSchedule::Kind::constant;
    s.c = next_number("constant value");
  } else if (kind == "log") {
    s.kind = SampleSchedule::Kind::logarithmic;
    s.c = next_number("scale");
  } else if (kind == "poly") {
    s.kind = SampleSchedule::Kind::polynomial;
    s.c = next_number("scale");
    s.p = next_number("exponent");
  } else {
    throw std::invalid_argument("schedule '" + text + "': unknown kind (const|log|poly)");
  }
  if (std::getline(ss, tok, ':'))
    throw std::invalid_argument("schedule '" + text + "': trailing tokens");
  if (s.c <= 0.0) throw std::invalid_argument("schedule '" + text + "': scale must be positive");
  if (s.p < 0.0) throw std::invalid_argument("schedule '" + text + "': exponent must be >= 0");
  return s;
}

inline std::string format_schedule(const SampleSchedule& s) {
  std::ostringstream os;
  switch (s.kind) {
    case SampleSchedule::Kind::constant: os << "const:" << s.c; break;
    case SampleSchedule::Kind::logarithmic: os << "log:" << s.c; break;
    case SampleSchedule::Kind::polynomial: os << "poly:" << s.c << ":" << s.p; break;
  }
  return os.str();
}

/// Deterministic gradient perturbations: a seeded random direction in
/// parameter space (interaction block symmetrized, diagonal masked) scaled
/// so the flattened l2 norm is exactly c/k^a.
struct ErrorInjector {
  double c = 0.0;
  double a = 0.0;
  uint64_t seed = 0;
};

inline IsingParams inject_error(const ErrorInjector& inj, long k, int n) {
  if (k < 1) throw std::invalid_argument("inject_error: k must be >= 1");
  if (inj.c < 0.0 || inj.a < 0.0)
    throw std::invalid_argument("inject_error: c and a must be >= 0");
  IsingParams xi = IsingParams::zeros(n);
  if (inj.c == 0.0) return xi;
  Rng rng(derive_seed(inj.seed, static_cast<uint64_t>(k)));
  double norm = 0.0;
  while (norm == 0.0) {
    for (int i = 0; i < n; ++i) {
      xi.b[i] = rng.normal();
      for (int j = i + 1; j < n; ++j) {
        const double g = rng.normal();
        xi.w(i, j) = g;
        xi.w(j, i) = g;
      }
    }
    norm = theta_l2(xi);
  }
  theta_scale(xi, inj.c / (std::pow(static_cast<double>(k), inj.a) * norm));
  return xi;
}

// --- run engine ---------------------------------------------------------------

enum class Method { fbs, pg_basic, pg_accel };
enum class Averaging { robust, basic, random, last };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::fbs: return "fbs";
    case Method::pg_basic: return "pg-basic";
    case Method::pg_accel: return "pg-accel";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  if (s == "fbs") return Method::fbs;
  if (s == "pg-basic") return Method::pg_basic;
  if (s == "pg-accel") return Method::pg_accel;
  throw std::invalid_argument("unknown method '" + s + "' (fbs|pg-basic|pg-accel)");
}

enum class TraceMode { lean, full };

struct OptimizerConfig {
  Method method = Method::fbs;
  int n = 0;
  long k_max = 1000;
  double rho = 1.0 / 16.0;
  double beta = 1.0;
  double g_bound = 1.0;  // gradient-norm bound G entering the step size
  double r = 0.5;        // step decay exponent; pg methods run constant-step
  Averaging averaging = Averaging::robust;
  uint64_t seed = 1;
  TraceMode trace = TraceMode::lean;
  long snapshot_stride = 0;   // full mode; 0 = ceil(k_max/100)
  bool backtracking = false;  // pg methods only
};

struct GradientSample {
  IsingParams grad;
  double xi_norm = std::numeric_limits<double>::quiet_NaN();
  long s_used = 0;
};

using GradientOracle = std::function<GradientSample(const IsingParams&, long k)>;
using ObjectiveFn = std::function<double(const IsingParams&)>;
using ProgressFn = std::function<void(long k, double objective)>;

/// Optional per-iteration distance check against a reference solution.
struct BoundCheck {
  IsingParams reference;
  double radius = 0.0;
};

struct RunTrace {
  std::vector<double> objective;  // at the visited iterate, k = 1..k_completed
  Vec eta;
  Vec xi_norm;                    // NaN when the oracle does not report one
  std::vector<long> s_k;
  IsingParams theta_robust;  // sum eta_k theta_k / sum eta_k
  IsingParams theta_basic;   // (1/K) sum theta_k
  IsingParams theta_random;  // visited iterate at random_index
  IsingParams theta_last;    // iterate after the final update
  long random_index = 0;     // 1-based; drawn before the run from the seed
  long k_completed = 0;
  bool aborted = false;      // non-finite objective or gradient encountered
  long bound_violations = 0;
  double pg_error_aggregate = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::pair<long, IsingParams>> snapshots;  // full mode only
};

inline const IsingParams& select_output(const RunTrace& t, Averaging mode) {
  switch (mode) {
    case Averaging::robust: return t.theta_robust;
    case Averaging::basic: return t.theta_basic;
    case Averaging::random: return t.theta_random;
    case Averaging::last: return t.theta_last;
  }
  return t.theta_last;
}

namespace detail {

inline void validate_config(const OptimizerConfig& cfg) {
  if (cfg.n < 1) throw std::invalid_argument("optimizer: n must be >= 1");
  if (cfg.k_max < 1) throw std::invalid_argument("optimizer: k_max must be >= 1");
  if (cfg.rho <= 0.0) throw std::invalid_argument("optimizer: rho must be positive");
  if (cfg.beta <= 0.0 || cfg.g_bound <= 0.0)
    throw std::invalid_argument("optimizer: beta and g_bound must be positive");
  if (cfg.method == Method::fbs) {
    if (cfg.r <= 0.0 || cfg.r >= 1.0)
      throw std::invalid_argument("optimizer: fbs needs 0 < r < 1");
    if (cfg.backtracking)
      throw std::invalid_argument("optimizer: backtracking applies to pg methods only");
  }
  if (cfg.snapshot_stride < 0) throw std::invalid_argument("optimizer: bad snapshot stride");
}

// Smooth part of the objective, recovered from the full objective so the
// backtracking test needs no second callback.
inline double smooth_value(const ObjectiveFn& objective_fn, const IsingParams& p, double rho) {
  return objective_fn(p) - rho * entry_l1(p.w);
}

struct AverageTracker {
  IsingParams weighted_acc;
  IsingParams plain_acc;
  double weight_sum = 0.0;
  long count = 0;

  explicit AverageTracker(int n)
      : weighted_acc(IsingParams::zeros(n)), plain_acc(IsingParams::zeros(n)) {}

  void add(const IsingParams& theta, double eta) {
    theta_axpy(weighted_acc, eta, theta);
    weight_sum += eta;
    theta_axpy(plain_acc, 1.0, theta);
    ++count;
  }

  IsingParams weighted() const {
    IsingParams out = weighted_acc;
    if (weight_sum > 0.0) theta_scale(out, 1.0 / weight_sum);
    return out;
  }

  IsingParams plain() const {
    IsingParams out = plain_acc;
    if (count > 0) theta_scale(out, 1.0 / static_cast<double>(count));
    return out;
  }
};

}  // namespace detail

/// Shared engine. fbs and pg_basic run the same forward-backward loop
/// (pg_basic with a constant step); pg_accel adds momentum and queries the
/// gradient at the extrapolated point. Iterate k = 1 is always theta = 0.
/// Row k of the trace describes the visited iterate theta^(k) before its
/// update. Aborts (trace prefix kept) when an objective or gradient stops
/// being finite.
inline RunTrace run_optimizer(const OptimizerConfig& cfg, const GradientOracle& oracle,
                              const ObjectiveFn& objective_fn, const ProgressFn& progress = {},
                              const BoundCheck* bound = nullptr) {
  detail::validate_config(cfg);
  const long k_max = cfg.k_max;
  const double exp_r = cfg.method == Method::fbs ? cfg.r : 0.0;
  const long stride = cfg.trace == TraceMode::full
                          ? (cfg.snapshot_stride > 0 ? cfg.snapshot_stride : (k_max + 99) / 100)
                          : 0;

  RunTrace trace;
  trace.objective.reserve(static_cast<size_t>(k_max));
  trace.eta.reserve(static_cast<size_t>(k_max));
  trace.xi_norm.reserve(static_cast<size_t>(k_max));
  trace.s_k.reserve(static_cast<size_t>(k_max));

  Rng rng(cfg.seed);
  trace.random_index = 1 + rng.uniform_int(k_max);

  detail::AverageTracker avg(cfg.n);
  IsingParams theta = IsingParams::zeros(cfg.n);  // visited iterate
  IsingParams probe = IsingParams::zeros(cfg.n);  // pg_accel: extrapolated y
  double t_momentum = 1.0;
  double eta_state = cfg.beta / cfg.g_bound;  // backtracking shrinks this across iterations

  for (long k = 1; k <= k_max; ++k) {
    const double obj = objective_fn(theta);
    if (!std::isfinite(obj)) {
      trace.aborted = true;
      break;
    }
    const IsingParams& query = cfg.method == Method::pg_accel ? probe : theta;
    GradientSample gs = oracle(query, k);
    if (!theta_finite(gs.grad)) {
      trace.aborted = true;
      break;
    }

    double eta = cfg.method == Method::fbs ? step_size(k, cfg.beta, cfg.g_bound, exp_r)
                                           : eta_state;
    IsingParams next = query;
    if (cfg.backtracking) {
      const double smooth_base = detail::smooth_value(objective_fn, query, cfg.rho);
      for (int halving = 0; halving < 60; ++halving) {
        next = query;
        theta_axpy(next, -eta, gs.grad);
        prox_l1(next, eta * cfg.rho);
        double lin = 0.0, dist2 = 0.0;
        for (size_t i = 0; i < next.w.size(); ++i) {
          const double d = next.w.data()[i] - query.w.data()[i];
          lin += gs.grad.w.data()[i] * d;
          dist2 += d * d;
        }
        for (int i = 0; i < cfg.n; ++i) {
          const double d = next.b[i] - query.b[i];
          lin += gs.grad.b[i] * d;
          dist2 += d * d;
        }
        const double upper = smooth_base + lin + dist2 / (2.0 * eta);
        if (detail::smooth_value(objective_fn, next, cfg.rho) <= upper + 1e-12) break;
        eta *= 0.5;
      }
      eta_state = eta;
    } else {
      next = query;
      theta_axpy(next, -eta, gs.grad);
      const double tau = cfg.method == Method::fbs
                             ? step_size(k + 1, cfg.beta, cfg.g_bound, exp_r) * cfg.rho
                             : eta * cfg.rho;
      prox_l1(next, tau);
    }

    trace.objective.push_back(obj);
    trace.eta.push_back(eta);
    trace.xi_norm.push_back(gs.xi_norm);
    trace.s_k.push_back(gs.s_used);
    avg.add(theta, eta);
    if (k == trace.random_index) trace.theta_random = theta;
    if (bound && theta_dist_l2(theta, bound->reference) > bound->radius + 1e-9)
      ++trace.bound_violations;
    if (stride > 0 && (k % stride == 0 || k == k_max)) trace.snapshots.emplace_back(k, theta);
    trace.k_completed = k;
    if (progress) progress(k, obj);

    if (cfg.method == Method::pg_accel) {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
      const double mix = (t_momentum - 1.0) / t_next;
      probe = next;
      theta_axpy(probe, mix, next);
      theta_axpy(probe, -mix, theta);  // theta still holds x^(k-1)
      t_momentum = t_next;
    }
    theta = next;
  }

  trace.theta_last = theta;
  trace.theta_robust = avg.weighted();
  trace.theta_basic = avg.plain();
  if (trace.random_index > trace.k_completed) {
    // aborted before reaching the drawn index; fall back to the last visited
    trace.theta_random = trace.k_completed > 0 ? trace.theta_last : IsingParams::zeros(cfg.n);
    trace.random_index = std::max(trace.k_completed, 1L);
  }

  if (cfg.method != Method::fbs && !trace.aborted) {
    bool all_finite = !trace.xi_norm.empty();
    for (double x : trace.xi_norm) all_finite = all_finite && std::isfinite(x);
    if (all_finite) {
      const long k_done = trace.k_completed;
      if (cfg.method == Method::pg_basic) {
        double s = 0.0;
        for (double x : trace.xi_norm) s += x;
        trace.pg_error_aggregate = s * s / static_cast<double>(k_done);
      } else {
        double s = 0.0;
        for (long k = 1; k <= k_done; ++k) s += static_cast<double>(k) * trace.xi_norm[k - 1];
        const double denom = static_cast<double>(k_done + 1);
        trace.pg_error_aggregate = 4.0 * s * s / (denom * denom);
      }
    }
  }
  return trace;
}

inline RunTrace fbs_run(OptimizerConfig cfg, const GradientOracle& oracle,
                        const ObjectiveFn& objective_fn, const ProgressFn& progress = {},
                        const BoundCheck* bound = nullptr) {
  cfg.method = Method::fbs;
  return run_optimizer(cfg, oracle, objective_fn, progress, bound);
}

inline RunTrace pg_basic_run(OptimizerConfig cfg, const GradientOracle& oracle,
                             const ObjectiveFn& objective_fn, const ProgressFn& progress = {},
                             const BoundCheck* bound = nullptr) {
  cfg.method = Method::pg_basic;
  return run_optimizer(cfg, oracle, objective_fn, progress, bound);
}

inline RunTrace pg_accel_run(OptimizerConfig cfg, const GradientOracle& oracle,
                             const ObjectiveFn& objective_fn, const ProgressFn& progress = {},
                             const BoundCheck* bound = nullptr) {
  cfg.method = Method::pg_accel;
  return run_optimizer(cfg, oracle, objective_fn, progress, bound);
}

// --- gradient oracles ---------------------------------------------------------

inline GradientOracle make_exact_oracle(const EmpiricalMoments& emp, int cap = kDefaultEnumCap) {
  return [emp, cap](const IsingParams& theta, long) {
    GradientSample gs;
    gs.grad = gradient_exact(theta, emp, cap);
    gs.xi_norm = 0.0;
    gs.s_used = 0;
    return gs;
  };
}

/// Exact gradient plus an injected direction of norm exactly c/k^a.
inline GradientOracle make_injected_oracle(const EmpiricalMoments& emp, const ErrorInjector& inj,
                                           int cap = kDefaultEnumCap) {
  return [emp, inj, cap](const IsingParams& theta, long k) {
    GradientSample gs;
    gs.grad = gradient_exact(theta, emp, cap);
    const IsingParams xi = inject_error(inj, k, emp.n);
    gs.xi_norm = theta_l2(xi);
    theta_axpy(gs.grad, 1.0, xi);
    gs.s_used = 0;
    return gs;
  };
}

enum class XiMode { off, exact };

/// Sampler-backed oracle drawing S_k = schedule(k) samples at iteration k.
/// With XiMode::exact the true error norm is measured against the
/// enumeration oracle each call (affordable for small n only).
inline GradientOracle make_sampler_oracle(const EmpiricalMoments& emp, const SamplerSpec& spec,
                                          const SampleSchedule& sched, uint64_t seed,
                                          XiMode xi_mode = XiMode::off,
                                          int cap = kDefaultEnumCap) {
  return [emp, spec, sched, seed, xi_mode, cap](const IsingParams& theta, long k) {
    const long s = schedule_eval(sched, k);
    const GradientEstimate est =
        estimate_moments(spec, theta, s, derive_seed(seed, static_cast<uint64_t>(k)), cap);
    GradientSample gs;
    gs.grad = estimate_to_gradient(est, emp);
    gs.s_used = est.s_used;
    if (xi_mode == XiMode::exact) {
      const auto [second, first] = exact_moments(theta, cap);
      gs.xi_norm = moment_error_l2(est, second, first);
    }
    return gs;
  };
}

// --- reference solutions --------------------------------------------------------

/// Max-norm violation of the first-order optimality conditions:
/// biases need zero gradient; nonzero couplings need gradient = -rho sign(w);
/// zero couplings need |gradient| <= rho.
inline double kkt_residual(const IsingParams& p, const EmpiricalMoments& emp, double rho,
                           int cap = kDefaultEnumCap) {
  if (rho <= 0.0) throw std::invalid_argument("kkt_residual: rho must be positive");
  const IsingParams g = gradient_exact(p, emp, cap);
  double res = 0.0;
  for (int i = 0; i < p.n; ++i) {
    res = std::max(res, std::abs(g.b[i]));
    for (int j = 0; j < p.n; ++j) {
      if (i == j) continue;
      const double gv = g.w(i, j);
      const double wv = p.w(i, j);
      if (wv != 0.0)
        res = std::max(res, std::abs(gv + (wv > 0.0 ? rho : -rho)));
      else
        res = std::max(res, std::max(0.0, std::abs(gv) - rho));
    }
  }
  return res;
}

struct ReferenceOptions {
  double kkt_tol = 1e-8;
  long max_iter = 200000;
  long check_every = 5;
  int cap = kDefaultEnumCap;
};

struct ReferenceSolution {
  IsingParams theta;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double kkt_residual = std::numeric_limits<double>::infinity();
  long iters = 0;
  bool converged = false;
};

/// High-accuracy minimizer via accelerated proximal gradient with
/// backtracking and momentum restart on objective increase. Used as the
/// optimum oracle that regret measurements and bound checks compare against.
inline ReferenceSolution solve_reference(const EmpiricalMoments& emp, double rho,
                                         const ReferenceOptions& opt = {}) {
  if (rho <= 0.0) throw std::invalid_argument("solve_reference: rho must be positive");
  const int n = emp.n;
  ReferenceSolution sol;
  IsingParams x = IsingParams::zeros(n);
  IsingParams x_prev = x;
  IsingParams y = x;
  double t_momentum = 1.0;
  double eta = 1.0;
  double fx = objective(x, emp, rho, opt.cap);

  for (long it = 1; it <= opt.max_iter; ++it) {
    sol.iters = it;
    const IsingParams g = gradient_exact(y, emp, opt.cap);
    const double smooth_y = neg_log_likelihood(y, emp, opt.cap);
    IsingParams cand;
    double smooth_cand = 0.0;
    for (int halving = 0; halving < 60; ++halving) {
      cand = y;
      theta_axpy(cand, -eta, g);
      prox_l1(cand, eta * rho);
      double lin = 0.0, dist2 = 0.0;
      for (size_t i = 0; i < cand.w.size(); ++i) {
        const double d = cand.w.data()[i] - y.w.data()[i];
        lin += g.w.data()[i] * d;
        dist2 += d * d;
      }
      for (int i = 0; i < n; ++i) {
        const double d = cand.b[i] - y.b[i];
        lin += g.b[i] * d;
        dist2 += d * d;
      }
      smooth_cand = neg_log_likelihood(cand, emp, opt.cap);
      if (smooth_cand <= smooth_y + lin + dist2 / (2.0 * eta) + 1e-12) break;
      eta *= 0.5;
    }
    const double f_cand = smooth_cand + rho * entry_l1(cand.w);
    if (f_cand > fx) {
      // momentum overshot; restart from the best point
      t_momentum = 1.0;
      y = x;
      continue;
    }
    x_prev = x;
    x = cand;
    fx = f_cand;
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
    const double mix = (t_momentum - 1.0) / t_next;
    y = x;
    theta_axpy(y, mix, x);
    theta_axpy(y, -mix, x_prev);
    t_momentum = t_next;
    if (it % opt.check_every == 0) {
      sol.kkt_residual = kkt_residual(x, emp, rho, opt.cap);
      if (sol.kkt_residual < opt.kkt_tol) {
        sol.converged = true;
        break;
      }
    }
  }
  if (!sol.converged) sol.kkt_residual = kkt_residual(x, emp, rho, opt.cap);
  sol.converged = sol.kkt_residual < opt.kkt_tol;
  sol.theta = std::move(x);
  sol.objective = fx;
  return sol;
}

// --- trace persistence -----------------------------------------------------------

inline void save_trace_csv(const RunTrace& t, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "k,objective,eta,xi_norm,s_k\n";
  f.precision(17);
  for (long k = 1; k <= t.k_completed; ++k) {
    const size_t i = static_cast<size_t>(k - 1);
    f << k << "," << t.objective[i] << "," << t.eta[i] << "," << t.xi_norm[i] << ","
      << t.s_k[i] << "\n";
  }
}

/// Columns only; the final iterates live in the JSON header.
inline RunTrace load_trace_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  RunTrace t;
  std::string line;
  if (!std::getline(f, line) || line != "k,objective,eta,xi_norm,s_k")
    throw std::invalid_argument("trace csv: bad header in " + path);
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    Vec fields;
    while (std::getline(ss, tok, ',')) fields.push_back(std::stod(tok));
    if (fields.size() != 5) throw std::invalid_argument("trace csv: bad row in " + path);
    t.objective.push_back(fields[1]);
    t.eta.push_back(fields[2]);
    t.xi_norm.push_back(fields[3]);
    t.s_k.push_back(static_cast<long>(fields[4]));
  }
  t.k_completed = static_cast<long>(t.objective.size());
  return t;
}

inline nlohmann::json trace_header_json(const RunTrace& t, const nlohmann::json& meta) {
  nlohmann::json j;
  j["meta"] = meta;
  j["k_completed"] = t.k_completed;
  j["aborted"] = t.aborted;
  j["bound_violations"] = t.bound_violations;
  j["random_index"] = t.random_index;
  if (!std::isnan(t.pg_error_aggregate)) j["pg_error_aggregate"] = t.pg_error_aggregate;
  j["theta_robust"] = flatten(t.theta_robust);
  j["theta_basic"] = flatten(t.theta_basic);
  j["theta_random"] = flatten(t.theta_random);
  j["theta_last"] = flatten(t.theta_last);
  return j;
}

inline void save_trace_json(const RunTrace& t, const nlohmann::json& meta,
                            const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << trace_header_json(t, meta).dump(2) << "\n";
}

}  // namespace ising
