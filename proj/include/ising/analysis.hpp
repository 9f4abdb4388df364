#pragma once

// Closed-form side of the convergence analysis: generalized harmonic
// numbers, the three error-weight families, the weighted error term, the
// right-hand sides of the regret bounds (deterministic-error and
// high-probability stochastic forms), the proximal-gradient error
// aggregates, and the method/rate requirement tables.
//
// Bound identifiers follow the library's own numbering, used consistently
// across BoundReport JSON and the verification tools:
//   2: solution-norm bound (model.hpp)       6: step-weighted-average regret
//   7: uniform-average regret                8: random-iterate regret (Markov)
//   9: high-probability error-term bound for biased stochastic samplers

#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ising/common.hpp"

namespace ising {

/// H_{r,K} = sum_{k=1..K} k^{-r}, summed exactly. The closed-form
/// approximations live in harmonic_approx and are diagnostics only; bound
/// evaluations always use this exact sum.
inline double harmonic(double r, long k_max) {
  if (k_max < 1) throw std::invalid_argument("harmonic: K must be >= 1");
  if (r < 0.0) throw std::invalid_argument("harmonic: r must be >= 0");
  double s = 0.0;
  for (long k = 1; k <= k_max; ++k) s += std::pow(static_cast<double>(k), -r);
  return s;
}

/// The textbook growth-rate approximations of H_{r,K}: K for r = 0,
/// K^{1-r}/(1-r) for 0 < r < 1, log K for r = 1, bounded for r > 1.
inline double harmonic_approx(double r, long k_max) {
  if (k_max < 1) throw std::invalid_argument("harmonic_approx: K must be >= 1");
  if (r < 0.0) throw std::invalid_argument("harmonic_approx: r must be >= 0");
  const double kd = static_cast<double>(k_max);
  if (r == 0.0) return kd;
  if (r < 1.0) return std::pow(kd, 1.0 - r) / (1.0 - r);
  if (r == 1.0) return std::log(kd);
  return (1.0 - std::pow(kd, 1.0 - r)) / (r - 1.0) + 1.0;
}

// --- error weights ------------------------------------------------------------

struct WeightFamily {
  enum class Kind {
    robust,       // gamma_k proportional to k^-r (step-weighted averaging)
    basic,        // gamma_k = 1/K
    accelerated,  // gamma_k proportional to k
  };
  Kind kind = Kind::basic;
  double r = 0.5;  // robust only
};

/// The K weights of the family, normalized to sum exactly to 1.
inline Vec weights(const WeightFamily& fam, long k_max) {
  if (k_max < 1) throw std::invalid_argument("weights: K must be >= 1");
  Vec g(static_cast<size_t>(k_max));
  switch (fam.kind) {
    case WeightFamily::Kind::robust:
      if (fam.r < 0.0) throw std::invalid_argument("weights: robust r must be >= 0");
      for (long k = 1; k <= k_max; ++k)
        g[k - 1] = std::pow(static_cast<double>(k), -fam.r);
      break;
    case WeightFamily::Kind::basic:
      for (auto& v : g) v = 1.0;
      break;
    case WeightFamily::Kind::accelerated:
      for (long k = 1; k <= k_max; ++k) g[k - 1] = static_cast<double>(k);
      break;
  }
  double total = 0.0;
  for (double v : g) total += v;
  for (double& v : g) v /= total;
  return g;
}

/// A = sum_k gamma_k ||xi^(k)||_2, the weighted error average every regret
/// bound is expressed in.
inline double error_term(std::span<const double> gamma, std::span<const double> xi_norms) {
  if (gamma.size() != xi_norms.size() || gamma.empty())
    throw std::invalid_argument("error_term: weights and norms must have equal nonzero length");
  double wsum = 0.0, a = 0.0;
  for (size_t i = 0; i < gamma.size(); ++i) {
    if (gamma[i] <= 0.0) throw std::invalid_argument("error_term: weights must be positive");
    if (!(xi_norms[i] >= 0.0))
      throw std::invalid_argument("error_term: error norms must be non-negative");
    wsum += gamma[i];
    a += gamma[i] * xi_norms[i];
  }
  if (std::abs(wsum - 1.0) > 1e-9)
    throw std::invalid_argument("error_term: weights must sum to 1");
  return a;
}

// --- bound right-hand sides ------------------------------------------------------

struct BoundReport {
  int theorem = 0;
  double rhs = std::numeric_limits<double>::quiet_NaN();
  double lambda1 = std::numeric_limits<double>::quiet_NaN();  // id 9 bias term
  double lambda2 = std::numeric_limits<double>::quiet_NaN();  // id 9 variance term
  nlohmann::json inputs;
};

/// Regret bound for runs with known per-iteration error norms folded into
/// A. id 6 bounds the step-weighted average of visited objectives, id 7 the
/// uniform average, id 8 a uniformly drawn iterate at confidence epsilon.
inline double bound_deterministic(int theorem, double d, double g, double beta, double r,
                                  long k_max, double a_term,
                                  double epsilon = std::numeric_limits<double>::quiet_NaN()) {
  if (d <= 0.0 || g <= 0.0 || beta <= 0.0)
    throw std::invalid_argument("bound_deterministic: D, G, beta must be positive");
  if (r <= 0.0 || r >= 1.0) throw std::invalid_argument("bound_deterministic: need 0 < r < 1");
  if (k_max < 1) throw std::invalid_argument("bound_deterministic: K must be >= 1");
  if (!(a_term >= 0.0)) throw std::invalid_argument("bound_deterministic: A must be >= 0");
  const double kd = static_cast<double>(k_max);
  switch (theorem) {
    case 6: {
      const double h_r = harmonic(r, k_max);
      return d * d * g / (2.0 * beta * h_r) + 2.0 * d * a_term +
             4.0 * beta * g * harmonic(2.0 * r, k_max) / h_r;
    }
    case 7:
      return d * d * g * std::pow(kd + 1.0, r) / (2.0 * beta * kd) +
             std::pow(2.0, 1.0 + r) * d * a_term +
             std::pow(2.0, 2.0 + r) * beta * g * harmonic(r, k_max) / kd;
    case 8: {
      if (!(epsilon > 0.0) || !(epsilon <= 1.0))
        throw std::invalid_argument("bound_deterministic: id 8 needs 0 < epsilon <= 1");
      return bound_deterministic(7, d, g, beta, r, k_max, a_term) / epsilon;
    }
    default:
      throw std::invalid_argument("bound_deterministic: id must be 6, 7, or 8");
  }
}

inline BoundReport report_deterministic(int theorem, double d, double g, double beta, double r,
                                        long k_max, double a_term,
                                        double epsilon = std::numeric_limits<double>::quiet_NaN()) {
  BoundReport rep;
  rep.theorem = theorem;
  rep.rhs = bound_deterministic(theorem, d, g, beta, r, k_max, a_term, epsilon);
  rep.inputs = {{"D", d}, {"G", g}, {"beta", beta}, {"r", r}, {"K", k_max}, {"A", a_term}};
  if (theorem == 8) rep.inputs["epsilon"] = epsilon;
  return rep;
}

/// High-probability bound on the error term A for biased stochastic
/// samplers with bias/variance constants (B, V), S_k samples at step k,
/// weights gamma, clipped-estimate cap 2 sqrt(M). Holds with probability
/// 1 - delta.
inline BoundReport bound_stochastic(double b, double v, std::span<const long> s_k,
                                    std::span<const double> gamma, double m, double delta) {
  if (b < 0.0 || v < 0.0) throw std::invalid_argument("bound_stochastic: B, V must be >= 0");
  if (m <= 0.0) throw std::invalid_argument("bound_stochastic: M must be positive");
  if (!(delta > 0.0) || !(delta < 1.0))
    throw std::invalid_argument("bound_stochastic: need 0 < delta < 1");
  if (s_k.size() != gamma.size() || s_k.empty())
    throw std::invalid_argument("bound_stochastic: schedule and weights must match");
  double wsum = 0.0, bias_sum = 0.0, var_sum = 0.0;
  for (size_t i = 0; i < s_k.size(); ++i) {
    if (s_k[i] < 1) throw std::invalid_argument("bound_stochastic: S_k must be >= 1");
    if (gamma[i] <= 0.0) throw std::invalid_argument("bound_stochastic: weights must be positive");
    wsum += gamma[i];
    bias_sum += gamma[i] / static_cast<double>(s_k[i]);
    var_sum += gamma[i] * gamma[i] / static_cast<double>(s_k[i]);
  }
  if (std::abs(wsum - 1.0) > 1e-9)
    throw std::invalid_argument("bound_stochastic: weights must sum to 1");
  const double kd = static_cast<double>(s_k.size());
  const double log_term = std::log(1.0 / delta);
  BoundReport rep;
  rep.theorem = 9;
  rep.lambda1 = std::min(2.0 * std::sqrt(m), b * bias_sum);
  rep.lambda2 = std::min(4.0 * m, v * var_sum);
  rep.rhs = rep.lambda1 + 2.0 * std::sqrt(m) * log_term / (3.0 * kd) +
            std::sqrt(2.0 * rep.lambda2 * log_term +
                      4.0 * m * log_term * log_term / (9.0 * kd * kd));
  rep.inputs = {{"B", b}, {"V", v}, {"M", m}, {"delta", delta}, {"K", s_k.size()}};
  return rep;
}

inline nlohmann::json bound_report_to_json(const BoundReport& rep) {
  nlohmann::json j;
  j["theorem"] = rep.theorem;
  j["rhs"] = rep.rhs;
  if (!std::isnan(rep.lambda1)) j["lambda1"] = rep.lambda1;
  if (!std::isnan(rep.lambda2)) j["lambda2"] = rep.lambda2;
  j["inputs"] = rep.inputs;
  return j;
}

// --- proximal-gradient error aggregates ----------------------------------------

enum class PgKind { basic, accelerated };

/// The aggregates the PG analyses accumulate: (1/K)(sum ||xi||)^2 for the
/// basic method (equal to K A^2 with basic weights) and
/// (4/(K+1)^2)(sum k ||xi||)^2 for the accelerated method (equal to K^2 A^2
/// with accelerated weights).
inline double pg_error_aggregate(PgKind kind, std::span<const double> xi_norms) {
  if (xi_norms.empty()) throw std::invalid_argument("pg_error_aggregate: empty norms");
  for (double x : xi_norms)
    if (!(x >= 0.0)) throw std::invalid_argument("pg_error_aggregate: norms must be >= 0");
  const double kd = static_cast<double>(xi_norms.size());
  if (kind == PgKind::basic) {
    double s = 0.0;
    for (double x : xi_norms) s += x;
    return s * s / kd;
  }
  double s = 0.0;
  for (size_t i = 0; i < xi_norms.size(); ++i) s += static_cast<double>(i + 1) * xi_norms[i];
  return 4.0 * s * s / ((kd + 1.0) * (kd + 1.0));
}

// --- requirement tables ----------------------------------------------------------

enum class MethodTag { pb, pa, fb, fr };
enum class RateTarget { converge, k_half, k_one, k_two };
enum class TableSetting { deterministic_error, sample_schedule };

/// One cell of the requirement tables: the decay rate of ||xi^(k)||_2
/// (deterministic setting) or the growth rate of S_k (stochastic setting)
/// needed for the error term to reach the target rate. log_form means
/// O(1/log k) error decay, respectively O(log k) samples. Dashes in the
/// source tables come back as achievable = false.
struct TableCell {
  bool achievable = false;
  bool log_form = false;
  double exponent = 0.0;
  bool plus_eps = false;
};

inline TableCell schedule_table(MethodTag method, RateTarget target, TableSetting setting) {
  const auto cell = [](double e) { return TableCell{true, false, e, true}; };
  constexpr TableCell log_cell{true, true, 0.0, false};
  constexpr TableCell dash{};
  const int t = static_cast<int>(target);
  switch (method) {
    case MethodTag::pb: {
      // identical requirements in both settings
      const TableCell row[4] = {cell(0.5), cell(0.75), cell(1.0), dash};
      return row[t];
    }
    case MethodTag::pa: {
      if (setting == TableSetting::sample_schedule) return dash;  // never converges
      const TableCell row[4] = {cell(1.0), cell(1.25), cell(1.5), cell(2.0)};
      return row[t];
    }
    case MethodTag::fb: {
      const TableCell row[4] = {log_cell, cell(0.5), cell(1.0), dash};
      return row[t];
    }
    case MethodTag::fr: {
      const TableCell row[4] = {log_cell, cell(0.5), dash, dash};
      return row[t];
    }
  }
  return dash;
}

inline std::string method_tag_name(MethodTag m) {
  switch (m) {
    case MethodTag::pb: return "PB";
    case MethodTag::pa: return "PA";
    case MethodTag::fb: return "FB";
    case MethodTag::fr: return "FR";
  }
  return "?";
}

/// Text rendering of both requirement tables.
inline std::string render_schedule_tables() {
  std::ostringstream os;
  const char* targets[] = {"converge", "O(1/sqrt(K))", "O(1/K)", "O(1/K^2)"};
  for (auto setting : {TableSetting::deterministic_error, TableSetting::sample_schedule}) {
    const bool det = setting == TableSetting::deterministic_error;
    os << (det ? "required error decay ||xi_k|| (deterministic errors)\n"
               : "required samples S_k (biased stochastic estimates)\n");
    os << "method";
    for (const char* t : targets) os << "\t" << t;
    os << "\n";
    for (auto m : {MethodTag::pb, MethodTag::pa, MethodTag::fb, MethodTag::fr}) {
      os << method_tag_name(m);
      for (int t = 0; t < 4; ++t) {
        const TableCell c = schedule_table(m, static_cast<RateTarget>(t), setting);
        os << "\t";
        if (!c.achievable) {
          os << "-";
        } else if (c.log_form) {
          os << (det ? "1/log k" : "log k");
        } else {
          std::ostringstream rate;
          rate << "k^" << c.exponent << (c.plus_eps ? "+e" : "");
          os << (det ? "1/" + rate.str() : rate.str());
        }
      }
      os << "\n";
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace ising
