#pragma once

// Model parameters and data for pairwise binary (+/-1) graphical models:
// p(x) proportional to exp(x' W x + b' x) with W symmetric, zero diagonal.
// Includes empirical moments of a sample, the l1-regularized problem's
// closed-form solution-norm and gradient-norm bounds, and JSON/CSV I/O.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ising/common.hpp"

namespace ising {

struct IsingParams {
  int n = 0;
  Mat w;   // symmetric, zero diagonal
  Vec b;

  static IsingParams zeros(int n) {
    IsingParams p;
    p.n = n;
    p.w = Mat(n);
    p.b.assign(static_cast<size_t>(n), 0.0);
    return p;
  }

  /// Sets w(i,j) and w(j,i) together; rejects diagonal writes.
  void set_coupling(int i, int j, double v) {
    if (i == j) throw std::invalid_argument("set_coupling: diagonal entries are fixed at zero");
    w(i, j) = v;
    w(j, i) = v;
  }

  /// Flattened parameter dimension: n^2 interaction entries plus n biases.
  long theta_dim() const { return static_cast<long>(n) * n + n; }
};

inline void validate(const IsingParams& p) {
  if (p.n <= 0) throw std::invalid_argument("params: n must be positive");
  if (p.w.n() != p.n || static_cast<int>(p.b.size()) != p.n)
    throw std::invalid_argument("params: shape mismatch between n, w, b");
  if (!is_symmetric(p.w)) throw std::invalid_argument("params: w must be symmetric");
  if (!has_zero_diagonal(p.w)) throw std::invalid_argument("params: w must have zero diagonal");
  for (size_t i = 0; i < p.w.size(); ++i)
    if (!std::isfinite(p.w.data()[i])) throw std::invalid_argument("params: non-finite entry in w");
  for (double v : p.b)
    if (!std::isfinite(v)) throw std::invalid_argument("params: non-finite entry in b");
}

// --- arithmetic on the flattened parameter vector (w row-major, then b) ----

inline Vec flatten(const IsingParams& p) {
  Vec out;
  out.reserve(static_cast<size_t>(p.theta_dim()));
  out.insert(out.end(), p.w.data(), p.w.data() + p.w.size());
  out.insert(out.end(), p.b.begin(), p.b.end());
  return out;
}

/// Inverse of flatten. The coupling block must be symmetric with a zero
/// diagonal, same as any other params value.
inline IsingParams unflatten(const Vec& theta, int n) {
  if (n < 1) throw std::invalid_argument("unflatten: n must be >= 1");
  const size_t expect = static_cast<size_t>(n) * n + static_cast<size_t>(n);
  if (theta.size() != expect)
    throw std::invalid_argument("unflatten: expected " + std::to_string(expect) +
                                " entries, got " + std::to_string(theta.size()));
  IsingParams p = IsingParams::zeros(n);
  std::copy(theta.begin(), theta.begin() + static_cast<long>(p.w.size()), p.w.data());
  std::copy(theta.begin() + static_cast<long>(p.w.size()), theta.end(), p.b.begin());
  validate(p);
  return p;
}

inline double theta_l2(const IsingParams& p) {
  double s = 0.0;
  for (size_t i = 0; i < p.w.size(); ++i) s += p.w.data()[i] * p.w.data()[i];
  for (double v : p.b) s += v * v;
  return std::sqrt(s);
}

inline double theta_dist_l2(const IsingParams& a, const IsingParams& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.w.size(); ++i) {
    const double d = a.w.data()[i] - b.w.data()[i];
    s += d * d;
  }
  for (size_t i = 0; i < a.b.size(); ++i) {
    const double d = a.b[i] - b.b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

/// y += alpha * x
inline void theta_axpy(IsingParams& y, double alpha, const IsingParams& x) {
  for (size_t i = 0; i < y.w.size(); ++i) y.w.data()[i] += alpha * x.w.data()[i];
  for (size_t i = 0; i < y.b.size(); ++i) y.b[i] += alpha * x.b[i];
}

inline void theta_scale(IsingParams& p, double alpha) {
  for (size_t i = 0; i < p.w.size(); ++i) p.w.data()[i] *= alpha;
  for (double& v : p.b) v *= alpha;
}

inline bool theta_finite(const IsingParams& p) {
  for (size_t i = 0; i < p.w.size(); ++i)
    if (!std::isfinite(p.w.data()[i])) return false;
  for (double v : p.b)
    if (!std::isfinite(v)) return false;
  return true;
}

// ---------------------------------------------------------------------------

/// T samples of n spins, each +1 or -1, stored row-major.
struct Dataset {
  int n = 0;
  std::vector<int8_t> cells;

  long t() const { return n == 0 ? 0 : static_cast<long>(cells.size()) / n; }
  std::span<const int8_t> row(long i) const {
    return {cells.data() + static_cast<size_t>(i) * n, static_cast<size_t>(n)};
  }
};

inline void validate(const Dataset& d) {
  if (d.n <= 0) throw std::invalid_argument("dataset: n must be positive");
  if (d.cells.empty() || d.cells.size() % static_cast<size_t>(d.n) != 0)
    throw std::invalid_argument("dataset: sample count must be a positive multiple of n");
  for (int8_t c : d.cells)
    if (c != 1 && c != -1) throw std::invalid_argument("dataset: entries must be +1 or -1");
}

/// Empirical second moments with the diagonal removed (sigma_hat) and first
/// moments (mu_hat), plus the max-norms the optimization bounds depend on.
/// mu_interior is false when some variable is constant across the sample,
/// i.e. an entry of mu_hat sits on the boundary of [-1, +1]; the bias bound
/// diverges there.
struct EmpiricalMoments {
  int n = 0;
  Mat sigma_hat;
  Vec mu_hat;
  double sigma_inf = 0.0;  // max |sigma_hat|
  double mu_inf = 0.0;     // max |mu_hat|
  bool mu_interior = true;
};

inline EmpiricalMoments empirical_moments(const Dataset& d) {
  validate(d);
  EmpiricalMoments m;
  m.n = d.n;
  m.sigma_hat = Mat(d.n);
  m.mu_hat.assign(static_cast<size_t>(d.n), 0.0);
  const long t = d.t();
  for (long s = 0; s < t; ++s) {
    const auto x = d.row(s);
    for (int i = 0; i < d.n; ++i) {
      m.mu_hat[i] += x[i];
      for (int j = i + 1; j < d.n; ++j) m.sigma_hat(i, j) += x[i] * x[j];
    }
  }
  for (int i = 0; i < d.n; ++i) {
    m.mu_hat[i] /= static_cast<double>(t);
    for (int j = i + 1; j < d.n; ++j) {
      m.sigma_hat(i, j) /= static_cast<double>(t);
      m.sigma_hat(j, i) = m.sigma_hat(i, j);
    }
  }
  m.sigma_inf = max_abs(m.sigma_hat);
  m.mu_inf = max_abs(m.mu_hat);
  m.mu_interior = m.mu_inf < 1.0;
  return m;
}

// ---------------------------------------------------------------------------
// Closed-form bounds for the l1-regularized maximum-likelihood problem
//   min_{W,b}  logZ(W,b) - <sigma_hat, W> - <mu_hat, b> + rho * ||W||_1.
// Any minimizer satisfies  ||W*||_1 <= n log2 / rho  and
//   ||b*||_1 <= n log2 (rho + 1 + sigma_inf) / (rho (1 - mu_inf)),
// and the euclidean diameter bound D below follows from the two.

struct SolutionBound {
  double w_l1 = 0.0;
  double b_l1 = 0.0;
  double d = 0.0;  // l2 bound on the flattened solution
};

inline SolutionBound solution_bound(double rho, const EmpiricalMoments& emp) {
  if (rho <= 0.0) throw std::invalid_argument("solution_bound: rho must be positive");
  if (!emp.mu_interior)
    throw AssumptionViolation(
        "solution_bound: an empirical first moment lies on the boundary of [-1,+1] "
        "(a variable is constant in the sample), so the bias bound diverges");
  SolutionBound out;
  const double nlog2 = emp.n * std::log(2.0);
  out.w_l1 = nlog2 / rho;
  const double ratio = (rho + 1.0 + emp.sigma_inf) / (1.0 - emp.mu_inf);
  out.b_l1 = nlog2 * ratio / rho;
  out.d = std::sqrt((nlog2 / rho) * (nlog2 / rho) * (1.0 + ratio * ratio));
  return out;
}

/// Uniform bound G on the l2 norm of any subgradient of the objective:
/// G^2 = n^2 max{ (1 + sigma_inf)^2 + (1 + mu_inf)^2 / n ,  rho^2 }.
inline double lipschitz_g(double rho, const EmpiricalMoments& emp) {
  if (rho <= 0.0) throw std::invalid_argument("lipschitz_g: rho must be positive");
  const double n = static_cast<double>(emp.n);
  const double smooth = (1.0 + emp.sigma_inf) * (1.0 + emp.sigma_inf) +
                        (1.0 + emp.mu_inf) * (1.0 + emp.mu_inf) / n;
  return n * std::sqrt(std::max(smooth, rho * rho));
}

struct ModelConstants {
  double rho = 0.0;
  double d_bound = 0.0;
  double g_bound = 0.0;
};

inline ModelConstants model_constants(double rho, const EmpiricalMoments& emp) {
  ModelConstants c;
  c.rho = rho;
  c.d_bound = solution_bound(rho, emp).d;
  c.g_bound = lipschitz_g(rho, emp);
  return c;
}

// --- serialization ---------------------------------------------------------

inline nlohmann::json params_to_json(const IsingParams& p) {
  nlohmann::json j;
  j["n"] = p.n;
  auto rows = nlohmann::json::array();
  for (int i = 0; i < p.n; ++i) {
    auto row = nlohmann::json::array();
    for (int jj = 0; jj < p.n; ++jj) row.push_back(p.w(i, jj));
    rows.push_back(std::move(row));
  }
  j["w"] = std::move(rows);
  j["b"] = p.b;
  return j;
}

inline IsingParams params_from_json(const nlohmann::json& j) {
  IsingParams p;
  p.n = j.at("n").get<int>();
  if (p.n <= 0) throw std::invalid_argument("params json: n must be positive");
  p.w = Mat(p.n);
  const auto& rows = j.at("w");
  if (static_cast<int>(rows.size()) != p.n)
    throw std::invalid_argument("params json: w must have n rows");
  for (int i = 0; i < p.n; ++i) {
    const auto& row = rows.at(i);
    if (static_cast<int>(row.size()) != p.n)
      throw std::invalid_argument("params json: w rows must have n entries");
    for (int jj = 0; jj < p.n; ++jj) p.w(i, jj) = row.at(jj).get<double>();
  }
  p.b = j.at("b").get<Vec>();
  validate(p);
  return p;
}

inline void save_params(const IsingParams& p, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << params_to_json(p).dump(2) << "\n";
}

inline IsingParams load_params(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  nlohmann::json j;
  f >> j;
  return params_from_json(j);
}

/// One sample per line, comma-separated +1/-1 entries.
inline void save_dataset(const Dataset& d, const std::string& path) {
  validate(d);
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  for (long s = 0; s < d.t(); ++s) {
    const auto x = d.row(s);
    for (int i = 0; i < d.n; ++i) f << (i ? "," : "") << static_cast<int>(x[i]);
    f << "\n";
  }
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  Dataset d;
  std::string line;
  long lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    int count = 0;
    while (std::getline(ss, tok, ',')) {
      int v;
      try {
        v = std::stoi(tok);
      } catch (const std::exception&) {
        throw std::invalid_argument("dataset csv line " + std::to_string(lineno) +
                                    ": not an integer: '" + tok + "'");
      }
      if (v != 1 && v != -1)
        throw std::invalid_argument("dataset csv line " + std::to_string(lineno) +
                                    ": entries must be +1 or -1");
      d.cells.push_back(static_cast<int8_t>(v));
      ++count;
    }
    if (d.n == 0)
      d.n = count;
    else if (count != d.n)
      throw std::invalid_argument("dataset csv line " + std::to_string(lineno) +
                                  ": expected " + std::to_string(d.n) + " entries");
  }
  validate(d);
  return d;
}

}  // namespace ising
