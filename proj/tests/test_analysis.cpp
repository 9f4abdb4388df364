// Closed-form analysis tests: harmonic numbers, weight families, the
// weighted error term, regret-bound right-hand sides, PG error aggregates,
// and the method/rate requirement tables.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "ising/analysis.hpp"

using namespace ising;

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

TEST_CASE("generalized harmonic numbers") {
  for (long k : {1L, 2L, 17L, 1000L})
    CHECK(harmonic(0.0, k) == static_cast<double>(k));
  CHECK_THAT(harmonic(1.0, 2), Catch::Matchers::WithinAbs(1.5, 1e-15));
  const double direct = 1.0 + 1.0 / std::sqrt(2.0) + 1.0 / std::sqrt(3.0) + 0.5;
  CHECK_THAT(harmonic(0.5, 4), Catch::Matchers::WithinAbs(direct, 1e-14));

  // increasing in K, decreasing in r
  for (long k = 1; k < 30; ++k) CHECK(harmonic(0.7, k + 1) > harmonic(0.7, k));
  CHECK(harmonic(0.3, 10) > harmonic(0.8, 10));

  CHECK_THROWS_AS(harmonic(0.5, 0), std::invalid_argument);
  CHECK_THROWS_AS(harmonic(-0.1, 5), std::invalid_argument);
}

TEST_CASE("harmonic growth approximations") {
  CHECK(harmonic_approx(0.0, 12) == 12.0);
  CHECK_THAT(harmonic_approx(0.5, 100), Catch::Matchers::WithinAbs(20.0, 1e-12));
  CHECK_THAT(harmonic_approx(1.0, 100), Catch::Matchers::WithinAbs(std::log(100.0), 1e-12));
  CHECK_THAT(harmonic_approx(2.0, 4), Catch::Matchers::WithinAbs(1.75, 1e-12));
  // stays within a constant factor of the exact sum
  const double exact = harmonic(0.5, 1000);
  const double approx = harmonic_approx(0.5, 1000);
  CHECK(approx / exact > 0.5);
  CHECK(approx / exact < 2.0);
  CHECK_THROWS_AS(harmonic_approx(0.5, 0), std::invalid_argument);
}

TEST_CASE("weight families") {
  SECTION("all families are normalized") {
    for (auto kind : {WeightFamily::Kind::robust, WeightFamily::Kind::basic,
                      WeightFamily::Kind::accelerated}) {
      WeightFamily fam;
      fam.kind = kind;
      const Vec g = weights(fam, 7);
      REQUIRE(g.size() == 7);
      double total = 0.0;
      for (double v : g) {
        CHECK(v > 0.0);
        total += v;
      }
      CHECK_THAT(total, Catch::Matchers::WithinAbs(1.0, 1e-12));
    }
  }
  SECTION("shapes") {
    WeightFamily robust{WeightFamily::Kind::robust, 0.5};
    const Vec r = weights(robust, 6);
    for (size_t i = 1; i < r.size(); ++i) CHECK(r[i] < r[i - 1]);

    const Vec b = weights({WeightFamily::Kind::basic, 0.0}, 5);
    for (double v : b) CHECK(v == b[0]);

    const Vec a = weights({WeightFamily::Kind::accelerated, 0.0}, 4);
    // proportional to k: 2k / (K (K+1))
    for (long k = 1; k <= 4; ++k)
      CHECK_THAT(a[k - 1], Catch::Matchers::WithinAbs(2.0 * k / (4.0 * 5.0), 1e-15));

    // robust with r = 0 degenerates to uniform
    const Vec r0 = weights({WeightFamily::Kind::robust, 0.0}, 5);
    for (double v : r0) CHECK_THAT(v, Catch::Matchers::WithinAbs(0.2, 1e-15));
  }
  CHECK_THROWS_AS(weights({WeightFamily::Kind::basic, 0.0}, 0), std::invalid_argument);
  CHECK_THROWS_AS(weights({WeightFamily::Kind::robust, -1.0}, 3), std::invalid_argument);
}

TEST_CASE("weighted error term") {
  const Vec uniform = {0.5, 0.5};
  CHECK(error_term(uniform, std::vector<double>{0.0, 0.0}) == 0.0);
  CHECK_THAT(error_term(uniform, std::vector<double>{0.4, 0.2}),
             Catch::Matchers::WithinAbs(0.3, 1e-15));
  SECTION("constant norms pass through any weight family") {
    const Vec g = weights({WeightFamily::Kind::robust, 0.5}, 9);
    const std::vector<double> norms(9, 0.7);
    CHECK_THAT(error_term(g, norms), Catch::Matchers::WithinAbs(0.7, 1e-12));
  }
  SECTION("bounded by the largest norm") {
    const Vec g = weights({WeightFamily::Kind::accelerated, 0.0}, 5);
    const std::vector<double> norms = {0.1, 0.9, 0.2, 0.0, 0.4};
    const double a = error_term(g, norms);
    CHECK(a <= 0.9);
    CHECK(a >= 0.0);
  }
  CHECK_THROWS_AS(error_term(std::vector<double>{0.3, 0.3}, std::vector<double>{1.0, 1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(error_term(uniform, std::vector<double>{1.0, -0.1}), std::invalid_argument);
  CHECK_THROWS_AS(error_term(uniform, std::vector<double>{1.0}), std::invalid_argument);
  CHECK_THROWS_AS(error_term(Vec{}, std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(error_term(uniform, std::vector<double>{1.0, kNaN}), std::invalid_argument);
}

TEST_CASE("deterministic regret bounds") {
  SECTION("hand-computed single-step value") {
    // D = G = beta = 1, r = 1/2, K = 1, A = 0:
    // 1/(2 H) + 4 H'/H with H = H' = 1 gives 4.5
    CHECK_THAT(bound_deterministic(6, 1.0, 1.0, 1.0, 0.5, 1, 0.0),
               Catch::Matchers::WithinAbs(4.5, 1e-15));
  }
  SECTION("random-iterate bound scales the average bound by 1/epsilon") {
    const double b7 = bound_deterministic(7, 2.0, 3.0, 1.0, 0.5, 50, 0.1);
    CHECK_THAT(bound_deterministic(8, 2.0, 3.0, 1.0, 0.5, 50, 0.1, 1.0),
               Catch::Matchers::WithinRel(b7, 1e-15));
    CHECK_THAT(bound_deterministic(8, 2.0, 3.0, 1.0, 0.5, 50, 0.1, 0.5),
               Catch::Matchers::WithinRel(2.0 * b7, 1e-15));
  }
  SECTION("error-free bounds vanish as the horizon grows") {
    double prev = std::numeric_limits<double>::infinity();
    for (long k : {10L, 100L, 1000L, 10000L}) {
      const double rhs = bound_deterministic(6, 1.0, 1.0, 1.0, 0.5, k, 0.0);
      CHECK(rhs < prev);
      prev = rhs;
    }
    CHECK(prev < 0.5);
  }
  SECTION("the error term enters id 6 as exactly 2 D A") {
    const double base = bound_deterministic(6, 3.0, 2.0, 1.0, 0.4, 25, 0.0);
    const double with_a = bound_deterministic(6, 3.0, 2.0, 1.0, 0.4, 25, 0.3);
    CHECK_THAT(with_a - base, Catch::Matchers::WithinAbs(2.0 * 3.0 * 0.3, 1e-12));
  }
  SECTION("report carries the inputs") {
    const BoundReport rep = report_deterministic(8, 1.0, 1.0, 1.0, 0.5, 10, 0.0, 0.25);
    CHECK(rep.theorem == 8);
    CHECK(rep.inputs.at("epsilon").get<double>() == 0.25);
    const nlohmann::json j = bound_report_to_json(rep);
    CHECK(j.at("rhs").get<double>() == rep.rhs);
  }
  CHECK_THROWS_AS(bound_deterministic(6, 1.0, 1.0, 1.0, 0.0, 5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(bound_deterministic(6, 1.0, 1.0, 1.0, 1.0, 5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(bound_deterministic(5, 1.0, 1.0, 1.0, 0.5, 5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(bound_deterministic(8, 1.0, 1.0, 1.0, 0.5, 5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(bound_deterministic(8, 1.0, 1.0, 1.0, 0.5, 5, 0.0, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(bound_deterministic(6, -1.0, 1.0, 1.0, 0.5, 5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(bound_deterministic(6, 1.0, 1.0, 1.0, 0.5, 5, -0.1), std::invalid_argument);
}

TEST_CASE("stochastic error-term bound") {
  SECTION("zero bias and variance leave only the concentration terms") {
    const std::vector<long> s = {1};
    const Vec g = {1.0};
    const BoundReport rep = bound_stochastic(0.0, 0.0, s, g, 1.0, std::exp(-1.0));
    CHECK(rep.lambda1 == 0.0);
    CHECK(rep.lambda2 == 0.0);
    // 2 sqrt(M) log(1/delta) / (3 K) + sqrt(4 M log^2 / (9 K^2)) = 2/3 + 2/3
    CHECK_THAT(rep.rhs, Catch::Matchers::WithinAbs(4.0 / 3.0, 1e-14));
  }
  SECTION("constant schedules reduce lambda to the expected ratios") {
    const std::vector<long> s(5, 10);
    const Vec g = weights({WeightFamily::Kind::basic, 0.0}, 5);
    const BoundReport rep = bound_stochastic(1.0, 1.0, s, g, 20.0, 0.05);
    CHECK_THAT(rep.lambda1, Catch::Matchers::WithinAbs(0.1, 1e-15));    // B sum gamma/S = 1/10
    CHECK_THAT(rep.lambda2, Catch::Matchers::WithinAbs(0.02, 1e-15));   // V sum gamma^2/S
    CHECK(rep.rhs >= rep.lambda1 + 2.0 * std::sqrt(20.0) * std::log(20.0) / 15.0);
  }
  SECTION("clipping caps both lambdas") {
    const std::vector<long> s = {1, 1, 1};
    const Vec g = weights({WeightFamily::Kind::basic, 0.0}, 3);
    const BoundReport rep = bound_stochastic(1e9, 1e9, s, g, 4.0, 0.1);
    CHECK(rep.lambda1 == 2.0 * std::sqrt(4.0));
    CHECK(rep.lambda2 == 4.0 * 4.0);
  }
  SECTION("tighter confidence costs more") {
    const std::vector<long> s(10, 5);
    const Vec g = weights({WeightFamily::Kind::basic, 0.0}, 10);
    CHECK(bound_stochastic(0.5, 0.5, s, g, 10.0, 0.01).rhs >
          bound_stochastic(0.5, 0.5, s, g, 10.0, 0.1).rhs);
  }
  const std::vector<long> s = {1, 1};
  const Vec g = {0.5, 0.5};
  CHECK_THROWS_AS(bound_stochastic(-1.0, 0.0, s, g, 1.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(bound_stochastic(0.0, 0.0, s, g, 0.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(bound_stochastic(0.0, 0.0, s, g, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(bound_stochastic(0.0, 0.0, s, g, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(bound_stochastic(0.0, 0.0, std::vector<long>{0, 1}, g, 1.0, 0.1),
                  std::invalid_argument);
  CHECK_THROWS_AS(bound_stochastic(0.0, 0.0, std::vector<long>{1}, g, 1.0, 0.1),
                  std::invalid_argument);
  CHECK_THROWS_AS(bound_stochastic(0.0, 0.0, s, Vec{0.4, 0.4}, 1.0, 0.1),
                  std::invalid_argument);
}

TEST_CASE("pg error aggregates") {
  const std::vector<double> zeros(6, 0.0);
  CHECK(pg_error_aggregate(PgKind::basic, zeros) == 0.0);
  CHECK(pg_error_aggregate(PgKind::accelerated, zeros) == 0.0);

  SECTION("constant norms recover K A^2 and K^2 A^2") {
    const double c = 0.3;
    const std::vector<double> norms(6, c);
    CHECK_THAT(pg_error_aggregate(PgKind::basic, norms),
               Catch::Matchers::WithinRel(6.0 * c * c, 1e-14));
    CHECK_THAT(pg_error_aggregate(PgKind::accelerated, norms),
               Catch::Matchers::WithinRel(36.0 * c * c, 1e-14));
  }
  SECTION("general norms agree with the weighted error term") {
    const std::vector<double> norms = {0.9, 0.1, 0.55, 0.3, 0.7};
    const double k = 5.0;
    const double a_basic = error_term(weights({WeightFamily::Kind::basic, 0.0}, 5), norms);
    CHECK_THAT(pg_error_aggregate(PgKind::basic, norms),
               Catch::Matchers::WithinRel(k * a_basic * a_basic, 1e-12));
    const double a_accel = error_term(weights({WeightFamily::Kind::accelerated, 0.0}, 5), norms);
    CHECK_THAT(pg_error_aggregate(PgKind::accelerated, norms),
               Catch::Matchers::WithinRel(k * k * a_accel * a_accel, 1e-12));
  }
  CHECK_THROWS_AS(pg_error_aggregate(PgKind::basic, std::vector<double>{}),
                  std::invalid_argument);
  CHECK_THROWS_AS(pg_error_aggregate(PgKind::basic, std::vector<double>{0.1, -0.2}),
                  std::invalid_argument);
  CHECK_THROWS_AS(pg_error_aggregate(PgKind::basic, std::vector<double>{kNaN}),
                  std::invalid_argument);
}

TEST_CASE("method requirement tables") {
  using R = RateTarget;
  const auto det = [](MethodTag m, R t) {
    return schedule_table(m, t, TableSetting::deterministic_error);
  };
  const auto sto = [](MethodTag m, R t) {
    return schedule_table(m, t, TableSetting::sample_schedule);
  };
  const auto expect_rate = [](const TableCell& c, double e) {
    CHECK(c.achievable);
    CHECK_FALSE(c.log_form);
    CHECK(c.exponent == e);
    CHECK(c.plus_eps);
  };
  const auto expect_log = [](const TableCell& c) {
    CHECK(c.achievable);
    CHECK(c.log_form);
  };
  const auto expect_dash = [](const TableCell& c) { CHECK_FALSE(c.achievable); };

  SECTION("deterministic error decay requirements") {
    expect_rate(det(MethodTag::pb, R::converge), 0.5);
    expect_rate(det(MethodTag::pb, R::k_half), 0.75);
    expect_rate(det(MethodTag::pb, R::k_one), 1.0);
    expect_dash(det(MethodTag::pb, R::k_two));

    expect_rate(det(MethodTag::pa, R::converge), 1.0);
    expect_rate(det(MethodTag::pa, R::k_half), 1.25);
    expect_rate(det(MethodTag::pa, R::k_one), 1.5);
    expect_rate(det(MethodTag::pa, R::k_two), 2.0);

    expect_log(det(MethodTag::fb, R::converge));
    expect_rate(det(MethodTag::fb, R::k_half), 0.5);
    expect_rate(det(MethodTag::fb, R::k_one), 1.0);
    expect_dash(det(MethodTag::fb, R::k_two));

    expect_log(det(MethodTag::fr, R::converge));
    expect_rate(det(MethodTag::fr, R::k_half), 0.5);
    expect_dash(det(MethodTag::fr, R::k_one));
    expect_dash(det(MethodTag::fr, R::k_two));
  }
  SECTION("sample growth requirements") {
    // the basic pg row carries over; the accelerated row does not
    for (int t = 0; t < 4; ++t) {
      const TableCell a = det(MethodTag::pb, static_cast<R>(t));
      const TableCell b = sto(MethodTag::pb, static_cast<R>(t));
      CHECK(a.achievable == b.achievable);
      CHECK(a.exponent == b.exponent);
      expect_dash(sto(MethodTag::pa, static_cast<R>(t)));
    }
    expect_log(sto(MethodTag::fb, R::converge));
    expect_rate(sto(MethodTag::fb, R::k_half), 0.5);
    expect_rate(sto(MethodTag::fb, R::k_one), 1.0);
    expect_dash(sto(MethodTag::fb, R::k_two));
    expect_log(sto(MethodTag::fr, R::converge));
    expect_rate(sto(MethodTag::fr, R::k_half), 0.5);
    expect_dash(sto(MethodTag::fr, R::k_one));
    expect_dash(sto(MethodTag::fr, R::k_two));
  }
  SECTION("text rendering mentions every method and both settings") {
    const std::string text = render_schedule_tables();
    for (const char* s : {"PB", "PA", "FB", "FR", "1/log k", "log k", "deterministic",
                          "stochastic", "k^0.5+e"})
      CHECK_THAT(text, Catch::Matchers::ContainsSubstring(s));
  }
}
