// Quantization, recovery metrics, SNR, and the brute-force enumeration oracle.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "bcs/bcs.hpp"

using namespace bcs;

TEST_CASE("threshold quantization") {
  Eigen::VectorXd x(2);
  x << 0.7, 0.2;
  Eigen::VectorXi want(2);
  want << 1, 0;
  REQUIRE(quantize(x, 0.5) == want);

  SECTION("boundary value rounds up") {
    Eigen::VectorXd b(1);
    b << 0.5;
    REQUIRE(quantize(b, 0.5)[0] == 1);
  }
  SECTION("binary input is a fixed point for any threshold") {
    Eigen::VectorXd b(4);
    b << 0.0, 1.0, 1.0, 0.0;
    for (double tau : {0.1, 0.5, 0.9}) {
      const Eigen::VectorXi q = quantize(b, tau);
      REQUIRE(quantize(q.cast<double>(), tau) == q);
      REQUIRE(q.cast<double>() == b);
    }
  }
  SECTION("threshold domain") {
    Eigen::VectorXd b(1);
    b << 0.5;
    REQUIRE_THROWS_AS(quantize(b, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(quantize(b, 1.0), std::invalid_argument);
  }
}

TEST_CASE("recovery metrics") {
  auto vec = [](std::initializer_list<int> vals) {
    Eigen::VectorXi v(static_cast<int>(vals.size()));
    int i = 0;
    for (int x : vals) v[i++] = x;
    return v;
  };

  SECTION("mixed errors") {
    const Metrics m = compute_metrics(vec({1, 1, 0, 0}), vec({1, 0, 0, 1}), 0.25);
    REQUIRE_FALSE(m.exact);
    REQUIRE(m.fpr.has_value());
    REQUIRE(m.fnr.has_value());
    REQUIRE_THAT(*m.fpr, Catch::Matchers::WithinAbs(0.5, 1e-15));
    REQUIRE_THAT(*m.fnr, Catch::Matchers::WithinAbs(0.5, 1e-15));
    REQUIRE(m.runtime_s == 0.25);
  }
  SECTION("perfect recovery") {
    const Metrics m = compute_metrics(vec({1, 0, 1}), vec({1, 0, 1}));
    REQUIRE(m.exact);
    REQUIRE(*m.fpr == 0.0);
    REQUIRE(*m.fnr == 0.0);
  }
  SECTION("all-zero truth leaves fnr undefined") {
    const Metrics m = compute_metrics(vec({0, 0}), vec({0, 0}));
    REQUIRE(m.exact);
    REQUIRE(m.fpr.has_value());
    REQUIRE_FALSE(m.fnr.has_value());
  }
  SECTION("all-one truth leaves fpr undefined") {
    const Metrics m = compute_metrics(vec({1, 1}), vec({1, 1}));
    REQUIRE(m.exact);
    REQUIRE_FALSE(m.fpr.has_value());
    REQUIRE(m.fnr.has_value());
  }
  SECTION("exact iff both defined rates vanish") {
    const Metrics m = compute_metrics(vec({1, 0, 0, 1}), vec({1, 0, 0, 1}));
    REQUIRE((m.exact == (*m.fpr == 0.0 && *m.fnr == 0.0)));
  }
  SECTION("argument validation") {
    REQUIRE_THROWS_AS(compute_metrics(vec({1, 0}), vec({1, 0, 0})), std::invalid_argument);
    REQUIRE_THROWS_AS(compute_metrics(vec({1, 0}), vec({1, 2})), std::invalid_argument);
  }
}

TEST_CASE("signal-to-noise ratio in decibels") {
  REQUIRE_THAT(snr_db(50, 20, 0.05), Catch::Matchers::WithinAbs(30.0, 1e-12));
  REQUIRE_THAT(snr_db(10, 50, 0.05),
               Catch::Matchers::WithinAbs(10.0 * std::log10(80.0), 1e-12));
  const double eta = 0.03, m = 7.0;
  REQUIRE_THAT(snr_db(m * eta * eta, m, eta), Catch::Matchers::WithinAbs(0.0, 1e-12));
  REQUIRE_THROWS_AS(snr_db(0.0, 20, 0.05), std::invalid_argument);
  REQUIRE_THROWS_AS(snr_db(10, -1.0, 0.05), std::invalid_argument);
  REQUIRE_THROWS_AS(snr_db(10, 20, 0.0), std::invalid_argument);
}

TEST_CASE("brute-force enumeration") {
  SECTION("powers of two decode uniquely") {
    Instance inst;
    inst.n = 6;
    inst.m = 1;
    inst.A.resize(1, 6);
    for (int j = 0; j < 6; ++j) inst.A(0, j) = double(1 << j);
    inst.y = Eigen::VectorXd::Constant(1, 21.0);
    const auto sols = brute_force_solve(inst);
    REQUIRE(sols.size() == 1);
    Eigen::VectorXi want(6);
    want << 1, 0, 1, 0, 1, 0;  // 21 = 1 + 4 + 16
    REQUIRE(sols[0] == want);
    REQUIRE(check_uniqueness(inst));
  }
  SECTION("symmetric row yields both solutions in sorted order") {
    Instance inst;
    inst.n = 2;
    inst.m = 1;
    inst.A.resize(1, 2);
    inst.A << 1.0, 1.0;
    inst.y = Eigen::VectorXd::Constant(1, 1.0);
    const auto sols = brute_force_solve(inst);
    REQUIRE(sols.size() == 2);
    REQUIRE(sols[0][0] == 0);
    REQUIRE(sols[0][1] == 1);
    REQUIRE(sols[1][0] == 1);
    REQUIRE(sols[1][1] == 0);
    REQUIRE_FALSE(check_uniqueness(inst));
  }
  SECTION("unreachable measurement gives the empty set") {
    Instance inst;
    inst.n = 2;
    inst.m = 1;
    inst.A.resize(1, 2);
    inst.A << 1.0, 1.0;
    inst.y = Eigen::VectorXd::Constant(1, 3.0);
    REQUIRE(brute_force_solve(inst).empty());
  }
  SECTION("noise band admits nearby points") {
    Instance inst = generate_instance(8, 3, 4, {0.02, NoiseDistribution::uniform}, 55);
    const auto sols = brute_force_solve(inst);
    bool truth_found = false;
    for (const auto& s : sols) truth_found = truth_found || (s == *inst.x_true);
    REQUIRE(truth_found);
  }
  SECTION("enumeration guard") {
    const Instance inst = generate_instance(30, 3, 5, {}, 1);
    REQUIRE_THROWS_AS(brute_force_solve(inst), std::invalid_argument);
    REQUIRE_NOTHROW(brute_force_solve(generate_instance(10, 2, 5, {}, 1), 10));
  }
  SECTION("random gaussian instances are almost surely unique") {
    REQUIRE(check_uniqueness(generate_instance(10, 2, 4, {}, 123)));
  }
}
