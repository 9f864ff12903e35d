#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "dbe/reward_laws.hpp"
#include "dbe/rng.hpp"
#include "helpers.hpp"

using namespace dbe;

namespace {

std::vector<RewardLaw> all_variants() {
  return {
      point_mass(3.5),
      RewardLaw(DiscreteAtoms{{{-1.0, 0.25}, {0.0, 0.5}, {2.0, 0.25}}}),
      RewardLaw(Uniform{-1.0, 2.0}),
      RewardLaw(Normal{0.5, 1.5}),
      RewardLaw(Exponential{2.0, +1}),
      RewardLaw(Exponential{0.7, -1}),
      RewardLaw(TwoSidedPareto{1.5, 2.0, 0.3}),
      RewardLaw(Cauchy{-0.5, 1.2}),
      RewardLaw(SuperHeavy{std::numbers::e}),
      make_mixture({0.4, 0.6}, {RewardLaw(Uniform{0.0, 1.0}), RewardLaw(Normal{2.0, 0.5})}),
  };
}

}  // namespace

TEST_CASE("construction validates parameters") {
  CHECK_THROWS_AS(RewardLaw(Normal{0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(RewardLaw(Uniform{1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(RewardLaw(DiscreteAtoms{{{0.0, 0.5}, {0.0, 0.5}}}), std::invalid_argument);
  CHECK_THROWS_AS(RewardLaw(DiscreteAtoms{{{0.0, 0.6}, {1.0, 0.6}}}), std::invalid_argument);
  CHECK_THROWS_AS(RewardLaw(TwoSidedPareto{0.0, 1.0, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(RewardLaw(SuperHeavy{2.0}), std::invalid_argument);
  CHECK_THROWS_AS(RewardLaw(Exponential{1.0, 2}), std::invalid_argument);
}

TEST_CASE("point mass sampling and cdf") {
  RngStream rng(1);
  const RewardLaw l = point_mass(3.5);
  for (int i = 0; i < 10; ++i) CHECK(sample(l, rng) == 3.5);
  CHECK(cdf(point_mass(0.0), -1.0) == 0.0);
  CHECK(cdf(point_mass(0.0), 0.0) == 1.0);
}

TEST_CASE("discrete sampling: mean of fair bernoulli within binomial CI") {
  RngStream rng(2);
  const RewardLaw l = testing::fair_bernoulli();
  double sum = 0.0;
  constexpr int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double x = sample(l, rng);
    REQUIRE((x == 0.0 || x == 1.0));
    sum += x;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.01);  // 6 sigma ~ 0.0095
}

TEST_CASE("pareto sampling: exact tail frequency") {
  RngStream rng(3);
  const RewardLaw l{TwoSidedPareto{1.0, 1.0, 1.0}};
  int above10 = 0;
  constexpr int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double x = sample(l, rng);
    REQUIRE(x >= 1.0);
    if (x > 10.0) ++above10;
  }
  CHECK(std::abs(above10 / double(n) - 0.1) < 0.01);  // exact tail q(scale/x)^alpha = 0.1
}

TEST_CASE("cdf examples") {
  CHECK(cdf(RewardLaw(Uniform{0.0, 2.0}), 1.0) == doctest::Approx(0.5));
  CHECK(upper_tail(RewardLaw(TwoSidedPareto{2.0, 1.0, 0.5}), 10.0) == doctest::Approx(0.005));
}

TEST_CASE("cdf + upper_tail = 1 across variants and abscissae") {
  for (const RewardLaw& l : all_variants()) {
    for (double x : {-1e5, -17.3, -1.0, -0.1, 0.0, 0.1, 1.0, 3.5, 17.3, 1e5}) {
      CHECK(std::abs(cdf(l, x) + upper_tail(l, x) - 1.0) <= 1e-14);
    }
  }
}

TEST_CASE("sampling consistency: empirical CDF within DKW band of cdf") {
  // KS <= 0.01 at n = 1e5 holds with probability >> 0.999 by DKW.
  constexpr int n = 100000;
  std::uint64_t salt = 100;
  for (const RewardLaw& l : all_variants()) {
    RngStream rng(salt++);
    std::vector<double> draws(n);
    for (int i = 0; i < n; ++i) draws[i] = sample(l, rng);
    const EmpiricalDistribution emp(std::move(draws));
    const double ks =
        testing::ks_vs_cdf(emp, [&](double x) { return cdf(l, x); },
                           [&](double x) { return lower_tail(l, -x); });  // F(x-) = P[R < x]
    INFO("variant index ", salt - 101);
    CHECK(ks <= 0.01);
  }
}

TEST_CASE("quantile/cdf roundtrip on continuous variants") {
  const std::vector<RewardLaw> laws = {
      RewardLaw(Uniform{-1.0, 2.0}),      RewardLaw(Normal{0.5, 1.5}),
      RewardLaw(Exponential{2.0, +1}),    RewardLaw(TwoSidedPareto{1.5, 2.0, 0.3}),
      RewardLaw(Cauchy{-0.5, 1.2}),       RewardLaw(SuperHeavy{std::numbers::e}),
      make_mixture({0.5, 0.5}, {RewardLaw(Normal{0.0, 1.0}), RewardLaw(Uniform{2.0, 3.0})}),
  };
  for (const RewardLaw& l : laws) {
    for (double u = 0.01; u < 1.0; u += 0.01) {
      CHECK(cdf(l, quantile(l, u)) == doctest::Approx(u).epsilon(1e-6));
    }
  }
}

TEST_CASE("moment profiles") {
  const MomentProfile pm = moment_profile(point_mass(5.0));
  CHECK(pm.log_moment_finite);
  CHECK(pm.p_moment_sup.value == kInf);
  CHECK(pm.exp_moment_beta_sup.value == kInf);

  const MomentProfile cauchy = moment_profile(RewardLaw(Cauchy{0.0, 1.0}));
  CHECK(cauchy.log_moment_finite);  // integral comparison: log grows slower than any power
  CHECK(cauchy.p_moment_sup.value == 1.0);
  CHECK_FALSE(cauchy.p_moment_sup.inclusive);
  CHECK(cauchy.exp_moment_beta_sup.value == 0.0);

  const MomentProfile sh = moment_profile(RewardLaw(SuperHeavy{std::numbers::e}));
  CHECK_FALSE(sh.log_moment_finite);  // E log+|R| = int_1^inf dy/y = inf

  const MomentProfile expo = moment_profile(RewardLaw(Exponential{2.0, +1}));
  CHECK(expo.exp_moment_beta_sup.value == 2.0);
  CHECK_FALSE(expo.exp_moment_beta_sup.inclusive);
  CHECK(expo.p_moment_sup.value == kInf);

  const MomentProfile normal = moment_profile(RewardLaw(Normal{0.0, 1.0}));
  CHECK(normal.exp_moment_beta_sup.value == kInf);

  // profile invariants across all variants
  for (const RewardLaw& l : all_variants()) {
    const MomentProfile p = moment_profile(l);
    if (p.exp_moment_beta_sup.value > 0.0) CHECK(p.p_moment_sup.value == kInf);
    if (p.p_moment_sup.value > 0.0) CHECK(p.log_moment_finite);
  }
}

TEST_CASE("superheavy log-moment divergence is visible in samples") {
  // P[log|R| > y] = 1/y: the sample mean of log|R| over n draws grows ~ log n.
  RngStream rng(11);
  const RewardLaw l{SuperHeavy{std::numbers::e}};
  double acc = 0.0;
  for (int i = 0; i < 10000; ++i) acc += std::log(std::abs(sample(l, rng)));
  CHECK(acc / 10000 > 2.0);  // a finite-log-moment law would settle near E[log|R|]
}

TEST_CASE("reg_var descriptors") {
  const auto pareto = reg_var(RewardLaw(TwoSidedPareto{1.0, 1.0, 1.0}), 1.0);
  REQUIRE(pareto.has_value());
  CHECK(pareto->alpha == 1.0);
  CHECK(pareto->c == doctest::Approx(1.0));
  CHECK(pareto->q == doctest::Approx(1.0));

  const auto pm = reg_var(point_mass(7.0), 1.0);
  REQUIRE(pm.has_value());
  CHECK(pm->c == 0.0);
  CHECK(reg_var(point_mass(7.0), 3.7)->c == 0.0);  // c = 0 for any alpha

  const auto cauchy = reg_var(RewardLaw(Cauchy{0.0, 1.0}), 1.0);
  REQUIRE(cauchy.has_value());
  CHECK(cauchy->c == doctest::Approx(2.0 / std::numbers::pi));  // arctan expansion
  CHECK(cauchy->q == doctest::Approx(0.5));

  CHECK_FALSE(reg_var(RewardLaw(SuperHeavy{std::numbers::e}), 1.0).has_value());
  // heavier than requested index
  CHECK_FALSE(reg_var(RewardLaw(TwoSidedPareto{0.5, 1.0, 0.5}), 1.0).has_value());
  // lighter than requested index
  CHECK(reg_var(RewardLaw(TwoSidedPareto{2.0, 1.0, 0.5}), 1.0)->c == 0.0);

  const auto scaled = reg_var(RewardLaw(TwoSidedPareto{2.0, 3.0, 0.25}), 2.0);
  REQUIRE(scaled.has_value());
  CHECK(scaled->c == doctest::Approx(9.0));
  CHECK(scaled->q == doctest::Approx(0.25));
}

TEST_CASE("reg_var self-consistency: descriptor matches numeric tails") {
  const std::vector<std::pair<RewardLaw, double>> cases = {
      {RewardLaw(TwoSidedPareto{1.0, 1.0, 1.0}), 1.0},
      {RewardLaw(TwoSidedPareto{2.0, 3.0, 0.25}), 2.0},
      {RewardLaw(Cauchy{0.0, 1.0}), 1.0},
      {RewardLaw(Cauchy{0.0, 2.5}), 1.0},
      {make_mixture({0.5, 0.5},
                    {RewardLaw(TwoSidedPareto{1.0, 1.0, 1.0}), RewardLaw(Normal{0.0, 1.0})}),
       1.0},
  };
  for (const auto& [law, alpha] : cases) {
    const auto desc = reg_var(law, alpha);
    REQUIRE(desc.has_value());
    REQUIRE(desc->c > 0.0);
    for (double x : {1e3, 1e4, 1e5}) {
      const double xa = std::pow(x, alpha);
      if (desc->q > 0.0)
        CHECK(xa * upper_tail(law, x) / desc->q == doctest::Approx(desc->c).epsilon(0.01));
      if (desc->q < 1.0)
        CHECK(xa * lower_tail(law, x) / (1.0 - desc->q) == doctest::Approx(desc->c).epsilon(0.01));
    }
  }
}

TEST_CASE("means") {
  CHECK(*mean(RewardLaw(Uniform{0.0, 2.0})) == doctest::Approx(1.0));
  CHECK_FALSE(mean(RewardLaw(Cauchy{0.0, 1.0})).has_value());
  CHECK_FALSE(mean(RewardLaw(SuperHeavy{std::numbers::e})).has_value());
  CHECK_FALSE(mean(RewardLaw(TwoSidedPareto{1.0, 1.0, 1.0})).has_value());  // alpha <= 1
  // int_1^inf x * 2 x^-3 dx = 2
  CHECK(*mean(RewardLaw(TwoSidedPareto{2.0, 1.0, 1.0})) == doctest::Approx(2.0));
  CHECK(*mean(RewardLaw(Exponential{2.0, -1})) == doctest::Approx(-0.5));
  CHECK(*mean(make_mixture({0.5, 0.5}, {point_mass(0.0), point_mass(2.0)})) ==
        doctest::Approx(1.0));
}

TEST_CASE("mixture simplification merges discrete parts") {
  const RewardLaw merged = make_mixture({0.5, 0.5}, {point_mass(0.0), point_mass(2.0)});
  REQUIRE(merged.is<DiscreteAtoms>());
  const auto& atoms = merged.as<DiscreteAtoms>().atoms;
  REQUIRE(atoms.size() == 2);
  CHECK(atoms[0].value == 0.0);
  CHECK(atoms[0].prob == doctest::Approx(0.5));
  CHECK(atoms[1].value == 2.0);

  const RewardLaw single = make_mixture({1.0}, {point_mass(3.0)});
  CHECK(single.is<PointMass>());

  // equal values merge
  const RewardLaw same = make_mixture({0.5, 0.5}, {point_mass(1.0), point_mass(1.0)});
  CHECK(same.is<PointMass>());
}

TEST_CASE("reward_atoms: exact for discrete, mass-preserving for continuous") {
  const auto pm = reward_atoms(point_mass(2.0), 64);
  REQUIRE(pm.size() == 1);
  CHECK(pm[0].value == 2.0);
  CHECK(pm[0].prob == 1.0);

  const auto uni = reward_atoms(RewardLaw(Uniform{0.0, 1.0}), 64);
  REQUIRE(uni.size() == 64);
  double mass = 0.0, mean_acc = 0.0;
  for (const Atom& a : uni) {
    mass += a.prob;
    mean_acc += a.prob * a.value;
  }
  CHECK(mass == doctest::Approx(1.0));
  CHECK(mean_acc == doctest::Approx(0.5).epsilon(1e-6));  // midpoint rule is mean-exact here

  const auto mix = reward_atoms(
      make_mixture({0.25, 0.75}, {point_mass(1.0), RewardLaw(Uniform{0.0, 1.0})}), 16);
  double mix_mass = 0.0;
  for (const Atom& a : mix) mix_mass += a.prob;
  CHECK(mix_mass == doctest::Approx(1.0));
}

TEST_CASE("abs bound and support bounds") {
  CHECK(*abs_bound(RewardLaw(Uniform{-3.0, 1.0})) == 3.0);
  CHECK_FALSE(abs_bound(RewardLaw(Normal{0.0, 1.0})).has_value());
  const auto sb = support_bounds(RewardLaw(DiscreteAtoms{{{-1.0, 0.5}, {4.0, 0.5}}}));
  REQUIRE(sb.has_value());
  CHECK(sb->first == -1.0);
  CHECK(sb->second == 4.0);
}
