#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "property.hpp"
#include "support/traces.hpp"
#include "survband/eval.hpp"

using namespace survband;
using testing_support::random_beta;

TEST_SUITE("property-eval") {

TEST_CASE("regret increments are nonnegative and zero at the optimum") {
  Rng rng(property::seed(51, 0));
  for (int k = 0; k < property::kCases; ++k) {
    const int arms = 2 + k % 3;
    const FeatureMap fmap(3, arms);
    const Vector s = random_beta(rng, 3, 2.0);
    const Vector beta = random_beta(rng, 3 * arms, 1.0);
    const double base = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
    const int best = greedy_select(s, beta, fmap).action;
    REQUIRE(pseudo_regret_increment(s, best, beta, fmap) == 0.0);
    REQUIRE(survival_regret_increment(s, best, beta, fmap, base) == 0.0);
    for (int a = 0; a < arms; ++a) {
      const double delta = pseudo_regret_increment(s, a, beta, fmap);
      REQUIRE(delta >= 0.0);
      const double sr = survival_regret_increment(s, a, beta, fmap, base);
      REQUIRE(sr >= 0.0);
      // g(z) = S0^exp(z) has |g'| <= 1/e, so survival regret <= delta / e.
      REQUIRE(sr <= delta / std::exp(1.0) + 1e-12);
    }
  }
}

TEST_CASE("cumulative regret in a simulated run is monotone") {
  for (int k = 0; k < property::kCases; ++k) {
    Rng rng(property::seed(52, k));
    const DgpSpec spec = DgpSpec::simulation_default();
    const FeatureMap fmap = spec.feature_map();
    double cum = 0.0;
    for (int t = 0; t < 50; ++t) {
      const Vector s = draw_covariates(spec, rng);
      const double inc = pseudo_regret_increment(s, static_cast<int>(rng() % 2), spec.true_beta, fmap);
      REQUIRE(cum + inc >= cum);
      cum += inc;
    }
  }
}

TEST_CASE("beta MSE is the sum of squared coordinate errors") {
  Rng rng(property::seed(53, 0));
  for (int k = 0; k < property::kCases; ++k) {
    const Eigen::Index d = 1 + k % 10;
    const Vector a = random_beta(rng, d, 1.0);
    const Vector b = random_beta(rng, d, 1.0);
    double sum = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) sum += (a[j] - b[j]) * (a[j] - b[j]);
    REQUIRE(beta_mse(a, b) == doctest::Approx(sum).epsilon(1e-14));
    REQUIRE(beta_mse(a, b) == beta_mse(b, a));
  }
}

TEST_CASE("naive risk sets are contained in the staggered-entry risk sets") {
  const FeatureMap fmap(3, 2);
  for (int k = 0; k < property::kCases; ++k) {
    const auto subs = testing_support::random_trace(property::seed(54, k),
                                                    {.subjects = 20 + static_cast<std::size_t>(k)});
    Timeline tl(3);
    for (const auto& r : subs) tl.enroll(r);
    const RiskIndex full = RiskIndex::build(tl, fmap);
    const RiskIndex naive = RiskIndex::build(tl, fmap, RiskIndex::Mode::RevealedOnly);
    REQUIRE(full.events() == naive.events());
    for (SubjectIndex j = 0; j < tl.size(); ++j) {
      REQUIRE(naive.buckets()[j] <= full.buckets()[j]);
      if (tl.revealed(j)) REQUIRE(naive.buckets()[j] == full.buckets()[j]);
    }
    const Vector beta = Vector::Zero(6);
    const auto want = oracle::cox(tl.subjects(), 2, tl.now(), beta, true);
    REQUIRE(oracle::rel_err(evaluate(naive, beta).loglik, want.loglik) <= 1e-10);
  }
}

}  // TEST_SUITE
