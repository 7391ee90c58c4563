#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "support/traces.hpp"
#include "survband/coxph.hpp"
#include "survband/incremental.hpp"

using namespace survband;
using testing_support::random_trace;

namespace {

const FeatureMap kFmap(3, 2);

Vector v3(double a, double b, double c) {
  Vector s(3);
  s << a, b, c;
  return s;
}

Timeline enroll_all(const std::vector<SubjectRecord>& subs, double extra = 0.0) {
  Timeline tl(3);
  for (const auto& r : subs) tl.enroll(r);
  tl.advance_to(tl.now() + extra);
  return tl;
}

Vector beta6(double a, double b, double c, double d, double e, double f) {
  Vector v(6);
  v << a, b, c, d, e, f;
  return v;
}

}  // namespace

TEST_SUITE("coxph") {

TEST_CASE("no events gives zero loglik, score and information") {
  Timeline tl(3);
  tl.enroll(SubjectRecord::logged(1, 0.0, v3(1, 2, 3), 0, 5.0, 5.0, false));
  tl.advance_to(1.0);
  const Vector b = beta6(0.1, 0.2, 0.3, 0.4, 0.5, 0.6);
  CHECK(log_partial_likelihood(tl, kFmap, b) == 0.0);
  CHECK(score(tl, kFmap, b).isZero());
  CHECK(information(tl, kFmap, b).isZero());
  CHECK_THROWS_AS(fit(tl, kFmap, Vector::Zero(6), SolverConfig{}), CoxError);
  try {
    fit(tl, kFmap, Vector::Zero(6), SolverConfig{});
  } catch (const CoxError& e) {
    CHECK(e.kind() == CoxError::Kind::InsufficientData);
  }
}

TEST_CASE("one event at beta zero gives -log n") {
  Timeline tl(3);
  tl.enroll(SubjectRecord::logged(1, 0.0, v3(1, 2, 3), 0, 5.0, 1.0, true));
  for (int k = 2; k <= 5; ++k) {
    tl.enroll(SubjectRecord::logged(k, 0.0, v3(k, 0, 1), k % 2, 5.0, 5.0, false));
  }
  tl.advance_to(2.0);
  CHECK(log_partial_likelihood(tl, kFmap, Vector::Zero(6)) == doctest::Approx(-std::log(5.0)));
  // Breslow: S0(1) = exp(-1/5), and 1 before the first event.
  CHECK(breslow_baseline(tl, kFmap, Vector::Zero(6), 1.0) == doctest::Approx(std::exp(-0.2)));
  CHECK(breslow_baseline(tl, kFmap, Vector::Zero(6), 0.5) == 1.0);
}

TEST_CASE("self-only risk set: zero score, fit keeps the warm start") {
  Timeline tl(3);
  tl.enroll(SubjectRecord::logged(1, 0.0, v3(1, 2, 3), 1, 2.0, 1.0, true));
  tl.advance_to(1.0);
  const Vector warm = beta6(0.3, -0.1, 0.2, 0.0, 0.5, 1.0);
  CHECK(score(tl, kFmap, warm).isZero());
  const CoxState st = fit(tl, kFmap, warm, SolverConfig{});
  CHECK(st.converged);
  CHECK(st.newton_iters == 0);
  CHECK(st.beta == warm);
}

TEST_CASE("two-point risk set information at beta zero") {
  const FeatureMap one(3, 1);
  const Vector x1 = v3(1.0, -2.0, 0.5);
  const Vector x2 = v3(3.0, 1.0, -1.0);
  Timeline tl(3);
  tl.enroll(SubjectRecord::logged(1, 0.0, x1, 0, 3.0, 1.0, true));
  tl.enroll(SubjectRecord::logged(2, 0.0, x2, 0, 3.0, 3.0, false));
  tl.advance_to(1.0);
  const Matrix want = 0.25 * (x1 - x2) * (x1 - x2).transpose();
  CHECK((information(tl, one, Vector::Zero(3)) - want).norm() < 1e-14);
}

TEST_CASE("NaN or wrong-length beta is rejected") {
  const auto tl = enroll_all(random_trace(1, {.subjects = 10}), 5.0);
  Vector b = Vector::Zero(6);
  b[2] = std::nan("");
  CHECK_THROWS_AS(log_partial_likelihood(tl, kFmap, b), CoxError);
  CHECK_THROWS_AS(log_partial_likelihood(tl, kFmap, Vector::Zero(5)), CoxError);
}

TEST_CASE("loglik, score and information match the double-loop oracle") {
  Rng rng(5);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto subs = random_trace(seed, {.subjects = 20, .grid = seed % 2 ? 0.25 : 0.0});
    const auto tl = enroll_all(subs, 0.5);
    const Vector b = testing_support::random_beta(rng, 6, 0.5);
    const auto want = oracle::cox(subs, 2, tl.now(), b);
    CHECK(oracle::rel_err(log_partial_likelihood(tl, kFmap, b), want.loglik) < 1e-10);
    CHECK(oracle::rel_err(score(tl, kFmap, b), want.score) < 1e-10);
    CHECK(oracle::rel_err(information(tl, kFmap, b), want.info) < 1e-10);
  }
}

TEST_CASE("score and information match finite differences") {
  Rng rng(6);
  const auto subs = random_trace(77, {.subjects = 60});
  const auto tl = enroll_all(subs, 1.0);
  const Vector b = testing_support::random_beta(rng, 6, 0.3);
  const auto ll = [&](const Vector& x) { return log_partial_likelihood(tl, kFmap, x); };
  const auto sc = [&](const Vector& x) { return score(tl, kFmap, x); };
  CHECK(oracle::rel_err(score(tl, kFmap, b), oracle::fd_gradient(ll, b, 1e-6)) < 1e-5);
  CHECK(oracle::rel_err(information(tl, kFmap, b), Matrix(-oracle::fd_jacobian(sc, b, 1e-5))) <
        1e-4);
}

TEST_CASE("fit agrees with a textbook Newton fit") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto subs = random_trace(100 + seed, {.subjects = 40});
    const auto tl = enroll_all(subs, 20.0);
    const CoxState st = fit(tl, kFmap, Vector::Zero(6), SolverConfig{});
    if (!st.converged) continue;  // monotone likelihood in a tiny sample
    const Vector want = oracle::newton(subs, 2, tl.now(), Vector::Zero(6));
    CHECK((st.beta - want).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(st.score_norm <= 1e-8);
  }
}

TEST_CASE("fit with a Gaussian prior maximizes the penalized objective") {
  const auto subs = random_trace(9, {.subjects = 40});
  const auto tl = enroll_all(subs, 5.0);
  const GaussianPrior prior = GaussianPrior::isotropic(6, 2.0);
  const CoxState st = fit(tl, kFmap, Vector::Zero(6), SolverConfig{}, &prior);
  REQUIRE(st.converged);
  const Vector grad = score(tl, kFmap, st.beta) - prior.precision * (st.beta - prior.mean);
  CHECK(grad.norm() < 1e-8);
  CHECK((st.posterior_precision - information(tl, kFmap, st.beta) - prior.precision).norm() <
        1e-10);
}

TEST_CASE("prior-only fit with zero events returns the prior mean") {
  Timeline tl(3);
  tl.enroll(SubjectRecord::logged(1, 0.0, v3(1, 2, 3), 0, 5.0, 5.0, false));
  GaussianPrior prior = GaussianPrior::isotropic(6, 10.0);
  prior.mean = beta6(1, 2, 3, 4, 5, 6);
  const CoxState st = fit(tl, kFmap, Vector::Zero(6), SolverConfig{}, &prior);
  CHECK(st.converged);
  CHECK((st.beta - prior.mean).norm() < 1e-10);
}

TEST_CASE("Breslow recovers the unit baseline hazard") {
  const DgpSpec spec = DgpSpec::simulation_default();
  auto subs = random_trace(2024, {.subjects = 5000, .censor_scale = 5.0});
  const auto tl = enroll_all(subs, 1000.0);
  const double s0 = breslow_baseline(tl, kFmap, spec.true_beta, 1.0);
  const double cumhaz = -std::log(s0);
  CHECK(cumhaz == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("Breslow baseline is nonincreasing") {
  const auto subs = random_trace(4, {.subjects = 200});
  const auto tl = enroll_all(subs, 3.0);
  const RiskIndex index = RiskIndex::build(tl, kFmap);
  std::vector<double> ts;
  for (int k = 0; k <= 40; ++k) ts.push_back(0.05 * k);
  const auto s = breslow_baseline(index, DgpSpec::simulation_default().true_beta, ts);
  for (std::size_t k = 1; k < s.size(); ++k) CHECK(s[k] <= s[k - 1]);
  CHECK(s.front() <= 1.0);
}

TEST_CASE("survival probability arithmetic") {
  const Vector x = v3(1, 2, 3);
  CHECK(survival_prob(1.0, x, v3(5, 5, 5)) == 1.0);
  CHECK(survival_prob(0.3, x, Vector::Zero(3)) == doctest::Approx(0.3));
  CHECK(survival_prob_from_score(0.5, std::log(2.0)) == doctest::Approx(0.25));
}

TEST_CASE("EPV gate needs d0 events on every arm") {
  Timeline tl(3);
  SolverConfig cfg;
  for (int k = 0; k < 3; ++k) {
    tl.enroll(SubjectRecord::logged(k, 0.0, v3(1, 1, 1), 0, 5.0, 1.0, true));
  }
  tl.advance_to(1.0);
  CHECK_FALSE(epv_gate_open(tl, kFmap, cfg));
  for (int k = 3; k < 6; ++k) {
    tl.enroll(SubjectRecord::logged(k, 1.0, v3(1, 1, 1), 1, 5.0, 1.0, true));
  }
  tl.advance_to(2.0);
  CHECK(epv_gate_open(tl, kFmap, cfg));
  cfg.epv_gate = 2.0;
  CHECK_FALSE(epv_gate_open(tl, kFmap, cfg));
}

TEST_CASE("refreshed risk index equals a rebuilt one") {
  const auto subs = random_trace(31, {.subjects = 150, .grid = 0.5});
  Timeline tl(3);
  RiskIndex idx(kFmap);
  for (const auto& r : subs) {
    tl.enroll(r);
    idx.refresh(tl);
    const RiskIndex fresh = RiskIndex::build(tl, kFmap);
    REQUIRE(idx.events() == fresh.events());
    CHECK(std::equal(idx.buckets().begin(), idx.buckets().end(), fresh.buckets().begin()));
    CHECK(std::equal(idx.horizons().begin(), idx.horizons().end(), fresh.horizons().begin()));
  }
}

TEST_CASE("naive risk index keeps only revealed subjects") {
  const auto subs = random_trace(8, {.subjects = 60});
  const auto tl = enroll_all(subs, 0.0);
  const Vector b = DgpSpec::simulation_default().true_beta;
  const RiskIndex naive = RiskIndex::build(tl, kFmap, RiskIndex::Mode::RevealedOnly);
  const auto want = oracle::cox(subs, 2, tl.now(), b, true);
  CHECK(oracle::rel_err(evaluate(naive, b).loglik, want.loglik) < 1e-10);
}

}  // TEST_SUITE

TEST_SUITE("incremental") {

TEST_CASE("no new revelations and no pending subjects leave loglik unchanged") {
  Timeline tl(3);
  tl.enroll(SubjectRecord::logged(1, 0.0, v3(1, 2, 3), 0, 2.0, 1.0, true));
  tl.enroll(SubjectRecord::logged(2, 0.0, v3(2, 1, 0), 1, 2.0, 2.0, false));
  tl.advance_to(3.0);
  LoglikCache cache(tl, kFmap, beta6(0.1, 0.2, 0.3, -0.1, 0.0, 0.4));
  const double before = cache.loglik();
  tl.advance_to(4.0);
  const auto up = cache.advance(tl);
  CHECK(up.p1 == 0.0);
  CHECK(up.p2 == 0.0);
  CHECK(cache.loglik() == before);
}

TEST_CASE("a pending subject joining every risk set gives the closed-form P2") {
  const Vector b = beta6(0.1, 0.2, 0.3, -0.1, 0.0, 0.4);
  Timeline tl(3);
  tl.enroll(SubjectRecord::logged(1, 0.0, v3(1, 2, 3), 0, 9.0, 1.0, true));
  tl.enroll(SubjectRecord::logged(2, 0.0, v3(2, 1, 0), 1, 9.0, 2.0, true));
  tl.enroll(SubjectRecord::logged(3, 0.0, v3(0, 1, 1), 0, 9.0, 9.0, false));
  tl.advance_to(3.0);
  tl.enroll(SubjectRecord::logged(4, 3.0, v3(1, 1, 2), 1, 50.0, 50.0, false));
  LoglikCache cache(tl, kFmap, b);
  const std::vector<double> old_logd{cache.events()[0].log_denominator,
                                     cache.events()[1].log_denominator};
  tl.advance_to(6.0);
  const auto up = cache.advance(tl);
  const double w = std::exp(kFmap.linear_score(v3(1, 1, 2), 1, b));
  double want = 0.0;
  for (double ld : old_logd) want += ld - std::log(std::exp(ld) + w);
  CHECK(up.p1 == 0.0);
  CHECK(up.p2 < 0.0);
  CHECK(up.p2 == doctest::Approx(want).epsilon(1e-12));
  CHECK(cache.loglik() == doctest::Approx(log_partial_likelihood(tl, kFmap, b)).epsilon(1e-12));
}

TEST_CASE("incremental loglik tracks from-scratch evaluation") {
  Rng rng(3);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto subs = random_trace(500 + seed, {.subjects = 300});
    const Vector b = testing_support::random_beta(rng, 6, 0.5);
    Timeline tl(3);
    LoglikCache cache(tl, kFmap, b);
    for (const auto& r : subs) {
      tl.enroll(r);
      cache.advance(tl);
      CHECK(oracle::rel_err(cache.loglik(), log_partial_likelihood(tl, kFmap, b)) <= 1e-8);
    }
  }
}

TEST_CASE("cache rejects a timeline that is behind it") {
  const auto subs = random_trace(3, {.subjects = 30});
  const auto ahead = enroll_all(subs, 2.0);
  LoglikCache cache(ahead, kFmap, Vector::Zero(6));
  Timeline behind(3);
  behind.enroll(subs.front());
  try {
    cache.advance(behind);
    FAIL("expected CorruptCache");
  } catch (const CoxError& e) {
    CHECK(e.kind() == CoxError::Kind::CorruptCache);
  }
}

TEST_CASE("online fitter: gate, warm start and strategy agreement") {
  const auto subs = random_trace(12, {.subjects = 250});
  Timeline tl(3);
  OnlineCoxFitter inc(kFmap, SolverConfig{}, FitStrategy::Incremental);
  OnlineCoxFitter ref(kFmap, SolverConfig{}, FitStrategy::RefitScratch);
  bool seen_gate = false;
  for (const auto& r : subs) {
    tl.enroll(r);
    const CoxState* a = inc.refresh(tl);
    const CoxState* b = ref.refresh(tl);
    CHECK((a == nullptr) == !epv_gate_open(tl, kFmap, SolverConfig{}));
    CHECK((a == nullptr) == (b == nullptr));
    if (a != nullptr) {
      seen_gate = true;
      const double floor = SolverConfig{}.min_curvature;
      if (a->converged && b->converged && a->min_curvature >= floor &&
          b->min_curvature >= floor) {
        CHECK((a->beta - b->beta).cwiseAbs().maxCoeff() < 1e-6);
      }
    }
  }
  CHECK(seen_gate);
  CHECK(inc.last_converged() != nullptr);
}

}  // TEST_SUITE
