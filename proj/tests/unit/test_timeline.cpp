#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "oracles.hpp"
#include "support/traces.hpp"
#include "survband/timeline.hpp"

using namespace survband;

namespace {

Vector cov3(double a = 1.0, double b = 2.0, double c = 3.0) {
  Vector s(3);
  s << a, b, c;
  return s;
}

SubjectRecord logged(std::int64_t id, double entry, double C, double R, bool event) {
  return SubjectRecord::logged(id, entry, cov3(), 0, C, R, event);
}

}  // namespace

TEST_SUITE("timeline") {

TEST_CASE("simulated record takes min of event and censoring") {
  const auto a = SubjectRecord::simulated(1, 0.0, cov3(), 0, 2.0, 3.0);
  CHECK(a.observed_time == 2.0);
  CHECK(a.event);
  const auto b = SubjectRecord::simulated(2, 0.0, cov3(), 0, 4.0, 3.0);
  CHECK(b.observed_time == 3.0);
  CHECK_FALSE(b.event);
  const auto tie = SubjectRecord::simulated(3, 0.0, cov3(), 0, 3.0, 3.0);
  CHECK(tie.event);
}

TEST_CASE("enroll at time zero reveals nothing") {
  Timeline tl(3);
  tl.enroll(logged(1, 0.0, 5.0, 2.0, true));
  CHECK(tl.size() == 1);
  CHECK(tl.revealed_count() == 0);
  CHECK(tl.events().empty());
}

TEST_CASE("out-of-order entry is rejected") {
  Timeline tl(3);
  tl.advance_to(5.0);
  CHECK_THROWS_AS(tl.enroll(logged(1, 3.0, 5.0, 2.0, true)), TimelineError);
}

TEST_CASE("duplicate ids and bad records are rejected") {
  Timeline tl(3);
  tl.enroll(logged(7, 0.0, 5.0, 2.0, true));
  CHECK_THROWS_AS(tl.enroll(logged(7, 1.0, 5.0, 2.0, true)), TimelineError);
  CHECK_THROWS_AS(tl.enroll(SubjectRecord::logged(8, 1.0, Vector::Ones(2), 0, 5.0, 2.0, true)),
                  TimelineError);
  CHECK_THROWS_AS(tl.enroll(logged(9, 1.0, 5.0, 6.0, true)), TimelineError);
  CHECK_THROWS_AS(tl.enroll(logged(10, 1.0, 5.0, 4.0, false)), TimelineError);
  CHECK_THROWS_AS(tl.enroll(logged(11, 1.0, 0.0, 0.0, false)), TimelineError);
  CHECK(tl.size() == 1);
}

TEST_CASE("advance_to rejects the past") {
  Timeline tl(3);
  tl.advance_to(2.0);
  CHECK_THROWS_AS(tl.advance_to(1.0), TimelineError);
}

TEST_CASE("reveal happens exactly at entry plus R") {
  Timeline tl(3);
  tl.enroll(logged(1, 0.0, 5.0, 2.0, true));
  CHECK(tl.advance_to(1.0).empty());
  const auto got = tl.advance_to(2.0);
  REQUIRE(got.size() == 1);
  CHECK(got[0] == 0);
  REQUIRE(tl.events().size() == 1);
  CHECK(tl.events()[0].time == 2.0);
  CHECK(tl.revealed(0));
}

TEST_CASE("censored subjects are revealed but add no event") {
  Timeline tl(3);
  tl.enroll(logged(1, 0.0, 3.0, 3.0, false));
  tl.advance_to(3.0);
  CHECK(tl.revealed(0));
  CHECK(tl.events().empty());
}

TEST_CASE("risk set examples") {
  Timeline empty(3);
  CHECK(empty.risk_set(0.0, 0.0).empty());

  Timeline tl(3);
  tl.enroll(logged(1, 0.0, 10.0, 10.0, false));
  tl.advance_to(5.0);
  CHECK(tl.risk_set(5.0, 3.0) == std::vector<SubjectIndex>{0});
  CHECK(tl.risk_set(5.0, 6.0).empty());
  CHECK_THROWS_AS(tl.risk_set(6.0, 1.0), TimelineError);
}

TEST_CASE("risk_set_delta examples") {
  Timeline tl(3);
  tl.enroll(logged(1, 0.0, 1.0, 1.0, true));
  tl.advance_to(2.0);
  CHECK(tl.risk_set_delta(2.0, 2.0).empty());
  tl.advance_to(3.0);
  CHECK(tl.risk_set_delta(2.0, 3.0).empty());

  tl.enroll(logged(2, 3.0, 100.0, 50.0, true));
  tl.advance_to(4.5);
  const auto delta = tl.risk_set_delta(3.0, 4.5);
  REQUIRE(delta.size() == 1);
  CHECK(delta[0].subject == 1);
  CHECK(delta[0].lo == 0.0);
  CHECK(delta[0].hi == doctest::Approx(1.5));
  CHECK_THROWS_AS(tl.risk_set_delta(4.0, 3.0), TimelineError);
  CHECK_THROWS_AS(tl.risk_set_delta(3.0, 5.0), TimelineError);
}

TEST_CASE("simultaneous arrivals keep enrollment order") {
  Timeline tl(3);
  tl.enroll(logged(5, 1.0, 2.0, 1.0, true));
  tl.enroll(logged(3, 1.0, 2.0, 1.0, true));
  tl.advance_to(2.0);
  REQUIRE(tl.events().size() == 2);
  CHECK(tl.events()[0].subject == 0);
  CHECK(tl.events()[1].subject == 1);
}

TEST_CASE("events_per_arm counts revealed events only") {
  Timeline tl(3);
  tl.enroll(SubjectRecord::logged(1, 0.0, cov3(), 1, 5.0, 1.0, true));
  tl.enroll(SubjectRecord::logged(2, 0.0, cov3(), 0, 5.0, 4.0, true));
  tl.enroll(SubjectRecord::logged(3, 0.0, cov3(), 1, 5.0, 5.0, false));
  tl.advance_to(2.0);
  CHECK(tl.events_per_arm(2) == std::vector<std::size_t>{0, 1});
  tl.advance_to(5.0);
  CHECK(tl.events_per_arm(2) == std::vector<std::size_t>{1, 1});
}

TEST_CASE("snapshot round-trips exactly") {
  const auto subs = testing_support::random_trace(11, {.subjects = 40});
  Timeline tl(3);
  for (const auto& r : subs) tl.enroll(r);
  tl.advance_to(tl.now() + 0.37);
  std::stringstream ss;
  tl.write_snapshot(ss);
  const Timeline back = Timeline::read_snapshot(ss);
  REQUIRE(back.size() == tl.size());
  CHECK(back.now() == tl.now());
  for (SubjectIndex i = 0; i < tl.size(); ++i) {
    const auto& a = tl.subject(i);
    const auto& b = back.subject(i);
    CHECK(a.id == b.id);
    CHECK(a.entry_time == b.entry_time);
    CHECK(a.covariates == b.covariates);
    CHECK(a.observed_time == b.observed_time);
    CHECK(a.latent_event_time == b.latent_event_time);
    CHECK(a.event == b.event);
    CHECK(tl.revealed(i) == back.revealed(i));
  }
  CHECK(back.events().size() == tl.events().size());
}

TEST_CASE("snapshot reader reports the bad line") {
  std::stringstream ss("# survband-timeline d=1 now=1\n1 0 0.5 0 2 - 1 1 0\n2 0 x 0 2 - 1 1 0\n");
  try {
    Timeline::read_snapshot(ss);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("revealed set matches brute force on 20-subject traces") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto subs = testing_support::random_trace(seed, {.subjects = 20});
    Timeline tl(3);
    for (std::size_t k = 0; k < subs.size(); ++k) {
      tl.enroll(subs[k]);
      for (std::size_t i = 0; i <= k; ++i) {
        CHECK(tl.revealed(i) == oracle::revealed(subs[i], tl.now()));
      }
    }
  }
}

}  // TEST_SUITE
