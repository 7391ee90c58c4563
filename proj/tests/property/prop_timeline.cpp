#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "oracles.hpp"
#include "property.hpp"
#include "support/traces.hpp"

using namespace survband;
using testing_support::random_trace;

namespace {

// Enrolls the whole trace, then returns a timeline advanced past the last entry.
Timeline enrolled(const std::vector<SubjectRecord>& subs, double extra) {
  Timeline tl(3);
  for (const auto& r : subs) tl.enroll(r);
  tl.advance_to(tl.now() + extra);
  return tl;
}

std::vector<SubjectRecord> trace_for(int k, std::uint64_t id) {
  std::mt19937_64 pick(property::seed(id, k));
  const std::size_t n = 5 + pick() % 60;
  const double grid = (k % 3 == 0) ? 0.5 : 0.0;
  return random_trace(property::seed(id, k), {.subjects = n, .censor_scale = 2.0, .grid = grid});
}

}  // namespace

TEST_SUITE("property-timeline") {

TEST_CASE("revelation is monotone in calendar time") {
  for (int k = 0; k < property::kCases; ++k) {
    const auto subs = trace_for(k, 1);
    Timeline tl(3);
    std::set<SubjectIndex> seen;
    for (const auto& r : subs) {
      tl.enroll(r);
      for (SubjectIndex i : seen) REQUIRE(tl.revealed(i));
      for (SubjectIndex i = 0; i < tl.size(); ++i) {
        if (tl.revealed(i)) seen.insert(i);
      }
    }
    for (double step : {0.25, 1.0, 4.0, 100.0}) {
      tl.advance_to(tl.now() + step);
      for (SubjectIndex i : seen) REQUIRE(tl.revealed(i));
      for (SubjectIndex i = 0; i < tl.size(); ++i) {
        if (tl.revealed(i)) seen.insert(i);
      }
    }
    REQUIRE(seen.size() == tl.size());
  }
}

TEST_CASE("revealed and pending partition the enrolled subjects") {
  for (int k = 0; k < property::kCases; ++k) {
    const auto subs = trace_for(k, 2);
    Timeline tl(3);
    for (const auto& r : subs) {
      tl.enroll(r);
      std::vector<char> mark(tl.size(), 0);
      for (SubjectIndex i : tl.pending()) {
        REQUIRE_FALSE(tl.revealed(i));
        ++mark[i];
      }
      std::size_t revealed = 0;
      for (SubjectIndex i = 0; i < tl.size(); ++i) {
        if (tl.revealed(i)) {
          ++mark[i];
          ++revealed;
        }
        REQUIRE(mark[i] == 1);
        REQUIRE(tl.revealed(i) == oracle::revealed(tl.subject(i), tl.now()));
      }
      REQUIRE(revealed == tl.revealed_count());
    }
  }
}

TEST_CASE("risk sets match the definition and are monotone") {
  for (int k = 0; k < property::kCases; ++k) {
    const auto subs = trace_for(k, 3);
    const Timeline tl = enrolled(subs, 3.0);
    std::mt19937_64 rng(property::seed(3, k));
    std::uniform_real_distribution<double> tau_d(0.0, tl.now());
    std::uniform_real_distribution<double> s_d(0.0, 5.0);
    for (int q = 0; q < 10; ++q) {
      const double t1 = tau_d(rng);
      const double t2 = std::min(tl.now(), t1 + s_d(rng));
      const double s1 = s_d(rng);
      const double s2 = s1 + s_d(rng);
      const auto r11 = tl.risk_set(t1, s1);
      REQUIRE(r11 == oracle::risk_set(tl.subjects(), t1, s1));
      const auto r21 = tl.risk_set(t2, s1);
      const auto r12 = tl.risk_set(t1, s2);
      REQUIRE(std::includes(r21.begin(), r21.end(), r11.begin(), r11.end()));
      REQUIRE(std::includes(r11.begin(), r11.end(), r12.begin(), r12.end()));
    }
  }
}

TEST_CASE("risk-set delta reproduces the later risk set") {
  for (int k = 0; k < property::kCases; ++k) {
    const auto subs = trace_for(k, 4);
    Timeline tl(3);
    std::mt19937_64 rng(property::seed(4, k));
    std::uniform_real_distribution<double> s_d(0.0, 4.0);
    double from = 0.0;
    for (const auto& r : subs) {
      tl.enroll(r);
      const double to = tl.now();
      const auto delta = tl.risk_set_delta(from, to);
      for (int q = 0; q < 3; ++q) {
        const double s = s_d(rng);
        std::vector<SubjectIndex> rebuilt = oracle::risk_set(tl.subjects().first(tl.size()), from, s);
        for (const auto& inc : delta) {
          REQUIRE(inc.lo <= inc.hi);
          if (s > inc.lo && s <= inc.hi) rebuilt.push_back(inc.subject);
        }
        std::sort(rebuilt.begin(), rebuilt.end());
        rebuilt.erase(std::unique(rebuilt.begin(), rebuilt.end()), rebuilt.end());
        REQUIRE(rebuilt == tl.risk_set(to, s));
      }
      from = to;
    }
  }
}

TEST_CASE("every revealed event lies in its own risk set") {
  for (int k = 0; k < property::kCases; ++k) {
    const auto subs = trace_for(k, 5);
    const Timeline tl = enrolled(subs, 1.5);
    double prev = -1.0;
    for (const auto& ev : tl.events()) {
      REQUIRE(ev.time >= prev);
      prev = ev.time;
      REQUIRE(tl.subject(ev.subject).event);
      const auto rs = tl.risk_set(tl.now(), ev.time);
      REQUIRE(std::binary_search(rs.begin(), rs.end(), ev.subject));
    }
  }
}

}  // TEST_SUITE
