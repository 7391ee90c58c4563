#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <unordered_set>
#include <utility>
#include <vector>

#include "survband/types.hpp"

namespace survband {

// One enrolled subject. Times on two scales: `entry_time` is calendar time,
// `censor_time` / `observed_time` / `latent_event_time` are survival time
// (elapsed since entry).
struct SubjectRecord {
  std::int64_t id = 0;
  double entry_time = 0.0;
  Vector covariates;
  int action = 0;
  double censor_time = 0.0;
  // Present in simulation; absent for logged data where only (R, delta) exist.
  std::optional<double> latent_event_time;
  double observed_time = 0.0;
  bool event = false;

  // R = min(Y, C), event = (Y <= C).
  static SubjectRecord simulated(std::int64_t id, double entry_time,
                                 Vector covariates, int action,
                                 double latent_event_time, double censor_time);

  static SubjectRecord logged(std::int64_t id, double entry_time,
                              Vector covariates, int action,
                              double censor_time, double observed_time,
                              bool event);
};

// A subject joins the risk sets R(tau, s) for every s in (lo, hi].
struct RiskIncrement {
  SubjectIndex subject = 0;
  double lo = 0.0;
  double hi = 0.0;
};

struct EventRef {
  SubjectIndex subject = 0;
  double time = 0.0;  // survival time of the event, R_i
};

// Two-timescale study state: who has entered, whose outcome is revealed, and
// who is at risk at any (calendar tau, survival s) pair.
//
// A subject's outcome is revealed at calendar tau once tau - entry >= R. The
// same floating-point expression is used by every query so that an event's
// own subject is always a member of its risk set.
class Timeline {
 public:
  explicit Timeline(std::size_t covariate_dim);

  std::size_t covariate_dim() const noexcept { return covariate_dim_; }
  double now() const noexcept { return now_; }
  std::size_t size() const noexcept { return subjects_.size(); }

  // Appends a subject arriving at rec.entry_time (>= now) and advances the
  // clock to it. Several subjects may share an entry time; they keep
  // enrollment order.
  void enroll(SubjectRecord rec);

  // Moves the calendar clock forward and returns the subjects whose outcome
  // became observable, in enrollment order.
  std::vector<SubjectIndex> advance_to(double tau);

  const SubjectRecord& subject(SubjectIndex i) const { return subjects_.at(i); }
  std::span<const SubjectRecord> subjects() const noexcept { return subjects_; }

  bool revealed(SubjectIndex i) const { return revealed_.at(i) != 0; }
  static bool revealed_by(const SubjectRecord& rec, double tau) noexcept;

  // min(R_i, (tau - tau_i)^+): the largest survival time at which subject i
  // is in the risk set at calendar time tau.
  static double at_risk_until(const SubjectRecord& rec, double tau) noexcept;
  double at_risk_until(SubjectIndex i, double tau) const {
    return at_risk_until(subjects_.at(i), tau);
  }

  // {i : tau_i <= tau, s <= min(R_i, (tau - tau_i)^+)}, enrollment order.
  // Requires tau <= now().
  std::vector<SubjectIndex> risk_set(double tau, double s) const;

  // Subjects unrevealed at `from` that join risk sets by `to`, with their
  // survival-time intervals. R(to, s) = R(from, s) U {i : s in (lo_i, hi_i]}.
  std::vector<RiskIncrement> risk_set_delta(double from, double to) const;

  // Revealed events (delta = 1) sorted by survival time; ties keep reveal
  // order.
  std::span<const EventRef> events() const noexcept { return events_; }
  std::span<const SubjectIndex> pending() const noexcept { return pending_; }
  std::size_t revealed_count() const noexcept { return revealed_total_; }

  // Every revelation so far as (subject, calendar time of the revealing
  // sweep), in sweep order.
  std::span<const std::pair<SubjectIndex, double>> reveal_log() const noexcept {
    return reveal_log_;
  }

  // Revealed events per action; actions outside [0, arms) are ignored.
  std::vector<std::size_t> events_per_arm(int arms) const;

  // Line-delimited text snapshot:
  //   id entry cov_1 .. cov_d action censor latent|- observed event eta
  // Doubles are written in shortest round-trip form.
  void write_snapshot(std::ostream& out) const;
  static Timeline read_snapshot(std::istream& in);

 private:
  void reveal(SubjectIndex i);

  std::size_t covariate_dim_;
  double now_ = 0.0;
  std::vector<SubjectRecord> subjects_;
  std::vector<char> revealed_;
  std::vector<SubjectIndex> pending_;
  // (subject, calendar time of the sweep that revealed it), in sweep order.
  std::vector<std::pair<SubjectIndex, double>> reveal_log_;
  std::vector<EventRef> events_;
  std::size_t revealed_total_ = 0;
  std::unordered_set<std::int64_t> ids_;
};

}  // namespace survband
