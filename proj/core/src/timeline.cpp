#include "survband/timeline.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "survband/csv.hpp"

namespace survband {

SubjectRecord SubjectRecord::simulated(std::int64_t id, double entry_time,
                                       Vector covariates, int action,
                                       double latent_event_time,
                                       double censor_time) {
  SubjectRecord rec;
  rec.id = id;
  rec.entry_time = entry_time;
  rec.covariates = std::move(covariates);
  rec.action = action;
  rec.censor_time = censor_time;
  rec.latent_event_time = latent_event_time;
  rec.observed_time = std::min(latent_event_time, censor_time);
  rec.event = latent_event_time <= censor_time;
  return rec;
}

SubjectRecord SubjectRecord::logged(std::int64_t id, double entry_time,
                                    Vector covariates, int action,
                                    double censor_time, double observed_time,
                                    bool event) {
  SubjectRecord rec;
  rec.id = id;
  rec.entry_time = entry_time;
  rec.covariates = std::move(covariates);
  rec.action = action;
  rec.censor_time = censor_time;
  rec.observed_time = observed_time;
  rec.event = event;
  return rec;
}

Timeline::Timeline(std::size_t covariate_dim) : covariate_dim_(covariate_dim) {}

bool Timeline::revealed_by(const SubjectRecord& rec, double tau) noexcept {
  return tau - rec.entry_time >= rec.observed_time;
}

double Timeline::at_risk_until(const SubjectRecord& rec, double tau) noexcept {
  const double elapsed = tau - rec.entry_time;
  if (!(elapsed > 0.0)) return 0.0;
  return std::min(rec.observed_time, elapsed);
}

void Timeline::enroll(SubjectRecord rec) {
  if (!(rec.entry_time >= now_)) {
    throw TimelineError("enroll: entry time " + format_double(rec.entry_time) +
                        " precedes current calendar time " + format_double(now_));
  }
  if (ids_.count(rec.id) != 0) {
    throw TimelineError("enroll: duplicate subject id " + std::to_string(rec.id));
  }
  if (static_cast<std::size_t>(rec.covariates.size()) != covariate_dim_) {
    throw TimelineError("enroll: expected " + std::to_string(covariate_dim_) +
                        " covariates, got " + std::to_string(rec.covariates.size()));
  }
  if (!(rec.censor_time > 0.0) || !(rec.observed_time > 0.0) ||
      !std::isfinite(rec.entry_time)) {
    throw TimelineError("enroll: censor and observed times must be positive");
  }
  if (rec.observed_time > rec.censor_time) {
    throw TimelineError("enroll: observed time exceeds censoring time");
  }
  if (!rec.event && rec.observed_time != rec.censor_time) {
    throw TimelineError("enroll: censored subject must have R == C");
  }
  if (rec.latent_event_time) {
    const double y = *rec.latent_event_time;
    if (rec.observed_time != std::min(y, rec.censor_time) ||
        rec.event != (y <= rec.censor_time)) {
      throw TimelineError("enroll: R/delta inconsistent with latent event time");
    }
  }

  ids_.insert(rec.id);
  subjects_.push_back(std::move(rec));
  revealed_.push_back(0);
  pending_.push_back(subjects_.size() - 1);
  advance_to(subjects_.back().entry_time);
}

std::vector<SubjectIndex> Timeline::advance_to(double tau) {
  if (!(tau >= now_)) {
    throw TimelineError("advance_to: calendar time " + format_double(tau) +
                        " is in the past (now " + format_double(now_) + ")");
  }
  now_ = tau;
  std::vector<SubjectIndex> newly;
  auto keep = pending_.begin();
  for (auto it = pending_.begin(); it != pending_.end(); ++it) {
    if (revealed_by(subjects_[*it], tau)) {
      newly.push_back(*it);
    } else {
      *keep++ = *it;
    }
  }
  pending_.erase(keep, pending_.end());
  for (SubjectIndex i : newly) reveal(i);
  return newly;
}

void Timeline::reveal(SubjectIndex i) {
  revealed_[i] = 1;
  ++revealed_total_;
  reveal_log_.emplace_back(i, now_);
  const auto& rec = subjects_[i];
  if (rec.event) {
    const EventRef ev{i, rec.observed_time};
    auto pos = std::upper_bound(events_.begin(), events_.end(), ev,
                                [](const EventRef& a, const EventRef& b) {
                                  return a.time < b.time;
                                });
    events_.insert(pos, ev);
  }
}

std::vector<SubjectIndex> Timeline::risk_set(double tau, double s) const {
  if (!(tau <= now_)) {
    throw TimelineError("risk_set: calendar time " + format_double(tau) +
                        " is after now = " + format_double(now_));
  }
  std::vector<SubjectIndex> out;
  for (SubjectIndex i = 0; i < subjects_.size(); ++i) {
    const auto& rec = subjects_[i];
    if (rec.entry_time <= tau && s <= at_risk_until(rec, tau)) out.push_back(i);
  }
  return out;
}

std::vector<RiskIncrement> Timeline::risk_set_delta(double from,
                                                    double to) const {
  if (!(from <= to) || !(to <= now_)) {
    throw TimelineError("risk_set_delta: need from <= to <= now");
  }
  // Unrevealed at `from`: everything still pending, plus anything the log
  // shows was revealed by a sweep after `from`.
  std::vector<SubjectIndex> candidates(pending_.begin(), pending_.end());
  for (auto it = reveal_log_.rbegin(); it != reveal_log_.rend(); ++it) {
    if (it->second <= from) break;
    candidates.push_back(it->first);
  }
  std::sort(candidates.begin(), candidates.end());

  std::vector<RiskIncrement> out;
  for (SubjectIndex i : candidates) {
    const auto& rec = subjects_[i];
    if (rec.entry_time > to || revealed_by(rec, from)) continue;
    const double lo = at_risk_until(rec, from);
    const double hi = at_risk_until(rec, to);
    if (hi > lo) out.push_back({i, lo, hi});
  }
  return out;
}

std::vector<std::size_t> Timeline::events_per_arm(int arms) const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(std::max(arms, 0)), 0);
  for (const auto& ev : events_) {
    const int a = subjects_[ev.subject].action;
    if (a >= 0 && a < arms) ++counts[static_cast<std::size_t>(a)];
  }
  return counts;
}

void Timeline::write_snapshot(std::ostream& out) const {
  out << "# survband-timeline d=" << covariate_dim_
      << " now=" << format_double(now_) << '\n';
  for (SubjectIndex i = 0; i < subjects_.size(); ++i) {
    const auto& rec = subjects_[i];
    out << rec.id << ' ' << format_double(rec.entry_time);
    for (Eigen::Index k = 0; k < rec.covariates.size(); ++k) {
      out << ' ' << format_double(rec.covariates[k]);
    }
    out << ' ' << rec.action << ' ' << format_double(rec.censor_time) << ' '
        << (rec.latent_event_time ? format_double(*rec.latent_event_time) : "-")
        << ' ' << format_double(rec.observed_time) << ' ' << (rec.event ? 1 : 0)
        << ' ' << (revealed_[i] ? 1 : 0) << '\n';
  }
}

Timeline Timeline::read_snapshot(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError(0, "empty timeline snapshot");
  ++lineno;
  std::size_t dim = 0;
  double now = 0.0;
  {
    std::istringstream head(line);
    std::string hash, tag, d_field, now_field;
    head >> hash >> tag >> d_field >> now_field;
    if (hash != "#" || tag != "survband-timeline" || d_field.rfind("d=", 0) != 0 ||
        now_field.rfind("now=", 0) != 0) {
      throw ParseError(lineno, "bad snapshot header");
    }
    try {
      dim = static_cast<std::size_t>(parse_int(d_field.substr(2)));
      now = parse_double(now_field.substr(4));
    } catch (const std::invalid_argument& e) {
      throw ParseError(lineno, e.what());
    }
  }

  Timeline tl(dim);
  std::vector<bool> expected_eta;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::istringstream row(line);
    std::vector<std::string> tok;
    for (std::string t; row >> t;) tok.push_back(t);
    if (tok.size() != dim + 8) {
      throw ParseError(lineno, "expected " + std::to_string(dim + 8) + " fields");
    }
    try {
      std::size_t k = 0;
      const auto id = parse_int(tok[k++]);
      const double entry = parse_double(tok[k++]);
      Vector cov(static_cast<Eigen::Index>(dim));
      for (std::size_t j = 0; j < dim; ++j) cov[static_cast<Eigen::Index>(j)] = parse_double(tok[k++]);
      const int action = static_cast<int>(parse_int(tok[k++]));
      const double censor = parse_double(tok[k++]);
      const std::string& latent = tok[k++];
      const double observed = parse_double(tok[k++]);
      const bool event = parse_int(tok[k++]) != 0;
      expected_eta.push_back(parse_int(tok[k++]) != 0);
      SubjectRecord rec =
          latent == "-"
              ? SubjectRecord::logged(id, entry, std::move(cov), action, censor,
                                      observed, event)
              : SubjectRecord::simulated(id, entry, std::move(cov), action,
                                         parse_double(latent), censor);
      if (rec.observed_time != observed || rec.event != event) {
        throw ParseError(lineno, "R/delta inconsistent with latent time");
      }
      tl.enroll(std::move(rec));
    } catch (const std::invalid_argument& e) {
      throw ParseError(lineno, e.what());
    }
  }
  tl.advance_to(now);
  for (SubjectIndex i = 0; i < tl.size(); ++i) {
    if (tl.revealed(i) != expected_eta[i]) {
      throw ParseError(0, "eta flag disagrees with recomputed revelation for id " +
                              std::to_string(tl.subject(i).id));
    }
  }
  return tl;
}

}  // namespace survband
