// Copyright 2026 The vrisk Authors
// SPDX-License-Identifier: Apache-2.0

#include "vrisk/events.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "vrisk/csv.hpp"

namespace vrisk {

const char* to_string(IncidentCategory c) {
  switch (c) {
    case IncidentCategory::kA: return "A";
    case IncidentCategory::kB: return "B";
    case IncidentCategory::kC: return "C";
  }
  return "?";
}

const char* to_string(EntityKind k) { return k == EntityKind::kDoc ? "DOC" : "Flag"; }

const char* to_string(RecordKind k) {
  switch (k) {
    case RecordKind::kIncident: return "incidents";
    case RecordKind::kDeficiency: return "deficiencies";
    case RecordKind::kDetention: return "detentions";
    case RecordKind::kSailing: return "sailing";
    case RecordKind::kMembership: return "membership";
    case RecordKind::kFlagDemerit: return "flag_demerits";
    case RecordKind::kProfile: return "profiles";
  }
  return "?";
}

StorePaths StorePaths::in_directory(const std::filesystem::path& dir) {
  StorePaths p;
  p.incidents = dir / "incidents.csv";
  p.deficiencies = dir / "deficiencies.csv";
  p.detentions = dir / "detentions.csv";
  p.sailing = dir / "sailing.csv";
  p.memberships = dir / "membership.csv";
  p.flag_demerits = dir / "flag_demerits.csv";
  p.profiles = dir / "profiles.csv";
  return p;
}

namespace {

template <class T>
std::span<const T> date_slice(const std::vector<T>& v, DateRange w) {
  auto lo = std::lower_bound(v.begin(), v.end(), w.start, [](const T& r, Date d) { return r.date < d; });
  auto hi = std::lower_bound(lo, v.end(), w.end, [](const T& r, Date d) { return r.date < d; });
  if (w.end <= w.start) hi = lo;
  return {std::to_address(lo), static_cast<std::size_t>(hi - lo)};
}

std::size_t date_index(const std::vector<Date>& v, Date d) {
  return static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), d) - v.begin());
}

[[noreturn]] void invariant(const std::string& msg) { fail(ErrorKind::kInvariant, msg); }

}  // namespace

EventStore EventStore::build(RawRecords rec, std::optional<DateRange> declared_span) {
  EventStore s;

  // Profiles decide which vessels exist.
  std::set<std::string> rejected(rec.invalid_profiles.begin(), rec.invalid_profiles.end());
  std::map<std::string, VesselProfile> profiles;
  for (auto& p : rec.profiles) {
    bool ok = true;
    for (double v : p.values) ok = ok && std::isfinite(v) && v > 0;
    if (!ok) {
      rejected.insert(p.vessel_id);
      continue;
    }
    if (!profiles.emplace(p.vessel_id, p).second) invariant("duplicate profile for vessel " + p.vessel_id);
  }
  for (const auto& r : rejected) profiles.erase(r);

  auto keep = [&](const std::string& vessel) {
    if (profiles.count(vessel)) return true;
    rejected.insert(vessel);
    ++s.report_.dropped_rows;
    return false;
  };

  for (const auto& [id, p] : profiles) {
    s.index_.emplace(id, s.vessels_.size());
    s.vessel_ids_.push_back(id);
    s.vessels_.push_back(VesselData{p, {}, {}, {}, {}, {}, {}, {}});
  }
  auto& V = s.vessels_;
  auto at = [&](const std::string& id) -> VesselData& { return V[s.index_.at(id)]; };

  // Span bookkeeping.
  bool have_date = false;
  Date lo{}, hi{};
  auto note = [&](Date a, Date b_exclusive) {
    if (!have_date) {
      lo = a;
      hi = b_exclusive;
      have_date = true;
    } else {
      lo = std::min(lo, a);
      hi = std::max(hi, b_exclusive);
    }
  };
  auto check_in_span = [&](Date d, const char* kind, const std::string& vessel) {
    if (declared_span && !declared_span->contains(d)) {
      invariant(std::string(kind) + " record for vessel " + vessel + " on " + d.to_string() +
                " lies outside the store span " + declared_span->to_string());
    }
    note(d, d + 1);
  };

  for (auto& r : rec.incidents) {
    if (!keep(r.vessel_id)) continue;
    check_in_span(r.date, "incident", r.vessel_id);
    at(r.vessel_id).incidents.push_back(std::move(r));
  }
  for (auto& r : rec.deficiencies) {
    if (!keep(r.vessel_id)) continue;
    if (r.count < 0) invariant("negative deficiency count for vessel " + r.vessel_id + " on " + r.date.to_string());
    check_in_span(r.date, "deficiency", r.vessel_id);
    at(r.vessel_id).deficiencies.push_back(std::move(r));
  }
  for (auto& r : rec.detentions) {
    if (!keep(r.vessel_id)) continue;
    check_in_span(r.date, "detention", r.vessel_id);
    at(r.vessel_id).detentions.push_back(std::move(r));
  }
  for (auto& r : rec.sailing) {
    if (!keep(r.vessel_id)) continue;
    if (!std::isfinite(r.distance) || r.distance < 0) {
      invariant("invalid sailing distance for vessel " + r.vessel_id + " on " + r.date.to_string());
    }
    check_in_span(r.date, "sailing", r.vessel_id);
    at(r.vessel_id).sailing.push_back(std::move(r));
  }
  for (auto& r : rec.memberships) {
    if (!keep(r.vessel_id)) continue;
    if (!(r.start < r.end)) {
      invariant(std::string(to_string(r.kind)) + " membership of vessel " + r.vessel_id + " has start >= end " +
                r.range().to_string());
    }
    note(r.start, r.end);
    at(r.vessel_id).memberships[static_cast<int>(r.kind)].push_back(std::move(r));
  }

  for (auto& v : V) {
    std::sort(v.incidents.begin(), v.incidents.end());
    std::sort(v.deficiencies.begin(), v.deficiencies.end());
    std::sort(v.detentions.begin(), v.detentions.end());
    std::sort(v.sailing.begin(), v.sailing.end());
    v.sailing_distance_prefix.assign(1, 0.0);
    v.sailing_days_prefix.assign(1, 0);
    for (std::size_t i = 0; i < v.sailing.size(); ++i) {
      if (i > 0 && v.sailing[i].date == v.sailing[i - 1].date) {
        invariant("duplicate sailing record for vessel " + v.profile.vessel_id + " on " +
                  v.sailing[i].date.to_string());
      }
      v.sailing_distance_prefix.push_back(v.sailing_distance_prefix.back() + v.sailing[i].distance);
      v.sailing_days_prefix.push_back(v.sailing_days_prefix.back() + (v.sailing[i].distance > 0 ? 1 : 0));
    }
    for (auto& ms : v.memberships) {
      std::sort(ms.begin(), ms.end(), [](const MembershipInterval& a, const MembershipInterval& b) {
        return std::tie(a.start, a.end, a.entity_id) < std::tie(b.start, b.end, b.entity_id);
      });
      for (std::size_t i = 1; i < ms.size(); ++i) {
        if (ms[i].start < ms[i - 1].end) {
          invariant(std::string(to_string(ms[i].kind)) + " memberships of vessel " + v.profile.vessel_id +
                    " overlap: " + ms[i - 1].entity_id + " " + ms[i - 1].range().to_string() + " and " +
                    ms[i].entity_id + " " + ms[i].range().to_string());
        }
      }
      for (const auto& m : ms) s.entity_members_[static_cast<int>(m.kind)][m.entity_id].push_back(m);
    }
  }

  for (const auto& r : rec.flag_demerits) {
    if (r.red_flags < 0) invariant("negative red flag count for flag " + r.flag_id);
    if (!s.red_flags_.emplace(std::make_pair(r.flag_id, r.year), r.red_flags).second) {
      invariant("duplicate flag demerit row for flag " + r.flag_id + " year " + std::to_string(r.year));
    }
  }

  s.span_ = declared_span ? *declared_span : (have_date ? DateRange{lo, hi} : DateRange{});
  s.report_.rejected_vessels.assign(rejected.begin(), rejected.end());
  auto& rows = s.report_.rows;
  for (const auto& v : V) {
    rows[static_cast<int>(RecordKind::kIncident)] += v.incidents.size();
    rows[static_cast<int>(RecordKind::kDeficiency)] += v.deficiencies.size();
    rows[static_cast<int>(RecordKind::kDetention)] += v.detentions.size();
    rows[static_cast<int>(RecordKind::kSailing)] += v.sailing.size();
    rows[static_cast<int>(RecordKind::kMembership)] += v.memberships[0].size() + v.memberships[1].size();
  }
  rows[static_cast<int>(RecordKind::kFlagDemerit)] = s.red_flags_.size();
  rows[static_cast<int>(RecordKind::kProfile)] = V.size();

  s.build_fleet_index();
  return s;
}

void EventStore::build_fleet_index() {
  for (const auto& [doc, members] : entity_members_[static_cast<int>(EntityKind::kDoc)]) {
    struct Ev {
      Date date;
      int channel;
      double value;
    };
    std::vector<Ev> evs;
    for (const auto& m : members) {
      const auto& v = vessel(m.vessel_id);
      for (const auto& r : date_slice(v.incidents, m.range())) evs.push_back({r.date, static_cast<int>(r.category), 1.0});
      for (const auto& r : date_slice(v.deficiencies, m.range())) evs.push_back({r.date, 3, static_cast<double>(r.count)});
      for (const auto& r : date_slice(v.detentions, m.range())) evs.push_back({r.date, 4, 1.0});
    }
    std::stable_sort(evs.begin(), evs.end(), [](const Ev& a, const Ev& b) { return a.date < b.date; });
    FleetEvents fe;
    fe.dates.reserve(evs.size());
    for (auto& p : fe.prefix) p.assign(evs.size() + 1, 0.0);
    for (std::size_t i = 0; i < evs.size(); ++i) {
      fe.dates.push_back(evs[i].date);
      for (int k = 0; k < 5; ++k) fe.prefix[k][i + 1] = fe.prefix[k][i] + (evs[i].channel == k ? evs[i].value : 0.0);
    }
    fleet_events_.emplace(doc, std::move(fe));
  }
}

const EventStore::VesselData& EventStore::vessel(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) fail(ErrorKind::kNotFound, "unknown vessel_id '" + id + "'");
  return vessels_[it->second];
}

const VesselProfile& EventStore::profile(const std::string& v) const { return vessel(v).profile; }

std::span<const IncidentRecord> EventStore::incidents(const std::string& v, DateRange w) const {
  return date_slice(vessel(v).incidents, w);
}
std::span<const DeficiencyRecord> EventStore::deficiencies(const std::string& v, DateRange w) const {
  return date_slice(vessel(v).deficiencies, w);
}
std::span<const DetentionRecord> EventStore::detentions(const std::string& v, DateRange w) const {
  return date_slice(vessel(v).detentions, w);
}
std::span<const SailingDay> EventStore::sailing(const std::string& v, DateRange w) const {
  return date_slice(vessel(v).sailing, w);
}

std::pair<double, std::int64_t> EventStore::sailing_totals(const std::string& id, DateRange w) const {
  const auto& v = vessel(id);
  auto slice = date_slice(v.sailing, w);
  const std::size_t a = static_cast<std::size_t>(slice.data() - v.sailing.data());
  const std::size_t b = a + slice.size();
  return {v.sailing_distance_prefix[b] - v.sailing_distance_prefix[a], v.sailing_days_prefix[b] - v.sailing_days_prefix[a]};
}

std::span<const MembershipInterval> EventStore::memberships(const std::string& v, EntityKind kind) const {
  return vessel(v).memberships[static_cast<int>(kind)];
}

std::span<const MembershipInterval> EventStore::members_of(EntityKind kind, const std::string& entity) const {
  const auto& m = entity_members_[static_cast<int>(kind)];
  auto it = m.find(entity);
  if (it == m.end()) return {};
  return it->second;
}

std::optional<std::string> EventStore::entity_at(const std::string& v, EntityKind kind, Date d) const {
  for (const auto& m : memberships(v, kind)) {
    if (m.range().contains(d)) return m.entity_id;
  }
  return std::nullopt;
}

std::optional<std::int64_t> EventStore::red_flags(const std::string& flag, int year) const {
  auto it = red_flags_.find({flag, year});
  if (it == red_flags_.end()) return std::nullopt;
  return it->second;
}

EventStore::FleetTotals EventStore::doc_fleet_totals(const std::string& doc, DateRange w) const {
  FleetTotals t;
  auto it = fleet_events_.find(doc);
  if (it == fleet_events_.end() || w.empty()) return t;
  const auto& fe = it->second;
  const std::size_t a = date_index(fe.dates, w.start);
  const std::size_t b = date_index(fe.dates, w.end);
  for (int k = 0; k < 3; ++k) t.incidents[k] = fe.prefix[k][b] - fe.prefix[k][a];
  t.deficiencies = fe.prefix[3][b] - fe.prefix[3][a];
  t.detentions = fe.prefix[4][b] - fe.prefix[4][a];
  return t;
}

RawRecords EventStore::records() const {
  RawRecords r;
  for (const auto& v : vessels_) {
    r.profiles.push_back(v.profile);
    r.incidents.insert(r.incidents.end(), v.incidents.begin(), v.incidents.end());
    r.deficiencies.insert(r.deficiencies.end(), v.deficiencies.begin(), v.deficiencies.end());
    r.detentions.insert(r.detentions.end(), v.detentions.begin(), v.detentions.end());
    r.sailing.insert(r.sailing.end(), v.sailing.begin(), v.sailing.end());
    for (const auto& ms : v.memberships) r.memberships.insert(r.memberships.end(), ms.begin(), ms.end());
  }
  for (const auto& [key, n] : red_flags_) r.flag_demerits.push_back({key.first, key.second, n});
  return r;
}

// ---------------------------------------------------------------------------
// CSV I/O

RawRecords read_records(const StorePaths& paths) {
  RawRecords out;
  std::vector<std::string> f;

  if (paths.incidents) {
    csv::Reader r(*paths.incidents);
    const auto cv = r.column("vessel_id"), cd = r.column("date"), cc = r.column("category");
    while (r.next(f)) {
      IncidentRecord rec;
      rec.vessel_id = f[cv];
      try {
        rec.date = parse_date(f[cd]);
      } catch (const Error& e) {
        r.fail_at(cd, e.what());
      }
      if (f[cc] == "A") rec.category = IncidentCategory::kA;
      else if (f[cc] == "B") rec.category = IncidentCategory::kB;
      else if (f[cc] == "C") rec.category = IncidentCategory::kC;
      else r.fail_at(cc, "category must be A, B or C, got '" + f[cc] + "'");
      out.incidents.push_back(std::move(rec));
    }
  }
  if (paths.deficiencies) {
    csv::Reader r(*paths.deficiencies);
    const auto cv = r.column("vessel_id"), cd = r.column("date"), cn = r.column("count");
    while (r.next(f)) {
      DeficiencyRecord rec;
      rec.vessel_id = f[cv];
      try {
        rec.date = parse_date(f[cd]);
      } catch (const Error& e) {
        r.fail_at(cd, e.what());
      }
      rec.count = r.parse_int(f, cn);
      if (rec.count < 0) r.fail_at(cn, "deficiency count must be non-negative");
      out.deficiencies.push_back(std::move(rec));
    }
  }
  if (paths.detentions) {
    csv::Reader r(*paths.detentions);
    const auto cv = r.column("vessel_id"), cd = r.column("date");
    while (r.next(f)) {
      DetentionRecord rec;
      rec.vessel_id = f[cv];
      try {
        rec.date = parse_date(f[cd]);
      } catch (const Error& e) {
        r.fail_at(cd, e.what());
      }
      out.detentions.push_back(std::move(rec));
    }
  }
  if (paths.sailing) {
    csv::Reader r(*paths.sailing);
    const auto cv = r.column("vessel_id"), cd = r.column("date"), cx = r.column("distance");
    while (r.next(f)) {
      SailingDay rec;
      rec.vessel_id = f[cv];
      try {
        rec.date = parse_date(f[cd]);
      } catch (const Error& e) {
        r.fail_at(cd, e.what());
      }
      rec.distance = r.parse_double(f, cx);
      if (!std::isfinite(rec.distance) || rec.distance < 0) r.fail_at(cx, "distance must be finite and >= 0");
      out.sailing.push_back(std::move(rec));
    }
  }
  if (paths.memberships) {
    csv::Reader r(*paths.memberships);
    const auto cv = r.column("vessel_id"), ck = r.column("kind"), ce = r.column("entity_id"), cs = r.column("start"),
               cn = r.column("end");
    while (r.next(f)) {
      MembershipInterval rec;
      rec.vessel_id = f[cv];
      if (f[ck] == "DOC") rec.kind = EntityKind::kDoc;
      else if (f[ck] == "Flag") rec.kind = EntityKind::kFlag;
      else r.fail_at(ck, "kind must be DOC or Flag, got '" + f[ck] + "'");
      rec.entity_id = f[ce];
      try {
        rec.start = parse_date(f[cs]);
      } catch (const Error& e) {
        r.fail_at(cs, e.what());
      }
      try {
        rec.end = parse_date(f[cn]);
      } catch (const Error& e) {
        r.fail_at(cn, e.what());
      }
      out.memberships.push_back(std::move(rec));
    }
  }
  if (paths.flag_demerits) {
    csv::Reader r(*paths.flag_demerits);
    const auto cf = r.column("flag_id"), cy = r.column("year"), cr = r.column("red_flags");
    while (r.next(f)) {
      FlagDemeritRecord rec;
      rec.flag_id = f[cf];
      rec.year = static_cast<int>(r.parse_int(f, cy));
      rec.red_flags = r.parse_int(f, cr);
      if (rec.red_flags < 0) r.fail_at(cr, "red_flags must be non-negative");
      out.flag_demerits.push_back(std::move(rec));
    }
  }
  if (paths.profiles) {
    csv::Reader r(*paths.profiles);
    const auto cv = r.column("vessel_id");
    std::array<std::size_t, 8> cols{};
    for (std::size_t k = 0; k < 8; ++k) cols[k] = r.column(kProfileFields[k]);
    while (r.next(f)) {
      VesselProfile p;
      p.vessel_id = f[cv];
      bool valid = true;
      for (std::size_t k = 0; k < 8; ++k) {
        if (f[cols[k]].empty()) {
          valid = false;
          continue;
        }
        p.values[k] = r.parse_double(f, cols[k]);
        if (!std::isfinite(p.values[k]) || p.values[k] <= 0) valid = false;
      }
      if (valid) out.profiles.push_back(std::move(p));
      else out.invalid_profiles.push_back(p.vessel_id);
    }
  }
  return out;
}

EventStore load_store(const StorePaths& paths, std::optional<DateRange> declared_span) {
  return EventStore::build(read_records(paths), declared_span);
}

void write_records(const RawRecords& rec, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto p = StorePaths::in_directory(dir);
  {
    csv::Writer w(*p.incidents);
    w.row({"vessel_id", "date", "category"});
    for (const auto& r : rec.incidents) w.row({r.vessel_id, r.date.to_string(), to_string(r.category)});
    w.close();
  }
  {
    csv::Writer w(*p.deficiencies);
    w.row({"vessel_id", "date", "count"});
    for (const auto& r : rec.deficiencies) w.row({r.vessel_id, r.date.to_string(), std::to_string(r.count)});
    w.close();
  }
  {
    csv::Writer w(*p.detentions);
    w.row({"vessel_id", "date"});
    for (const auto& r : rec.detentions) w.row({r.vessel_id, r.date.to_string()});
    w.close();
  }
  {
    csv::Writer w(*p.sailing);
    w.row({"vessel_id", "date", "distance"});
    for (const auto& r : rec.sailing) w.row({r.vessel_id, r.date.to_string(), csv::format_double(r.distance)});
    w.close();
  }
  {
    csv::Writer w(*p.memberships);
    w.row({"vessel_id", "kind", "entity_id", "start", "end"});
    for (const auto& r : rec.memberships) {
      w.row({r.vessel_id, to_string(r.kind), r.entity_id, r.start.to_string(), r.end.to_string()});
    }
    w.close();
  }
  {
    csv::Writer w(*p.flag_demerits);
    w.row({"flag_id", "year", "red_flags"});
    for (const auto& r : rec.flag_demerits) w.row({r.flag_id, std::to_string(r.year), std::to_string(r.red_flags)});
    w.close();
  }
  {
    csv::Writer w(*p.profiles);
    std::vector<std::string> header{"vessel_id"};
    header.insert(header.end(), kProfileFields.begin(), kProfileFields.end());
    w.row(header);
    for (const auto& r : rec.profiles) {
      std::vector<std::string> row{r.vessel_id};
      for (double v : r.values) row.push_back(csv::format_double(v));
      w.row(row);
    }
    w.close();
  }
}

}  // namespace vrisk
