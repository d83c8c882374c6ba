// Copyright 2026 The vrisk Authors
// SPDX-License-Identifier: Apache-2.0

#include "vrisk/factors.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "vrisk/parallel.hpp"

namespace vrisk {

namespace {

constexpr std::int32_t kYearDays = 365;

struct MeasureInfo {
  Measure measure;
  const char* slug;
  const char* phrase;
  const char* decayed_phrase;
};

// Index = static_cast<int>(Measure).
constexpr std::array<MeasureInfo, kMeasureCount> kMeasures = {{
    {Measure::kIncidentsA, "cat_a", "Number of Category A incidents", "Decayed number of Category A incidents"},
    {Measure::kIncidentsB, "cat_b", "Number of Category B incidents", "Decayed number of Category B incidents"},
    {Measure::kIncidentsC, "cat_c", "Number of Category C incidents", "Decayed number of Category C incidents"},
    {Measure::kSeverity, "severity", "Sum of severity across all the incidents",
     "Decayed sum of severity across all the incidents"},
    {Measure::kDeficiencies, "deficiencies", "Number of deficiencies", "Decayed sum of PSC deficiencies"},
    {Measure::kDetentions, "detentions", "Number of detentions", "Decayed number of detentions"},
    {Measure::kSailingDistance, "distance", "Sailing distance", "Decayed sailing distance"},
    {Measure::kSailingDays, "days", "Sailing days", "Decayed sailing days"},
    {Measure::kAvgDailyDistance, "avg_distance", "Average sailing distance", "Decayed average sailing distance"},
    {Measure::kDocAvgSeverity, "avg_severity",
     "Average incident severity over the vessels that belong to the DOC company",
     "Decayed average incident severity over the vessels that belong to the DOC company"},
    {Measure::kDocAvgDeficiencies, "avg_deficiencies",
     "Average deficiencies over the vessels that belong to the DOC company",
     "Decayed average deficiencies over the vessels that belong to the DOC company"},
    {Measure::kDocAvgDetentions, "avg_detentions", "Average detentions over the vessels that belong to the DOC company",
     "Decayed average detentions over the vessels that belong to the DOC company"},
    {Measure::kDocTotalSeverity, "total_severity", "Total incident severity of the vessels that belong to the DOC company",
     "Decayed total incident severity of the vessels that belong to the DOC company"},
    {Measure::kDocTotalDeficiencies, "total_deficiencies",
     "Total deficiencies of the vessels that belong to the DOC company",
     "Decayed total deficiencies of the vessels that belong to the DOC company"},
    {Measure::kDocTotalDetentions, "total_detentions", "Total detentions of the vessels that belong to the DOC company",
     "Decayed total detentions of the vessels that belong to the DOC company"},
    {Measure::kRedFlags, "red_flags", "Number of red flags", "Decayed number of red flags"},
    {Measure::kPf1, "pf1", "Dead weight tonnage", nullptr},
    {Measure::kPf2, "pf2", "Maximum dead weight tonnage", nullptr},
    {Measure::kPf3, "pf3", "Depth", nullptr},
    {Measure::kPf4, "pf4", "Draught", nullptr},
    {Measure::kPf5, "pf5", "Gross tonnage", nullptr},
    {Measure::kPf6, "pf6", "Length between perpendiculars", nullptr},
    {Measure::kPf7, "pf7", "Length overall", nullptr},
    {Measure::kPf8, "pf8", "Net tonnage", nullptr},
}};

const MeasureInfo& info(Measure m) { return kMeasures[static_cast<std::size_t>(m)]; }

const char* ordinal(int k) {
  static constexpr std::array<const char*, 6> kOrd = {"", "first", "second", "third", "fourth", "fifth"};
  return (k >= 1 && k <= 5) ? kOrd[k] : "";
}

const char* cardinal(int n) {
  static constexpr std::array<const char*, 6> kCard = {"", "one", "two", "three", "four", "five"};
  return (n >= 1 && n <= 5) ? kCard[n] : "";
}

}  // namespace

PrimaryCategory category_of(Measure m) {
  switch (m) {
    case Measure::kIncidentsA:
    case Measure::kIncidentsB:
    case Measure::kIncidentsC:
    case Measure::kSeverity: return PrimaryCategory::kIncidents;
    case Measure::kDeficiencies: return PrimaryCategory::kPscDeficiencies;
    case Measure::kDetentions: return PrimaryCategory::kDetentions;
    case Measure::kSailingDistance:
    case Measure::kSailingDays:
    case Measure::kAvgDailyDistance: return PrimaryCategory::kSailing;
    case Measure::kDocAvgSeverity:
    case Measure::kDocAvgDeficiencies:
    case Measure::kDocAvgDetentions:
    case Measure::kDocTotalSeverity:
    case Measure::kDocTotalDeficiencies:
    case Measure::kDocTotalDetentions: return PrimaryCategory::kDocPerformance;
    case Measure::kRedFlags: return PrimaryCategory::kFlagPerformance;
    default: return PrimaryCategory::kProfile;
  }
}

bool is_profile(Measure m) { return category_of(m) == PrimaryCategory::kProfile; }

bool is_additive(Measure m) {
  return !is_profile(m) && m != Measure::kAvgDailyDistance && m != Measure::kDocAvgSeverity &&
         m != Measure::kDocAvgDeficiencies && m != Measure::kDocAvgDetentions;
}

const char* category_name(PrimaryCategory c) {
  switch (c) {
    case PrimaryCategory::kIncidents: return "Incidents";
    case PrimaryCategory::kPscDeficiencies: return "PSC deficiencies";
    case PrimaryCategory::kDetentions: return "Detentions";
    case PrimaryCategory::kSailing: return "Sailing";
    case PrimaryCategory::kDocPerformance: return "DOC performances";
    case PrimaryCategory::kFlagPerformance: return "Flag performances";
    case PrimaryCategory::kProfile: return "Profile information";
  }
  return "?";
}

const char* category_slug(PrimaryCategory c) {
  switch (c) {
    case PrimaryCategory::kIncidents: return "incidents";
    case PrimaryCategory::kPscDeficiencies: return "psc";
    case PrimaryCategory::kDetentions: return "detentions";
    case PrimaryCategory::kSailing: return "sailing";
    case PrimaryCategory::kDocPerformance: return "doc";
    case PrimaryCategory::kFlagPerformance: return "flag";
    case PrimaryCategory::kProfile: return "profile";
  }
  return "?";
}

const char* measure_slug(Measure m) { return info(m).slug; }

const char* to_string(RiskLevel r) {
  switch (r) {
    case RiskLevel::kLow: return "Low";
    case RiskLevel::kMedium: return "Medium";
    case RiskLevel::kHigh: return "High";
  }
  return "?";
}

std::string FactorDescriptor::scope_group() const {
  switch (measure) {
    case Measure::kDocAvgSeverity:
    case Measure::kDocTotalSeverity: return "doc-incidents";
    case Measure::kDocAvgDeficiencies:
    case Measure::kDocTotalDeficiencies: return "doc-deficiencies";
    case Measure::kDocAvgDetentions:
    case Measure::kDocTotalDetentions: return "doc-detentions";
    default: return category_slug(category());
  }
}

std::string FactorDescriptor::description() const {
  const auto& mi = info(measure);
  std::string s;
  switch (format.kind) {
    case FormatKind::kNone: s = mi.phrase; break;
    case FormatKind::kAnnual:
      s = std::string(mi.phrase) + (format.years == 1 ? " in the past year" : std::string(" in the past ") +
                                                                                   ordinal(format.years) + " year");
      break;
    case FormatKind::kCumulative:
      s = std::string(mi.phrase) + (format.years == 1 ? " over the past year"
                                                      : std::string(" in the past ") + cardinal(format.years) + " years");
      break;
    case FormatKind::kDecayedCumulative:
      s = std::string(mi.decayed_phrase) + " in the past " + cardinal(format.years) +
          (format.years == 1 ? " year" : " years");
      break;
  }
  if (copy > 0) s += " (copy " + std::to_string(copy) + ")";
  return s;
}

std::string make_factor_id(Measure m, FactorFormat f, int copy) {
  std::string id = std::string(category_slug(category_of(m))) + "." + measure_slug(m);
  switch (f.kind) {
    case FormatKind::kNone: break;
    case FormatKind::kAnnual: id += ".y" + std::to_string(f.years); break;
    case FormatKind::kCumulative: id += ".cum" + std::to_string(f.years); break;
    case FormatKind::kDecayedCumulative: id += ".dcum" + std::to_string(f.years); break;
  }
  if (copy > 0) id += "#" + std::to_string(copy);
  return id;
}

FactorDescriptor parse_factor_id(const std::string& id) {
  auto bad = [&] { fail(ErrorKind::kParse, "unrecognized factor id '" + id + "'"); };
  std::string body = id;
  int copy = 0;
  if (auto hash = body.find('#'); hash != std::string::npos) {
    try {
      copy = std::stoi(body.substr(hash + 1));
    } catch (...) {
      bad();
    }
    if (copy <= 0) bad();
    body.resize(hash);
  }
  std::vector<std::string> parts;
  for (std::size_t pos = 0;;) {
    auto dot = body.find('.', pos);
    parts.push_back(body.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos));
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  if (parts.size() < 2 || parts.size() > 3) bad();
  std::optional<Measure> measure;
  for (const auto& mi : kMeasures) {
    if (parts[0] == category_slug(category_of(mi.measure)) && parts[1] == mi.slug) measure = mi.measure;
  }
  if (!measure) bad();
  FactorFormat fmt;
  if (parts.size() == 3) {
    if (is_profile(*measure)) bad();
    const std::string& f = parts[2];
    std::string digits;
    if (f.rfind("dcum", 0) == 0) {
      fmt.kind = FormatKind::kDecayedCumulative;
      digits = f.substr(4);
    } else if (f.rfind("cum", 0) == 0) {
      fmt.kind = FormatKind::kCumulative;
      digits = f.substr(3);
    } else if (f.rfind("y", 0) == 0) {
      fmt.kind = FormatKind::kAnnual;
      digits = f.substr(1);
    } else {
      bad();
    }
    if (digits.size() != 1 || digits[0] < '1' || digits[0] > '5') bad();
    fmt.years = digits[0] - '0';
  } else if (!is_profile(*measure)) {
    bad();
  }
  FactorDescriptor d{id, *measure, fmt, copy};
  if (make_factor_id(d.measure, d.format, d.copy) != id) bad();
  return d;
}

void DecaySchedule::validate() const {
  for (double k : weights) require(std::isfinite(k) && k > 0, "decay weights must be positive");
}

void SeverityWeights::validate() const {
  require(std::isfinite(a) && std::isfinite(b) && std::isfinite(c), "severity weights must be finite");
  require(a >= b && b >= c && c > 0, "severity weights must satisfy w_A >= w_B >= w_C > 0");
}

void LabelThresholds::validate() const { require(std::isfinite(high) && high > 0, "label threshold must be > 0"); }

std::optional<std::size_t> FactorCatalog::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (factors[i].id == id) return i;
  }
  return std::nullopt;
}

std::vector<std::string> FactorCatalog::ids() const {
  std::vector<std::string> out;
  out.reserve(factors.size());
  for (const auto& f : factors) out.push_back(f.id);
  return out;
}

void FactorCatalog::validate() const {
  std::set<std::string> seen;
  for (const auto& f : factors) {
    if (!seen.insert(f.id).second) fail(ErrorKind::kInvariant, "duplicate factor id " + f.id);
  }
  decay.validate();
  severity.validate();
}

FactorCatalog build_catalog(const CatalogSpec& spec, const DecaySchedule& decay, const SeverityWeights& severity) {
  decay.validate();
  severity.validate();
  auto check_years = [](const std::vector<int>& ys) {
    for (int y : ys) require(y >= 1 && y <= 5, "catalog years must lie in 1..5");
  };
  check_years(spec.annual_years);
  check_years(spec.cumulative_years);
  check_years(spec.decayed_years);

  std::vector<Measure> measures = spec.measures;
  if (measures.empty()) {
    for (const auto& mi : kMeasures) measures.push_back(mi.measure);
  }
  FactorCatalog cat;
  cat.decay = decay;
  cat.severity = severity;
  for (Measure m : measures) {
    if (is_profile(m)) {
      cat.factors.push_back({make_factor_id(m, {}), m, {}, 0});
      continue;
    }
    auto add = [&](FormatKind kind, int years) {
      FactorFormat f{kind, years};
      cat.factors.push_back({make_factor_id(m, f), m, f, 0});
    };
    for (int k : spec.annual_years) add(FormatKind::kAnnual, k);
    for (int n : spec.cumulative_years) add(FormatKind::kCumulative, n);
    for (int n : spec.decayed_years) add(FormatKind::kDecayedCumulative, n);
  }
  cat.validate();
  return cat;
}

// ---------------------------------------------------------------------------

double decayed_cumulative(std::span<const double> annual_values, const DecaySchedule& schedule, int n) {
  require(n >= 1 && n <= 5, "decayed cumulative window must be 1..5 years");
  require(static_cast<std::size_t>(n) <= annual_values.size(), "not enough annual values for decayed cumulative");
  double s = 0;
  for (int i = 0; i < n; ++i) s += schedule.weights[i] * annual_values[i];
  return s;
}

double severity_sum(std::int64_t a, std::int64_t b, std::int64_t c, const SeverityWeights& w) {
  require(a >= 0 && b >= 0 && c >= 0, "incident counts must be non-negative");
  return w.a * static_cast<double>(a) + w.b * static_cast<double>(b) + w.c * static_cast<double>(c);
}

double fleet_size(std::span<const MembershipInterval> members, DateRange window) {
  require(!window.empty(), "fleet_size needs a non-empty window");
  double vessel_days = 0;
  for (const auto& m : members) vessel_days += intersect(m.range(), window).days();
  if (vessel_days <= 0) {
    fail(ErrorKind::kCoverage, "no fleet members during " + window.to_string());
  }
  return vessel_days / window.days();
}

double entity_weighted_metric(const EventStore& store, const std::string& vessel, DateRange window, EntityKind kind,
                              const std::function<double(const std::string&, DateRange)>& metric) {
  require(!window.empty(), "entity_weighted_metric needs a non-empty window");
  const double total = window.days();
  double acc = 0;
  Date cursor = window.start;
  for (const auto& m : store.memberships(vessel, kind)) {
    const DateRange seg = intersect(m.range(), window);
    if (seg.empty()) continue;
    if (cursor < seg.start) break;
    acc += (seg.days() / total) * metric(m.entity_id, seg);
    cursor = seg.end;
  }
  if (cursor < window.end) {
    // Find the end of the uncovered stretch for the diagnostic.
    Date gap_end = window.end;
    for (const auto& m : store.memberships(vessel, kind)) {
      if (m.start > cursor) {
        gap_end = std::min(gap_end, m.start);
        break;
      }
    }
    fail(ErrorKind::kCoverage, "vessel " + vessel + " has no " + to_string(kind) + " membership during " +
                                   DateRange{cursor, gap_end}.to_string());
  }
  return acc;
}

SailingSummary sailing_factors(const EventStore& store, const std::string& vessel, DateRange window) {
  auto [dist, days] = store.sailing_totals(vessel, window);
  return {dist, days, days > 0 ? dist / static_cast<double>(days) : 0.0};
}

RiskLevel grade_label(double severity, const LabelThresholds& t) {
  require(std::isfinite(severity) && severity >= 0, "incident severity must be finite and non-negative");
  if (severity == 0) return RiskLevel::kLow;
  if (severity < t.high) return RiskLevel::kMedium;
  return RiskLevel::kHigh;
}

DateRange past_year(Date d, int k) { return {d - k * kYearDays, d - (k - 1) * kYearDays}; }
DateRange past_years(Date d, int n) { return {d - n * kYearDays, d}; }

namespace {

using MeasureValues = std::array<double, kMeasureCount>;

// All non-profile measures of one vessel over one window.
MeasureValues window_measures(const EventStore& store, const std::string& vessel, DateRange w,
                              const SeverityWeights& sev) {
  MeasureValues out{};
  auto set = [&](Measure m, double v) { out[static_cast<std::size_t>(m)] = v; };

  std::array<std::int64_t, 3> cats{};
  for (const auto& r : store.incidents(vessel, w)) ++cats[static_cast<int>(r.category)];
  set(Measure::kIncidentsA, static_cast<double>(cats[0]));
  set(Measure::kIncidentsB, static_cast<double>(cats[1]));
  set(Measure::kIncidentsC, static_cast<double>(cats[2]));
  set(Measure::kSeverity, severity_sum(cats[0], cats[1], cats[2], sev));

  double def = 0;
  for (const auto& r : store.deficiencies(vessel, w)) def += static_cast<double>(r.count);
  set(Measure::kDeficiencies, def);
  set(Measure::kDetentions, static_cast<double>(store.detentions(vessel, w).size()));

  const auto sail = sailing_factors(store, vessel, w);
  set(Measure::kSailingDistance, sail.cumulative_distance);
  set(Measure::kSailingDays, static_cast<double>(sail.sailing_days));
  set(Measure::kAvgDailyDistance, sail.avg_daily);

  // DOC: per segment, fleet totals and fleet size; each segment's value is
  // rescaled to the window length so that the duration weighting yields the
  // performance accrued while the vessel belonged to each company.
  const double wdays = w.days();
  std::array<double, 6> doc{};
  for (int k = 0; k < 6; ++k) {
    // Evaluated once per measure through the shared contract; the fleet
    // lookups are cheap prefix-sum queries.
    doc[k] = entity_weighted_metric(store, vessel, w, EntityKind::kDoc, [&](const std::string& id, DateRange seg) {
      const auto t = store.doc_fleet_totals(id, seg);
      const double severity = sev.a * t.incidents[0] + sev.b * t.incidents[1] + sev.c * t.incidents[2];
      const double totals[3] = {severity, t.deficiencies, t.detentions};
      const double scale = wdays / seg.days();
      if (k >= 3) return totals[k - 3] * scale;
      return totals[k] / fleet_size(store.members_of(EntityKind::kDoc, id), seg) * scale;
    });
  }
  set(Measure::kDocAvgSeverity, doc[0]);
  set(Measure::kDocAvgDeficiencies, doc[1]);
  set(Measure::kDocAvgDetentions, doc[2]);
  set(Measure::kDocTotalSeverity, doc[3]);
  set(Measure::kDocTotalDeficiencies, doc[4]);
  set(Measure::kDocTotalDetentions, doc[5]);

  set(Measure::kRedFlags,
      entity_weighted_metric(store, vessel, w, EntityKind::kFlag, [&](const std::string& flag, DateRange seg) {
        double exposure = 0;
        for (int y = seg.start.year(); y <= (seg.end - 1).year(); ++y) {
          const DateRange cy = calendar_year(y);
          const auto rf = store.red_flags(flag, y);
          if (!rf) continue;
          exposure += static_cast<double>(intersect(cy, seg).days()) / cy.days() * static_cast<double>(*rf);
        }
        return exposure * wdays / seg.days();
      }));
  return out;
}

}  // namespace

double measure_value(const EventStore& store, const std::string& vessel, Measure m, DateRange window,
                     const SeverityWeights& severity) {
  if (is_profile(m)) {
    return store.profile(vessel).values[static_cast<std::size_t>(m) - static_cast<std::size_t>(Measure::kPf1)];
  }
  return window_measures(store, vessel, window, severity)[static_cast<std::size_t>(m)];
}

std::vector<double> evaluate_factors(const EventStore& store, const FactorCatalog& catalog, const std::string& vessel,
                                     Date datestamp) {
  // Lazily computed measure tables for the five annual and five cumulative windows.
  std::array<std::optional<MeasureValues>, 5> annual;
  std::array<std::optional<MeasureValues>, 5> cumulative;
  auto annual_at = [&](int k) -> const MeasureValues& {
    auto& slot = annual[k - 1];
    if (!slot) slot = window_measures(store, vessel, past_year(datestamp, k), catalog.severity);
    return *slot;
  };
  auto cumulative_at = [&](int n) -> const MeasureValues& {
    auto& slot = cumulative[n - 1];
    if (!slot) slot = window_measures(store, vessel, past_years(datestamp, n), catalog.severity);
    return *slot;
  };

  const auto& profile = store.profile(vessel);
  std::vector<double> out;
  out.reserve(catalog.size());
  for (const auto& f : catalog.factors) {
    const auto mi = static_cast<std::size_t>(f.measure);
    switch (f.format.kind) {
      case FormatKind::kNone:
        out.push_back(profile.values[mi - static_cast<std::size_t>(Measure::kPf1)]);
        break;
      case FormatKind::kAnnual: out.push_back(annual_at(f.format.years)[mi]); break;
      case FormatKind::kCumulative: out.push_back(cumulative_at(f.format.years)[mi]); break;
      case FormatKind::kDecayedCumulative: {
        std::array<double, 5> m{};
        for (int i = 1; i <= f.format.years; ++i) m[i - 1] = annual_at(i)[mi];
        out.push_back(decayed_cumulative(m, catalog.decay, f.format.years));
        break;
      }
    }
  }
  return out;
}

LabeledDataset assemble_dataset(const EventStore& store, const FactorCatalog& catalog, std::span<const Date> datestamps,
                                const AssemblyOptions& opt) {
  catalog.validate();
  opt.thresholds.validate();
  require(opt.factor_years >= 1 && opt.factor_years <= 5, "factor span must be 1..5 years");
  require(opt.label_years >= 1, "label span must be >= 1 year");
  for (const auto& f : catalog.factors) {
    require(f.format.kind == FormatKind::kNone || f.format.years <= opt.factor_years,
            "factor " + f.id + " reaches beyond the factor span");
  }

  std::vector<Date> stamps(datestamps.begin(), datestamps.end());
  std::sort(stamps.begin(), stamps.end());
  stamps.erase(std::unique(stamps.begin(), stamps.end()), stamps.end());
  for (Date d : stamps) {
    const DateRange need{d - opt.factor_years * kYearDays, d + opt.label_years * kYearDays};
    if (!store.span().covers(need)) {
      fail(ErrorKind::kCoverage, "datestamp " + d.to_string() + " needs data over " + need.to_string() +
                                     " but the store spans " + store.span().to_string());
    }
  }

  LabeledDataset out;
  out.catalog = catalog;
  const auto& vessels = store.vessel_ids();
  struct Slot {
    enum { kOk, kGap, kNonFinite } status = kOk;
    std::vector<double> values;
    int label = 0;
  };
  for (Date d : stamps) {
    std::vector<Slot> slots(vessels.size());
    parallel_for(vessels.size(), [&](std::size_t i) {
      Slot& s = slots[i];
      try {
        s.values = evaluate_factors(store, catalog, vessels[i], d);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kCoverage) throw;
        s.status = Slot::kGap;
        return;
      }
      for (double v : s.values) {
        if (!std::isfinite(v)) {
          s.status = Slot::kNonFinite;
          return;
        }
      }
      std::array<std::int64_t, 3> cats{};
      for (const auto& r : store.incidents(vessels[i], {d, d + opt.label_years * kYearDays})) {
        ++cats[static_cast<int>(r.category)];
      }
      s.label = static_cast<int>(grade_label(severity_sum(cats[0], cats[1], cats[2], catalog.severity), opt.thresholds));
    });
    for (std::size_t i = 0; i < vessels.size(); ++i) {
      ++out.stats.candidates;
      if (slots[i].status == Slot::kGap) {
        ++out.stats.coverage_gaps;
      } else if (slots[i].status == Slot::kNonFinite) {
        ++out.stats.non_finite;
      } else {
        out.push_back({vessels[i], d}, slots[i].values, slots[i].label);
      }
    }
  }
  return out;
}

}  // namespace vrisk
