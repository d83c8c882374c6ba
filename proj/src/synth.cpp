// Copyright 2026 The vrisk Authors
// SPDX-License-Identifier: Apache-2.0

#include "vrisk/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "vrisk/parallel.hpp"

namespace vrisk {

namespace {

constexpr std::int32_t kYear = 365;

enum Stream : std::uint64_t {
  kCompanyStream = 1,
  kFlagStream,
  kVesselStream,
  kBackgroundStream,
  kLatentStream,
  kIncidentStream,
  kDuplicateStream,
};

constexpr std::array<double, 8> kProfileBase = {50000, 52000, 18, 12, 30000, 180, 190, 17000};

bool depends_on_incidents(Measure m) {
  switch (m) {
    case Measure::kIncidentsA:
    case Measure::kIncidentsB:
    case Measure::kIncidentsC:
    case Measure::kSeverity:
    case Measure::kDocAvgSeverity:
    case Measure::kDocTotalSeverity: return true;
    default: return false;
  }
}

double normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

std::int64_t poisson(Rng& rng, double mean) {
  if (mean <= 0) return 0;
  return std::poisson_distribution<std::int64_t>(mean)(rng);
}

Date uniform_date(Rng& rng, Date from, std::int32_t days) {
  return from + static_cast<std::int32_t>(uniform_index(rng, static_cast<std::size_t>(days)));
}

std::string vessel_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "V%05d", i);
  return buf;
}

std::string entity_name(const char* prefix, int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%s%03d", prefix, i);
  return buf;
}

// Entity sizes follow 1/(rank+1) weights so fleets range from a handful of
// vessels to dozens.
int skewed_index(Rng& rng, int n) {
  double total = 0;
  for (int i = 0; i < n; ++i) total += 1.0 / (i + 1);
  double u = uniform01(rng) * total;
  for (int i = 0; i < n; ++i) {
    u -= 1.0 / (i + 1);
    if (u < 0) return i;
  }
  return n - 1;
}

// Membership intervals covering the span, with at most one switch.
std::vector<MembershipInterval> memberships(Rng& rng, const std::string& vessel, EntityKind kind, const char* prefix,
                                            int n_entities, double p_switch, DateRange span) {
  const int first = skewed_index(rng, n_entities);
  std::vector<MembershipInterval> out;
  if (n_entities > 1 && uniform01(rng) < p_switch) {
    const Date at = uniform_date(rng, span.start + 30, span.days() - 60);
    int second = first;
    while (second == first) second = skewed_index(rng, n_entities);
    out.push_back({vessel, kind, entity_name(prefix, first), span.start, at});
    out.push_back({vessel, kind, entity_name(prefix, second), at, span.end});
  } else {
    out.push_back({vessel, kind, entity_name(prefix, first), span.start, span.end});
  }
  return out;
}

int entity_index_at(const std::vector<MembershipInterval>& ms, Date d) {
  for (const auto& m : ms) {
    if (m.range().contains(d)) return std::stoi(m.entity_id.substr(1));
  }
  return std::stoi(ms.back().entity_id.substr(1));
}

IncidentCategory draw_category(Rng& rng, double latent) {
  const double pa = std::min(0.5, 0.03 * std::exp(0.7 * latent));
  const double pb = 0.2;
  const double u = uniform01(rng);
  if (u < pa) return IncidentCategory::kA;
  if (u < pa + pb) return IncidentCategory::kB;
  return IncidentCategory::kC;
}

void draw_incidents(Rng& rng, const std::string& vessel, DateRange block, double rate, double latent,
                    std::vector<IncidentRecord>& out) {
  const auto n = poisson(rng, rate);
  for (std::int64_t e = 0; e < n; ++e) {
    const Date d = uniform_date(rng, block.start, block.days());
    out.push_back({vessel, d, draw_category(rng, latent)});
  }
}

}  // namespace

std::vector<PlantedEffect> SynthConfig::default_effects() {
  return {{"psc.deficiencies.y2", 0.5},    {"detentions.detentions.y3", 0.5}, {"sailing.distance.y2", 0.5},
          {"sailing.days.y4", 0.5},        {"doc.avg_deficiencies.y3", 0.5},  {"doc.avg_detentions.y2", 0.5},
          {"flag.red_flags.y2", 0.5},      {"doc.avg_severity.y2", 0.5}};
}

void SynthConfig::validate() const {
  require(n_vessels >= 2, "n_vessels must be >= 2");
  require(n_doc_companies >= 1, "n_doc_companies must be >= 1");
  require(n_flags >= 1, "n_flags must be >= 1");
  require(n_datestamps >= 1, "n_datestamps must be >= 1");
  require(noise_scale >= 0 && std::isfinite(noise_scale), "noise_scale must be finite and >= 0");
  require(base_incident_rate > 0, "base_incident_rate must be > 0");
  require(switch_probability >= 0 && switch_probability <= 1, "switch_probability must be in [0, 1]");
  std::vector<std::string> seen;
  for (const auto& e : effects) {
    const auto d = parse_factor_id(e.factor_id);
    require(d.copy == 0, "planted factor '" + e.factor_id + "' must not be a copy");
    require(std::isfinite(e.coefficient), "planted coefficient must be finite");
    require(std::find(seen.begin(), seen.end(), e.factor_id) == seen.end(),
            "planted factor '" + e.factor_id + "' listed twice");
    seen.push_back(e.factor_id);
  }
}

DateRange SynthConfig::span() const { return {start, start + span_years() * kYear}; }

std::vector<Date> SynthConfig::datestamps() const {
  std::vector<Date> out;
  for (int i = 0; i < n_datestamps; ++i) out.push_back(start + (5 + i) * kYear);
  return out;
}

SynthOutput generate(const SynthConfig& cfg) {
  cfg.validate();
  const DateRange span = cfg.span();
  const int blocks = cfg.span_years();
  auto block = [&](int b) { return DateRange{span.start + b * kYear, span.start + (b + 1) * kYear}; };

  // Company-year deficiency and detention multipliers.
  std::vector<std::vector<double>> def_mult(static_cast<std::size_t>(cfg.n_doc_companies));
  std::vector<std::vector<double>> det_mult(static_cast<std::size_t>(cfg.n_doc_companies));
  for (int c = 0; c < cfg.n_doc_companies; ++c) {
    Rng rng(derive_seed(cfg.seed, kCompanyStream, static_cast<std::uint64_t>(c)));
    for (int b = 0; b < blocks; ++b) {
      def_mult[c].push_back(std::exp(0.6 * normal(rng)));
      det_mult[c].push_back(std::exp(0.8 * normal(rng)));
    }
  }

  SynthOutput out;
  out.span = span;
  out.datestamps = cfg.datestamps();
  auto& rec = out.records;
  for (int f = 0; f < cfg.n_flags; ++f) {
    Rng rng(derive_seed(cfg.seed, kFlagStream, static_cast<std::uint64_t>(f)));
    for (int y = span.start.year(); y <= (span.end - 1).year(); ++y) {
      rec.flag_demerits.push_back({entity_name("F", f), y, poisson(rng, 2.5 * std::exp(0.5 * normal(rng)))});
    }
  }

  const auto nv = static_cast<std::size_t>(cfg.n_vessels);
  std::vector<RawRecords> per(nv);
  std::vector<std::string> names(nv);
  parallel_for(nv, [&](std::size_t i) {
    Rng rng(derive_seed(cfg.seed, kVesselStream, i));
    RawRecords& r = per[i];
    const std::string id = vessel_name(static_cast<int>(i));
    names[i] = id;

    VesselProfile p{id, {}};
    const double size = normal(rng);
    for (std::size_t k = 0; k < p.values.size(); ++k) {
      p.values[k] = kProfileBase[k] * std::exp(0.35 * size + 0.04 * normal(rng));
    }
    r.profiles.push_back(p);

    const auto docs = memberships(rng, id, EntityKind::kDoc, "D", cfg.n_doc_companies, cfg.switch_probability, span);
    const auto flags = memberships(rng, id, EntityKind::kFlag, "F", cfg.n_flags, cfg.switch_probability, span);
    r.memberships.insert(r.memberships.end(), docs.begin(), docs.end());
    r.memberships.insert(r.memberships.end(), flags.begin(), flags.end());

    const double vessel_effect = normal(rng);
    for (int b = 0; b < blocks; ++b) {
      const DateRange yr = block(b);
      const double mu = 1.5 * std::exp(0.2 * vessel_effect + 0.6 * normal(rng));
      const auto inspections = poisson(rng, 1.5);
      std::vector<Date> dates;
      for (std::int64_t k = 0; k < inspections; ++k) dates.push_back(uniform_date(rng, yr.start, yr.days()));
      std::sort(dates.begin(), dates.end());
      for (Date d : dates) {
        const auto count = poisson(rng, mu * def_mult[entity_index_at(docs, d)][b]);
        if (count > 0) r.deficiencies.push_back({id, d, count});
      }
      const Date mid = yr.start + kYear / 2;
      const auto detentions = poisson(rng, 0.8 * std::exp(0.5 * normal(rng)) * det_mult[entity_index_at(docs, mid)][b]);
      dates.clear();
      for (std::int64_t k = 0; k < detentions; ++k) dates.push_back(uniform_date(rng, yr.start, yr.days()));
      std::sort(dates.begin(), dates.end());
      for (Date d : dates) r.detentions.push_back({id, d});

      const double p_sail = std::clamp(0.55 + 0.15 * normal(rng), 0.1, 0.95);
      const double speed = 250 * std::exp(0.2 * normal(rng));
      for (Date d = yr.start; d < yr.end; d = d + 1) {
        const double u = uniform01(rng);
        const double v = 0.7 + 0.6 * uniform01(rng);
        if (u < p_sail) r.sailing.push_back({id, d, std::round(speed * v * 10) / 10});
      }
    }
  });
  for (auto& r : per) {
    auto move_into = [](auto& dst, auto& src) {
      dst.insert(dst.end(), std::make_move_iterator(src.begin()), std::make_move_iterator(src.end()));
      src.clear();
      src.shrink_to_fit();
    };
    move_into(rec.profiles, r.profiles);
    move_into(rec.memberships, r.memberships);
    move_into(rec.deficiencies, r.deficiencies);
    move_into(rec.detentions, r.detentions);
    move_into(rec.sailing, r.sailing);
  }

  // Background incidents before the first datestamp.
  const Date first = out.datestamps.front();
  std::vector<std::vector<IncidentRecord>> incidents(nv);
  parallel_for(nv, [&](std::size_t i) {
    for (int b = 0; block(b).end <= first; ++b) {
      Rng rng(derive_seed(derive_seed(cfg.seed, kBackgroundStream, i), static_cast<std::uint64_t>(b)));
      const double l = cfg.noise_scale * normal(rng);
      draw_incidents(rng, names[i], block(b), cfg.base_incident_rate * std::exp(l), l, incidents[i]);
    }
  });

  FactorCatalog planted;
  bool needs_incidents = false;
  for (const auto& e : cfg.effects) {
    planted.factors.push_back(parse_factor_id(e.factor_id));
    needs_incidents = needs_incidents || depends_on_incidents(planted.factors.back().measure);
    out.truth.informative.push_back(e.factor_id);
  }

  auto build_store = [&] {
    RawRecords r = rec;
    for (const auto& v : incidents) r.incidents.insert(r.incidents.end(), v.begin(), v.end());
    return EventStore::build(std::move(r), span);
  };
  std::optional<EventStore> store;
  for (std::size_t di = 0; di < out.datestamps.size(); ++di) {
    const Date d = out.datestamps[di];
    if (!store || needs_incidents) store = build_store();

    const std::size_t m = planted.size();
    std::vector<double> values(nv * m, 0.0);
    if (m > 0) {
      parallel_for(nv, [&](std::size_t i) {
        const auto v = evaluate_factors(*store, planted, names[i], d);
        // Signed log1p keeps heavy-tailed counts from dominating the score.
        for (std::size_t j = 0; j < m; ++j) values[i * m + j] = std::copysign(std::log1p(std::abs(v[j])), v[j]);
      });
    }
    std::vector<double> mean(m, 0.0), sd(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < nv; ++i) mean[j] += values[i * m + j];
      mean[j] /= static_cast<double>(nv);
      for (std::size_t i = 0; i < nv; ++i) sd[j] += (values[i * m + j] - mean[j]) * (values[i * m + j] - mean[j]);
      sd[j] = std::sqrt(sd[j] / static_cast<double>(nv));
    }
    std::vector<double> latent(nv);
    for (std::size_t i = 0; i < nv; ++i) {
      Rng rng(derive_seed(derive_seed(cfg.seed, kLatentStream, i), di));
      double l = cfg.noise_scale * normal(rng);
      for (std::size_t j = 0; j < m; ++j) {
        if (sd[j] > 0) l += cfg.effects[j].coefficient * (values[i * m + j] - mean[j]) / sd[j];
      }
      latent[i] = l;
      out.truth.latent.push_back({names[i], d, l});
    }
    const DateRange window{d, std::min(span.end, d + kYear)};
    parallel_for(nv, [&](std::size_t i) {
      Rng rng(derive_seed(derive_seed(cfg.seed, kIncidentStream, i), di));
      draw_incidents(rng, names[i], window, cfg.base_incident_rate * std::exp(latent[i]), latent[i], incidents[i]);
    });
  }
  for (auto& v : incidents) rec.incidents.insert(rec.incidents.end(), v.begin(), v.end());
  return out;
}

LabeledDataset plant_duplicates(const LabeledDataset& data, const std::vector<std::string>& ids,
                                double relative_noise, std::uint64_t seed) {
  require(relative_noise >= 0, "relative_noise must be >= 0");
  std::vector<std::size_t> cols;
  for (const auto& id : ids) {
    const auto j = data.catalog.index_of(id);
    if (!j) fail(ErrorKind::kNotFound, "factor '" + id + "' is not in the dataset");
    cols.push_back(*j);
  }
  const std::size_t m = data.n_factors(), mm = m + cols.size(), n = data.n_samples();
  LabeledDataset out = data;
  for (const auto& id : ids) {
    auto d = parse_factor_id(data.catalog.factors[*data.catalog.index_of(id)].id);
    out.catalog.factors.push_back(parse_factor_id(make_factor_id(d.measure, d.format, d.copy + 1)));
  }
  out.catalog.validate();
  out.values.assign(n * mm, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(data.row(i).begin(), data.row(i).end(), out.values.begin() + static_cast<std::ptrdiff_t>(i * mm));
  }
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const auto col = data.column(cols[k]);
    double mean = 0, ss = 0;
    for (double v : col) mean += v;
    mean /= static_cast<double>(n);
    for (double v : col) ss += (v - mean) * (v - mean);
    const double sd = n > 0 ? std::sqrt(ss / static_cast<double>(n)) : 0.0;
    Rng rng(derive_seed(seed, kDuplicateStream, k));
    for (std::size_t i = 0; i < n; ++i) out.values[i * mm + m + k] = col[i] + relative_noise * sd * normal(rng);
  }
  return out;
}

nlohmann::json to_json(const SynthConfig& c) {
  nlohmann::json effects = nlohmann::json::array();
  for (const auto& e : c.effects) effects.push_back({{"factor", e.factor_id}, {"coefficient", e.coefficient}});
  return {{"n_vessels", c.n_vessels},
          {"n_doc_companies", c.n_doc_companies},
          {"n_flags", c.n_flags},
          {"n_datestamps", c.n_datestamps},
          {"start", c.start.to_string()},
          {"effects", std::move(effects)},
          {"noise_scale", c.noise_scale},
          {"base_incident_rate", c.base_incident_rate},
          {"switch_probability", c.switch_probability},
          {"seed", c.seed}};
}

SynthConfig synth_config_from_json(const nlohmann::json& j, SynthConfig c) {
  if (j.is_null()) return c;
  require(j.is_object(), "synth config must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    if (k == "n_vessels") c.n_vessels = it->get<int>();
    else if (k == "n_doc_companies") c.n_doc_companies = it->get<int>();
    else if (k == "n_flags") c.n_flags = it->get<int>();
    else if (k == "n_datestamps") c.n_datestamps = it->get<int>();
    else if (k == "start") c.start = parse_date(it->get<std::string>());
    else if (k == "noise_scale") c.noise_scale = it->get<double>();
    else if (k == "base_incident_rate") c.base_incident_rate = it->get<double>();
    else if (k == "switch_probability") c.switch_probability = it->get<double>();
    else if (k == "seed") c.seed = it->get<std::uint64_t>();
    else if (k == "effects") {
      c.effects.clear();
      for (const auto& e : *it) c.effects.push_back({e.at("factor").get<std::string>(), e.value("coefficient", 1.0)});
    } else {
      fail(ErrorKind::kInvalidArgument, "unknown synth config key '" + k + "'");
    }
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const GroundTruth& t) {
  nlohmann::json latent = nlohmann::json::array();
  for (const auto& l : t.latent) latent.push_back({{"vessel_id", l.vessel_id}, {"datestamp", l.datestamp.to_string()}, {"latent", l.latent}});
  return {{"informative", t.informative}, {"latent", std::move(latent)}};
}

}  // namespace vrisk
