#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "macrobox/boxes.hpp"
#include "macrobox/ensemble.hpp"
#include "macrobox/error.hpp"
#include "macrobox/macro.hpp"
#include "macrobox/rational.hpp"
#include "macrobox/symmetry.hpp"

namespace macrobox::io {

using Json = nlohmann::ordered_json;

/// Twelve significant digits, as used for every floating-point field.
inline std::string decimal(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline Rational rational_field(const Json& j, const char* what) {
  if (!j.is_string()) throw DomainError(std::string(what) + " must be a \"p/q\" string");
  return Rational::parse(j.get<std::string>());
}

inline int int_field(const Json& obj, const char* key) {
  if (!obj.contains(key) || !obj.at(key).is_number_integer())
    throw DomainError(std::string("missing or non-integer field '") + key + "'");
  return obj.at(key).get<int>();
}

// ---- PairBox: {s_a, s_b, table: [[i, j, x, y, "p/q"], ...]}

inline Json to_json(const PairBox& box) {
  Json table = Json::array();
  for (int i = 0; i < box.settings_a(); ++i)
    for (int j = 0; j < box.settings_b(); ++j)
      for (Outcome x : kOutcomes)
        for (Outcome y : kOutcomes) table.push_back(Json::array({i, j, value(x), value(y), box(i, j, x, y).str()}));
  return Json{{"s_a", box.settings_a()}, {"s_b", box.settings_b()}, {"table", std::move(table)}};
}

/// Cells missing from `table` are zero.
inline PairBox pairbox_from_json(const Json& j) {
  PairBox box(int_field(j, "s_a"), int_field(j, "s_b"));
  if (!j.contains("table") || !j.at("table").is_array()) throw DomainError("pair box JSON needs a 'table' array");
  for (const auto& row : j.at("table")) {
    if (!row.is_array() || row.size() != 5) throw DomainError("pair box rows are [i, j, x, y, \"p/q\"]");
    box(row[0].get<int>(), row[1].get<int>(), outcome_from_int(row[2].get<int>()), outcome_from_int(row[3].get<int>())) =
        rational_field(row[4], "table probability");
  }
  return box;
}

// ---- Explicit joint: {n, s_a, s_b, entries: [{settings_a, settings_b, outcomes_a, outcomes_b, p}]}

inline std::vector<Outcome> outcome_list(const Json& j, const char* what) {
  if (!j.is_array()) throw DomainError(std::string(what) + " must be an array of +1/-1");
  std::vector<Outcome> out;
  for (const auto& v : j) out.push_back(outcome_from_int(v.get<int>()));
  return out;
}

inline EnsembleModel explicit_joint_from_json(const Json& j) {
  const int n = int_field(j, "n");
  const int s_a = int_field(j, "s_a");
  const int s_b = int_field(j, "s_b");
  if (!j.contains("entries") || !j.at("entries").is_array())
    throw DomainError("explicit joint JSON needs an 'entries' array");
  std::vector<JointEntry> entries;
  for (const auto& e : j.at("entries")) {
    JointEntry entry;
    entry.settings.alice = e.at("settings_a").get<std::vector<int>>();
    entry.settings.bob = e.at("settings_b").get<std::vector<int>>();
    entry.outcomes.alice = outcome_list(e.at("outcomes_a"), "outcomes_a");
    entry.outcomes.bob = outcome_list(e.at("outcomes_b"), "outcomes_b");
    entry.p = rational_field(e.at("p"), "entry probability");
    entries.push_back(std::move(entry));
  }
  return explicit_joint(n, s_a, s_b, entries);
}

inline Json to_json(const EnsembleModel& model) {
  Json entries = Json::array();
  auto ints = [](const std::vector<Outcome>& v) {
    Json a = Json::array();
    for (Outcome o : v) a.push_back(value(o));
    return a;
  };
  auto emit = [&](std::uint64_t sidx, std::uint64_t oidx, const Rational& p) {
    const auto s = model.settings_from_index(sidx);
    const auto o = model.outcomes_from_index(oidx);
    entries.push_back(Json{{"settings_a", s.alice},
                           {"settings_b", s.bob},
                           {"outcomes_a", ints(o.alice)},
                           {"outcomes_b", ints(o.bob)},
                           {"p", p.str()}});
  };
  if (const auto* table = model.explicit_table()) {
    for (const auto& [key, p] : table->entries) emit(key.first, key.second, p);
  } else {
    const std::uint64_t outcomes = std::uint64_t{1} << (2 * model.pairs());
    for (std::uint64_t sidx = 0; sidx < model.setting_assignments(); ++sidx) {
      const auto s = model.settings_from_index(sidx);
      for (std::uint64_t oidx = 0; oidx < outcomes; ++oidx) {
        Rational p = joint_probability(model, s, model.outcomes_from_index(oidx));
        if (!p.is_zero()) emit(sidx, oidx, p);
      }
    }
  }
  return Json{{"n", model.pairs()}, {"s_a", model.settings_a()}, {"s_b", model.settings_b()}, {"entries", entries}};
}

/// Dispatches on the document shape: "entries" means an explicit joint
/// table, "table" a single pair box replicated over `n` pairs.
inline EnsembleModel model_from_json(const Json& j, int n) {
  if (j.contains("entries")) {
    EnsembleModel model = explicit_joint_from_json(j);
    if (model.pairs() != n)
      throw DomainError("table describes N=" + std::to_string(model.pairs()) + " but N=" + std::to_string(n) +
                        " was requested");
    return model;
  }
  if (j.contains("table")) return independent_pairs(pairbox_from_json(j), n);
  throw DomainError("model JSON needs either 'table' (pair box) or 'entries' (explicit joint)");
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DomainError("'" + path + "' is not valid JSON: " + e.what());
  }
}

// ---- SymmetricJPD: {schema: {alice: [{setting, copies}], bob: [...]}, entries: [{outcomes, p}], valid}

inline std::size_t parse_label(const std::string& label, std::size_t slots, std::size_t split) {
  std::size_t idx = 0, seen = 0;
  if (label.size() < 2 || label.front() != '(' || label.back() != ')')
    throw DomainError("malformed outcome label '" + label + "'");
  for (std::size_t c = 1; c + 1 < label.size(); ++c) {
    const char ch = label[c];
    if (ch == '+' || ch == '-') {
      idx = (idx << 1) | (ch == '-' ? 1U : 0U);
      ++seen;
    } else if (ch == ',' || ch == ';') {
      if ((ch == ';') != (seen == split && split != 0)) throw DomainError("misplaced separator in '" + label + "'");
    } else {
      throw DomainError("malformed outcome label '" + label + "'");
    }
  }
  if (seen != slots) throw DomainError("label '" + label + "' has the wrong number of outcomes");
  return idx;
}

inline Json to_json(const SymmetricJPD& jpd) {
  auto groups = [](const std::vector<SlotGroup>& gs) {
    Json a = Json::array();
    for (const auto& g : gs) a.push_back(Json{{"setting", g.setting}, {"copies", g.copies}});
    return a;
  };
  Json entries = Json::array();
  const std::size_t split = jpd.schema.alice_slots();
  for (std::size_t idx = 0; idx < jpd.dist.size(); ++idx)
    entries.push_back(Json{{"outcomes", jpd.dist.label(idx, split)}, {"p", jpd.dist[idx].str()}});
  return Json{{"schema", Json{{"alice", groups(jpd.schema.alice)}, {"bob", groups(jpd.schema.bob)}}},
              {"entries", std::move(entries)},
              {"valid", jpd.valid}};
}

inline SymmetricJPD jpd_from_json(const Json& j) {
  SymmetricJPD jpd;
  auto groups = [](const Json& a) {
    std::vector<SlotGroup> out;
    for (const auto& g : a) out.push_back({int_field(g, "setting"), int_field(g, "copies")});
    return out;
  };
  jpd.schema.alice = groups(j.at("schema").at("alice"));
  jpd.schema.bob = groups(j.at("schema").at("bob"));
  jpd.dist = Distribution(jpd.schema.total_slots());
  std::vector<bool> seen(jpd.dist.size(), false);
  for (const auto& e : j.at("entries")) {
    const std::size_t idx =
        parse_label(e.at("outcomes").get<std::string>(), jpd.schema.total_slots(), jpd.schema.alice_slots());
    if (seen[idx]) throw DomainError("duplicate JPD entry " + e.at("outcomes").get<std::string>());
    seen[idx] = true;
    jpd.dist[idx] = rational_field(e.at("p"), "JPD entry");
  }
  jpd.valid = j.at("valid").get<bool>();
  return jpd;
}

// ---- Reports

inline Json to_json(const MomentValue& v) { return Json{{"value", v.value.str()}, {"path", v.path}}; }
inline Json to_json(const Fluctuation& f) { return Json{{"squared", f.squared.str()}, {"value", decimal(f.value)}}; }

inline Json to_json(const MomentReport& r) {
  return Json{{"n", r.pairs},
              {"i", r.i},
              {"j", r.j},
              {"mean_a", to_json(r.mean_a)},
              {"mean_b", to_json(r.mean_b)},
              {"correlation_ab", to_json(r.correlation)},
              {"second_moment_a", to_json(r.a_squared)},
              {"second_moment_b", to_json(r.b_squared)},
              {"second_moment_ab", to_json(r.ab_squared)},
              {"delta_a", to_json(r.delta_a)},
              {"delta_b", to_json(r.delta_b)},
              {"delta_ab", to_json(r.delta_ab)}};
}

inline Json to_json(const GisinMatrix& g) {
  Json rows = Json::array();
  for (const auto& row : g.entries) {
    Json r = Json::array();
    for (const auto& v : row) r.push_back(v.str());
    rows.push_back(std::move(r));
  }
  Json eig = Json::array();
  for (double v : g.eigenvalues) eig.push_back(decimal(v));
  return Json{{"n", g.pairs}, {"basis", Json::array({"A0", "A1", "B0", "B1"})}, {"matrix", rows}, {"eigenvalues", eig}};
}

inline Json to_json(const MacroDistribution& d) {
  Json entries = Json::array();
  for (int x = -d.pairs(); x <= d.pairs(); x += 2)
    for (int y = -d.pairs(); y <= d.pairs(); y += 2) entries.push_back(Json{{"X", x}, {"Y", y}, {"p", d.at(x, y).str()}});
  return Json{{"n", d.pairs()}, {"entries", std::move(entries)}};
}

/// Header X,Y,p; X then Y ascending; every lattice point listed.
inline std::string to_csv(const MacroDistribution& d) {
  std::ostringstream out;
  out << "X,Y,p\n";
  for (int x = -d.pairs(); x <= d.pairs(); x += 2)
    for (int y = -d.pairs(); y <= d.pairs(); y += 2) out << x << ',' << y << ',' << d.at(x, y).str() << '\n';
  return out.str();
}

inline Json to_json(const ValidationReport& report) {
  Json v = Json::array();
  for (const auto& viol : report.violations)
    v.push_back(Json{{"kind", kind_name(viol.kind)},
                     {"where", viol.where},
                     {"residual", viol.residual.str()},
                     {"occurrences", viol.occurrences}});
  return Json{{"ok", report.ok()}, {"violations", std::move(v)}};
}

inline Json to_json(const EffectiveQuadDist& quad) {
  Json out = Json::array();
  for (int i = 0; i < quad.settings_a(); ++i)
    for (int j = 0; j < quad.settings_b(); ++j) {
      Json entries = Json::array();
      const Distribution& d = quad.at(i, j);
      for (std::size_t idx = 0; idx < d.size(); ++idx)
        entries.push_back(Json{{"outcomes", d.label(idx, 2)}, {"p", d[idx].str()}});
      out.push_back(Json{{"i", i}, {"j", j}, {"entries", std::move(entries)}});
    }
  return out;
}

}  // namespace macrobox::io
