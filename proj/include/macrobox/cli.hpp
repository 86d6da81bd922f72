#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "macrobox/boxes.hpp"
#include "macrobox/ensemble.hpp"
#include "macrobox/error.hpp"
#include "macrobox/io.hpp"
#include "macrobox/macro.hpp"
#include "macrobox/pr_closed_form.hpp"
#include "macrobox/rational.hpp"
#include "macrobox/symmetry.hpp"

namespace macrobox::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for --help; carries the help text.
class HelpRequested : public UsageError {
 public:
  using UsageError::UsageError;
};

struct BoxSpec {
  enum class Kind { PR, Isotropic, Deterministic, File };
  Kind kind = Kind::PR;
  Rational visibility;
  std::array<Outcome, 4> deterministic{Outcome::Plus, Outcome::Plus, Outcome::Plus, Outcome::Plus};
  std::string path;
};

struct RunConfig {
  std::string command;
  BoxSpec box;
  int n = 0;
  std::string format = "text";
  std::optional<std::string> out;
  bool allow_large = false;

  // Command parameters.
  std::string jpd_kind = "averages";
  int copies = 1;
  bool closed_form = false;
  std::string effective_kind = "both";
  int i = 0;
  int j = 0;
  int order = 2;
  int alice_setting = 0;
};

inline Outcome parse_sign(const std::string& s) {
  if (s == "+" || s == "+1" || s == "1") return Outcome::Plus;
  if (s == "-" || s == "-1") return Outcome::Minus;
  throw UsageError("deterministic outcome must be +1 or -1, got '" + s + "'");
}

/// pr | isotropic:E | det:x0,x1,y0,y1 | file:path
inline BoxSpec parse_box_spec(const std::string& text) {
  BoxSpec spec;
  if (text == "pr") return spec;
  auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string tail = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (head == "isotropic" && colon != std::string::npos) {
    spec.kind = BoxSpec::Kind::Isotropic;
    try {
      spec.visibility = Rational::parse(tail);
    } catch (const DomainError& e) {
      throw UsageError(std::string("--box isotropic: ") + e.what());
    }
    if (spec.visibility < Rational(-1) || spec.visibility > Rational(1))
      throw UsageError("--box isotropic: E=" + spec.visibility.str() + " outside [-1, 1]");
    return spec;
  }
  if (head == "det" && colon != std::string::npos) {
    spec.kind = BoxSpec::Kind::Deterministic;
    std::vector<std::string> parts;
    std::stringstream ss(tail);
    for (std::string item; std::getline(ss, item, ',');) parts.push_back(item);
    if (parts.size() != 4) throw UsageError("--box det needs four outcomes x0,x1,y0,y1");
    for (std::size_t t = 0; t < 4; ++t) spec.deterministic[t] = parse_sign(parts[t]);
    return spec;
  }
  if (head == "file" && colon != std::string::npos) {
    spec.kind = BoxSpec::Kind::File;
    spec.path = tail;
    if (!std::filesystem::exists(spec.path)) throw UsageError("--box file: '" + spec.path + "' does not exist");
    return spec;
  }
  throw UsageError("unknown box spec '" + text + "' (expected pr, isotropic:p/q, det:x0,x1,y0,y1 or file:path)");
}

inline RunConfig parse_args(const std::vector<std::string>& args) {
  RunConfig cfg;
  std::string box_text;
  CLI::App app{"Exact macroscopic statistics of N no-signalling box pairs", "macrobox"};
  app.fallthrough();
  app.require_subcommand(1);
  app.add_option("--box", box_text, "pr | isotropic:p/q | det:x0,x1,y0,y1 | file:path")->required();
  app.add_option("--n", cfg.n, "number of pairs N")->required()->check(CLI::PositiveNumber);
  app.add_option("--format", cfg.format, "text | json | csv")->check(CLI::IsMember({"text", "json", "csv"}));
  app.add_option("--out", cfg.out, "write the report to this path instead of stdout");
  app.add_flag("--allow-large", cfg.allow_large, "lift the desk bound on exhaustive enumeration");

  app.add_subcommand("box", "print the pair box or model and its validation");
  auto* eff = app.add_subcommand("effective", "effective single-pair and two-pair distributions");
  eff->add_option("--kind", cfg.effective_kind, "pair | quad | both")->check(CLI::IsMember({"pair", "quad", "both"}));
  auto* jpd = app.add_subcommand("jpd", "symmetric joint probability distribution");
  jpd->add_option("--kind", cfg.jpd_kind, "averages | fluctuations | general")
      ->check(CLI::IsMember({"averages", "fluctuations", "general"}));
  jpd->add_option("--k", cfg.copies, "copies per setting for --kind general")->check(CLI::PositiveNumber);
  jpd->add_flag("--closed-form", cfg.closed_form, "PR averages JPD from the omega closed form (any N)");
  auto* mom = app.add_subcommand("moments", "averages, second moments, fluctuations and the k-th moment");
  mom->add_option("--i", cfg.i, "Alice setting");
  mom->add_option("--j", cfg.j, "Bob setting");
  mom->add_option("--k", cfg.order, "moment order for <(A_i B_j)^k>")->check(CLI::NonNegativeNumber);
  auto* dist = app.add_subcommand("distribution", "brute-force distribution of (A_i, B_j)");
  dist->add_option("--i", cfg.i, "Alice setting");
  dist->add_option("--j", cfg.j, "Bob setting");
  auto* roh = app.add_subcommand("rohrlich", "<(B0+B1)^2> under the value-assignment extension");
  roh->add_option("--alice-setting", cfg.alice_setting, "setting Alice measures")->required();
  app.add_subcommand("gisin", "correlation matrix of (A0, A1, B0, B1) and its eigenvalues");
  app.add_subcommand("verify", "run every consistency check for one model");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  cfg.command = app.get_subcommands().front()->get_name();
  cfg.box = parse_box_spec(box_text);
  if (cfg.format == "csv" && cfg.command != "distribution" && cfg.command != "jpd")
    throw UsageError("--format csv is only available for distribution and jpd");
  if (cfg.copies != 1 && cfg.jpd_kind != "general") throw UsageError("--k only applies to --kind general");
  return cfg;
}

inline RunConfig parse_args(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int t = 1; t < argc; ++t) args.emplace_back(argv[t]);
  return parse_args(args);
}

inline DeskBound desk_bound(const RunConfig& cfg) {
  DeskBound bound = DeskBound::from_env();
  bound.allow_large = cfg.allow_large;
  return bound;
}

inline EnsembleModel build_model(const RunConfig& cfg) {
  switch (cfg.box.kind) {
    case BoxSpec::Kind::PR: return independent_pairs(make_pr_box(), cfg.n);
    case BoxSpec::Kind::Isotropic: return independent_pairs(make_isotropic_box(cfg.box.visibility), cfg.n);
    case BoxSpec::Kind::Deterministic: {
      const auto& d = cfg.box.deterministic;
      return independent_pairs(make_deterministic_box(d[0], d[1], d[2], d[3]), cfg.n);
    }
    case BoxSpec::Kind::File: return io::model_from_json(io::read_json_file(cfg.box.path), cfg.n);
  }
  throw DomainError("unreachable box kind");
}

struct CheckResult {
  enum class Status { Pass, Fail, Skip };
  std::string name;
  Status status;
  std::string detail;
};

struct VerifySummary {
  std::vector<CheckResult> checks;

  bool all_passed() const {
    for (const auto& c : checks)
      if (c.status == CheckResult::Status::Fail) return false;
    return true;
  }
};

/// Runs every consistency check for the configured model. Checks that do not
/// apply at this N are skipped and do not affect the verdict.
inline VerifySummary verify_all(const RunConfig& cfg) {
  using Status = CheckResult::Status;
  VerifySummary summary;
  const EnsembleModel model = build_model(cfg);
  const int n = model.pairs();
  const DeskBound bound = desk_bound(cfg);

  auto run = [&](const std::string& name, const std::function<CheckResult()>& body) {
    try {
      CheckResult r = body();
      r.name = name;
      summary.checks.push_back(std::move(r));
    } catch (const Error& e) {
      summary.checks.push_back({name, Status::Fail, "[" + e.check() + "] " + e.what()});
    }
  };

  run("normalization", [&]() -> CheckResult {
    if (const PairBox* box = model.pair_box()) {
      auto report = validate_pairbox(*box);
      for (const auto& v : report.violations)
        if (v.kind != Violation::Kind::NoSignalling)
          return {"", Status::Fail, std::string(kind_name(v.kind)) + " at " + v.where};
    }
    if (n > bound.max_n && !bound.allow_large) return {"", Status::Pass, "pair box normalized (table sums skipped: N above desk bound)"};
    for (int i = 0; i < model.settings_a(); ++i)
      for (int j = 0; j < model.settings_b(); ++j) {
        const Rational s = macro_distribution_bruteforce(model, i, j, bound).sum();
        if (s != Rational(1))
          return {"", Status::Fail, "settings (" + std::to_string(i) + "," + std::to_string(j) + ") sum to " + s.str()};
      }
    return {"", Status::Pass, "every uniform setting assignment sums to 1"};
  });

  run("no-signalling", [&]() -> CheckResult {
    const ValidationReport report = check_no_signalling(model, {false, bound});
    if (report.ok()) return {"", Status::Pass, "all single-particle setting swaps leave the other marginals unchanged"};
    const auto& v = report.violations.front();
    return {"", Status::Fail,
            std::to_string(report.violations.size()) + " violation(s); first: " + v.where + " residual " +
                v.residual.str()};
  });

  run("marginal identities", [&]() -> CheckResult {
    if (n < 2) return {"", Status::Skip, "averages JPD needs N >= 2"};
    const SymmetricJPD jpd = jpd_averages(model);
    const PairBox eff = effective_pair(model);
    for (int i = 0; i < model.settings_a(); ++i)
      for (int j = 0; j < model.settings_b(); ++j) {
        const Distribution m = jpd_marginal(jpd, {{Side::Alice, i, 0}, {Side::Bob, j, 0}});
        for (Outcome x : kOutcomes)
          for (Outcome y : kOutcomes)
            if (m.at({x, y}) != eff(i, j, x, y))
              return {"", Status::Fail, "JPD marginal (x" + std::to_string(i) + ";y" + std::to_string(j) +
                                            ") differs from the effective pair"};
      }
    return {"", Status::Pass, "every (x_i;y_j) marginal of the averages JPD equals p_eff"};
  });

  run("path agreement", [&]() -> CheckResult {
    for (int i = 0; i < model.settings_a(); ++i) {
      macro_mean(model, Side::Alice, i);
      macro_local_second_moment(model, Side::Alice, i);
    }
    for (int j = 0; j < model.settings_b(); ++j) {
      macro_mean(model, Side::Bob, j);
      macro_local_second_moment(model, Side::Bob, j);
    }
    for (int i = 0; i < model.settings_a(); ++i)
      for (int j = 0; j < model.settings_b(); ++j) {
        macro_correlation(model, i, j);
        macro_joint_second_moment(model, i, j);
      }
    return {"", Status::Pass, "microscopic and effective routes agree for <A>, <B>, <AB>, <A^2>, <B^2>, <(AB)^2>"};
  });

  run("oracle agreement", [&]() -> CheckResult {
    if (n > 6 || n > bound.max_n) return {"", Status::Skip, "brute force limited to N <= 6 here"};
    for (int i = 0; i < model.settings_a(); ++i)
      for (int j = 0; j < model.settings_b(); ++j) {
        moment_report(model, i, j, {6, bound});
        const MacroDistribution dist = macro_distribution_bruteforce(model, i, j, bound);
        for (int k = 1; k <= 4; ++k)
          if (macro_moment_general(model, i, j, k) != dist.moment(k, k))
            return {"", Status::Fail, "<(A" + std::to_string(i) + "B" + std::to_string(j) + ")^" + std::to_string(k) +
                                          "> differs from brute force"};
      }
    return {"", Status::Pass, "moments k <= 4 match the brute-force distribution"};
  });

  run("JPD validity (averages)", [&]() -> CheckResult {
    if (n < 2) {
      const PairBox* box = model.pair_box();
      if (box != nullptr && *box == make_pr_box()) {
        const JpdValidity v = jpd_validity(pr::averages_jpd(n));
        if (v.valid()) return {"", Status::Pass, "closed-form JPD is nonnegative"};
        return {"", Status::Fail, "closed-form JPD at N=1 has " + std::to_string(v.negative_entries.size()) +
                                      " negative entries, e.g. " + v.negative_entries.front().second.str()};
      }
      return {"", Status::Skip, "averages JPD needs N >= 2"};
    }
    const JpdValidity v = jpd_validity(jpd_averages(model));
    if (v.valid()) return {"", Status::Pass, "16 entries nonnegative, sum 1"};
    return {"", Status::Fail,
            v.normalized ? "negative entry " + v.negative_entries.front().second.str() : "entries sum to " + v.total.str()};
  });

  run("JPD validity (fluctuations)", [&]() -> CheckResult {
    if (n < 4) return {"", Status::Skip, "fluctuations JPD needs N >= 4"};
    const SymmetricJPD jpd = jpd_fluctuations(model);
    const JpdValidity v = jpd_validity(jpd);
    if (!v.valid())
      return {"", Status::Fail,
              v.normalized ? "negative entry " + v.negative_entries.front().second.str() : "entries sum to " + v.total.str()};
    const EffectiveQuadDist quad = effective_quad(model);
    const PairBox eff = effective_pair(model);
    for (int i = 0; i < model.settings_a(); ++i)
      for (int j = 0; j < model.settings_b(); ++j) {
        if (jpd_marginal(jpd, {{Side::Alice, i, 0}, {Side::Alice, i, 1}, {Side::Bob, j, 0}, {Side::Bob, j, 1}}) !=
            quad.at(i, j))
          return {"", Status::Fail, "two-pair marginal differs from the effective quad distribution"};
        const Distribution m = jpd_marginal(jpd, {{Side::Alice, i, 0}, {Side::Bob, j, 0}});
        for (Outcome x : kOutcomes)
          for (Outcome y : kOutcomes)
            if (m.at({x, y}) != eff(i, j, x, y))
              return {"", Status::Fail, "single-pair marginal differs from the effective pair"};
      }
    return {"", Status::Pass, "256 entries nonnegative; reproduces p_eff and the two-pair distribution"};
  });
  return summary;
}

// ---- text rendering

inline std::string render_box_text(const PairBox& box) {
  std::ostringstream out;
  out << "i j x y p\n";
  for (int i = 0; i < box.settings_a(); ++i)
    for (int j = 0; j < box.settings_b(); ++j)
      for (Outcome x : kOutcomes)
        for (Outcome y : kOutcomes)
          out << i << ' ' << j << ' ' << (x == Outcome::Plus ? '+' : '-') << ' ' << (y == Outcome::Plus ? '+' : '-')
              << ' ' << box(i, j, x, y) << '\n';
  return out.str();
}

inline std::string render_report_text(const ValidationReport& r) {
  std::ostringstream out;
  if (r.ok()) out << "no violations\n";
  for (const auto& v : r.violations)
    out << kind_name(v.kind) << ": " << v.where << " residual " << v.residual << " (" << v.occurrences << ")\n";
  return out.str();
}

inline std::string fixed12(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(12) << v;
  return out.str();
}

/// Executes one command, writing the report to `out`. Returns the exit code;
/// library errors propagate to the caller.
inline int execute(const RunConfig& cfg, std::ostream& out) {
  const bool json = cfg.format == "json";
  const DeskBound bound = desk_bound(cfg);
  std::ostringstream text;
  io::Json doc;
  int code = kOk;

  if (cfg.command == "verify") {
    const VerifySummary s = verify_all(cfg);
    io::Json checks = io::Json::array();
    for (const auto& c : s.checks) {
      const char* status = c.status == CheckResult::Status::Pass   ? "PASS"
                           : c.status == CheckResult::Status::Fail ? "FAIL"
                                                                   : "SKIP";
      text << "[" << status << "] " << c.name << ": " << c.detail << '\n';
      checks.push_back(io::Json{{"check", c.name}, {"status", status}, {"detail", c.detail}});
    }
    text << (s.all_passed() ? "all checks passed\n" : "some checks FAILED\n");
    doc = io::Json{{"n", cfg.n}, {"checks", checks}, {"passed", s.all_passed()}};
    code = s.all_passed() ? kOk : kFailure;
  } else {
    const EnsembleModel model = build_model(cfg);
    if (cfg.command == "box") {
      const ValidationReport ns = check_no_signalling(model, {false, bound});
      if (const PairBox* box = model.pair_box()) {
        const ValidationReport report = validate_pairbox(*box);
        text << render_box_text(*box) << render_report_text(report);
        doc = io::Json{{"box", io::to_json(*box)}, {"validation", io::to_json(report)}};
        if (box->settings_a() == 2 && box->settings_b() == 2) {
          text << "CHSH " << chsh_value(*box) << '\n';
          doc["chsh"] = chsh_value(*box).str();
        }
      } else {
        text << "explicit joint table, N=" << model.pairs() << ", "
             << model.explicit_table()->entries.size() << " nonzero entries\n"
             << render_report_text(ns);
        doc = io::Json{{"model", io::to_json(model)}, {"no_signalling", io::to_json(ns)}};
      }
    } else if (cfg.command == "effective") {
      doc = io::Json::object();
      if (cfg.effective_kind != "quad") {
        const PairBox eff = effective_pair(model);
        text << "effective pair distribution\n" << render_box_text(eff);
        doc["pair"] = io::to_json(eff);
        if (eff.settings_a() == 2 && eff.settings_b() == 2) {
          text << "CHSH " << chsh_value(eff) << '\n';
          doc["chsh"] = chsh_value(eff).str();
        }
      }
      if (cfg.effective_kind != "pair") {
        const EffectiveQuadDist quad = effective_quad(model);
        text << "effective two-pair distribution (x,x';y,y')\n";
        for (int i = 0; i < quad.settings_a(); ++i)
          for (int j = 0; j < quad.settings_b(); ++j) {
            const Distribution& d = quad.at(i, j);
            for (std::size_t idx = 0; idx < d.size(); ++idx)
              text << i << ' ' << j << ' ' << d.label(idx, 2) << ' ' << d[idx] << '\n';
          }
        doc["quad"] = io::to_json(quad);
      }
    } else if (cfg.command == "jpd") {
      SymmetricJPD jpd;
      if (cfg.closed_form) {
        if (cfg.jpd_kind != "averages" || model.pair_box() == nullptr || *model.pair_box() != make_pr_box())
          throw DomainError("--closed-form is only defined for the PR averages JPD");
        jpd = pr::averages_jpd(model.pairs());
      } else if (cfg.jpd_kind == "averages") {
        jpd = jpd_averages(model);
      } else if (cfg.jpd_kind == "fluctuations") {
        jpd = jpd_fluctuations(model);
      } else {
        jpd = jpd_general(model, cfg.copies);
      }
      const std::size_t split = jpd.schema.alice_slots();
      if (cfg.format == "csv") {
        text << "outcomes,p\n";
        for (std::size_t idx = 0; idx < jpd.dist.size(); ++idx)
          text << '"' << jpd.dist.label(idx, split) << "\"," << jpd.dist[idx] << '\n';
      } else {
        for (std::size_t idx = 0; idx < jpd.dist.size(); ++idx)
          text << jpd.dist.label(idx, split) << ' ' << jpd.dist[idx] << '\n';
        text << "valid=" << (jpd.valid ? "true" : "false") << '\n';
      }
      doc = io::to_json(jpd);
    } else if (cfg.command == "moments") {
      const MomentReport rep = moment_report(model, cfg.i, cfg.j, {6, bound});
      const Rational kth = macro_moment_general(model, cfg.i, cfg.j, cfg.order);
      auto line = [&](const std::string& name, const MomentValue& v) {
        text << name << " = " << v.value << "  [" << v.path << "]\n";
      };
      const std::string ai = "A" + std::to_string(cfg.i), bj = "B" + std::to_string(cfg.j);
      line("<" + ai + ">", rep.mean_a);
      line("<" + bj + ">", rep.mean_b);
      line("<" + ai + bj + ">", rep.correlation);
      line("<" + ai + "^2>", rep.a_squared);
      line("<" + bj + "^2>", rep.b_squared);
      line("<(" + ai + bj + ")^2>", rep.ab_squared);
      text << "Delta(" << ai << ")^2 = " << rep.delta_a.squared << "  (" << io::decimal(rep.delta_a.value) << ")\n";
      text << "Delta(" << bj << ")^2 = " << rep.delta_b.squared << "  (" << io::decimal(rep.delta_b.value) << ")\n";
      text << "Delta(" << ai << bj << ")^2 = " << rep.delta_ab.squared << "  (" << io::decimal(rep.delta_ab.value)
           << ")\n";
      text << "<(" << ai << bj << ")^" << cfg.order << "> = " << kth << "  [parity expansion]\n";
      doc = io::to_json(rep);
      doc["moment_order"] = cfg.order;
      doc["moment"] = kth.str();
    } else if (cfg.command == "distribution") {
      const MacroDistribution d = macro_distribution_bruteforce(model, cfg.i, cfg.j, bound);
      if (cfg.format == "csv") {
        text << io::to_csv(d);
      } else {
        for (int x = -d.pairs(); x <= d.pairs(); x += 2)
          for (int y = -d.pairs(); y <= d.pairs(); y += 2) text << x << ' ' << y << ' ' << d.at(x, y) << '\n';
      }
      doc = io::to_json(d);
    } else if (cfg.command == "rohrlich") {
      const Rational v = rohrlich_conditional_variance(model, cfg.alice_setting);
      text << "<(B0+B1)^2>_A" << cfg.alice_setting << " = " << v << '\n';
      doc = io::Json{{"n", model.pairs()}, {"alice_setting", cfg.alice_setting}, {"value", v.str()}};
    } else if (cfg.command == "gisin") {
      const GisinMatrix g = gisin_matrix(model);
      text << "basis A0 A1 B0 B1\n";
      for (const auto& row : g.entries) {
        for (std::size_t c = 0; c < row.size(); ++c) text << (c ? " " : "") << row[c];
        text << '\n';
      }
      text << "eigenvalues";
      for (double v : g.eigenvalues) text << ' ' << fixed12(v);
      text << '\n';
      doc = io::to_json(g);
    } else {
      throw UsageError("unknown command '" + cfg.command + "'");
    }
  }

  const std::string payload = json ? doc.dump(2) + "\n" : text.str();
  if (cfg.out) {
    std::ofstream file(*cfg.out, std::ios::binary);
    if (!file) throw DomainError("cannot write '" + *cfg.out + "'");
    file << payload;
  } else {
    out << payload;
  }
  return code;
}

/// Full front end: parse, execute, map errors to exit codes.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = parse_args(args);
  } catch (const HelpRequested& e) {
    out << e.what();
    return kOk;
  } catch (const UsageError& e) {
    err << e.what() << '\n';
    return kUsage;
  }
  try {
    return execute(cfg, out);
  } catch (const UsageError& e) {
    err << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error [" << e.check() << "]: " << e.what() << '\n';
    return kFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace macrobox::cli
