#include "loyalda/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "loyalda/emit.hpp"
#include "loyalda/engine.hpp"
#include "loyalda/experiments.hpp"
#include "loyalda/oracle.hpp"
#include "loyalda/serialize.hpp"
#include "loyalda/stability.hpp"

namespace loyalda {

namespace {

struct UsageError : Error {
  using Error::Error;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<std::string> config_tokens(const std::string& text) {
  std::vector<std::string> tokens;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty() || key.find_first_of(" \t") != std::string::npos) {
      throw Error("config line " + std::to_string(lineno) + ": bad key '" + key + "'");
    }
    if (value == "true") {
      tokens.push_back("--" + key);
    } else if (value != "false") {
      tokens.push_back("--" + key + "=" + value);
    }
  }
  return tokens;
}

namespace {

struct Options {
  std::string config;
  std::optional<std::uint32_t> balanced;
  std::optional<std::uint32_t> unbalanced;
  std::string instance;
  std::string k = "0";
  std::string next = "fifo";
  std::uint64_t seed = 0;
  bool amnesiac = false;
  bool history = false;
  bool verify = false;
  std::string save_instance;

  std::string preset;
  std::string market = "unbalanced";
  std::uint32_t n = 0;
  std::vector<std::string> k_grid;
  std::uint32_t seeds = 100;
  std::uint64_t base_seed = 0;
  std::string out_dir;
  std::vector<std::string> formats;
  std::string stem;
  std::size_t threads = 0;
  std::uint32_t bins = 50;

  std::string kind;
  double q = 1.0;
  std::uint64_t trials = 1000;
  std::uint32_t attempts = 1000;
  std::uint32_t hospitals = 2;
  bool full_universe = false;

  std::string matching;
  double sample = 1.0;

  int verbose = 0;
};

void append(Json& doc, const Json& more) {
  for (const auto& [key, value] : more.items()) doc[key] = value;
}

std::filesystem::path output_dir(const Options& o) {
  if (!o.out_dir.empty()) return o.out_dir;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return ".";
}

std::vector<Format> formats(const Options& o, std::vector<Format> fallback) {
  if (o.formats.empty()) return fallback;
  std::vector<Format> out;
  for (const auto& f : o.formats) out.push_back(parse_format(f));
  return out;
}

// k for an arbitrary shape: the expression sees n = |H| and must land in [0, |D|-1].
std::uint32_t resolve_k_for(const std::string& expr, MarketShape shape) {
  const double v = std::floor(eval_expression(expr, shape.num_hospitals));
  if (!std::isfinite(v) || v < 0 || v > shape.num_doctors - 1) {
    throw UsageError("k '" + expr + "' must evaluate into [0, " +
                     std::to_string(shape.num_doctors - 1) + "]");
  }
  return static_cast<std::uint32_t>(v);
}

struct Prefs {
  PreferenceOracle oracle;
  std::optional<Instance> instance;
  Json config;
};

Prefs load_prefs(const Options& o) {
  const int given = o.balanced.has_value() + o.unbalanced.has_value() + !o.instance.empty();
  if (given != 1) throw UsageError("give exactly one of --balanced, --unbalanced, --instance");
  Json config;
  if (!o.instance.empty()) {
    auto inst = read_instance_file(o.instance);
    config["instance"] = o.instance;
    return {PreferenceOracle::from_explicit(inst), std::move(inst), std::move(config)};
  }
  const Market market{o.balanced ? MarketKind::kBalanced : MarketKind::kUnbalanced,
                      o.balanced ? *o.balanced : *o.unbalanced};
  if (market.n == 0) throw UsageError("market size must be positive");
  config["market"] = to_string(market.kind);
  config["n"] = market.n;
  config["seed"] = o.seed;
  return {PreferenceOracle::lazy(market.shape(), o.seed), std::nullopt, std::move(config)};
}

void add_market_flags(CLI::App* app, Options& o) {
  app->add_option("--balanced", o.balanced, "Balanced market with n doctors and n hospitals");
  app->add_option("--unbalanced", o.unbalanced, "Market with n + 1 doctors and n hospitals");
  app->add_option("--instance", o.instance, "Explicit instance file");
  app->add_option("--seed", o.seed, "Seed of the random preferences and queue order");
}

int cmd_run(const Options& o, std::ostream& out) {
  auto p = load_prefs(o);
  const auto shape = p.oracle.shape();
  const auto k = resolve_k_for(o.k, shape);
  const auto next_kind = parse_next_kind(o.next);
  // Explicit instances propose in index order; random markets shuffle by seed.
  auto next = p.instance ? NextPolicy::in_index_order(next_kind, shape.num_doctors, o.seed)
                         : NextPolicy::shuffled(next_kind, shape.num_doctors, o.seed);
  const auto accept = AcceptPolicy::loyalty(k);
  const auto outcome =
      run(p.oracle, std::move(next), accept, {.amnesiac = o.amnesiac, .record_history = o.history});

  Json doc;
  p.config["k"] = k;
  p.config["next_policy"] = to_string(next_kind);
  p.config["amnesiac"] = o.amnesiac;
  doc["config"] = std::move(p.config);
  append(doc, to_json(outcome, o.history));
  if (o.verify) doc["blocking_report"] = to_json(verify_stable(outcome.final_matching, p.oracle, accept));
  if (!o.save_instance.empty()) {
    std::ostringstream text;
    write_instance(text, p.oracle.materialize());
    write_file(o.save_instance, text.str());
  }
  out << doc.dump(2) << '\n';
  return kExitOk;
}

ExperimentSpec sweep_spec(const Options& o, const CLI::App* app) {
  const auto given = [&](const char* name) { return app->count(name) > 0; };
  ExperimentSpec spec;
  if (!o.preset.empty()) {
    spec = preset(o.preset, given("--n") ? std::optional<std::uint32_t>(o.n) : std::nullopt);
  } else {
    if (!given("--n")) throw UsageError("sweep needs --preset or --n");
    spec.market = {parse_market_kind(o.market), o.n};
    spec.k_grid = {"0"};
    spec.seeds = o.seeds;
  }
  if (given("--market")) spec.market.kind = parse_market_kind(o.market);
  if (given("--k-grid")) spec.k_grid = o.k_grid;
  if (given("--seeds")) spec.seeds = o.seeds;
  spec.base_seed = o.base_seed;
  spec.next = parse_next_kind(o.next);
  spec.amnesiac = o.amnesiac;
  spec.threads = o.threads;
  try {
    spec.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return spec;
}

int cmd_sweep(const Options& o, const CLI::App* app, std::ostream& out, std::ostream& err) {
  const auto spec = sweep_spec(o, app);
  const auto fmts = formats(o, {Format::kCsv, Format::kJson, Format::kSvg});
  const auto result = sweep(spec);
  const auto stem = !o.stem.empty() ? o.stem : !o.preset.empty() ? o.preset : std::string("sweep");
  const auto files = emit(result, fmts, output_dir(o), stem);
  Json doc = to_json(result);
  Json paths = Json::array();
  for (const auto& f : files) {
    paths.push_back(f.string());
    if (o.verbose) err << "wrote " << f.string() << '\n';
  }
  doc["files"] = std::move(paths);
  out << doc.dump(2) << '\n';
  return kExitOk;
}

int cmd_snapshot(const Options& o, const CLI::App* app, std::ostream& out, std::ostream& err) {
  const auto given = [&](const char* name) { return app->count(name) > 0; };
  Market market{MarketKind::kUnbalanced, 500};
  std::string k_expr = o.k;
  if (!o.preset.empty()) {
    const auto spec = preset(o.preset);
    if (!spec.snapshot_final) throw UsageError("preset " + o.preset + " is not a snapshot preset");
    market = spec.market;
    if (!given("--k")) k_expr = spec.k_grid.front();
  }
  if (given("--n")) market.n = o.n;
  if (market.n == 0) throw UsageError("market size must be positive");
  std::uint32_t k = 0;
  try {
    k = resolve_k(k_expr, market);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (o.bins == 0) throw UsageError("--bins must be positive");
  const auto snap = snapshot(market, k, o.seed, parse_next_kind(o.next), o.bins);
  const auto stem = !o.stem.empty() ? o.stem : !o.preset.empty() ? o.preset : std::string("snapshot");
  const auto files = emit(snap, formats(o, {Format::kJson, Format::kSvg}), output_dir(o), stem);

  Json doc{{"config", {{"market", to_string(market.kind)},
                       {"n", market.n},
                       {"k", k},
                       {"seed", o.seed},
                       {"next_policy", o.next}}},
           {"rematched", snap.rematched.size()},
           {"s_a_size", snap.s_a.size()},
           {"t_size", snap.t.size()},
           {"s_a_rematched_fraction", snap.rematched_fraction_of(snap.s_a)},
           {"t_rematched_fraction", snap.rematched_fraction_of(snap.t)},
           {"t_improved_fraction", snap.improved_fraction_of(snap.t)},
           {"unbalanced_proposers", snap.unbalanced_proposers}};
  Json paths = Json::array();
  for (const auto& f : files) {
    paths.push_back(f.string());
    if (o.verbose) err << "wrote " << f.string() << '\n';
  }
  doc["files"] = std::move(paths);
  out << doc.dump(2) << '\n';
  return kExitOk;
}

int cmd_oracle(const Options& o, std::ostream& out) {
  Json doc;
  Json config{{"kind", o.kind}};
  if (o.kind == "coupon" || o.kind == "absent" || o.kind == "min") {
    if (o.n == 0 || o.trials == 0) throw UsageError("--n and --trials must be positive");
    config["n"] = o.n;
    config["trials"] = o.trials;
    config["seed"] = o.seed;
    if (o.kind == "coupon") {
      doc = to_json(coupon_collector_sim(o.n, o.trials, o.seed, o.threads));
      doc["expected_mean"] = o.n * harmonic(o.n);
    } else if (o.kind == "absent") {
      if (!(o.q > 0 && o.q <= 1)) throw UsageError("--q must lie in (0, 1]");
      config["q"] = o.q;
      doc = to_json(absent_minded_sim(o.n, o.q, o.trials, o.seed, o.threads));
      doc["mean_bound"] = o.n / o.q * harmonic(o.n);
    } else {
      const auto k = static_cast<std::uint32_t>(std::stoul(o.k));
      if (k < 1 || k > o.n) throw UsageError("--k must lie in [1, n]");
      config["k"] = k;
      doc["trials"] = o.trials;
      doc["mean_min"] = min_element_sim(o.n, k, o.trials, o.seed, o.threads);
      doc["expected_mean"] = double(o.n + 1) / double(k + 1);
    }
  } else if (o.kind == "enumerate" || o.kind == "rural") {
    if (o.kind == "rural" && o.instance.empty()) {
      // Search random instances with |D| = |H| + 1 for one where the unmatched
      // doctor differs between stable matchings.
      const MarketShape shape{o.hospitals + 1, o.hospitals};
      const auto k = resolve_k_for(o.k, shape);
      config["hospitals"] = o.hospitals;
      config["k"] = k;
      config["attempts"] = o.attempts;
      config["seed"] = o.seed;
      const auto found = find_rural_counterexample(shape, AcceptPolicy::loyalty(k), o.attempts, o.seed);
      doc["counterexample_found"] = found.has_value();
      if (found) {
        std::ostringstream text;
        write_instance(text, *found);
        doc["instance"] = text.str();
        doc["stable_set"] = to_json(enumerate_stable(*found, AcceptPolicy::loyalty(k)));
      }
    } else {
      if (o.instance.empty()) throw UsageError("--kind " + o.kind + " needs --instance");
      const auto inst = read_instance_file(o.instance);
      const auto k = resolve_k_for(o.k, inst.shape());
      config["instance"] = o.instance;
      config["k"] = k;
      config["full_universe"] = o.full_universe;
      doc = to_json(enumerate_stable(inst, AcceptPolicy::loyalty(k), {.full_universe = o.full_universe}));
      if (o.kind == "rural") doc["rural_hospital_holds"] = rural_hospital_check(inst);
    }
  } else {
    throw UsageError("unknown --kind '" + o.kind + "' (coupon, absent, min, enumerate, rural)");
  }
  Json full{{"config", std::move(config)}};
  append(full, doc);
  out << full.dump(2) << '\n';
  return kExitOk;
}

int cmd_verify(const Options& o, std::ostream& out) {
  auto p = load_prefs(o);
  const auto shape = p.oracle.shape();
  const auto k = resolve_k_for(o.k, shape);
  if (!(o.sample > 0 && o.sample <= 1)) throw UsageError("--sample must lie in (0, 1]");
  Json parsed;
  try {
    parsed = Json::parse(read_text(o.matching));
  } catch (const Json::parse_error& e) {
    throw UsageError("matching file " + o.matching + ": " + e.what());
  }
  const auto matching = matching_from_json(parsed, shape);
  if (!p.instance) {
    // Lazy preferences depend on the order they are queried in, so the market
    // is the one revealed by the run this seed describes.
    run(p.oracle, NextPolicy::shuffled(parse_next_kind(o.next), shape.num_doctors, o.seed),
        AcceptPolicy::loyalty(k), {.amnesiac = o.amnesiac});
    p.config["next_policy"] = o.next;
    p.config["amnesiac"] = o.amnesiac;
  }
  const auto report =
      verify_stable(matching, p.oracle, AcceptPolicy::loyalty(k), {.sample_fraction = o.sample, .seed = o.seed});
  p.config["k"] = k;
  p.config["matching"] = o.matching;
  p.config["sample"] = o.sample;
  Json doc{{"config", std::move(p.config)}};
  append(doc, to_json(report));
  out << doc.dump(2) << '\n';
  return report.is_stable ? kExitOk : kExitUnstable;
}

// Flags given on the command line win over the config file.
std::vector<std::string> merge_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || args.empty()) return args;
  std::vector<std::string> tokens;
  try {
    tokens = config_tokens(read_text(path));
  } catch (const Error& e) {
    throw UsageError(path + ": " + e.what());
  }
  const auto key_of = [](const std::string& tok) { return tok.substr(0, tok.find('=')); };
  std::vector<std::string> merged{args.front()};
  for (const auto& tok : tokens) {
    const auto key = key_of(tok);
    const bool overridden = std::any_of(args.begin() + 1, args.end(),
                                        [&](const std::string& a) { return key_of(a) == key; });
    if (!overridden) merged.push_back(tok);
  }
  merged.insert(merged.end(), args.begin() + 1, args.end());
  return merged;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app("Deferred acceptance simulator for markets with loyal hospitals", "loyalda");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "File of key = value lines; flags override it");
    sub->add_flag("-v,--verbose", o.verbose, "Progress messages on standard error");
  };
  const auto next_flag = [&](CLI::App* sub) {
    sub->add_option("--next", o.next, "Next policy: fifo, lifo or random")
        ->check(CLI::IsMember({"fifo", "lifo", "random"}));
  };
  const auto output_flags = [&](CLI::App* sub) {
    sub->add_option("--out-dir", o.out_dir,
                    std::string("Output directory (default $") + kOutDirEnv + " or .)");
    sub->add_option("--format", o.formats, "Output formats: csv, json, svg")
        ->delimiter(',')
        ->check(CLI::IsMember({"csv", "json", "svg"}));
    sub->add_option("--stem", o.stem, "Output file name stem");
  };

  auto* run_cmd = app.add_subcommand("run", "Run one market and print the outcome as JSON");
  common(run_cmd);
  add_market_flags(run_cmd, o);
  run_cmd->add_option("--k", o.k, "Loyalty, a number or an expression in n");
  next_flag(run_cmd);
  run_cmd->add_flag("--amnesiac", o.amnesiac, "Doctors draw hospitals with repetition");
  run_cmd->add_flag("--history", o.history, "Include every proposal in the output");
  run_cmd->add_flag("--verify", o.verify, "Attach a blocking-pair report");
  run_cmd->add_option("--save-instance", o.save_instance, "Write the full preferences after the run");

  auto* sweep_cmd = app.add_subcommand("sweep", "Run a grid of loyalty values over many seeds");
  common(sweep_cmd);
  sweep_cmd->add_option("--preset", o.preset, "fig1a, fig1b or fig3")
      ->check(CLI::IsMember({"fig1a", "fig1b", "fig3"}));
  sweep_cmd->add_option("--market", o.market, "balanced or unbalanced")
      ->check(CLI::IsMember({"balanced", "unbalanced"}));
  sweep_cmd->add_option("--n", o.n, "Number of hospitals");
  sweep_cmd->add_option("--k-grid", o.k_grid, "Comma separated loyalty expressions")->delimiter(',');
  sweep_cmd->add_option("--seeds", o.seeds, "Runs per loyalty value")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--base-seed", o.base_seed, "Seed all run seeds derive from");
  next_flag(sweep_cmd);
  sweep_cmd->add_flag("--amnesiac", o.amnesiac, "Doctors draw hospitals with repetition");
  sweep_cmd->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  output_flags(sweep_cmd);

  auto* snap_cmd = app.add_subcommand("snapshot", "Hospital rank histograms at both phase ends");
  common(snap_cmd);
  snap_cmd->add_option("--preset", o.preset, "fig4, fig5, fig6 or fig7")
      ->check(CLI::IsMember({"fig4", "fig5", "fig6", "fig7"}));
  snap_cmd->add_option("--n", o.n, "Number of hospitals (n + 1 doctors)");
  snap_cmd->add_option("--k", o.k, "Loyalty, a number or an expression in n");
  snap_cmd->add_option("--seed", o.seed, "Run seed");
  snap_cmd->add_option("--bins", o.bins, "Histogram bins");
  next_flag(snap_cmd);
  output_flags(snap_cmd);

  auto* oracle_cmd = app.add_subcommand("oracle", "Reference simulators and stable-set enumeration");
  common(oracle_cmd);
  oracle_cmd->add_option("--kind", o.kind, "coupon, absent, min, enumerate or rural")->required();
  oracle_cmd->add_option("--n", o.n, "Number of coupons or set size");
  oracle_cmd->add_option("--q", o.q, "Keep probability of the absent-minded collector");
  oracle_cmd->add_option("--k", o.k, "Subset size (min) or loyalty (enumerate, rural)");
  oracle_cmd->add_option("--trials", o.trials, "Monte Carlo trials");
  oracle_cmd->add_option("--seed", o.seed, "Seed");
  oracle_cmd->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  oracle_cmd->add_option("--instance", o.instance, "Instance file for enumerate and rural");
  oracle_cmd->add_option("--hospitals", o.hospitals, "Hospitals in the rural counterexample search")
      ->check(CLI::Range(1u, kEnumerationLimit - 1));
  oracle_cmd->add_option("--attempts", o.attempts, "Instances tried by the counterexample search");
  oracle_cmd->add_flag("--full-universe", o.full_universe, "Also enumerate hospital-unsaturated matchings");

  auto* verify_cmd = app.add_subcommand("verify", "Check a matching for blocking pairs");
  common(verify_cmd);
  add_market_flags(verify_cmd, o);
  verify_cmd->add_option("--k", o.k, "Loyalty, a number or an expression in n");
  verify_cmd->add_option("--matching", o.matching, "Matching JSON, or a run outcome")->required();
  verify_cmd->add_option("--sample", o.sample, "Fraction of doctors to check");
  next_flag(verify_cmd);
  verify_cmd->add_flag("--amnesiac", o.amnesiac, "The replayed run was amnesiac");

  try {
    auto merged = merge_config(args);
    std::reverse(merged.begin(), merged.end());
    app.parse(merged);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto* failing = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << failing->help();
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(o, out);
    if (sweep_cmd->parsed()) return cmd_sweep(o, sweep_cmd, out, err);
    if (snap_cmd->parsed()) return cmd_snapshot(o, snap_cmd, out, err);
    if (oracle_cmd->parsed()) return cmd_oracle(o, out);
    if (verify_cmd->parsed()) return cmd_verify(o, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace loyalda
