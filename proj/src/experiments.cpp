#include "loyalda/experiments.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "loyalda/parallel.hpp"
#include "loyalda/rng.hpp"

namespace loyalda {

std::string_view to_string(MarketKind kind) {
  return kind == MarketKind::kBalanced ? "balanced" : "unbalanced";
}

MarketKind parse_market_kind(std::string_view text) {
  if (text == "balanced") return MarketKind::kBalanced;
  if (text == "unbalanced") return MarketKind::kUnbalanced;
  throw Error("unknown market '" + std::string(text) + "' (expected balanced or unbalanced)");
}

MarketShape Market::shape() const {
  return {kind == MarketKind::kBalanced ? n : n + 1, n};
}

namespace {

class ExprParser {
 public:
  ExprParser(std::string_view text, double n) : text_(text), n_(n) {}

  double parse() {
    const double v = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error("bad expression '" + std::string(text_) + "': " + what);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  double expr() {
    double v = term();
    for (;;) {
      if (eat('+')) v += term();
      else if (eat('-')) v -= term();
      else return v;
    }
  }

  double term() {
    double v = unary();
    for (;;) {
      if (eat('*')) {
        v *= unary();
      } else if (eat('/')) {
        const double d = unary();
        if (d == 0) fail("division by zero");
        v /= d;
      } else {
        return v;
      }
    }
  }

  double unary() {
    if (eat('-')) return -unary();
    return primary();
  }

  double primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end");
    if (eat('(')) {
      const double v = expr();
      if (!eat(')')) fail("missing ')'");
      return v;
    }
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      const std::string rest(text_.substr(pos_));
      double v = 0;
      try {
        v = std::stod(rest, &used);
      } catch (const std::exception&) {
        fail("bad number");
      }
      pos_ += used;
      return v;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      const std::string_view name = text_.substr(start, pos_ - start);
      if (name == "n") return n_;
      if (!eat('(')) fail("unknown name '" + std::string(name) + "'");
      const double arg = expr();
      if (!eat(')')) fail("missing ')'");
      if (name == "sqrt") {
        if (arg < 0) fail("sqrt of a negative number");
        return std::sqrt(arg);
      }
      if (name == "ln") {
        if (arg <= 0) fail("ln of a non-positive number");
        return std::log(arg);
      }
      if (name == "floor") return std::floor(arg);
      fail("unknown function '" + std::string(name) + "'");
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  std::string_view text_;
  double n_;
  std::size_t pos_ = 0;
};

}  // namespace

double eval_expression(std::string_view expr, double n) { return ExprParser(expr, n).parse(); }

std::uint32_t resolve_k(std::string_view expr, const Market& market) {
  const double v = std::floor(eval_expression(expr, market.n));
  const auto max_k = market.shape().num_doctors - 1;
  if (!std::isfinite(v) || v < 0 || v > max_k) {
    throw Error("k '" + std::string(expr) + "' evaluates to " + std::to_string(v) +
                ", outside [0, " + std::to_string(max_k) + "]");
  }
  return static_cast<std::uint32_t>(v);
}

std::vector<std::uint32_t> ExperimentSpec::resolved_k() const {
  std::vector<std::uint32_t> ks;
  ks.reserve(k_grid.size());
  for (const auto& e : k_grid) ks.push_back(resolve_k(e, market));
  return ks;
}

void ExperimentSpec::validate() const {
  if (market.n == 0) throw Error("market size n must be positive");
  if (seeds == 0) throw Error("seeds must be positive");
  if (k_grid.empty()) throw Error("k grid is empty");
  resolved_k();
}

std::uint64_t run_seed(std::uint64_t base_seed, std::uint32_t seed_index) {
  return derive_seed(base_seed, StreamKind::kSweepRun, seed_index);
}

double t_width(std::uint32_t n) { return std::sqrt(double(n)) * std::log(double(n)); }

RunOutcome run_point(const Market& market, std::uint32_t k, std::uint64_t seed, NextKind next,
                     bool amnesiac, bool record_history) {
  const auto shape = market.shape();
  auto prefs = PreferenceOracle::lazy(shape, seed);
  return run(prefs, NextPolicy::shuffled(next, shape.num_doctors, seed), AcceptPolicy::loyalty(k),
             {.amnesiac = amnesiac, .record_history = record_history});
}

namespace {

bool in_t(Rank f, std::uint32_t k, double ell) {
  return f != 0 && f >= k + ell / 2 + 1 && f <= k + ell;
}

bool rematched(const RunOutcome& out, Hospital h) {
  return out.reached_unbalanced_phase &&
         out.final_matching.hospital_to_doctor[h] != out.balanced_end_match[h];
}

}  // namespace

SweepRow summarize_run(const RunOutcome& out, const Market& market, std::uint32_t k,
                       std::uint64_t seed) {
  SweepRow row;
  row.market = market.kind;
  row.n = market.n;
  row.k = k;
  row.seed = seed;
  row.policy = out.next;
  row.total_proposals = out.total_proposals;
  row.proposals_balanced = out.proposals_balanced;
  row.proposals_unbalanced = out.proposals_unbalanced;
  row.avg_doctor_rank = out.avg_doctor_rank;
  row.avg_hospital_rank = out.avg_hospital_rank;
  row.heavy_doctors = out.heavy_doctor_count;
  row.heavy_hospitals = out.heavy_hospital_count;
  row.termination = out.termination_cause;
  row.unbalanced_proposers = out.unbalanced_proposers;

  const double ell = t_width(out.shape.num_hospitals);
  for (Hospital h = 0; h < out.shape.num_hospitals; ++h) {
    const bool moved = rematched(out, h);
    row.rematched += moved;
    if (out.reached_unbalanced_phase && out.balanced_end_ranks[h] > k + 1) {
      ++row.s_a_size;
      row.s_a_rematched += moved;
    }
    if (in_t(out.first_ranks[h], k, ell)) {
      ++row.t_size;
      row.t_rematched += moved;
    }
  }
  return row;
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / double(values.size());
  if (values.size() > 1) {
    double ss = 0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / double(values.size() - 1));
  }
  return s;
}

std::vector<KAggregate> aggregate(const std::vector<std::uint32_t>& ks,
                                  const std::vector<SweepRow>& rows) {
  std::vector<KAggregate> out;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    // A repeated k is aggregated once, over all of its rows.
    const auto first = std::find(ks.begin(), ks.end(), ks[i]);
    if (first != ks.begin() + static_cast<std::ptrdiff_t>(i)) continue;

    std::vector<const SweepRow*> sel;
    for (const auto& r : rows) {
      if (r.k == ks[i]) sel.push_back(&r);
    }
    const auto col = [&](auto field) {
      std::vector<double> v;
      v.reserve(sel.size());
      for (const auto* r : sel) v.push_back(static_cast<double>(r->*field));
      return summarize(v);
    };
    KAggregate a;
    a.k = ks[i];
    a.runs = static_cast<std::uint32_t>(sel.size());
    a.avg_doctor_rank = col(&SweepRow::avg_doctor_rank);
    a.avg_hospital_rank = col(&SweepRow::avg_hospital_rank);
    a.total_proposals = col(&SweepRow::total_proposals);
    a.proposals_balanced = col(&SweepRow::proposals_balanced);
    a.proposals_unbalanced = col(&SweepRow::proposals_unbalanced);
    a.heavy_doctors = col(&SweepRow::heavy_doctors);
    a.heavy_hospitals = col(&SweepRow::heavy_hospitals);
    a.s_a_size = col(&SweepRow::s_a_size);
    a.t_size = col(&SweepRow::t_size);
    a.t_rematched = col(&SweepRow::t_rematched);
    a.unbalanced_proposers = col(&SweepRow::unbalanced_proposers);
    a.rematched = col(&SweepRow::rematched);
    std::uint64_t sa = 0, sa_moved = 0, t = 0, t_moved = 0;
    for (const auto* r : sel) {
      sa += r->s_a_size;
      sa_moved += r->s_a_rematched;
      t += r->t_size;
      t_moved += r->t_rematched;
      a.exhausted_runs += r->termination == Termination::kDoctorExhausted;
    }
    a.s_a_rematched_fraction = sa ? double(sa_moved) / double(sa) : 0.0;
    a.t_rematched_fraction = t ? double(t_moved) / double(t) : 0.0;
    out.push_back(std::move(a));
  }
  return out;
}

SweepResult sweep(const ExperimentSpec& spec) {
  spec.validate();
  SweepResult result;
  result.spec = spec;
  result.ks = spec.resolved_k();
  const std::size_t total = result.ks.size() * spec.seeds;
  result.rows = parallel_map(total, spec.threads, [&](std::size_t i) {
    const auto k = result.ks[i / spec.seeds];
    const auto seed = run_seed(spec.base_seed, static_cast<std::uint32_t>(i % spec.seeds));
    const auto out = run_point(spec.market, k, seed, spec.next, spec.amnesiac);
    return summarize_run(out, spec.market, k, seed);
  });
  result.aggregates = aggregate(result.ks, result.rows);
  return result;
}

RankHistogram RankHistogram::from_ranks(std::vector<Rank> ranks, std::uint32_t max_rank,
                                        std::uint32_t num_bins) {
  if (max_rank == 0 || num_bins == 0) throw Error("histogram needs a positive rank range and bin count");
  RankHistogram hist;
  hist.bin_width = (max_rank + num_bins - 1) / num_bins;
  hist.bins.assign((max_rank + hist.bin_width - 1) / hist.bin_width, 0);
  for (Rank r : ranks) {
    if (r == 0) continue;
    if (r > max_rank) throw Error("rank " + std::to_string(r) + " exceeds " + std::to_string(max_rank));
    ++hist.bins[(r - 1) / hist.bin_width];
  }
  hist.ranks = std::move(ranks);
  return hist;
}

std::uint32_t RankHistogram::mass() const {
  return std::accumulate(bins.begin(), bins.end(), 0u);
}

namespace {

double overlap_fraction(const std::vector<Hospital>& set, const std::vector<Hospital>& sorted) {
  if (set.empty()) return 0;
  std::size_t hits = 0;
  for (Hospital h : set) hits += std::binary_search(sorted.begin(), sorted.end(), h);
  return double(hits) / double(set.size());
}

}  // namespace

double Snapshot::rematched_fraction_of(const std::vector<Hospital>& set) const {
  return overlap_fraction(set, rematched);
}

double Snapshot::improved_fraction_of(const std::vector<Hospital>& set) const {
  return overlap_fraction(set, improved);
}

Snapshot snapshot(const Market& market, std::uint32_t k, std::uint64_t seed, NextKind next,
                  std::uint32_t num_bins) {
  if (market.kind != MarketKind::kUnbalanced) throw Error("snapshot needs an unbalanced market");
  const auto out = run_point(market, k, seed, next, false);
  const auto shape = market.shape();
  Snapshot snap;
  snap.market = market;
  snap.k = k;
  snap.seed = seed;
  snap.balanced_end = RankHistogram::from_ranks(out.balanced_end_ranks, shape.num_doctors, num_bins);
  snap.final = RankHistogram::from_ranks(out.hospital_ranks, shape.num_doctors, num_bins);
  snap.unbalanced_proposers = out.unbalanced_proposers;
  snap.proposals_unbalanced = out.proposals_unbalanced;
  const double ell = t_width(shape.num_hospitals);
  for (Hospital h = 0; h < shape.num_hospitals; ++h) {
    if (rematched(out, h)) snap.rematched.push_back(h);
    if (out.balanced_end_ranks[h] > k + 1) snap.s_a.push_back(h);
    if (in_t(out.first_ranks[h], k, ell)) snap.t.push_back(h);
    if (out.hospital_ranks[h] < out.first_ranks[h]) snap.improved.push_back(h);
  }
  return snap;
}

std::uint32_t HospitalClasses::total() const {
  return f + h + m + u + std::accumulate(e.begin(), e.end(), 0u);
}

namespace {

struct Bands {
  double a;  // n/c
  double s;  // √n
  std::size_t num_e;
};

Bands make_bands(std::uint32_t n, double c) {
  if (!(c >= 3) || !(c < std::sqrt(double(n)))) {
    throw Error("classification needs 3 <= c < sqrt(n), got c = " + std::to_string(c));
  }
  return {double(n) / c, std::sqrt(double(n)), static_cast<std::size_t>(std::ceil(c)) - 2};
}

bool outside_fh(Rank r, const Bands& b) { return r == 0 || r > b.a + b.s; }

}  // namespace

HospitalClasses classify_hospitals(const std::vector<Rank>& ranks, std::uint32_t n, double c) {
  const auto b = make_bands(n, c);
  HospitalClasses out;
  out.e.assign(b.num_e, 0);
  for (Rank r : ranks) {
    if (r == 0) {
      ++out.u;
    } else if (r <= b.a) {
      ++out.f;
    } else if (r <= b.a + b.s) {
      ++out.h;
    } else if (r <= 2 * b.a) {
      ++out.m;
    } else {
      // E_i covers ((i+1)n/c, (i+2)n/c].
      const auto i = static_cast<std::size_t>(std::ceil(r / b.a)) - 2;
      ++out.e[std::clamp<std::size_t>(i, 1, b.num_e) - 1];
    }
  }
  return out;
}

ModeratePhaseResult moderate_phase_end(std::uint32_t n, std::uint32_t k, double c,
                                       std::uint64_t seed, NextKind next) {
  const auto b = make_bands(n, c);
  const Market market{MarketKind::kUnbalanced, n};
  const auto shape = market.shape();
  auto prefs = PreferenceOracle::lazy(shape, seed);
  Engine engine(prefs, NextPolicy::shuffled(next, shape.num_doctors, seed), AcceptPolicy::loyalty(k));

  ModeratePhaseResult result;
  // Ranks only improve, so a hospital that enters F or H never leaves.
  std::vector<bool> inside(shape.num_hospitals, false);
  std::uint32_t outside = shape.num_hospitals;
  while (!engine.done()) {
    const auto ev = engine.step();
    if (!ev.accepted || inside[ev.hospital]) continue;
    if (outside_fh(engine.state().hospital_rank[ev.hospital], b)) continue;
    inside[ev.hospital] = true;
    if (--outside == 0) {
      result.reached = true;
      break;
    }
  }
  result.proposals = engine.state().proposals;
  result.classes = classify_hospitals(engine.state().hospital_rank, n, c);
  return result;
}

ExperimentSpec preset(std::string_view name, std::optional<std::uint32_t> n) {
  ExperimentSpec spec;
  spec.seeds = 100;
  const std::vector<std::string> unbalanced_grid{
      "0", "n/5", "2*n/5", "3*n/5", "n-sqrt(n)*ln(n)", "9*n/10", "n-sqrt(n)", "n"};
  if (name == "fig1a") {
    spec.market = {MarketKind::kBalanced, n.value_or(1000)};
    spec.k_grid = {"0", "n/10", "n/4", "n/2", "3*n/4", "n-sqrt(n)*ln(n)", "n-sqrt(n)", "n-1"};
  } else if (name == "fig1b" || name == "fig3") {
    spec.market = {MarketKind::kUnbalanced, n.value_or(1000)};
    spec.k_grid = unbalanced_grid;
  } else if (name == "fig4" || name == "fig5" || name == "fig6" || name == "fig7") {
    static const char* const ks[] = {"0", "n/2", "n-sqrt(n)*ln(n)", "n-sqrt(n)"};
    spec.market = {MarketKind::kUnbalanced, n.value_or(500)};
    spec.k_grid = {ks[name[3] - '4']};
    spec.seeds = 1;
    spec.snapshot_balanced_end = true;
    spec.snapshot_final = true;
  } else {
    throw Error("unknown preset '" + std::string(name) + "'");
  }
  return spec;
}

std::vector<std::string> preset_names() {
  return {"fig1a", "fig1b", "fig3", "fig4", "fig5", "fig6", "fig7"};
}

}  // namespace loyalda
