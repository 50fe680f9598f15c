#include "loyalda/emit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "loyalda/serialize.hpp"

namespace loyalda {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

Termination parse_termination(std::string_view s) {
  if (s == to_string(Termination::kAllDoctorsMatched)) return Termination::kAllDoctorsMatched;
  if (s == to_string(Termination::kDoctorExhausted)) return Termination::kDoctorExhausted;
  throw ParseError("unknown termination '" + std::string(s) + "'");
}

template <class T>
T parse_number(std::string_view s, std::size_t line) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError("line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) return out;
    start = comma + 1;
  }
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) out << (i ? "," : "") << kCsvColumns[i];
  out << '\n';
  for (const auto& r : rows) {
    out << to_string(r.market) << ',' << r.n << ',' << r.k << ',' << r.seed << ','
        << to_string(r.policy) << ',' << r.total_proposals << ',' << r.proposals_balanced << ','
        << r.proposals_unbalanced << ',' << format_double(r.avg_doctor_rank) << ','
        << format_double(r.avg_hospital_rank) << ',' << r.heavy_doctors << ',' << r.heavy_hospitals
        << ',' << r.s_a_size << ',' << r.t_size << ',' << r.t_rematched << ','
        << to_string(r.termination) << '\n';
  }
}

std::vector<SweepRow> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty CSV");
  const auto header = split(line);
  if (!std::equal(header.begin(), header.end(), kCsvColumns.begin(), kCsvColumns.end())) {
    throw ParseError("CSV header does not match the sweep schema");
  }
  std::vector<SweepRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto f = split(line);
    if (f.size() != kCsvColumns.size()) {
      throw ParseError("line " + std::to_string(lineno) + ": expected " +
                       std::to_string(kCsvColumns.size()) + " fields");
    }
    SweepRow r;
    r.market = parse_market_kind(f[0]);
    r.n = parse_number<std::uint32_t>(f[1], lineno);
    r.k = parse_number<std::uint32_t>(f[2], lineno);
    r.seed = parse_number<std::uint64_t>(f[3], lineno);
    r.policy = parse_next_kind(f[4]);
    r.total_proposals = parse_number<std::uint64_t>(f[5], lineno);
    r.proposals_balanced = parse_number<std::uint64_t>(f[6], lineno);
    r.proposals_unbalanced = parse_number<std::uint64_t>(f[7], lineno);
    r.avg_doctor_rank = parse_number<double>(f[8], lineno);
    r.avg_hospital_rank = parse_number<double>(f[9], lineno);
    r.heavy_doctors = parse_number<std::uint32_t>(f[10], lineno);
    r.heavy_hospitals = parse_number<std::uint32_t>(f[11], lineno);
    r.s_a_size = parse_number<std::uint32_t>(f[12], lineno);
    r.t_size = parse_number<std::uint32_t>(f[13], lineno);
    r.t_rematched = parse_number<std::uint32_t>(f[14], lineno);
    r.termination = parse_termination(f[15]);
    rows.push_back(r);
  }
  return rows;
}

namespace {

constexpr double kWidth = 720, kHeight = 420;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;
constexpr double kPlotW = kWidth - kLeft - kRight, kPlotH = kHeight - kTop - kBottom;

std::string fx(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

class Svg {
 public:
  Svg(double w, double h) {
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fx(w) << "\" height=\"" << fx(h)
         << "\" viewBox=\"0 0 " << fx(w) << ' ' << fx(h) << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
         << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  }

  Svg& line(double x1, double y1, double x2, double y2, std::string_view stroke,
            std::string_view extra = "") {
    out_ << "<line x1=\"" << fx(x1) << "\" y1=\"" << fx(y1) << "\" x2=\"" << fx(x2) << "\" y2=\""
         << fx(y2) << "\" stroke=\"" << stroke << '"' << (extra.empty() ? "" : " ") << extra
         << "/>\n";
    return *this;
  }

  Svg& rect(double x, double y, double w, double h, std::string_view fill,
            std::string_view cls = "") {
    out_ << "<rect";
    if (!cls.empty()) out_ << " class=\"" << cls << '"';
    out_ << " x=\"" << fx(x) << "\" y=\"" << fx(y) << "\" width=\"" << fx(w) << "\" height=\""
         << fx(h) << "\" fill=\"" << fill << "\"/>\n";
    return *this;
  }

  Svg& text(double x, double y, std::string_view s, std::string_view anchor = "middle",
            std::string_view extra = "") {
    out_ << "<text x=\"" << fx(x) << "\" y=\"" << fx(y) << "\" text-anchor=\"" << anchor << '"'
         << (extra.empty() ? "" : " ") << extra << '>' << s << "</text>\n";
    return *this;
  }

  Svg& raw(std::string_view s) {
    out_ << s;
    return *this;
  }

  std::string finish() {
    out_ << "</svg>\n";
    return out_.str();
  }

 private:
  std::ostringstream out_;
};

void axes(Svg& svg, std::string_view title, std::string_view xlabel, std::string_view ylabel,
          double ymax) {
  svg.text(kWidth / 2, kTop / 2 + 4, title, "middle", "font-size=\"14\"");
  svg.line(kLeft, kTop, kLeft, kTop + kPlotH, "black");
  svg.line(kLeft, kTop + kPlotH, kLeft + kPlotW, kTop + kPlotH, "black");
  for (int i = 0; i <= 5; ++i) {
    const double v = ymax * i / 5;
    const double y = kTop + kPlotH - kPlotH * i / 5;
    svg.line(kLeft - 4, y, kLeft, y, "black");
    svg.text(kLeft - 8, y + 4, tick_label(v), "end");
  }
  svg.text(kLeft + kPlotW / 2, kHeight - 10, xlabel);
  svg.text(16, kTop + kPlotH / 2, ylabel, "middle",
           "transform=\"rotate(-90 16 " + fx(kTop + kPlotH / 2) + ")\"");
}

std::string market_label(const Market& m) {
  return std::string(to_string(m.kind)) + " market, n = " + std::to_string(m.n);
}

}  // namespace

std::string svg_rank_plot(const SweepResult& result) {
  const auto& aggs = result.aggregates;
  const auto& market = result.spec.market;
  double xmax = 1, ymax = 0;
  for (const auto& a : aggs) {
    xmax = std::max(xmax, double(a.k));
    ymax = std::max(ymax, a.avg_doctor_rank.mean + a.avg_doctor_rank.stddev);
  }
  const double ln_n = std::log(double(std::max<std::uint32_t>(market.n, 1)));
  if (market.kind == MarketKind::kBalanced) ymax = std::max(ymax, ln_n);
  if (market.kind == MarketKind::kUnbalanced) xmax = std::max(xmax, double(market.n));
  ymax = ymax > 0 ? ymax * 1.1 : 1;

  const auto px = [&](double k) { return kLeft + kPlotW * k / xmax; };
  const auto py = [&](double v) { return kTop + kPlotH - kPlotH * v / ymax; };

  Svg svg(kWidth, kHeight);
  axes(svg, "Average doctor rank, " + market_label(market), "loyalty k", "average doctor rank", ymax);
  for (int i = 0; i <= 4; ++i) {
    const double k = xmax * i / 4;
    svg.line(px(k), kTop + kPlotH, px(k), kTop + kPlotH + 4, "black");
    svg.text(px(k), kTop + kPlotH + 18, tick_label(k));
  }
  const std::string dashed = "stroke-dasharray=\"6 4\"";
  if (market.kind == MarketKind::kBalanced) {
    svg.line(kLeft, py(ln_n), kLeft + kPlotW, py(ln_n), "gray", dashed);
    svg.text(kLeft + kPlotW - 4, py(ln_n) - 4, "ln n", "end", "fill=\"gray\"");
  } else {
    const double n = market.n;
    for (double k : {n - std::sqrt(n) * ln_n, n - std::sqrt(n)}) {
      if (k < 0) continue;
      svg.line(px(k), kTop, px(k), kTop + kPlotH, "gray", dashed);
    }
  }
  std::string points;
  for (const auto& a : aggs) {
    const double x = px(a.k);
    const auto& s = a.avg_doctor_rank;
    svg.line(x, py(s.mean - s.stddev), x, py(s.mean + s.stddev), "#4c72b0");
    svg.raw("<circle class=\"mean\" cx=\"" + fx(x) + "\" cy=\"" + fx(py(s.mean)) +
            "\" r=\"3\" fill=\"#4c72b0\"/>\n");
    points += (points.empty() ? "" : " ") + fx(x) + "," + fx(py(s.mean));
  }
  svg.raw("<polyline points=\"" + points + "\" fill=\"none\" stroke=\"#4c72b0\"/>\n");
  return svg.finish();
}

std::string svg_phase_bars(const SweepResult& result) {
  const auto& aggs = result.aggregates;
  double ymax = 0;
  for (const auto& a : aggs) {
    ymax = std::max(ymax, a.proposals_balanced.mean + a.proposals_unbalanced.mean);
  }
  ymax = ymax > 0 ? ymax * 1.1 : 1;
  const auto h = [&](double v) { return kPlotH * v / ymax; };

  Svg svg(kWidth, kHeight);
  axes(svg, "Proposals by phase, " + market_label(result.spec.market), "loyalty k", "proposals", ymax);
  const double slot = aggs.empty() ? kPlotW : kPlotW / double(aggs.size());
  const double bar = slot * 0.6;
  for (std::size_t i = 0; i < aggs.size(); ++i) {
    const auto& a = aggs[i];
    const double x = kLeft + slot * double(i) + (slot - bar) / 2;
    const double hb = h(a.proposals_balanced.mean);
    const double hu = h(a.proposals_unbalanced.mean);
    const double base = kTop + kPlotH;
    svg.rect(x, base - hb, bar, hb, "#4c72b0", "balanced");
    svg.rect(x, base - hb - hu, bar, hu, "#dd8452", "unbalanced");
    svg.text(x + bar / 2, base + 18, std::to_string(a.k));
  }
  svg.rect(kLeft + 10, kTop + 6, 12, 12, "#4c72b0");
  svg.text(kLeft + 28, kTop + 16, "balanced phase", "start");
  svg.rect(kLeft + 140, kTop + 6, 12, 12, "#dd8452");
  svg.text(kLeft + 158, kTop + 16, "unbalanced phase", "start");
  return svg.finish();
}

std::string svg_snapshot_heat(const Snapshot& snap) {
  const std::array<const RankHistogram*, 2> rows{&snap.balanced_end, &snap.final};
  const std::array<std::string_view, 2> names{"balanced end", "termination"};
  std::uint32_t peak = 1;
  for (const auto* r : rows) {
    for (auto c : r->bins) peak = std::max(peak, c);
  }
  const double left = 110, top = 50, row_h = 60, width = kWidth - left - kRight;
  const std::size_t nbins = snap.final.bins.size();
  const double cell = nbins ? width / double(nbins) : width;
  const double height = top + 2 * row_h + 50;

  Svg svg(kWidth, height);
  svg.text(kWidth / 2, 24,
           "Hospital ranks, " + market_label(snap.market) + ", k = " + std::to_string(snap.k),
           "middle", "font-size=\"14\"");
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double y = top + row_h * double(r);
    svg.text(left - 8, y + row_h / 2 + 4, names[r], "end");
    for (std::size_t b = 0; b < rows[r]->bins.size(); ++b) {
      // White to dark blue, linear in the bin count.
      const double t = double(rows[r]->bins[b]) / peak;
      char fill[8];
      std::snprintf(fill, sizeof fill, "#%02x%02x%02x", int(std::lround(255 - t * (255 - 8))),
                    int(std::lround(255 - t * (255 - 48))), int(std::lround(255 - t * (255 - 107))));
      svg.rect(left + cell * double(b), y, cell, row_h - 4, fill, "bin");
    }
  }
  const double axis_y = top + 2 * row_h;
  const std::uint32_t w = snap.final.bin_width;
  for (std::size_t b = 0; b <= nbins; b += std::max<std::size_t>(1, nbins / 5)) {
    svg.line(left + cell * double(b), axis_y, left + cell * double(b), axis_y + 4, "black");
    svg.text(left + cell * double(b), axis_y + 18, std::to_string(b * w + 1));
  }
  svg.text(left + width / 2, axis_y + 40, "rank of assigned doctor");
  return svg.finish();
}

Format parse_format(std::string_view text) {
  if (text == "csv") return Format::kCsv;
  if (text == "json") return Format::kJson;
  if (text == "svg") return Format::kSvg;
  throw Error("unknown format '" + std::string(text) + "' (expected csv, json or svg)");
}

std::string_view to_string(Format f) {
  switch (f) {
    case Format::kCsv: return "csv";
    case Format::kJson: return "json";
    case Format::kSvg: return "svg";
  }
  return "?";
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << contents;
  out.close();
  if (!out) throw Error("failed writing " + path.string());
}

namespace {

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory " + dir.string() + ": " + ec.message());
}

}  // namespace

std::vector<std::filesystem::path> emit(const SweepResult& result, const std::vector<Format>& formats,
                                        const std::filesystem::path& dir, const std::string& stem) {
  ensure_dir(dir);
  std::vector<std::filesystem::path> written;
  for (auto f : formats) {
    if (f == Format::kCsv) {
      std::ostringstream ss;
      write_csv(ss, result.rows);
      written.push_back(dir / (stem + ".csv"));
      write_file(written.back(), ss.str());
    } else if (f == Format::kJson) {
      written.push_back(dir / (stem + ".json"));
      write_file(written.back(), to_json(result).dump(2) + "\n");
    } else {
      written.push_back(dir / (stem + "_rank.svg"));
      write_file(written.back(), svg_rank_plot(result));
      written.push_back(dir / (stem + "_phases.svg"));
      write_file(written.back(), svg_phase_bars(result));
    }
  }
  return written;
}

std::vector<std::filesystem::path> emit(const Snapshot& snap, const std::vector<Format>& formats,
                                        const std::filesystem::path& dir, const std::string& stem) {
  ensure_dir(dir);
  std::vector<std::filesystem::path> written;
  for (auto f : formats) {
    if (f == Format::kCsv) {
      std::ostringstream ss;
      ss << "hospital,balanced_end_rank,final_rank,rematched,in_s_a,in_t\n";
      const auto has = [](const std::vector<Hospital>& v, Hospital h) {
        return std::binary_search(v.begin(), v.end(), h) ? 1 : 0;
      };
      for (Hospital h = 0; h < snap.final.ranks.size(); ++h) {
        ss << h + 1 << ',' << snap.balanced_end.ranks[h] << ',' << snap.final.ranks[h] << ','
           << has(snap.rematched, h) << ',' << has(snap.s_a, h) << ',' << has(snap.t, h) << '\n';
      }
      written.push_back(dir / (stem + ".csv"));
      write_file(written.back(), ss.str());
    } else if (f == Format::kJson) {
      written.push_back(dir / (stem + ".json"));
      write_file(written.back(), to_json(snap).dump(2) + "\n");
    } else {
      written.push_back(dir / (stem + ".svg"));
      write_file(written.back(), svg_snapshot_heat(snap));
    }
  }
  return written;
}

}  // namespace loyalda
