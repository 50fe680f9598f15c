#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "loyalda/experiments.hpp"

namespace loyalda {

inline constexpr std::array<std::string_view, 16> kCsvColumns{
    "market", "n", "k", "seed", "policy", "total_proposals", "proposals_balanced",
    "proposals_unbalanced", "avg_doctor_rank", "avg_hospital_rank", "heavy_doctors",
    "heavy_hospitals", "s_a_size", "t_size", "t_rematched", "termination"};

/// Shortest text that parses back to the same double.
std::string format_double(double v);

void write_csv(std::ostream& out, const std::vector<SweepRow>& rows);
/// Inverse of write_csv for the CSV columns; the extra SweepRow fields stay 0.
std::vector<SweepRow> read_csv(std::istream& in);

/// Mean avg doctor rank against k, with ±1 sd whiskers and the reference
/// lines of the market (ln n for balanced, n-sqrt(n)*ln(n) and n-sqrt(n) for
/// unbalanced).
std::string svg_rank_plot(const SweepResult& result);
/// Stacked bars per k: balanced-phase proposals below unbalanced-phase ones.
std::string svg_phase_bars(const SweepResult& result);
/// Two heat strips, balanced end over termination; darker cells hold more
/// hospitals at that rank bin.
std::string svg_snapshot_heat(const Snapshot& snap);

enum class Format { kCsv, kJson, kSvg };

Format parse_format(std::string_view text);
std::string_view to_string(Format f);

/// Writes `<stem>.csv`, `<stem>.json`, and for svg `<stem>_rank.svg` plus
/// `<stem>_phases.svg`. Returns the written paths. I/O failures throw Error
/// naming the path.
std::vector<std::filesystem::path> emit(const SweepResult& result, const std::vector<Format>& formats,
                                        const std::filesystem::path& dir, const std::string& stem);
/// csv holds one line per hospital; json and svg mirror svg_snapshot_heat.
std::vector<std::filesystem::path> emit(const Snapshot& snap, const std::vector<Format>& formats,
                                        const std::filesystem::path& dir, const std::string& stem);

void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace loyalda
