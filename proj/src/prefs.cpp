#include "loyalda/prefs.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

namespace loyalda {

Matching Matching::from_doctor_side(std::vector<Hospital> doctor_to_hospital,
                                    std::uint32_t num_hospitals) {
  Matching m;
  m.hospital_to_doctor.assign(num_hospitals, kUnmatched);
  for (Doctor d = 0; d < doctor_to_hospital.size(); ++d) {
    const Hospital h = doctor_to_hospital[d];
    if (h == kUnmatched) continue;
    if (h >= num_hospitals) {
      throw Error("matching: hospital " + std::to_string(h + 1) + " out of range");
    }
    if (m.hospital_to_doctor[h] != kUnmatched) {
      throw Error("matching: hospital " + std::to_string(h + 1) + " assigned twice");
    }
    m.hospital_to_doctor[h] = d;
  }
  m.doctor_to_hospital = std::move(doctor_to_hospital);
  return m;
}

namespace {

void check_permutation(const std::vector<std::uint32_t>& list, std::uint32_t n,
                       const char* side, std::size_t owner) {
  const auto where = std::string(side) + " " + std::to_string(owner + 1);
  if (list.size() != n) {
    throw MalformedPermutationError(where + ": expected " + std::to_string(n) + " entries, got " +
                                    std::to_string(list.size()));
  }
  std::vector<bool> seen(n, false);
  for (auto v : list) {
    if (v >= n) {
      throw MalformedPermutationError(where + ": entry " + std::to_string(v + 1) +
                                      " out of range");
    }
    if (seen[v]) {
      throw MalformedPermutationError(where + ": duplicate entry " + std::to_string(v + 1));
    }
    seen[v] = true;
  }
}

std::vector<std::uint32_t> parse_line(std::string_view line, std::size_t line_no) {
  std::vector<std::uint32_t> out;
  const auto fail = [&](const std::string& why) {
    throw ParseError("instance line " + std::to_string(line_no) + ": " + why);
  };
  if (line.empty()) fail("empty line");
  std::size_t pos = 0;
  while (true) {
    const auto end = line.find(' ', pos);
    const auto token = line.substr(pos, end == std::string_view::npos ? line.size() - pos : end - pos);
    if (token.empty()) fail("expected a single space between entries");
    std::uint32_t value = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
      fail("bad integer '" + std::string(token) + "'");
    }
    out.push_back(value);
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return out;
}

}  // namespace

void Instance::validate() const {
  const auto shape = this->shape();
  for (std::size_t d = 0; d < doctor_prefs.size(); ++d) {
    check_permutation(doctor_prefs[d], shape.num_hospitals, "doctor", d);
  }
  for (std::size_t h = 0; h < hospital_prefs.size(); ++h) {
    check_permutation(hospital_prefs[h], shape.num_doctors, "hospital", h);
  }
}

Instance read_instance(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  const auto next_line = [&]() -> std::string_view {
    if (!std::getline(in, line)) {
      throw ParseError("instance: unexpected end of input after line " + std::to_string(line_no));
    }
    ++line_no;
    return line;
  };

  const auto header = parse_line(next_line(), line_no);
  if (header.size() != 2 || header[0] == 0 || header[1] == 0) {
    throw ParseError("instance line 1: expected \"D H\" with positive counts");
  }
  const std::uint32_t num_doctors = header[0];
  const std::uint32_t num_hospitals = header[1];

  const auto to_zero_based = [&](std::vector<std::uint32_t> ids) {
    for (auto& v : ids) {
      if (v == 0) throw ParseError("instance line " + std::to_string(line_no) + ": ids are 1-based");
      --v;
    }
    return ids;
  };

  Instance inst;
  inst.doctor_prefs.reserve(num_doctors);
  for (std::uint32_t d = 0; d < num_doctors; ++d) {
    inst.doctor_prefs.push_back(to_zero_based(parse_line(next_line(), line_no)));
  }
  inst.hospital_prefs.reserve(num_hospitals);
  for (std::uint32_t h = 0; h < num_hospitals; ++h) {
    inst.hospital_prefs.push_back(to_zero_based(parse_line(next_line(), line_no)));
  }
  if (std::getline(in, line)) {
    throw ParseError("instance line " + std::to_string(line_no + 1) + ": trailing content");
  }
  inst.validate();
  return inst;
}

Instance read_instance_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open instance file " + path.string());
  try {
    return read_instance(in);
  } catch (const Error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_instance(std::ostream& out, const Instance& instance) {
  const auto shape = instance.shape();
  out << shape.num_doctors << ' ' << shape.num_hospitals << '\n';
  const auto write_list = [&](const std::vector<std::uint32_t>& list) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (i) out << ' ';
      out << list[i] + 1;
    }
    out << '\n';
  };
  for (const auto& l : instance.doctor_prefs) write_list(l);
  for (const auto& l : instance.hospital_prefs) write_list(l);
}

Instance random_instance(MarketShape shape, std::uint64_t seed) {
  Stream rng(seed);
  const auto shuffled = [&](std::uint32_t n) {
    std::vector<std::uint32_t> v(n);
    for (std::uint32_t i = 0; i < n; ++i) v[i] = i;
    for (std::uint32_t i = n; i > 1; --i) {
      std::swap(v[i - 1], v[rng.below(i)]);
    }
    return v;
  };
  Instance inst;
  for (std::uint32_t d = 0; d < shape.num_doctors; ++d) {
    inst.doctor_prefs.push_back(shuffled(shape.num_hospitals));
  }
  for (std::uint32_t h = 0; h < shape.num_hospitals; ++h) {
    inst.hospital_prefs.push_back(shuffled(shape.num_doctors));
  }
  return inst;
}

std::uint32_t LazyPermutation::draw(Stream& rng) {
  if (drawn_ == size_) throw InvalidStateError("lazy permutation exhausted");
  const auto pick = drawn_ + static_cast<std::uint32_t>(rng.below(size_ - drawn_));
  const auto value = value_at(pick);
  if (pick != drawn_) displaced_[pick] = value_at(drawn_);
  displaced_.erase(drawn_);
  ++drawn_;
  return value;
}

PreferenceOracle PreferenceOracle::lazy(MarketShape shape, std::uint64_t seed) {
  if (shape.num_doctors == 0 || shape.num_hospitals == 0) {
    throw Error("market must have at least one doctor and one hospital");
  }
  PreferenceOracle o;
  o.shape_ = shape;
  o.mode_ = PrefMode::kLazy;
  o.seed_ = seed;
  o.doctors_.resize(shape.num_doctors);
  for (Doctor d = 0; d < shape.num_doctors; ++d) {
    o.doctors_[d].pool = LazyPermutation(shape.num_hospitals);
    o.doctors_[d].rng = Stream(seed, StreamKind::kDoctor, d);
  }
  o.hospitals_.resize(shape.num_hospitals);
  for (Hospital h = 0; h < shape.num_hospitals; ++h) {
    o.hospitals_[h].pool = LazyPermutation(shape.num_doctors);
    o.hospitals_[h].rng = Stream(seed, StreamKind::kHospital, h);
  }
  return o;
}

PreferenceOracle PreferenceOracle::from_explicit(Instance instance, std::uint64_t seed) {
  instance.validate();
  const auto shape = instance.shape();
  PreferenceOracle o;
  o.shape_ = shape;
  o.mode_ = PrefMode::kExplicit;
  o.seed_ = seed;
  o.doctors_.resize(shape.num_doctors);
  for (Doctor d = 0; d < shape.num_doctors; ++d) {
    o.doctors_[d].order = std::move(instance.doctor_prefs[d]);
    o.doctors_[d].rng = Stream(seed, StreamKind::kDoctor, d);
  }
  o.explicit_ranks_.assign(shape.num_hospitals, std::vector<Rank>(shape.num_doctors, 0));
  for (Hospital h = 0; h < shape.num_hospitals; ++h) {
    const auto& list = instance.hospital_prefs[h];
    for (std::uint32_t pos = 0; pos < list.size(); ++pos) {
      o.explicit_ranks_[h][list[pos]] = pos + 1;
    }
  }
  return o;
}

void PreferenceOracle::extend_order(DoctorSide& side) {
  side.order.push_back(side.pool.draw(side.rng));
}

Hospital PreferenceOracle::next_choice(Doctor d) {
  auto& side = doctors_[d];
  if (side.proposed == shape_.num_hospitals) {
    throw ExhaustedDoctorError("doctor " + std::to_string(d + 1) +
                               " has already proposed to every hospital");
  }
  if (side.proposed == side.order.size()) extend_order(side);
  return side.order[side.proposed++];
}

AmnesiacDraw PreferenceOracle::amnesiac_choice(Doctor d) {
  // Drawing a uniform slot of d's full list is the same as drawing a uniform
  // hospital: slots below `proposed` are repeats, the rest are equally likely
  // to be any hospital not yet proposed to.
  auto& side = doctors_[d];
  const auto slot = static_cast<std::uint32_t>(side.rng.below(shape_.num_hospitals));
  if (slot < side.proposed) return {side.order[slot], true};
  return {next_choice(d), false};
}

Rank PreferenceOracle::rank_of(Hospital h, Doctor d) {
  if (mode_ == PrefMode::kExplicit) return explicit_ranks_[h][d];
  auto& side = hospitals_[h];
  auto [it, inserted] = side.ranks.try_emplace(d, 0);
  if (inserted) {
    it->second = side.pool.draw(side.rng) + 1;
    side.query_order.push_back(d);
  }
  return it->second;
}

std::span<const Hospital> PreferenceOracle::preference_prefix(Doctor d, std::uint32_t count) {
  auto& side = doctors_[d];
  count = std::min(count, shape_.num_hospitals);
  while (side.order.size() < count) extend_order(side);
  return {side.order.data(), count};
}

Rank PreferenceOracle::doctor_rank(Doctor d, Hospital h) {
  auto& side = doctors_[d];
  for (std::uint32_t i = 0;; ++i) {
    if (i == side.order.size()) extend_order(side);
    if (side.order[i] == h) return i + 1;
  }
}

std::vector<std::pair<Doctor, Rank>> PreferenceOracle::assigned_ranks(Hospital h) const {
  std::vector<std::pair<Doctor, Rank>> out;
  if (mode_ == PrefMode::kExplicit) {
    for (Doctor d = 0; d < shape_.num_doctors; ++d) out.emplace_back(d, explicit_ranks_[h][d]);
    return out;
  }
  const auto& side = hospitals_[h];
  out.reserve(side.query_order.size());
  for (auto d : side.query_order) out.emplace_back(d, side.ranks.at(d));
  return out;
}

Instance PreferenceOracle::materialize() {
  Instance inst;
  for (Doctor d = 0; d < shape_.num_doctors; ++d) {
    const auto prefix = preference_prefix(d, shape_.num_hospitals);
    inst.doctor_prefs.emplace_back(prefix.begin(), prefix.end());
  }
  for (Hospital h = 0; h < shape_.num_hospitals; ++h) {
    std::vector<Doctor> list(shape_.num_doctors);
    for (Doctor d = 0; d < shape_.num_doctors; ++d) list[rank_of(h, d) - 1] = d;
    inst.hospital_prefs.push_back(std::move(list));
  }
  return inst;
}

}  // namespace loyalda
