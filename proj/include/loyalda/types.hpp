#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace loyalda {

// Agents are dense 0-based indices. External formats (instance files, JSON)
// use 1-based ids.
using Doctor = std::uint32_t;
using Hospital = std::uint32_t;
// Ranks are 1-based: rank 1 is the most preferred partner.
using Rank = std::uint32_t;

inline constexpr std::uint32_t kUnmatched = std::numeric_limits<std::uint32_t>::max();

struct MarketShape {
  std::uint32_t num_doctors = 0;
  std::uint32_t num_hospitals = 0;

  bool balanced() const { return num_doctors == num_hospitals; }
  friend bool operator==(const MarketShape&, const MarketShape&) = default;
};

/// One-to-one partial matching stored in both directions.
struct Matching {
  std::vector<Hospital> doctor_to_hospital;
  std::vector<Doctor> hospital_to_doctor;

  Matching() = default;
  explicit Matching(MarketShape shape)
      : doctor_to_hospital(shape.num_doctors, kUnmatched),
        hospital_to_doctor(shape.num_hospitals, kUnmatched) {}

  MarketShape shape() const {
    return {static_cast<std::uint32_t>(doctor_to_hospital.size()),
            static_cast<std::uint32_t>(hospital_to_doctor.size())};
  }

  void assign(Doctor d, Hospital h) {
    doctor_to_hospital[d] = h;
    hospital_to_doctor[h] = d;
  }

  std::uint32_t matched_count() const {
    std::uint32_t c = 0;
    for (auto h : doctor_to_hospital) c += (h != kUnmatched);
    return c;
  }

  /// Builds a matching from the doctor side; throws if two doctors share a
  /// hospital or an id is out of range.
  static Matching from_doctor_side(std::vector<Hospital> doctor_to_hospital,
                                   std::uint32_t num_hospitals);

  friend bool operator==(const Matching&, const Matching&) = default;
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ExhaustedDoctorError : public Error {
 public:
  using Error::Error;
};

class MalformedPermutationError : public Error {
 public:
  using Error::Error;
};

class InvalidStateError : public Error {
 public:
  using Error::Error;
};

class SizeLimitError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace loyalda
