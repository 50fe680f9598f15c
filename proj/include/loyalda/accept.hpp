#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "loyalda/types.hpp"

namespace loyalda {

/// Loyalty acceptance: an unmatched hospital takes anyone; a matched one
/// switches only for a doctor ranked more than k places above the incumbent.
constexpr bool accept_loyal(Rank rank_new, std::optional<Rank> rank_incumbent, std::uint32_t k) {
  if (!rank_incumbent) return true;
  // rank_new < rank_incumbent - k, without unsigned wrap-around.
  return static_cast<std::uint64_t>(rank_new) + k < *rank_incumbent;
}

/// A hospital's accept function over ranks. Loyalty(0) is the classic
/// "take the better doctor" rule. Custom rules exist for consistency testing.
class AcceptPolicy {
 public:
  using Rule = std::function<bool(Rank rank_new, std::optional<Rank> rank_incumbent)>;

  static AcceptPolicy loyalty(std::uint32_t k) { return AcceptPolicy(k); }
  static AcceptPolicy classic() { return AcceptPolicy(0); }
  static AcceptPolicy custom(std::string name, Rule rule) {
    AcceptPolicy p(0);
    p.name_ = std::move(name);
    p.rule_ = std::move(rule);
    return p;
  }

  bool operator()(Rank rank_new, std::optional<Rank> rank_incumbent) const {
    if (rule_) return rule_(rank_new, rank_incumbent);
    return accept_loyal(rank_new, rank_incumbent, k_);
  }

  bool is_loyalty() const { return !rule_; }
  bool is_classic() const { return !rule_ && k_ == 0; }
  std::uint32_t k() const { return k_; }
  std::string name() const {
    return rule_ ? name_ : (k_ == 0 ? "classic" : "loyalty(" + std::to_string(k_) + ")");
  }

  /// Throws unless k is in [0, num_doctors - 1].
  void validate(std::uint32_t num_doctors) const {
    if (!rule_ && num_doctors > 0 && k_ > num_doctors - 1) {
      throw Error("loyalty k=" + std::to_string(k_) + " outside [0, " +
                  std::to_string(num_doctors - 1) + "]");
    }
  }

 private:
  explicit AcceptPolicy(std::uint32_t k) : k_(k) {}

  std::uint32_t k_ = 0;
  std::string name_;
  Rule rule_;
};

}  // namespace loyalda
