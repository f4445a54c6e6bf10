#pragma once

#include <compare>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace chronexp {

/// Derivative orders D_x^alpha, one entry per declared space variable.
using MultiIndex = std::vector<int>;

enum class SymbolClass : std::uint8_t {
  FreeParam,
  InitialTime,
  Time,
  Aux,
  SpaceVar,
  Jet,
};

/// A typed symbol. Jets stand for D_x^alpha c_k and are independent
/// coordinates: nothing about Jet(k, alpha) is implied by Jet(k, beta).
class Symbol {
 public:
  static Symbol time() { return Symbol(SymbolClass::Time); }
  static Symbol aux() { return Symbol(SymbolClass::Aux); }
  static Symbol initial_time(std::string name = "a") {
    Symbol s(SymbolClass::InitialTime);
    s.name_ = std::move(name);
    return s;
  }
  static Symbol space(int index) {
    Symbol s(SymbolClass::SpaceVar);
    s.index_ = index;
    return s;
  }
  static Symbol jet(int field, MultiIndex alpha = {}) {
    Symbol s(SymbolClass::Jet);
    s.index_ = field;
    s.alpha_ = std::move(alpha);
    return s;
  }
  static Symbol param(std::string name) {
    Symbol s(SymbolClass::FreeParam);
    s.name_ = std::move(name);
    return s;
  }

  SymbolClass cls() const { return cls_; }
  bool is(SymbolClass c) const { return cls_ == c; }
  /// Space index for SpaceVar, field index for Jet.
  int index() const { return index_; }
  const MultiIndex& alpha() const { return alpha_; }
  const std::string& name() const { return name_; }

  int jet_order() const { return std::accumulate(alpha_.begin(), alpha_.end(), 0); }

  /// Jet with alpha + e_j.
  Symbol shifted(int space_index) const {
    MultiIndex next = alpha_;
    next.at(static_cast<std::size_t>(space_index)) += 1;
    return jet(index_, std::move(next));
  }

  friend bool operator==(const Symbol&, const Symbol&) = default;

  // Jets order by field, then total order, then x before y before z.
  friend std::strong_ordering operator<=>(const Symbol& a, const Symbol& b) {
    if (auto c = a.cls_ <=> b.cls_; c != 0) return c;
    if (auto c = a.index_ <=> b.index_; c != 0) return c;
    if (auto c = a.jet_order() <=> b.jet_order(); c != 0) return c;
    if (auto c = b.alpha_ <=> a.alpha_; c != 0) return c;
    return a.name_ <=> b.name_;
  }

 private:
  explicit Symbol(SymbolClass cls) : cls_(cls) {}

  SymbolClass cls_;
  int index_ = 0;
  MultiIndex alpha_;
  std::string name_;
};

}  // namespace chronexp
