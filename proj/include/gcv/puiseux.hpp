#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gcv/error.hpp"
#include "gcv/expr.hpp"
#include "gcv/rational.hpp"

namespace gcv {

// ---------------------------------------------------------------------------
// Truncated real Puiseux series: finite sums of c * T^q with rational q and
// c, ordered so that T is a positive infinitesimal. Negative exponents are
// allowed (Laurent-Puiseux) so that inversion is total on nonzero elements.
// ---------------------------------------------------------------------------

inline constexpr int kDefaultTruncOrder = 16;

struct PuiseuxTerm {
  Rational exponent;
  Rational coefficient;
};

/// A truncated series. `trunc_order() == nullopt` marks an exact element
/// (typically a constant lifted into the field); arithmetic between exact
/// elements stays exact, and any finite truncation order propagates by the
/// min rule. Terms are kept sorted by strictly increasing exponent with no
/// zero coefficients and every exponent below the truncation order.
class PuiseuxSeries {
 public:
  PuiseuxSeries() = default;

  static PuiseuxSeries zero(std::optional<Rational> trunc = std::nullopt) {
    PuiseuxSeries s;
    s.trunc_ = std::move(trunc);
    return s;
  }

  static PuiseuxSeries constant(Rational c,
                                std::optional<Rational> trunc = std::nullopt) {
    return monomial(0, std::move(c), std::move(trunc));
  }

  static PuiseuxSeries monomial(Rational exponent, Rational coefficient,
                                std::optional<Rational> trunc = std::nullopt) {
    PuiseuxSeries s;
    s.trunc_ = std::move(trunc);
    if (coefficient != 0 && (!s.trunc_ || exponent < *s.trunc_))
      s.terms_.push_back({std::move(exponent), std::move(coefficient)});
    return s;
  }

  /// The indeterminate T at the default truncation order.
  static PuiseuxSeries indeterminate(
      std::optional<Rational> trunc = Rational(kDefaultTruncOrder)) {
    return monomial(1, 1, std::move(trunc));
  }

  static PuiseuxSeries from_terms(std::vector<PuiseuxTerm> terms,
                                  std::optional<Rational> trunc =
                                      Rational(kDefaultTruncOrder)) {
    PuiseuxSeries s;
    s.trunc_ = std::move(trunc);
    s.terms_ = std::move(terms);
    s.normalize();
    return s;
  }

  const std::vector<PuiseuxTerm>& terms() const { return terms_; }
  const std::optional<Rational>& trunc_order() const { return trunc_; }
  bool is_zero() const { return terms_.empty(); }

  /// Lowest exponent; nullopt encodes +infinity (the zero series).
  std::optional<Rational> valuation() const {
    if (terms_.empty()) return std::nullopt;
    return terms_.front().exponent;
  }

  friend PuiseuxSeries operator+(const PuiseuxSeries& a, const PuiseuxSeries& b) {
    PuiseuxSeries s;
    s.trunc_ = min_trunc(a.trunc_, b.trunc_);
    s.terms_.reserve(a.terms_.size() + b.terms_.size());
    auto ia = a.terms_.begin(), ib = b.terms_.begin();
    while (ia != a.terms_.end() || ib != b.terms_.end()) {
      if (ib == b.terms_.end() || (ia != a.terms_.end() && ia->exponent < ib->exponent)) {
        s.terms_.push_back(*ia++);
      } else if (ia == a.terms_.end() || ib->exponent < ia->exponent) {
        s.terms_.push_back(*ib++);
      } else {
        Rational c = ia->coefficient + ib->coefficient;
        if (c != 0) s.terms_.push_back({ia->exponent, std::move(c)});
        ++ia;
        ++ib;
      }
    }
    s.drop_truncated();
    return s;
  }

  friend PuiseuxSeries operator-(const PuiseuxSeries& a) {
    PuiseuxSeries s = a;
    for (auto& t : s.terms_) t.coefficient = -t.coefficient;
    return s;
  }

  friend PuiseuxSeries operator-(const PuiseuxSeries& a, const PuiseuxSeries& b) {
    return a + (-b);
  }

  friend PuiseuxSeries operator*(const PuiseuxSeries& a, const PuiseuxSeries& b) {
    PuiseuxSeries s;
    s.trunc_ = product_trunc(a, b);
    for (const auto& ta : a.terms_)
      for (const auto& tb : b.terms_)
        s.terms_.push_back({ta.exponent + tb.exponent,
                            ta.coefficient * tb.coefficient});
    s.normalize();
    return s;
  }

 private:
  static std::optional<Rational> min_trunc(const std::optional<Rational>& a,
                                           const std::optional<Rational>& b) {
    if (!a) return b;
    if (!b) return a;
    return std::min(*a, *b);
  }

  // Result order for a product: min(ta + val(b), tb + val(a)) capped at
  // min(ta, tb), with val(0) = +infinity. Terms of the unknown tail of one
  // factor meet the leading term of the other at these exponents.
  static std::optional<Rational> product_trunc(const PuiseuxSeries& a,
                                               const PuiseuxSeries& b) {
    std::optional<Rational> result;  // nullopt = +infinity
    auto consider = [&result](const std::optional<Rational>& candidate) {
      if (!candidate) return;
      if (!result || *candidate < *result) result = candidate;
    };
    auto va = a.valuation(), vb = b.valuation();
    if (a.trunc_ && vb) consider(Rational(*a.trunc_ + *vb));
    if (b.trunc_ && va) consider(Rational(*b.trunc_ + *va));
    consider(a.trunc_);
    consider(b.trunc_);
    return result;
  }

  void normalize() {
    std::sort(terms_.begin(), terms_.end(),
              [](const PuiseuxTerm& x, const PuiseuxTerm& y) {
                return x.exponent < y.exponent;
              });
    std::vector<PuiseuxTerm> merged;
    merged.reserve(terms_.size());
    for (auto& t : terms_) {
      if (!merged.empty() && merged.back().exponent == t.exponent) {
        merged.back().coefficient += t.coefficient;
        if (merged.back().coefficient == 0) merged.pop_back();
      } else if (t.coefficient != 0) {
        merged.push_back(std::move(t));
      }
    }
    terms_ = std::move(merged);
    drop_truncated();
  }

  void drop_truncated() {
    if (!trunc_) return;
    while (!terms_.empty() && terms_.back().exponent >= *trunc_) terms_.pop_back();
  }

  std::vector<PuiseuxTerm> terms_;
  std::optional<Rational> trunc_;
};

// ---------------------------------------------------------------------------
// Field and order operations
// ---------------------------------------------------------------------------

inline std::optional<Rational> valuation(const PuiseuxSeries& a) {
  return a.valuation();
}

/// Multiplicative inverse by factoring out the leading term and expanding
/// the geometric series up to the truncation order. The result is reliable
/// below trunc(a) - 2*val(a).
inline PuiseuxSeries inv(const PuiseuxSeries& a) {
  if (a.is_zero()) throw NumericError("inv: division by zero series");
  const Rational q = a.terms().front().exponent;
  const Rational c = a.terms().front().coefficient;
  PuiseuxSeries lead_inv = PuiseuxSeries::monomial(-q, Rational(1) / c);
  if (a.terms().size() == 1)
    return PuiseuxSeries::monomial(-q, Rational(1) / c,
                                   a.trunc_order()
                                       ? std::optional<Rational>(*a.trunc_order() - 2 * q)
                                       : std::nullopt);
  if (!a.trunc_order())
    throw NumericError(
        "inv: an exact multi-term series has no finite geometric expansion; "
        "construct it with a truncation order");

  const Rational geom_trunc = *a.trunc_order() - q;
  // u = a / (c T^q) - 1 has positive valuation.
  PuiseuxSeries u = a * lead_inv - PuiseuxSeries::constant(1);
  PuiseuxSeries sum = PuiseuxSeries::constant(1, geom_trunc);
  PuiseuxSeries term = PuiseuxSeries::constant(1, geom_trunc);
  int guard = 0;
  while (!term.is_zero()) {
    if (++guard > 4096)
      throw NumericError("inv: truncation order too fine for geometric expansion");
    term = term * (-u);
    sum = sum + term;
  }
  return sum * lead_inv;
}

enum class Ordering { Less, Equal, Greater };

struct CompareResult {
  Ordering order;
  /// True when equality is certified only up to the common truncation
  /// order: terms beyond it are unknown for at least one operand.
  bool at_truncation;
};

/// Sign of a - b decided by its lowest-exponent coefficient; this is the
/// unique order making T a positive infinitesimal.
inline CompareResult compare_detailed(const PuiseuxSeries& a, const PuiseuxSeries& b) {
  PuiseuxSeries d = a - b;
  if (d.is_zero())
    return {Ordering::Equal, d.trunc_order().has_value()};
  return {d.terms().front().coefficient > 0 ? Ordering::Greater : Ordering::Less,
          false};
}

inline Ordering compare(const PuiseuxSeries& a, const PuiseuxSeries& b) {
  return compare_detailed(a, b).order;
}

inline PuiseuxSeries abs(const PuiseuxSeries& a) {
  if (!a.is_zero() && a.terms().front().coefficient < 0) return -a;
  return a;
}

/// True iff |a| is smaller than every positive rational: a = 0 or val(a) > 0.
inline bool is_infinitesimal(const PuiseuxSeries& a) {
  auto v = a.valuation();
  return !v || *v > 0;
}

/// Convex subgroup described by a valuation threshold. {val > 2} is the
/// group of series x with |x| <= N*T^2 for every positive real N.
struct ConvexSubgroup {
  enum class Mode { ValGt, ValGe };
  Rational threshold;
  Mode mode = Mode::ValGt;
};

inline bool in_subgroup(const PuiseuxSeries& a, const ConvexSubgroup& v) {
  auto val = a.valuation();
  if (!val) return true;  // zero belongs to every subgroup
  return v.mode == ConvexSubgroup::Mode::ValGt ? *val > v.threshold
                                               : *val >= v.threshold;
}

/// Numeric bridge: the germ evaluated at a small positive t.
inline double evaluate_at(const PuiseuxSeries& a, double t) {
  if (!(t > 0)) throw NumericError("evaluate_at: t must be positive");
  double sum = 0.0;
  for (const auto& term : a.terms())
    sum += to_double(term.coefficient) * std::pow(t, to_double(term.exponent));
  if (!std::isfinite(sum))
    throw NumericError("evaluate_at: overflow (exponent too extreme for machine range)");
  return sum;
}

template <>
struct ScalarRing<PuiseuxSeries> {
  static PuiseuxSeries from_rational(const Rational& r) {
    return PuiseuxSeries::constant(r);
  }
};

inline std::string to_string(const PuiseuxSeries& a) {
  if (a.is_zero()) return "0";
  std::string out;
  for (std::size_t i = 0; i < a.terms().size(); ++i) {
    const auto& t = a.terms()[i];
    if (i) out += " + ";
    out += rational_to_string(t.coefficient);
    if (t.exponent != 0) {
      out += "*T^";
      out += rational_to_string(t.exponent);
    }
  }
  return out;
}

}  // namespace gcv
