#pragma once

#include <algorithm>
#include <vector>

#include "polynomial.hpp"

namespace bilevel::univariate {

/// Coefficients by increasing power, with no trailing zeros.
using Poly = std::vector<Scalar>;

inline void trim(Poly& p) {
  while (!p.empty() && p.back().is_zero()) p.pop_back();
}

inline Poly from_polynomial(const Polynomial& q) {
  if (q.nvars() != 1) throw DimensionError("univariate: expected a polynomial in one variable");
  Poly p;
  for (const auto& [e, c] : q.terms()) {
    if (p.size() <= e[0]) p.resize(e[0] + 1, Scalar(0));
    p[e[0]] += c;
  }
  trim(p);
  return p;
}

inline Scalar eval(const Poly& p, const Scalar& x) {
  Scalar acc = 0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * x + *it;
  return acc;
}

inline Poly derivative(const Poly& p) {
  Poly d;
  for (std::size_t k = 1; k < p.size(); ++k) d.push_back(p[k] * Scalar(static_cast<long>(k)));
  trim(d);
  return d;
}

/// Remainder of a divided by b (b nonzero).
inline Poly remainder(Poly a, const Poly& b) {
  trim(a);
  while (a.size() >= b.size() && !a.empty()) {
    Scalar f = a.back() / b.back();
    std::size_t shift = a.size() - b.size();
    for (std::size_t k = 0; k < b.size(); ++k) a[shift + k] -= f * b[k];
    trim(a);
  }
  return a;
}

inline Poly quotient(Poly a, const Poly& b) {
  trim(a);
  if (a.size() < b.size()) return {};
  Poly q(a.size() - b.size() + 1, Scalar(0));
  while (a.size() >= b.size() && !a.empty()) {
    Scalar f = a.back() / b.back();
    std::size_t shift = a.size() - b.size();
    q[shift] = f;
    for (std::size_t k = 0; k < b.size(); ++k) a[shift + k] -= f * b[k];
    trim(a);
  }
  trim(q);
  return q;
}

inline Poly gcd(Poly a, Poly b) {
  trim(a);
  trim(b);
  while (!b.empty()) {
    Poly r = remainder(a, b);
    a = std::move(b);
    b = std::move(r);
  }
  if (!a.empty()) {
    Scalar lead = a.back();
    for (auto& c : a) c /= lead;
  }
  return a;
}

inline std::vector<Poly> sturm_sequence(const Poly& p) {
  std::vector<Poly> seq{p, derivative(p)};
  while (!seq.back().empty()) {
    Poly r = remainder(seq[seq.size() - 2], seq.back());
    for (auto& c : r) c = -c;
    if (r.empty()) break;
    seq.push_back(r);
  }
  if (seq.back().empty()) seq.pop_back();
  return seq;
}

inline int sign_changes(const std::vector<Poly>& seq, const Scalar& x) {
  int changes = 0, last = 0;
  for (const auto& q : seq) {
    int s = eval(q, x).sign();
    if (s == 0) continue;
    if (last != 0 && s != last) ++changes;
    last = s;
  }
  return changes;
}

/// Bound B with every real root in [-B, B].
inline Scalar root_bound(const Poly& p) {
  Scalar m = 0;
  for (std::size_t k = 0; k + 1 < p.size(); ++k) m = std::max(m, abs(p[k] / p.back()));
  return m + 1;
}

inline Scalar floor_of(const Scalar& s) {
  mpz_class q;
  mpz_fdiv_q(q.get_mpz_t(), s.raw().get_num_mpz_t(), s.raw().get_den_mpz_t());
  return Scalar(mpq_class(q));
}

/// The rational with the smallest denominator in [lo, hi] (lo <= hi).
inline Scalar simplest_between(const Scalar& lo, const Scalar& hi) {
  if (lo.sign() <= 0 && hi.sign() >= 0) return Scalar(0);
  if (hi.sign() < 0) return -simplest_between(-hi, -lo);
  Scalar fl = floor_of(lo);
  if (fl == lo) return lo;
  if (fl + 1 <= hi) return fl + 1;
  return fl + Scalar(1) / simplest_between(Scalar(1) / (hi - fl), Scalar(1) / (lo - fl));
}

/// Real roots of a nonzero polynomial in [lo, hi]. Rational roots are returned exactly (the
/// simplest rational of a shrinking isolating interval eventually equals them); others as the midpoint of an isolating interval of width < 2^-bits.
inline std::vector<Scalar> real_roots(const Poly& pin, Scalar lo, Scalar hi, unsigned bits = 80) {
  Poly p = pin;
  trim(p);
  std::vector<Scalar> roots;
  if (p.size() <= 1 || lo > hi) return roots;
  Poly sq = quotient(p, gcd(p, derivative(p)));
  auto seq = sturm_sequence(sq);
  Scalar width = Scalar(1);
  for (unsigned k = 0; k < bits; ++k) width /= 2;

  if (eval(sq, lo).is_zero()) roots.push_back(lo);
  // roots in (a, b] = V(a) - V(b) for square-free p, also when a itself is a root
  std::vector<std::pair<Scalar, Scalar>> work;
  if (lo < hi) work.emplace_back(lo, hi);
  while (!work.empty()) {
    auto [l, h] = work.back();
    work.pop_back();
    int n = sign_changes(seq, l) - sign_changes(seq, h);
    if (n <= 0) continue;
    if (n == 1) {
      if (eval(sq, h).is_zero()) {
        roots.push_back(h);
        continue;
      }
      Scalar s = simplest_between(l, h);
      if (s > l && eval(sq, s).is_zero()) {
        roots.push_back(s);
        continue;
      }
    }
    if (n == 1 && h - l < width) {
      roots.push_back((l + h) / 2);
      continue;
    }
    Scalar m = (l + h) / 2;
    work.emplace_back(l, m);
    work.emplace_back(m, h);
  }
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
  return roots;
}

inline std::vector<Scalar> real_roots(const Poly& p, unsigned bits = 80) {
  Scalar B = root_bound(p);
  return real_roots(p, -B, B, bits);
}

}  // namespace bilevel::univariate
