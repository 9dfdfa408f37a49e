#pragma once

#include <map>
#include <string>
#include <vector>

#include "numeric.hpp"

namespace bilevel {

/// Sparse multivariate polynomial with rational coefficients.
class Polynomial {
 public:
  using Exponents = std::vector<unsigned>;

  Polynomial() = default;
  explicit Polynomial(std::size_t nvars) : nvars_(nvars) {}

  static Polynomial constant(std::size_t nvars, const Scalar& c) {
    Polynomial p(nvars);
    p.add_term(c, Exponents(nvars, 0));
    return p;
  }
  static Polynomial variable(std::size_t nvars, std::size_t k) {
    Polynomial p(nvars);
    Exponents e(nvars, 0);
    e.at(k) = 1;
    p.add_term(1, e);
    return p;
  }
  /// a^T z + c
  static Polynomial affine(const Vector& a, const Scalar& c) {
    Polynomial p = constant(a.size(), c);
    for (std::size_t k = 0; k < a.size(); ++k) p.add_term(a[k], unit_exp(a.size(), k, 1));
    return p;
  }

  Polynomial& add_term(const Scalar& coef, const Exponents& exps) {
    if (exps.size() != nvars_) throw DimensionError("monomial exponent vector has wrong length");
    if (coef.is_zero()) return *this;
    auto [it, fresh] = terms_.emplace(exps, coef);
    if (!fresh) {
      it->second += coef;
      if (it->second.is_zero()) terms_.erase(it);
    }
    return *this;
  }

  std::size_t nvars() const { return nvars_; }
  const std::map<Exponents, Scalar>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  unsigned degree() const {
    unsigned d = 0;
    for (const auto& [e, c] : terms_) {
      unsigned s = 0;
      for (auto k : e) s += k;
      d = std::max(d, s);
    }
    return d;
  }
  /// Highest total exponent among the variables in [begin, end).
  unsigned degree_in(std::size_t begin, std::size_t end) const {
    unsigned d = 0;
    for (const auto& [e, c] : terms_) {
      unsigned s = 0;
      for (std::size_t k = begin; k < end; ++k) s += e[k];
      d = std::max(d, s);
    }
    return d;
  }

  Scalar operator()(const Vector& z) const {
    if (z.size() != nvars_) throw DimensionError("polynomial evaluated at point of wrong dimension");
    Scalar acc = 0;
    for (const auto& [e, c] : terms_) {
      Scalar t = c;
      for (std::size_t k = 0; k < nvars_; ++k)
        for (unsigned p = 0; p < e[k]; ++p) t *= z[k];
      acc += t;
    }
    return acc;
  }
  double eval_double(const std::vector<double>& z) const {
    double acc = 0;
    for (const auto& [e, c] : terms_) {
      double t = c.to_double();
      for (std::size_t k = 0; k < nvars_; ++k)
        for (unsigned p = 0; p < e[k]; ++p) t *= z[k];
      acc += t;
    }
    return acc;
  }

  Polynomial derivative(std::size_t k) const {
    Polynomial d(nvars_);
    for (const auto& [e, c] : terms_) {
      if (e[k] == 0) continue;
      Exponents f = e;
      --f[k];
      d.add_term(c * Scalar(static_cast<long>(e[k])), f);
    }
    return d;
  }

  Vector gradient(const Vector& z) const {
    Vector g(nvars_);
    for (std::size_t k = 0; k < nvars_; ++k) g[k] = derivative(k)(z);
    return g;
  }
  Matrix hessian(const Vector& z) const {
    Matrix H(nvars_, nvars_);
    for (std::size_t i = 0; i < nvars_; ++i) {
      Polynomial di = derivative(i);
      for (std::size_t j = i; j < nvars_; ++j) {
        Scalar v = di.derivative(j)(z);
        H(i, j) = v;
        H(j, i) = v;
      }
    }
    return H;
  }

  /// Fixes the variables [0, fixed.size()) to the given values; the result has the rest.
  Polynomial substitute_prefix(const Vector& fixed) const {
    std::size_t k0 = fixed.size();
    if (k0 > nvars_) throw DimensionError("substitute_prefix: too many values");
    Polynomial r(nvars_ - k0);
    for (const auto& [e, c] : terms_) {
      Scalar t = c;
      for (std::size_t k = 0; k < k0; ++k)
        for (unsigned p = 0; p < e[k]; ++p) t *= fixed[k];
      r.add_term(t, Exponents(e.begin() + static_cast<long>(k0), e.end()));
    }
    return r;
  }

  Polynomial operator+(const Polynomial& o) const {
    Polynomial r = *this;
    for (const auto& [e, c] : o.terms_) r.add_term(c, e);
    return r;
  }
  Polynomial scaled(const Scalar& s) const {
    Polynomial r(nvars_);
    for (const auto& [e, c] : terms_) r.add_term(c * s, e);
    return r;
  }
  Polynomial operator*(const Polynomial& o) const {
    Polynomial r(nvars_);
    for (const auto& [e1, c1] : terms_)
      for (const auto& [e2, c2] : o.terms_) {
        Exponents e(nvars_);
        for (std::size_t k = 0; k < nvars_; ++k) e[k] = e1[k] + e2[k];
        r.add_term(c1 * c2, e);
      }
    return r;
  }

  /// Human-readable form over variable names, e.g. "1/2*x1^2 + x1*y1".
  std::string str(const std::vector<std::string>& names) const {
    if (terms_.empty()) return "0";
    std::string out;
    bool first = true;
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
      const auto& [e, c] = *it;
      Scalar mag = abs(c);
      out += first ? (c.sign() < 0 ? "-" : "") : (c.sign() < 0 ? " - " : " + ");
      first = false;
      std::string mono;
      for (std::size_t k = 0; k < nvars_; ++k) {
        if (e[k] == 0) continue;
        if (!mono.empty()) mono += "*";
        mono += names.at(k);
        if (e[k] > 1) mono += "^" + std::to_string(e[k]);
      }
      if (mono.empty()) out += mag.str();
      else if (mag == Scalar(1)) out += mono;
      else out += mag.str() + "*" + mono;
    }
    return out;
  }

  friend bool operator==(const Polynomial&, const Polynomial&) = default;

 private:
  static Exponents unit_exp(std::size_t n, std::size_t k, unsigned p) {
    Exponents e(n, 0);
    e[k] = p;
    return e;
  }

  std::size_t nvars_ = 0;
  std::map<Exponents, Scalar> terms_;
};

}  // namespace bilevel
