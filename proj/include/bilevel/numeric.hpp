#pragma once

#include <gmpxx.h>

#include <algorithm>
#include <compare>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bilevel {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Exact rational number in lowest terms with a positive denominator.
class Scalar {
 public:
  Scalar() = default;
  Scalar(int v) : q_(v) {}
  Scalar(long v) : q_(v) {}
  Scalar(long long v) : q_(static_cast<long>(v)) {}
  Scalar(long num, long den) : q_(num, den) {
    if (den == 0) throw std::domain_error("zero denominator");
    q_.canonicalize();
  }
  explicit Scalar(const mpq_class& q) : q_(q) { q_.canonicalize(); }

  /// Accepts "a", "-a", "a/b" and finite decimals such as "0.125" or "-2.5e-3".
  static Scalar parse(std::string_view text) {
    std::string s(text);
    auto bad = [&] { return std::invalid_argument("not a rational number: '" + s + "'"); };
    if (s.empty()) throw bad();
    if (s.find_first_of(".eE") != std::string::npos) return parse_decimal(s);
    mpq_class q;
    auto slash = s.find('/');
    if (!valid_integer(s.substr(0, slash), true)) throw bad();
    if (slash != std::string::npos && !valid_integer(s.substr(slash + 1), false)) throw bad();
    if (q.set_str(s, 10) != 0) throw bad();
    if (q.get_den() == 0) throw std::domain_error("zero denominator in '" + s + "'");
    q.canonicalize();
    return Scalar(q);
  }

  /// Nearest rational with denominator 2^bits (used only for approximate inputs).
  static Scalar from_double(double v, unsigned bits = 60) {
    mpq_class q(v);
    mpz_class scale = 1;
    scale <<= bits;
    mpz_class num = q.get_num() * scale;
    mpz_class rounded;
    mpz_fdiv_q(rounded.get_mpz_t(), num.get_mpz_t(), q.get_den_mpz_t());
    return Scalar(mpq_class(rounded, scale));
  }

  const mpq_class& raw() const { return q_; }
  double to_double() const { return q_.get_d(); }
  std::string str() const { return q_.get_str(); }
  int sign() const { return sgn(q_); }
  bool is_zero() const { return sgn(q_) == 0; }
  mpz_class num() const { return q_.get_num(); }
  mpz_class den() const { return q_.get_den(); }

  Scalar operator-() const { return Scalar(mpq_class(-q_)); }
  Scalar& operator+=(const Scalar& o) { q_ += o.q_; return *this; }
  Scalar& operator-=(const Scalar& o) { q_ -= o.q_; return *this; }
  Scalar& operator*=(const Scalar& o) { q_ *= o.q_; return *this; }
  Scalar& operator/=(const Scalar& o) {
    if (o.is_zero()) throw std::domain_error("division by zero");
    q_ /= o.q_;
    return *this;
  }
  friend Scalar operator+(Scalar a, const Scalar& b) { return a += b; }
  friend Scalar operator-(Scalar a, const Scalar& b) { return a -= b; }
  friend Scalar operator*(Scalar a, const Scalar& b) { return a *= b; }
  friend Scalar operator/(Scalar a, const Scalar& b) { return a /= b; }

  friend bool operator==(const Scalar& a, const Scalar& b) { return a.q_ == b.q_; }
  friend std::strong_ordering operator<=>(const Scalar& a, const Scalar& b) {
    int c = cmp(a.q_, b.q_);
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
  }
  friend std::ostream& operator<<(std::ostream& os, const Scalar& s) { return os << s.str(); }

 private:
  static bool valid_integer(const std::string& s, bool allow_sign) {
    std::size_t i = 0;
    if (allow_sign && !s.empty() && (s[0] == '-' || s[0] == '+')) i = 1;
    if (i == s.size()) return false;
    return std::all_of(s.begin() + static_cast<long>(i), s.end(),
                       [](char c) { return c >= '0' && c <= '9'; });
  }

  static Scalar parse_decimal(const std::string& s) {
    auto bad = [&] { return std::invalid_argument("not a rational number: '" + s + "'"); };
    std::string mant = s;
    long exp10 = 0;
    if (auto e = s.find_first_of("eE"); e != std::string::npos) {
      mant = s.substr(0, e);
      std::string ex = s.substr(e + 1);
      if (!valid_integer(ex, true)) throw bad();
      exp10 = std::stol(ex);
    }
    bool neg = !mant.empty() && mant[0] == '-';
    if (!mant.empty() && (mant[0] == '-' || mant[0] == '+')) mant.erase(0, 1);
    auto dot = mant.find('.');
    std::string digits = mant;
    if (dot != std::string::npos) {
      digits = mant.substr(0, dot) + mant.substr(dot + 1);
      exp10 -= static_cast<long>(mant.size() - dot - 1);
    }
    if (digits.empty() || !valid_integer(digits, false)) throw bad();
    mpz_class n(digits, 10);
    mpz_class p;
    mpz_ui_pow_ui(p.get_mpz_t(), 10, static_cast<unsigned long>(exp10 < 0 ? -exp10 : exp10));
    mpq_class q = exp10 < 0 ? mpq_class(n, p) : mpq_class(n * p);
    q.canonicalize();
    if (neg) q = -q;
    return Scalar(q);
  }

  mpq_class q_;
};

inline Scalar abs(const Scalar& s) { return s.sign() < 0 ? -s : s; }

using Vector = std::vector<Scalar>;

template <class T>
class BasicMatrix {
 public:
  BasicMatrix() = default;
  BasicMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  BasicMatrix(std::initializer_list<std::initializer_list<T>> init) {
    rows_ = init.size();
    cols_ = rows_ ? init.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : init) {
      if (r.size() != cols_) throw DimensionError("ragged matrix initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static BasicMatrix identity(std::size_t n) {
    BasicMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }
  static BasicMatrix from_rows(const std::vector<std::vector<T>>& rows, std::size_t cols) {
    BasicMatrix m(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != cols) throw DimensionError("row length mismatch");
      for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::vector<T> row(std::size_t i) const {
    return std::vector<T>(data_.begin() + static_cast<long>(i * cols_),
                          data_.begin() + static_cast<long>((i + 1) * cols_));
  }
  std::vector<T> col(std::size_t j) const {
    std::vector<T> c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }
  void append_row(const std::vector<T>& r) {
    if (rows_ == 0 && cols_ == 0) cols_ = r.size();
    if (r.size() != cols_) throw DimensionError("appended row has wrong length");
    data_.insert(data_.end(), r.begin(), r.end());
    ++rows_;
  }

  BasicMatrix transpose() const {
    BasicMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  std::vector<T> operator*(const std::vector<T>& v) const {
    if (v.size() != cols_) throw DimensionError("matrix-vector size mismatch");
    std::vector<T> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
      T acc{};
      for (std::size_t j = 0; j < cols_; ++j) acc += (*this)(i, j) * v[j];
      out[i] = acc;
    }
    return out;
  }
  BasicMatrix operator*(const BasicMatrix& o) const {
    if (cols_ != o.rows_) throw DimensionError("matrix product size mismatch");
    BasicMatrix out(rows_, o.cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t k = 0; k < cols_; ++k) {
        if ((*this)(i, k) == T{}) continue;
        for (std::size_t j = 0; j < o.cols_; ++j) out(i, j) += (*this)(i, k) * o(k, j);
      }
    return out;
  }
  BasicMatrix operator+(const BasicMatrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionError("matrix sum size mismatch");
    BasicMatrix out = *this;
    for (std::size_t k = 0; k < data_.size(); ++k) out.data_[k] += o.data_[k];
    return out;
  }
  BasicMatrix scaled(const T& s) const {
    BasicMatrix out = *this;
    for (auto& x : out.data_) x *= s;
    return out;
  }

  /// Rows of this matrix followed by rows of `o`.
  BasicMatrix vstack(const BasicMatrix& o) const {
    if (rows_ == 0 && cols_ == 0) return o;
    if (o.rows_ == 0 && o.cols_ == 0) return *this;
    if (o.cols_ != cols_) throw DimensionError("vstack column mismatch");
    BasicMatrix out = *this;
    out.data_.insert(out.data_.end(), o.data_.begin(), o.data_.end());
    out.rows_ += o.rows_;
    return out;
  }
  BasicMatrix select_rows(const std::vector<std::size_t>& idx) const {
    BasicMatrix out(idx.size(), cols_);
    for (std::size_t k = 0; k < idx.size(); ++k)
      for (std::size_t j = 0; j < cols_; ++j) out(k, j) = (*this)(idx[k], j);
    return out;
  }
  BasicMatrix select_cols(const std::vector<std::size_t>& idx) const {
    BasicMatrix out(rows_, idx.size());
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t k = 0; k < idx.size(); ++k) out(i, k) = (*this)(i, idx[k]);
    return out;
  }

  friend bool operator==(const BasicMatrix&, const BasicMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = BasicMatrix<Scalar>;

// ---- vector helpers -------------------------------------------------------

inline Vector zeros(std::size_t n) { return Vector(n, Scalar(0)); }

inline Vector unit(std::size_t n, std::size_t j, Scalar value = 1) {
  Vector v = zeros(n);
  v[j] = value;
  return v;
}

template <class T>
T dot(const std::vector<T>& a, const std::vector<T>& b) {
  if (a.size() != b.size()) throw DimensionError("dot product size mismatch");
  T acc{};
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

template <class T>
std::vector<T> operator+(std::vector<T> a, const std::vector<T>& b) {
  if (a.size() != b.size()) throw DimensionError("vector sum size mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

template <class T>
std::vector<T> operator-(std::vector<T> a, const std::vector<T>& b) {
  if (a.size() != b.size()) throw DimensionError("vector difference size mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
  return a;
}

template <class T>
std::vector<T> operator*(const T& s, std::vector<T> a) {
  for (auto& x : a) x *= s;
  return a;
}

template <class T>
std::vector<T> concat(std::vector<T> a, const std::vector<T>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

inline bool is_zero(const Vector& v) {
  return std::all_of(v.begin(), v.end(), [](const Scalar& s) { return s.is_zero(); });
}

inline Scalar max_norm(const Vector& v) {
  Scalar m = 0;
  for (const auto& s : v) m = std::max(m, abs(s));
  return m;
}

/// Quadratic form v^T H v.
template <class T>
T quad_form(const BasicMatrix<T>& H, const std::vector<T>& v) {
  return dot(v, H * v);
}

inline std::vector<double> to_doubles(const Vector& v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& s : v) out.push_back(s.to_double());
  return out;
}

// ---- exact elimination -----------------------------------------------------

template <class T>
struct RowEchelon {
  BasicMatrix<T> reduced;
  std::vector<std::size_t> pivots;  ///< pivot column of each nonzero row, increasing
};

/// Reduced row echelon form by Gauss-Jordan elimination (first nonzero pivot).
template <class T>
RowEchelon<T> rref(BasicMatrix<T> A) {
  std::vector<std::size_t> pivots;
  std::size_t r = 0;
  for (std::size_t c = 0; c < A.cols() && r < A.rows(); ++c) {
    std::size_t p = r;
    while (p < A.rows() && A(p, c) == T{}) ++p;
    if (p == A.rows()) continue;
    if (p != r)
      for (std::size_t j = 0; j < A.cols(); ++j) std::swap(A(p, j), A(r, j));
    T inv = T(1) / A(r, c);
    for (std::size_t j = c; j < A.cols(); ++j) A(r, j) *= inv;
    for (std::size_t i = 0; i < A.rows(); ++i) {
      if (i == r || A(i, c) == T{}) continue;
      T f = A(i, c);
      for (std::size_t j = c; j < A.cols(); ++j) A(i, j) -= f * A(r, j);
    }
    pivots.push_back(c);
    ++r;
  }
  return {std::move(A), std::move(pivots)};
}

template <class T>
std::size_t rank(const BasicMatrix<T>& A) {
  return rref(A).pivots.size();
}

/// Basis of {v | A v = 0}; one vector per free column, with a 1 in that column.
template <class T>
std::vector<std::vector<T>> kernel_basis(const BasicMatrix<T>& A) {
  auto [R, pivots] = rref(A);
  std::vector<bool> is_pivot(A.cols(), false);
  for (auto c : pivots) is_pivot[c] = true;
  std::vector<std::vector<T>> basis;
  for (std::size_t free = 0; free < A.cols(); ++free) {
    if (is_pivot[free]) continue;
    std::vector<T> v(A.cols(), T{});
    v[free] = T(1);
    for (std::size_t k = 0; k < pivots.size(); ++k) v[pivots[k]] = -R(k, free);
    basis.push_back(std::move(v));
  }
  return basis;
}

/// Some x with A x = b (free variables set to zero), or nullopt when b is outside the column span.
template <class T>
std::optional<std::vector<T>> solve_linear(const BasicMatrix<T>& A, const std::vector<T>& b) {
  if (A.rows() != b.size()) throw DimensionError("solve_linear: A has " + std::to_string(A.rows()) +
                                                 " rows but b has " + std::to_string(b.size()) + " entries");
  BasicMatrix<T> aug(A.rows(), A.cols() + 1);
  for (std::size_t i = 0; i < A.rows(); ++i) {
    for (std::size_t j = 0; j < A.cols(); ++j) aug(i, j) = A(i, j);
    aug(i, A.cols()) = b[i];
  }
  auto [R, pivots] = rref(aug);
  if (!pivots.empty() && pivots.back() == A.cols()) return std::nullopt;
  std::vector<T> x(A.cols(), T{});
  for (std::size_t k = 0; k < pivots.size(); ++k) x[pivots[k]] = R(k, A.cols());
  return x;
}

}  // namespace bilevel
