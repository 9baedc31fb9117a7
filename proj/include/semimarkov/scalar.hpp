#ifndef SEMIMARKOV_SCALAR_HPP
#define SEMIMARKOV_SCALAR_HPP

#include <gmpxx.h>

#include <Eigen/Core>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>

namespace Eigen {

// Exact rational scalar for dense matrices (GMP mpq_class).
template <>
struct NumTraits<mpq_class> : GenericNumTraits<mpq_class> {
  typedef mpq_class Real;
  typedef mpq_class NonInteger;
  typedef mpq_class Nested;
  static inline Real epsilon() { return 0; }
  static inline Real dummy_precision() { return 0; }
  static inline int digits10() { return 0; }
  enum {
    IsInteger = 0,
    IsSigned = 1,
    IsComplex = 0,
    RequireInitialization = 1,
    ReadCost = 6,
    AddCost = 150,
    MulCost = 100
  };
};

}  // namespace Eigen

namespace smp {

using Rational = mpq_class;
using StateId = int;

template <class S>
using DenseMatrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using DenseVector = Eigen::Matrix<S, Eigen::Dynamic, 1>;

/// Pivot magnitudes below this are treated as zero in floating-point
/// elimination and state exclusion.
inline constexpr double kSingularTolerance = 1e-12;

namespace detail {

// "123", "-4/5", "0.25" (exact decimal), fallback: any strtod-parsable text.
inline std::optional<Rational> parse_rational_text(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const auto slash = text.find('/');
  if (slash != std::string::npos) {
    mpq_class q;
    if (q.set_str(text, 10) != 0) return std::nullopt;
    if (q.get_den() == 0) return std::nullopt;
    q.canonicalize();
    return q;
  }
  const auto dot = text.find('.');
  const bool plain = text.find_first_not_of("+-0123456789.") == std::string::npos;
  if (plain && dot != std::string::npos) {
    std::string digits = text.substr(0, dot) + text.substr(dot + 1);
    const std::size_t frac_len = text.size() - dot - 1;
    if (digits.empty() || digits == "+" || digits == "-") return std::nullopt;
    mpz_class num;
    if (num.set_str(digits, 10) != 0) return std::nullopt;
    mpz_class den;
    mpz_ui_pow_ui(den.get_mpz_t(), 10, frac_len);
    mpq_class q(num, den);
    q.canonicalize();
    return q;
  }
  if (plain) {
    mpz_class num;
    if (num.set_str(text, 10) != 0) return std::nullopt;
    return mpq_class(num);
  }
  // Scientific notation and other float spellings: exact value of the double.
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == nullptr || *end != '\0' || !std::isfinite(v)) return std::nullopt;
  mpq_class q;
  mpq_set_d(q.get_mpq_t(), v);
  return q;
}

}  // namespace detail

template <class S>
struct ScalarTraits;

template <>
struct ScalarTraits<double> {
  static constexpr bool is_exact = false;
  static constexpr const char* name = "float";

  static std::optional<double> from_text(const std::string& text) {
    auto q = detail::parse_rational_text(text);
    if (!q) return std::nullopt;
    return q->get_d();
  }
  static double from_fraction(long num, long den) {
    return static_cast<double>(num) / static_cast<double>(den);
  }
  static double to_double(double v) { return v; }
  static std::string repr(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  }
  static std::string display(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
  }
};

template <>
struct ScalarTraits<Rational> {
  static constexpr bool is_exact = true;
  static constexpr const char* name = "rational";

  static std::optional<Rational> from_text(const std::string& text) {
    return detail::parse_rational_text(text);
  }
  static Rational from_fraction(long num, long den) {
    Rational q(num, den);
    q.canonicalize();
    return q;
  }
  static double to_double(const Rational& v) { return v.get_d(); }
  static std::string repr(const Rational& v) { return v.get_str(); }
  static std::string display(const Rational& v) { return v.get_str(); }
};

template <class S>
inline S abs_value(const S& v) {
  using std::abs;
  return abs(v);
}

/// Relative difference with an absolute floor of 1, as a double.
template <class S>
inline double rel_gap(const S& a, const S& b) {
  const double da = ScalarTraits<S>::to_double(a);
  const double db = ScalarTraits<S>::to_double(b);
  const double scale = std::max({1.0, std::fabs(da), std::fabs(db)});
  if constexpr (ScalarTraits<S>::is_exact) {
    return ScalarTraits<S>::to_double(abs_value(S(a - b))) / scale;
  } else {
    return std::fabs(da - db) / scale;
  }
}

/// Equality up to `rel_tol` (relative, floored at 1). Exact scalars compare
/// exactly and ignore the tolerance.
template <class S>
inline bool near(const S& a, const S& b, double rel_tol) {
  if constexpr (ScalarTraits<S>::is_exact) {
    (void)rel_tol;
    return a == b;
  } else {
    return rel_gap(a, b) <= rel_tol;
  }
}

inline long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long result = 1;
  k = std::min(k, n - k);
  for (int i = 1; i <= k; ++i) result = result * (n - k + i) / i;
  return result;
}

template <class S>
inline S binom(int n, int k) {
  return S(static_cast<long>(binomial(n, k)));
}

template <class To, class From>
inline To scalar_cast(const From& v) {
  if constexpr (std::is_same_v<To, From>) {
    return v;
  } else if constexpr (std::is_same_v<To, double>) {
    return ScalarTraits<From>::to_double(v);
  } else {
    Rational q;
    mpq_set_d(q.get_mpq_t(), v);
    return q;
  }
}

template <class To, class From>
inline DenseMatrix<To> matrix_cast(const DenseMatrix<From>& m) {
  DenseMatrix<To> out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      out(i, j) = scalar_cast<To>(m(i, j));
  return out;
}

}  // namespace smp

#endif  // SEMIMARKOV_SCALAR_HPP
