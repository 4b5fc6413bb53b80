#ifndef ADVREC_CORE_LINALG_HPP
#define ADVREC_CORE_LINALG_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "advrec/core/error.hpp"

namespace advrec {

/// Dense real vector. Entries are 64-bit; finiteness is checked at the
/// boundaries where it matters (`require_finite`), not on every write.
class Vec {
 public:
  Vec() = default;
  explicit Vec(std::size_t dim, double fill = 0.0) : data_(dim, fill) {}
  Vec(std::initializer_list<double> values) : data_(values) {}
  explicit Vec(std::vector<double> values) : data_(std::move(values)) {}

  std::size_t dim() const noexcept { return data_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }
  std::vector<double>& values() noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
  }

  const Vec& require_finite(const char* what) const {
    require(all_finite(), ErrorKind::numeric, std::string(what) + " has non-finite entries");
    return *this;
  }

  Vec& operator+=(const Vec& o) {
    check_same(o, "+=");
    for (std::size_t i = 0; i < dim(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    check_same(o, "-=");
    for (std::size_t i = 0; i < dim(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (double& x : data_) x *= s;
    return *this;
  }

  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(Vec a, double s) { return a *= s; }
  friend Vec operator*(double s, Vec a) { return a *= s; }
  friend bool operator==(const Vec& a, const Vec& b) { return a.data_ == b.data_; }

  void check_same(const Vec& o, const char* op) const {
    require(dim() == o.dim(), ErrorKind::dimension,
            std::string("vector ") + op + ": " + std::to_string(dim()) + " vs " + std::to_string(o.dim()));
  }

 private:
  std::vector<double> data_;
};

inline double dot(const Vec& a, const Vec& b) {
  a.check_same(b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double norm1(const Vec& a) {
  double s = 0.0;
  for (double x : a) s += std::abs(x);
  return s;
}

inline double norm_inf(const Vec& a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

inline std::size_t count_nonzero(const Vec& a) {
  return static_cast<std::size_t>(std::count_if(a.begin(), a.end(), [](double x) { return x != 0.0; }));
}

/// Index of the largest entry; ties resolve to the lowest index.
inline std::size_t argmax(const Vec& a) {
  require(!a.empty(), ErrorKind::dimension, "argmax of empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < a.dim(); ++i)
    if (a[i] > a[best]) best = i;
  return best;
}

inline Vec concat(const Vec& a, const Vec& b) {
  Vec out(a.dim() + b.dim());
  std::copy(a.begin(), a.end(), out.begin());
  std::copy(b.begin(), b.end(), out.begin() + static_cast<std::ptrdiff_t>(a.dim()));
  return out;
}

inline Vec hadamard(const Vec& a, const Vec& b) {
  a.check_same(b, "hadamard");
  Vec out(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) out[i] = a[i] * b[i];
  return out;
}

/// Row-major dense matrix.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Mat(std::size_t rows, std::size_t cols, std::vector<double> data) : rows_(rows), cols_(cols), data_(std::move(data)) {
    require(data_.size() == rows_ * cols_, ErrorKind::dimension,
            "matrix data length " + std::to_string(data_.size()) + " != " + std::to_string(rows_) + "x" +
                std::to_string(cols_));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  Vec row_vec(std::size_t r) const {
    auto rv = row(r);
    return Vec(std::vector<double>(rv.begin(), rv.end()));
  }

  const std::vector<double>& values() const noexcept { return data_; }
  std::vector<double>& values() noexcept { return data_; }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
  }

  friend bool operator==(const Mat& a, const Mat& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// y = M x
inline Vec matvec(const Mat& m, const Vec& x) {
  require(m.cols() == x.dim(), ErrorKind::dimension,
          "matvec: " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + " by " + std::to_string(x.dim()));
  Vec y(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    double s = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) s += row[c] * x[c];
    y[r] = s;
  }
  return y;
}

/// y = Mᵀ x
inline Vec matvec_t(const Mat& m, const Vec& x) {
  require(m.rows() == x.dim(), ErrorKind::dimension, "matvec_t: row count mismatch");
  Vec y(m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    const double xr = x[r];
    if (xr == 0.0) continue;
    for (std::size_t c = 0; c < m.cols(); ++c) y[c] += row[c] * xr;
  }
  return y;
}

/// M += scale · a bᵀ
inline void add_outer(Mat& m, const Vec& a, const Vec& b, double scale = 1.0) {
  require(m.rows() == a.dim() && m.cols() == b.dim(), ErrorKind::dimension, "add_outer shape mismatch");
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double ar = a[r] * scale;
    if (ar == 0.0) continue;
    auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) row[c] += ar * b[c];
  }
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Vec tanh(const Vec& x) {
  Vec y(x.dim());
  for (std::size_t i = 0; i < x.dim(); ++i) y[i] = std::tanh(x[i]);
  return y;
}

/// Shift-invariant softmax (max subtracted before exponentiation).
inline Vec softmax(const Vec& v) {
  require(!v.empty(), ErrorKind::dimension, "softmax of empty vector");
  v.require_finite("softmax input");
  const double mx = *std::max_element(v.begin(), v.end());
  Vec out(v.dim());
  double z = 0.0;
  for (std::size_t i = 0; i < v.dim(); ++i) {
    out[i] = std::exp(v[i] - mx);
    z += out[i];
  }
  for (double& x : out) x /= z;
  return out;
}

inline constexpr double kLogClamp = 1e-12;

/// −Σ yᵢ log pᵢ with pᵢ clamped at 1e-12.
inline double cross_entropy(const Vec& p, const Vec& y) {
  p.check_same(y, "cross_entropy");
  double loss = 0.0;
  for (std::size_t i = 0; i < p.dim(); ++i)
    if (y[i] != 0.0) loss -= y[i] * std::log(std::max(p[i], kLogClamp));
  return loss;
}

inline Vec one_hot(std::size_t dim, std::size_t index) {
  require(index < dim, ErrorKind::dimension, "one_hot index out of range");
  Vec v(dim);
  v[index] = 1.0;
  return v;
}

/// Value plus gradient with respect to the differentiated input.
struct GradResult {
  double value = 0.0;
  Vec grad;
};

}  // namespace advrec

#endif  // ADVREC_CORE_LINALG_HPP
