#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace csi {

/// Extents of a third-order tensor: two spatial modes (rows M, columns N)
/// and one spectral/channel mode L.
struct Dims {
  std::size_t M = 1;
  std::size_t N = 1;
  std::size_t L = 1;

  std::size_t size() const { return M * N * L; }
  std::size_t plane() const { return M * N; }
  std::size_t extent(int mode) const;
  friend bool operator==(const Dims&, const Dims&) = default;
};

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  Matrix transposed() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
// a * b^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);

/// Dense third-order tensor. Storage is band-major: plane l is contiguous and
/// row-major in (m, n), so element (m, n, l) lives at l*M*N + m*N + n.
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(Dims dims, double fill = 0.0);
  Tensor3(Dims dims, std::vector<double> data);

  const Dims& dims() const { return dims_; }
  std::size_t size() const { return data_.size(); }

  static std::size_t index(const Dims& d, std::size_t m, std::size_t n, std::size_t l) {
    return (l * d.M + m) * d.N + n;
  }
  double& operator()(std::size_t m, std::size_t n, std::size_t l) {
    return data_[index(dims_, m, n, l)];
  }
  double operator()(std::size_t m, std::size_t n, std::size_t l) const {
    return data_[index(dims_, m, n, l)];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  std::span<double> band(std::size_t l) { return {data_.data() + l * dims_.plane(), dims_.plane()}; }
  std::span<const double> band(std::size_t l) const {
    return {data_.data() + l * dims_.plane(), dims_.plane()};
  }

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

 private:
  Dims dims_;
  std::vector<double> data_;
};

/// t x_mode m: contracts the given mode (1, 2 or 3) of t with the columns of m.
Tensor3 mode_product(const Tensor3& t, const Matrix& m, int mode);

/// Mode-k unfolding. Columns enumerate the remaining indices with the lower
/// mode varying fastest, e.g. mode 1 maps (m, n, l) to (m, n + N*l).
Matrix unfold(const Tensor3& t, int mode);
Tensor3 fold(const Matrix& u, int mode, Dims dims);

/// Places x (M x N) at column offset ell inside an M x (N+L-1) zero matrix.
Matrix shift_slice(const Matrix& x, std::size_t ell, std::size_t L);

std::vector<double> vectorize(const Tensor3& t);
Tensor3 devectorize(std::span<const double> v, Dims dims);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double max_abs(std::span<const double> a);
// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void scale(std::span<double> x, double alpha);

}  // namespace csi
