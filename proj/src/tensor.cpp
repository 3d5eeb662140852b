#include "csi/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "csi/error.hpp"

namespace csi {

namespace {

void check_mode(int mode) {
  if (mode < 1 || mode > 3) throw ArgumentError("mode must be 1, 2 or 3, got " + std::to_string(mode));
}

void check_extents(const Dims& d) {
  if (d.M == 0 || d.N == 0 || d.L == 0) throw ShapeError("tensor extents must be positive");
}

}  // namespace

std::size_t Dims::extent(int mode) const {
  check_mode(mode);
  return mode == 1 ? M : (mode == 2 ? N : L);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  if (rows == 0 || cols == 0) throw ShapeError("matrix extents must be positive");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows == 0 || cols == 0) throw ShapeError("matrix extents must be positive");
  if (data_.size() != rows * cols)
    throw ShapeError("matrix data length " + std::to_string(data_.size()) + " != " +
                     std::to_string(rows) + "x" + std::to_string(cols));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix id(n, n);
  for (std::size_t i = 0; i < n; ++i) id(i, i) = 1.0;
  return id;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    throw ShapeError("matmul: inner extents " + std::to_string(a.cols()) + " and " +
                     std::to_string(b.rows()) + " differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols())
    throw ShapeError("matmul_nt: inner extents " + std::to_string(a.cols()) + " and " +
                     std::to_string(b.cols()) + " differ");
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      c(i, j) = s;
    }
  return c;
}

Tensor3::Tensor3(Dims dims, double fill) : dims_(dims) {
  check_extents(dims_);
  data_.assign(dims_.size(), fill);
}

Tensor3::Tensor3(Dims dims, std::vector<double> data) : dims_(dims), data_(std::move(data)) {
  check_extents(dims_);
  if (data_.size() != dims_.size())
    throw ShapeError("tensor data length " + std::to_string(data_.size()) + " != " +
                     std::to_string(dims_.size()));
}

Tensor3 mode_product(const Tensor3& t, const Matrix& m, int mode) {
  check_mode(mode);
  const Dims in = t.dims();
  const std::size_t extent = in.extent(mode);
  if (m.cols() != extent)
    throw ShapeError("mode-" + std::to_string(mode) + " product: tensor extent " +
                     std::to_string(extent) + " != matrix columns " + std::to_string(m.cols()));
  Dims out = in;
  (mode == 1 ? out.M : mode == 2 ? out.N : out.L) = m.rows();
  Tensor3 r(out);
  const auto src = t.data();
  auto dst = r.data();
  const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(m.rows());

  switch (mode) {
    case 1:
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t i = 0; i < rows; ++i)
        for (std::size_t l = 0; l < in.L; ++l) {
          double* o = dst.data() + Tensor3::index(out, i, 0, l);
          for (std::size_t k = 0; k < in.M; ++k) {
            const double w = m(i, k);
            const double* s = src.data() + Tensor3::index(in, k, 0, l);
            for (std::size_t n = 0; n < in.N; ++n) o[n] += w * s[n];
          }
        }
      break;
    case 2:
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t j = 0; j < rows; ++j)
        for (std::size_t l = 0; l < in.L; ++l)
          for (std::size_t mm = 0; mm < in.M; ++mm) {
            const double* s = src.data() + Tensor3::index(in, mm, 0, l);
            double acc = 0.0;
            for (std::size_t k = 0; k < in.N; ++k) acc += m(j, k) * s[k];
            dst[Tensor3::index(out, mm, j, l)] = acc;
          }
      break;
    default:
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t i = 0; i < rows; ++i) {
        double* o = dst.data() + Tensor3::index(out, 0, 0, i);
        for (std::size_t k = 0; k < in.L; ++k) {
          const double w = m(i, k);
          const double* s = src.data() + Tensor3::index(in, 0, 0, k);
          for (std::size_t p = 0; p < in.plane(); ++p) o[p] += w * s[p];
        }
      }
      break;
  }
  return r;
}

Matrix unfold(const Tensor3& t, int mode) {
  check_mode(mode);
  const Dims d = t.dims();
  Matrix u(d.extent(mode), d.size() / d.extent(mode));
  for (std::size_t l = 0; l < d.L; ++l)
    for (std::size_t m = 0; m < d.M; ++m)
      for (std::size_t n = 0; n < d.N; ++n) {
        const double v = t(m, n, l);
        if (mode == 1)
          u(m, n + d.N * l) = v;
        else if (mode == 2)
          u(n, m + d.M * l) = v;
        else
          u(l, m + d.M * n) = v;
      }
  return u;
}

Tensor3 fold(const Matrix& u, int mode, Dims d) {
  check_mode(mode);
  if (u.rows() != d.extent(mode) || u.cols() * u.rows() != d.size())
    throw ShapeError("fold: matrix " + std::to_string(u.rows()) + "x" + std::to_string(u.cols()) +
                     " does not unfold the requested tensor at mode " + std::to_string(mode));
  Tensor3 t(d);
  for (std::size_t l = 0; l < d.L; ++l)
    for (std::size_t m = 0; m < d.M; ++m)
      for (std::size_t n = 0; n < d.N; ++n) {
        if (mode == 1)
          t(m, n, l) = u(m, n + d.N * l);
        else if (mode == 2)
          t(m, n, l) = u(n, m + d.M * l);
        else
          t(m, n, l) = u(l, m + d.M * n);
      }
  return t;
}

Matrix shift_slice(const Matrix& x, std::size_t ell, std::size_t L) {
  if (L == 0 || ell >= L)
    throw ArgumentError("shift " + std::to_string(ell) + " outside [0, " +
                        std::to_string(L == 0 ? 0 : L - 1) + "]");
  Matrix out(x.rows(), x.cols() + L - 1);
  for (std::size_t m = 0; m < x.rows(); ++m)
    for (std::size_t n = 0; n < x.cols(); ++n) out(m, n + ell) = x(m, n);
  return out;
}

std::vector<double> vectorize(const Tensor3& t) { return t.storage(); }

Tensor3 devectorize(std::span<const double> v, Dims dims) {
  if (v.size() != dims.size())
    throw ShapeError("devectorize: length " + std::to_string(v.size()) + " != " +
                     std::to_string(dims.size()));
  return Tensor3(dims, std::vector<double>(v.begin(), v.end()));
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw ShapeError("axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void scale(std::span<double> x, double alpha) {
  for (double& v : x) v *= alpha;
}

}  // namespace csi
