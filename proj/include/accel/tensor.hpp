/**
 * @file tensor.hpp
 * @brief Dense order-N tensor algebra: matricization, mode-n products,
 *        Khatri-Rao / Kronecker / Hadamard kernels, norms.
 *
 * Linearization convention (fixed and documented): first index fastest, i.e.
 * the flat offset of (i_1,...,i_N) is i_1 + I_1*(i_2 + I_2*(i_3 + ...)).
 * Mode-n matricization places mode-n fibers as columns, with the remaining
 * indices ordered so that i_1 varies fastest among them.  Under this choice
 * the CP identity X_(n) = A^(n) (A^(N) kr ... kr A^(1), skipping n)^T holds,
 * and matricized multi-mode products use the matching reversed Kronecker
 * order.  Any consistent ordering is valid; this one is ours.
 */
#pragma once

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>
#include <Eigen/Dense>

namespace accel {

using Eigen::MatrixXd;
using Eigen::VectorXd;

class DenseTensor {
 public:
  DenseTensor() = default;

  explicit DenseTensor(std::vector<std::size_t> shape)
      : shape_(std::move(shape)) {
    check_shape();
    data_.assign(numel(), 0.0);
  }

  DenseTensor(std::vector<std::size_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape();
    if (data_.size() != numel())
      throw std::invalid_argument("DenseTensor: data length " +
                                  std::to_string(data_.size()) +
                                  " != product(shape) " +
                                  std::to_string(numel()));
  }

  std::size_t order() const { return shape_.size(); }
  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t extent(std::size_t n) const { return shape_.at(n); }
  std::size_t numel() const {
    return std::accumulate(shape_.begin(), shape_.end(), std::size_t{1},
                           std::multiplies<>());
  }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  /// Flat offset of a multi-index (first index fastest).
  std::size_t offset(const std::vector<std::size_t>& idx) const {
    std::size_t off = 0, stride = 1;
    for (std::size_t n = 0; n < shape_.size(); ++n) {
      off += idx[n] * stride;
      stride *= shape_[n];
    }
    return off;
  }

  double at(const std::vector<std::size_t>& idx) const { return data_[offset(idx)]; }
  double& at(const std::vector<std::size_t>& idx) { return data_[offset(idx)]; }

  double frob_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
  }

 private:
  void check_shape() const {
    if (shape_.empty()) throw std::invalid_argument("DenseTensor: order must be >= 1");
    for (std::size_t e : shape_)
      if (e == 0) throw std::invalid_argument("DenseTensor: every extent must be >= 1");
  }

  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

inline double inner_product(const DenseTensor& s, const DenseTensor& t) {
  if (s.shape() != t.shape())
    throw std::invalid_argument("inner_product: shape mismatch");
  double acc = 0.0;
  const auto& a = s.data();
  const auto& b = t.data();
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double frob_norm(const DenseTensor& t) { return t.frob_norm(); }

/// Mode-n matricization: I_n x prod_{m!=n} I_m, columns are mode-n fibers
/// ordered with i_1 varying fastest among the remaining indices.
inline MatrixXd matricize(const DenseTensor& t, std::size_t n) {
  if (n >= t.order()) throw std::out_of_range("matricize: mode out of range");
  const auto& shape = t.shape();
  const std::size_t In = shape[n];
  const std::size_t cols = t.numel() / In;
  MatrixXd m(In, cols);

  // stride of mode n in the flat layout; below/above split of the remaining
  // index space lets us enumerate columns without materializing multi-indices
  std::size_t stride_n = 1;
  for (std::size_t k = 0; k < n; ++k) stride_n *= shape[k];
  const std::size_t below = stride_n;            // prod of extents before n
  const std::size_t above = cols / below;        // prod of extents after n
  const auto& d = t.data();
  for (std::size_t hi = 0; hi < above; ++hi) {
    const std::size_t base_hi = hi * stride_n * In;
    for (std::size_t lo = 0; lo < below; ++lo) {
      const std::size_t col = hi * below + lo;
      const std::size_t base = base_hi + lo;
      for (std::size_t i = 0; i < In; ++i) m(i, col) = d[base + i * stride_n];
    }
  }
  return m;
}

/// Inverse of matricize for the same mode and target shape.
inline DenseTensor tensorize(const MatrixXd& m, std::vector<std::size_t> shape,
                             std::size_t n) {
  if (n >= shape.size()) throw std::out_of_range("tensorize: mode out of range");
  DenseTensor t(std::move(shape));
  const auto& sh = t.shape();
  const std::size_t In = sh[n];
  const std::size_t cols = t.numel() / In;
  if (static_cast<std::size_t>(m.rows()) != In ||
      static_cast<std::size_t>(m.cols()) != cols)
    throw std::invalid_argument("tensorize: matrix shape inconsistent with target");
  std::size_t stride_n = 1;
  for (std::size_t k = 0; k < n; ++k) stride_n *= sh[k];
  const std::size_t below = stride_n;
  const std::size_t above = cols / below;
  auto& d = t.data();
  for (std::size_t hi = 0; hi < above; ++hi) {
    const std::size_t base_hi = hi * stride_n * In;
    for (std::size_t lo = 0; lo < below; ++lo) {
      const std::size_t col = hi * below + lo;
      const std::size_t base = base_hi + lo;
      for (std::size_t i = 0; i < In; ++i) d[base + i * stride_n] = m(i, col);
    }
  }
  return t;
}

/// Mode-n contravariant product: Y_(n) = A X_(n).
inline DenseTensor mode_n_product(const DenseTensor& t, const MatrixXd& a,
                                  std::size_t n) {
  if (n >= t.order()) throw std::out_of_range("mode_n_product: mode out of range");
  if (static_cast<std::size_t>(a.cols()) != t.extent(n))
    throw std::invalid_argument("mode_n_product: cols(a) != extent(n)");
  MatrixXd y = a * matricize(t, n);
  std::vector<std::size_t> shape = t.shape();
  shape[n] = static_cast<std::size_t>(a.rows());
  return tensorize(y, std::move(shape), n);
}

/// Multi-mode product (A^(1),...,A^(N)) . t; a nullptr entry means identity.
/// Implemented as sequential mode products (products in distinct modes
/// commute, so the order is irrelevant).
inline DenseTensor multi_mode_product(const DenseTensor& t,
                                      const std::vector<const MatrixXd*>& mats) {
  if (mats.size() != t.order())
    throw std::invalid_argument("multi_mode_product: need one entry per mode");
  DenseTensor out = t;
  for (std::size_t n = 0; n < mats.size(); ++n)
    if (mats[n] != nullptr) out = mode_n_product(out, *mats[n], n);
  return out;
}

inline MatrixXd kronecker(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Khatri-Rao (column-wise Kronecker): column k is kron(c_k, d_k).
inline MatrixXd khatri_rao(const MatrixXd& c, const MatrixXd& d) {
  if (c.cols() != d.cols())
    throw std::invalid_argument("khatri_rao: column-count mismatch");
  MatrixXd out(c.rows() * d.rows(), c.cols());
  for (Eigen::Index k = 0; k < c.cols(); ++k)
    for (Eigen::Index i = 0; i < c.rows(); ++i)
      out.col(k).segment(i * d.rows(), d.rows()) = c(i, k) * d.col(k);
  return out;
}

inline MatrixXd hadamard(const MatrixXd& a, const MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("hadamard: shape mismatch");
  return a.cwiseProduct(b);
}

/// Moore-Penrose pseudoinverse via SVD, cutoff max(dim)*eps*sigma_max.
inline MatrixXd pinv(const MatrixXd& a) {
  Eigen::JacobiSVD<MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cutoff = std::max(a.rows(), a.cols()) *
                        std::numeric_limits<double>::epsilon() *
                        (sv.size() ? sv(0) : 0.0);
  VectorXd inv = sv;
  for (Eigen::Index i = 0; i < inv.size(); ++i)
    inv(i) = sv(i) > cutoff ? 1.0 / sv(i) : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace accel
