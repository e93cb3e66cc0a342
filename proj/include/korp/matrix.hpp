#ifndef KORP_MATRIX_HPP
#define KORP_MATRIX_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace korp {

/// Dense row-major matrix of doubles. The flat layout is part of the
/// contract: containers serialize it verbatim as 64-bit little-endian.
class Matrix {
public:
    Matrix() : rows_(0), cols_(0) {}
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), v_(rows * cols, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return v_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return v_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {v_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {v_.data() + i * cols_, cols_}; }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return v_.size(); }
    bool empty() const { return v_.empty(); }

    std::vector<double>& storage() { return v_; }
    const std::vector<double>& storage() const { return v_; }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.v_ == b.v_;
    }

private:
    std::size_t rows_, cols_;
    std::vector<double> v_;
};

/// Rank-3 tensor (trials x channels x time in this codebase), row-major.
class Tensor3 {
public:
    Tensor3() : d0_(0), d1_(0), d2_(0) {}
    Tensor3(std::size_t d0, std::size_t d1, std::size_t d2, double fill = 0.0)
        : d0_(d0), d1_(d1), d2_(d2), v_(d0 * d1 * d2, fill) {}

    double& operator()(std::size_t i, std::size_t j, std::size_t k) {
        return v_[(i * d1_ + j) * d2_ + k];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return v_[(i * d1_ + j) * d2_ + k];
    }

    /// Contiguous innermost slice: all time samples of one (trial, channel).
    std::span<double> series(std::size_t i, std::size_t j) {
        return {v_.data() + (i * d1_ + j) * d2_, d2_};
    }
    std::span<const double> series(std::size_t i, std::size_t j) const {
        return {v_.data() + (i * d1_ + j) * d2_, d2_};
    }

    std::size_t dim0() const { return d0_; }
    std::size_t dim1() const { return d1_; }
    std::size_t dim2() const { return d2_; }
    std::size_t size() const { return v_.size(); }
    bool empty() const { return v_.empty(); }

    std::vector<double>& storage() { return v_; }
    const std::vector<double>& storage() const { return v_; }

    friend bool operator==(const Tensor3& a, const Tensor3& b) {
        return a.d0_ == b.d0_ && a.d1_ == b.d1_ && a.d2_ == b.d2_ && a.v_ == b.v_;
    }

private:
    std::size_t d0_, d1_, d2_;
    std::vector<double> v_;
};

} // namespace korp

#endif
