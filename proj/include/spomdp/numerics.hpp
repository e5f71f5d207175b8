#pragma once

// Small dense linear algebra and order-3 tensor kernels.
//
// Everything here targets the view dimensions of tabular POMDPs (a few dozen
// rows at most), so the routines favour robustness over asymptotic speed.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "spomdp/errors.hpp"

namespace spomdp {

using Vector = std::vector<double>;

/// Row-major dense matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);
    static Matrix diagonal(std::span<const double> d);
    /// Builds from nested rows; throws DimensionMismatch on ragged input and
    /// NonFinite on NaN/Inf.
    static Matrix from_rows(const std::vector<std::vector<double>>& rows);
    /// Matrix whose columns are the given vectors.
    static Matrix from_columns(const std::vector<Vector>& cols);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    Vector column(std::size_t j) const;
    Vector row(std::size_t i) const;
    void set_column(std::size_t j, std::span<const double> v);

    Matrix transpose() const;
    bool all_finite() const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, std::span<const double> x);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

/// Dense order-3 tensor, entry (i, j, k) stored at (i * d2 + j) * d3 + k.
class Tensor3 {
public:
    Tensor3() = default;
    Tensor3(std::size_t d1, std::size_t d2, std::size_t d3, double fill = 0.0)
        : dims_{d1, d2, d3}, data_(d1 * d2 * d3, fill) {}

    const std::array<std::size_t, 3>& dims() const noexcept { return dims_; }
    std::size_t dim(std::size_t mode) const { return dims_.at(mode); }

    double& operator()(std::size_t i, std::size_t j, std::size_t k) {
        return data_[(i * dims_[1] + j) * dims_[2] + k];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * dims_[1] + j) * dims_[2] + k];
    }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    bool all_finite() const;

    friend bool operator==(const Tensor3&, const Tensor3&) = default;

private:
    std::array<std::size_t, 3> dims_{0, 0, 0};
    std::vector<double> data_;
};

struct SvdResult {
    Matrix U;  ///< rows x k, orthonormal columns
    Vector S;  ///< k singular values, descending
    Matrix V;  ///< cols x k, orthonormal columns
};

/// Thin SVD by one-sided Jacobi rotations (k = min(rows, cols)).
/// Throws NonFinite on NaN/Inf input, NoConvergence past `max_sweeps`.
SvdResult svd(const Matrix& m, int max_sweeps = 100);

inline constexpr double kDefaultPinvTol = 1e-10;

/// Moore-Penrose pseudo-inverse; singular values below tol * sigma_max are
/// treated as zero.
Matrix pseudo_inverse(const Matrix& m, double tol = kDefaultPinvTol);

/// Pseudo-inverse restricted to the leading `rank` singular triplets (plus the
/// relative tolerance). Used for covariances whose population rank is known.
Matrix pseudo_inverse_rank(const Matrix& m, std::size_t rank, double tol = kDefaultPinvTol);

/// Euclidean projection onto the probability simplex.
Vector project_simplex(std::span<const double> v);

/// out(i1,i2,i3) = sum t(j1,j2,j3) m1(j1,i1) m2(j2,i2) m3(j3,i3).
Tensor3 tensor_multilinear(const Tensor3& t, const Matrix& m1, const Matrix& m2, const Matrix& m3);

/// t(I, v, v): contracts modes 2 and 3 with v.
Vector tensor_contract_pair(const Tensor3& t, std::span<const double> v);
/// t(v, v, v).
double tensor_contract_all(const Tensor3& t, std::span<const double> v);

/// Averages a cubic tensor over the six mode permutations.
Tensor3 symmetrize(const Tensor3& t);

/// Solves a x = b by LU with partial pivoting. Throws RankDeficient when a
/// pivot falls below `pivot_tol` (relative to the largest entry of a).
Vector solve(const Matrix& a, std::span<const double> b, double pivot_tol = 1e-13);
double determinant(const Matrix& a);

double spectral_norm(const Matrix& m);
/// Spectral norm of a tensor via its mode-1 unfolding (d1 x d2*d3); an upper
/// bound on the injective norm, used for error reporting.
double spectral_norm(const Tensor3& t);
double frobenius_norm(const Matrix& m);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);
double norm1(std::span<const double> v);
double l1_distance(std::span<const double> a, std::span<const double> b);
double l2_distance(std::span<const double> a, std::span<const double> b);
double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace spomdp
