#include "spomdp/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace spomdp {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::NonFinite: return "NonFinite";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::NotErgodic: return "NotErgodic";
        case ErrorKind::NoSamples: return "NoSamples";
        case ErrorKind::IllConditioned: return "IllConditioned";
        case ErrorKind::RankDeficient: return "RankDeficient";
        case ErrorKind::NegativeEigenvalue: return "NegativeEigenvalue";
        case ErrorKind::PolicyFloorViolated: return "PolicyFloorViolated";
        case ErrorKind::GridTooCoarse: return "GridTooCoarse";
        case ErrorKind::GenerationFailed: return "GenerationFailed";
        case ErrorKind::InvalidModel: return "InvalidModel";
        case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw Error(ErrorKind::DimensionMismatch, std::string(op) + ": shape mismatch");
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Matrix

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diagonal(std::span<const double> d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols()) {
            throw Error(ErrorKind::DimensionMismatch, "Matrix::from_rows: ragged rows");
        }
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
    }
    if (!m.all_finite()) throw Error(ErrorKind::NonFinite, "Matrix::from_rows");
    return m;
}

Matrix Matrix::from_columns(const std::vector<Vector>& cols) {
    if (cols.empty()) return {};
    Matrix m(cols.front().size(), cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) m.set_column(j, cols[j]);
    return m;
}

Vector Matrix::column(std::size_t j) const {
    Vector v(rows_);
    for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
    return v;
}

Vector Matrix::row(std::size_t i) const {
    return Vector(data_.begin() + static_cast<std::ptrdiff_t>(i * cols_),
                  data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols_));
}

void Matrix::set_column(std::size_t j, std::span<const double> v) {
    if (v.size() != rows_) throw Error(ErrorKind::DimensionMismatch, "Matrix::set_column");
    for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

bool Matrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw Error(ErrorKind::DimensionMismatch, "matrix product");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    }
    return c;
}

Vector operator*(const Matrix& a, std::span<const double> x) {
    if (a.cols() != x.size()) throw Error(ErrorKind::DimensionMismatch, "matrix-vector product");
    Vector y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "matrix sum");
    Matrix c = a;
    for (std::size_t i = 0; i < c.data().size(); ++i) c.data()[i] += b.data()[i];
    return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "matrix difference");
    Matrix c = a;
    for (std::size_t i = 0; i < c.data().size(); ++i) c.data()[i] -= b.data()[i];
    return c;
}

Matrix operator*(double s, const Matrix& a) {
    Matrix c = a;
    for (double& x : c.data()) x *= s;
    return c;
}

bool Tensor3::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

// ---------------------------------------------------------------------------
// SVD

namespace {

// One-sided Jacobi on a tall matrix (rows >= cols).
SvdResult jacobi_svd_tall(const Matrix& m, int max_sweeps) {
    const std::size_t rows = m.rows();
    const std::size_t n = m.cols();
    Matrix a = m;
    Matrix v = Matrix::identity(n);
    const double eps = std::max(1e-15, static_cast<double>(rows) * std::numeric_limits<double>::epsilon());

    bool converged = (n < 2);
    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t i = 0; i < rows; ++i) {
                    alpha += a(i, p) * a(i, p);
                    beta += a(i, q) * a(i, q);
                    gamma += a(i, p) * a(i, q);
                }
                if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < rows; ++i) {
                    const double ap = a(i, p), aq = a(i, q);
                    a(i, p) = c * ap - s * aq;
                    a(i, q) = s * ap + c * aq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
        converged = !rotated;
    }
    if (!converged) throw Error(ErrorKind::NoConvergence, "svd: Jacobi sweep cap reached");

    Vector sigma(n);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < rows; ++i) s += a(i, j) * a(i, j);
        sigma[j] = std::sqrt(s);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

    SvdResult out{Matrix(rows, n), Vector(n), Matrix(n, n)};
    const double smax = n > 0 ? sigma[order[0]] : 0.0;
    const double tiny = std::max(smax * 1e-13, std::numeric_limits<double>::min());
    std::vector<bool> filled(n, false);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = order[k];
        out.S[k] = sigma[j];
        for (std::size_t i = 0; i < n; ++i) out.V(i, k) = v(i, j);
        if (sigma[j] > tiny) {
            for (std::size_t i = 0; i < rows; ++i) out.U(i, k) = a(i, j) / sigma[j];
            filled[k] = true;
        }
    }
    // Complete U for (numerically) zero singular values with Gram-Schmidt
    // against the canonical basis.
    std::size_t basis = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (filled[k]) continue;
        while (basis < rows) {
            Vector e(rows, 0.0);
            e[basis++] = 1.0;
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t c = 0; c < n; ++c) {
                    if (!filled[c]) continue;
                    double proj = 0.0;
                    for (std::size_t i = 0; i < rows; ++i) proj += out.U(i, c) * e[i];
                    for (std::size_t i = 0; i < rows; ++i) e[i] -= proj * out.U(i, c);
                }
            }
            const double nrm = norm2(e);
            if (nrm > 1e-6) {
                for (std::size_t i = 0; i < rows; ++i) out.U(i, k) = e[i] / nrm;
                filled[k] = true;
                break;
            }
        }
    }
    return out;
}

}  // namespace

SvdResult svd(const Matrix& m, int max_sweeps) {
    if (!m.all_finite()) throw Error(ErrorKind::NonFinite, "svd: input has NaN/Inf");
    if (m.rows() >= m.cols()) return jacobi_svd_tall(m, max_sweeps);
    SvdResult t = jacobi_svd_tall(m.transpose(), max_sweeps);
    return SvdResult{std::move(t.V), std::move(t.S), std::move(t.U)};
}

Matrix pseudo_inverse_rank(const Matrix& m, std::size_t rank, double tol) {
    if (!(tol > 0.0)) throw Error(ErrorKind::ConfigError, "pseudo_inverse: tol must be positive");
    const SvdResult d = svd(m);
    Matrix out(m.cols(), m.rows());
    if (d.S.empty()) return out;
    const double cutoff = tol * d.S.front();
    const std::size_t keep = std::min(rank, d.S.size());
    for (std::size_t k = 0; k < keep; ++k) {
        if (d.S[k] <= cutoff || d.S[k] == 0.0) break;
        const double inv = 1.0 / d.S[k];
        for (std::size_t i = 0; i < m.cols(); ++i) {
            const double vik = d.V(i, k) * inv;
            for (std::size_t j = 0; j < m.rows(); ++j) out(i, j) += vik * d.U(j, k);
        }
    }
    return out;
}

Matrix pseudo_inverse(const Matrix& m, double tol) {
    return pseudo_inverse_rank(m, std::min(m.rows(), m.cols()), tol);
}

Vector project_simplex(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n == 0) return {};
    Vector u(v.begin(), v.end());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumsum = 0.0, theta = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        cumsum += u[j];
        const double t = (cumsum - 1.0) / static_cast<double>(j + 1);
        if (u[j] - t > 0.0) theta = t;
    }
    Vector w(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = std::max(v[i] - theta, 0.0);
        total += w[i];
    }
    // Removes the last ulp of drift so downstream samplers see an exact sum.
    if (total > 0.0)
        for (double& x : w) x /= total;
    return w;
}

// ---------------------------------------------------------------------------
// Tensors

Tensor3 tensor_multilinear(const Tensor3& t, const Matrix& m1, const Matrix& m2, const Matrix& m3) {
    const auto [d1, d2, d3] = t.dims();
    if (m1.rows() != d1 || m2.rows() != d2 || m3.rows() != d3) {
        throw Error(ErrorKind::DimensionMismatch, "tensor_multilinear: matrix rows must match tensor dims");
    }
    const std::size_t e1 = m1.cols(), e2 = m2.cols(), e3 = m3.cols();
    // Contract one mode at a time: (d1,d2,d3) -> (e1,d2,d3) -> (e1,e2,d3) -> (e1,e2,e3).
    Tensor3 a(e1, d2, d3);
    for (std::size_t j1 = 0; j1 < d1; ++j1)
        for (std::size_t i1 = 0; i1 < e1; ++i1) {
            const double w = m1(j1, i1);
            if (w == 0.0) continue;
            for (std::size_t j2 = 0; j2 < d2; ++j2)
                for (std::size_t j3 = 0; j3 < d3; ++j3) a(i1, j2, j3) += w * t(j1, j2, j3);
        }
    Tensor3 b(e1, e2, d3);
    for (std::size_t i1 = 0; i1 < e1; ++i1)
        for (std::size_t j2 = 0; j2 < d2; ++j2)
            for (std::size_t i2 = 0; i2 < e2; ++i2) {
                const double w = m2(j2, i2);
                if (w == 0.0) continue;
                for (std::size_t j3 = 0; j3 < d3; ++j3) b(i1, i2, j3) += w * a(i1, j2, j3);
            }
    Tensor3 c(e1, e2, e3);
    for (std::size_t i1 = 0; i1 < e1; ++i1)
        for (std::size_t i2 = 0; i2 < e2; ++i2)
            for (std::size_t j3 = 0; j3 < d3; ++j3) {
                const double x = b(i1, i2, j3);
                if (x == 0.0) continue;
                for (std::size_t i3 = 0; i3 < e3; ++i3) c(i1, i2, i3) += x * m3(j3, i3);
            }
    return c;
}

Vector tensor_contract_pair(const Tensor3& t, std::span<const double> v) {
    const auto [d1, d2, d3] = t.dims();
    if (v.size() != d2 || v.size() != d3) throw Error(ErrorKind::DimensionMismatch, "tensor_contract_pair");
    Vector out(d1, 0.0);
    for (std::size_t i = 0; i < d1; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < d2; ++j) {
            double inner = 0.0;
            for (std::size_t k = 0; k < d3; ++k) inner += t(i, j, k) * v[k];
            s += v[j] * inner;
        }
        out[i] = s;
    }
    return out;
}

double tensor_contract_all(const Tensor3& t, std::span<const double> v) {
    if (v.size() != t.dim(0)) throw Error(ErrorKind::DimensionMismatch, "tensor_contract_all");
    const Vector w = tensor_contract_pair(t, v);
    return dot(w, v);
}

Tensor3 symmetrize(const Tensor3& t) {
    const std::size_t n = t.dim(0);
    if (t.dim(1) != n || t.dim(2) != n) throw Error(ErrorKind::DimensionMismatch, "symmetrize: tensor must be cubic");
    Tensor3 s(n, n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k)
                s(i, j, k) = (t(i, j, k) + t(i, k, j) + t(j, i, k) + t(j, k, i) + t(k, i, j) + t(k, j, i)) / 6.0;
    return s;
}

// ---------------------------------------------------------------------------
// Linear systems and norms

namespace {

struct Lu {
    Matrix lu;
    std::vector<std::size_t> perm;
    int sign = 1;
    bool singular = false;
};

Lu lu_decompose(const Matrix& a, double pivot_tol) {
    if (a.rows() != a.cols()) throw Error(ErrorKind::DimensionMismatch, "LU: matrix must be square");
    const std::size_t n = a.rows();
    Lu f{a, std::vector<std::size_t>(n), 1, false};
    std::iota(f.perm.begin(), f.perm.end(), 0);
    double scale = 0.0;
    for (double x : a.data()) scale = std::max(scale, std::abs(x));
    const double thresh = pivot_tol * std::max(scale, 1e-300);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(f.lu(i, k)) > std::abs(f.lu(piv, k))) piv = i;
        if (std::abs(f.lu(piv, k)) <= thresh) {
            f.singular = true;
            continue;
        }
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(f.lu(k, j), f.lu(piv, j));
            std::swap(f.perm[k], f.perm[piv]);
            f.sign = -f.sign;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double factor = f.lu(i, k) / f.lu(k, k);
            f.lu(i, k) = factor;
            for (std::size_t j = k + 1; j < n; ++j) f.lu(i, j) -= factor * f.lu(k, j);
        }
    }
    return f;
}

}  // namespace

Vector solve(const Matrix& a, std::span<const double> b, double pivot_tol) {
    if (b.size() != a.rows()) throw Error(ErrorKind::DimensionMismatch, "solve: rhs size");
    const Lu f = lu_decompose(a, pivot_tol);
    if (f.singular) throw Error(ErrorKind::RankDeficient, "solve: singular system");
    const std::size_t n = a.rows();
    Vector x(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[f.perm[i]];
        for (std::size_t j = 0; j < i; ++j) s -= f.lu(i, j) * x[j];
        x[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = x[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= f.lu(i, j) * x[j];
        x[i] = s / f.lu(i, i);
    }
    return x;
}

double determinant(const Matrix& a) {
    const Lu f = lu_decompose(a, 0.0);
    if (f.singular) return 0.0;
    double d = f.sign;
    for (std::size_t i = 0; i < a.rows(); ++i) d *= f.lu(i, i);
    return d;
}

double spectral_norm(const Matrix& m) {
    if (m.empty()) return 0.0;
    return svd(m).S.front();
}

double spectral_norm(const Tensor3& t) {
    const auto [d1, d2, d3] = t.dims();
    Matrix unfolded(d1, d2 * d3);
    std::copy(t.data().begin(), t.data().end(), unfolded.data().begin());
    return spectral_norm(unfolded);
}

double frobenius_norm(const Matrix& m) { return norm2(m.data()); }

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error(ErrorKind::DimensionMismatch, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double norm1(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error(ErrorKind::DimensionMismatch, "l1_distance");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

double l2_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error(ErrorKind::DimensionMismatch, "l2_distance");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

}  // namespace spomdp
