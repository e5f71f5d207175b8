#pragma once

// Per-action multi-view moment estimation and orthogonal tensor decomposition.
//
// For every step t with a_t = l three views of the hidden state x_t are read
// off the trajectory:
//   v1 = (a_{t-1}, y_{t-1}, r_{t-1}),  v2 = (y_t, r_t),  v3 = y_{t+1}
// (or v3 = (a_{t+1}, y_{t+1}, r_{t+1}) in augmented mode). Conditionally on
// (x_t, a_t) the views are independent, so after symmetrizing v1 and v2 into
// v3 coordinates the second and third moments decompose over the columns of
// the third view matrix.

#include <array>
#include <cstdint>
#include <vector>

#include "spomdp/pomdp.hpp"

namespace spomdp {

struct ViewShape {
    Dims dims;
    bool augmented = false;

    std::size_t d1() const { return dims.A * dims.Y * dims.R; }
    std::size_t d2() const { return dims.Y * dims.R; }
    std::size_t d3() const { return augmented ? dims.A * dims.Y * dims.R : dims.Y; }
};

struct ActionViewDataset {
    std::size_t action = 0;
    ViewShape shape;
    std::vector<std::array<std::uint32_t, 3>> samples;  ///< flattened (v1, v2, v3) indices

    std::size_t n() const { return samples.size(); }
};

/// Collects one sample per interior step with a_t = l. Throws NoSamples when
/// the action never occurs at an interior step.
ActionViewDataset build_views(const Trajectory& tr, const ViewShape& shape, std::size_t action);

/// Covariances and moments for one action. K entries are joint frequencies;
/// P123 is the normalized (v1, v2, v3) histogram.
struct MomentSet {
    Matrix K12, K13, K23;
    Tensor3 P123;
    Matrix M2_hat;
    Tensor3 M3_hat;
    std::size_t n = 0;
};

/// Fills K12, K13, K23 and the joint histogram P123.
MomentSet empirical_covariances(const ActionViewDataset& d);

/// Population moments in the same layout, for exact-input pipelines.
MomentSet moments_from_exact(const ExactMoments& e);

/// Symmetrized second and third moments:
///   M2 = S1 K12 S2^T,  M3 = P123 x1 S1 x2 S2,
///   S1 = K32 K12^+,    S2 = K31 K21^+,
/// with rank-X pseudo-inverses. Throws IllConditioned when sigma_X(K12) < tol.
void symmetrize_and_moments(MomentSet& k, std::size_t rank, double tol);

struct Whitening {
    Matrix W;        ///< d3 x k, W^T M2 W = I
    Matrix W_pinvT;  ///< d3 x k, pseudo-inverse of W^T (de-whitening map)
    Vector eigenvalues;
};

/// W = U_k Lambda_k^{-1/2} from the rank-k spectral decomposition of the
/// symmetrized M2. Throws RankDeficient when an eigenvalue falls below 1e-10.
Whitening whiten(const Matrix& M2, std::size_t rank);

struct PowerConfig {
    int restarts = 50;
    int iters = 100;
    double tol = 1e-10;
    std::uint64_t seed = 0;
};

struct Eigenpair {
    double value = 0.0;
    Vector vector;
};

struct PowerResult {
    std::vector<Eigenpair> pairs;
    int restarts_used = 0;
};

/// Robust tensor power method with deflation on a k x k x k tensor.
PowerResult tensor_power_method(const Tensor3& M3w, const PowerConfig& cfg);

struct SpectralConfig {
    double pinv_tol = kDefaultPinvTol;
    /// IllConditioned threshold on sigma_X of the cross covariances.
    double cond_tol = 1e-9;
    double omega_floor = 1e-6;
    PowerConfig power;
};

struct SpectralResult {
    Matrix V3_hat;  ///< d3 x X
    Matrix V2_hat;  ///< (Y*R) x X
    Matrix V1_hat;  ///< (A*Y*R) x X
    Vector omega_hat;
    Vector eigenvalues;
    int restarts_used = 0;
};

/// De-whitens the eigenpairs into third-view columns, weights from the
/// eigenvalues, and recovers the first and second views by inverting the
/// symmetrization maps.
SpectralResult dewhiten_and_recover_views(const PowerResult& pairs, const Whitening& w, const MomentSet& k,
                                          std::size_t rank, const SpectralConfig& cfg);

/// symmetrize -> whiten -> power method -> de-whiten.
SpectralResult decompose(MomentSet k, std::size_t rank, const SpectralConfig& cfg);

}  // namespace spomdp
