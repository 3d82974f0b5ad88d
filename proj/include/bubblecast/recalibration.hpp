#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "bubblecast/density.hpp"

namespace bubblecast::recal {

struct PitSample {
    std::vector<double> features;
    double pit;  // in [0,1]
};

/// Anything that maps a conditioning vector to a predictive density
/// (an MDN, an oracle, a kernel estimator, a test stub).
using DensityForecaster =
    std::function<DensityPtr(const std::vector<double>&)>;

/// PIT values F(y_t | x_t) on a calibration set, clipped to
/// [1e-6, 1 - 1e-6]. The calibration set must be disjoint from training
/// data; that is the caller's contract.
std::vector<PitSample> compute_pit(const DensityForecaster& forecaster,
                                   const std::vector<std::vector<double>>& features,
                                   const std::vector<double>& targets);

/// Small gradient-boosted regression-tree classifier with logistic loss:
/// depth <= 3, exact splits, Newton leaf values. Enough for the 1-2
/// dimensional calibration features used here.
class BoostedClassifier {
public:
    struct Options {
        int rounds = 100;
        int max_depth = 3;
        double learning_rate = 0.1;
        std::size_t min_leaf = 20;
    };

    struct Node {
        bool leaf = true;
        int feature = -1;
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        double value = 0.0;
    };
    using Tree = std::vector<Node>;

    void fit(const std::vector<std::vector<double>>& X,
             const std::vector<int>& labels, const Options& opt);
    double predict_proba(const std::vector<double>& x) const;

    /// Classifier that outputs the constant rate p for any input.
    static BoostedClassifier constant(double p);

    // serialized representation
    double base_score = 0.0;
    double learning_rate = 0.1;
    std::vector<Tree> trees;
};

/// Cubic I-spline basis on [0,1] (tail sums of an order-4 B-spline
/// partition of unity): every basis function is 0 at 0, 1 at 1 and
/// nondecreasing, so nonnegative coefficients give a monotone fit.
class ISplineBasis {
public:
    explicit ISplineBasis(std::size_t interior_knots = 8);
    std::size_t size() const { return n_basis_; }
    double value(std::size_t j, double x) const;
    double derivative(std::size_t j, double x) const;
    std::size_t interior_knots() const { return interior_knots_; }

private:
    double bspline(std::size_t i, std::size_t order, double x) const;
    std::size_t interior_knots_;
    std::size_t n_basis_;
    std::vector<double> knots_;
};

/// Nonnegative least squares min ||A c - b||, c >= 0 (Lawson-Hanson
/// active set). A is row-major (rows x cols). Returns false when the
/// active-set loop fails to converge.
bool nnls(const std::vector<double>& A, const std::vector<double>& b,
          std::size_t rows, std::size_t cols, std::vector<double>& coef);

struct RecalibrationModel {
    std::vector<double> tau_grid;  // strictly increasing, inside (0,1)
    std::vector<BoostedClassifier> classifiers;  // one per tau
    std::vector<bool> degenerate;  // taus whose labels were all 0 or all 1
    std::size_t spline_interior_knots = 8;
    std::vector<double> feat_center, feat_scale;  // as trained
};

/// Default 19-point grid {0.05, 0.10, ..., 0.95}; the 0/1 endpoints are
/// pinned by the spline fit itself.
std::vector<double> default_tau_grid();

/// One probabilistic classifier per tau on labels 1{pit <= tau}.
/// Requires >= 500 calibration points and a grid of at least 2 levels.
RecalibrationModel fit_local_pit(const std::vector<PitSample>& pits,
                                 const std::vector<double>& tau_grid);

/// Monotone beta(tau | x): I-spline coefficients fitted by NNLS to the
/// classifier outputs at x, pinned to beta(0) = 0 and rescaled to
/// beta(1) = 1. Falls back to isotonic regression on the grid when the
/// NNLS system degenerates (flagged).
class MonotoneMap {
public:
    double operator()(double tau) const;
    double derivative(double tau) const;
    bool isotonic_fallback() const { return fallback_; }

    /// Inverse map by bisection (the map is continuous and nondecreasing
    /// with range [0,1]).
    double inverse(double p) const;

    static MonotoneMap identity();

    friend MonotoneMap beta_hat(const RecalibrationModel&,
                                const std::vector<double>&);

private:
    ISplineBasis basis_{8};
    std::vector<double> coef_;
    bool fallback_ = false;
    std::vector<double> iso_tau_, iso_val_;  // fallback representation
};

MonotoneMap beta_hat(const RecalibrationModel& model,
                     const std::vector<double>& x);

struct RecalResult {
    DensityPtr density;
    bool rejected = false;  // normalization integral below 1e-6
};

/// p_recal(y) = c(y) p(y) / Z with c(y) = dbeta/dtau at tau = F(y) and Z
/// the quadrature integral of c p over the effective support, completed
/// analytically in the tails through the identity int c(F) p dy = dbeta.
RecalResult recalibrate_density(DensityPtr base, const RecalibrationModel& model,
                                const std::vector<double>& x);

/// Same, with an explicit map (test hook for identity checks).
RecalResult recalibrate_density(DensityPtr base, const MonotoneMap& map);

}  // namespace bubblecast::recal
