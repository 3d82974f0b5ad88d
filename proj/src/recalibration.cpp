#include "bubblecast/recalibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "bubblecast/errors.hpp"
#include "bubblecast/quadrature.hpp"

namespace bubblecast::recal {

namespace {

double sigmoid(double u) {
    return u >= 0.0 ? 1.0 / (1.0 + std::exp(-u))
                    : std::exp(u) / (1.0 + std::exp(u));
}

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

std::vector<PitSample> compute_pit(const DensityForecaster& forecaster,
                                   const std::vector<std::vector<double>>& features,
                                   const std::vector<double>& targets) {
    if (features.size() != targets.size())
        throw std::invalid_argument("compute_pit: misaligned features/targets");
    std::vector<PitSample> out;
    out.reserve(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
        DensityPtr d;
        try {
            d = forecaster(features[i]);
        } catch (const std::exception& e) {
            throw numeric_error("compute_pit: density failed at sample " +
                                std::to_string(i) + ": " + e.what());
        }
        const double p = std::clamp(d->cdf(targets[i]), 1e-6, 1.0 - 1e-6);
        out.push_back(PitSample{features[i], p});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Boosted classifier

namespace {

struct TreeBuilder {
    const std::vector<std::vector<double>>& X;
    const std::vector<double>& grad;  // residuals y - p
    const std::vector<double>& hess;  // p (1 - p)
    const BoostedClassifier::Options& opt;
    BoostedClassifier::Tree nodes;

    int build(std::vector<std::size_t>& idx, int depth) {
        const int self = static_cast<int>(nodes.size());
        nodes.push_back({});

        double gsum = 0.0, hsum = 0.0;
        for (std::size_t i : idx) {
            gsum += grad[i];
            hsum += hess[i];
        }
        const double leaf_value =
            std::clamp(gsum / std::max(hsum, 1e-12), -4.0, 4.0);

        if (depth >= opt.max_depth || idx.size() < 2 * opt.min_leaf) {
            nodes[self].value = leaf_value;
            return self;
        }

        // exact variance-reduction split over all features
        const double parent_score = gsum * gsum / std::max(hsum, 1e-12);
        double best_gain = 1e-12;
        int best_feature = -1;
        double best_threshold = 0.0;
        const std::size_t n_feat = X[idx[0]].size();
        std::vector<std::size_t> order(idx);
        for (std::size_t f = 0; f < n_feat; ++f) {
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return X[a][f] < X[b][f];
            });
            double gl = 0.0, hl = 0.0;
            for (std::size_t r = 0; r + 1 < order.size(); ++r) {
                gl += grad[order[r]];
                hl += hess[order[r]];
                if (r + 1 < opt.min_leaf || order.size() - r - 1 < opt.min_leaf)
                    continue;
                const double xa = X[order[r]][f], xb = X[order[r + 1]][f];
                if (xa == xb) continue;
                const double gr = gsum - gl, hr = hsum - hl;
                const double gain = gl * gl / std::max(hl, 1e-12) +
                                    gr * gr / std::max(hr, 1e-12) - parent_score;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = static_cast<int>(f);
                    best_threshold = 0.5 * (xa + xb);
                }
            }
        }
        if (best_feature < 0) {
            nodes[self].value = leaf_value;
            return self;
        }

        std::vector<std::size_t> left, right;
        for (std::size_t i : idx) {
            (X[i][static_cast<std::size_t>(best_feature)] <= best_threshold
                 ? left
                 : right)
                .push_back(i);
        }
        nodes[self].leaf = false;
        nodes[self].feature = best_feature;
        nodes[self].threshold = best_threshold;
        nodes[self].left = build(left, depth + 1);
        nodes[self].right = build(right, depth + 1);
        return self;
    }
};

double eval_tree(const BoostedClassifier::Tree& tree,
                 const std::vector<double>& x) {
    int i = 0;
    while (!tree[static_cast<std::size_t>(i)].leaf) {
        const auto& n = tree[static_cast<std::size_t>(i)];
        i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                  : n.right;
    }
    return tree[static_cast<std::size_t>(i)].value;
}

}  // namespace

void BoostedClassifier::fit(const std::vector<std::vector<double>>& X,
                            const std::vector<int>& labels,
                            const Options& opt) {
    if (X.empty() || X.size() != labels.size())
        throw std::invalid_argument("BoostedClassifier: misaligned data");
    const std::size_t n = X.size();
    double rate = 0.0;
    for (int l : labels) rate += l;
    rate = std::clamp(rate / static_cast<double>(n), 1e-6, 1.0 - 1e-6);
    base_score = logit(rate);
    learning_rate = opt.learning_rate;
    trees.clear();

    std::vector<double> f(n, base_score), grad(n), hess(n);
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    for (int round = 0; round < opt.rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(f[i]);
            grad[i] = static_cast<double>(labels[i]) - p;
            hess[i] = std::max(p * (1.0 - p), 1e-12);
        }
        TreeBuilder builder{X, grad, hess, opt, {}};
        std::vector<std::size_t> idx(all);
        builder.build(idx, 0);
        trees.push_back(std::move(builder.nodes));
        for (std::size_t i = 0; i < n; ++i)
            f[i] += learning_rate * eval_tree(trees.back(), X[i]);
    }
}

double BoostedClassifier::predict_proba(const std::vector<double>& x) const {
    double f = base_score;
    for (const auto& tree : trees) f += learning_rate * eval_tree(tree, x);
    return sigmoid(f);
}

BoostedClassifier BoostedClassifier::constant(double p) {
    BoostedClassifier c;
    c.base_score = logit(std::clamp(p, 1e-6, 1.0 - 1e-6));
    return c;
}

// ---------------------------------------------------------------------------
// I-splines

ISplineBasis::ISplineBasis(std::size_t interior_knots)
    : interior_knots_(interior_knots) {
    const std::size_t order = 4;  // cubic
    for (std::size_t i = 0; i < order; ++i) knots_.push_back(0.0);
    for (std::size_t i = 1; i <= interior_knots; ++i)
        knots_.push_back(static_cast<double>(i) /
                         static_cast<double>(interior_knots + 1));
    for (std::size_t i = 0; i < order; ++i) knots_.push_back(1.0);
    // order-4 B-splines: interior_knots + 4; I-splines drop the j = 0 tail
    // sum (the constant 1)
    n_basis_ = interior_knots + 3;
}

double ISplineBasis::bspline(std::size_t i, std::size_t order, double x) const {
    if (order == 1) {
        const bool last =
            knots_[i] < knots_[i + 1] && knots_[i + 1] >= 1.0;  // close at 1
        if (last) return x >= knots_[i] && x <= knots_[i + 1] ? 1.0 : 0.0;
        return x >= knots_[i] && x < knots_[i + 1] ? 1.0 : 0.0;
    }
    double acc = 0.0;
    const double d1 = knots_[i + order - 1] - knots_[i];
    if (d1 > 0.0) acc += (x - knots_[i]) / d1 * bspline(i, order - 1, x);
    const double d2 = knots_[i + order] - knots_[i + 1];
    if (d2 > 0.0)
        acc += (knots_[i + order] - x) / d2 * bspline(i + 1, order - 1, x);
    return acc;
}

double ISplineBasis::value(std::size_t j, double x) const {
    // I_j = sum of order-4 B-splines from index j+1 upward
    x = std::clamp(x, 0.0, 1.0);
    const std::size_t n_b = interior_knots_ + 4;
    double acc = 0.0;
    for (std::size_t m = j + 1; m < n_b; ++m) acc += bspline(m, 4, x);
    return acc;
}

double ISplineBasis::derivative(std::size_t j, double x) const {
    x = std::clamp(x, 0.0, 1.0);
    const std::size_t n_b = interior_knots_ + 4;
    double acc = 0.0;
    for (std::size_t m = j + 1; m < n_b; ++m) {
        const double d1 = knots_[m + 3] - knots_[m];
        if (d1 > 0.0) acc += 3.0 * bspline(m, 3, x) / d1;
        const double d2 = knots_[m + 4] - knots_[m + 1];
        if (d2 > 0.0) acc -= 3.0 * bspline(m + 1, 3, x) / d2;
    }
    return acc;
}

// ---------------------------------------------------------------------------
// NNLS (Lawson-Hanson active set)

namespace {

// solve (A_P^T A_P) z = A_P^T b for the passive set; small dense system
bool solve_passive(const std::vector<double>& A, const std::vector<double>& b,
                   std::size_t rows, std::size_t cols,
                   const std::vector<bool>& passive, std::vector<double>& z) {
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < cols; ++j)
        if (passive[j]) idx.push_back(j);
    const std::size_t m = idx.size();
    if (m == 0) return true;
    std::vector<double> M(m * m, 0.0), rhs(m, 0.0);
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t c = a; c < m; ++c) {
            double acc = 0.0;
            for (std::size_t r = 0; r < rows; ++r)
                acc += A[r * cols + idx[a]] * A[r * cols + idx[c]];
            M[a * m + c] = acc;
            M[c * m + a] = acc;
        }
        double acc = 0.0;
        for (std::size_t r = 0; r < rows; ++r) acc += A[r * cols + idx[a]] * b[r];
        rhs[a] = acc;
    }
    // Gaussian elimination with partial pivoting
    for (std::size_t k = 0; k < m; ++k) {
        std::size_t piv = k;
        for (std::size_t r = k + 1; r < m; ++r)
            if (std::fabs(M[r * m + k]) > std::fabs(M[piv * m + k])) piv = r;
        if (std::fabs(M[piv * m + k]) < 1e-12) return false;
        if (piv != k) {
            for (std::size_t c = 0; c < m; ++c)
                std::swap(M[k * m + c], M[piv * m + c]);
            std::swap(rhs[k], rhs[piv]);
        }
        for (std::size_t r = k + 1; r < m; ++r) {
            const double fac = M[r * m + k] / M[k * m + k];
            for (std::size_t c = k; c < m; ++c) M[r * m + c] -= fac * M[k * m + c];
            rhs[r] -= fac * rhs[k];
        }
    }
    std::vector<double> sol(m);
    for (std::size_t k = m; k-- > 0;) {
        double acc = rhs[k];
        for (std::size_t c = k + 1; c < m; ++c) acc -= M[k * m + c] * sol[c];
        sol[k] = acc / M[k * m + k];
    }
    z.assign(cols, 0.0);
    for (std::size_t a = 0; a < m; ++a) z[idx[a]] = sol[a];
    return true;
}

}  // namespace

bool nnls(const std::vector<double>& A, const std::vector<double>& b,
          std::size_t rows, std::size_t cols, std::vector<double>& coef) {
    coef.assign(cols, 0.0);
    std::vector<bool> passive(cols, false);
    std::vector<double> w(cols), z;
    for (int outer = 0; outer < 30 * static_cast<int>(cols) + 10; ++outer) {
        // gradient w = A^T (b - A c)
        std::vector<double> resid(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            double acc = b[r];
            for (std::size_t c = 0; c < cols; ++c)
                acc -= A[r * cols + c] * coef[c];
            resid[r] = acc;
        }
        double wmax = -std::numeric_limits<double>::infinity();
        std::size_t jmax = cols;
        for (std::size_t c = 0; c < cols; ++c) {
            double acc = 0.0;
            for (std::size_t r = 0; r < rows; ++r)
                acc += A[r * cols + c] * resid[r];
            w[c] = acc;
            if (!passive[c] && acc > wmax) {
                wmax = acc;
                jmax = c;
            }
        }
        if (jmax == cols || wmax <= 1e-12) return true;  // KKT satisfied
        passive[jmax] = true;

        for (int inner = 0; inner < 30 * static_cast<int>(cols) + 10; ++inner) {
            if (!solve_passive(A, b, rows, cols, passive, z)) {
                passive[jmax] = false;
                return true;  // keep the feasible iterate we have
            }
            bool all_pos = true;
            for (std::size_t c = 0; c < cols; ++c)
                if (passive[c] && z[c] <= 0.0) all_pos = false;
            if (all_pos) {
                coef = z;
                break;
            }
            double alpha = 1.0;
            for (std::size_t c = 0; c < cols; ++c)
                if (passive[c] && z[c] <= 0.0)
                    alpha = std::min(alpha, coef[c] / (coef[c] - z[c]));
            for (std::size_t c = 0; c < cols; ++c)
                if (passive[c]) coef[c] += alpha * (z[c] - coef[c]);
            for (std::size_t c = 0; c < cols; ++c)
                if (passive[c] && coef[c] <= 1e-14) passive[c] = false;
        }
    }
    return false;
}

// ---------------------------------------------------------------------------
// Local PIT model

std::vector<double> default_tau_grid() {
    std::vector<double> grid;
    for (int k = 1; k <= 19; ++k) grid.push_back(0.05 * k);
    return grid;
}

RecalibrationModel fit_local_pit(const std::vector<PitSample>& pits,
                                 const std::vector<double>& tau_grid) {
    if (pits.size() < 500)
        throw std::invalid_argument("fit_local_pit: need >= 500 calibration points");
    if (tau_grid.size() < 2)
        throw std::invalid_argument("fit_local_pit: tau grid too short for the spline fit");
    for (std::size_t k = 0; k < tau_grid.size(); ++k) {
        if (!(tau_grid[k] > 0.0 && tau_grid[k] < 1.0))
            throw std::invalid_argument("fit_local_pit: taus must lie in (0,1)");
        if (k > 0 && !(tau_grid[k] > tau_grid[k - 1]))
            throw std::invalid_argument("fit_local_pit: taus must be strictly increasing");
    }

    RecalibrationModel model;
    model.tau_grid = tau_grid;

    const std::size_t dim = pits.front().features.size();
    model.feat_center.assign(dim, 0.0);
    model.feat_scale.assign(dim, 1.0);
    for (std::size_t d = 0; d < dim; ++d) {
        std::vector<double> col(pits.size());
        for (std::size_t i = 0; i < pits.size(); ++i) col[i] = pits[i].features[d];
        std::sort(col.begin(), col.end());
        const auto q = [&](double p) {
            const double h = (static_cast<double>(col.size()) - 1.0) * p;
            const std::size_t lo = static_cast<std::size_t>(std::floor(h));
            const std::size_t hi = std::min(lo + 1, col.size() - 1);
            return col[lo] + (h - std::floor(h)) * (col[hi] - col[lo]);
        };
        model.feat_center[d] = q(0.5);
        const double iqr = q(0.75) - q(0.25);
        model.feat_scale[d] = iqr > 0.0 ? iqr / 1.349 : 1.0;
    }

    std::vector<std::vector<double>> X(pits.size());
    for (std::size_t i = 0; i < pits.size(); ++i) {
        X[i].resize(dim);
        for (std::size_t d = 0; d < dim; ++d)
            X[i][d] = (pits[i].features[d] - model.feat_center[d]) /
                      model.feat_scale[d];
    }

    BoostedClassifier::Options opt;
    for (double tau : tau_grid) {
        std::vector<int> labels(pits.size());
        std::size_t ones = 0;
        for (std::size_t i = 0; i < pits.size(); ++i) {
            labels[i] = pits[i].pit <= tau ? 1 : 0;
            ones += static_cast<std::size_t>(labels[i]);
        }
        if (ones == 0 || ones == pits.size()) {
            model.classifiers.push_back(BoostedClassifier::constant(
                static_cast<double>(ones) / static_cast<double>(pits.size())));
            model.degenerate.push_back(true);
        } else {
            BoostedClassifier clf;
            clf.fit(X, labels, opt);
            model.classifiers.push_back(std::move(clf));
            model.degenerate.push_back(false);
        }
    }
    return model;
}

// ---------------------------------------------------------------------------
// MonotoneMap

double MonotoneMap::operator()(double tau) const {
    tau = std::clamp(tau, 0.0, 1.0);
    if (fallback_) {
        const auto it =
            std::upper_bound(iso_tau_.begin(), iso_tau_.end(), tau);
        const std::size_t k =
            static_cast<std::size_t>(it - iso_tau_.begin());
        if (k == 0) return iso_val_.front();
        if (k >= iso_tau_.size()) return iso_val_.back();
        const double t0 = iso_tau_[k - 1], t1 = iso_tau_[k];
        const double v0 = iso_val_[k - 1], v1 = iso_val_[k];
        return v0 + (tau - t0) / (t1 - t0) * (v1 - v0);
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < coef_.size(); ++j)
        acc += coef_[j] * basis_.value(j, tau);
    return acc;
}

double MonotoneMap::derivative(double tau) const {
    tau = std::clamp(tau, 0.0, 1.0);
    if (fallback_) {
        const auto it =
            std::upper_bound(iso_tau_.begin(), iso_tau_.end(), tau);
        std::size_t k = static_cast<std::size_t>(it - iso_tau_.begin());
        k = std::min(std::max<std::size_t>(k, 1), iso_tau_.size() - 1);
        return (iso_val_[k] - iso_val_[k - 1]) / (iso_tau_[k] - iso_tau_[k - 1]);
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < coef_.size(); ++j)
        acc += coef_[j] * basis_.derivative(j, tau);
    return std::max(acc, 0.0);
}

double MonotoneMap::inverse(double p) const {
    p = std::clamp(p, 0.0, 1.0);
    double a = 0.0, b = 1.0;
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (a + b);
        if ((*this)(mid) < p)
            a = mid;
        else
            b = mid;
    }
    return 0.5 * (a + b);
}

MonotoneMap MonotoneMap::identity() {
    // the identity is exactly representable: coefficients proportional to
    // the knot spans (Greville weights)
    MonotoneMap map;
    const std::size_t n = map.basis_.size();
    const std::size_t interior = map.basis_.interior_knots();
    std::vector<double> knots;
    for (std::size_t i = 0; i < 4; ++i) knots.push_back(0.0);
    for (std::size_t i = 1; i <= interior; ++i)
        knots.push_back(static_cast<double>(i) / static_cast<double>(interior + 1));
    for (std::size_t i = 0; i < 4; ++i) knots.push_back(1.0);
    map.coef_.resize(n);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        map.coef_[j] = (knots[j + 4] - knots[j + 1]) / 3.0;
        total += map.coef_[j];
    }
    for (auto& c : map.coef_) c /= total;
    return map;
}

MonotoneMap beta_hat(const RecalibrationModel& model,
                     const std::vector<double>& x) {
    if (model.classifiers.empty())
        throw std::invalid_argument("beta_hat: model not fitted");
    std::vector<double> xs(x.size());
    for (std::size_t d = 0; d < x.size(); ++d)
        xs[d] = (x[d] - model.feat_center[d]) / model.feat_scale[d];

    const std::size_t n_tau = model.tau_grid.size();
    std::vector<double> probs(n_tau);
    for (std::size_t k = 0; k < n_tau; ++k)
        probs[k] = model.classifiers[k].predict_proba(xs);
    // enforce monotone targets before fitting (classifiers are independent)
    for (std::size_t k = 1; k < n_tau; ++k)
        probs[k] = std::max(probs[k], probs[k - 1]);

    MonotoneMap map;
    map.basis_ = ISplineBasis(model.spline_interior_knots);
    const std::size_t n_basis = map.basis_.size();
    std::vector<double> A(n_tau * n_basis);
    for (std::size_t r = 0; r < n_tau; ++r)
        for (std::size_t j = 0; j < n_basis; ++j)
            A[r * n_basis + j] = map.basis_.value(j, model.tau_grid[r]);

    std::vector<double> coef;
    const bool ok = nnls(A, probs, n_tau, n_basis, coef);
    double total = 0.0;
    for (double c : coef) total += c;
    if (!ok || total < 1e-12) {
        // isotonic fallback: PAVA on the grid, pinned endpoints
        map.fallback_ = true;
        std::vector<double> v(probs);
        std::vector<double> wgt(v.size(), 1.0);
        for (std::size_t i = 1; i < v.size();) {
            if (v[i] < v[i - 1]) {
                const double merged =
                    (v[i] * wgt[i] + v[i - 1] * wgt[i - 1]) / (wgt[i] + wgt[i - 1]);
                v[i - 1] = merged;
                wgt[i - 1] += wgt[i];
                v.erase(v.begin() + static_cast<std::ptrdiff_t>(i));
                wgt.erase(wgt.begin() + static_cast<std::ptrdiff_t>(i));
                if (i > 1) --i;
            } else {
                ++i;
            }
        }
        // expand merged blocks back to the grid
        map.iso_tau_ = {0.0};
        map.iso_val_ = {0.0};
        std::size_t block = 0, used = 0;
        for (std::size_t k = 0; k < n_tau; ++k) {
            map.iso_tau_.push_back(model.tau_grid[k]);
            map.iso_val_.push_back(std::clamp(v[block], 0.0, 1.0));
            if (++used >= static_cast<std::size_t>(wgt[block])) {
                ++block;
                used = 0;
            }
        }
        map.iso_tau_.push_back(1.0);
        map.iso_val_.push_back(1.0);
        for (std::size_t k = 1; k < map.iso_val_.size(); ++k)
            map.iso_val_[k] = std::max(map.iso_val_[k], map.iso_val_[k - 1]);
        return map;
    }
    for (auto& c : coef) c /= total;  // beta(1) = 1; beta(0) = 0 by basis
    map.coef_ = std::move(coef);
    return map;
}

// ---------------------------------------------------------------------------
// Recalibrated density

namespace {

class RecalibratedDensity : public PredictiveDensity {
public:
    RecalibratedDensity(DensityPtr base, MonotoneMap map, double z)
        : base_(std::move(base)), map_(std::move(map)), z_(z) {}

    double pdf(double y) const override {
        return map_.derivative(base_->cdf(y)) * base_->pdf(y) / z_;
    }

    double cdf(double y) const override {
        return std::clamp(map_(base_->cdf(y)), 0.0, 1.0);
    }

    double quantile(double p) const override {
        if (!(p > 0.0 && p < 1.0))
            throw std::invalid_argument("quantile: p must lie in (0,1)");
        const double tau = std::clamp(map_.inverse(p), 1e-12, 1.0 - 1e-12);
        return base_->quantile(tau);
    }

    std::vector<double> quadrature_panels(double a, double b) const override {
        return base_->quadrature_panels(a, b);
    }

    double support_lo() const override { return base_->support_lo(); }
    double support_hi() const override { return base_->support_hi(); }

private:
    DensityPtr base_;
    MonotoneMap map_;
    double z_;
};

}  // namespace

RecalResult recalibrate_density(DensityPtr base, const MonotoneMap& map) {
    // Z = int c(F(y)) p(y) dy; quadrature over the effective support plus
    // the exact tail pieces beta(F(a)) and 1 - beta(F(b)) from the chain
    // rule, so only panel error remains.
    const double a = base->quantile(1e-4);
    const double b = base->quantile(1.0 - 1e-4);
    const auto panels = base->quadrature_panels(a, b);
    const PredictiveDensity& d = *base;
    double z = quad::over_panels(
        [&](double y) { return map.derivative(d.cdf(y)) * d.pdf(y); }, panels);
    z += map(d.cdf(a)) + (1.0 - map(d.cdf(b)));
    if (!(z > 1e-6))
        return RecalResult{std::move(base), true};
    return RecalResult{
        std::make_unique<RecalibratedDensity>(std::move(base), map, z), false};
}

RecalResult recalibrate_density(DensityPtr base, const RecalibrationModel& model,
                                const std::vector<double>& x) {
    return recalibrate_density(std::move(base), beta_hat(model, x));
}

}  // namespace bubblecast::recal
