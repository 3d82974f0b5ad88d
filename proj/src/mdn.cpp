#include "bubblecast/mdn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bubblecast/errors.hpp"
#include "bubblecast/kernels.hpp"
#include "bubblecast/rng.hpp"

namespace bubblecast::mdn {

namespace {

double softplus(double u) {
    return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
}

double softplus_inv(double s) {
    // u with softplus(u) = s, s > 0
    if (s > 30.0) return s;
    return std::log(std::expm1(s));
}

double sigmoid(double u) {
    return u >= 0.0 ? 1.0 / (1.0 + std::exp(-u))
                    : std::exp(u) / (1.0 + std::exp(u));
}

double robust_scale(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto q = [&](double p) {
        const double h = (static_cast<double>(v.size()) - 1.0) * p;
        const std::size_t lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (h - std::floor(h)) * (v[hi] - v[lo]);
    };
    const double iqr = q(0.75) - q(0.25);
    return iqr > 0.0 ? iqr / 1.349 : 1.0;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return 0.5 * (v[(n - 1) / 2] + v[n / 2]);
}

// Flat parameter layout: trunk layers then the five heads, W before b.
struct Block {
    std::size_t w_off, b_off, rows, cols;
};

struct Layout {
    std::vector<Block> trunk;
    Block pi, mu, sigma, xi, nu;
    std::size_t total = 0;
};

Layout make_layout(const MdnConfig& cfg) {
    Layout lay;
    std::size_t off = 0;
    std::size_t in = cfg.input_dim;
    for (std::size_t h : cfg.hidden) {
        Block b{off, off + h * in, h, in};
        off = b.b_off + h;
        lay.trunk.push_back(b);
        in = h;
    }
    const std::size_t K = cfg.n_mixtures;
    for (Block* head : {&lay.pi, &lay.mu, &lay.sigma, &lay.xi, &lay.nu}) {
        *head = Block{off, off + K * in, K, in};
        off = head->b_off + K;
    }
    lay.total = off;
    return lay;
}

struct ForwardScratch {
    std::vector<double> x_scaled;
    std::vector<std::vector<double>> pre;  // per trunk layer
    std::vector<std::vector<double>> act;
    std::vector<double> s_pi, pi, mu, u_sigma, sigma, xi, u_nu, nu;
};

void run_forward(const MdnModel& model, const Layout& lay,
                 const double* x_raw, ForwardScratch& ws) {
    const MdnConfig& cfg = model.config;
    ws.x_scaled.resize(cfg.input_dim);
    for (std::size_t d = 0; d < cfg.input_dim; ++d) {
        if (!std::isfinite(x_raw[d]))
            throw std::invalid_argument("mdn forward: non-finite input");
        ws.x_scaled[d] = (x_raw[d] - model.in_center[d]) / model.in_scale[d];
    }
    ws.pre.resize(lay.trunk.size());
    ws.act.resize(lay.trunk.size());
    const double* p = model.params.data();
    const double* cur = ws.x_scaled.data();
    for (std::size_t l = 0; l < lay.trunk.size(); ++l) {
        const Block& blk = lay.trunk[l];
        ws.pre[l].resize(blk.rows);
        ws.act[l].resize(blk.rows);
        kernels::matvec_bias(p + blk.w_off, cur, p + blk.b_off,
                             ws.pre[l].data(), blk.rows, blk.cols);
        kernels::relu(ws.pre[l].data(), ws.act[l].data(), blk.rows);
        cur = ws.act[l].data();
    }
    const std::size_t K = cfg.n_mixtures;
    auto head = [&](const Block& blk, std::vector<double>& out) {
        out.resize(K);
        kernels::matvec_bias(p + blk.w_off, cur, p + blk.b_off, out.data(),
                             blk.rows, blk.cols);
    };
    head(lay.pi, ws.s_pi);
    head(lay.mu, ws.mu);
    head(lay.sigma, ws.u_sigma);
    head(lay.xi, ws.xi);
    head(lay.nu, ws.u_nu);

    ws.pi.resize(K);
    double m = ws.s_pi[0];
    for (double s : ws.s_pi) m = std::max(m, s);
    double z = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
        ws.pi[j] = std::exp(ws.s_pi[j] - m);
        z += ws.pi[j];
    }
    for (std::size_t j = 0; j < K; ++j) ws.pi[j] /= z;

    ws.sigma.resize(K);
    ws.nu.resize(K);
    for (std::size_t j = 0; j < K; ++j) {
        ws.sigma[j] = softplus(ws.u_sigma[j]) + skewt::SkewedTParams::SIGMA_FLOOR;
        ws.nu[j] = softplus(ws.u_nu[j]) + skewt::SkewedTParams::NU_FLOOR;
    }
}

skewt::MixtureParams scratch_to_mixture(const ForwardScratch& ws) {
    skewt::MixtureParams m;
    const std::size_t K = ws.pi.size();
    m.weights = ws.pi;
    m.components.reserve(K);
    for (std::size_t j = 0; j < K; ++j)
        m.components.emplace_back(ws.mu[j], ws.sigma[j], ws.xi[j], ws.nu[j]);
    return m;
}

// Per-sample loss contribution and parameter gradient accumulation.
// loss_scale multiplies the gradient of -log p (it carries w_i / sum w).
double backward_sample(const MdnModel& model, const Layout& lay,
                       ForwardScratch& ws, double y, double loss_scale,
                       std::vector<double>& grad) {
    const std::size_t K = model.config.n_mixtures;
    const bool loss_only = grad.empty();

    // mixture log-density and responsibilities
    std::vector<skewt::SkewtLogPdfGrad> cg(loss_only ? 0 : K);
    std::vector<double> terms(K);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < K; ++j) {
        const skewt::SkewedTParams comp(ws.mu[j], ws.sigma[j], ws.xi[j], ws.nu[j]);
        double lf;
        if (loss_only) {
            lf = skewt::skewt_log_pdf(y, comp);
        } else {
            cg[j] = skewt::skewt_log_pdf_grad(y, comp);
            lf = cg[j].log_pdf;
        }
        terms[j] = std::log(ws.pi[j]) + lf;
        best = std::max(best, terms[j]);
    }
    double zsum = 0.0;
    for (std::size_t j = 0; j < K; ++j) zsum += std::exp(terms[j] - best);
    const double logp = best + std::log(zsum);

    if (loss_only) return logp;

    std::vector<double> d_spi(K), d_mu(K), d_usigma(K), d_xi(K), d_unu(K);
    for (std::size_t j = 0; j < K; ++j) {
        const double r = std::exp(terms[j] - logp);
        const double c = -loss_scale;  // gradient of -log p
        d_spi[j] = c * (r - ws.pi[j]);
        d_mu[j] = c * r * cg[j].d_mu;
        d_usigma[j] = c * r * cg[j].d_sigma * sigmoid(ws.u_sigma[j]);
        d_xi[j] = c * r * cg[j].d_xi;
        d_unu[j] = c * r * cg[j].d_nu * sigmoid(ws.u_nu[j]);
    }

    const double* p = model.params.data();
    const double* last_act =
        lay.trunk.empty() ? ws.x_scaled.data() : ws.act.back().data();
    const std::size_t last_dim =
        lay.trunk.empty() ? model.config.input_dim : lay.trunk.back().rows;

    std::vector<double> dh(last_dim, 0.0);
    std::vector<double> tmp(last_dim);
    auto head_back = [&](const Block& blk, const std::vector<double>& d_out) {
        kernels::outer_accumulate(grad.data() + blk.w_off, d_out.data(),
                                  last_act, blk.rows, blk.cols, 1.0);
        kernels::axpy(1.0, d_out.data(), grad.data() + blk.b_off, blk.rows);
        kernels::matvec_transposed(p + blk.w_off, d_out.data(), tmp.data(),
                                   blk.rows, blk.cols);
        kernels::axpy(1.0, tmp.data(), dh.data(), blk.cols);
    };
    head_back(lay.pi, d_spi);
    head_back(lay.mu, d_mu);
    head_back(lay.sigma, d_usigma);
    head_back(lay.xi, d_xi);
    head_back(lay.nu, d_unu);

    for (std::size_t l = lay.trunk.size(); l-- > 0;) {
        const Block& blk = lay.trunk[l];
        std::vector<double> dpre(blk.rows);
        kernels::relu_backward(ws.pre[l].data(), dh.data(), dpre.data(), blk.rows);
        const double* below =
            l == 0 ? ws.x_scaled.data() : ws.act[l - 1].data();
        kernels::outer_accumulate(grad.data() + blk.w_off, dpre.data(), below,
                                  blk.rows, blk.cols, 1.0);
        kernels::axpy(1.0, dpre.data(), grad.data() + blk.b_off, blk.rows);
        dh.assign(blk.cols, 0.0);
        kernels::matvec_transposed(p + blk.w_off, dpre.data(), dh.data(),
                                   blk.rows, blk.cols);
    }
    return logp;
}

double nll_impl(const MdnModel& model, const TrainingSet& data,
                const std::vector<std::size_t>& indices,
                std::vector<double>* grad) {
    if (indices.empty())
        throw std::invalid_argument("weighted_nll: empty batch");
    const Layout lay = make_layout(model.config);
    double wsum = 0.0;
    for (std::size_t i : indices) wsum += data.weights.weights[i];

    ForwardScratch ws;
    if (grad) grad->assign(lay.total, 0.0);
    std::vector<double> no_grad;
    double acc = 0.0;
    for (std::size_t i : indices) {
        const double w = data.weights.weights[i];
        run_forward(model, lay, data.inputs.data() + i * data.input_dim, ws);
        const double logp =
            backward_sample(model, lay, ws, data.targets[i], w / wsum,
                            grad ? *grad : no_grad);
        if (!std::isfinite(logp))
            throw loss_diagnostic_error("weighted_nll: non-finite log-density",
                                        i);
        acc -= w * logp;
    }
    return acc / wsum;
}

}  // namespace

void MdnConfig::validate() const {
    if (input_dim < 1 || n_mixtures < 1 || epochs < 1 || batch_size < 1 ||
        horizon < 1)
        throw std::invalid_argument("MdnConfig: counts must be >= 1");
    if (hidden.empty())
        throw std::invalid_argument("MdnConfig: need at least one hidden layer");
    for (std::size_t h : hidden)
        if (h < 1) throw std::invalid_argument("MdnConfig: hidden sizes >= 1");
    if (!(learning_rate > 0.0))
        throw std::invalid_argument("MdnConfig: learning_rate must be > 0");
}

void TrainingSet::validate() const {
    if (targets.empty() || inputs.size() != targets.size() * input_dim ||
        weights.weights.size() != targets.size())
        throw std::invalid_argument("TrainingSet: misaligned rows");
    for (double v : inputs)
        if (!std::isfinite(v))
            throw std::invalid_argument("TrainingSet: non-finite input");
    for (double v : targets)
        if (!std::isfinite(v))
            throw std::invalid_argument("TrainingSet: non-finite target");
}

TrainingSet make_training_set(const std::vector<double>& series,
                              std::size_t input_dim, std::size_t horizon) {
    if (input_dim < 1 || horizon < 1)
        throw std::invalid_argument("make_training_set: bad dimensions");
    if (series.size() < input_dim + horizon)
        throw std::invalid_argument("make_training_set: series too short");
    TrainingSet set;
    set.input_dim = input_dim;
    const std::size_t rows = series.size() - horizon - (input_dim - 1);
    set.inputs.reserve(rows * input_dim);
    set.targets.reserve(rows);
    for (std::size_t t = input_dim - 1; t + horizon < series.size(); ++t) {
        for (std::size_t d = 0; d < input_dim; ++d)
            set.inputs.push_back(series[t - (input_dim - 1) + d]);
        set.targets.push_back(series[t + horizon]);
    }
    set.weights.weights.assign(set.targets.size(), 1.0);
    set.weights.tail_mask.assign(set.targets.size(), false);
    set.weights.n_total = set.targets.size();
    set.weights.n_tail = 0;
    return set;
}

void apply_tail_weights(TrainingSet& set, const tails::TailBounds& bounds) {
    std::vector<double> conditioning(set.rows());
    for (std::size_t i = 0; i < set.rows(); ++i)
        conditioning[i] = set.inputs[i * set.input_dim + set.input_dim - 1];
    set.weights = tails::compute_weights(conditioning, bounds);
}

skewt::MixtureParams MdnModel::forward(const std::vector<double>& x) const {
    if (x.size() != config.input_dim)
        throw std::invalid_argument("mdn forward: wrong input dimension");
    const Layout lay = make_layout(config);
    ForwardScratch ws;
    run_forward(*this, lay, x.data(), ws);
    return scratch_to_mixture(ws);
}

DensityPtr MdnModel::predict_density(const std::vector<double>& x) const {
    return std::make_unique<skewt::MixtureDensity>(forward(x));
}

std::size_t MdnModel::param_count() const { return make_layout(config).total; }

double weighted_nll(const MdnModel& model, const TrainingSet& data,
                    const std::vector<std::size_t>& indices) {
    return nll_impl(model, data, indices, nullptr);
}

double weighted_nll_grad(const MdnModel& model, const TrainingSet& data,
                         const std::vector<std::size_t>& indices,
                         std::vector<double>& grad) {
    return nll_impl(model, data, indices, &grad);
}

namespace {

MdnModel init_model(const TrainingSet& data, const MdnConfig& cfg) {
    MdnModel model;
    model.config = cfg;

    model.in_center.resize(cfg.input_dim);
    model.in_scale.resize(cfg.input_dim);
    for (std::size_t d = 0; d < cfg.input_dim; ++d) {
        std::vector<double> col(data.rows());
        for (std::size_t i = 0; i < data.rows(); ++i)
            col[i] = data.inputs[i * cfg.input_dim + d];
        model.in_center[d] = median_of(col);
        model.in_scale[d] = robust_scale(col);
    }

    const Layout lay = make_layout(cfg);
    model.params.assign(lay.total, 0.0);
    rng::Xoshiro256pp gen(rng::derive_seed(cfg.seed, 1));
    auto he_uniform = [&](const Block& blk) {
        const double lim = std::sqrt(6.0 / static_cast<double>(blk.cols));
        for (std::size_t i = 0; i < blk.rows * blk.cols; ++i)
            model.params[blk.w_off + i] = gen.uniform(-lim, lim);
    };
    for (const Block& blk : lay.trunk) he_uniform(blk);
    for (const Block* head : {&lay.pi, &lay.mu, &lay.sigma, &lay.xi, &lay.nu})
        he_uniform(*head);

    // sigma head starts near the robust target scale, nu head near 5,
    // mu head biases spread over the target quantiles
    const double target_scale = robust_scale(data.targets);
    const double b_sigma = softplus_inv(
        std::max(target_scale - skewt::SkewedTParams::SIGMA_FLOOR, 1e-3));
    const double b_nu =
        softplus_inv(5.0 - skewt::SkewedTParams::NU_FLOOR);
    std::vector<double> sorted_targets(data.targets);
    std::sort(sorted_targets.begin(), sorted_targets.end());
    const std::size_t K = cfg.n_mixtures;
    for (std::size_t j = 0; j < K; ++j) {
        model.params[lay.sigma.b_off + j] = b_sigma;
        model.params[lay.nu.b_off + j] = b_nu;
        const double p = (static_cast<double>(j) + 0.5) / static_cast<double>(K);
        const double h = (static_cast<double>(sorted_targets.size()) - 1.0) * p;
        const std::size_t lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, sorted_targets.size() - 1);
        model.params[lay.mu.b_off + j] =
            sorted_targets[lo] +
            (h - std::floor(h)) * (sorted_targets[hi] - sorted_targets[lo]);
    }
    if (cfg.freeze_shape_heads) {
        for (std::size_t i = 0; i < lay.xi.rows * lay.xi.cols; ++i)
            model.params[lay.xi.w_off + i] = 0.0;
        for (std::size_t i = 0; i < lay.nu.rows * lay.nu.cols; ++i)
            model.params[lay.nu.w_off + i] = 0.0;
        for (std::size_t j = 0; j < K; ++j) {
            model.params[lay.xi.b_off + j] = 0.0;
            model.params[lay.nu.b_off + j] =
                softplus_inv(50.0 - skewt::SkewedTParams::NU_FLOOR);
        }
    }
    return model;
}

struct AdamState {
    std::vector<double> m, v;
    std::size_t t = 0;
};

}  // namespace

TrainResult train(const TrainingSet& data, const MdnConfig& cfg,
                  const TrainingSet* validation) {
    cfg.validate();
    data.validate();
    if (data.rows() < cfg.batch_size)
        throw std::invalid_argument("train: need at least batch_size rows");

    TrainResult result;
    result.model = init_model(data, cfg);
    MdnModel& model = result.model;
    const Layout lay = make_layout(cfg);

    double noise_std = cfg.noise_std;
    if (noise_std < 0.0) noise_std = 0.1 * robust_scale(data.targets);
    result.resolved_noise_std = noise_std;

    rng::Xoshiro256pp sampler_gen(rng::derive_seed(cfg.seed, 2));
    rng::Xoshiro256pp noise_gen(rng::derive_seed(cfg.seed, 3));

    std::vector<double> cumw(data.rows());
    double wtotal = 0.0;
    for (std::size_t i = 0; i < data.rows(); ++i) {
        wtotal += data.weights.weights[i];
        cumw[i] = wtotal;
    }

    AdamState adam;
    adam.m.assign(lay.total, 0.0);
    adam.v.assign(lay.total, 0.0);
    double lr = cfg.learning_rate;
    std::size_t restarts = 0;

    const std::size_t n_batches =
        (data.rows() + cfg.batch_size - 1) / cfg.batch_size;
    const auto t_start = std::chrono::steady_clock::now();

    TrainingSet batch;
    batch.input_dim = cfg.input_dim;
    batch.inputs.resize(cfg.batch_size * cfg.input_dim);
    batch.targets.resize(cfg.batch_size);
    batch.weights.weights.resize(cfg.batch_size);
    batch.weights.n_total = cfg.batch_size;
    std::vector<std::size_t> batch_idx(cfg.batch_size);
    for (std::size_t i = 0; i < cfg.batch_size; ++i) batch_idx[i] = i;
    std::vector<double> grad;

    std::size_t epoch = 0;
    while (epoch < cfg.epochs) {
        const std::vector<double> ckpt_params = model.params;
        const AdamState ckpt_adam = adam;

        bool diverged = false;
        double loss_acc = 0.0;
        for (std::size_t b = 0; b < n_batches && !diverged; ++b) {
            for (std::size_t i = 0; i < cfg.batch_size; ++i) {
                const double u = sampler_gen.uniform() * wtotal;
                std::size_t row = static_cast<std::size_t>(
                    std::lower_bound(cumw.begin(), cumw.end(), u) - cumw.begin());
                row = std::min(row, data.rows() - 1);
                for (std::size_t d = 0; d < cfg.input_dim; ++d)
                    batch.inputs[i * cfg.input_dim + d] =
                        data.inputs[row * cfg.input_dim + d] +
                        noise_std * noise_gen.normal();
                batch.targets[i] =
                    data.targets[row] + noise_std * noise_gen.normal();
                batch.weights.weights[i] = data.weights.weights[row];
            }
            double loss;
            try {
                loss = weighted_nll_grad(model, batch, batch_idx, grad);
            } catch (const loss_diagnostic_error&) {
                diverged = true;
                break;
            } catch (const std::invalid_argument&) {
                // exploded parameters (NaN scale or dof) surface here
                diverged = true;
                break;
            }
            if (!std::isfinite(loss)) {
                diverged = true;
                break;
            }
            if (cfg.freeze_shape_heads) {
                for (std::size_t i = 0; i < lay.xi.rows * lay.xi.cols; ++i)
                    grad[lay.xi.w_off + i] = 0.0;
                for (std::size_t i = 0; i < lay.nu.rows * lay.nu.cols; ++i)
                    grad[lay.nu.w_off + i] = 0.0;
                for (std::size_t j = 0; j < cfg.n_mixtures; ++j) {
                    grad[lay.xi.b_off + j] = 0.0;
                    grad[lay.nu.b_off + j] = 0.0;
                }
            }
            adam.t += 1;
            const double bc1 = 1.0 - std::pow(0.9, static_cast<double>(adam.t));
            const double bc2 = 1.0 - std::pow(0.999, static_cast<double>(adam.t));
            kernels::adam_update(model.params.data(), adam.m.data(),
                                 adam.v.data(), grad.data(), lay.total, lr, 0.9,
                                 0.999, 1e-8, bc1, bc2);
            loss_acc += loss;
        }

        if (diverged) {
            model.params = ckpt_params;
            adam = ckpt_adam;
            lr *= 0.5;
            ++restarts;
            if (restarts > 3)
                throw numeric_error(
                    "train: loss non-finite after 3 learning-rate restarts "
                    "(epoch " + std::to_string(epoch) + ")");
            continue;
        }

        TrainLogEntry entry{};
        entry.epoch = epoch + 1;
        entry.mean_loss = loss_acc / static_cast<double>(n_batches);
        entry.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          t_start)
                .count();
        entry.val_loss = std::numeric_limits<double>::quiet_NaN();
        if (validation && validation->rows() > 0) {
            std::vector<std::size_t> all(validation->rows());
            for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
            try {
                entry.val_loss = weighted_nll(model, *validation, all);
            } catch (const loss_diagnostic_error&) {
                entry.val_loss = std::numeric_limits<double>::infinity();
            }
        }
        result.log.push_back(entry);
        ++epoch;
    }
    result.lr_restarts = restarts;
    return result;
}

}  // namespace bubblecast::mdn
