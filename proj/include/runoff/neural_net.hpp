#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "runoff/errors.hpp"
#include "runoff/rng.hpp"
#include "runoff/tree.hpp"  // Sample, rmse

namespace runoff {

// Adaptive moment estimation with bias-corrected first and second moments:
//   m_t = b1*m_{t-1} + (1-b1)*g_t,   mhat = m_t / (1 - b1^t)
//   v_t = b2*v_{t-1} + (1-b2)*g_t^2, vhat = v_t / (1 - b2^t)
//   w_t = w_{t-1} - lr * mhat / (sqrt(vhat) + eps)
class AdamOptimizer {
public:
    AdamOptimizer(std::size_t n_params, double learning_rate = 0.01, double beta1 = 0.9,
                  double beta2 = 0.999, double epsilon = 1e-8)
        : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon), m_(n_params, 0.0), v_(n_params, 0.0) {}

    void step(std::vector<double>& params, const std::vector<double>& grads) {
        if (params.size() != m_.size() || grads.size() != m_.size())
            throw ArgumentError("AdamOptimizer::step: size mismatch");
        ++t_;
        const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (std::size_t k = 0; k < params.size(); ++k) {
            m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * grads[k];
            v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * grads[k] * grads[k];
            const double mhat = m_[k] / c1;
            const double vhat = v_[k] / c2;
            params[k] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }

    long step_count() const { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<double> m_, v_;
};

// Fully connected feedforward net: sigmoid hidden layers, one linear output.
class NeuralNet {
public:
    NeuralNet() = default;

    // Zero-initialised weights (test hook: prediction equals the output bias).
    explicit NeuralNet(std::vector<int> widths) : widths_(std::move(widths)) {
        if (widths_.size() < 2) throw ArgumentError("NeuralNet: need at least input and output layers");
        for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
            weights_.emplace_back(static_cast<std::size_t>(widths_[l + 1]) * widths_[l], 0.0);
            biases_.emplace_back(static_cast<std::size_t>(widths_[l + 1]), 0.0);
        }
    }

    static NeuralNet glorot(std::vector<int> widths, Rng& rng) {
        NeuralNet net(std::move(widths));
        for (std::size_t l = 0; l + 1 < net.widths_.size(); ++l) {
            const double bound = std::sqrt(6.0 / (net.widths_[l] + net.widths_[l + 1]));
            for (double& w : net.weights_[l]) w = rng.uniform(-bound, bound);
        }
        return net;
    }

    const std::vector<int>& widths() const { return widths_; }
    int input_width() const { return widths_.front(); }
    std::size_t layer_count() const { return weights_.size(); }

    std::vector<double>& layer_weights(std::size_t l) { return weights_[l]; }
    std::vector<double>& layer_biases(std::size_t l) { return biases_[l]; }
    const std::vector<double>& layer_weights(std::size_t l) const { return weights_[l]; }
    const std::vector<double>& layer_biases(std::size_t l) const { return biases_[l]; }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < weights_.size(); ++l) n += weights_[l].size() + biases_[l].size();
        return n;
    }

    std::vector<double> get_parameters() const {
        std::vector<double> flat;
        flat.reserve(parameter_count());
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            flat.insert(flat.end(), weights_[l].begin(), weights_[l].end());
            flat.insert(flat.end(), biases_[l].begin(), biases_[l].end());
        }
        return flat;
    }

    void set_parameters(const std::vector<double>& flat) {
        if (flat.size() != parameter_count()) throw ArgumentError("NeuralNet::set_parameters: size mismatch");
        std::size_t pos = 0;
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            for (double& w : weights_[l]) w = flat[pos++];
            for (double& b : biases_[l]) b = flat[pos++];
        }
    }

    double predict(const std::vector<double>& x) const {
        if (static_cast<int>(x.size()) != widths_.front())
            throw ArgumentError("NeuralNet::predict: input width mismatch");
        std::vector<double> cur = x, next;
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            const int out_w = widths_[l + 1];
            const int in_w = widths_[l];
            next.assign(static_cast<std::size_t>(out_w), 0.0);
            for (int r = 0; r < out_w; ++r) {
                double z = biases_[l][static_cast<std::size_t>(r)];
                const double* wrow = &weights_[l][static_cast<std::size_t>(r) * in_w];
                for (int c = 0; c < in_w; ++c) z += wrow[c] * cur[static_cast<std::size_t>(c)];
                next[static_cast<std::size_t>(r)] = l + 1 < weights_.size() ? sigmoid(z) : z;
            }
            cur.swap(next);
        }
        return cur.front();
    }

    // Root-mean-squared-error loss and its gradient in flat parameter order,
    // with dropout off. Shared by training (theta = 0) and the
    // finite-difference checks.
    std::pair<double, std::vector<double>> loss_and_gradient(const std::vector<Sample>& samples) const {
        Workspace ws;
        prepare_workspace(ws, samples.size());
        forward_batch(samples, nullptr, ws);
        std::vector<double> grads(parameter_count(), 0.0);
        const double loss = backward_batch(samples, nullptr, ws, grads);
        return {loss, std::move(grads)};
    }

    static double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

private:
    friend NeuralNet fit_ann(const std::vector<Sample>&, const struct AnnOptions&);

    struct Workspace {
        // act[l]: post-activation values per sample, pre-dropout; size N * widths[l].
        std::vector<std::vector<double>> act;
        std::vector<std::vector<double>> delta;
        std::size_t n_samples = 0;
    };

    void prepare_workspace(Workspace& ws, std::size_t n_samples) const {
        ws.n_samples = n_samples;
        ws.act.assign(widths_.size(), {});
        ws.delta.assign(widths_.size(), {});
        for (std::size_t l = 0; l < widths_.size(); ++l) {
            ws.act[l].assign(n_samples * static_cast<std::size_t>(widths_[l]), 0.0);
            ws.delta[l].assign(n_samples * static_cast<std::size_t>(widths_[l]), 0.0);
        }
    }

    // masks: per hidden layer l (1..L-1), N * widths[l] multipliers (0 or
    // 1/(1-theta)); nullptr means no dropout.
    void forward_batch(const std::vector<Sample>& samples, const std::vector<std::vector<double>>* masks,
                       Workspace& ws) const {
        const std::size_t n = samples.size();
        for (std::size_t s = 0; s < n; ++s)
            for (int c = 0; c < widths_.front(); ++c)
                ws.act[0][s * static_cast<std::size_t>(widths_[0]) + static_cast<std::size_t>(c)] =
                    samples[s].x[static_cast<std::size_t>(c)];
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            const int out_w = widths_[l + 1];
            const int in_w = widths_[l];
            const bool output_layer = (l + 1 == weights_.size());
            for (std::size_t s = 0; s < n; ++s) {
                const double* in = &ws.act[l][s * static_cast<std::size_t>(in_w)];
                const double* in_mask =
                    (masks != nullptr && l >= 1) ? &(*masks)[l - 1][s * static_cast<std::size_t>(in_w)] : nullptr;
                double* out = &ws.act[l + 1][s * static_cast<std::size_t>(out_w)];
                for (int r = 0; r < out_w; ++r) {
                    double z = biases_[l][static_cast<std::size_t>(r)];
                    const double* wrow = &weights_[l][static_cast<std::size_t>(r) * in_w];
                    if (in_mask != nullptr) {
                        for (int c = 0; c < in_w; ++c) z += wrow[c] * in[c] * in_mask[c];
                    } else {
                        for (int c = 0; c < in_w; ++c) z += wrow[c] * in[c];
                    }
                    out[r] = output_layer ? z : sigmoid(z);
                }
            }
        }
    }

    // Returns the RMSE loss; accumulates gradients into `grads` (flat order).
    double backward_batch(const std::vector<Sample>& samples, const std::vector<std::vector<double>>* masks,
                          Workspace& ws, std::vector<double>& grads) const {
        const std::size_t n = samples.size();
        const std::size_t out_layer = widths_.size() - 1;
        double mse = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            const double e = ws.act[out_layer][s] - samples[s].y;
            mse += e * e;
        }
        mse /= static_cast<double>(n);
        const double loss = std::sqrt(mse);
        if (loss == 0.0) return 0.0;  // gradient vanishes at an exact fit

        for (std::size_t s = 0; s < n; ++s)
            ws.delta[out_layer][s] =
                (ws.act[out_layer][s] - samples[s].y) / (static_cast<double>(n) * loss);

        // Layer offsets in the flat gradient vector.
        std::vector<std::size_t> offset(weights_.size());
        {
            std::size_t pos = 0;
            for (std::size_t l = 0; l < weights_.size(); ++l) {
                offset[l] = pos;
                pos += weights_[l].size() + biases_[l].size();
            }
        }

        for (std::size_t l = weights_.size(); l-- > 0;) {
            const int out_w = widths_[l + 1];
            const int in_w = widths_[l];
            double* gw = &grads[offset[l]];
            double* gb = &grads[offset[l] + weights_[l].size()];
            const bool input_layer = (l == 0);
            for (std::size_t s = 0; s < n; ++s) {
                const double* in = &ws.act[l][s * static_cast<std::size_t>(in_w)];
                const double* in_mask =
                    (masks != nullptr && l >= 1) ? &(*masks)[l - 1][s * static_cast<std::size_t>(in_w)] : nullptr;
                const double* d_out = &ws.delta[l + 1][s * static_cast<std::size_t>(out_w)];
                double* d_in = &ws.delta[l][s * static_cast<std::size_t>(in_w)];
                for (int r = 0; r < out_w; ++r) {
                    const double d = d_out[r];
                    const double* wrow = &weights_[l][static_cast<std::size_t>(r) * in_w];
                    double* grow = &gw[static_cast<std::size_t>(r) * in_w];
                    for (int c = 0; c < in_w; ++c) {
                        const double a = in_mask != nullptr ? in[c] * in_mask[c] : in[c];
                        grow[c] += d * a;
                    }
                    gb[r] += d;
                    if (!input_layer) {
                        for (int c = 0; c < in_w; ++c) d_in[c] += d * wrow[c];
                    }
                }
                if (!input_layer) {
                    for (int c = 0; c < in_w; ++c) {
                        const double sg = in[c];
                        const double mask = in_mask != nullptr ? in_mask[c] : 1.0;
                        d_in[c] *= mask * sg * (1.0 - sg);
                    }
                }
            }
        }
        return loss;
    }

    std::vector<int> widths_;
    std::vector<std::vector<double>> weights_;  // (out x in), row-major
    std::vector<std::vector<double>> biases_;
};

struct AnnOptions {
    int depth = 2;   // hidden layers
    int width = 5;   // neurons per hidden layer
    double theta = 0.0;
    int epochs = 10000;
    double learning_rate = 0.01;
    std::uint64_t seed = 0;
};

// Full-batch training with adaptive moments and inverted dropout on the
// hidden activations; dropout masks are redrawn every epoch and switched off
// at prediction time.
inline NeuralNet fit_ann(const std::vector<Sample>& samples, const AnnOptions& options) {
    if (samples.empty()) throw ArgumentError("fit_ann: no samples");
    if (!(options.theta >= 0.0 && options.theta < 1.0)) throw ArgumentError("fit_ann: theta outside [0,1)");
    if (options.depth < 1 || options.depth > 3) throw ArgumentError("fit_ann: depth must be 1, 2 or 3");
    if (options.epochs < 1) throw ArgumentError("fit_ann: epochs must be >= 1");

    std::vector<int> widths;
    widths.push_back(static_cast<int>(samples.front().x.size()));
    for (int d = 0; d < options.depth; ++d) widths.push_back(options.width);
    widths.push_back(1);

    Rng rng(options.seed);
    NeuralNet net = NeuralNet::glorot(widths, rng);

    AdamOptimizer adam(net.parameter_count(), options.learning_rate);
    std::vector<double> params = net.get_parameters();
    std::vector<double> grads(params.size(), 0.0);

    NeuralNet::Workspace ws;
    net.prepare_workspace(ws, samples.size());

    const std::size_t hidden_layers = widths.size() - 2;
    std::vector<std::vector<double>> masks(hidden_layers);
    for (std::size_t l = 0; l < hidden_layers; ++l)
        masks[l].assign(samples.size() * static_cast<std::size_t>(widths[l + 1]), 1.0);
    const bool use_dropout = options.theta > 0.0;
    const double keep = 1.0 - options.theta;

    for (int epoch = 1; epoch <= options.epochs; ++epoch) {
        if (use_dropout) {
            for (std::size_t l = 0; l < hidden_layers; ++l)
                for (double& m : masks[l]) m = rng.uniform() < keep ? 1.0 / keep : 0.0;
        }
        net.forward_batch(samples, use_dropout ? &masks : nullptr, ws);
        std::fill(grads.begin(), grads.end(), 0.0);
        const double loss = net.backward_batch(samples, use_dropout ? &masks : nullptr, ws, grads);
        if (!std::isfinite(loss))
            throw TrainingDivergenceError("fit_ann: non-finite loss at epoch " + std::to_string(epoch));
        if (loss == 0.0) continue;  // exact fit; nothing to update
        adam.step(params, grads);
        net.set_parameters(params);
    }
    return net;
}

}  // namespace runoff
