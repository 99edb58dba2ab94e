#include "pktclass/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pktclass/rng.hpp"

namespace pktclass {

std::string to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::Dense: return "dense";
        case LayerKind::Conv1d: return "conv1d";
        case LayerKind::MaxPool1d: return "maxpool1d";
        case LayerKind::Relu: return "relu";
        case LayerKind::Sigmoid: return "sigmoid";
        case LayerKind::Flatten: return "flatten";
    }
    return "?";
}

Tensor init_normal(const std::vector<int>& shape, uint64_t seed) {
    Tensor t(shape);
    Rng rng(seed);
    double* p = t.data();
    for (int64_t i = 0; i < t.size(); ++i) p[i] = rng.normal(0.0, kInitStddev);
    return t;
}

namespace {

[[noreturn]] void layer_error(size_t index, const LayerSpec& spec, const std::string& message) {
    throw std::invalid_argument("layer " + std::to_string(index) + " (" + to_string(spec.kind) +
                                "): " + message);
}

int64_t shape_elems(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
}

void ensure_shape(Tensor& t, const std::vector<int>& shape) {
    if (t.shape() != shape) t = Tensor(shape);
}

double stable_sigmoid(double z) {
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace

Network::Network(std::vector<int> input_shape, std::vector<LayerSpec> layers)
    : input_shape_(std::move(input_shape)), layers_(std::move(layers)) {
    if (input_shape_.empty() || input_shape_.size() > 2)
        throw std::invalid_argument("Network: input shape must be rank 1 or 2");
    for (int d : input_shape_)
        if (d <= 0) throw std::invalid_argument("Network: input dimensions must be positive");

    activation_shapes_.push_back(input_shape_);
    std::vector<int> shape = input_shape_;

    for (size_t i = 0; i < layers_.size(); ++i) {
        const LayerSpec& spec = layers_[i];
        first_param_of_layer_.push_back(-1);
        switch (spec.kind) {
            case LayerKind::Dense: {
                if (spec.units <= 0) layer_error(i, spec, "units must be positive");
                if (shape.size() != 1)
                    layer_error(i, spec, "expects rank-1 input, got rank " +
                                             std::to_string(shape.size()));
                first_param_of_layer_.back() = static_cast<int>(params_.size());
                params_.emplace_back(std::vector<int>{spec.units, shape[0]});
                param_is_bias_.push_back(false);
                params_.emplace_back(std::vector<int>{spec.units});
                param_is_bias_.push_back(true);
                shape = {spec.units};
                break;
            }
            case LayerKind::Conv1d: {
                if (spec.filters <= 0 || spec.kernel_size <= 0)
                    layer_error(i, spec, "filters and kernel_size must be positive");
                if (shape.size() != 2)
                    layer_error(i, spec, "expects rank-2 [channels, length] input");
                if (spec.kernel_size > shape[1])
                    layer_error(i, spec, "kernel size " + std::to_string(spec.kernel_size) +
                                             " exceeds input length " + std::to_string(shape[1]));
                first_param_of_layer_.back() = static_cast<int>(params_.size());
                params_.emplace_back(std::vector<int>{spec.filters, shape[0], spec.kernel_size});
                param_is_bias_.push_back(false);
                params_.emplace_back(std::vector<int>{spec.filters});
                param_is_bias_.push_back(true);
                shape = {spec.filters, shape[1] - spec.kernel_size + 1};
                break;
            }
            case LayerKind::MaxPool1d: {
                if (spec.pool_size <= 0) layer_error(i, spec, "pool size must be positive");
                if (shape.size() != 2)
                    layer_error(i, spec, "expects rank-2 [channels, length] input");
                const int pooled = shape[1] / spec.pool_size;
                if (pooled == 0) layer_error(i, spec, "pool size exceeds input length");
                shape = {shape[0], pooled};
                break;
            }
            case LayerKind::Relu:
            case LayerKind::Sigmoid:
                break;  // shape preserved
            case LayerKind::Flatten: {
                shape = {static_cast<int>(shape_elems(shape))};
                break;
            }
        }
        activation_shapes_.push_back(shape);
    }
}

void Network::init_params(uint64_t seed) {
    for (size_t p = 0; p < params_.size(); ++p) {
        if (param_is_bias_[p]) {
            params_[p].fill(0.0);
        } else {
            params_[p] = init_normal(params_[p].shape(), derive_seed(seed, "init", p));
        }
    }
}

int64_t Network::param_count() const {
    int64_t n = 0;
    for (const Tensor& t : params_) n += t.size();
    return n;
}

std::vector<Tensor> Network::zero_grads() const {
    std::vector<Tensor> grads;
    grads.reserve(params_.size());
    for (const Tensor& t : params_) grads.emplace_back(t.shape());
    return grads;
}

const Tensor& Network::forward(const Tensor& input, Workspace& ws) const {
    if (input.shape() != input_shape_)
        throw std::invalid_argument("forward: input shape " + input.shape_string() +
                                    " does not match network input " +
                                    Tensor(input_shape_).shape_string());

    ws.activations.resize(layers_.size() + 1);
    for (size_t i = 0; i <= layers_.size(); ++i)
        ensure_shape(ws.activations[i], activation_shapes_[i]);
    std::copy(input.data(), input.data() + input.size(), ws.activations[0].data());

    for (size_t i = 0; i < layers_.size(); ++i) {
        const LayerSpec& spec = layers_[i];
        const Tensor& x = ws.activations[i];
        Tensor& out = ws.activations[i + 1];

        switch (spec.kind) {
            case LayerKind::Dense: {
                const Tensor& w = params_[static_cast<size_t>(first_param_of_layer_[i])];
                const Tensor& b = params_[static_cast<size_t>(first_param_of_layer_[i]) + 1];
                const int units = w.dim(0);
                const int in = w.dim(1);
                const double* __restrict__ xp = x.data();
                for (int u = 0; u < units; ++u) {
                    const double* __restrict__ wrow = w.data() + static_cast<int64_t>(u) * in;
                    double acc = b[u];
                    for (int j = 0; j < in; ++j) acc += wrow[j] * xp[j];
                    out[u] = acc;
                }
                break;
            }
            case LayerKind::Conv1d: {
                const Tensor& k = params_[static_cast<size_t>(first_param_of_layer_[i])];
                const Tensor& b = params_[static_cast<size_t>(first_param_of_layer_[i]) + 1];
                const int filters = k.dim(0);
                const int channels = k.dim(1);
                const int ksize = k.dim(2);
                const int in_len = x.dim(1);
                const int out_len = in_len - ksize + 1;
                for (int f = 0; f < filters; ++f) {
                    double* __restrict__ yrow = out.data() + static_cast<int64_t>(f) * out_len;
                    std::fill(yrow, yrow + out_len, b[f]);
                    for (int c = 0; c < channels; ++c) {
                        const double* xrow = x.data() + static_cast<int64_t>(c) * in_len;
                        const double* krow =
                            k.data() + (static_cast<int64_t>(f) * channels + c) * ksize;
                        for (int kk = 0; kk < ksize; ++kk) {
                            const double kv = krow[kk];
                            const double* __restrict__ xs = xrow + kk;
                            for (int t = 0; t < out_len; ++t) yrow[t] += kv * xs[t];
                        }
                    }
                }
                break;
            }
            case LayerKind::MaxPool1d: {
                const int channels = x.dim(0);
                const int in_len = x.dim(1);
                const int pool = spec.pool_size;
                const int out_len = in_len / pool;
                for (int c = 0; c < channels; ++c) {
                    const double* xrow = x.data() + static_cast<int64_t>(c) * in_len;
                    double* yrow = out.data() + static_cast<int64_t>(c) * out_len;
                    for (int t = 0; t < out_len; ++t) {
                        double best = xrow[t * pool];
                        for (int j = 1; j < pool; ++j) best = std::max(best, xrow[t * pool + j]);
                        yrow[t] = best;
                    }
                }
                break;
            }
            case LayerKind::Relu: {
                const double* __restrict__ xp = x.data();
                double* __restrict__ yp = out.data();
                for (int64_t j = 0; j < x.size(); ++j) yp[j] = xp[j] > 0.0 ? xp[j] : 0.0;
                break;
            }
            case LayerKind::Sigmoid: {
                const double* __restrict__ xp = x.data();
                double* __restrict__ yp = out.data();
                for (int64_t j = 0; j < x.size(); ++j) yp[j] = stable_sigmoid(xp[j]);
                break;
            }
            case LayerKind::Flatten: {
                std::copy(x.data(), x.data() + x.size(), out.data());
                break;
            }
        }
    }

    ws.forward_done = true;
    return ws.activations.back();
}

void Network::backward(const Tensor& d_output, Workspace& ws, std::vector<Tensor>& grads) const {
    if (!ws.forward_done) throw std::logic_error("backward: called before forward");
    if (grads.size() != params_.size())
        throw std::invalid_argument("backward: gradient buffer count mismatch");
    if (d_output.shape() != ws.activations.back().shape())
        throw std::invalid_argument("backward: d_output shape mismatch");

    ws.deltas.resize(layers_.size() + 1);
    for (size_t i = 0; i <= layers_.size(); ++i)
        ensure_shape(ws.deltas[i], activation_shapes_[i]);
    std::copy(d_output.data(), d_output.data() + d_output.size(),
              ws.deltas[layers_.size()].data());

    for (size_t ii = layers_.size(); ii-- > 0;) {
        const LayerSpec& spec = layers_[ii];
        const Tensor& x = ws.activations[ii];
        const Tensor& delta = ws.deltas[ii + 1];
        Tensor& dx = ws.deltas[ii];

        switch (spec.kind) {
            case LayerKind::Dense: {
                const Tensor& w = params_[static_cast<size_t>(first_param_of_layer_[ii])];
                Tensor& gw = grads[static_cast<size_t>(first_param_of_layer_[ii])];
                Tensor& gb = grads[static_cast<size_t>(first_param_of_layer_[ii]) + 1];
                const int units = w.dim(0);
                const int in = w.dim(1);
                dx.fill(0.0);
                const double* __restrict__ xp = x.data();
                double* __restrict__ dxp = dx.data();
                for (int u = 0; u < units; ++u) {
                    const double du = delta[u];
                    gb[u] += du;
                    double* __restrict__ gwrow = gw.data() + static_cast<int64_t>(u) * in;
                    const double* __restrict__ wrow = w.data() + static_cast<int64_t>(u) * in;
                    for (int j = 0; j < in; ++j) gwrow[j] += du * xp[j];
                    for (int j = 0; j < in; ++j) dxp[j] += du * wrow[j];
                }
                break;
            }
            case LayerKind::Conv1d: {
                const Tensor& k = params_[static_cast<size_t>(first_param_of_layer_[ii])];
                Tensor& gk = grads[static_cast<size_t>(first_param_of_layer_[ii])];
                Tensor& gb = grads[static_cast<size_t>(first_param_of_layer_[ii]) + 1];
                const int filters = k.dim(0);
                const int channels = k.dim(1);
                const int ksize = k.dim(2);
                const int in_len = x.dim(1);
                const int out_len = in_len - ksize + 1;
                dx.fill(0.0);
                for (int f = 0; f < filters; ++f) {
                    const double* __restrict__ drow =
                        delta.data() + static_cast<int64_t>(f) * out_len;
                    double acc = 0.0;
                    for (int t = 0; t < out_len; ++t) acc += drow[t];
                    gb[f] += acc;
                    for (int c = 0; c < channels; ++c) {
                        const double* xrow = x.data() + static_cast<int64_t>(c) * in_len;
                        double* dxrow = dx.data() + static_cast<int64_t>(c) * in_len;
                        const int64_t kbase = (static_cast<int64_t>(f) * channels + c) * ksize;
                        const double* krow = k.data() + kbase;
                        double* gkrow = gk.data() + kbase;
                        for (int kk = 0; kk < ksize; ++kk) {
                            const double* __restrict__ xs = xrow + kk;
                            double gacc = 0.0;
                            for (int t = 0; t < out_len; ++t) gacc += drow[t] * xs[t];
                            gkrow[kk] += gacc;
                        }
                        for (int kk = 0; kk < ksize; ++kk) {
                            const double kv = krow[kk];
                            double* __restrict__ dxs = dxrow + kk;
                            for (int t = 0; t < out_len; ++t) dxs[t] += kv * drow[t];
                        }
                    }
                }
                break;
            }
            case LayerKind::MaxPool1d: {
                const int channels = x.dim(0);
                const int in_len = x.dim(1);
                const int pool = spec.pool_size;
                const int out_len = in_len / pool;
                dx.fill(0.0);
                for (int c = 0; c < channels; ++c) {
                    const double* xrow = x.data() + static_cast<int64_t>(c) * in_len;
                    const double* drow = delta.data() + static_cast<int64_t>(c) * out_len;
                    double* dxrow = dx.data() + static_cast<int64_t>(c) * in_len;
                    for (int t = 0; t < out_len; ++t) {
                        // Gradient goes to the argmax; ties to the lowest index.
                        int best = t * pool;
                        for (int j = 1; j < pool; ++j)
                            if (xrow[t * pool + j] > xrow[best]) best = t * pool + j;
                        dxrow[best] += drow[t];
                    }
                }
                break;
            }
            case LayerKind::Relu: {
                const double* __restrict__ xp = x.data();
                const double* __restrict__ dp = delta.data();
                double* __restrict__ dxp = dx.data();
                for (int64_t j = 0; j < x.size(); ++j) dxp[j] = xp[j] > 0.0 ? dp[j] : 0.0;
                break;
            }
            case LayerKind::Sigmoid: {
                const double* __restrict__ xp = x.data();
                const double* __restrict__ dp = delta.data();
                double* __restrict__ dxp = dx.data();
                for (int64_t j = 0; j < x.size(); ++j) {
                    const double y = stable_sigmoid(xp[j]);
                    dxp[j] = dp[j] * y * (1.0 - y);
                }
                break;
            }
            case LayerKind::Flatten: {
                std::copy(delta.data(), delta.data() + delta.size(), dx.data());
                break;
            }
        }
    }
}

double bce_loss(double prediction, int target) {
    const double p = std::clamp(prediction, kBceClamp, 1.0 - kBceClamp);
    return target == 1 ? -std::log(p) : -std::log(1.0 - p);
}

double bce_dloss(double prediction, int target) {
    if (prediction < kBceClamp || prediction > 1.0 - kBceClamp) return 0.0;
    return target == 1 ? -1.0 / prediction : 1.0 / (1.0 - prediction);
}

}  // namespace pktclass
