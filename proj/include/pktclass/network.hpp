#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pktclass/tensor.hpp"

namespace pktclass {

enum class LayerKind : uint8_t { Dense = 0, Conv1d, MaxPool1d, Relu, Sigmoid, Flatten };

std::string to_string(LayerKind kind);

struct LayerSpec {
    LayerKind kind = LayerKind::Relu;
    int units = 0;        // dense
    int filters = 0;      // conv1d
    int kernel_size = 0;  // conv1d
    int pool_size = 0;    // maxpool1d

    static LayerSpec dense(int units) { return {LayerKind::Dense, units, 0, 0, 0}; }
    static LayerSpec conv1d(int filters, int kernel_size) {
        return {LayerKind::Conv1d, 0, filters, kernel_size, 0};
    }
    static LayerSpec maxpool1d(int pool_size) { return {LayerKind::MaxPool1d, 0, 0, 0, pool_size}; }
    static LayerSpec relu() { return {LayerKind::Relu, 0, 0, 0, 0}; }
    static LayerSpec sigmoid() { return {LayerKind::Sigmoid, 0, 0, 0, 0}; }
    static LayerSpec flatten() { return {LayerKind::Flatten, 0, 0, 0, 0}; }
};

// Gaussian tensor, mean 0, std 0.05, from the mt19937_64 generator.
constexpr double kInitStddev = 0.05;
Tensor init_normal(const std::vector<int>& shape, uint64_t seed);

// Per-sample forward/backward scratch. A network under training keeps one
// workspace per worker thread; inference needs one per concurrent caller.
// Buffers are reused across samples once shapes settle.
struct Workspace {
    std::vector<Tensor> activations;  // activations[i] = input to layer i; back() = output
    std::vector<Tensor> deltas;       // backward scratch, one per activation
    bool forward_done = false;

    const Tensor& output() const { return activations.back(); }
};

// Feed-forward chain of the six supported layer kinds. Shapes are resolved
// and validated at construction; parameters live in declaration order
// (dense: W then b; conv: kernels then b).
class Network {
public:
    Network() = default;  // empty shell, assign before use
    Network(std::vector<int> input_shape, std::vector<LayerSpec> layers);

    void init_params(uint64_t seed);

    const std::vector<LayerSpec>& layers() const { return layers_; }
    const std::vector<int>& input_shape() const { return input_shape_; }
    const std::vector<int>& output_shape() const { return activation_shapes_.back(); }
    // activation_shapes()[i] is the output shape of layer i-1 (index 0 = input).
    const std::vector<std::vector<int>>& activation_shapes() const { return activation_shapes_; }

    std::vector<Tensor>& params() { return params_; }
    const std::vector<Tensor>& params() const { return params_; }
    const std::vector<bool>& param_is_bias() const { return param_is_bias_; }
    int64_t param_count() const;

    std::vector<Tensor> zero_grads() const;

    // Returns the network output; caches per-layer inputs in the workspace.
    const Tensor& forward(const Tensor& input, Workspace& ws) const;

    // Accumulates parameter gradients (+=) given d(loss)/d(output).
    // Requires a forward pass in the same workspace first.
    void backward(const Tensor& d_output, Workspace& ws, std::vector<Tensor>& grads) const;

private:
    std::vector<int> input_shape_;
    std::vector<LayerSpec> layers_;
    std::vector<std::vector<int>> activation_shapes_;
    std::vector<Tensor> params_;
    std::vector<bool> param_is_bias_;
    std::vector<int> first_param_of_layer_;  // -1 for parameterless layers
};

// Binary cross-entropy on a clamped prediction.
constexpr double kBceClamp = 1e-7;
double bce_loss(double prediction, int target);
// d(loss)/d(prediction); zero in the clamped regions.
double bce_dloss(double prediction, int target);

}  // namespace pktclass
