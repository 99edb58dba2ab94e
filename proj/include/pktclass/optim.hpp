#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pktclass/tensor.hpp"

namespace pktclass {

enum class OptimizerKind : uint8_t { Adam = 0, Sgd = 1 };

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(const std::string& s);

struct OptimizerState {
    OptimizerKind kind = OptimizerKind::Adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    uint64_t step = 0;
    std::vector<Tensor> m;  // first moments, Adam only
    std::vector<Tensor> v;  // second moments, Adam only

    static OptimizerState adam(double lr = 1e-3) {
        OptimizerState s;
        s.kind = OptimizerKind::Adam;
        s.learning_rate = lr;
        return s;
    }
    static OptimizerState sgd(double lr) {
        OptimizerState s;
        s.kind = OptimizerKind::Sgd;
        s.learning_rate = lr;
        return s;
    }
};

// One update. Adam keeps bias-corrected moment estimates; SGD is plain
// p -= lr * g. Throws on non-finite gradients.
void optimizer_step(OptimizerState& state, std::vector<Tensor>& params,
                    const std::vector<Tensor>& grads);

}  // namespace pktclass
