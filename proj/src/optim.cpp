#include "pktclass/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace pktclass {

std::string to_string(OptimizerKind kind) {
    return kind == OptimizerKind::Adam ? "adam" : "sgd";
}

OptimizerKind optimizer_from_string(const std::string& s) {
    if (s == "adam") return OptimizerKind::Adam;
    if (s == "sgd") return OptimizerKind::Sgd;
    throw std::invalid_argument("unknown optimizer '" + s + "' (expected adam|sgd)");
}

void optimizer_step(OptimizerState& state, std::vector<Tensor>& params,
                    const std::vector<Tensor>& grads) {
    if (params.size() != grads.size())
        throw std::invalid_argument("optimizer_step: param/grad count mismatch");
    for (size_t p = 0; p < params.size(); ++p) {
        if (!params[p].same_shape(grads[p]))
            throw std::invalid_argument("optimizer_step: shape mismatch at parameter " +
                                        std::to_string(p));
        if (!grads[p].all_finite())
            throw std::runtime_error("optimizer_step: non-finite gradient at parameter " +
                                     std::to_string(p));
    }

    if (state.kind == OptimizerKind::Sgd) {
        ++state.step;
        for (size_t p = 0; p < params.size(); ++p) {
            double* w = params[p].data();
            const double* g = grads[p].data();
            const int64_t n = params[p].size();
            for (int64_t i = 0; i < n; ++i) w[i] -= state.learning_rate * g[i];
        }
        return;
    }

    if (state.m.empty()) {
        state.m.reserve(params.size());
        state.v.reserve(params.size());
        for (const Tensor& t : params) {
            state.m.emplace_back(t.shape());
            state.v.emplace_back(t.shape());
        }
    }
    if (state.m.size() != params.size())
        throw std::invalid_argument("optimizer_step: moment/param count mismatch");

    ++state.step;
    const double b1 = state.beta1;
    const double b2 = state.beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (size_t p = 0; p < params.size(); ++p) {
        double* w = params[p].data();
        const double* g = grads[p].data();
        double* m = state.m[p].data();
        double* v = state.v[p].data();
        const int64_t n = params[p].size();
        for (int64_t i = 0; i < n; ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            const double mhat = m[i] / corr1;
            const double vhat = v[i] / corr2;
            w[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
        }
    }
}

}  // namespace pktclass
