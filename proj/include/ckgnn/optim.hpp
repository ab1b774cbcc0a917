#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ckgnn/tensor.hpp"

namespace ckgnn {

struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    long t = 0;

    static AdamState like(const std::vector<Tensor*>& params) {
        AdamState s;
        s.m.reserve(params.size());
        s.v.reserve(params.size());
        for (const Tensor* p : params) {
            s.m.emplace_back(p->rows, p->cols);
            s.v.emplace_back(p->rows, p->cols);
        }
        return s;
    }
};

// Adam with bias correction. Updates params in place; grads must align with
// params one-to-one in order and shape.
inline void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
                      AdamState& state, double lr, double beta1 = 0.9, double beta2 = 0.999,
                      double eps = 1e-8) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw std::invalid_argument("adam_step: parameter/gradient/state count mismatch");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& theta = *params[p];
        const Tensor& g = grads[p];
        if (!theta.same_shape(g))
            throw std::invalid_argument("adam_step: gradient shape mismatch at parameter " +
                                        std::to_string(p));
        Tensor& m = state.m[p];
        Tensor& v = state.v[p];
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m.data[i] = beta1 * m.data[i] + (1.0 - beta1) * g.data[i];
            v.data[i] = beta2 * v.data[i] + (1.0 - beta2) * g.data[i] * g.data[i];
            const double m_hat = m.data[i] / bc1;
            const double v_hat = v.data[i] / bc2;
            theta.data[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
    }
}

}  // namespace ckgnn
