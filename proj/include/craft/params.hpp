#pragma once

#include <cmath>
#include <map>
#include <string>

#include "craft/matrix.hpp"

namespace craft {

template <typename Real>
struct AdamState {
    Mat<Real> m;
    Mat<Real> v;
    long step = 0;
};

// Named trainable parameters with matching gradient accumulators and
// per-parameter optimizer state. std::map keeps iteration order
// deterministic.
template <typename Real>
struct ParamStore {
    std::map<std::string, Mat<Real>> values;
    std::map<std::string, Mat<Real>> grads;
    std::map<std::string, AdamState<Real>> opt;

    void add(const std::string& name, Mat<Real> value) {
        if (values.count(name)) fail(ErrorKind::generic, "duplicate parameter: " + name);
        grads.emplace(name, Mat<Real>::zeros(value.rows, value.cols));
        values.emplace(name, std::move(value));
    }

    Mat<Real>& value(const std::string& name) {
        auto it = values.find(name);
        if (it == values.end()) fail(ErrorKind::generic, "unknown parameter: " + name);
        return it->second;
    }
    const Mat<Real>& value(const std::string& name) const {
        auto it = values.find(name);
        if (it == values.end()) fail(ErrorKind::generic, "unknown parameter: " + name);
        return it->second;
    }
    Mat<Real>& grad(const std::string& name) { return grads.at(name); }

    void zero_grads() {
        for (auto& [name, g] : grads) g.fill(Real(0));
    }

    // Scale all gradients (used to average over a batch).
    void scale_grads(Real s) {
        for (auto& [name, g] : grads)
            for (auto& v : g.data) v *= s;
    }

    Real grad_norm() const {
        Real s = 0;
        for (const auto& [name, g] : grads) s += g.squared_norm();
        return std::sqrt(s);
    }
};

// Scales gradients so their global norm is at most `clip` (no-op when
// clip <= 0); returns the pre-clip norm.
template <typename Real>
Real clip_gradients(ParamStore<Real>& store, Real clip) {
    Real norm = store.grad_norm();
    if (clip > 0 && norm > clip) store.scale_grads(clip / norm);
    return norm;
}

// Global-norm clipping followed by one Adam update; gradients are zeroed
// afterward.
template <typename Real>
void adam_step(ParamStore<Real>& store, Real lr, Real clip,
               Real beta1 = Real(0.9), Real beta2 = Real(0.999),
               Real eps = Real(1e-8)) {
    for (const auto& [name, g] : store.grads)
        if (!g.all_finite())
            fail(ErrorKind::numeric, "non-finite gradient in parameter '" + name + "'");

    clip_gradients(store, clip);

    for (auto& [name, value] : store.values) {
        Mat<Real>& g = store.grads.at(name);
        AdamState<Real>& st = store.opt[name];
        if (st.m.size() == 0) {
            st.m = Mat<Real>::zeros(value.rows, value.cols);
            st.v = Mat<Real>::zeros(value.rows, value.cols);
        }
        st.step += 1;
        Real bc1 = Real(1) - std::pow(beta1, Real(st.step));
        Real bc2 = Real(1) - std::pow(beta2, Real(st.step));
        for (std::size_t i = 0; i < value.size(); ++i) {
            Real gi = g.data[i];
            st.m.data[i] = beta1 * st.m.data[i] + (Real(1) - beta1) * gi;
            st.v.data[i] = beta2 * st.v.data[i] + (Real(1) - beta2) * gi * gi;
            Real mhat = st.m.data[i] / bc1;
            Real vhat = st.v.data[i] / bc2;
            value.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
    store.zero_grads();
}

}  // namespace craft
