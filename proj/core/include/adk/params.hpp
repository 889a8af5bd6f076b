#pragma once

#include <map>
#include <string>

#include "adk/checkpoint.hpp"
#include "adk/tensor.hpp"

namespace adk {

// Named learnable parameters. Initialization draws from a stream derived from
// (store seed, parameter name), so values do not depend on registration order.
template <class S>
class ParamStoreT {
public:
    explicit ParamStoreT(uint64_t seed) : seed_(seed) {}

    TensorT<S> zeros(const std::string& name, Shape shape) {
        return reg(name, TensorT<S>::zeros(std::move(shape)));
    }

    TensorT<S> constant(const std::string& name, Shape shape, double v) {
        return reg(name, TensorT<S>::full(std::move(shape), S(v)));
    }

    TensorT<S> randn(const std::string& name, Shape shape, double stdev) {
        Rng rng(Rng::mix(seed_, Rng::hash_str(name)));
        return reg(name, TensorT<S>::randn(std::move(shape), rng, stdev));
    }

    // He initialization for layers followed by SiLU-like activations.
    TensorT<S> he(const std::string& name, Shape shape, int64_t fan_in) {
        return randn(name, std::move(shape), std::sqrt(2.0 / double(fan_in)));
    }

    std::map<std::string, TensorT<S>>& params() { return params_; }
    const std::map<std::string, TensorT<S>>& params() const { return params_; }

    int64_t total_size() const {
        int64_t n = 0;
        for (const auto& [k, v] : params_) n += v.size();
        return n;
    }

    void zero_all_grads() {
        for (auto& [k, v] : params_) v.zero_grad();
    }

    // Overwrites parameter values from a checkpoint map; every parameter in
    // the store must be present with a matching shape.
    void load_values(const std::map<std::string, Tensor>& ck) {
        for (auto& [name, t] : params_) {
            auto it = ck.find(name);
            ADK_CHECK(it != ck.end(), "param store: checkpoint is missing '", name, "'");
            ADK_CHECK(it->second.shape() == t.shape(), "param store: '", name, "' shape ",
                      shape_str(it->second.shape()), " vs ", shape_str(t.shape()));
            for (int64_t i = 0; i < t.size(); ++i) t.data()[i] = S(it->second.data()[i]);
        }
    }

    std::vector<std::pair<std::string, Tensor>> snapshot_f32() const {
        std::vector<std::pair<std::string, Tensor>> out;
        for (const auto& [name, t] : params_) {
            auto f = Tensor::zeros(t.shape());
            for (int64_t i = 0; i < t.size(); ++i) f.data()[i] = float(t.data()[i]);
            out.emplace_back(name, std::move(f));
        }
        return out;
    }

private:
    TensorT<S> reg(const std::string& name, TensorT<S> t) {
        ADK_CHECK(!params_.count(name), "param store: duplicate parameter '", name, "'");
        t.set_requires_grad(true);
        params_.emplace(name, t);
        return t;
    }

    uint64_t seed_;
    std::map<std::string, TensorT<S>> params_;
};

using ParamStore = ParamStoreT<float>;

}  // namespace adk
