#pragma once

#include <string>
#include <vector>

#include "rentcast/autograd.hpp"
#include "rentcast/random.hpp"

namespace rentcast::nn {

using ag::Graph;
using ag::Matrix;
using ag::Parameter;
using ag::Var;

/// Fan-in uniform init: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
void init_uniform_fan_in(Parameter& p, int fan_in, Rng& rng);

/// Affine layer y = x W^T + b with W [out, in].
class Linear {
public:
    /// FanIn: weights and bias U(-1/sqrt(in), 1/sqrt(in)).
    /// He: weights U(-sqrt(6/in), sqrt(6/in)), zero bias; for layers feeding a ReLU.
    enum class Init { FanIn, He };

    Linear() = default;
    Linear(const std::string& name, int in, int out, Rng& rng, Init init = Init::FanIn);

    Var operator()(Graph& g, Var x);
    int in_features() const { return weight_.value.cols; }
    int out_features() const { return weight_.value.rows; }
    void collect(std::vector<Parameter*>& out);

    Parameter& weight() { return weight_; }
    Parameter& bias() { return bias_; }

private:
    Parameter weight_;
    Parameter bias_;
};

/// Learned per-feature gain and bias around ag::layer_norm.
class LayerNorm {
public:
    LayerNorm() = default;
    LayerNorm(const std::string& name, int width);

    Var operator()(Graph& g, Var x);
    void collect(std::vector<Parameter*>& out);

private:
    Parameter gain_;
    Parameter bias_;
};

std::size_t count_parameters(const std::vector<Parameter*>& params);

}  // namespace rentcast::nn
