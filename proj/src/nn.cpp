#include "rentcast/nn.hpp"

#include <algorithm>
#include <cmath>

namespace rentcast::nn {

void init_uniform_fan_in(Parameter& p, int fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(double(fan_in));
    for (double& x : p.value.data) x = rng.uniform(-bound, bound);
}

Linear::Linear(const std::string& name, int in, int out, Rng& rng, Init init)
    : weight_(name + ".weight", out, in), bias_(name + ".bias", 1, out) {
    if (init == Init::He) {
        const double bound = std::sqrt(6.0 / double(in));
        for (double& x : weight_.value.data) x = rng.uniform(-bound, bound);
        return;
    }
    init_uniform_fan_in(weight_, in, rng);
    init_uniform_fan_in(bias_, in, rng);
}

Var Linear::operator()(Graph& g, Var x) { return ag::linear(g, x, g.param(weight_), g.param(bias_)); }

void Linear::collect(std::vector<Parameter*>& out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
}

LayerNorm::LayerNorm(const std::string& name, int width)
    : gain_(name + ".gain", 1, width), bias_(name + ".bias", 1, width) {
    std::fill(gain_.value.data.begin(), gain_.value.data.end(), 1.0);
}

Var LayerNorm::operator()(Graph& g, Var x) { return ag::layer_norm(g, x, g.param(gain_), g.param(bias_)); }

void LayerNorm::collect(std::vector<Parameter*>& out) {
    out.push_back(&gain_);
    out.push_back(&bias_);
}

std::size_t count_parameters(const std::vector<Parameter*>& params) {
    std::size_t n = 0;
    for (const Parameter* p : params) n += p->value.size();
    return n;
}

}  // namespace rentcast::nn
