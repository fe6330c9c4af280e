#include "riskdp/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "riskdp/rng.hpp"

namespace riskdp {

namespace {

double elu(double x) { return x > 0.0 ? x : std::expm1(x); }
double elu_grad(double x) { return x > 0.0 ? 1.0 : std::exp(x); }

}  // namespace

Mlp::Mlp(int input_dim, const MlpShape& shape, std::uint64_t seed)
    : input_dim_(input_dim) {
    if (input_dim < 1) throw ValidationError("mlp: input_dim must be >= 1");
    if (shape.activation != "elu")
        throw ValidationError("mlp: unsupported activation '" + shape.activation + "'");
    sizes_.push_back(input_dim);
    for (int h : shape.hidden) {
        if (h < 1) throw ValidationError("mlp: hidden width must be >= 1");
        sizes_.push_back(h);
    }
    sizes_.push_back(1);

    std::size_t count = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l)
        count += static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1] + sizes_[l + 1];
    params_.resize(count);

    Rng rng(seed);
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        const int fan_in = sizes_[l], fan_out = sizes_[l + 1];
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        for (int idx = 0; idx < fan_in * fan_out; ++idx)
            params_[off++] = rng.uniform(-bound, bound);
        for (int idx = 0; idx < fan_out; ++idx) params_[off++] = 0.0;
    }
}

Mlp Mlp::from_flat(std::vector<int> sizes, std::vector<double> params) {
    if (sizes.size() < 2 || sizes.back() != 1)
        throw ValidationError("mlp: serialized layer sizes invalid");
    Mlp net;
    net.sizes_ = std::move(sizes);
    net.input_dim_ = net.sizes_.front();
    std::size_t count = 0;
    for (std::size_t l = 0; l + 1 < net.sizes_.size(); ++l)
        count += static_cast<std::size_t>(net.sizes_[l]) * net.sizes_[l + 1] +
                 net.sizes_[l + 1];
    if (params.size() != count)
        throw ValidationError("mlp: serialized weight count does not match shape");
    net.params_ = std::move(params);
    return net;
}

std::size_t Mlp::layer_offset(std::size_t layer) const {
    std::size_t off = 0;
    for (std::size_t l = 0; l < layer; ++l)
        off += static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1] + sizes_[l + 1];
    return off;
}

double Mlp::forward(std::span<const double> x) const {
    double unused;
    return forward_with_input_grad(x, -1, &unused);
}

double Mlp::forward_with_input_grad(std::span<const double> x, int q_index,
                                    double* dq) const {
    const std::size_t n_layers = sizes_.size();
    std::size_t act_total = 0;
    for (std::size_t l = 0; l < n_layers; ++l)
        act_total += static_cast<std::size_t>(sizes_[l]);
    act_.assign(act_total, 0.0);
    pre_.assign(act_total, 0.0);  // pre-activations, input slot unused

    std::copy(x.begin(), x.end(), act_.begin());
    std::size_t in_off = 0, param_off = 0;
    for (std::size_t l = 0; l + 1 < n_layers; ++l) {
        const int fan_in = sizes_[l], fan_out = sizes_[l + 1];
        const std::size_t out_off = in_off + static_cast<std::size_t>(fan_in);
        const double* w = params_.data() + param_off;
        const double* b = w + static_cast<std::size_t>(fan_in) * fan_out;
        const bool last = (l + 2 == n_layers);
        for (int o = 0; o < fan_out; ++o) {
            double z = b[o];
            const double* row = w + static_cast<std::size_t>(o) * fan_in;
            for (int in = 0; in < fan_in; ++in) z += row[in] * act_[in_off + in];
            pre_[out_off + o] = z;
            act_[out_off + o] = last ? z : elu(z);
        }
        param_off += static_cast<std::size_t>(fan_in) * fan_out + fan_out;
        in_off = out_off;
    }
    const double out = act_[in_off];

    if (q_index >= 0 && dq != nullptr) {
        // Backward pass through activations only, tracking d out / d input.
        delta_.assign(act_total, 0.0);
        delta_[in_off] = 1.0;
        std::size_t cur_off = in_off;
        for (std::size_t l = n_layers - 1; l-- > 0;) {
            const int fan_in = sizes_[l], fan_out = sizes_[l + 1];
            const std::size_t prev_off = cur_off - static_cast<std::size_t>(fan_in);
            const double* w = params_.data() + layer_offset(l);
            const bool last = (l + 2 == n_layers);
            for (int o = 0; o < fan_out; ++o) {
                const double dz = delta_[cur_off + o] *
                                  (last ? 1.0 : elu_grad(pre_[cur_off + o]));
                const double* row = w + static_cast<std::size_t>(o) * fan_in;
                for (int in = 0; in < fan_in; ++in)
                    delta_[prev_off + in] += dz * row[in];
            }
            cur_off = prev_off;
        }
        *dq = delta_[static_cast<std::size_t>(q_index)];
    }
    return out;
}

double Mlp::backward(std::span<const double> x, double factor,
                     std::span<double> grad) const {
    const std::size_t n_layers = sizes_.size();
    std::size_t act_total = 0;
    for (std::size_t l = 0; l < n_layers; ++l)
        act_total += static_cast<std::size_t>(sizes_[l]);
    act_.assign(act_total, 0.0);
    pre_.assign(act_total, 0.0);
    std::copy(x.begin(), x.end(), act_.begin());

    std::size_t in_off = 0, param_off = 0;
    for (std::size_t l = 0; l + 1 < n_layers; ++l) {
        const int fan_in = sizes_[l], fan_out = sizes_[l + 1];
        const std::size_t out_off = in_off + static_cast<std::size_t>(fan_in);
        const double* w = params_.data() + param_off;
        const double* b = w + static_cast<std::size_t>(fan_in) * fan_out;
        const bool last = (l + 2 == n_layers);
        for (int o = 0; o < fan_out; ++o) {
            double z = b[o];
            const double* row = w + static_cast<std::size_t>(o) * fan_in;
            for (int in = 0; in < fan_in; ++in) z += row[in] * act_[in_off + in];
            pre_[out_off + o] = z;
            act_[out_off + o] = last ? z : elu(z);
        }
        param_off += static_cast<std::size_t>(fan_in) * fan_out + fan_out;
        in_off = out_off;
    }
    const double out = act_[in_off];

    delta_.assign(act_total, 0.0);
    delta_[in_off] = factor;
    std::size_t cur_off = in_off;
    for (std::size_t l = n_layers - 1; l-- > 0;) {
        const int fan_in = sizes_[l], fan_out = sizes_[l + 1];
        const std::size_t prev_off = cur_off - static_cast<std::size_t>(fan_in);
        const std::size_t off = layer_offset(l);
        const double* w = params_.data() + off;
        double* gw = grad.data() + off;
        double* gb = gw + static_cast<std::size_t>(fan_in) * fan_out;
        const bool last = (l + 2 == n_layers);
        for (int o = 0; o < fan_out; ++o) {
            const double dz = delta_[cur_off + o] *
                              (last ? 1.0 : elu_grad(pre_[cur_off + o]));
            gb[o] += dz;
            const double* row = w + static_cast<std::size_t>(o) * fan_in;
            double* grow = gw + static_cast<std::size_t>(o) * fan_in;
            for (int in = 0; in < fan_in; ++in) {
                grow[in] += dz * act_[prev_off + in];
                delta_[prev_off + in] += dz * row[in];
            }
        }
        cur_off = prev_off;
    }
    return out;
}

}  // namespace riskdp
