#pragma once
// Small fully-connected network used as the learned surrogate for the
// partial-expectation curves: input is one-hot state + one-hot action + a
// scaled scalar q, output is a single value. Written from scratch so that
// seeded training is bit-reproducible.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "riskdp/errors.hpp"

namespace riskdp {

struct MlpShape {
    std::vector<int> hidden = {64, 64};
    std::string activation = "elu";  // only ELU is implemented
};

class Mlp {
public:
    Mlp() = default;
    /// Glorot-uniform initialization from a dedicated seed.
    Mlp(int input_dim, const MlpShape& shape, std::uint64_t seed);

    int input_dim() const { return input_dim_; }
    const std::vector<int>& layer_sizes() const { return sizes_; }
    const std::vector<double>& weights() const { return params_; }
    std::vector<double>& weights() { return params_; }
    std::size_t n_params() const { return params_.size(); }

    double forward(std::span<const double> x) const;
    /// Forward pass that also returns d output / d x[q_index].
    double forward_with_input_grad(std::span<const double> x, int q_index,
                                   double* dq) const;

    /// Accumulates d output / d params into `grad`, scaled by `factor`.
    /// Returns the forward value.
    double backward(std::span<const double> x, double factor,
                    std::span<double> grad) const;

    /// Rebuild from serialized pieces (layer sizes include input and output).
    static Mlp from_flat(std::vector<int> sizes, std::vector<double> params);

private:
    int input_dim_ = 0;
    std::vector<int> sizes_;       // input, hidden..., 1
    std::vector<double> params_;   // per layer: weights row-major then biases
    // scratch reused across calls; Mlp is not safe for concurrent mutation
    mutable std::vector<double> act_, pre_, delta_;

    std::size_t layer_offset(std::size_t layer) const;
};

}  // namespace riskdp
