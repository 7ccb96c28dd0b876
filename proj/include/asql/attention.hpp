#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Dense>

#include "asql/grid.hpp"

namespace asql {

inline constexpr double kDefaultBeta = 100.0;

// Attention maps the guidance losses consume.
//   cross:     (H'W') x n, column t is token t's map flattened row-major, entries in [0, 1]
//   self_attn: (H'W') x (H'W'), row s is the s-th H' x W' slice flattened row-major
struct AttentionStack {
    GridDims dims;
    Eigen::MatrixXd cross;
    Eigen::MatrixXd self_attn;

    Eigen::Index locations() const { return static_cast<Eigen::Index>(dims.cells()); }
    Eigen::Index tokens() const { return cross.cols(); }
};

// Gradient of a scalar loss with respect to the two attention tensors.
struct AttentionGradient {
    Eigen::MatrixXd cross;
    Eigen::MatrixXd self_attn;

    static AttentionGradient zeros_like(const AttentionStack& a) {
        return {Eigen::MatrixXd::Zero(a.cross.rows(), a.cross.cols()),
                Eigen::MatrixXd::Zero(a.self_attn.rows(), a.self_attn.cols())};
    }
};

// Desk-scale stand-in for the denoiser: attention is computed from an optimizable latent x
// through a frozen query projection and frozen token keys.
struct SyntheticLatent {
    GridDims dims;
    Eigen::MatrixXd x;       // (H'W') x d, optimized
    Eigen::MatrixXd w_q;     // d x d, frozen
    Eigen::MatrixXd keys;    // n x d, frozen

    Eigen::Index dim() const { return x.cols(); }
};

inline constexpr std::uint64_t kProjectionSeed = 0x5eed'a5c1'0001ULL;

// Latent drawn N(0, 1) from `latent_seed`; W_q and K drawn N(0, 1/d) from kProjectionSeed.
SyntheticLatent make_latent(GridDims dims, Eigen::Index tokens, Eigen::Index d, std::uint64_t latent_seed);

// Portable standard normal draws (mt19937_64 + Box-Muller), identical on every platform.
Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double stddev = 1.0);

Eigen::MatrixXd sigmoid_attention(const Eigen::MatrixXd& scores, double beta = kDefaultBeta);

AttentionStack forward(const SyntheticLatent& latent, double beta = kDefaultBeta);

// Chain rule from attention-level gradients back to the latent x.
Eigen::MatrixXd backward(const SyntheticLatent& latent, const AttentionStack& stack, const AttentionGradient& grad,
                         double beta = kDefaultBeta);

// Max entrywise |analytic - numeric| / (|numeric| + 1e-8) against central differences of f.
double grad_check(const std::function<double(const Eigen::MatrixXd&)>& f, const Eigen::MatrixXd& analytic,
                  const Eigen::MatrixXd& at, double epsilon = 1e-4);

}  // namespace asql
