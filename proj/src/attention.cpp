#include "asql/attention.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "asql/errors.hpp"

namespace asql {

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double stddev) {
    std::mt19937_64 rng(seed);
    auto uniform = [&rng] {
        // (0, 1], 53 random bits
        return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
    };
    Eigen::MatrixXd m(rows, cols);
    const Eigen::Index total = rows * cols;
    for (Eigen::Index k = 0; k < total; k += 2) {
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double theta = 2.0 * std::numbers::pi * uniform();
        m(k / cols, k % cols) = stddev * r * std::cos(theta);
        if (k + 1 < total) m((k + 1) / cols, (k + 1) % cols) = stddev * r * std::sin(theta);
    }
    return m;
}

SyntheticLatent make_latent(GridDims dims, Eigen::Index tokens, Eigen::Index d, std::uint64_t latent_seed) {
    if (dims.cells() == 0 || tokens < 1 || d < 1) throw ShapeError("latent dimensions must be positive");
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    SyntheticLatent latent;
    latent.dims = dims;
    latent.x = gaussian_matrix(static_cast<Eigen::Index>(dims.cells()), d, latent_seed);
    latent.w_q = gaussian_matrix(d, d, kProjectionSeed, scale);
    latent.keys = gaussian_matrix(tokens, d, kProjectionSeed + 1, scale);
    return latent;
}

Eigen::MatrixXd sigmoid_attention(const Eigen::MatrixXd& scores, double beta) {
    if (!(beta > 0.0)) throw ShapeError("beta must be positive");
    return scores.unaryExpr([beta](double s) { return 1.0 / (1.0 + std::exp(-beta * s)); });
}

namespace {

Eigen::MatrixXd row_softmax(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd p(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double peak = logits.row(r).maxCoeff();
        p.row(r) = (logits.row(r).array() - peak).exp().matrix();
        p.row(r) /= p.row(r).sum();
    }
    return p;
}

}  // namespace

AttentionStack forward(const SyntheticLatent& latent, double beta) {
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(latent.dim()));
    const Eigen::MatrixXd q = latent.x * latent.w_q;
    AttentionStack stack;
    stack.dims = latent.dims;
    stack.cross = sigmoid_attention(q * latent.keys.transpose() * inv_sqrt_d, beta);
    stack.self_attn = row_softmax(q * q.transpose() * inv_sqrt_d);
    return stack;
}

Eigen::MatrixXd backward(const SyntheticLatent& latent, const AttentionStack& stack, const AttentionGradient& grad,
                         double beta) {
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(latent.dim()));
    const Eigen::MatrixXd q = latent.x * latent.w_q;

    // cross = sigma(beta * Q K^T / sqrt d)
    const Eigen::MatrixXd d_scores =
        (beta * inv_sqrt_d) * (grad.cross.array() * stack.cross.array() * (1.0 - stack.cross.array())).matrix();
    Eigen::MatrixXd d_q = d_scores * latent.keys;

    // self = rowsoftmax(Q Q^T / sqrt d)
    const auto& p = stack.self_attn;
    const Eigen::VectorXd inner = (grad.self_attn.array() * p.array()).rowwise().sum();
    const Eigen::MatrixXd d_logits = (p.array() * (grad.self_attn.colwise() - inner).array()).matrix();
    d_q += inv_sqrt_d * (d_logits + d_logits.transpose()) * q;

    return d_q * latent.w_q.transpose();
}

double grad_check(const std::function<double(const Eigen::MatrixXd&)>& f, const Eigen::MatrixXd& analytic,
                  const Eigen::MatrixXd& at, double epsilon) {
    if (analytic.rows() != at.rows() || analytic.cols() != at.cols()) throw ShapeError("gradient shape mismatch");
    Eigen::MatrixXd probe = at;
    double worst = 0.0;
    for (Eigen::Index c = 0; c < at.cols(); ++c) {
        for (Eigen::Index r = 0; r < at.rows(); ++r) {
            const double orig = probe(r, c);
            probe(r, c) = orig + epsilon;
            const double up = f(probe);
            probe(r, c) = orig - epsilon;
            const double down = f(probe);
            probe(r, c) = orig;
            const double numeric = (up - down) / (2.0 * epsilon);
            worst = std::max(worst, std::abs(analytic(r, c) - numeric) / (std::abs(numeric) + 1e-8));
        }
    }
    return worst;
}

}  // namespace asql
