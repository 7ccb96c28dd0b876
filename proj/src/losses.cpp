#include "asql/losses.hpp"

#include <algorithm>
#include <cmath>

#include "asql/errors.hpp"

namespace asql {

void LossWeights::validate() const {
    for (double w : {att, size, loc_cross, loc_self, eta}) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("loss weights must be finite and non-negative");
    }
    if (!(clamp_eps > 0.0 && clamp_eps < 0.5)) throw ValidationError("clamp epsilon must lie in (0, 0.5)");
}

namespace {

void check_token(const Eigen::MatrixXd& cross, Eigen::Index token) {
    if (token < 0 || token >= cross.cols())
        throw ShapeError("token " + std::to_string(token) + " outside the " + std::to_string(cross.cols()) +
                         " attention columns");
}

}  // namespace

double attribute_loss(const Eigen::MatrixXd& cross, std::span<const AttributeBinding> bindings, double eta,
                      double clamp_eps, Eigen::MatrixXd* grad, double grad_scale) {
    if (bindings.empty()) return 0.0;
    if (grad && (grad->rows() != cross.rows() || grad->cols() != cross.cols()))
        throw ShapeError("gradient buffer does not match the cross-attention shape");
    const double cells = static_cast<double>(cross.rows());
    const double entity_weight = 1.0 / static_cast<double>(bindings.size());
    const double lo = clamp_eps, hi = 1.0 - clamp_eps;

    double loss = 0.0;
    for (const auto& b : bindings) {
        check_token(cross, b.entity_token);
        if (b.attribute_tokens.empty()) continue;
        const double w = entity_weight / static_cast<double>(b.attribute_tokens.size());
        const auto target = cross.col(b.entity_token);

        for (Eigen::Index a : b.attribute_tokens) {
            check_token(cross, a);
            const auto pred = cross.col(a);
            double bce = 0.0, leak = 0.0;
            for (Eigen::Index k = 0; k < cross.rows(); ++k) {
                const double t = target(k);
                const double p = std::clamp(pred(k), lo, hi);
                bce -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
                leak += pred(k) * (1.0 - t);
            }
            loss += w * (bce + eta * leak) / cells;

            if (grad) {
                const double g = grad_scale * w / cells;
                for (Eigen::Index k = 0; k < cross.rows(); ++k) {
                    const double t = target(k);
                    const double raw = pred(k);
                    const double p = std::clamp(raw, lo, hi);
                    const bool clamped = raw < lo || raw > hi;
                    const double d_pred = (clamped ? 0.0 : (p - t) / (p * (1.0 - p))) + eta * (1.0 - t);
                    const double d_target = -(std::log(p) - std::log(1.0 - p)) - eta * raw;
                    (*grad)(k, a) += g * d_pred;
                    (*grad)(k, b.entity_token) += g * d_target;
                }
            }
        }
    }
    return loss;
}

double size_loss(const Eigen::MatrixXd& cross, std::span<const Eigen::Index> size_order, Eigen::MatrixXd* grad,
                 double grad_scale) {
    if (size_order.size() < 2) return 0.0;
    const double inv_v = 1.0 / static_cast<double>(size_order.size());
    double loss = 0.0;
    for (std::size_t k = 0; k + 1 < size_order.size(); ++k) {
        const auto small = size_order[k], large = size_order[k + 1];
        check_token(cross, small);
        check_token(cross, large);
        const double gap = cross.col(small).sum() - cross.col(large).sum();
        if (gap <= 0.0) continue;
        loss += gap * inv_v;
        if (grad) {
            grad->col(small).array() += grad_scale * inv_v;
            grad->col(large).array() -= grad_scale * inv_v;
        }
    }
    return loss;
}

double loc_cross_loss(const Eigen::MatrixXd& cross, std::span<const LocationTarget> targets, Eigen::MatrixXd* grad,
                      double grad_scale) {
    double loss = 0.0;
    for (const auto& t : targets) {
        check_token(cross, t.token);
        if (t.mask.values.size() != cross.rows())
            throw ShapeError("mask of entity " + std::to_string(t.mask.entity_id) + " has " +
                             std::to_string(t.mask.values.size()) + " cells, attention has " +
                             std::to_string(cross.rows()));
        const auto a = cross.col(t.token);
        const auto& g = t.mask.values;
        const double inter = a.dot(g);
        const double denom = a.sum() + g.sum() + kDiceEpsilon;
        loss += 1.0 - 2.0 * inter / denom;
        if (grad) {
            // d/da_k [1 - 2 I / D] = -2 (g_k D - I) / D^2
            grad->col(t.token) += (grad_scale * -2.0 / (denom * denom)) * (g.array() * denom - inter).matrix();
        }
    }
    return loss;
}

double loc_self_loss(const Eigen::MatrixXd& self_attn, std::span<const SelfMask> masks, Eigen::MatrixXd* grad,
                     double grad_scale) {
    const Eigen::Index slices = self_attn.rows();
    double loss = 0.0;
    for (const auto& m : masks) {
        const auto& g = m.factor();
        if (self_attn.cols() != slices || g.size() != slices)
            throw ShapeError("self-attention and 3-D mask of entity " + std::to_string(m.entity_id()) +
                             " differ in shape");
        const double g_sum = g.sum();
        const Eigen::VectorXd attn_dot_g = self_attn * g;
        const Eigen::VectorXd attn_sum = self_attn.rowwise().sum();
        for (Eigen::Index s = 0; s < slices; ++s) {
            const double mask_sum = g(s) * g_sum;
            if (attn_sum(s) == 0.0 && mask_sum == 0.0 && self_attn.row(s).isZero(0.0)) continue;
            const double inter = g(s) * attn_dot_g(s);
            const double denom = attn_sum(s) + mask_sum + kDiceEpsilon;
            loss += 1.0 - 2.0 * inter / denom;
            if (grad) {
                grad->row(s) += (grad_scale * -2.0 / (denom * denom)) * (g.transpose().array() * (g(s) * denom) - inter).matrix();
            }
        }
    }
    return loss;
}

LossBreakdown combine(const LossBreakdown& c, const LossWeights& w) {
    LossBreakdown out = c;
    out.total = w.att * c.att + w.size * c.size + w.loc_cross * c.loc_cross + w.loc_self * c.loc_self;
    return out;
}

LossBreakdown total_loss(const AttentionStack& attention, const GuidanceTargets& targets, const LossWeights& weights,
                         AttentionGradient* grad) {
    weights.validate();
    Eigen::MatrixXd* d_cross = nullptr;
    Eigen::MatrixXd* d_self = nullptr;
    if (grad) {
        if (grad->cross.rows() != attention.cross.rows() || grad->cross.cols() != attention.cross.cols())
            grad->cross = Eigen::MatrixXd::Zero(attention.cross.rows(), attention.cross.cols());
        if (grad->self_attn.rows() != attention.self_attn.rows() || grad->self_attn.cols() != attention.self_attn.cols())
            grad->self_attn = Eigen::MatrixXd::Zero(attention.self_attn.rows(), attention.self_attn.cols());
        d_cross = &grad->cross;
        d_self = &grad->self_attn;
    }

    LossBreakdown parts;
    parts.att = attribute_loss(attention.cross, targets.attributes, weights.eta, weights.clamp_eps,
                               weights.att != 0.0 ? d_cross : nullptr, weights.att);
    parts.size = size_loss(attention.cross, targets.size_order, weights.size != 0.0 ? d_cross : nullptr, weights.size);
    parts.loc_cross = loc_cross_loss(attention.cross, targets.locations, weights.loc_cross != 0.0 ? d_cross : nullptr,
                                     weights.loc_cross);
    if (!targets.self_masks.empty()) {
        parts.loc_self = loc_self_loss(attention.self_attn, targets.self_masks,
                                       weights.loc_self != 0.0 ? d_self : nullptr, weights.loc_self);
    }
    return combine(parts, weights);
}

nlohmann::json to_json(const LossBreakdown& l) {
    return {{"att", l.att}, {"size", l.size}, {"loc_cross", l.loc_cross}, {"loc_self", l.loc_self}, {"total", l.total}};
}

nlohmann::json to_json(const LossWeights& w) {
    return {{"att", w.att},       {"size", w.size}, {"loc_cross", w.loc_cross}, {"loc_self", w.loc_self},
            {"eta", w.eta},       {"clamp_eps", w.clamp_eps}};
}

}  // namespace asql
