#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "asql/attention.hpp"
#include "asql/layout.hpp"
#include "json.hpp"

namespace asql {

inline constexpr double kDiceEpsilon = 1e-8;

struct LossWeights {
    double att = 1.0;
    double size = 1.0;
    double loc_cross = 1.0;
    double loc_self = 1.0;
    double eta = 1.0;         // attribute leakage regularizer
    double clamp_eps = 1e-7;  // BCE predictions are clamped to [eps, 1 - eps]

    void validate() const;  // throws ValidationError
};

struct LossBreakdown {
    double att = 0.0;
    double size = 0.0;
    double loc_cross = 0.0;
    double loc_self = 0.0;
    double total = 0.0;

    friend bool operator==(const LossBreakdown&, const LossBreakdown&) = default;
};

// One entity's name token and its attribute tokens (columns of the cross tensor).
struct AttributeBinding {
    Eigen::Index entity_token = 0;
    std::vector<Eigen::Index> attribute_tokens;
};

struct LocationTarget {
    Eigen::Index token = 0;
    SoftMask mask;
};

// Everything the losses need besides the attention tensors.
struct GuidanceTargets {
    std::vector<AttributeBinding> attributes;  // one per entity, including those without attributes
    std::vector<Eigen::Index> size_order;      // entity tokens, increasing intended size
    std::vector<LocationTarget> locations;
    std::vector<SelfMask> self_masks;
};

// Every loss returns its value and, when `grad` is given, adds grad_scale * dL/d(input) to it.

// Mean BCE with the entity map as target and the attribute map as prediction, plus eta times
// the mean attribute mass outside the entity, averaged over attributes then entities.
double attribute_loss(const Eigen::MatrixXd& cross, std::span<const AttributeBinding> bindings, double eta,
                      double clamp_eps = 1e-7, Eigen::MatrixXd* grad = nullptr, double grad_scale = 1.0);

// Hinge on consecutive attention-mass pairs along the size order, divided by |V|.
double size_loss(const Eigen::MatrixXd& cross, std::span<const Eigen::Index> size_order,
                 Eigen::MatrixXd* grad = nullptr, double grad_scale = 1.0);

// Sum over targets of the 2-D Dice loss between a token map and its soft mask.
double loc_cross_loss(const Eigen::MatrixXd& cross, std::span<const LocationTarget> targets,
                      Eigen::MatrixXd* grad = nullptr, double grad_scale = 1.0);

// Sum over masks and slices of the Dice loss between self-attention slices and the 3-D mask.
// A slice where both operands are all zero contributes 0.
double loc_self_loss(const Eigen::MatrixXd& self_attn, std::span<const SelfMask> masks,
                     Eigen::MatrixXd* grad = nullptr, double grad_scale = 1.0);

LossBreakdown combine(const LossBreakdown& components, const LossWeights& weights);

LossBreakdown total_loss(const AttentionStack& attention, const GuidanceTargets& targets, const LossWeights& weights,
                         AttentionGradient* grad = nullptr);

nlohmann::json to_json(const LossBreakdown& losses);
nlohmann::json to_json(const LossWeights& weights);

}  // namespace asql
