#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "asql/attention.hpp"
#include "asql/layout.hpp"
#include "asql/losses.hpp"
#include "asql/provider.hpp"
#include "asql/scene_graph.hpp"

namespace asql {

struct OptimizeConfig {
    double alpha = 0.1;
    int steps = 200;
    int timesteps = 50;         // informational: length of the sampler schedule being emulated
    int inner_iterations = 1;   // gradient updates per recorded step
    LossWeights weights;
    double beta = kDefaultBeta;
    std::uint64_t seed = 0;
    bool per_subregion = false;
    std::optional<double> loss_threshold;  // stop once the total loss is at or below this
    Eigen::Index latent_dim = 16;
    std::optional<GridDims> resolution;    // attention resolution; defaults to the plan grid

    void validate() const;  // throws ValidationError
};

// Which cross-attention column carries each entity name and attribute.
struct TokenMap {
    std::vector<Eigen::Index> entity;                  // by entity id - 1
    std::vector<std::vector<Eigen::Index>> attribute;  // by entity id - 1, aligned with attributes
    Eigen::Index token_count = 0;

    // Uses the graph's token indices when present; otherwise lays tokens out sequentially,
    // each entity name followed by its attributes, in document order.
    static TokenMap from_graph(const SceneGraph& graph);
};

// Masks and targets derived once from a plan and reused by every step.
struct PlanContext {
    GridDims resolution;
    AssignmentGrid assignment;
    TokenMap tokens;
    GuidanceTargets targets;
    std::vector<Grid<std::uint8_t>> regions;  // whole-entity regions at `resolution`, by id - 1
};

PlanContext build_context(const SceneGraph& graph, const GuidancePlan& plan, GridDims resolution, bool per_subregion);

// Share of a map's mass inside a binary region; 0 for an all-zero map.
double mass_in_region(const Eigen::VectorXd& map, const Grid<std::uint8_t>& region);

// forward -> losses -> chain rule -> x -= alpha * grad. Returns the losses before the update.
// Throws NonFiniteError naming `step_index` if the loss or gradient is not finite.
LossBreakdown step(SyntheticLatent& latent, const PlanContext& context, const OptimizeConfig& config,
                   int step_index = 0);

struct StepRecord {
    int step = 0;
    LossBreakdown losses;
    std::vector<double> mass;  // by entity id - 1

    friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct Trajectory {
    std::vector<StepRecord> records;  // state before each update
    AttentionStack final_attention;
    LossBreakdown final_losses;
    std::vector<double> final_mass;
};

Trajectory run(const SceneGraph& graph, const GuidancePlan& plan, const OptimizeConfig& config);

// One JSON object per line: {"step":k,"losses":{...},"mass":{"<entity id>":value}}.
void write_trajectory(std::ostream& out, const Trajectory& trajectory);

}  // namespace asql
