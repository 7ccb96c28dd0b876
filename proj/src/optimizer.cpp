#include "asql/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "asql/errors.hpp"

namespace asql {

void OptimizeConfig::validate() const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ValidationError("alpha must be finite and non-negative");
    if (steps < 1) throw ValidationError("steps must be at least 1");
    if (inner_iterations < 1) throw ValidationError("inner_iterations must be at least 1");
    if (!(beta > 0.0)) throw ValidationError("beta must be positive");
    if (latent_dim < 1) throw ValidationError("latent dimension must be positive");
    if (resolution && (resolution->height < 1 || resolution->width < 1))
        throw ValidationError("attention resolution must be positive");
    weights.validate();
}

TokenMap TokenMap::from_graph(const SceneGraph& graph) {
    const auto n = graph.entities.size();
    TokenMap map;
    map.entity.resize(n);
    map.attribute.resize(n);
    Eigen::Index next = 0;
    for (const auto& e : graph.entities) {
        const auto k = static_cast<std::size_t>(e.id - 1);
        if (graph.has_token_indices()) {
            map.entity[k] = *e.token_index;
            if (e.attribute_token_indices.size() != e.attributes.size())
                throw ValidationError("entity " + std::to_string(e.id) + " has attributes without token indices");
            map.attribute[k].assign(e.attribute_token_indices.begin(), e.attribute_token_indices.end());
        } else {
            map.entity[k] = next++;
            for (std::size_t a = 0; a < e.attributes.size(); ++a) map.attribute[k].push_back(next++);
        }
    }
    for (std::size_t k = 0; k < n; ++k) {
        map.token_count = std::max(map.token_count, map.entity[k] + 1);
        for (auto t : map.attribute[k]) map.token_count = std::max(map.token_count, t + 1);
    }
    return map;
}

PlanContext build_context(const SceneGraph& graph, const GuidancePlan& plan, GridDims resolution, bool per_subregion) {
    validate_plan(plan, graph);
    PlanContext ctx;
    ctx.resolution = resolution;
    ctx.assignment = build_assignment(plan, graph);
    ctx.tokens = TokenMap::from_graph(graph);

    const auto n = graph.entities.size();
    for (std::size_t k = 0; k < n; ++k)
        ctx.targets.attributes.push_back({ctx.tokens.entity[k], ctx.tokens.attribute[k]});
    for (EntityId id : plan.size_order) ctx.targets.size_order.push_back(ctx.tokens.entity[static_cast<std::size_t>(id - 1)]);

    for (const auto& e : graph.entities) {
        const auto token = ctx.tokens.entity[static_cast<std::size_t>(e.id - 1)];
        if (per_subregion) {
            for (int sub = 1; sub <= e.quantity; ++sub) {
                auto mask = soft_mask(ctx.assignment, e.id, sub, resolution);
                ctx.targets.self_masks.emplace_back(mask);
                ctx.targets.locations.push_back({token, std::move(mask)});
            }
        } else {
            auto mask = soft_mask(ctx.assignment, e.id, std::nullopt, resolution);
            ctx.targets.self_masks.emplace_back(mask);
            ctx.targets.locations.push_back({token, std::move(mask)});
        }
    }

    ctx.regions.resize(n);
    for (const auto& e : graph.entities)
        ctx.regions[static_cast<std::size_t>(e.id - 1)] = resample_nearest(region_mask(ctx.assignment, e.id), resolution);
    return ctx;
}

double mass_in_region(const Eigen::VectorXd& map, const Grid<std::uint8_t>& region) {
    if (static_cast<std::size_t>(map.size()) != region.size()) throw ShapeError("map and region differ in size");
    double inside = 0.0, total = 0.0;
    for (Eigen::Index k = 0; k < map.size(); ++k) {
        total += map(k);
        if (region.data()[static_cast<std::size_t>(k)]) inside += map(k);
    }
    return total == 0.0 ? 0.0 : inside / total;
}

namespace {

std::vector<double> entity_mass(const AttentionStack& attention, const PlanContext& ctx) {
    std::vector<double> mass(ctx.regions.size());
    for (std::size_t k = 0; k < mass.size(); ++k)
        mass[k] = mass_in_region(attention.cross.col(ctx.tokens.entity[k]), ctx.regions[k]);
    return mass;
}

bool finite(const LossBreakdown& l) {
    return std::isfinite(l.att) && std::isfinite(l.size) && std::isfinite(l.loc_cross) && std::isfinite(l.loc_self) &&
           std::isfinite(l.total);
}

}  // namespace

LossBreakdown step(SyntheticLatent& latent, const PlanContext& context, const OptimizeConfig& config, int step_index) {
    const auto attention = forward(latent, config.beta);
    AttentionGradient grad = AttentionGradient::zeros_like(attention);
    const auto losses = total_loss(attention, context.targets, config.weights, &grad);
    if (!finite(losses)) throw NonFiniteError("non-finite loss at step " + std::to_string(step_index));

    const Eigen::MatrixXd d_x = backward(latent, attention, grad, config.beta);
    if (!d_x.allFinite()) throw NonFiniteError("non-finite gradient at step " + std::to_string(step_index));
    if (config.alpha != 0.0) latent.x -= config.alpha * d_x;
    return losses;
}

Trajectory run(const SceneGraph& graph, const GuidancePlan& plan, const OptimizeConfig& config) {
    config.validate();
    const GridDims resolution = config.resolution.value_or(plan.dims());
    const auto ctx = build_context(graph, plan, resolution, config.per_subregion);
    auto latent = make_latent(resolution, ctx.tokens.token_count, config.latent_dim, config.seed);

    Trajectory traj;
    traj.records.reserve(static_cast<std::size_t>(config.steps));
    for (int k = 0; k < config.steps; ++k) {
        StepRecord rec;
        rec.step = k;
        rec.mass = entity_mass(forward(latent, config.beta), ctx);
        rec.losses = step(latent, ctx, config, k);
        const bool done = config.loss_threshold && rec.losses.total <= *config.loss_threshold;
        traj.records.push_back(std::move(rec));
        if (done) break;
        for (int inner = 1; inner < config.inner_iterations; ++inner) step(latent, ctx, config, k);
    }

    traj.final_attention = forward(latent, config.beta);
    traj.final_losses = total_loss(traj.final_attention, ctx.targets, config.weights);
    traj.final_mass = entity_mass(traj.final_attention, ctx);
    return traj;
}

void write_trajectory(std::ostream& out, const Trajectory& trajectory) {
    for (const auto& rec : trajectory.records) {
        nlohmann::json mass = nlohmann::json::object();
        for (std::size_t k = 0; k < rec.mass.size(); ++k) mass[std::to_string(k + 1)] = rec.mass[k];
        out << nlohmann::json{{"step", rec.step}, {"losses", to_json(rec.losses)}, {"mass", std::move(mass)}}.dump()
            << '\n';
    }
}

}  // namespace asql
