#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "asql/grid.hpp"
#include "asql/scene_graph.hpp"

namespace asql {

// Size ordering, seed grid and directional constraints for one scene.
struct GuidancePlan {
    std::vector<EntityId> size_order;  // increasing size
    Grid<int> seed_grid;               // 0 = unassigned, otherwise an entity id
    ConstraintSet constraints;

    GridDims dims() const { return seed_grid.dims(); }
    friend bool operator==(const GuidancePlan&, const GuidancePlan&) = default;
};

struct SeedPoint {
    EntityId entity_id = 0;
    int x = 0;  // column
    int y = 0;  // row, 0 at the top
    friend bool operator==(const SeedPoint&, const SeedPoint&) = default;
};

// Seed of every entity (index id - 1). An entity marked on several cells is reduced to the
// floor of the centroid of those cells. Throws ValidationError if an entity has no seed.
std::vector<SeedPoint> seed_points(const Grid<int>& seed_grid, std::size_t entity_count);

// Coarse size class (1 = smallest .. 5 = largest) of a noun; unknown nouns are class 3.
int size_class(std::string_view noun);

GuidancePlan heuristic_plan(const SceneGraph& graph, const ConstraintSet& constraints, GridDims dims);

// Checks every plan invariant against the graph and returns the plan unchanged.
const GuidancePlan& validate_plan(const GuidancePlan& plan, const SceneGraph& graph);

nlohmann::json to_json(const GuidancePlan& plan);
// Decodes a provider response. Structural problems raise ProtocolError; invariants are not checked.
GuidancePlan plan_from_json(const nlohmann::json& response);

nlohmann::json provider_request(const SceneGraph& graph, GridDims dims);

struct ExternalProvider {
    std::string command;  // run through /bin/sh -c
    std::chrono::milliseconds timeout{60'000};
};

GuidancePlan external_plan(const SceneGraph& graph, GridDims dims, const ExternalProvider& endpoint);

// Output of a child process run to completion.
struct ProcessResult {
    int exit_status = 0;
    std::string out;
    std::string err;
};

// Runs `command` via /bin/sh -c, feeding `input` on stdin. Throws TransportError on
// spawn failure or timeout (the child is killed).
ProcessResult run_process(const std::string& command, const std::string& input, std::chrono::milliseconds timeout);

}  // namespace asql
