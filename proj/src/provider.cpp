#include "asql/provider.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "asql/errors.hpp"

namespace asql {

using nlohmann::json;

namespace {

// Coarse real-world size classes used to order entities when no external provider is given.
const std::map<std::string, int, std::less<>>& size_lexicon() {
    static const std::map<std::string, int, std::less<>> table = {
        // 1: fits in a hand
        {"apple", 1}, {"banana", 1}, {"orange", 1}, {"cup", 1}, {"mug", 1}, {"phone", 1}, {"key", 1},
        {"ball", 1}, {"book", 1}, {"bottle", 1}, {"spoon", 1}, {"fork", 1}, {"ring", 1}, {"flower", 1},
        {"mouse", 1}, {"bird", 1}, {"egg", 1}, {"clock", 1},
        // 2: small animals and objects
        {"cat", 2}, {"rabbit", 2}, {"hat", 2}, {"laptop", 2}, {"backpack", 2}, {"vase", 2}, {"lamp", 2},
        {"pillow", 2}, {"bag", 2}, {"umbrella", 2},
        // 3: person-sized
        {"dog", 3}, {"person", 3}, {"man", 3}, {"woman", 3}, {"child", 3}, {"chair", 3}, {"bicycle", 3},
        {"sheep", 3}, {"tv", 3}, {"television", 3},
        // 4: furniture and large animals
        {"table", 4}, {"desk", 4}, {"bed", 4}, {"sofa", 4}, {"couch", 4}, {"horse", 4}, {"cow", 4},
        {"motorbike", 4}, {"motorcycle", 4}, {"bear", 4}, {"tree", 4}, {"car", 4},
        // 5: vehicles, buildings, scenery
        {"bus", 5}, {"truck", 5}, {"train", 5}, {"elephant", 5}, {"giraffe", 5}, {"house", 5},
        {"building", 5}, {"boat", 5}, {"airplane", 5}, {"mountain", 5},
    };
    return table;
}

int place(int rank, int rank_count, int extent) {
    // floor((r + 0.5) * extent / R) without floating point
    return static_cast<int>((static_cast<long long>(2 * rank + 1) * extent) / (2LL * rank_count));
}

}  // namespace

int size_class(std::string_view noun) {
    const std::string key = PredicateLexicon::normalize(noun);
    const auto& table = size_lexicon();
    if (auto it = table.find(key); it != table.end()) return it->second;
    // crude plural handling
    if (key.size() > 1 && key.back() == 's') {
        if (auto it = table.find(std::string_view(key).substr(0, key.size() - 1)); it != table.end()) return it->second;
    }
    return 3;
}

std::vector<SeedPoint> seed_points(const Grid<int>& seed_grid, std::size_t entity_count) {
    std::vector<long long> sx(entity_count, 0), sy(entity_count, 0), count(entity_count, 0);
    for (int y = 0; y < seed_grid.height(); ++y) {
        for (int x = 0; x < seed_grid.width(); ++x) {
            const int v = seed_grid(x, y);
            if (v == 0) continue;
            if (v < 0 || static_cast<std::size_t>(v) > entity_count)
                throw ValidationError("seed_grid value " + std::to_string(v) + " at (" + std::to_string(x) + ", " +
                                      std::to_string(y) + ") is not an entity id");
            const auto k = static_cast<std::size_t>(v - 1);
            sx[k] += x;
            sy[k] += y;
            ++count[k];
        }
    }
    std::vector<SeedPoint> seeds(entity_count);
    for (std::size_t k = 0; k < entity_count; ++k) {
        if (count[k] == 0) throw ValidationError("entity " + std::to_string(k + 1) + " has no seed");
        seeds[k] = {static_cast<EntityId>(k + 1), static_cast<int>(sx[k] / count[k]), static_cast<int>(sy[k] / count[k])};
    }
    return seeds;
}

GuidancePlan heuristic_plan(const SceneGraph& graph, const ConstraintSet& constraints, GridDims dims) {
    if (dims.height < 1 || dims.width < 1) throw ValidationError("grid dimensions must be positive");
    const auto n = graph.entities.size();

    GuidancePlan plan;
    plan.constraints = constraints;
    std::sort(plan.constraints.begin(), plan.constraints.end(),
              [](const auto& a, const auto& b) { return std::pair(a.i, a.j) < std::pair(b.i, b.j); });

    plan.size_order.resize(n);
    std::iota(plan.size_order.begin(), plan.size_order.end(), 1);
    std::stable_sort(plan.size_order.begin(), plan.size_order.end(), [&](EntityId a, EntityId b) {
        return size_class(graph.entity(a).name) < size_class(graph.entity(b).name);
    });

    const auto x_rank = axis_ranks(plan.constraints, n, Axis::X);
    const auto y_rank = axis_ranks(plan.constraints, n, Axis::Y);
    const int x_count = *std::max_element(x_rank.begin(), x_rank.end()) + 1;
    const int y_count = *std::max_element(y_rank.begin(), y_rank.end()) + 1;
    if (x_count > dims.width)
        throw CapacityError(std::to_string(x_count) + " horizontal ranks exceed grid width " + std::to_string(dims.width));
    if (y_count > dims.height)
        throw CapacityError(std::to_string(y_count) + " vertical ranks exceed grid height " +
                            std::to_string(dims.height));

    plan.seed_grid = Grid<int>(dims, 0);
    for (std::size_t k = 0; k < n; ++k) {
        int x = place(x_rank[k], x_count, dims.width);
        const int y = place(y_rank[k], y_count, dims.height);
        int tries = 0;
        while (plan.seed_grid(x, y) != 0) {
            if (++tries >= dims.width)
                throw CapacityError("row " + std::to_string(y) + " has no free cell for entity " + std::to_string(k + 1));
            x = (x + 1) % dims.width;
        }
        plan.seed_grid(x, y) = static_cast<int>(k + 1);
    }
    return plan;
}

namespace {

bool horizontal_holds(Horizontal h, int xj, int xi) {
    switch (h) {
        case Horizontal::Left: return xj < xi;
        case Horizontal::Right: return xj > xi;
        case Horizontal::Same: return xj == xi;
        case Horizontal::Unconstrained: break;
    }
    return true;
}

bool vertical_holds(Vertical v, int yj, int yi) {
    switch (v) {
        case Vertical::Above: return yj < yi;
        case Vertical::Below: return yj > yi;
        case Vertical::Same: return yj == yi;
        case Vertical::Unconstrained: break;
    }
    return true;
}

}  // namespace

const GuidancePlan& validate_plan(const GuidancePlan& plan, const SceneGraph& graph) {
    const auto n = graph.entities.size();

    std::vector<EntityId> sorted = plan.size_order;
    std::sort(sorted.begin(), sorted.end());
    std::vector<EntityId> expected(n);
    std::iota(expected.begin(), expected.end(), 1);
    if (sorted != expected) throw ValidationError("size_order not a permutation of the entity ids");

    if (plan.seed_grid.height() < 1 || plan.seed_grid.width() < 1)
        throw ValidationError("seed_grid dimensions must be positive");
    const auto seeds = seed_points(plan.seed_grid, n);

    std::set<std::pair<EntityId, EntityId>> pairs;
    for (const auto& c : plan.constraints) {
        const std::string where = "constraint (" + std::to_string(c.i) + ", " + std::to_string(c.j) + ")";
        if (!graph.has_entity(c.i) || !graph.has_entity(c.j)) throw ValidationError(where + " references an unknown entity");
        if (c.i == c.j) throw ValidationError(where + " relates an entity to itself");
        if (!pairs.emplace(c.i, c.j).second) throw ValidationError(where + " is duplicated");
        if (!c.fully_constrained()) continue;
        const auto& si = seeds[static_cast<std::size_t>(c.i - 1)];
        const auto& sj = seeds[static_cast<std::size_t>(c.j - 1)];
        if (!horizontal_holds(c.horizontal, sj.x, si.x) || !vertical_holds(c.vertical, sj.y, si.y))
            throw ValidationError("seed violates constraint: " + where + " " + std::string(to_string(c.vertical)) + "/" +
                                  std::string(to_string(c.horizontal)));
    }
    return plan;
}

json to_json(const GuidancePlan& plan) {
    json rows = json::array();
    for (int y = 0; y < plan.seed_grid.height(); ++y) {
        json row = json::array();
        for (int x = 0; x < plan.seed_grid.width(); ++x) row.push_back(plan.seed_grid(x, y));
        rows.push_back(std::move(row));
    }
    json cons = json::array();
    for (const auto& c : plan.constraints) cons.push_back(to_json(c));
    return {{"size_order", plan.size_order}, {"seed_grid", std::move(rows)}, {"constraints", std::move(cons)}};
}

GuidancePlan plan_from_json(const json& r) {
    if (!r.is_object()) throw ProtocolError("provider response must be a JSON object");
    for (const auto& [key, _] : r.items()) {
        if (key != "size_order" && key != "seed_grid" && key != "constraints")
            throw ProtocolError("unknown field '" + key + "' in provider response");
    }
    for (auto key : {"size_order", "seed_grid"}) {
        if (!r.contains(key) || !r[key].is_array()) throw ProtocolError(std::string("response needs array '") + key + "'");
    }

    GuidancePlan plan;
    for (const auto& v : r["size_order"]) {
        if (!v.is_number_integer()) throw ProtocolError("size_order must hold integers");
        plan.size_order.push_back(v.get<int>());
    }

    const auto& rows = r["seed_grid"];
    if (rows.empty() || !rows[0].is_array() || rows[0].empty()) throw ProtocolError("seed_grid must be a non-empty matrix");
    const GridDims dims{static_cast<int>(rows.size()), static_cast<int>(rows[0].size())};
    plan.seed_grid = Grid<int>(dims, 0);
    for (int y = 0; y < dims.height; ++y) {
        const auto& row = rows[static_cast<std::size_t>(y)];
        if (!row.is_array() || static_cast<int>(row.size()) != dims.width) throw ProtocolError("seed_grid rows are ragged");
        for (int x = 0; x < dims.width; ++x) {
            const auto& v = row[static_cast<std::size_t>(x)];
            if (!v.is_number_integer()) throw ProtocolError("seed_grid must hold integers");
            plan.seed_grid(x, y) = v.get<int>();
        }
    }

    if (r.contains("constraints")) {
        if (!r["constraints"].is_array()) throw ProtocolError("constraints must be an array");
        for (const auto& c : r["constraints"]) {
            try {
                plan.constraints.push_back(constraint_from_json(c));
            } catch (const ValidationError& e) {
                throw ProtocolError(e.what());
            }
        }
    }
    std::sort(plan.constraints.begin(), plan.constraints.end(),
              [](const auto& a, const auto& b) { return std::pair(a.i, a.j) < std::pair(b.i, b.j); });
    return plan;
}

json provider_request(const SceneGraph& graph, GridDims dims) {
    return {{"caption", graph.caption},
            {"scene_graph", to_json(graph)},
            {"grid", {{"height", dims.height}, {"width", dims.width}}}};
}

GuidancePlan external_plan(const SceneGraph& graph, GridDims dims, const ExternalProvider& endpoint) {
    const auto result = run_process(endpoint.command, provider_request(graph, dims).dump(), endpoint.timeout);
    if (result.exit_status != 0)
        throw TransportError("provider exited with status " + std::to_string(result.exit_status));

    json response;
    try {
        response = json::parse(result.out);
    } catch (const json::parse_error& e) {
        throw ProtocolError(std::string("provider response is not JSON: ") + e.what());
    }
    GuidancePlan plan = plan_from_json(response);
    if (plan.dims() != dims)
        throw ValidationError("seed_grid is " + std::to_string(plan.dims().height) + "x" +
                              std::to_string(plan.dims().width) + ", expected " + std::to_string(dims.height) + "x" +
                              std::to_string(dims.width));
    validate_plan(plan, graph);
    return plan;
}

}  // namespace asql
