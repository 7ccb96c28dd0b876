#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace asql {

using EntityId = int;

struct Entity {
    EntityId id = 0;
    std::string name;
    int quantity = 1;
    std::vector<std::string> attributes;
    std::optional<int> token_index;
    std::vector<int> attribute_token_indices;  // empty, or aligned with attributes

    friend bool operator==(const Entity&, const Entity&) = default;
};

struct RelationTriple {
    EntityId subject_id = 0;
    std::string predicate;
    EntityId object_id = 0;

    friend bool operator==(const RelationTriple&, const RelationTriple&) = default;
};

struct SceneGraph {
    std::string caption;
    std::vector<Entity> entities;
    std::vector<RelationTriple> relations;

    const Entity& entity(EntityId id) const;
    bool has_entity(EntityId id) const;
    bool has_token_indices() const { return !entities.empty() && entities.front().token_index.has_value(); }

    friend bool operator==(const SceneGraph&, const SceneGraph&) = default;
};

enum class Vertical { Above, Same, Below, Unconstrained };
enum class Horizontal { Left, Same, Right, Unconstrained };

Vertical invert(Vertical v);
Horizontal invert(Horizontal h);

std::string_view to_string(Vertical v);
std::string_view to_string(Horizontal h);
Vertical parse_vertical(std::string_view s);      // throws ValidationError
Horizontal parse_horizontal(std::string_view s);  // throws ValidationError

// Constraint (i, j) restricts the cells of entity j relative to the seed of entity i:
// horizontal RIGHT means x_j > x_i, vertical ABOVE means y_j < y_i (row 0 is the top).
struct DirectionalConstraint {
    EntityId i = 0;
    EntityId j = 0;
    Vertical vertical = Vertical::Unconstrained;
    Horizontal horizontal = Horizontal::Unconstrained;

    bool fully_constrained() const {
        return vertical != Vertical::Unconstrained && horizontal != Horizontal::Unconstrained;
    }
    DirectionalConstraint inverted() const { return {j, i, invert(vertical), invert(horizontal)}; }

    friend bool operator==(const DirectionalConstraint&, const DirectionalConstraint&) = default;
};

// Sorted by (i, j); at most one constraint per ordered pair.
using ConstraintSet = std::vector<DirectionalConstraint>;

struct DirectionPair {
    Vertical vertical = Vertical::Unconstrained;
    Horizontal horizontal = Horizontal::Unconstrained;
    friend bool operator==(const DirectionPair&, const DirectionPair&) = default;
};

// Maps relation predicates to the direction of the subject relative to the object.
// Keys are matched case-insensitively after whitespace normalization.
class PredicateLexicon {
public:
    void add(std::string_view predicate, DirectionPair direction);
    std::optional<DirectionPair> lookup(std::string_view predicate) const;
    std::size_t size() const { return entries_.size(); }

    static std::string normalize(std::string_view predicate);

private:
    std::map<std::string, DirectionPair> entries_;
};

PredicateLexicon default_lexicon();

SceneGraph parse_scene_graph(std::string_view document);
SceneGraph scene_graph_from_json(const nlohmann::json& document);
nlohmann::json to_json(const SceneGraph& graph);

// Throws ValidationError naming the first violated invariant.
void validate_scene_graph(const SceneGraph& graph);

ConstraintSet derive_constraints(const SceneGraph& graph, const PredicateLexicon& lexicon);

enum class Axis { X, Y };

// Longest-path rank of every entity (index id - 1) along one axis. Entities tied by SAME
// share a rank; strict LEFT/RIGHT (X) or ABOVE/BELOW (Y) constraints order the ranks.
// Throws CycleError when the strict order is cyclic.
std::vector<int> axis_ranks(const ConstraintSet& constraints, std::size_t entity_count, Axis axis);

// Throws CycleError if either axis is cyclic.
void check_acyclic(const ConstraintSet& constraints, std::size_t entity_count);

nlohmann::json to_json(const DirectionalConstraint& c);
DirectionalConstraint constraint_from_json(const nlohmann::json& j);

}  // namespace asql
