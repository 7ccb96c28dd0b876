#include "asql/scene_graph.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <queue>
#include <set>
#include <tuple>

#include "asql/errors.hpp"

namespace asql {

using nlohmann::json;

const Entity& SceneGraph::entity(EntityId id) const {
    for (const auto& e : entities) {
        if (e.id == id) return e;
    }
    throw ValidationError("unknown entity id " + std::to_string(id));
}

bool SceneGraph::has_entity(EntityId id) const {
    return std::any_of(entities.begin(), entities.end(), [id](const Entity& e) { return e.id == id; });
}

Vertical invert(Vertical v) {
    switch (v) {
        case Vertical::Above: return Vertical::Below;
        case Vertical::Below: return Vertical::Above;
        default: return v;
    }
}

Horizontal invert(Horizontal h) {
    switch (h) {
        case Horizontal::Left: return Horizontal::Right;
        case Horizontal::Right: return Horizontal::Left;
        default: return h;
    }
}

std::string_view to_string(Vertical v) {
    switch (v) {
        case Vertical::Above: return "ABOVE";
        case Vertical::Same: return "SAME";
        case Vertical::Below: return "BELOW";
        case Vertical::Unconstrained: break;
    }
    return "UNCONSTRAINED";
}

std::string_view to_string(Horizontal h) {
    switch (h) {
        case Horizontal::Left: return "LEFT";
        case Horizontal::Same: return "SAME";
        case Horizontal::Right: return "RIGHT";
        case Horizontal::Unconstrained: break;
    }
    return "UNCONSTRAINED";
}

Vertical parse_vertical(std::string_view s) {
    if (s == "ABOVE") return Vertical::Above;
    if (s == "SAME") return Vertical::Same;
    if (s == "BELOW") return Vertical::Below;
    if (s == "UNCONSTRAINED") return Vertical::Unconstrained;
    throw ValidationError("invalid vertical relation '" + std::string(s) + "'");
}

Horizontal parse_horizontal(std::string_view s) {
    if (s == "LEFT") return Horizontal::Left;
    if (s == "SAME") return Horizontal::Same;
    if (s == "RIGHT") return Horizontal::Right;
    if (s == "UNCONSTRAINED") return Horizontal::Unconstrained;
    throw ValidationError("invalid horizontal relation '" + std::string(s) + "'");
}

// ---------------------------------------------------------------- lexicon

std::string PredicateLexicon::normalize(std::string_view predicate) {
    std::string out;
    bool pending_space = false;
    for (char ch : predicate) {
        auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

void PredicateLexicon::add(std::string_view predicate, DirectionPair direction) {
    entries_[normalize(predicate)] = direction;
}

std::optional<DirectionPair> PredicateLexicon::lookup(std::string_view predicate) const {
    auto it = entries_.find(normalize(predicate));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

PredicateLexicon default_lexicon() {
    using V = Vertical;
    using H = Horizontal;
    PredicateLexicon lex;
    for (auto p : {"left of", "to the left of", "on the left of", "on the left side of"})
        lex.add(p, {V::Same, H::Left});
    for (auto p : {"right of", "to the right of", "on the right of", "on the right side of"})
        lex.add(p, {V::Same, H::Right});
    for (auto p : {"above", "on", "on top of", "rides", "riding", "sitting on", "standing on", "over"})
        lex.add(p, {V::Above, H::Same});
    for (auto p : {"below", "under", "beneath", "underneath"})
        lex.add(p, {V::Below, H::Same});
    for (auto p : {"next to", "beside", "near", "by"})
        lex.add(p, {V::Same, H::Unconstrained});
    return lex;
}

// ---------------------------------------------------------------- parsing

namespace {

void reject_unknown_fields(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
    for (const auto& [key, _] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw SyntaxError("unknown field '" + key + "' in " + where);
    }
}

template <typename T>
T field_as(const json& obj, const char* key, const std::string& where) {
    const auto& v = obj.at(key);
    try {
        if constexpr (std::is_same_v<T, int>) {
            if (!v.is_number_integer()) throw SyntaxError("");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw SyntaxError("");
        }
        return v.get<T>();
    } catch (const std::exception&) {
        throw SyntaxError("field '" + std::string(key) + "' in " + where + " has the wrong type");
    }
}

}  // namespace

SceneGraph scene_graph_from_json(const json& doc) {
    if (!doc.is_object()) throw SyntaxError("scene graph document must be a JSON object");
    reject_unknown_fields(doc, {"caption", "entities", "relations"}, "scene graph");

    SceneGraph graph;
    if (doc.contains("caption")) graph.caption = field_as<std::string>(doc, "caption", "scene graph");
    if (!doc.contains("entities") || !doc["entities"].is_array())
        throw SyntaxError("scene graph requires an 'entities' array");

    const auto& ents = doc["entities"];
    std::size_t with_id = 0;
    for (std::size_t k = 0; k < ents.size(); ++k) {
        const auto& e = ents[k];
        const std::string where = "entity " + std::to_string(k);
        if (!e.is_object()) throw SyntaxError(where + " must be an object");
        reject_unknown_fields(e, {"id", "name", "quantity", "attributes", "token_index", "attribute_token_indices"}, where);
        if (!e.contains("name")) throw SyntaxError(where + " is missing 'name'");

        Entity ent;
        ent.name = field_as<std::string>(e, "name", where);
        if (e.contains("id")) {
            ent.id = field_as<int>(e, "id", where);
            ++with_id;
        }
        if (e.contains("quantity")) ent.quantity = field_as<int>(e, "quantity", where);
        if (e.contains("attributes")) {
            if (!e["attributes"].is_array()) throw SyntaxError("'attributes' of " + where + " must be an array");
            for (const auto& a : e["attributes"]) {
                if (!a.is_string()) throw SyntaxError("'attributes' of " + where + " must hold strings");
                ent.attributes.push_back(a.get<std::string>());
            }
        }
        if (e.contains("token_index")) ent.token_index = field_as<int>(e, "token_index", where);
        if (e.contains("attribute_token_indices")) {
            if (!e["attribute_token_indices"].is_array())
                throw SyntaxError("'attribute_token_indices' of " + where + " must be an array");
            for (const auto& t : e["attribute_token_indices"]) {
                if (!t.is_number_integer())
                    throw SyntaxError("'attribute_token_indices' of " + where + " must hold integers");
                ent.attribute_token_indices.push_back(t.get<int>());
            }
        }
        graph.entities.push_back(std::move(ent));
    }

    if (with_id != 0 && with_id != graph.entities.size())
        throw ValidationError("entity ids must be given for all entities or for none");
    if (with_id == 0) {
        for (std::size_t k = 0; k < graph.entities.size(); ++k) graph.entities[k].id = static_cast<int>(k) + 1;
    }

    if (doc.contains("relations")) {
        const auto& rels = doc["relations"];
        if (!rels.is_array()) throw SyntaxError("'relations' must be an array");
        for (std::size_t k = 0; k < rels.size(); ++k) {
            const auto& r = rels[k];
            const std::string where = "relation " + std::to_string(k);
            if (!r.is_object()) throw SyntaxError(where + " must be an object");
            reject_unknown_fields(r, {"subject", "predicate", "object"}, where);
            for (auto key : {"subject", "predicate", "object"}) {
                if (!r.contains(key)) throw SyntaxError(where + " is missing '" + key + "'");
            }
            graph.relations.push_back({field_as<int>(r, "subject", where), field_as<std::string>(r, "predicate", where),
                                       field_as<int>(r, "object", where)});
        }
    }

    validate_scene_graph(graph);
    return graph;
}

SceneGraph parse_scene_graph(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw SyntaxError(std::string("malformed JSON: ") + e.what());
    }
    return scene_graph_from_json(doc);
}

void validate_scene_graph(const SceneGraph& graph) {
    const auto n = graph.entities.size();
    if (n == 0) throw ValidationError("scene graph has no entities");

    std::vector<bool> seen(n + 1, false);
    const bool tokens = graph.entities.front().token_index.has_value();
    for (std::size_t k = 0; k < n; ++k) {
        const auto& e = graph.entities[k];
        const std::string where = "entity " + std::to_string(k);
        if (e.name.empty()) throw ValidationError(where + " has an empty name");
        if (e.id < 1 || static_cast<std::size_t>(e.id) > n)
            throw ValidationError(where + " has id " + std::to_string(e.id) + " outside 1.." + std::to_string(n));
        if (seen[static_cast<std::size_t>(e.id)]) throw ValidationError(where + " duplicates id " + std::to_string(e.id));
        seen[static_cast<std::size_t>(e.id)] = true;
        if (e.quantity < 1) throw ValidationError(where + " has quantity " + std::to_string(e.quantity) + " < 1");
        if (e.token_index.has_value() != tokens)
            throw ValidationError(where + ": token_index must be present for all entities or for none");
        if (e.token_index && *e.token_index < 0) throw ValidationError(where + " has a negative token_index");
        if (!e.attribute_token_indices.empty()) {
            if (e.attribute_token_indices.size() != e.attributes.size())
                throw ValidationError(where + ": attribute_token_indices not aligned with attributes");
            for (int t : e.attribute_token_indices) {
                if (t < 0) throw ValidationError(where + " has a negative attribute token index");
            }
        }
    }

    std::set<std::tuple<int, std::string, int>> triples;
    for (std::size_t k = 0; k < graph.relations.size(); ++k) {
        const auto& r = graph.relations[k];
        const std::string where = "relation " + std::to_string(k);
        if (!graph.has_entity(r.subject_id))
            throw ValidationError(where + " references unknown subject " + std::to_string(r.subject_id));
        if (!graph.has_entity(r.object_id))
            throw ValidationError(where + " references unknown object " + std::to_string(r.object_id));
        if (r.subject_id == r.object_id) throw ValidationError(where + " relates an entity to itself");
        if (r.predicate.empty()) throw ValidationError(where + " has an empty predicate");
        if (!triples.emplace(r.subject_id, r.predicate, r.object_id).second)
            throw ValidationError(where + " duplicates an earlier relation");
    }
}

json to_json(const SceneGraph& graph) {
    json ents = json::array();
    for (const auto& e : graph.entities) {
        json j = {{"id", e.id}, {"name", e.name}, {"quantity", e.quantity}, {"attributes", e.attributes}};
        if (e.token_index) j["token_index"] = *e.token_index;
        if (!e.attribute_token_indices.empty()) j["attribute_token_indices"] = e.attribute_token_indices;
        ents.push_back(std::move(j));
    }
    json rels = json::array();
    for (const auto& r : graph.relations)
        rels.push_back({{"subject", r.subject_id}, {"predicate", r.predicate}, {"object", r.object_id}});
    return {{"caption", graph.caption}, {"entities", std::move(ents)}, {"relations", std::move(rels)}};
}

// ---------------------------------------------------------------- constraints

namespace {

template <typename Dir>
bool strictly_opposed(Dir a, Dir b) {
    return a != Dir::Same && a != Dir::Unconstrained && b != Dir::Same && b != Dir::Unconstrained && a != b;
}

// `via_inverse` marks a clash that only appears after symmetric closure: opposite strict
// directions there mean the two relations order the pair both ways, i.e. a 2-cycle.
template <typename Dir>
Dir merge_axis(Dir a, Dir b, EntityId i, EntityId j, bool via_inverse) {
    if (a == Dir::Unconstrained) return b;
    if (b == Dir::Unconstrained || a == b) return a;
    const std::string what = std::string(to_string(a)) + " and " + std::string(to_string(b)) + " for pair (" +
                             std::to_string(i) + ", " + std::to_string(j) + ")";
    if (via_inverse && strictly_opposed(a, b)) throw CycleError("cyclic order: " + what);
    throw ConflictError("contradictory directions " + what);
}

struct DisjointSet {
    std::vector<std::size_t> parent;
    explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

ConstraintSet derive_constraints(const SceneGraph& graph, const PredicateLexicon& lexicon) {
    std::map<std::pair<EntityId, EntityId>, DirectionalConstraint> merged;
    auto insert = [&](const DirectionalConstraint& c, bool via_inverse) {
        auto [it, fresh] = merged.try_emplace({c.i, c.j}, c);
        if (fresh) return;
        it->second.vertical = merge_axis(it->second.vertical, c.vertical, c.i, c.j, via_inverse);
        it->second.horizontal = merge_axis(it->second.horizontal, c.horizontal, c.i, c.j, via_inverse);
    };

    // Stated directions first, so contradictions between them are conflicts rather than cycles.
    std::vector<DirectionalConstraint> stated;
    for (const auto& r : graph.relations) {
        const DirectionPair dir = lexicon.lookup(r.predicate).value_or(DirectionPair{});
        stated.push_back({r.object_id, r.subject_id, dir.vertical, dir.horizontal});
    }
    for (const auto& c : stated) insert(c, false);
    for (const auto& c : stated) insert(c.inverted(), true);

    ConstraintSet out;
    out.reserve(merged.size());
    for (const auto& [_, c] : merged) out.push_back(c);
    check_acyclic(out, graph.entities.size());
    return out;
}

std::vector<int> axis_ranks(const ConstraintSet& constraints, std::size_t entity_count, Axis axis) {
    const char* axis_name = axis == Axis::X ? "horizontal" : "vertical";
    DisjointSet classes(entity_count);
    auto idx = [&](EntityId id) {
        if (id < 1 || static_cast<std::size_t>(id) > entity_count)
            throw ValidationError("constraint references unknown entity " + std::to_string(id));
        return static_cast<std::size_t>(id - 1);
    };

    // Edge (a, b) means coordinate(a) < coordinate(b).
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (const auto& c : constraints) {
        const auto i = idx(c.i), j = idx(c.j);
        if (axis == Axis::X) {
            switch (c.horizontal) {
                case Horizontal::Same: classes.unite(i, j); break;
                case Horizontal::Left: edges.emplace_back(j, i); break;
                case Horizontal::Right: edges.emplace_back(i, j); break;
                case Horizontal::Unconstrained: break;
            }
        } else {
            switch (c.vertical) {
                case Vertical::Same: classes.unite(i, j); break;
                case Vertical::Above: edges.emplace_back(j, i); break;
                case Vertical::Below: edges.emplace_back(i, j); break;
                case Vertical::Unconstrained: break;
            }
        }
    }

    std::vector<std::set<std::size_t>> succ(entity_count);
    std::vector<int> indegree(entity_count, 0);
    for (auto [a, b] : edges) {
        const auto ca = classes.find(a), cb = classes.find(b);
        if (ca == cb)
            throw CycleError(std::string(axis_name) + " order is cyclic: entities " + std::to_string(a + 1) + " and " +
                             std::to_string(b + 1) + " are both tied and strictly ordered");
        if (succ[ca].insert(cb).second) ++indegree[cb];
    }

    std::vector<int> class_rank(entity_count, 0);
    std::queue<std::size_t> ready;
    std::size_t class_count = 0;
    for (std::size_t k = 0; k < entity_count; ++k) {
        if (classes.find(k) != k) continue;
        ++class_count;
        if (indegree[k] == 0) ready.push(k);
    }
    std::size_t visited = 0;
    while (!ready.empty()) {
        const auto c = ready.front();
        ready.pop();
        ++visited;
        for (auto s : succ[c]) {
            class_rank[s] = std::max(class_rank[s], class_rank[c] + 1);
            if (--indegree[s] == 0) ready.push(s);
        }
    }
    if (visited != class_count) throw CycleError(std::string(axis_name) + " order contains a cycle");

    std::vector<int> ranks(entity_count);
    for (std::size_t k = 0; k < entity_count; ++k) ranks[k] = class_rank[classes.find(k)];
    return ranks;
}

void check_acyclic(const ConstraintSet& constraints, std::size_t entity_count) {
    axis_ranks(constraints, entity_count, Axis::X);
    axis_ranks(constraints, entity_count, Axis::Y);
}

json to_json(const DirectionalConstraint& c) {
    return {{"i", c.i}, {"j", c.j}, {"vertical", to_string(c.vertical)}, {"horizontal", to_string(c.horizontal)}};
}

DirectionalConstraint constraint_from_json(const json& j) {
    if (!j.is_object()) throw ProtocolError("constraint must be an object");
    for (auto key : {"i", "j", "vertical", "horizontal"}) {
        if (!j.contains(key)) throw ProtocolError(std::string("constraint is missing '") + key + "'");
    }
    if (!j["i"].is_number_integer() || !j["j"].is_number_integer() || !j["vertical"].is_string() ||
        !j["horizontal"].is_string())
        throw ProtocolError("constraint fields have the wrong type");
    return {j["i"].get<int>(), j["j"].get<int>(), parse_vertical(j["vertical"].get<std::string>()),
            parse_horizontal(j["horizontal"].get<std::string>())};
}

}  // namespace asql
