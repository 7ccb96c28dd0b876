#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "asql/grid.hpp"
#include "asql/provider.hpp"
#include "asql/scene_graph.hpp"

namespace asql {

struct CellAssignment {
    EntityId entity_id = 0;  // 0 = background
    int subregion = 0;       // 0 before quantity injection and for background
    friend bool operator==(const CellAssignment&, const CellAssignment&) = default;
};

using AssignmentGrid = Grid<CellAssignment>;

// Binary feasibility matrix M^(j) of one entity.
using MembershipField = Grid<std::uint8_t>;

// Both axis predicates of `constraint` for a cell against the seed of its reference entity.
bool pair_feasibility(const DirectionalConstraint& constraint, const SeedPoint& seed_i, int x, int y);

// Logical AND over every constraint whose target is `entity`. `seeds` is indexed by id - 1.
MembershipField membership_field(EntityId entity, const std::vector<SeedPoint>& seeds,
                                 const ConstraintSet& constraints, GridDims dims);

// Each cell goes to an entity with membership 1; ties by squared distance to the seed, then
// lowest id. Cells nobody may occupy become background. `fields` and `seeds` are indexed by
// id - 1. Throws StarvationError if some entity ends up with no cell.
AssignmentGrid assign_cells(const std::vector<MembershipField>& fields, const std::vector<SeedPoint>& seeds);

// Splits each entity's region into `quantity` equal contiguous blocks along its bounding box.
AssignmentGrid inject_quantities(const AssignmentGrid& grid, const SceneGraph& graph);

// Fuzzy clustering plus quantity injection for a validated plan.
AssignmentGrid build_assignment(const GuidancePlan& plan, const SceneGraph& graph);

// Exact Euclidean distance from every inside cell to the nearest outside cell, the grid being
// surrounded by one ring of outside cells. Outside cells get 0.
Grid<double> distance_transform(const Grid<std::uint8_t>& inside);

Grid<std::uint8_t> resample_nearest(const Grid<std::uint8_t>& mask, GridDims target);

struct SoftMask {
    GridDims dims;
    EntityId entity_id = 0;
    int subregion = 0;       // 0 = whole entity
    Eigen::VectorXd values;  // row-major, length dims.cells()

    double at(int x, int y) const { return values(static_cast<Eigen::Index>(y * dims.width + x)); }
};

Grid<std::uint8_t> region_mask(const AssignmentGrid& grid, EntityId entity, std::optional<int> subregion = std::nullopt);

SoftMask soft_mask(const AssignmentGrid& grid, EntityId entity, std::optional<int> subregion, GridDims target);

// Rank-1 3-D mask values[s, y, x] = flat(mask)[s] * mask[y, x], kept in factored form.
class SelfMask {
public:
    explicit SelfMask(const SoftMask& mask) : dims_(mask.dims), entity_id_(mask.entity_id), factor_(mask.values) {}

    GridDims dims() const { return dims_; }
    EntityId entity_id() const { return entity_id_; }
    const Eigen::VectorXd& factor() const { return factor_; }

    double operator()(Eigen::Index s, int y, int x) const {
        return factor_(s) * factor_(static_cast<Eigen::Index>(y * dims_.width + x));
    }
    // (H'W') x (H'W') matrix; row s is slice s flattened row-major.
    Eigen::MatrixXd materialize() const { return factor_ * factor_.transpose(); }

private:
    GridDims dims_;
    EntityId entity_id_ = 0;
    Eigen::VectorXd factor_;
};

inline SelfMask self_mask(const SoftMask& mask) { return SelfMask(mask); }

// One character per cell: '.' for background, then 1-9, a-z, A-Z by entity id. Verbose mode
// prints `id:sub` tokens separated by spaces.
std::string render_ascii(const AssignmentGrid& grid, bool verbose = false);

}  // namespace asql
