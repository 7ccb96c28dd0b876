#include "asql/layout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "asql/errors.hpp"

namespace asql {

bool pair_feasibility(const DirectionalConstraint& c, const SeedPoint& seed_i, int x, int y) {
    bool in_x = true;
    switch (c.horizontal) {
        case Horizontal::Right: in_x = x > seed_i.x; break;
        case Horizontal::Left: in_x = x < seed_i.x; break;
        case Horizontal::Same: in_x = x == seed_i.x; break;
        case Horizontal::Unconstrained: break;
    }
    bool in_y = true;
    switch (c.vertical) {
        case Vertical::Above: in_y = y < seed_i.y; break;
        case Vertical::Below: in_y = y > seed_i.y; break;
        case Vertical::Same: in_y = y == seed_i.y; break;
        case Vertical::Unconstrained: break;
    }
    return in_x && in_y;
}

MembershipField membership_field(EntityId entity, const std::vector<SeedPoint>& seeds,
                                 const ConstraintSet& constraints, GridDims dims) {
    MembershipField field(dims, 1);
    for (const auto& c : constraints) {
        if (c.j != entity || c.i == entity) continue;
        if (c.i < 1 || static_cast<std::size_t>(c.i) > seeds.size())
            throw ValidationError("no seed for reference entity " + std::to_string(c.i));
        const auto& seed = seeds[static_cast<std::size_t>(c.i - 1)];
        for (int y = 0; y < dims.height; ++y) {
            for (int x = 0; x < dims.width; ++x) {
                if (!pair_feasibility(c, seed, x, y)) field(x, y) = 0;
            }
        }
    }
    return field;
}

AssignmentGrid assign_cells(const std::vector<MembershipField>& fields, const std::vector<SeedPoint>& seeds) {
    if (fields.empty()) throw ValidationError("no membership fields");
    if (fields.size() != seeds.size()) throw ValidationError("one seed per membership field is required");
    const GridDims dims = fields.front().dims();
    for (const auto& f : fields) {
        if (f.dims() != dims) throw ShapeError("membership fields differ in shape");
    }

    AssignmentGrid grid(dims);
    std::vector<std::size_t> counts(fields.size(), 0);
    for (int y = 0; y < dims.height; ++y) {
        for (int x = 0; x < dims.width; ++x) {
            std::size_t best = fields.size();
            long best_dist = std::numeric_limits<long>::max();
            for (std::size_t k = 0; k < fields.size(); ++k) {
                if (!fields[k](x, y)) continue;
                const long dx = x - seeds[k].x, dy = y - seeds[k].y;
                const long dist = dx * dx + dy * dy;
                if (dist < best_dist) {  // strict: earlier (lower) id wins ties
                    best = k;
                    best_dist = dist;
                }
            }
            if (best < fields.size()) {
                grid(x, y) = {static_cast<EntityId>(best + 1), 0};
                ++counts[best];
            }
        }
    }
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (counts[k] == 0)
            throw StarvationError("entity " + std::to_string(k + 1) + " receives no cells under its constraints");
    }
    return grid;
}

AssignmentGrid inject_quantities(const AssignmentGrid& grid, const SceneGraph& graph) {
    AssignmentGrid out = grid;
    for (const auto& entity : graph.entities) {
        int x0 = grid.width(), x1 = -1, y0 = grid.height(), y1 = -1;
        std::size_t n = 0;
        for (int y = 0; y < grid.height(); ++y) {
            for (int x = 0; x < grid.width(); ++x) {
                if (grid(x, y).entity_id != entity.id) continue;
                x0 = std::min(x0, x);
                x1 = std::max(x1, x);
                y0 = std::min(y0, y);
                y1 = std::max(y1, y);
                ++n;
            }
        }
        if (n == 0) continue;
        const auto q = static_cast<std::size_t>(entity.quantity);
        if (n < q)
            throw QuantityError("entity " + std::to_string(entity.id) + " occupies " + std::to_string(n) +
                                " cells, too few for quantity " + std::to_string(q));

        // Sweep order: columns left-to-right (each top-to-bottom) when the box is at least as
        // wide as tall, otherwise rows top-to-bottom (each left-to-right).
        std::vector<std::pair<int, int>> order;
        order.reserve(n);
        if (x1 - x0 >= y1 - y0) {
            for (int x = x0; x <= x1; ++x)
                for (int y = y0; y <= y1; ++y)
                    if (grid(x, y).entity_id == entity.id) order.emplace_back(x, y);
        } else {
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x)
                    if (grid(x, y).entity_id == entity.id) order.emplace_back(x, y);
        }

        const std::size_t base = n / q, extra = n % q;
        std::size_t pos = 0;
        for (std::size_t block = 0; block < q; ++block) {
            const std::size_t len = base + (block < extra ? 1 : 0);
            for (std::size_t k = 0; k < len; ++k, ++pos) {
                const auto [x, y] = order[pos];
                out(x, y).subregion = static_cast<int>(block + 1);
            }
        }
    }
    return out;
}

AssignmentGrid build_assignment(const GuidancePlan& plan, const SceneGraph& graph) {
    const auto n = graph.entities.size();
    const auto seeds = seed_points(plan.seed_grid, n);
    std::vector<MembershipField> fields;
    fields.reserve(n);
    for (std::size_t k = 0; k < n; ++k)
        fields.push_back(membership_field(static_cast<EntityId>(k + 1), seeds, plan.constraints, plan.dims()));
    return inject_quantities(assign_cells(fields, seeds), graph);
}

namespace {

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher), squared distances along one line.
void squared_distance_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
                         std::vector<double>& z) {
    const int n = static_cast<int>(f.size());
    constexpr double inf = std::numeric_limits<double>::infinity();
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[q] == inf) continue;
        if (k < 0) {
            v[0] = q;
            z[0] = -inf;
            z[1] = inf;
            k = 0;
            continue;
        }
        double s;
        while (true) {
            const int p = v[k];
            s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
            if (s > z[k]) break;
            --k;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = inf;
    }
    if (k < 0) {
        std::fill(d.begin(), d.end(), inf);
        return;
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
        while (z[j + 1] < q) ++j;
        const double diff = q - v[j];
        d[q] = diff * diff + f[v[j]];
    }
}

}  // namespace

Grid<double> distance_transform(const Grid<std::uint8_t>& inside) {
    const int h = inside.height() + 2, w = inside.width() + 2;
    constexpr double inf = std::numeric_limits<double>::infinity();
    Grid<double> sq(GridDims{h, w}, 0.0);
    for (int y = 0; y < inside.height(); ++y)
        for (int x = 0; x < inside.width(); ++x)
            if (inside(x, y)) sq(x + 1, y + 1) = inf;

    const int longest = std::max(h, w);
    std::vector<double> f(static_cast<std::size_t>(longest)), d(static_cast<std::size_t>(longest)),
        z(static_cast<std::size_t>(longest) + 1);
    std::vector<int> v(static_cast<std::size_t>(longest));

    f.resize(static_cast<std::size_t>(h));
    d.resize(static_cast<std::size_t>(h));
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) f[static_cast<std::size_t>(y)] = sq(x, y);
        squared_distance_1d(f, d, v, z);
        for (int y = 0; y < h; ++y) sq(x, y) = d[static_cast<std::size_t>(y)];
    }
    f.resize(static_cast<std::size_t>(w));
    d.resize(static_cast<std::size_t>(w));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) f[static_cast<std::size_t>(x)] = sq(x, y);
        squared_distance_1d(f, d, v, z);
        for (int x = 0; x < w; ++x) sq(x, y) = d[static_cast<std::size_t>(x)];
    }

    Grid<double> out(inside.dims(), 0.0);
    for (int y = 0; y < inside.height(); ++y)
        for (int x = 0; x < inside.width(); ++x)
            if (inside(x, y)) out(x, y) = std::sqrt(sq(x + 1, y + 1));
    return out;
}

Grid<std::uint8_t> resample_nearest(const Grid<std::uint8_t>& mask, GridDims target) {
    if (target.height < 1 || target.width < 1) throw ShapeError("target resolution must be positive");
    if (target == mask.dims()) return mask;
    Grid<std::uint8_t> out(target, 0);
    for (int y = 0; y < target.height; ++y) {
        const int sy = static_cast<int>(static_cast<long long>(y) * mask.height() / target.height);
        for (int x = 0; x < target.width; ++x) {
            const int sx = static_cast<int>(static_cast<long long>(x) * mask.width() / target.width);
            out(x, y) = mask(sx, sy);
        }
    }
    return out;
}

Grid<std::uint8_t> region_mask(const AssignmentGrid& grid, EntityId entity, std::optional<int> subregion) {
    Grid<std::uint8_t> mask(grid.dims(), 0);
    for (int y = 0; y < grid.height(); ++y) {
        for (int x = 0; x < grid.width(); ++x) {
            const auto& c = grid(x, y);
            if (c.entity_id == entity && (!subregion || c.subregion == *subregion)) mask(x, y) = 1;
        }
    }
    return mask;
}

SoftMask soft_mask(const AssignmentGrid& grid, EntityId entity, std::optional<int> subregion, GridDims target) {
    const std::string what = "entity " + std::to_string(entity) +
                             (subregion ? " sub-region " + std::to_string(*subregion) : std::string());
    const auto binary = region_mask(grid, entity, subregion);
    if (std::none_of(binary.data().begin(), binary.data().end(), [](auto v) { return v != 0; }))
        throw EmptyRegionError(what + " occupies no cells");

    const auto resampled = resample_nearest(binary, target);
    const auto dist = distance_transform(resampled);
    const double peak = *std::max_element(dist.data().begin(), dist.data().end());
    if (peak <= 0.0) throw EmptyRegionError(what + " vanishes at resolution " + std::to_string(target.height) + "x" +
                                            std::to_string(target.width));

    SoftMask mask{target, entity, subregion.value_or(0), Eigen::VectorXd(static_cast<Eigen::Index>(target.cells()))};
    for (std::size_t k = 0; k < dist.size(); ++k) mask.values(static_cast<Eigen::Index>(k)) = dist.data()[k] / peak;
    return mask;
}

std::string render_ascii(const AssignmentGrid& grid, bool verbose) {
    static constexpr std::string_view symbols = "123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";
    std::string out;
    for (int y = 0; y < grid.height(); ++y) {
        for (int x = 0; x < grid.width(); ++x) {
            const auto& c = grid(x, y);
            if (verbose) {
                if (x > 0) out.push_back(' ');
                out += c.entity_id == 0 ? std::string(".") : std::to_string(c.entity_id) + ":" + std::to_string(c.subregion);
            } else if (c.entity_id == 0) {
                out.push_back('.');
            } else {
                const auto k = static_cast<std::size_t>(c.entity_id - 1);
                out.push_back(k < symbols.size() ? symbols[k] : '#');
            }
        }
        out.push_back('\n');
    }
    return out;
}

}  // namespace asql
