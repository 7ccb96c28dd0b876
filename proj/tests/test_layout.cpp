#include "doctest.h"

#include <cmath>
#include <set>

#include "asql/errors.hpp"
#include "asql/layout.hpp"

using namespace asql;

namespace {

std::set<std::pair<int, int>> cells_of(const AssignmentGrid& g, EntityId e) {
    std::set<std::pair<int, int>> out;
    for (int y = 0; y < g.height(); ++y)
        for (int x = 0; x < g.width(); ++x)
            if (g(x, y).entity_id == e) out.emplace(x, y);
    return out;
}

AssignmentGrid filled(GridDims dims, EntityId e) { return AssignmentGrid(dims, CellAssignment{e, 0}); }

SceneGraph single(int quantity) {
    return parse_scene_graph(R"({"entities":[{"name":"apple","quantity":)" + std::to_string(quantity) + "}]}");
}

}  // namespace

TEST_CASE("pair_feasibility") {
    CHECK(pair_feasibility({1, 2, Vertical::Same, Horizontal::Right}, {1, 1, 1}, 2, 1));
    CHECK_FALSE(pair_feasibility({1, 2, Vertical::Same, Horizontal::Right}, {1, 1, 1}, 1, 1));
    CHECK(pair_feasibility({1, 2, Vertical::Above, Horizontal::Unconstrained}, {1, 1, 2}, 3, 0));
}

TEST_CASE("membership fields") {
    const std::vector<SeedPoint> seeds{{1, 1, 1}, {2, 2, 2}};
    const auto all = membership_field(1, seeds, {}, {4, 4});
    for (auto v : all.data()) CHECK(v == 1);

    const ConstraintSet c{{1, 2, Vertical::Below, Horizontal::Right}};
    const auto f = membership_field(2, seeds, c, {4, 4});
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) CHECK(f(x, y) == (x > 1 && y > 1 ? 1 : 0));

    const std::vector<SeedPoint> corner{{1, 0, 0}, {2, 3, 3}};
    const auto same = membership_field(2, corner, {{1, 2, Vertical::Same, Horizontal::Same}}, {4, 4});
    int ones = 0;
    for (auto v : same.data()) ones += v;
    CHECK(ones == 1);
    CHECK(same(0, 0) == 1);
}

TEST_CASE("assign_cells examples") {
    SUBCASE("opposite corners") {
        const std::vector<SeedPoint> seeds{{1, 1, 1}, {2, 2, 2}};
        const ConstraintSet c{{1, 2, Vertical::Below, Horizontal::Right}, {2, 1, Vertical::Above, Horizontal::Left}};
        const auto g = assign_cells({membership_field(1, seeds, c, {4, 4}), membership_field(2, seeds, c, {4, 4})}, seeds);
        CHECK(cells_of(g, 1) == std::set<std::pair<int, int>>{{0, 0}, {1, 0}, {0, 1}, {1, 1}});
        CHECK(cells_of(g, 2) == std::set<std::pair<int, int>>{{2, 2}, {3, 2}, {2, 3}, {3, 3}});
        CHECK(cells_of(g, 0).size() == 8);
    }
    SUBCASE("single entity takes everything") {
        const std::vector<SeedPoint> seeds{{1, 0, 0}};
        const auto g = assign_cells({membership_field(1, seeds, {}, {3, 5})}, seeds);
        CHECK(cells_of(g, 1).size() == 15);
    }
    SUBCASE("distance then id tie-break") {
        const std::vector<SeedPoint> seeds{{1, 1, 2}, {2, 3, 2}};
        const auto g = assign_cells({membership_field(1, seeds, {}, {4, 4}), membership_field(2, seeds, {}, {4, 4})}, seeds);
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) CHECK(g(x, y).entity_id == (x <= 2 ? 1 : 2));
    }
    SUBCASE("starvation") {
        // Entity 2 must be left of column 0.
        const std::vector<SeedPoint> seeds{{1, 0, 0}, {2, 2, 2}};
        const ConstraintSet c{{1, 2, Vertical::Unconstrained, Horizontal::Left}};
        CHECK_THROWS_AS(assign_cells({membership_field(1, seeds, c, {4, 4}), membership_field(2, seeds, c, {4, 4})}, seeds),
                        StarvationError);
    }
}

TEST_CASE("quantity injection") {
    SUBCASE("q = 1 labels every cell 1") {
        const auto g = inject_quantities(filled({3, 3}, 1), single(1));
        for (const auto& c : g.data()) CHECK(c == CellAssignment{1, 1});
    }
    SUBCASE("full 4x4 split in two by columns") {
        const auto g = inject_quantities(filled({4, 4}, 1), single(2));
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) CHECK(g(x, y).subregion == (x < 2 ? 1 : 2));
    }
    SUBCASE("tall region sweeps rows") {
        const auto g = inject_quantities(filled({6, 2}, 1), single(3));
        for (int y = 0; y < 6; ++y)
            for (int x = 0; x < 2; ++x) CHECK(g(x, y).subregion == y / 2 + 1);
    }
    SUBCASE("uneven split puts larger blocks first") {
        const auto g = inject_quantities(filled({1, 7}, 1), single(3));
        std::vector<int> sub;
        for (int x = 0; x < 7; ++x) sub.push_back(g(x, 0).subregion);
        CHECK(sub == std::vector<int>{1, 1, 1, 2, 2, 3, 3});
    }
    SUBCASE("too few cells") {
        AssignmentGrid g({4, 4}, CellAssignment{});
        g(0, 0) = g(1, 0) = g(2, 0) = CellAssignment{1, 0};
        CHECK_THROWS_AS(inject_quantities(g, single(4)), QuantityError);
    }
}

TEST_CASE("distance transform and soft masks") {
    SUBCASE("single cell") {
        AssignmentGrid g({4, 4}, CellAssignment{});
        g(2, 1) = CellAssignment{1, 1};
        const auto m = soft_mask(g, 1, std::nullopt, {4, 4});
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) CHECK(m.at(x, y) == (x == 2 && y == 1 ? 1.0 : 0.0));
    }
    SUBCASE("full 4x4") {
        const auto m = soft_mask(filled({4, 4}, 1), 1, std::nullopt, {4, 4});
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) {
                const bool centre = x >= 1 && x <= 2 && y >= 1 && y <= 2;
                CHECK(m.at(x, y) == doctest::Approx(centre ? 1.0 : 0.5).epsilon(1e-12));
            }
    }
    SUBCASE("single row") {
        const auto m = soft_mask(filled({1, 4}, 1), 1, std::nullopt, {1, 4});
        for (int x = 0; x < 4; ++x) CHECK(m.at(x, 0) == 1.0);
    }
    SUBCASE("raw distances are euclidean") {
        Grid<std::uint8_t> in({5, 5}, 1);
        const auto d = distance_transform(in);
        CHECK(d(0, 0) == 1.0);
        CHECK(d(2, 2) == 3.0);
        in(2, 2) = 0;
        const auto h = distance_transform(in);
        CHECK(h(2, 2) == 0.0);
        CHECK(h(1, 1) == doctest::Approx(std::sqrt(2.0)));
    }
    SUBCASE("empty regions") {
        AssignmentGrid g({4, 4}, CellAssignment{});
        CHECK_THROWS_AS(soft_mask(g, 1, std::nullopt, {4, 4}), EmptyRegionError);
        g(1, 1) = CellAssignment{1, 1};
        // Downsampling 4x4 to 2x2 samples cells (0,0), (2,0), (0,2), (2,2) only.
        CHECK_THROWS_AS(soft_mask(g, 1, std::nullopt, {2, 2}), EmptyRegionError);
        CHECK_THROWS_AS(soft_mask(g, 1, 2, {4, 4}), EmptyRegionError);
    }
    SUBCASE("upsampling repeats cells") {
        Grid<std::uint8_t> m({2, 2}, 0);
        m(1, 0) = 1;
        const auto up = resample_nearest(m, {4, 4});
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) CHECK(up(x, y) == (x >= 2 && y < 2 ? 1 : 0));
    }
}

TEST_CASE("self masks") {
    SoftMask m{{2, 2}, 1, 0, Eigen::Vector4d(1, 0.5, 0, 0)};
    const auto s = self_mask(m);
    const auto dense = s.materialize();
    CHECK(dense.rows() == 4);
    CHECK(s(0, 0, 0) == 1.0);
    CHECK(s(0, 0, 1) == 0.5);
    CHECK(s(1, 0, 0) == 0.5);
    CHECK(s(1, 0, 1) == 0.25);
    for (int slice = 2; slice < 4; ++slice) CHECK(dense.row(slice).isZero());

    SoftMask ones{{2, 2}, 1, 0, Eigen::Vector4d::Ones()};
    CHECK(self_mask(ones).materialize() == Eigen::Matrix4d::Ones());
}

TEST_CASE("ascii rendering") {
    AssignmentGrid g({2, 3}, CellAssignment{});
    g(0, 0) = CellAssignment{1, 1};
    g(2, 1) = CellAssignment{2, 1};
    CHECK(render_ascii(g) == "1..\n..2\n");
}
