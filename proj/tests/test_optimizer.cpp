#include "doctest.h"

#include <algorithm>
#include <sstream>

#include "asql/errors.hpp"
#include "asql/optimizer.hpp"

using namespace asql;

namespace {

SceneGraph cat_dog() {
    return parse_scene_graph(R"({"caption":"a cat left of a dog","entities":[{"name":"cat"},{"name":"dog"}],
        "relations":[{"subject":1,"predicate":"left of","object":2}]})");
}

GuidancePlan plan_for(const SceneGraph& g, GridDims dims) {
    return heuristic_plan(g, derive_constraints(g, default_lexicon()), dims);
}

Grid<std::uint8_t> right_column() {
    Grid<std::uint8_t> r({2, 2}, 0);
    r(1, 0) = r(1, 1) = 1;
    return r;
}

}  // namespace

TEST_CASE("mass_in_region") {
    const auto r = right_column();
    CHECK(mass_in_region(Eigen::Vector4d(1, 3, 0, 0), r) == doctest::Approx(0.75));
    CHECK(mass_in_region(Eigen::Vector4d(10, 30, 0, 0), r) == doctest::Approx(0.75));
    CHECK(mass_in_region(Eigen::Vector4d(0, 2, 0, 1), r) == 1.0);
    CHECK(mass_in_region(Eigen::Vector4d::Constant(0.3), r) == doctest::Approx(0.5));
    CHECK(mass_in_region(Eigen::Vector4d::Zero(), r) == 0.0);
    CHECK_THROWS_AS(mass_in_region(Eigen::Vector3d::Ones(), r), ShapeError);
}

TEST_CASE("token layout") {
    const auto seq = TokenMap::from_graph(
        parse_scene_graph(R"({"entities":[{"name":"apple","attributes":["red","shiny"]},{"name":"table"}]})"));
    CHECK(seq.entity == std::vector<Eigen::Index>{0, 3});
    CHECK(seq.attribute[0] == std::vector<Eigen::Index>{1, 2});
    CHECK(seq.token_count == 4);

    const auto given = TokenMap::from_graph(parse_scene_graph(
        R"({"entities":[{"name":"apple","attributes":["red"],"token_index":2,"attribute_token_indices":[1]},
            {"name":"table","token_index":5}]})"));
    CHECK(given.entity == std::vector<Eigen::Index>{2, 5});
    CHECK(given.token_count == 6);
}

TEST_CASE("step invariants") {
    const auto g = cat_dog();
    const auto ctx = build_context(g, plan_for(g, {8, 8}), {8, 8}, false);
    OptimizeConfig cfg;

    SUBCASE("zero step size leaves the latent alone") {
        auto lat = make_latent({8, 8}, ctx.tokens.token_count, 16, 4);
        const auto before = lat;
        cfg.alpha = 0.0;
        const auto l = step(lat, ctx, cfg);
        CHECK(lat.x == before.x);
        CHECK(l.total > 0.0);
    }
    SUBCASE("zero weights give a zero gradient") {
        auto lat = make_latent({8, 8}, ctx.tokens.token_count, 16, 4);
        const auto before = lat;
        cfg.weights = {0, 0, 0, 0};
        step(lat, ctx, cfg);
        CHECK(lat.x == before.x);
    }
    SUBCASE("frozen projections stay frozen") {
        auto lat = make_latent({8, 8}, ctx.tokens.token_count, 16, 4);
        const auto before = lat;
        step(lat, ctx, cfg);
        CHECK(lat.w_q == before.w_q);
        CHECK(lat.keys == before.keys);
        CHECK(lat.x != before.x);
    }
    SUBCASE("a single loss descends for a small enough step") {
        cfg.weights = {0, 0, 1, 0};
        cfg.beta = 1.0;
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const auto start = make_latent({8, 8}, ctx.tokens.token_count, 16, seed);
            bool descended = false;
            double alpha = 1.0;
            for (int halving = 0; halving <= 10 && !descended; ++halving, alpha /= 2) {
                auto lat = start;
                cfg.alpha = alpha;
                const double before = step(lat, ctx, cfg).loc_cross;
                const double after = total_loss(forward(lat, cfg.beta), ctx.targets, cfg.weights).loc_cross;
                descended = after < before;
            }
            CHECK(descended);
        }
    }
}

TEST_CASE("run records and determinism") {
    const auto g = cat_dog();
    const auto plan = plan_for(g, {8, 8});
    OptimizeConfig cfg;
    cfg.steps = 1;
    CHECK(run(g, plan, cfg).records.size() == 1);

    cfg.steps = 12;
    cfg.seed = 17;
    const auto a = run(g, plan, cfg);
    const auto b = run(g, plan, cfg);
    CHECK(a.records == b.records);
    CHECK(a.final_attention.cross == b.final_attention.cross);
    std::ostringstream sa, sb;
    write_trajectory(sa, a);
    write_trajectory(sb, b);
    const auto text = sa.str();
    CHECK(text == sb.str());
    CHECK(std::count(text.begin(), text.end(), '\n') == 12);

    cfg.seed = 18;
    CHECK(run(g, plan, cfg).records != a.records);

    cfg.loss_threshold = 1e9;
    CHECK(run(g, plan, cfg).records.size() == 1);
}

TEST_CASE("run rejects bad configs and plans") {
    const auto g = cat_dog();
    auto plan = plan_for(g, {8, 8});
    OptimizeConfig cfg;
    cfg.steps = 0;
    CHECK_THROWS_AS(run(g, plan, cfg), ValidationError);
    cfg = {};
    cfg.alpha = -1;
    CHECK_THROWS_AS(run(g, plan, cfg), ValidationError);
    cfg = {};
    plan.size_order = {2, 2};
    CHECK_THROWS_AS(run(g, plan, cfg), ValidationError);
}

TEST_CASE("non-finite guard names the step") {
    const auto g = cat_dog();
    const auto ctx = build_context(g, plan_for(g, {4, 4}), {4, 4}, false);
    auto lat = make_latent({4, 4}, ctx.tokens.token_count, 4, 1);
    lat.x(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH_AS(step(lat, ctx, OptimizeConfig{}, 7), doctest::Contains("step 7"), NonFiniteError);
}
