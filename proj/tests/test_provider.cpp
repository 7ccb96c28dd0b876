#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "asql/errors.hpp"
#include "asql/provider.hpp"

using namespace asql;
using namespace std::chrono_literals;

namespace {

SceneGraph cat_dog() {
    return parse_scene_graph(R"({"caption":"a cat left of a dog","entities":[{"name":"cat"},{"name":"dog"}],
        "relations":[{"subject":1,"predicate":"left of","object":2}]})");
}

GuidancePlan plan_for(const SceneGraph& g, GridDims dims) {
    return heuristic_plan(g, derive_constraints(g, default_lexicon()), dims);
}

// Writes a one-off shell script and returns its path.
std::string script(const std::string& name, const std::string& body) {
    const auto dir = std::filesystem::temp_directory_path() / "asql_provider_tests";
    std::filesystem::create_directories(dir);
    const auto path = dir / name;
    std::ofstream(path) << "#!/bin/sh\n" << body << "\n";
    std::filesystem::permissions(path, std::filesystem::perms::owner_all);
    return path.string();
}

}  // namespace

TEST_CASE("heuristic seeds for cat left of dog") {
    const auto g = cat_dog();
    const auto plan = plan_for(g, {4, 4});
    const auto seeds = seed_points(plan.seed_grid, 2);
    CHECK(seeds[0] == SeedPoint{1, 1, 2});
    CHECK(seeds[1] == SeedPoint{2, 3, 2});
    CHECK(plan.size_order == std::vector<EntityId>{1, 2});
    CHECK_NOTHROW(validate_plan(plan, g));

    const auto big = plan_for(g, {16, 16});
    const auto s16 = seed_points(big.seed_grid, 2);
    CHECK(s16[0] == SeedPoint{1, 4, 8});
    CHECK(s16[1] == SeedPoint{2, 12, 8});
}

TEST_CASE("heuristic seeds for one and for unrelated entities") {
    const auto one = parse_scene_graph(R"({"entities":[{"name":"cat"}]})");
    CHECK(seed_points(plan_for(one, {4, 4}).seed_grid, 1)[0] == SeedPoint{1, 2, 2});

    // Both land on the centre; the second is nudged one column right.
    const auto two = parse_scene_graph(R"({"entities":[{"name":"cat"},{"name":"ball"}]})");
    const auto plan = plan_for(two, {4, 4});
    const auto seeds = seed_points(plan.seed_grid, 2);
    CHECK(seeds[0] == SeedPoint{1, 2, 2});
    CHECK(seeds[1] == SeedPoint{2, 3, 2});
    CHECK(plan.size_order == std::vector<EntityId>{2, 1});
}

TEST_CASE("heuristic plan capacity") {
    const auto g = parse_scene_graph(R"({"entities":[{"name":"a"},{"name":"b"},{"name":"c"}],"relations":[
        {"subject":1,"predicate":"left of","object":2},{"subject":2,"predicate":"left of","object":3}]})");
    CHECK_THROWS_AS(plan_for(g, {2, 2}), CapacityError);
    CHECK_NOTHROW(plan_for(g, {1, 3}));
}

TEST_CASE("size classes") {
    CHECK(size_class("apple") < size_class("cat"));
    CHECK(size_class("cat") < size_class("dog"));
    CHECK(size_class("Elephants") == 5);
    CHECK(size_class("flumph") == 3);
}

TEST_CASE("seed_points reduces multi-cell seeds to the floored centroid") {
    Grid<int> g({4, 4}, 0);
    g(0, 0) = 1;
    g(1, 1) = 1;
    g(3, 3) = 2;
    const auto seeds = seed_points(g, 2);
    CHECK(seeds[0] == SeedPoint{1, 0, 0});
    CHECK(seeds[1] == SeedPoint{2, 3, 3});
    CHECK_THROWS_AS(seed_points(g, 3), ValidationError);
}

TEST_CASE("validate_plan rejects broken plans") {
    const auto g = cat_dog();
    auto plan = plan_for(g, {4, 4});

    auto bad_order = plan;
    bad_order.size_order = {1, 1};
    CHECK_THROWS_AS(validate_plan(bad_order, g), ValidationError);

    auto swapped = plan;
    std::swap(swapped.seed_grid(1, 2), swapped.seed_grid(3, 2));
    CHECK_THROWS_WITH_AS(validate_plan(swapped, g), doctest::Contains("seed violates constraint"), ValidationError);

    auto missing = plan;
    missing.seed_grid(3, 2) = 0;
    CHECK_THROWS_AS(validate_plan(missing, g), ValidationError);

    auto dup = plan;
    dup.constraints.push_back(dup.constraints.front());
    CHECK_THROWS_AS(validate_plan(dup, g), ValidationError);
}

TEST_CASE("plan json round trip") {
    const auto g = cat_dog();
    const auto plan = plan_for(g, {5, 7});
    CHECK(plan_from_json(to_json(plan)) == plan);
    CHECK_THROWS_AS(plan_from_json(nlohmann::json::parse(R"({"size_order":[1]})")), ProtocolError);
    CHECK_THROWS_AS(plan_from_json(nlohmann::json::parse(R"({"size_order":[1],"seed_grid":[[1,0],[0]]})")),
                    ProtocolError);
    CHECK_THROWS_AS(plan_from_json(nlohmann::json::parse(R"({"size_order":[1],"seed_grid":[[1]],"extra":1})")),
                    ProtocolError);
}

TEST_CASE("external provider") {
    const auto g = cat_dog();
    const GridDims dims{4, 4};
    const auto good = to_json(plan_for(g, dims)).dump();

    SUBCASE("well-formed response") {
        const auto cmd = script("good.sh", "cat >/dev/null\necho '" + good + "'");
        CHECK(external_plan(g, dims, {cmd}) == plan_for(g, dims));
    }
    SUBCASE("provider sees the request") {
        const auto cmd = script("echo_grid.sh", "grep -q '\"height\":4' && echo '" + good + "'");
        CHECK_NOTHROW(external_plan(g, dims, {cmd}));
    }
    SUBCASE("invalid size order") {
        auto bad = nlohmann::json::parse(good);
        bad["size_order"] = {1, 1};
        const auto cmd = script("bad_order.sh", "cat >/dev/null\necho '" + bad.dump() + "'");
        CHECK_THROWS_AS(external_plan(g, dims, {cmd}), ValidationError);
    }
    SUBCASE("wrong grid size") {
        CHECK_THROWS_AS(external_plan(g, {8, 8}, {script("good8.sh", "cat >/dev/null\necho '" + good + "'")}),
                        ValidationError);
    }
    SUBCASE("not json") {
        CHECK_THROWS_AS(external_plan(g, dims, {script("junk.sh", "echo hello")}), ProtocolError);
    }
    SUBCASE("nonzero exit") {
        CHECK_THROWS_WITH_AS(external_plan(g, dims, {script("fail.sh", "exit 3")}),
                             doctest::Contains("status 3"), TransportError);
    }
    SUBCASE("timeout") {
        CHECK_THROWS_AS(external_plan(g, dims, {script("slow.sh", "sleep 5"), 200ms}), TransportError);
    }
}

TEST_CASE("run_process pumps large payloads both ways") {
    const std::string input(1 << 20, 'x');
    const auto r = run_process("cat", input, 10s);
    CHECK(r.exit_status == 0);
    CHECK(r.out == input);
    const auto e = run_process("echo oops >&2; exit 4", "", 10s);
    CHECK(e.exit_status == 4);
    CHECK(e.err == "oops\n");
}
