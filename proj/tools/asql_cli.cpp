// asql: command-line front end for scene-graph layout guidance.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "asql/errors.hpp"
#include "asql/layout.hpp"
#include "asql/losses.hpp"
#include "asql/optimizer.hpp"
#include "asql/provider.hpp"
#include "asql/scene_graph.hpp"
#include "asql/tensor_file.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class UsageError : public asql::Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "UsageError"; }
};

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw asql::IOError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

asql::GridDims parse_dims(const std::string& text) {
    const auto x = text.find_first_of("xX");
    try {
        if (x == std::string::npos) throw std::invalid_argument("");
        std::size_t used_h = 0, used_w = 0;
        const int h = std::stoi(text.substr(0, x), &used_h);
        const int w = std::stoi(text.substr(x + 1), &used_w);
        if (used_h != x || used_w != text.size() - x - 1 || h < 1 || w < 1) throw std::invalid_argument("");
        return {h, w};
    } catch (const std::exception&) {
        throw UsageError("dimensions must look like HxW, got '" + text + "'");
    }
}

asql::LossWeights parse_weights(const std::string& text, asql::LossWeights base) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            v.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw UsageError("weights must be four comma-separated numbers");
        }
    }
    if (v.size() != 4) throw UsageError("weights must be four comma-separated numbers");
    base.att = v[0];
    base.size = v[1];
    base.loc_cross = v[2];
    base.loc_self = v[3];
    return base;
}

struct PlanOptions {
    std::string grid = "16x16";
    std::string provider;
    int timeout_ms = 60'000;

    void attach(CLI::App* cmd) {
        cmd->add_option("--grid", grid, "Layout grid size HxW")->capture_default_str();
        cmd->add_option("--provider", provider,
                        "heuristic, or exec:<command> for an external planner (default: $ASQL_PROVIDER or heuristic)");
        cmd->add_option("--timeout-ms", timeout_ms, "External provider timeout in milliseconds")->capture_default_str();
    }

    asql::GuidancePlan make(const asql::SceneGraph& graph) const {
        const auto dims = parse_dims(grid);
        std::string choice = provider;
        if (choice.empty()) {
            if (const char* env = std::getenv("ASQL_PROVIDER"); env && *env) choice = env;
        }
        if (choice.empty() || choice == "heuristic")
            return asql::heuristic_plan(graph, asql::derive_constraints(graph, asql::default_lexicon()), dims);
        if (choice.rfind("exec:", 0) == 0) {
            const auto command = choice.substr(5);
            if (command.empty()) throw UsageError("exec: provider needs a command");
            return asql::external_plan(graph, dims, {command, std::chrono::milliseconds(timeout_ms)});
        }
        throw UsageError("unknown provider '" + choice + "'");
    }
};

struct LossOptions {
    std::string weights;
    double eta = 1.0;
    double clamp_eps = 1e-7;

    void attach(CLI::App* cmd) {
        cmd->add_option("--weights", weights, "Loss weights att,size,loc_cross,loc_self (default 1,1,1,1)");
        cmd->add_option("--eta", eta, "Attribute leakage regularizer")->capture_default_str();
        cmd->add_option("--clamp-eps", clamp_eps, "BCE clamp epsilon")->capture_default_str();
    }

    asql::LossWeights make() const {
        asql::LossWeights w;
        w.eta = eta;
        w.clamp_eps = clamp_eps;
        if (!weights.empty()) w = parse_weights(weights, w);
        w.validate();
        return w;
    }
};

asql::SceneGraph load_graph(const std::string& path) { return asql::parse_scene_graph(read_text(path)); }

asql::FloatTensor to_tensor(const asql::SoftMask& mask) {
    asql::FloatTensor t;
    t.dims = {static_cast<std::uint32_t>(mask.dims.height), static_cast<std::uint32_t>(mask.dims.width)};
    t.values.reserve(static_cast<std::size_t>(mask.values.size()));
    for (Eigen::Index k = 0; k < mask.values.size(); ++k) t.values.push_back(static_cast<float>(mask.values(k)));
    return t;
}

void write_pgm(const fs::path& path, const asql::SoftMask& mask) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw asql::IOError("cannot open " + path.string() + " for writing");
    out << "P5\n" << mask.dims.width << ' ' << mask.dims.height << "\n255\n";
    for (Eigen::Index k = 0; k < mask.values.size(); ++k)
        out.put(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(mask.values(k), 0.0, 1.0) * 255.0))));
    if (!out) throw asql::IOError("failed writing " + path.string());
}

asql::FloatTensor matrix_tensor(const Eigen::MatrixXd& m, std::vector<std::uint32_t> dims) {
    asql::FloatTensor t;
    t.dims = std::move(dims);
    t.values.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) t.values.push_back(static_cast<float>(m(r, c)));
    return t;
}

Eigen::MatrixXd tensor_matrix(const asql::FloatTensor& t, Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = t.values[static_cast<std::size_t>(r * cols + c)];
    return m;
}

asql::FloatTensor read_float_tensor(const std::string& path) {
    auto any = asql::read_tensor(path);
    if (!std::holds_alternative<asql::FloatTensor>(any)) throw asql::ShapeError(path + " must hold 32-bit floats");
    return std::get<asql::FloatTensor>(std::move(any));
}

// Cross attention is stored as (H'W', n) or (H', W', n).
asql::AttentionStack load_attention(const std::string& cross_path, const std::string& self_path,
                                    const std::string& res_text) {
    const auto cross = read_float_tensor(cross_path);
    asql::GridDims res{};
    Eigen::Index tokens = 0;
    if (cross.dims.size() == 3) {
        res = {static_cast<int>(cross.dims[0]), static_cast<int>(cross.dims[1])};
        tokens = cross.dims[2];
        if (!res_text.empty() && parse_dims(res_text) != res)
            throw asql::ShapeError("--res disagrees with the cross-attention tensor");
    } else if (cross.dims.size() == 2) {
        tokens = cross.dims[1];
        if (!res_text.empty()) {
            res = parse_dims(res_text);
        } else {
            const auto side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(cross.dims[0]))));
            if (static_cast<std::uint32_t>(side * side) != cross.dims[0])
                throw UsageError("cannot infer a square resolution from " + std::to_string(cross.dims[0]) +
                                 " locations; pass --res");
            res = {side, side};
        }
        if (res.cells() != cross.dims[0]) throw asql::ShapeError("--res does not match the cross-attention rows");
    } else {
        throw asql::ShapeError("cross-attention tensor must have rank 2 or 3");
    }

    asql::AttentionStack stack;
    stack.dims = res;
    const auto cells = static_cast<Eigen::Index>(res.cells());
    stack.cross = tensor_matrix(cross, cells, tokens);
    if (!self_path.empty()) {
        const auto self = read_float_tensor(self_path);
        if (self.element_count() != res.cells() * res.cells() || self.dims[0] != res.cells())
            throw asql::ShapeError("self-attention tensor must have shape (H'W', H', W') or (H'W', H'W')");
        stack.self_attn = tensor_matrix(self, cells, cells);
    } else {
        stack.self_attn = Eigen::MatrixXd::Zero(cells, cells);
    }
    if ((stack.cross.array() < 0.0).any() || (stack.cross.array() > 1.0).any())
        throw asql::ShapeError("cross-attention entries must lie in [0, 1]");
    return stack;
}

void emit(const json& j, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << j.dump(2) << '\n';
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw asql::IOError("cannot open " + out_path + " for writing");
    out << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scene-graph layout guidance: plans, grids, soft masks, attention losses and latent optimization"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    std::string graph_path;

    auto* parse_cmd = app.add_subcommand("parse", "Validate a scene-graph document and echo it normalized");
    parse_cmd->add_option("graph", graph_path, "Scene-graph JSON")->required();

    PlanOptions plan_opts;
    std::string out_path;
    auto* plan_cmd = app.add_subcommand("plan", "Build a guidance plan (size order, seeds, constraints)");
    plan_cmd->add_option("graph", graph_path, "Scene-graph JSON")->required();
    plan_opts.attach(plan_cmd);
    plan_cmd->add_option("--out", out_path, "Write the plan JSON here instead of stdout");

    bool verbose = false;
    auto* grid_cmd = app.add_subcommand("grid", "Fuzzy-cluster the plan into an assignment grid");
    grid_cmd->add_option("graph", graph_path, "Scene-graph JSON")->required();
    plan_opts.attach(grid_cmd);
    grid_cmd->add_option("--out", out_path, "Also write the grid as an int32 tensor (2, H, W)");
    grid_cmd->add_flag("--verbose", verbose, "Print id:sub-region per cell");

    std::string out_dir, res_text;
    bool per_subregion = false, pgm = false;
    auto* masks_cmd = app.add_subcommand("masks", "Write distance-transform soft masks per entity");
    masks_cmd->add_option("graph", graph_path, "Scene-graph JSON")->required();
    plan_opts.attach(masks_cmd);
    masks_cmd->add_option("--out-dir", out_dir, "Output directory")->required();
    masks_cmd->add_option("--res", res_text, "Mask resolution H'xW' (default: grid size)");
    masks_cmd->add_flag("--per-subregion", per_subregion, "Also write one mask per quantity sub-region");
    masks_cmd->add_flag("--pgm", pgm, "Also write binary PGM renderings");

    std::string cross_path, self_path;
    LossOptions loss_opts;
    auto* loss_cmd = app.add_subcommand("loss", "Evaluate guidance losses on captured attention tensors");
    loss_cmd->add_option("--cross", cross_path, "Cross-attention tensor (H'W', n) or (H', W', n)")->required();
    loss_cmd->add_option("--self", self_path, "Self-attention tensor (H'W', H', W')");
    loss_cmd->add_option("--graph", graph_path, "Scene-graph JSON")->required();
    loss_cmd->add_option("--res", res_text, "Attention resolution H'xW' when the cross tensor is rank 2");
    loss_cmd->add_flag("--per-subregion", per_subregion, "Use one location target per quantity sub-region");
    plan_opts.attach(loss_cmd);
    loss_opts.attach(loss_cmd);

    asql::OptimizeConfig opt;
    std::string threshold_text, cross_out, self_out;
    auto* opt_cmd = app.add_subcommand("optimize", "Run inference-time optimization on a synthetic attention source");
    opt_cmd->add_option("graph", graph_path, "Scene-graph JSON")->required();
    plan_opts.attach(opt_cmd);
    loss_opts.attach(opt_cmd);
    opt_cmd->add_option("--steps", opt.steps, "Optimization steps")->capture_default_str();
    opt_cmd->add_option("--alpha", opt.alpha, "Step size")->capture_default_str();
    opt_cmd->add_option("--seed", opt.seed, "Latent seed")->capture_default_str();
    opt_cmd->add_option("--beta", opt.beta, "Sigmoid sharpness")->capture_default_str();
    opt_cmd->add_option("--dim", opt.latent_dim, "Latent / query dimension d")->capture_default_str();
    opt_cmd->add_option("--inner", opt.inner_iterations, "Gradient updates per recorded step")->capture_default_str();
    opt_cmd->add_option("--threshold", threshold_text, "Stop once the total loss is at or below this value");
    opt_cmd->add_option("--res", res_text, "Attention resolution H'xW' (default: grid size)");
    opt_cmd->add_flag("--per-subregion", per_subregion, "Location losses per quantity sub-region");
    opt_cmd->add_option("--out", out_path, "Write the JSON-lines trajectory here instead of stdout");
    opt_cmd->add_option("--cross-out", cross_out, "Write the final cross attention as a (H', W', n) tensor");
    opt_cmd->add_option("--self-out", self_out, "Write the final self attention as a (H'W', H', W') tensor");

    try {
        try {
            app.parse(argc, argv);
        } catch (const CLI::Success& e) {
            return app.exit(e);  // --help and friends
        } catch (const CLI::ParseError& e) {
            throw UsageError(e.what());
        }

        if (*parse_cmd) {
            std::cout << asql::to_json(load_graph(graph_path)).dump(2) << '\n';
        } else if (*plan_cmd) {
            const auto graph = load_graph(graph_path);
            emit(asql::to_json(asql::validate_plan(plan_opts.make(graph), graph)), out_path);
        } else if (*grid_cmd) {
            const auto graph = load_graph(graph_path);
            const auto grid = asql::build_assignment(plan_opts.make(graph), graph);
            std::cout << asql::render_ascii(grid, verbose);
            if (!out_path.empty()) {
                asql::IntTensor t;
                t.dims = {2, static_cast<std::uint32_t>(grid.height()), static_cast<std::uint32_t>(grid.width())};
                for (int channel = 0; channel < 2; ++channel)
                    for (const auto& c : grid.data()) t.values.push_back(channel == 0 ? c.entity_id : c.subregion);
                asql::write_tensor(out_path, t);
            }
        } else if (*masks_cmd) {
            const auto graph = load_graph(graph_path);
            const auto plan = plan_opts.make(graph);
            const auto grid = asql::build_assignment(plan, graph);
            const auto res = res_text.empty() ? plan.dims() : parse_dims(res_text);
            fs::create_directories(out_dir);
            auto save = [&](const asql::SoftMask& m, const std::string& stem) {
                asql::write_tensor(fs::path(out_dir) / (stem + ".tensor"), to_tensor(m));
                if (pgm) write_pgm(fs::path(out_dir) / (stem + ".pgm"), m);
            };
            for (const auto& e : graph.entities) {
                const std::string stem = "entity_" + std::to_string(e.id);
                save(asql::soft_mask(grid, e.id, std::nullopt, res), stem);
                if (per_subregion) {
                    for (int sub = 1; sub <= e.quantity; ++sub)
                        save(asql::soft_mask(grid, e.id, sub, res), stem + "_sub_" + std::to_string(sub));
                }
            }
        } else if (*loss_cmd) {
            const auto graph = load_graph(graph_path);
            const auto weights = loss_opts.make();
            const auto attention = load_attention(cross_path, self_path, res_text);
            const auto plan = plan_opts.make(graph);
            auto ctx = asql::build_context(graph, plan, attention.dims, per_subregion);
            if (ctx.tokens.token_count > attention.tokens())
                throw asql::ShapeError("graph needs " + std::to_string(ctx.tokens.token_count) +
                                       " tokens, cross-attention has " + std::to_string(attention.tokens()));
            if (self_path.empty()) ctx.targets.self_masks.clear();
            auto report = asql::to_json(asql::total_loss(attention, ctx.targets, weights));
            report["weights"] = asql::to_json(weights);
            std::cout << report.dump() << '\n';
        } else if (*opt_cmd) {
            const auto graph = load_graph(graph_path);
            opt.weights = loss_opts.make();
            opt.per_subregion = per_subregion;
            if (!res_text.empty()) opt.resolution = parse_dims(res_text);
            if (!threshold_text.empty()) {
                try {
                    opt.loss_threshold = std::stod(threshold_text);
                } catch (const std::exception&) {
                    throw UsageError("--threshold must be a number");
                }
            }
            const auto traj = asql::run(graph, plan_opts.make(graph), opt);
            if (out_path.empty()) {
                asql::write_trajectory(std::cout, traj);
            } else {
                std::ofstream out(out_path);
                if (!out) throw asql::IOError("cannot open " + out_path + " for writing");
                asql::write_trajectory(out, traj);
            }
            const auto& fa = traj.final_attention;
            const auto h = static_cast<std::uint32_t>(fa.dims.height), w = static_cast<std::uint32_t>(fa.dims.width);
            if (!cross_out.empty())
                asql::write_tensor(cross_out, matrix_tensor(fa.cross, {h, w, static_cast<std::uint32_t>(fa.tokens())}));
            if (!self_out.empty()) asql::write_tensor(self_out, matrix_tensor(fa.self_attn, {h * w, h, w}));
        }
        return 0;
    } catch (const asql::Error& e) {
        std::cerr << json{{"error", e.kind()}, {"message", e.what()}}.dump() << '\n';
    } catch (const std::exception& e) {
        std::cerr << json{{"error", "InternalError"}, {"message", e.what()}}.dump() << '\n';
    }
    return 1;
}
