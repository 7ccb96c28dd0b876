#include "doctest.h"

#include <cmath>

#include "asql/attention.hpp"
#include "oracles.hpp"

using namespace asql;

TEST_CASE("sigmoid attention at the default beta") {
    Eigen::MatrixXd s(1, 3);
    s << 0.05, 0.0, -0.05;
    const auto a = sigmoid_attention(s);
    CHECK(std::abs(a(0, 0) - 0.993307149075715) < 1e-6);
    CHECK(a(0, 1) == 0.5);
    CHECK(a(0, 0) + a(0, 2) == doctest::Approx(1.0));
    CHECK(sigmoid_attention(s, 1.0)(0, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-0.05))));
}

TEST_CASE("latent shapes and frozen projections") {
    const auto a = make_latent({8, 8}, 4, 16, 1);
    const auto b = make_latent({8, 8}, 4, 16, 2);
    CHECK(a.x.rows() == 64);
    CHECK(a.x.cols() == 16);
    CHECK(a.w_q.rows() == 16);
    CHECK(a.keys.rows() == 4);
    CHECK(a.w_q == b.w_q);
    CHECK(a.keys == b.keys);
    CHECK(a.x != b.x);
    CHECK(make_latent({8, 8}, 4, 16, 1).x == a.x);
}

TEST_CASE("gaussian draws have the requested scale") {
    const auto g = gaussian_matrix(200, 200, 9, 0.25);
    const double mean = g.mean();
    const double var = (g.array() - mean).square().mean();
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::sqrt(var) == doctest::Approx(0.25).epsilon(0.02));
}

TEST_CASE("forward produces valid attention") {
    const auto lat = make_latent({4, 4}, 3, 8, 5);
    const auto st = forward(lat);
    CHECK(st.cross.rows() == 16);
    CHECK(st.cross.cols() == 3);
    CHECK(st.self_attn.rows() == 16);
    CHECK(st.self_attn.cols() == 16);
    CHECK(st.cross.minCoeff() >= 0.0);
    CHECK(st.cross.maxCoeff() <= 1.0);
    for (Eigen::Index r = 0; r < 16; ++r) CHECK(st.self_attn.row(r).sum() == doctest::Approx(1.0));
}

TEST_CASE("backward matches finite differences for a linear probe") {
    const auto lat = make_latent({3, 3}, 2, 4, 11);
    const Eigen::MatrixXd wc = gaussian_matrix(9, 2, 21);
    const Eigen::MatrixXd ws = gaussian_matrix(9, 9, 22);
    for (double beta : {1.0, kDefaultBeta}) {
        auto probe = [&](const Eigen::MatrixXd& x) {
            auto l = lat;
            l.x = x;
            const auto st = forward(l, beta);
            return (st.cross.array() * wc.array()).sum() + (st.self_attn.array() * ws.array()).sum();
        };
        const auto st = forward(lat, beta);
        const auto g = backward(lat, st, {wc, ws}, beta);
        const auto numeric = oracle::central_difference(probe, lat.x, 1e-6);
        CHECK((g - numeric).cwiseAbs().maxCoeff() < 1e-5 * std::max(1.0, numeric.cwiseAbs().maxCoeff()));
    }
}
