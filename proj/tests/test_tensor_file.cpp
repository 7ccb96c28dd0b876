#include "doctest.h"

#include <filesystem>
#include <limits>

#include "asql/errors.hpp"
#include "asql/tensor_file.hpp"

using namespace asql;

TEST_CASE("rank-3 header bytes") {
    FloatTensor t{{4, 2, 2}, std::vector<float>(16, 0.0f)};
    const auto bytes = encode_tensor(t);
    const std::vector<std::uint8_t> header{'A', 'S', 'Q', 'L', 'T', 'N', 'S', 'R', 1, 0, 0, 0, 1, 3,
                                           4, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0};
    REQUIRE(bytes.size() == header.size() + 64);
    CHECK(std::equal(header.begin(), header.end(), bytes.begin()));
}

TEST_CASE("payload is little-endian") {
    const auto f = encode_tensor(FloatTensor{{1}, {1.0f}});
    CHECK(std::vector<std::uint8_t>(f.end() - 4, f.end()) == std::vector<std::uint8_t>{0x00, 0x00, 0x80, 0x3f});
    const auto i = encode_tensor(IntTensor{{1}, {-2}});
    CHECK(i[12] == 2);
    CHECK(std::vector<std::uint8_t>(i.end() - 4, i.end()) == std::vector<std::uint8_t>{0xfe, 0xff, 0xff, 0xff});
}

TEST_CASE("round trips are bit exact") {
    FloatTensor f{{2, 3}, {0.0f, -0.0f, 1.5f, std::numeric_limits<float>::denorm_min(),
                           std::numeric_limits<float>::quiet_NaN(), -3.25e20f}};
    const auto back = std::get<FloatTensor>(decode_tensor(encode_tensor(f)));
    CHECK(encode_tensor(back) == encode_tensor(f));

    IntTensor i{{2, 1, 2}, {1, -1, 0, 7}};
    const auto path = std::filesystem::temp_directory_path() / "asql_roundtrip.tensor";
    write_tensor(path, i);
    CHECK(std::get<IntTensor>(read_tensor(path)) == i);
    std::filesystem::remove(path);
}

TEST_CASE("malformed files") {
    auto good = encode_tensor(IntTensor{{2}, {1, 2}});
    auto bad_magic = good;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(decode_tensor(bad_magic), FormatError);
    auto bad_version = good;
    bad_version[8] = 2;
    CHECK_THROWS_AS(decode_tensor(bad_version), FormatError);
    auto bad_dtype = good;
    bad_dtype[12] = 7;
    CHECK_THROWS_AS(decode_tensor(bad_dtype), FormatError);
    auto truncated = good;
    truncated.pop_back();
    CHECK_THROWS_AS(decode_tensor(truncated), FormatError);
    auto trailing = good;
    trailing.push_back(0);
    CHECK_THROWS_AS(decode_tensor(trailing), FormatError);
    CHECK_THROWS_AS(read_tensor("/nonexistent/dir/x.tensor"), IOError);
}
