#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace asql {

// Binary tensor interchange format, all integers little-endian:
//   "ASQLTNSR" | u32 version = 1 | u8 dtype (1 = f32, 2 = i32) | u8 rank | rank x u32 dims | payload
// The payload is row-major with no padding.
inline constexpr char kTensorMagic[8] = {'A', 'S', 'Q', 'L', 'T', 'N', 'S', 'R'};
inline constexpr std::uint32_t kTensorVersion = 1;
inline constexpr std::size_t kMaxTensorRank = 8;

enum class DType : std::uint8_t { Float32 = 1, Int32 = 2 };

template <typename T>
struct Tensor {
    std::vector<std::uint32_t> dims;
    std::vector<T> values;

    std::size_t element_count() const {
        std::size_t n = 1;
        for (auto d : dims) n *= d;
        return n;
    }
    friend bool operator==(const Tensor&, const Tensor&) = default;
};

using FloatTensor = Tensor<float>;
using IntTensor = Tensor<std::int32_t>;
using AnyTensor = std::variant<FloatTensor, IntTensor>;

std::vector<std::uint8_t> encode_tensor(const FloatTensor& t);
std::vector<std::uint8_t> encode_tensor(const IntTensor& t);
AnyTensor decode_tensor(const std::vector<std::uint8_t>& bytes);  // throws FormatError

void write_tensor(const std::filesystem::path& path, const FloatTensor& t);  // throws IOError
void write_tensor(const std::filesystem::path& path, const IntTensor& t);
AnyTensor read_tensor(const std::filesystem::path& path);  // throws IOError, FormatError

}  // namespace asql
