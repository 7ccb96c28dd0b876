#include "asql/tensor_file.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "asql/errors.hpp"

namespace asql {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

template <typename T>
std::vector<std::uint8_t> encode(const Tensor<T>& t, DType dtype) {
    if (t.dims.empty() || t.dims.size() > kMaxTensorRank)
        throw FormatError("tensor rank must be between 1 and " + std::to_string(kMaxTensorRank));
    if (std::any_of(t.dims.begin(), t.dims.end(), [](auto d) { return d == 0; }))
        throw FormatError("tensor dimensions must be at least 1");
    if (t.values.size() != t.element_count()) throw FormatError("tensor payload does not match its dimensions");

    std::vector<std::uint8_t> out(std::begin(kTensorMagic), std::end(kTensorMagic));
    put_u32(out, kTensorVersion);
    out.push_back(static_cast<std::uint8_t>(dtype));
    out.push_back(static_cast<std::uint8_t>(t.dims.size()));
    for (auto d : t.dims) put_u32(out, d);
    out.reserve(out.size() + 4 * t.values.size());
    for (T v : t.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
    return out;
}

template <typename T>
Tensor<T> decode_payload(const std::uint8_t* p, std::vector<std::uint32_t> dims) {
    Tensor<T> t;
    t.dims = std::move(dims);
    t.values.resize(t.element_count());
    for (std::size_t k = 0; k < t.values.size(); ++k) t.values[k] = std::bit_cast<T>(get_u32(p + 4 * k));
    return t;
}

}  // namespace

std::vector<std::uint8_t> encode_tensor(const FloatTensor& t) { return encode(t, DType::Float32); }
std::vector<std::uint8_t> encode_tensor(const IntTensor& t) { return encode(t, DType::Int32); }

AnyTensor decode_tensor(const std::vector<std::uint8_t>& bytes) {
    constexpr std::size_t fixed = sizeof(kTensorMagic) + 4 + 1 + 1;
    if (bytes.size() < fixed) throw FormatError("tensor file truncated in header");
    if (!std::equal(std::begin(kTensorMagic), std::end(kTensorMagic), bytes.begin(),
                    [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; }))
        throw FormatError("bad tensor magic");
    const std::uint32_t version = get_u32(bytes.data() + 8);
    if (version != kTensorVersion) throw FormatError("unsupported tensor version " + std::to_string(version));
    const std::uint8_t dtype = bytes[12];
    const std::size_t rank = bytes[13];
    if (dtype != static_cast<std::uint8_t>(DType::Float32) && dtype != static_cast<std::uint8_t>(DType::Int32))
        throw FormatError("unknown tensor dtype " + std::to_string(dtype));
    if (rank < 1 || rank > kMaxTensorRank) throw FormatError("invalid tensor rank " + std::to_string(rank));
    if (bytes.size() < fixed + 4 * rank) throw FormatError("tensor file truncated in dims");

    std::vector<std::uint32_t> dims(rank);
    std::size_t count = 1;
    for (std::size_t k = 0; k < rank; ++k) {
        dims[k] = get_u32(bytes.data() + fixed + 4 * k);
        if (dims[k] == 0) throw FormatError("tensor dimension " + std::to_string(k) + " is zero");
        count *= dims[k];
    }
    const std::size_t header = fixed + 4 * rank;
    if (bytes.size() - header != 4 * count)
        throw FormatError("tensor payload is " + std::to_string(bytes.size() - header) + " bytes, expected " +
                          std::to_string(4 * count));

    if (dtype == static_cast<std::uint8_t>(DType::Float32)) return decode_payload<float>(bytes.data() + header, dims);
    return decode_payload<std::int32_t>(bytes.data() + header, dims);
}

namespace {

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IOError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IOError("failed writing " + path.string());
}

}  // namespace

void write_tensor(const std::filesystem::path& path, const FloatTensor& t) { write_bytes(path, encode_tensor(t)); }
void write_tensor(const std::filesystem::path& path, const IntTensor& t) { write_bytes(path, encode_tensor(t)); }

AnyTensor read_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IOError("failed reading " + path.string());
    return decode_tensor(bytes);
}

}  // namespace asql
