#pragma once

#include <cstddef>
#include <vector>

namespace asql {

struct GridDims {
    int height = 0;
    int width  = 0;

    std::size_t cells() const { return static_cast<std::size_t>(height) * static_cast<std::size_t>(width); }
    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
    friend bool operator==(const GridDims&, const GridDims&) = default;
};

// Dense row-major H x W matrix addressed as (x = column, y = row), row 0 at the top.
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(GridDims dims, T fill = T{}) : dims_(dims), data_(dims.cells(), fill) {}

    GridDims dims() const { return dims_; }
    int height() const { return dims_.height; }
    int width() const { return dims_.width; }
    std::size_t size() const { return data_.size(); }

    T& operator()(int x, int y) { return data_[index(x, y)]; }
    const T& operator()(int x, int y) const { return data_[index(x, y)]; }

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(dims_.width) + static_cast<std::size_t>(x);
    }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    GridDims dims_;
    std::vector<T> data_;
};

}  // namespace asql
