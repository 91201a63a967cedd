#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace vrd {

// Incompatible grid shapes or channel counts between operands.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/** Dense H x W x C lattice of doubles, row-major with the channel index
 *  innermost: data[(i*width + j)*channels + c]. Grid spacing is 1. */
struct Field {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> data;

    Field() = default;

    Field(int h, int w, int c)
        : height(h), width(w), channels(c),
          data(static_cast<std::size_t>(h) * w * c, 0.0) {}

    double& at(int i, int j, int c) {
        return data[(static_cast<std::size_t>(i) * width + j) * channels + c];
    }
    double at(int i, int j, int c) const {
        return data[(static_cast<std::size_t>(i) * width + j) * channels + c];
    }

    std::size_t size() const { return data.size(); }
    std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }

    bool same_shape(const Field& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }
    bool same_grid(const Field& o) const {
        return height == o.height && width == o.width;
    }
};

// Throws std::invalid_argument if any value is NaN or infinite.
void require_finite(const Field& f, const char* what);

// Throws std::invalid_argument on nonpositive dims or size mismatch.
void require_valid(const Field& f, const char* what);

double max_abs(const Field& f);

}  // namespace vrd
