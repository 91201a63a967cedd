#pragma once

#include "vrd/field.hpp"
#include "vrd/vrd.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace vrd {

// Malformed or truncated on-disk data; the message names the byte offset.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/** VRDT tensor file: "VRDT", u32 version=1, u32 rank=3, three u64 dims
 *  (height, width, channels), then h*w*c float64 values, row-major with the
 *  channel innermost. All integers and floats little-endian. */
void write_vrdt(const std::string& path, const Field& f);
Field read_vrdt(const std::string& path);

/** VRDP parameter file: "VRDP", u32 version=1, u32 n_in, u32 n_out, then
 *  r_q, r_b (n_out^2 each), q_i, b_i (n_out*n_in each), row-major float64
 *  little-endian. */
void write_vrdp(const std::string& path, const VrdParams& p);
VrdParams read_vrdp(const std::string& path);

// 8-bit binary PGM, header "P5\n<width> <height>\n255\n".
void write_pgm8(const std::string& path, int height, int width,
                const std::vector<std::uint8_t>& pixels);

// One row per lattice row, comma-separated values of channel 0.
void write_field_csv(const std::string& path, const Field& f);

void write_loss_csv(const std::string& path, const std::vector<double>& history);

}  // namespace vrd
