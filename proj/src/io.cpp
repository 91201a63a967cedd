#include "vrd/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; byte swapping is not implemented");
static_assert(std::numeric_limits<double>::is_iec559, "IEEE-754 doubles required");

namespace vrd {

namespace {

class Reader {
public:
    Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw FormatError(path + ": cannot open file");
    }

    void bytes(void* dst, std::size_t n, const char* what) {
        in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw FormatError(path_ + ": truncated while reading " + what + " at offset " +
                              std::to_string(offset_));
        }
        offset_ += n;
    }

    std::uint32_t u32(const char* what) {
        std::uint32_t v;
        bytes(&v, 4, what);
        return v;
    }

    std::uint64_t u64(const char* what) {
        std::uint64_t v;
        bytes(&v, 8, what);
        return v;
    }

    void doubles(double* dst, std::size_t count, const char* what) {
        bytes(dst, count * sizeof(double), what);
    }

    void magic(const char expect[4]) {
        char m[4];
        bytes(m, 4, "magic");
        if (std::memcmp(m, expect, 4) != 0) {
            throw FormatError(path_ + ": bad magic at offset 0, expected " +
                              std::string(expect, 4));
        }
    }

    void expect_eof() {
        char c;
        in_.read(&c, 1);
        if (!in_.eof()) {
            throw FormatError(path_ + ": trailing bytes at offset " + std::to_string(offset_));
        }
    }

    std::size_t offset() const { return offset_; }
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ifstream in_;
    std::size_t offset_ = 0;
};

class Writer {
public:
    Writer(const std::string& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw FormatError(path + ": cannot open file for writing");
    }

    void bytes(const void* src, std::size_t n) {
        out_.write(static_cast<const char*>(src), static_cast<std::streamsize>(n));
    }
    void u32(std::uint32_t v) { bytes(&v, 4); }
    void u64(std::uint64_t v) { bytes(&v, 8); }
    void doubles(const double* src, std::size_t count) { bytes(src, count * sizeof(double)); }

    void close() {
        out_.close();
        if (!out_) throw FormatError(path_ + ": write failed");
    }

private:
    std::string path_;
    std::ofstream out_;
};

}  // namespace

void write_vrdt(const std::string& path, const Field& f) {
    require_valid(f, "write_vrdt");
    Writer w(path);
    w.bytes("VRDT", 4);
    w.u32(1);
    w.u32(3);
    w.u64(static_cast<std::uint64_t>(f.height));
    w.u64(static_cast<std::uint64_t>(f.width));
    w.u64(static_cast<std::uint64_t>(f.channels));
    w.doubles(f.data.data(), f.data.size());
    w.close();
}

Field read_vrdt(const std::string& path) {
    Reader r(path);
    r.magic("VRDT");
    const std::uint32_t version = r.u32("version");
    if (version != 1) {
        throw FormatError(path + ": unsupported version " + std::to_string(version) +
                          " at offset 4");
    }
    const std::uint32_t rank = r.u32("rank");
    if (rank != 3) {
        throw FormatError(path + ": unsupported rank " + std::to_string(rank) + " at offset 8");
    }
    const std::uint64_t h = r.u64("height");
    const std::uint64_t w = r.u64("width");
    const std::uint64_t c = r.u64("channels");
    if (h == 0 || w == 0 || c == 0 || h * w * c > (1ull << 31)) {
        throw FormatError(path + ": implausible dimensions at offset 12");
    }
    Field f(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
    r.doubles(f.data.data(), f.data.size(), "tensor values");
    r.expect_eof();
    require_finite(f, ("read_vrdt " + path).c_str());
    return f;
}

void write_vrdp(const std::string& path, const VrdParams& p) {
    Writer w(path);
    w.bytes("VRDP", 4);
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(p.n_in));
    w.u32(static_cast<std::uint32_t>(p.n_out));
    w.doubles(p.r_q.m.data(), p.r_q.m.size());
    w.doubles(p.r_b.m.data(), p.r_b.m.size());
    w.doubles(p.q_i.m.data(), p.q_i.m.size());
    w.doubles(p.b_i.m.data(), p.b_i.m.size());
    w.close();
}

VrdParams read_vrdp(const std::string& path) {
    Reader r(path);
    r.magic("VRDP");
    const std::uint32_t version = r.u32("version");
    if (version != 1) {
        throw FormatError(path + ": unsupported version " + std::to_string(version) +
                          " at offset 4");
    }
    const std::uint32_t n_in = r.u32("n_in");
    const std::uint32_t n_out = r.u32("n_out");
    if (n_out == 0 || n_in > 4096 || n_out > 4096) {
        throw FormatError(path + ": implausible channel counts at offset 8");
    }
    VrdParams p;
    p.n_in = static_cast<int>(n_in);
    p.n_out = static_cast<int>(n_out);
    p.r_q = Mat(p.n_out, p.n_out);
    p.r_b = Mat(p.n_out, p.n_out);
    p.q_i = Mat(p.n_out, p.n_in);
    p.b_i = Mat(p.n_out, p.n_in);
    r.doubles(p.r_q.m.data(), p.r_q.m.size(), "r_q");
    r.doubles(p.r_b.m.data(), p.r_b.m.size(), "r_b");
    r.doubles(p.q_i.m.data(), p.q_i.m.size(), "q_i");
    r.doubles(p.b_i.m.data(), p.b_i.m.size(), "b_i");
    r.expect_eof();
    return p;
}

void write_pgm8(const std::string& path, int height, int width,
                const std::vector<std::uint8_t>& pixels) {
    if (pixels.size() != static_cast<std::size_t>(height) * width) {
        throw std::invalid_argument("write_pgm8: pixel count mismatch");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError(path + ": cannot open file for writing");
    out << "P5\n" << width << " " << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(pixels.data()),
              static_cast<std::streamsize>(pixels.size()));
    if (!out) throw FormatError(path + ": write failed");
}

void write_field_csv(const std::string& path, const Field& f) {
    std::ofstream out(path);
    if (!out) throw FormatError(path + ": cannot open file for writing");
    out.precision(17);
    for (int i = 0; i < f.height; ++i) {
        for (int j = 0; j < f.width; ++j) {
            if (j) out << ",";
            out << f.at(i, j, 0);
        }
        out << "\n";
    }
    if (!out) throw FormatError(path + ": write failed");
}

void write_loss_csv(const std::string& path, const std::vector<double>& history) {
    std::ofstream out(path);
    if (!out) throw FormatError(path + ": cannot open file for writing");
    out.precision(17);
    out << "epoch,loss\n";
    for (std::size_t e = 0; e < history.size(); ++e) {
        out << e << "," << history[e] << "\n";
    }
    if (!out) throw FormatError(path + ": write failed");
}

}  // namespace vrd
