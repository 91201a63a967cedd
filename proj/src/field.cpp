#include "vrd/field.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace vrd {

void require_finite(const Field& f, const char* what) {
    const double* p = f.data.data();
    const std::size_t n = f.size();
    bool ok = true;
#pragma omp parallel for reduction(&& : ok) schedule(static)
    for (long long k = 0; k < static_cast<long long>(n); ++k) {
        ok = ok && std::isfinite(p[k]);
    }
    if (!ok) {
        throw std::invalid_argument(std::string(what) + ": field contains non-finite values");
    }
}

void require_valid(const Field& f, const char* what) {
    if (f.height <= 0 || f.width <= 0 || f.channels <= 0) {
        throw std::invalid_argument(std::string(what) + ": field dimensions must be positive");
    }
    if (f.data.size() != static_cast<std::size_t>(f.height) * f.width * f.channels) {
        throw std::invalid_argument(std::string(what) + ": field data length does not match dimensions");
    }
}

double max_abs(const Field& f) {
    double m = 0.0;
#pragma omp parallel for reduction(max : m) schedule(static)
    for (long long k = 0; k < static_cast<long long>(f.size()); ++k) {
        m = std::max(m, std::fabs(f.data[k]));
    }
    return m;
}

}  // namespace vrd
