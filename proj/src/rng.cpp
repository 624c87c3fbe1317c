#include "ipvi/rng.hpp"

#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>

#include "ipvi/errors.hpp"

namespace ipvi {

double Rng::uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    // Box-Muller on (0, 1] x [0, 1).
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
}

std::size_t Rng::index(std::size_t n) {
    if (n == 0) throw ContractError("Rng::index: n must be positive");
    const std::uint64_t span = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = eng_();
    while (v >= span) v = eng_();
    return static_cast<std::size_t>(v % n);
}

Tensor Rng::normal_tensor(const Shape& shape) {
    Tensor t = Tensor::zeros(shape);
    for (double& v : t.raw()) v = normal();
    return t;
}

std::vector<std::size_t> Rng::permutation(std::size_t n) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        std::swap(p[i - 1], p[index(i)]);
    }
    return p;
}

std::string Rng::serialize() const {
    std::ostringstream os;
    os << eng_ << ' ' << (have_spare_ ? 1 : 0);
    if (have_spare_) {
        os << ' ';
        os.precision(17);
        // exact round trip via bit pattern
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(spare_));
        std::memcpy(&bits, &spare_, sizeof(bits));
        os << bits;
    }
    return os.str();
}

void Rng::restore(const std::string& state) {
    std::istringstream is(state);
    is >> eng_;
    int sp = 0;
    is >> sp;
    have_spare_ = (sp != 0);
    if (have_spare_) {
        std::uint64_t bits = 0;
        is >> bits;
        std::memcpy(&spare_, &bits, sizeof(bits));
    }
    if (is.fail()) throw FormatError("Rng::restore: malformed state string");
}

}  // namespace ipvi
