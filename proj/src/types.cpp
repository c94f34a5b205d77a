#include "racing_sr/types.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace racing_sr {

std::uint64_t derive_seed(std::uint64_t parent, const std::string& label) noexcept {
    // FNV-1a over the label, then mixed with the parent.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : label) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return derive_seed(parent, h);
}

std::vector<std::uint32_t> VarSet::members() const {
    std::vector<std::uint32_t> out;
    out.reserve(size());
    std::uint64_t b = bits_;
    while (b != 0) {
        out.push_back(static_cast<std::uint32_t>(std::countr_zero(b)));
        b &= b - 1;
    }
    return out;
}

std::string VarSet::to_string() const {
    std::string s = "{";
    bool first = true;
    for (auto v : members()) {
        if (!first) s += ',';
        s += 'x';
        s += std::to_string(v);
        first = false;
    }
    s += '}';
    return s;
}

void Matrix::erase_column(std::size_t c) {
    assert(c < cols_);
    std::vector<double> next;
    next.reserve(rows_ * (cols_ - 1));
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t j = 0; j < cols_; ++j) {
            if (j != c) next.push_back((*this)(r, j));
        }
    }
    data_ = std::move(next);
    --cols_;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    (void)ec;
    return std::string(buf.data(), ptr);
}

} // namespace racing_sr
