#include "grid.hpp"

#include <cmath>

#include "kpo/errors.hpp"
#include "kpo/io.hpp"

namespace kpo::cli {

namespace {

double value(const std::string& s) {
    return io::parse_list(s).at(0);
}

} // namespace

std::vector<double> parse_grid(const std::string& text) {
    if (auto dots = text.find(".."); dots != std::string::npos) {
        const double a = value(text.substr(0, dots)), b = value(text.substr(dots + 2));
        if (a != std::floor(a) || b != std::floor(b) || b < a)
            throw InvalidInput("integer range '" + text + "' needs a <= b");
        std::vector<double> out;
        for (double x = a; x <= b; x += 1.0)
            out.push_back(x);
        return out;
    }
    const auto c1 = text.find(':');
    if (c1 == std::string::npos)
        return io::parse_list(text);
    const auto c2 = text.find(':', c1 + 1);
    const double a = value(text.substr(0, c1));
    double f = 0.0, b = 0.0;
    if (c2 == std::string::npos) {
        b = value(text.substr(c1 + 1));
    } else {
        f = value(text.substr(c1 + 1, c2 - c1 - 1));
        b = value(text.substr(c2 + 1));
    }
    if (!(a > 0.0) || !(b >= a))
        throw InvalidInput("geometric range '" + text + "' needs 0 < a <= b");
    std::vector<double> out;
    if (c2 != std::string::npos) {
        if (!(f > 1.0))
            throw InvalidInput("geometric factor in '" + text + "' must exceed 1");
        for (double x = a; x <= b * (1.0 + 1e-12); x *= f)
            out.push_back(x);
        return out;
    }
    const int steps = std::max(1, static_cast<int>(std::ceil(10.0 * std::log10(b / a) - 1e-9)));
    for (int k = 0; k <= steps; ++k)
        out.push_back(a * std::pow(b / a, static_cast<double>(k) / steps));
    return out;
}

std::vector<int> parse_int_grid(const std::string& text) {
    std::vector<int> out;
    for (double x : parse_grid(text)) {
        const double r = std::round(x);
        if (std::abs(r - x) > 1e-9 * std::max(1.0, std::abs(x)))
            throw InvalidInput("'" + text + "' contains a non-integer size");
        out.push_back(static_cast<int>(r));
    }
    return out;
}

} // namespace kpo::cli
