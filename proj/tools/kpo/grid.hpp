#pragma once

#include <string>
#include <vector>

namespace kpo::cli {

// Grid syntax on the command line:
//   "a,b,c"     explicit values
//   "a..b"      every integer from a to b
//   "a:f:b"     geometric, a, a f, a f^2, ... up to b
//   "a:b"       geometric with ten points per decade, both ends included
std::vector<double> parse_grid(const std::string& text);
std::vector<int> parse_int_grid(const std::string& text);

} // namespace kpo::cli
