#pragma once

// Channel files are JSON:
//   {"name": "H1", "field": "real"|"complex", "m": 2, "N": 4,
//    "coeffs": [[[re, im], ...N], ...m]}
// Real channels may write bare numbers instead of [re, im] pairs.
//
// Matrix files (linear constraints) list columns:
//   {"field": "real"|"complex", "columns": [[c0, c1, ...], ...]}

#include <string>

#include "blindcrb/channel.hpp"

namespace blindcrb {

Channel parse_channel(const std::string& text, const std::string& source = "<string>");
Channel load_channel(const std::string& path);
std::string channel_to_json(const Channel& ch);

Mat parse_matrix(const std::string& text, const std::string& source = "<string>");
Mat load_matrix(const std::string& path);

}  // namespace blindcrb
