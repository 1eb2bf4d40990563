#pragma once

#include <string>
#include <string_view>

namespace ecmatch {

// Hex digest, lowercase. Used to lock matched-pair files before unblinding.
std::string sha256_hex(std::string_view data);

}  // namespace ecmatch
