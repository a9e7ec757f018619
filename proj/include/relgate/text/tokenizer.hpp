#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace relgate {

/// Lowercases, splits on Unicode whitespace, and emits every punctuation mark
/// and CJK ideograph as its own token. Input is UTF-8; invalid bytes are kept
/// as single-byte tokens.
std::vector<std::string> tokenize(std::string_view text);

}  // namespace relgate
