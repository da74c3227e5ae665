#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace spnmpc {

// All field values live in an unsigned 128-bit integer; moduli up to 2^128-1
// are supported. GCC/Clang provide the type natively but no iostream or
// string support, so the helpers live here.
using u128 = unsigned __int128;

std::string to_string(u128 v);

// Parses a non-negative decimal integer. Throws ParseError on junk or
// overflow past 2^128-1.
u128 parse_u128(std::string_view text);

// Number of significant bits; bit_length(0) == 0.
int bit_length(u128 v);

// Fixed 16-byte little-endian encoding used on the wire and in files.
std::array<uint8_t, 16> encode_u128(u128 v);
u128 decode_u128(const uint8_t* bytes);

}  // namespace spnmpc
