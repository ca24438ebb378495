#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>

#include "levychaos/errors.hpp"

namespace levychaos::detail {

template <class T>
void put_le(std::ostream& os, T value) {
    static_assert(sizeof(T) == 8);
    auto bits = std::bit_cast<std::uint64_t>(value);
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
    os.write(buf, 8);
}

template <class T>
T get_le(std::istream& is, const char* what = "truncated record") {
    unsigned char buf[8];
    if (!is.read(reinterpret_cast<char*>(buf), 8)) throw ParameterError(what);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return std::bit_cast<T>(bits);
}

}  // namespace levychaos::detail
