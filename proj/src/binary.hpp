#pragma once

#include <bit>
#include <cstring>
#include <string>

#include "facedyn/error.hpp"

namespace facedyn::detail {

static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");

template <class T>
void put_le(std::string& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(bytes, sizeof(T));
}

template <class T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw FormatError("unexpected end of binary data");
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

}  // namespace facedyn::detail
