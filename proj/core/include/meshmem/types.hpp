#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>

#include "meshmem/errors.hpp"

namespace meshmem {

using Cycles = std::uint64_t;
using Timestamp = std::uint64_t;

/// Absolute chip coordinate of a core. Both fields must fit the 6-bit
/// address fields, i.e. be < 64.
struct Coord {
  int row = 0;
  int col = 0;

  auto operator<=>(const Coord&) const = default;
};

inline std::string to_string(Coord c) {
  return "(" + std::to_string(c.row) + "," + std::to_string(c.col) + ")";
}

inline constexpr int kCoordBits = 6;
inline constexpr int kMaxCoord = (1 << kCoordBits) - 1;  // 63
inline constexpr int kOffsetBits = 20;
inline constexpr std::uint32_t kMaxOffset = (1u << kOffsetBits) - 1;

/// 32-bit global address: row in bits [31:26], column in bits [25:20],
/// core-local byte offset in bits [19:0]. A zero core-id field (row = col
/// = 0) is the local alias window and refers to the issuing core's own
/// memory.
class GlobalAddress {
 public:
  GlobalAddress() = default;
  constexpr explicit GlobalAddress(std::uint32_t raw) : value_(raw) {}

  std::uint32_t raw() const { return value_; }
  int row() const { return static_cast<int>(value_ >> 26); }
  int col() const { return static_cast<int>((value_ >> 20) & 0x3f); }
  Coord coord() const { return Coord{row(), col()}; }
  std::uint32_t offset() const { return value_ & kMaxOffset; }
  bool is_local_alias() const { return row() == 0 && col() == 0; }

  auto operator<=>(const GlobalAddress&) const = default;

 private:
  std::uint32_t value_ = 0;
};

/// Packs (coord, offset) into a GlobalAddress. Throws AddressError when the
/// coordinate or offset overflows its bit field.
inline GlobalAddress encode_address(Coord c, std::uint32_t offset) {
  if (c.row < 0 || c.row > kMaxCoord || c.col < 0 || c.col > kMaxCoord) {
    throw AddressError("coordinate " + to_string(c) +
                       " does not fit 6-bit address fields");
  }
  if (offset > kMaxOffset) {
    throw AddressError("offset " + std::to_string(offset) +
                       " overflows the 20-bit offset field");
  }
  return GlobalAddress{(static_cast<std::uint32_t>(c.row) << 26) |
                       (static_cast<std::uint32_t>(c.col) << 20) | offset};
}

enum class Mode { functional, timed };

enum class ElemType : std::uint8_t { i8, i16, i32, i64, f32, f64 };

inline std::size_t elem_size(ElemType t) {
  switch (t) {
    case ElemType::i8: return 1;
    case ElemType::i16: return 2;
    case ElemType::i32: return 4;
    case ElemType::i64: return 8;
    case ElemType::f32: return 4;
    case ElemType::f64: return 8;
  }
  return 0;
}

inline const char* elem_name(ElemType t) {
  switch (t) {
    case ElemType::i8: return "i8";
    case ElemType::i16: return "i16";
    case ElemType::i32: return "i32";
    case ElemType::i64: return "i64";
    case ElemType::f32: return "f32";
    case ElemType::f64: return "f64";
  }
  return "?";
}

inline bool is_integer(ElemType t) {
  return t == ElemType::i8 || t == ElemType::i16 || t == ElemType::i32 ||
         t == ElemType::i64;
}

template <typename T>
struct elem_type_of;
template <> struct elem_type_of<std::int8_t> {
  static constexpr ElemType value = ElemType::i8;
};
template <> struct elem_type_of<std::int16_t> {
  static constexpr ElemType value = ElemType::i16;
};
template <> struct elem_type_of<std::int32_t> {
  static constexpr ElemType value = ElemType::i32;
};
template <> struct elem_type_of<std::int64_t> {
  static constexpr ElemType value = ElemType::i64;
};
template <> struct elem_type_of<float> {
  static constexpr ElemType value = ElemType::f32;
};
template <> struct elem_type_of<double> {
  static constexpr ElemType value = ElemType::f64;
};
template <typename T>
inline constexpr ElemType elem_type_of_v = elem_type_of<T>::value;

enum class Cmp : std::uint8_t { eq, ne, gt, ge, lt, le };

enum class AtomicOp : std::uint8_t { test_and_set, add, swap, compare_swap };

}  // namespace meshmem
