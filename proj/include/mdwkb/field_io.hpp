#pragma once

// Binary field files:
//   "MDWKB01\0" | u32 rank | u64 dims[rank] | u8 dtype | u64 payload bytes | payload
// little-endian, payload row-major (the last dimension fastest).

#include <cstdint>
#include <string>
#include <vector>

#include "mdwkb/core.hpp"

namespace mdwkb {

enum class DType : std::uint8_t { F64 = 1, C128 = 2 };

struct RawField {
  std::vector<std::uint64_t> dims;
  DType dtype = DType::F64;
  std::vector<unsigned char> payload;

  std::uint64_t element_count() const;
  std::size_t element_size() const { return dtype == DType::F64 ? 8 : 16; }
};

/// Bytes a field occupies on disk.
std::uint64_t encoded_size(const RawField& f);

std::vector<unsigned char> encode_field(const RawField& f);
/// BadMagic, DimMismatch or TruncatedPayload, each naming the byte offset.
RawField decode_field(const std::vector<unsigned char>& bytes);

void save_field(const std::string& path, const RawField& f);
RawField load_field(const std::string& path);

/// Typed views: a scalar field is rank 1 {n}; spinor and vector fields are
/// rank 2 {n, 4} and {n, 3}, matching Eigen's column-major 4 x n storage.
RawField to_raw(const RealField& f);
RawField to_raw(const ComplexField& f);
RawField to_raw(const SpinorArray& f);
RawField to_raw(const VectorField& f);
RealField real_from_raw(const RawField& f, std::size_t n);
ComplexField complex_from_raw(const RawField& f, std::size_t n);
SpinorArray spinor_from_raw(const RawField& f, std::size_t n);
VectorField vector_from_raw(const RawField& f, std::size_t n);

}  // namespace mdwkb
