#include "mdwkb/field_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace mdwkb {

static_assert(std::endian::native == std::endian::little, "payloads are written in host order");

namespace {

constexpr unsigned char kMagic[8] = {'M', 'D', 'W', 'K', 'B', '0', '1', '\0'};

template <typename T>
void put(std::vector<unsigned char>& out, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.insert(out.end(), b, b + sizeof(T));
}

template <typename T>
T get(const std::vector<unsigned char>& in, std::size_t& at, const char* what) {
  if (in.size() < at + sizeof(T))
    throw Error(ErrorKind::TruncatedPayload, std::string(what) + " at offset " + std::to_string(at) + ": expected " +
                                                 std::to_string(sizeof(T)) + " bytes, found " +
                                                 std::to_string(in.size() - std::min(in.size(), at)));
  T v;
  std::memcpy(&v, in.data() + at, sizeof(T));
  at += sizeof(T);
  return v;
}

}  // namespace

std::uint64_t RawField::element_count() const {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::uint64_t encoded_size(const RawField& f) { return 8 + 4 + 8 * f.dims.size() + 1 + 8 + f.payload.size(); }

std::vector<unsigned char> encode_field(const RawField& f) {
  if (f.payload.size() != f.element_count() * f.element_size())
    throw Error(ErrorKind::DimMismatch, "payload holds " + std::to_string(f.payload.size()) + " bytes, dims need " +
                                            std::to_string(f.element_count() * f.element_size()));
  std::vector<unsigned char> out(kMagic, kMagic + 8);
  out.reserve(encoded_size(f));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(f.dims.size()));
  for (auto d : f.dims) put<std::uint64_t>(out, d);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(f.dtype));
  put<std::uint64_t>(out, f.payload.size());
  out.insert(out.end(), f.payload.begin(), f.payload.end());
  return out;
}

RawField decode_field(const std::vector<unsigned char>& in) {
  for (std::size_t i = 0; i < 8; ++i)
    if (i >= in.size() || in[i] != kMagic[i]) throw Error(ErrorKind::BadMagic, "magic mismatch at offset " + std::to_string(i));
  std::size_t at = 8;
  RawField f;
  const auto rank = get<std::uint32_t>(in, at, "rank");
  for (std::uint32_t r = 0; r < rank; ++r) f.dims.push_back(get<std::uint64_t>(in, at, "dims"));
  const std::size_t tag_at = at;
  const auto tag = get<std::uint8_t>(in, at, "dtype");
  if (tag != 1 && tag != 2) throw Error(ErrorKind::DimMismatch, "unknown dtype " + std::to_string(tag) + " at offset " + std::to_string(tag_at));
  f.dtype = static_cast<DType>(tag);
  const std::size_t len_at = at;
  const auto len = get<std::uint64_t>(in, at, "payload length");
  if (len != f.element_count() * f.element_size())
    throw Error(ErrorKind::DimMismatch, "payload length " + std::to_string(len) + " at offset " + std::to_string(len_at) +
                                            " does not match dims (" + std::to_string(f.element_count() * f.element_size()) +
                                            " bytes)");
  if (in.size() - at < len)
    throw Error(ErrorKind::TruncatedPayload, "payload at offset " + std::to_string(at) + ": expected " + std::to_string(len) +
                                                 " bytes, found " + std::to_string(in.size() - at));
  f.payload.assign(in.begin() + static_cast<std::ptrdiff_t>(at), in.begin() + static_cast<std::ptrdiff_t>(at + len));
  return f;
}

void save_field(const std::string& path, const RawField& f) {
  const auto bytes = encode_field(f);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path);
}

RawField load_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path);
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_field(bytes);
}

namespace {

template <typename Scalar>
RawField raw_of(const Scalar* data, std::vector<std::uint64_t> dims, DType t) {
  RawField f;
  f.dims = std::move(dims);
  f.dtype = t;
  f.payload.resize(f.element_count() * f.element_size());
  std::memcpy(f.payload.data(), data, f.payload.size());
  return f;
}

void expect(const RawField& f, DType t, std::vector<std::uint64_t> dims) {
  if (f.dtype != t || f.dims != dims) {
    std::string got, want;
    for (auto d : f.dims) got += std::to_string(d) + ' ';
    for (auto d : dims) want += std::to_string(d) + ' ';
    throw Error(ErrorKind::DimMismatch, "field has dims [" + got + "] dtype " + std::to_string(int(f.dtype)) +
                                            ", expected [" + want + "] dtype " + std::to_string(int(t)) + " (offset 8)");
  }
}

}  // namespace

RawField to_raw(const RealField& f) { return raw_of(f.data(), {std::uint64_t(f.size())}, DType::F64); }
RawField to_raw(const ComplexField& f) { return raw_of(f.data(), {std::uint64_t(f.size())}, DType::C128); }
RawField to_raw(const SpinorArray& f) { return raw_of(f.data(), {std::uint64_t(f.cols()), 4}, DType::C128); }
RawField to_raw(const VectorField& f) { return raw_of(f.data(), {std::uint64_t(f.cols()), 3}, DType::F64); }

RealField real_from_raw(const RawField& f, std::size_t n) {
  expect(f, DType::F64, {n});
  RealField out(static_cast<Eigen::Index>(n));
  std::memcpy(out.data(), f.payload.data(), f.payload.size());
  return out;
}

ComplexField complex_from_raw(const RawField& f, std::size_t n) {
  expect(f, DType::C128, {n});
  ComplexField out(static_cast<Eigen::Index>(n));
  std::memcpy(out.data(), f.payload.data(), f.payload.size());
  return out;
}

SpinorArray spinor_from_raw(const RawField& f, std::size_t n) {
  expect(f, DType::C128, {n, 4});
  SpinorArray out(4, static_cast<Eigen::Index>(n));
  std::memcpy(out.data(), f.payload.data(), f.payload.size());
  return out;
}

VectorField vector_from_raw(const RawField& f, std::size_t n) {
  expect(f, DType::F64, {n, 3});
  VectorField out(3, static_cast<Eigen::Index>(n));
  std::memcpy(out.data(), f.payload.data(), f.payload.size());
  return out;
}

}  // namespace mdwkb
