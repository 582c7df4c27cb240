#include "mfrr/common.hpp"

#include <cstring>
#include <cstdio>

namespace mfrr {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix64(mix64(seed) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

void Fnv1a::update(std::string_view bytes) noexcept {
  for (unsigned char c : bytes) {
    h_ ^= c;
    h_ *= 0x100000001b3ULL;
  }
}

void Fnv1a::update(double v) noexcept {
  char buf[sizeof(double)];
  std::memcpy(buf, &v, sizeof v);
  update(std::string_view(buf, sizeof buf));
}

void Fnv1a::update(std::int64_t v) noexcept {
  char buf[sizeof(v)];
  std::memcpy(buf, &v, sizeof v);
  update(std::string_view(buf, sizeof buf));
}

std::string Fnv1a::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h_));
  return buf;
}

}  // namespace mfrr
