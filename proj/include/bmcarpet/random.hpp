#ifndef BMCARPET_RANDOM_HPP
#define BMCARPET_RANDOM_HPP

#include <cstdint>
#include <random>

namespace bmc {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based seeding: stream `index` of run `seed` gets its own engine,
// so sample i is the same no matter which worker draws it.
inline std::mt19937_64 stream_engine(std::uint64_t seed, std::uint64_t index) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
}

// Uniform on [0, 1) from the top 53 bits; mt19937_64 output is fixed by the
// standard, so this is portable where std::uniform_real_distribution is not.
inline double uniform01(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

}  // namespace bmc

#endif  // BMCARPET_RANDOM_HPP
