#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace bathynav {

template<typename Scalar>
using Vec2T = Eigen::Matrix<Scalar, 2, 1>;
using Vec2 = Vec2T<double>;

// Row-major so that a grid row is contiguous; row index is the y cell, column index the x cell.
template<typename Scalar>
using GridT = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Grid = GridT<double>;
using MaskGrid = GridT<std::uint8_t>;

struct CellIndex {
    int row = 0;
    int col = 0;
    friend bool operator==(const CellIndex &, const CellIndex &) = default;
};

// Error hierarchy. Every failure the library reports derives from Error.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define BATHYNAV_DEFINE_ERROR(Name)          \
    class Name : public Error {              \
    public:                                  \
        using Error::Error;                  \
    }

BATHYNAV_DEFINE_ERROR(InvalidParams);
BATHYNAV_DEFINE_ERROR(GenerationFailed);
BATHYNAV_DEFINE_ERROR(GoalUnsafe);
BATHYNAV_DEFINE_ERROR(OutOfBounds);
BATHYNAV_DEFINE_ERROR(NonFinite);
BATHYNAV_DEFINE_ERROR(DegenerateMotion);
BATHYNAV_DEFINE_ERROR(NegativeDepth);
BATHYNAV_DEFINE_ERROR(NoValidPlacement);
BATHYNAV_DEFINE_ERROR(SteppingTerminatedEpisode);
BATHYNAV_DEFINE_ERROR(LengthMismatch);
BATHYNAV_DEFINE_ERROR(FormatError);
BATHYNAV_DEFINE_ERROR(ProtocolError);

#undef BATHYNAV_DEFINE_ERROR

/// Wraps an angle to (-pi, pi]. The boundary maps to +pi.
template<typename Scalar>
Scalar wrap_angle(Scalar a) {
    constexpr Scalar pi = std::numbers::pi_v<Scalar>;
    constexpr Scalar two_pi = 2 * pi;
    if (a > -pi && a <= pi) { return a; }
    a = std::fmod(a + pi, two_pi);
    if (a <= 0) { a += two_pi; }
    return a - pi;
}

// splitmix64 finalizer; used to derive independent seeds from (seed, index) pairs.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return mix_seed(mix_seed(mix_seed(seed) ^ a) ^ b);
}

}  // namespace bathynav
