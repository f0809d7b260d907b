#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace snncl {

inline constexpr const char* kVersion = "0.1.0";

// Errors the caller can fix (bad files, bad flags, bad config).  The CLI
// maps these to exit code 2; everything else is an internal error (exit 1).
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Header/schema mismatch: missing column, unknown subsystem, bad mapping.
struct SchemaError : InputError {
    using InputError::InputError;
};

// Malformed contents of an otherwise well-formed input.
struct DataError : InputError {
    using InputError::InputError;
};

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using MatF = Mat<float>;
using MatD = Mat<double>;
using VecF = Vec<float>;
using VecD = Vec<double>;
using MatU8 = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// splitmix64; used to derive independent sub-stream seeds from a master seed
// so that e.g. Fisher sampling never perturbs the training sample stream.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Named sub-stream seed: hash(master, stream name, index).
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index = 0) {
    return splitmix64(splitmix64(master ^ fnv1a64(stream)) ^ index);
}

}  // namespace snncl
