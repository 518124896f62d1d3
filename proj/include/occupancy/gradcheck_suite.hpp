#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace occupancy {

struct GradCheckEntry {
    std::string component;  // "op:matmul", "layer:bilstm", "model:hybrid_concat", ...
    double max_rel_error = 0.0;
    double tolerance = 0.0;
    std::string worst;

    bool passed() const { return max_rel_error < tolerance; }
};

inline constexpr double kElementwiseTolerance = 1e-6;
inline constexpr double kLayerTolerance = 1e-4;

// Finite-difference checks of every primitive op, every layer and every
// model variant at tiny sizes (T=4, F=3, H=3, F'=4, U=2, d_k=2).
std::vector<GradCheckEntry> run_gradcheck_suite(std::uint64_t seed);

} // namespace occupancy
