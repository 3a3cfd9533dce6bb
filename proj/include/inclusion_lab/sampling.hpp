#pragma once

#include "inclusion_lab/types.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace inclusion_lab {

/// Deterministic uniform sampler for the ball B(center, radius): a normalized
/// Gaussian direction scaled by radius * U^(1/n).
class BallSampler {
public:
    BallSampler(Vector center, double radius, std::uint64_t seed);

    Vector next();

    /// Offset of the next draw from the centre in units of the radius; lets
    /// callers reuse one unit-ball stream at several radii.
    Vector next_unit();

private:
    Vector center_;
    double radius_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> gauss_{0.0, 1.0};
    std::uniform_real_distribution<double> unif_{0.0, 1.0};
};

/// n draws from B(center, radius) with the given seed.
std::vector<Vector> sample_ball(const Vector& center, double radius, std::size_t n, std::uint64_t seed);

/// Deterministic low-discrepancy points in the closed ball B(center, radius):
/// Halton points in the cube, pushed radially onto the ball.
std::vector<Vector> halton_ball(const Vector& center, double radius, std::size_t n);

double halton(std::size_t index, unsigned base);

} // namespace inclusion_lab
