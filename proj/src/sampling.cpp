#include "inclusion_lab/sampling.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace inclusion_lab {

BallSampler::BallSampler(Vector center, double radius, std::uint64_t seed)
    : center_(std::move(center)), radius_(radius), rng_(seed)
{
    if (!(radius_ > 0.0)) throw std::invalid_argument("BallSampler: radius must be positive");
}

Vector BallSampler::next_unit()
{
    const Eigen::Index n = center_.size();
    Vector dir(n);
    double norm = 0.0;
    do {
        for (Eigen::Index i = 0; i < n; ++i) dir(i) = gauss_(rng_);
        norm = dir.norm();
    } while (norm == 0.0);
    const double r = std::pow(unif_(rng_), 1.0 / static_cast<double>(n));
    return dir * (r / norm);
}

Vector BallSampler::next() { return center_ + radius_ * next_unit(); }

std::vector<Vector> sample_ball(const Vector& center, double radius, std::size_t n, std::uint64_t seed)
{
    BallSampler sampler(center, radius, seed);
    std::vector<Vector> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sampler.next());
    return out;
}

double halton(std::size_t index, unsigned base)
{
    double f = 1.0;
    double r = 0.0;
    std::size_t i = index;
    while (i > 0) {
        f /= base;
        r += f * static_cast<double>(i % base);
        i /= base;
    }
    return r;
}

std::vector<Vector> halton_ball(const Vector& center, double radius, std::size_t n)
{
    static constexpr std::array<unsigned, 12> kPrimes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
    const Eigen::Index d = center.size();
    if (d > static_cast<Eigen::Index>(kPrimes.size())) {
        throw std::invalid_argument("halton_ball: dimension too large");
    }
    std::vector<Vector> out;
    out.reserve(n);
    for (std::size_t k = 1; out.size() < n; ++k) {
        Vector c(d);
        for (Eigen::Index i = 0; i < d; ++i) c(i) = 2.0 * halton(k, kPrimes[static_cast<std::size_t>(i)]) - 1.0;
        const double n2 = c.norm();
        // Radial cube-to-ball map: |c|_inf is preserved as the ball radius.
        if (n2 > 0.0) c *= c.cwiseAbs().maxCoeff() / n2;
        out.push_back(center + radius * c);
    }
    return out;
}

} // namespace inclusion_lab
