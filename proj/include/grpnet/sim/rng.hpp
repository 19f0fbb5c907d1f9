#pragma once
#include <cmath>
#include <cstdint>
#include <random>
#include <grpnet/util/types.hpp>

namespace grpnet {
namespace sim {

using util::value_t;

/**
 * Seeded 64-bit Mersenne Twister (std::mt19937_64) with distributions
 * pinned here rather than taken from the standard library, whose
 * algorithms are implementation-defined:
 *  - uniform(): top 53 bits of one draw scaled by 2^-53, in [0, 1).
 *  - normal(): Marsaglia polar method on 2 u - 1 pairs; the second
 *    variate of each accepted pair is cached and returned next.
 */
class rng
{
    std::mt19937_64 _gen;
    bool _has_spare = false;
    value_t _spare = 0;

public:
    explicit rng(std::uint64_t seed) : _gen(seed) {}

    std::uint64_t next() { return _gen(); }

    value_t uniform() { return static_cast<value_t>(_gen() >> 11) * 0x1.0p-53; }

    value_t normal()
    {
        if (_has_spare) {
            _has_spare = false;
            return _spare;
        }
        value_t u, v, s;
        do {
            u = 2 * uniform() - 1;
            v = 2 * uniform() - 1;
            s = u * u + v * v;
        } while (s >= 1 || s == 0);
        const value_t f = std::sqrt(-2 * std::log(s) / s);
        _spare = v * f;
        _has_spare = true;
        return u * f;
    }

    bool bernoulli(value_t p) { return uniform() < p; }
};

} // namespace sim
} // namespace grpnet
