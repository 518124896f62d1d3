#pragma once

#include "occupancy/data.hpp"
#include "occupancy/random.hpp"

#include <limits>

namespace occupancy::test {

// A 1 Hz day with random readings, random per-hour occupancy mixes, exact
// ties and occasional missing-data bursts around the completeness limit.
inline data::RawDay random_day(Rng& rng, std::size_t F) {
    using namespace data;
    RawDay d;
    d.household = "hh";
    d.date = "2012-08-01";
    d.features = F;
    d.readings.resize(kSecondsPerDay * F);
    d.occupancy.resize(kSecondsPerDay);
    for (std::size_t h = 0; h < kHoursPerDay; ++h) {
        const double p_one = rng.uniform(0, 1);
        const bool tie = rng.bernoulli(0.1);
        // Missing fraction per hour mostly below the 5% limit, occasionally above.
        const double miss_occ = rng.bernoulli(0.3) ? rng.uniform(0, 0.052) : 0.0;
        const double miss_read = rng.bernoulli(0.3) ? rng.uniform(0, 0.052) : 0.0;
        for (std::size_t s = 0; s < kSecondsPerHour; ++s) {
            const std::size_t sec = h * kSecondsPerHour + s;
            if (tie) d.occupancy[sec] = s % 2 == 0;
            else d.occupancy[sec] = rng.bernoulli(p_one);
            if (!tie && rng.bernoulli(miss_occ)) d.occupancy[sec] = kMissingStatus;
            for (std::size_t f = 0; f < F; ++f) {
                d.readings[sec * F + f] =
                    rng.bernoulli(miss_read) ? std::numeric_limits<double>::quiet_NaN() : rng.uniform(-5, 250);
            }
        }
    }
    return d;
}

} // namespace occupancy::test
