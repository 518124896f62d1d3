#include "occupancy/synth.hpp"

#include "occupancy/random.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace occupancy::data {

namespace {

std::string add_days(const std::string& start, std::size_t n) {
    namespace chr = std::chrono;
    int y = 0;
    unsigned m = 0, d = 0;
    if (std::sscanf(start.c_str(), "%d-%u-%u", &y, &m, &d) != 3) throw std::invalid_argument("bad start date " + start);
    const chr::sys_days base{chr::year{y} / chr::month{m} / chr::day{d}};
    const chr::year_month_day ymd{base + chr::days{static_cast<int>(n)}};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
    return buf;
}

} // namespace

std::vector<Sample> synth_generate(std::size_t n_households, std::size_t days_per_household, std::uint64_t seed,
                                   const SynthOptions& opts) {
    if (n_households == 0 || days_per_household == 0) throw std::invalid_argument("synth: counts must be positive");
    constexpr std::size_t T = kHoursPerDay;
    constexpr std::size_t P = 3;
    Rng rng(seed);
    std::vector<Sample> out;
    out.reserve(n_households * days_per_household);

    for (std::size_t hh = 0; hh < n_households; ++hh) {
        const double ratio = rng.uniform(opts.min_occupancy, opts.max_occupancy);
        const double p_leave = rng.uniform(0.04, 0.12);
        const double p_arrive = std::min(0.95, p_leave * ratio / (1.0 - ratio));
        // Appliance wattage of the occupants; only visible through activity bumps.
        const double activity_scale = rng.uniform(0.8, 1.2);
        char name[32];
        std::snprintf(name, sizeof name, "synth%02zu", hh + 1);

        int state = rng.bernoulli(ratio) ? 1 : 0;
        for (std::size_t day = 0; day < days_per_household; ++day) {
            Sample s{name, add_days(opts.start_date, day), Tensor({T, kSynthFeatures}), std::vector<int>(T)};
            const double base = rng.uniform(0.8, 1.6);
            const double volt = 230.0 + rng.normal(0.0, 1.0);
            const double phase_offset = rng.uniform(0.0, 2.0 * std::numbers::pi);
            for (std::size_t t = 0; t < T; ++t) {
                if (t > 0 || day > 0) {
                    const double u = rng.uniform(0.0, 1.0);
                    state = state == 1 ? (u < p_leave ? 0 : 1) : (u < p_arrive ? 1 : 0);
                }
                s.y[t] = state;

                // Fixed number of draws per hour regardless of state.
                const bool active = rng.bernoulli(opts.activity_prob);
                const double magnitude = rng.uniform(0.4, 1.6);
                const bool appliance_on = rng.bernoulli(opts.appliance_prob);
                const double appliance_level = rng.uniform(0.3, 1.2);
                const double activity = (state == 1 && active) ? opts.occupied_boost * activity_scale * magnitude : 0.0;
                const double appliance = appliance_on ? appliance_level : 0.0;
                const double cycle =
                    0.3 * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(T) + phase_offset);

                // Split the two event loads over the phases.
                double share[P], appl_share[P], ssum = 0.0, asum = 0.0;
                for (std::size_t p = 0; p < P; ++p) {
                    share[p] = rng.uniform(0.2, 1.0);
                    appl_share[p] = rng.uniform(0.2, 1.0);
                    ssum += share[p];
                    asum += appl_share[p];
                }
                for (std::size_t p = 0; p < P; ++p) {
                    const double event = activity * share[p] / ssum * P + appliance * appl_share[p] / asum * P;
                    const double current = base + cycle + event + rng.normal(0.0, opts.noise);
                    s.x.at(t, p) = current;
                    s.x.at(t, P + p) = volt - 0.8 * current + rng.normal(0.0, 0.5);
                    s.x.at(t, 2 * P + p) = 0.2 + 0.08 * event + rng.normal(0.0, 0.03);
                }
            }
            out.push_back(std::move(s));
        }
    }
    return out;
}

} // namespace occupancy::data
