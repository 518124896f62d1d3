#pragma once

#include "occupancy/data.hpp"

#include <cstdint>
#include <vector>

namespace occupancy::data {

// Desk-scale stand-in for metered households.
//
// Occupancy per household is a stationary two-state Markov chain over hours
// whose transition probabilities are drawn per household. Meter features are
// a shared-distribution baseline load with a daily sinusoid, random
// appliance events that ignore occupancy, and occupant activity bumps that
// only occur in occupied hours (and not in every occupied hour). Only the
// activity bumps depend on occupancy; with occupied_boost = 0 the features
// carry no information about the labels.
//
// Features per phase (3 phases): current, voltage, phase shift, laid out as
// [I1 I2 I3 V1 V2 V3 phi1 phi2 phi3].
struct SynthOptions {
    double occupied_boost = 1.0;
    double min_occupancy = 0.65;  // stationary occupancy ratio range per household
    double max_occupancy = 0.90;
    double activity_prob = 0.85;  // P(activity bump | occupied hour)
    double appliance_prob = 0.12; // P(automatic appliance event) in any hour
    double noise = 0.15;          // current noise, amperes
    std::string start_date = "2012-06-01";
};

inline constexpr std::size_t kSynthFeatures = 9;

std::vector<Sample> synth_generate(std::size_t n_households, std::size_t days_per_household, std::uint64_t seed,
                                   const SynthOptions& opts = {});

} // namespace occupancy::data
