#pragma once

#include "occupancy/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace occupancy::data {

inline constexpr std::size_t kSecondsPerHour = 3600;
inline constexpr std::size_t kHoursPerDay = 24;
inline constexpr std::size_t kSecondsPerDay = kSecondsPerHour * kHoursPerDay;
inline constexpr std::int8_t kMissingStatus = -1;
// Raw files mark missing readings and statuses with this value.
inline constexpr double kMissingSentinel = -1.0;

// Malformed input. what() carries "file:line: message" when a location is known.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// One calendar day of 1 Hz measurements. Missing readings are NaN; missing
// occupancy statuses are kMissingStatus.
struct RawDay {
    std::string household;
    std::string date;  // YYYY-MM-DD
    std::size_t features = 0;
    std::vector<double> readings;         // kSecondsPerDay x features, row-major
    std::vector<std::int8_t> occupancy;   // kSecondsPerDay entries in {0, 1, -1}

    double reading(std::size_t second, std::size_t feature) const { return readings[second * features + feature]; }
};

// One day at hourly resolution: x is [T x F], y holds T labels in {0, 1}.
struct Sample {
    std::string household;
    std::string date;
    Tensor x;
    std::vector<int> y;

    std::size_t length() const { return y.size(); }
    std::size_t features() const { return x.last(); }
};

// ---- raw ingestion -----------------------------------------------------------

struct LoadOptions {
    // Zero-based columns of the day files to keep; empty keeps all.
    std::vector<std::size_t> columns;
};

// Household directories directly under root, sorted by name.
std::vector<std::string> list_households(const std::filesystem::path& root);

// Streams the days of one household in date order. Days without an
// occupancy row get all statuses marked missing.
void for_each_raw_day(const std::filesystem::path& root, const std::string& household, const LoadOptions& opts,
                      const std::function<void(RawDay&&)>& visit);

std::vector<RawDay> load_raw(const std::filesystem::path& root, const std::string& household,
                             const LoadOptions& opts = {});

// Accepts YYYY-MM-DD or DD-Mon-YYYY; returns YYYY-MM-DD.
std::optional<std::string> normalize_date(std::string_view text);

// ---- preprocessing -----------------------------------------------------------

struct ResampleOptions {
    // An hour is kept only if at most (1 - min_complete) of its entries are
    // missing, per feature and for the occupancy stream.
    double min_complete = 0.95;
    // Label for an exact tie between occupied and vacant seconds.
    int tie_label = 1;
};

// Hourly means and majority labels; nullopt when any hour is too incomplete.
std::optional<Sample> resample_hourly(const RawDay& day, const ResampleOptions& opts = {});

struct HouseholdSummary {
    std::string household;
    std::size_t days = 0;
    double occupancy_ratio = 0.0;
};

struct DatasetSummary {
    std::vector<HouseholdSummary> households;  // sorted by household id
    std::size_t total_days = 0;
    double overall_ratio = 0.0;
};

DatasetSummary summarize(std::span<const Sample> samples);
std::string format_summary_table(const DatasetSummary& summary);

struct NormStats {
    std::vector<double> mean;
    std::vector<double> std;
};

inline constexpr double kStdFloor = 1e-8;

// Per-feature mean and population standard deviation over every timestep.
NormStats normalize_fit(std::span<const Sample> train);
std::vector<Sample> normalize_apply(const NormStats& stats, std::span<const Sample> samples);
Tensor normalize_apply(const NormStats& stats, const Tensor& x);

// Appends windowed mean, std, min, max and the lag-1 difference of every raw
// feature, giving width 6F: [raw | mean | std | min | max | diff]. Window
// indices are clamped to the sequence, so edge values repeat.
Sample manual_features(const Sample& sample, std::size_t window = 3);

// ---- processed dataset files -------------------------------------------------

// Header `household,date,hour,f1..fF,occupied`, one row per hour, values
// printed with 12 significant digits.
void write_processed(const std::filesystem::path& path, std::span<const Sample> samples);
std::string format_processed(std::span<const Sample> samples);
std::vector<Sample> read_processed(const std::filesystem::path& path);

} // namespace occupancy::data
