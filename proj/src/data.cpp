#include "occupancy/data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace fs = std::filesystem;

namespace occupancy::data {

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError(path.string() + ": cannot open file");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

[[noreturn]] void fail(const fs::path& file, std::size_t line, const std::string& msg) {
    throw DataError(file.string() + ":" + std::to_string(line) + ": " + msg);
}

// Splits on commas without allocating; trims a trailing '\r'.
void split_fields(std::string_view line, std::vector<std::string_view>& out) {
    out.clear();
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '"')) s.remove_suffix(1);
    return s;
}

bool parse_number(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
}

template <class F>
void for_each_line(std::string_view text, F f) {
    std::size_t line_no = 0, pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        ++line_no;
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        f(line_no, line);
    }
}

using OccupancyTable = std::map<std::string, std::vector<std::int8_t>>;

OccupancyTable load_occupancy(const fs::path& dir) {
    OccupancyTable table;
    std::vector<fs::path> files;
    if (fs::is_directory(dir)) {
        for (const auto& e : fs::directory_iterator(dir)) {
            const auto name = e.path().filename().string();
            if (e.is_regular_file() && name.rfind("occupancy", 0) == 0 && e.path().extension() == ".csv")
                files.push_back(e.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<std::string_view> fields;
    for (const auto& file : files) {
        const std::string text = read_file(file);
        for_each_line(text, [&](std::size_t line_no, std::string_view line) {
            split_fields(line, fields);
            const auto date = normalize_date(trim(fields[0]));
            if (!date) return;  // header or comment row
            if (fields.size() != kSecondsPerDay + 1) {
                fail(file, line_no, "wrong column count: expected " + std::to_string(kSecondsPerDay + 1) +
                                        " (date + statuses), got " + std::to_string(fields.size()));
            }
            std::vector<std::int8_t> statuses(kSecondsPerDay);
            for (std::size_t s = 0; s < kSecondsPerDay; ++s) {
                double v = 0;
                if (!parse_number(fields[s + 1], v) || !(v == 0.0 || v == 1.0 || v == kMissingSentinel)) {
                    fail(file, line_no, "malformed occupancy status '" + std::string(fields[s + 1]) + "'");
                }
                statuses[s] = v == kMissingSentinel ? kMissingStatus : static_cast<std::int8_t>(v);
            }
            table[*date] = std::move(statuses);
        });
    }
    return table;
}

RawDay load_day_file(const fs::path& file, const std::string& household, const std::string& date,
                     const LoadOptions& opts) {
    const std::string text = read_file(file);
    RawDay day;
    day.household = household;
    day.date = date;
    std::size_t columns = 0;
    std::size_t row = 0;
    std::vector<std::string_view> fields;
    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        split_fields(line, fields);
        double probe = 0;
        if (row == 0 && columns == 0 && !parse_number(fields[0], probe)) return;  // header
        if (columns == 0) {
            columns = fields.size();
            for (auto c : opts.columns) {
                if (c >= columns) fail(file, line_no, "column " + std::to_string(c) + " not present");
            }
            day.features = opts.columns.empty() ? columns : opts.columns.size();
            day.readings.assign(kSecondsPerDay * day.features, std::numeric_limits<double>::quiet_NaN());
        }
        if (fields.size() != columns) {
            fail(file, line_no, "wrong column count: expected " + std::to_string(columns) + ", got " +
                                    std::to_string(fields.size()));
        }
        if (row >= kSecondsPerDay) fail(file, line_no, "more than " + std::to_string(kSecondsPerDay) + " rows");
        for (std::size_t f = 0; f < day.features; ++f) {
            const std::size_t c = opts.columns.empty() ? f : opts.columns[f];
            double v = 0;
            if (!parse_number(fields[c], v)) {
                fail(file, line_no, "malformed value '" + std::string(fields[c]) + "' in column " + std::to_string(c));
            }
            day.readings[row * day.features + f] = v == kMissingSentinel ? std::numeric_limits<double>::quiet_NaN() : v;
        }
        ++row;
    });
    if (columns == 0) fail(file, 1, "no data rows");
    return day;
}

} // namespace

std::optional<std::string> normalize_date(std::string_view text) {
    auto digits = [](std::string_view s) {
        return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
    };
    if (text.size() == 10 && text[4] == '-' && text[7] == '-' && digits(text.substr(0, 4)) &&
        digits(text.substr(5, 2)) && digits(text.substr(8, 2))) {
        return std::string(text);
    }
    // DD-Mon-YYYY
    if (text.size() == 11 && text[2] == '-' && text[6] == '-' && digits(text.substr(0, 2)) &&
        digits(text.substr(7, 4))) {
        static constexpr std::array<std::string_view, 12> months = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                                     "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
        const auto mon = text.substr(3, 3);
        for (std::size_t m = 0; m < months.size(); ++m) {
            if (months[m] == mon) {
                char buf[16];
                std::snprintf(buf, sizeof buf, "%.4s-%02zu-%.2s", text.data() + 7, m + 1, text.data());
                return std::string(buf);
            }
        }
    }
    return std::nullopt;
}

std::vector<std::string> list_households(const fs::path& root) {
    std::vector<std::string> out;
    if (!fs::is_directory(root)) throw DataError(root.string() + ": not a directory");
    for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory()) out.push_back(e.path().filename().string());
    std::sort(out.begin(), out.end());
    return out;
}

void for_each_raw_day(const fs::path& root, const std::string& household, const LoadOptions& opts,
                      const std::function<void(RawDay&&)>& visit) {
    const fs::path dir = root / household;
    const fs::path sm = dir / "sm";
    if (!fs::is_directory(sm)) return;
    std::vector<std::pair<std::string, fs::path>> days;
    for (const auto& e : fs::directory_iterator(sm)) {
        if (!e.is_regular_file() || e.path().extension() != ".csv") continue;
        if (auto d = normalize_date(e.path().stem().string())) days.emplace_back(*d, e.path());
    }
    if (days.empty()) return;
    std::sort(days.begin(), days.end());
    OccupancyTable occ = load_occupancy(dir);
    for (auto& [date, file] : days) {
        RawDay day = load_day_file(file, household, date, opts);
        if (auto it = occ.find(date); it != occ.end()) {
            day.occupancy = std::move(it->second);
        } else {
            day.occupancy.assign(kSecondsPerDay, kMissingStatus);
        }
        visit(std::move(day));
    }
}

std::vector<RawDay> load_raw(const fs::path& root, const std::string& household, const LoadOptions& opts) {
    std::vector<RawDay> out;
    for_each_raw_day(root, household, opts, [&](RawDay&& d) { out.push_back(std::move(d)); });
    return out;
}

std::optional<Sample> resample_hourly(const RawDay& day, const ResampleOptions& opts) {
    const std::size_t F = day.features;
    if (day.readings.size() != kSecondsPerDay * F || day.occupancy.size() != kSecondsPerDay) return std::nullopt;
    const double max_missing = (1.0 - opts.min_complete) * static_cast<double>(kSecondsPerHour) + 1e-9;
    Sample s;
    s.household = day.household;
    s.date = day.date;
    s.x = Tensor({kHoursPerDay, F});
    s.y.resize(kHoursPerDay);
    std::vector<double> sums(F);
    std::vector<std::size_t> present(F);
    for (std::size_t h = 0; h < kHoursPerDay; ++h) {
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(present.begin(), present.end(), 0);
        std::size_t ones = 0, zeros = 0;
        for (std::size_t sec = h * kSecondsPerHour; sec < (h + 1) * kSecondsPerHour; ++sec) {
            for (std::size_t f = 0; f < F; ++f) {
                const double v = day.reading(sec, f);
                if (!std::isnan(v)) {
                    sums[f] += v;
                    ++present[f];
                }
            }
            const auto st = day.occupancy[sec];
            if (st == 1) ++ones;
            else if (st == 0) ++zeros;
        }
        if (static_cast<double>(kSecondsPerHour - ones - zeros) > max_missing) return std::nullopt;
        for (std::size_t f = 0; f < F; ++f) {
            if (static_cast<double>(kSecondsPerHour - present[f]) > max_missing || present[f] == 0) return std::nullopt;
            s.x.at(h, f) = sums[f] / static_cast<double>(present[f]);
        }
        s.y[h] = ones > zeros ? 1 : (ones < zeros ? 0 : opts.tie_label);
    }
    return s;
}

DatasetSummary summarize(std::span<const Sample> samples) {
    std::map<std::string, std::pair<std::size_t, std::pair<std::size_t, std::size_t>>> acc;  // days, (ones, steps)
    std::size_t ones = 0, steps = 0;
    for (const auto& s : samples) {
        auto& e = acc[s.household];
        ++e.first;
        for (int v : s.y) e.second.first += static_cast<std::size_t>(v);
        e.second.second += s.y.size();
    }
    DatasetSummary out;
    for (const auto& [hh, e] : acc) {
        out.households.push_back({hh, e.first,
                                  e.second.second ? static_cast<double>(e.second.first) / static_cast<double>(e.second.second) : 0.0});
        out.total_days += e.first;
        ones += e.second.first;
        steps += e.second.second;
    }
    out.overall_ratio = steps ? static_cast<double>(ones) / static_cast<double>(steps) : 0.0;
    return out;
}

std::string format_summary_table(const DatasetSummary& summary) {
    std::ostringstream os;
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-16s %8s %16s\n", "Household", "Days", "Occupancy ratio");
    os << buf;
    for (const auto& h : summary.households) {
        std::snprintf(buf, sizeof buf, "%-16s %8zu %16.4f\n", h.household.c_str(), h.days, h.occupancy_ratio);
        os << buf;
    }
    std::snprintf(buf, sizeof buf, "%-16s %8zu %16.4f\n", "Total", summary.total_days, summary.overall_ratio);
    os << buf;
    return os.str();
}

NormStats normalize_fit(std::span<const Sample> train) {
    if (train.empty()) throw std::invalid_argument("normalize_fit: empty training set");
    const std::size_t F = train.front().features();
    NormStats st{std::vector<double>(F, 0.0), std::vector<double>(F, 0.0)};
    std::size_t n = 0;
    for (const auto& s : train) {
        if (s.features() != F) throw ShapeError("normalize_fit: inconsistent feature counts");
        for (std::size_t t = 0; t < s.x.leading(); ++t)
            for (std::size_t f = 0; f < F; ++f) st.mean[f] += s.x.at(t, f);
        n += s.x.leading();
    }
    for (auto& m : st.mean) m /= static_cast<double>(n);
    for (const auto& s : train)
        for (std::size_t t = 0; t < s.x.leading(); ++t)
            for (std::size_t f = 0; f < F; ++f) {
                const double d = s.x.at(t, f) - st.mean[f];
                st.std[f] += d * d;
            }
    for (auto& v : st.std) v = std::max(std::sqrt(v / static_cast<double>(n)), kStdFloor);
    return st;
}

Tensor normalize_apply(const NormStats& stats, const Tensor& x) {
    const std::size_t F = x.last();
    if (F != stats.mean.size()) throw ShapeError("normalize_apply: feature count does not match stats");
    Tensor out = x;
    for (std::size_t t = 0; t < x.leading(); ++t)
        for (std::size_t f = 0; f < F; ++f) out.at(t, f) = (x.at(t, f) - stats.mean[f]) / stats.std[f];
    return out;
}

std::vector<Sample> normalize_apply(const NormStats& stats, std::span<const Sample> samples) {
    std::vector<Sample> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back({s.household, s.date, normalize_apply(stats, s.x), s.y});
    return out;
}

Sample manual_features(const Sample& sample, std::size_t window) {
    if (window == 0 || window % 2 == 0) throw std::invalid_argument("manual_features: window must be odd and >= 1");
    const std::size_t T = sample.x.leading();
    const std::size_t F = sample.features();
    const auto half = static_cast<std::ptrdiff_t>(window / 2);
    Sample out{sample.household, sample.date, Tensor({T, 6 * F}), sample.y};
    auto clamp_index = [T](std::ptrdiff_t i) {
        return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(T) - 1));
    };
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t f = 0; f < F; ++f) {
            double sum = 0.0, mn = INFINITY, mx = -INFINITY;
            for (std::ptrdiff_t k = -half; k <= half; ++k) {
                const double v = sample.x.at(clamp_index(static_cast<std::ptrdiff_t>(t) + k), f);
                sum += v;
                mn = std::min(mn, v);
                mx = std::max(mx, v);
            }
            const double mean = sum / static_cast<double>(window);
            double var = 0.0;
            for (std::ptrdiff_t k = -half; k <= half; ++k) {
                const double d = sample.x.at(clamp_index(static_cast<std::ptrdiff_t>(t) + k), f) - mean;
                var += d * d;
            }
            const double prev = sample.x.at(clamp_index(static_cast<std::ptrdiff_t>(t) - 1), f);
            out.x.at(t, f) = sample.x.at(t, f);
            out.x.at(t, F + f) = mean;
            out.x.at(t, 2 * F + f) = std::sqrt(var / static_cast<double>(window));
            out.x.at(t, 3 * F + f) = mn;
            out.x.at(t, 4 * F + f) = mx;
            out.x.at(t, 5 * F + f) = sample.x.at(t, f) - prev;
        }
    }
    return out;
}

std::string format_processed(std::span<const Sample> samples) {
    std::string out;
    const std::size_t F = samples.empty() ? 0 : samples.front().features();
    out += "household,date,hour";
    for (std::size_t f = 1; f <= F; ++f) out += ",f" + std::to_string(f);
    out += ",occupied\n";
    char buf[64];
    for (const auto& s : samples) {
        if (s.features() != F) throw ShapeError("write_processed: inconsistent feature counts");
        for (std::size_t t = 0; t < s.length(); ++t) {
            out += s.household;
            out += ',';
            out += s.date;
            out += ',';
            out += std::to_string(t);
            for (std::size_t f = 0; f < F; ++f) {
                std::snprintf(buf, sizeof buf, ",%.12g", s.x.at(t, f));
                out += buf;
            }
            out += ',';
            out += std::to_string(s.y[t]);
            out += '\n';
        }
    }
    return out;
}

void write_processed(const fs::path& path, std::span<const Sample> samples) {
    const std::string text = format_processed(samples);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError(path.string() + ": cannot open for writing");
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw DataError(path.string() + ": write failed");
}

std::vector<Sample> read_processed(const fs::path& path) {
    const std::string text = read_file(path);
    std::vector<Sample> out;
    std::vector<std::string_view> fields;
    std::size_t F = 0;
    bool header_seen = false;
    // Rows of the day currently being assembled.
    std::vector<double> xs;
    std::vector<int> ys;
    std::string cur_hh, cur_date;
    auto flush = [&] {
        if (ys.empty()) return;
        out.push_back({cur_hh, cur_date, Tensor({ys.size(), F}, std::move(xs)), std::move(ys)});
        xs.clear();
        ys.clear();
    };
    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        split_fields(line, fields);
        if (!header_seen) {
            if (fields.size() < 5 || fields[0] != "household" || fields[1] != "date" || fields[2] != "hour" ||
                fields.back() != "occupied") {
                fail(path, line_no, "expected header household,date,hour,f1..fF,occupied");
            }
            F = fields.size() - 4;
            header_seen = true;
            return;
        }
        if (fields.size() != F + 4) {
            fail(path, line_no, "wrong column count: expected " + std::to_string(F + 4) + ", got " +
                                    std::to_string(fields.size()));
        }
        const std::string hh(fields[0]), date(fields[1]);
        if (hh != cur_hh || date != cur_date) {
            flush();
            cur_hh = hh;
            cur_date = date;
        }
        double hour = 0;
        if (!parse_number(fields[2], hour) || hour != static_cast<double>(ys.size())) {
            fail(path, line_no, "expected hour " + std::to_string(ys.size()) + ", got '" + std::string(fields[2]) + "'");
        }
        for (std::size_t f = 0; f < F; ++f) {
            double v = 0;
            if (!parse_number(fields[3 + f], v) || !std::isfinite(v)) {
                fail(path, line_no, "malformed feature value '" + std::string(fields[3 + f]) + "'");
            }
            xs.push_back(v);
        }
        double label = 0;
        if (!parse_number(fields[F + 3], label) || !(label == 0.0 || label == 1.0)) {
            fail(path, line_no, "occupied must be 0 or 1");
        }
        ys.push_back(static_cast<int>(label));
    });
    if (!header_seen) throw DataError(path.string() + ": empty dataset file");
    flush();
    if (!out.empty()) {
        const std::size_t T = out.front().length();
        for (const auto& s : out) {
            if (s.length() != T) {
                throw DataError(path.string() + ": day " + s.household + "/" + s.date + " has " +
                                std::to_string(s.length()) + " hours, expected " + std::to_string(T));
            }
        }
    }
    return out;
}

} // namespace occupancy::data
