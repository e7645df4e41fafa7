#pragma once

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

namespace agd::testing {

// Distance in units in the last place between two finite doubles.
inline std::uint64_t ulp_distance(double a, double b) {
    if (a == b) return 0;
    auto key = [](double x) {
        const auto bits = std::bit_cast<std::int64_t>(x);
        return bits < 0 ? std::int64_t{INT64_MIN} - bits : bits;
    };
    const std::int64_t ka = key(a);
    const std::int64_t kb = key(b);
    return ka > kb ? static_cast<std::uint64_t>(ka - kb) : static_cast<std::uint64_t>(kb - ka);
}

// Spacing of doubles at |x|.
inline double ulp_of(double x) {
    const double a = std::abs(x);
    return std::nextafter(a, INFINITY) - a;
}

// Max coordinate difference between two equal-length vectors, in units of the
// ulp at the vector's largest magnitude. Measuring against the vector scale
// keeps coordinates that pass through zero from inflating the count.
template <typename V>
double scaled_ulp_error(const V& a, const V& b) {
    double scale = 0.0;
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
        diff = std::max(diff, std::abs(a[i] - b[i]));
    }
    return diff == 0.0 ? 0.0 : diff / ulp_of(scale);
}

// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
        path_ = std::filesystem::temp_directory_path() /
                ("agd_" + tag + "_" + std::to_string(stamp) + "_" +
                 std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace agd::testing
