#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <utility>

#include "casimac/error.hpp"

namespace casimac {

using DistanceFn = std::function<double(std::span<const double>, std::span<const double>)>;

/// Named symmetric distance with d(x, x') = 0 iff x = x'. The triangle inequality is not required.
struct Semimetric {
    std::string name;
    DistanceFn fn;

    double operator()(std::span<const double> a, std::span<const double> b) const { return fn(a, b); }
};

namespace detail {

inline void check_same_size(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ConfigError("semimetric arguments differ in dimension");
    }
}

}  // namespace detail

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    detail::check_same_size(a, b);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

inline double taxicab_distance(std::span<const double> a, std::span<const double> b) {
    detail::check_same_size(a, b);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum += std::abs(a[i] - b[i]);
    }
    return sum;
}

/**
 * Process-wide table of user semimetrics.
 *
 * Built-ins are addressed as "euclidean" and "taxicab"; registered plugins as
 * "plugin:NAME". Lookups and registrations are thread-safe.
 */
class SemimetricRegistry {
public:
    static SemimetricRegistry& instance() {
        static SemimetricRegistry registry;
        return registry;
    }

    void add(const std::string& name, DistanceFn fn) {
        if (name.empty()) {
            throw ConfigError("semimetric plugin name must not be empty");
        }
        std::lock_guard lock(mutex_);
        plugins_[name] = std::move(fn);
    }

    bool contains(const std::string& name) const {
        std::lock_guard lock(mutex_);
        return plugins_.count(name) != 0;
    }

    Semimetric find(const std::string& spec) const {
        if (spec == "euclidean") {
            return {spec, &euclidean_distance};
        }
        if (spec == "taxicab") {
            return {spec, &taxicab_distance};
        }
        constexpr std::string_view prefix = "plugin:";
        if (spec.rfind(prefix, 0) == 0) {
            const std::string key = spec.substr(prefix.size());
            std::lock_guard lock(mutex_);
            auto it = plugins_.find(key);
            if (it != plugins_.end()) {
                return {spec, it->second};
            }
            throw ConfigError("no semimetric plugin registered under '" + key + "'");
        }
        throw ConfigError("unknown semimetric '" + spec + "' (expected euclidean, taxicab or plugin:NAME)");
    }

private:
    SemimetricRegistry() = default;

    mutable std::mutex mutex_;
    std::map<std::string, DistanceFn> plugins_;
};

inline Semimetric find_semimetric(const std::string& spec) { return SemimetricRegistry::instance().find(spec); }

inline void register_semimetric(const std::string& name, DistanceFn fn) {
    SemimetricRegistry::instance().add(name, std::move(fn));
}

}  // namespace casimac
