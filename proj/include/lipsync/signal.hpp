#ifndef LIPSYNC_SIGNAL_HPP
#define LIPSYNC_SIGNAL_HPP

// 1-D numerical primitives used by the metrics: Gaussian smoothing, first
// differences, local extrema, RMS, group-wise z-normalization, cosine
// similarity, and Pearson correlation. All operations are pure.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lipsync/errors.hpp"

namespace lipsync::signal {

using Series = std::vector<double>;

// Convolution with a normalized Gaussian kernel truncated at radius
// ceil(4 * sigma). Boundaries are reflect-padded including the edge sample
// (x[-1] == x[0], x[n] == x[n-1]), which keeps constants exactly constant
// and fabricates no boundary extrema.
inline Series gaussian_smooth(const Series& s, double sigma) {
    if (s.empty()) throw LengthError("gaussian_smooth: input must be non-empty");
    if (!std::isfinite(sigma) || sigma <= 0.0) {
        throw ConfigError("gaussian_smooth: sigma must be > 0");
    }

    const std::ptrdiff_t radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double norm = 0.0;
    for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        const double w = std::exp(-(static_cast<double>(k) * k) / (2.0 * sigma * sigma));
        kernel[static_cast<std::size_t>(k + radius)] = w;
        norm += w;
    }
    for (double& w : kernel) w /= norm;

    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(s.size());
    auto reflect = [n](std::ptrdiff_t i) {
        // Reflect about the array edges until the index lands inside.
        while (i < 0 || i >= n) {
            if (i < 0) i = -i - 1;
            if (i >= n) i = 2 * n - 1 - i;
        }
        return static_cast<std::size_t>(i);
    };

    Series out(s.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
            acc += kernel[static_cast<std::size_t>(k + radius)] * s[reflect(i - k)];
        }
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

// out[t] = s[t+1] - s[t]; output is one shorter than the input.
inline Series first_difference(const Series& s) {
    if (s.size() < 2) throw LengthError("first_difference: input must have length >= 2");
    Series out(s.size() - 1);
    for (std::size_t t = 0; t + 1 < s.size(); ++t) {
        out[t] = s[t + 1] - s[t];
    }
    return out;
}

enum class ExtremumKind { maximum, minimum };

struct Extremum {
    std::size_t index;
    ExtremumKind kind;

    bool operator==(const Extremum&) const = default;
};

// Strict interior turning points. A run of equal values flanked by lower
// (resp. higher) neighbors counts once, at its leftmost index, so extrema
// positions are deterministic in the presence of ties. Runs touching a
// sequence boundary are never extrema.
inline std::vector<Extremum> local_extrema(const Series& s) {
    if (s.size() < 3) throw LengthError("local_extrema: input must have length >= 3");
    std::vector<Extremum> out;
    const std::size_t n = s.size();
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && s[j + 1] == s[i]) ++j;
        if (i > 0 && j + 1 < n) {
            if (s[i - 1] < s[i] && s[j + 1] < s[i]) {
                out.push_back({i, ExtremumKind::maximum});
            } else if (s[i - 1] > s[i] && s[j + 1] > s[i]) {
                out.push_back({i, ExtremumKind::minimum});
            }
        }
        i = j + 1;
    }
    return out;
}

inline double rms(std::span<const double> xs) {
    if (xs.empty()) throw LengthError("rms: input must be non-empty");
    double acc = 0.0;
    for (double x : xs) acc += x * x;
    return std::sqrt(acc / static_cast<double>(xs.size()));
}

struct GroupNormalization {
    std::map<std::string, double> values;
    // One entry per group that was pinned to zero (single member or zero
    // variance); the corpus report surfaces these as warnings.
    std::vector<std::string> degenerate_groups;
};

// Z-normalizes values within each group using the population standard
// deviation. Groups with a single member or zero variance map every member
// to 0 instead of erroring, so one-clip identities cannot abort a corpus run.
inline GroupNormalization z_normalize_by_group(const std::map<std::string, double>& values,
                                               const std::map<std::string, std::string>& group_of) {
    std::map<std::string, std::vector<std::string>> members;
    for (const auto& [id, value] : values) {
        auto it = group_of.find(id);
        if (it == group_of.end()) {
            throw ConfigError("z_normalize_by_group: no group for id '" + id + "'");
        }
        if (!std::isfinite(value)) {
            throw DataError("z_normalize_by_group: non-finite value for id '" + id + "'");
        }
        members[it->second].push_back(id);
    }

    GroupNormalization out;
    for (const auto& [group, ids] : members) {
        const double n = static_cast<double>(ids.size());
        double mean = 0.0;
        for (const auto& id : ids) mean += values.at(id);
        mean /= n;
        double var = 0.0;
        for (const auto& id : ids) {
            const double d = values.at(id) - mean;
            var += d * d;
        }
        const double sigma = std::sqrt(var / n);
        if (ids.size() < 2 || sigma == 0.0) {
            for (const auto& id : ids) out.values[id] = 0.0;
            out.degenerate_groups.push_back(group);
            continue;
        }
        for (const auto& id : ids) {
            out.values[id] = (values.at(id) - mean) / sigma;
        }
    }
    return out;
}

// a . b / (|a| |b|), clamped into [-1, 1].
inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ConfigError("cosine_similarity: vectors must have equal dimension");
    }
    if (a.empty()) throw ConfigError("cosine_similarity: vectors must be non-empty");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na <= 0.0 || nb <= 0.0) {
        throw DataError("cosine_similarity: zero-norm vector");
    }
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

// Two-pass Pearson correlation, clamped into [-1, 1].
inline double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ConfigError("pearson: inputs must have equal length");
    if (x.size() < 2) throw LengthError("pearson: inputs must have length >= 2");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw DegenerateError("pearson: zero variance input");
    }
    return std::clamp(sxy / (std::sqrt(sxx) * std::sqrt(syy)), -1.0, 1.0);
}

} // namespace lipsync::signal

#endif
