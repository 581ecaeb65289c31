#ifndef LIPSYNC_MTM_HPP
#define LIPSYNC_MTM_HPP

// Mean Temporal Misalignment: lip-distance extraction, derivative dynamic
// time warping of the smoothed distance derivatives, same-type extrema
// matching along the alignment path, and per-clip / corpus aggregation in
// milliseconds.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lipsync/core.hpp"
#include "lipsync/errors.hpp"
#include "lipsync/parallel.hpp"
#include "lipsync/signal.hpp"

namespace lipsync::mtm {

// Monotone boundary-complete warping path between two sequences. Steps are
// restricted to {(1,0), (0,1), (1,1)}.
class AlignmentPath {
public:
    AlignmentPath(std::vector<std::pair<std::size_t, std::size_t>> pairs, double cost)
        : pairs_(std::move(pairs)), cost_(cost) {
        lipsync::detail::require(!pairs_.empty(), "AlignmentPath.pairs", "must be non-empty");
        lipsync::detail::require(pairs_.front() == std::pair<std::size_t, std::size_t>(0, 0),
                                 "AlignmentPath.pairs", "must start at (0, 0)");
        for (std::size_t k = 1; k < pairs_.size(); ++k) {
            const auto [pi, pj] = pairs_[k - 1];
            const auto [ci, cj] = pairs_[k];
            const bool step_ok = (ci == pi + 1 && cj == pj) || (ci == pi && cj == pj + 1) ||
                                 (ci == pi + 1 && cj == pj + 1);
            lipsync::detail::require(step_ok, "AlignmentPath.pairs",
                                     "steps must increment i, j, or both by exactly 1");
        }
        lipsync::detail::require(std::isfinite(cost_) && cost_ >= 0.0, "AlignmentPath.cost",
                                 "must be a nonnegative real");
    }

    const std::vector<std::pair<std::size_t, std::size_t>>& pairs() const noexcept {
        return pairs_;
    }
    double cost() const noexcept { return cost_; }

private:
    std::vector<std::pair<std::size_t, std::size_t>> pairs_;
    double cost_;
};

// Per-frame Euclidean distance between the upper and lower lip-center
// vertices.
inline signal::Series lip_distance_sequence(const MeshSequence& mesh, const LandmarkSpec& lm) {
    lm.validate_for(mesh.vertex_count());
    signal::Series out(mesh.frames());
    for (std::size_t t = 0; t < mesh.frames(); ++t) {
        const auto u = mesh.vertex(t, lm.upper_lip_center());
        const auto l = mesh.vertex(t, lm.lower_lip_center());
        const double dx = u[0] - l[0];
        const double dy = u[1] - l[1];
        const double dz = u[2] - l[2];
        out[t] = std::sqrt(dx * dx + dy * dy + dz * dz);
    }
    return out;
}

// Optimal warping path between two derivative sequences under pointwise
// cost |a_i - b_j|. Ties during backtracking prefer the diagonal step, then
// (1,0), then (0,1), so the path is deterministic.
inline AlignmentPath ddtw_align(const signal::Series& a, const signal::Series& b) {
    if (a.empty() || b.empty()) throw LengthError("ddtw_align: inputs must be non-empty");
    const std::size_t n = a.size();
    const std::size_t m = b.size();

    auto cost = [&](std::size_t i, std::size_t j) { return std::abs(a[i] - b[j]); };

    std::vector<double> dp(n * m);
    auto at = [&](std::size_t i, std::size_t j) -> double& { return dp[i * m + j]; };

    at(0, 0) = cost(0, 0);
    for (std::size_t j = 1; j < m; ++j) at(0, j) = at(0, j - 1) + cost(0, j);
    for (std::size_t i = 1; i < n; ++i) at(i, 0) = at(i - 1, 0) + cost(i, 0);
    for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t j = 1; j < m; ++j) {
            const double best =
                std::min(at(i - 1, j - 1), std::min(at(i - 1, j), at(i, j - 1)));
            at(i, j) = best + cost(i, j);
        }
    }

    std::vector<std::pair<std::size_t, std::size_t>> reversed;
    std::size_t i = n - 1;
    std::size_t j = m - 1;
    reversed.emplace_back(i, j);
    while (i > 0 || j > 0) {
        if (i == 0) {
            --j;
        } else if (j == 0) {
            --i;
        } else {
            const double diag = at(i - 1, j - 1);
            const double up = at(i - 1, j);
            const double left = at(i, j - 1);
            const double best = std::min(diag, std::min(up, left));
            if (diag == best) {
                --i;
                --j;
            } else if (up == best) {
                --i;
            } else {
                --j;
            }
        }
        reversed.emplace_back(i, j);
    }
    std::reverse(reversed.begin(), reversed.end());
    return AlignmentPath(std::move(reversed), at(n - 1, m - 1));
}

// Aligned extrema pairs (i, j) where i is an extremum of gt_deriv, j an
// extremum of pred_deriv of the same kind, (i, j) lies on the path, and j
// falls strictly between the previous and next ground-truth extrema of that
// same kind. Sequence boundaries act as virtual extrema at -1 and len, and
// the same-kind window spans one full open/close cycle, so a prediction can
// never be credited against the wrong mouth event.
inline std::vector<std::pair<std::size_t, std::size_t>> match_extrema(
    const signal::Series& gt_deriv, const signal::Series& pred_deriv, const AlignmentPath& path) {
    if (path.pairs().back() !=
        std::pair<std::size_t, std::size_t>(gt_deriv.size() - 1, pred_deriv.size() - 1)) {
        throw ConfigError("match_extrema: path does not cover both series");
    }

    const auto gt_extrema = signal::local_extrema(gt_deriv);
    const auto pred_extrema = signal::local_extrema(pred_deriv);

    struct Window {
        signal::ExtremumKind kind;
        std::ptrdiff_t lo; // previous same-kind extremum index, or -1
        std::ptrdiff_t hi; // next same-kind extremum index, or len
    };
    std::map<std::size_t, Window> gt_windows;
    for (std::size_t k = 0; k < gt_extrema.size(); ++k) {
        const auto& e = gt_extrema[k];
        std::ptrdiff_t lo = -1;
        for (std::size_t p = k; p-- > 0;) {
            if (gt_extrema[p].kind == e.kind) {
                lo = static_cast<std::ptrdiff_t>(gt_extrema[p].index);
                break;
            }
        }
        std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(gt_deriv.size());
        for (std::size_t p = k + 1; p < gt_extrema.size(); ++p) {
            if (gt_extrema[p].kind == e.kind) {
                hi = static_cast<std::ptrdiff_t>(gt_extrema[p].index);
                break;
            }
        }
        gt_windows.emplace(e.index, Window{e.kind, lo, hi});
    }

    std::map<std::size_t, signal::ExtremumKind> pred_kinds;
    for (const auto& e : pred_extrema) pred_kinds.emplace(e.index, e.kind);

    std::vector<std::pair<std::size_t, std::size_t>> matched;
    for (const auto& [i, j] : path.pairs()) {
        const auto git = gt_windows.find(i);
        if (git == gt_windows.end()) continue;
        const auto pit = pred_kinds.find(j);
        if (pit == pred_kinds.end() || pit->second != git->second.kind) continue;
        const auto js = static_cast<std::ptrdiff_t>(j);
        if (js > git->second.lo && js < git->second.hi) {
            matched.emplace_back(i, j);
        }
    }
    return matched;
}

struct MtmClipResult {
    std::string clip_id;
    std::size_t matched_pairs = 0;
    double delta_t_frames = 0.0;
    double delta_t_ms = 0.0;
};

// Full per-clip pipeline: lip distance -> Gaussian smoothing -> first
// difference on both sequences -> DDTW -> same-type extrema matching ->
// mean |i - j|. Returns nullopt when no extrema pair matches; such clips
// are excluded from the corpus aggregate.
inline std::optional<MtmClipResult> clip_mtm(const MeshSequence& gt, const MeshSequence& pred,
                                             const LandmarkSpec& lm, double sigma,
                                             std::string clip_id = {}) {
    if (gt.fps() != pred.fps()) {
        throw ConfigError("clip_mtm: fps mismatch (" + std::to_string(gt.fps()) + " vs " +
                          std::to_string(pred.fps()) + ")");
    }
    if (gt.frames() < 4 || pred.frames() < 4) {
        throw LengthError("clip_mtm: both sequences need >= 4 frames");
    }

    const auto gt_deriv =
        signal::first_difference(signal::gaussian_smooth(lip_distance_sequence(gt, lm), sigma));
    const auto pred_deriv =
        signal::first_difference(signal::gaussian_smooth(lip_distance_sequence(pred, lm), sigma));

    const auto path = ddtw_align(gt_deriv, pred_deriv);
    const auto pairs = match_extrema(gt_deriv, pred_deriv, path);
    if (pairs.empty()) return std::nullopt;

    double sum = 0.0;
    for (const auto& [i, j] : pairs) {
        sum += std::abs(static_cast<double>(i) - static_cast<double>(j));
    }
    MtmClipResult result;
    result.clip_id = std::move(clip_id);
    result.matched_pairs = pairs.size();
    result.delta_t_frames = sum / static_cast<double>(pairs.size());
    result.delta_t_ms = result.delta_t_frames * 1000.0 / gt.fps();
    return result;
}

struct MtmClipInput {
    std::string clip_id;
    MeshSequence gt;
    MeshSequence pred;
    LandmarkSpec landmarks;
};

// Corpus aggregate: mean of the defined per-clip misalignments in
// milliseconds. Clips with no matched extrema are listed under the
// "undefined_clips" parameter. Per-clip work may fan out across `jobs`
// workers; the reduction is ordered by clip_id, so output is identical
// regardless of scheduling.
inline MetricReport corpus_mtm(const std::vector<MtmClipInput>& clips, double sigma,
                               std::size_t jobs = 1) {
    if (clips.empty()) throw ConfigError("corpus_mtm: no clips");

    std::vector<std::optional<MtmClipResult>> results(clips.size());
    parallel_for(clips.size(), jobs, [&](std::size_t k) {
        results[k] = clip_mtm(clips[k].gt, clips[k].pred, clips[k].landmarks, sigma,
                              clips[k].clip_id);
    });

    std::map<std::string, double> per_clip;
    std::vector<std::string> undefined;
    for (std::size_t k = 0; k < clips.size(); ++k) {
        if (results[k]) {
            per_clip[clips[k].clip_id] = results[k]->delta_t_ms;
        } else {
            undefined.push_back(clips[k].clip_id);
        }
    }
    if (per_clip.empty()) {
        throw DegenerateError("corpus_mtm: no clip produced a matched extrema pair");
    }

    std::sort(undefined.begin(), undefined.end());
    std::string undefined_joined;
    for (const auto& id : undefined) {
        if (!undefined_joined.empty()) undefined_joined += ",";
        undefined_joined += id;
    }

    std::map<std::string, std::string> parameters{
        {"sigma", lipsync::detail::format_real(sigma)},
        {"undefined_clips", undefined_joined},
    };
    return MetricReport::mean_of("mtm", "ms", per_clip, std::move(parameters));
}

} // namespace lipsync::mtm

#endif
