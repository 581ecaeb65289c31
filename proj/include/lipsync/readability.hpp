#ifndef LIPSYNC_READABILITY_HPP
#define LIPSYNC_READABILITY_HPP

// Lip readability: the Perceptual Lip Readability Score over paired
// speech/mesh embedding windows, the baseline Lip Vertex Error, and the
// sliding-window split used to form embedding inputs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "lipsync/core.hpp"
#include "lipsync/errors.hpp"
#include "lipsync/signal.hpp"

namespace lipsync::readability {

struct WindowingConfig {
    std::size_t window_frames = 5;
    std::size_t stride = 5; // 5 for evaluation windows, 1 for loss extraction

    void validate() const {
        lipsync::detail::require(window_frames >= 1, "WindowingConfig.window_frames",
                                 "must be >= 1");
        lipsync::detail::require(stride >= 1, "WindowingConfig.stride", "must be >= 1");
    }
};

// Windows start at 0, stride, 2*stride, ...; each holds exactly
// window_frames frames; trailing frames that cannot fill a window are
// dropped.
inline std::vector<MeshSequence> window_clip(const MeshSequence& mesh,
                                             const WindowingConfig& cfg) {
    cfg.validate();
    if (mesh.frames() < cfg.window_frames) {
        throw LengthError("window_clip: clip has " + std::to_string(mesh.frames()) +
                          " frames, window needs " + std::to_string(cfg.window_frames));
    }
    std::vector<MeshSequence> out;
    const std::size_t window_values = cfg.window_frames * mesh.vertex_count() * 3;
    for (std::size_t start = 0; start + cfg.window_frames <= mesh.frames();
         start += cfg.stride) {
        const std::size_t offset = start * mesh.vertex_count() * 3;
        std::vector<double> positions(
            mesh.positions().begin() + static_cast<std::ptrdiff_t>(offset),
            mesh.positions().begin() + static_cast<std::ptrdiff_t>(offset + window_values));
        out.emplace_back(cfg.window_frames, mesh.vertex_count(), std::move(positions),
                         mesh.fps());
    }
    return out;
}

// Mean cosine similarity between the paired speech and mesh embeddings of
// one layer. per_clip holds the per-window similarities.
inline MetricReport plrs(const EmbeddingSet& emb, std::uint32_t layer,
                         std::map<std::string, std::string> parameters = {}) {
    const auto layer_index = emb.layer_index(layer);
    if (!layer_index) {
        throw ConfigError("plrs: layer " + std::to_string(layer) + " not present");
    }
    std::map<std::string, double> per_window;
    for (std::size_t g = 0; g < emb.windows(); ++g) {
        char key[24];
        std::snprintf(key, sizeof(key), "window_%06zu", g);
        per_window[key] = signal::cosine_similarity(emb.speech(*layer_index, g),
                                                    emb.mesh(*layer_index, g));
    }
    parameters.emplace("layer", std::to_string(layer));
    return MetricReport::mean_of("plrs", "cosine", per_window, std::move(parameters));
}

enum class LveMode {
    max_vertex,  // per frame, max over lip vertices of the L2 error
    mean_vertex, // per frame, mean over lip vertices of the L2 error
};

// Lip Vertex Error between a ground-truth and predicted sequence, in input
// mesh units. Default follows the MeshTalk convention: per-frame maximum
// over the lip region, then mean over frames.
inline double lve(const MeshSequence& gt, const MeshSequence& pred, const LandmarkSpec& lm,
                  LveMode mode = LveMode::max_vertex) {
    if (gt.frames() != pred.frames() || gt.vertex_count() != pred.vertex_count()) {
        throw ConfigError("lve: sequences must share frame and vertex counts");
    }
    lm.validate_for(gt.vertex_count());

    double total = 0.0;
    for (std::size_t t = 0; t < gt.frames(); ++t) {
        double frame_value = 0.0;
        for (std::uint32_t v : lm.lip_region()) {
            const auto a = gt.vertex(t, v);
            const auto b = pred.vertex(t, v);
            const double dx = a[0] - b[0];
            const double dy = a[1] - b[1];
            const double dz = a[2] - b[2];
            const double err = std::sqrt(dx * dx + dy * dy + dz * dz);
            if (mode == LveMode::max_vertex) {
                frame_value = std::max(frame_value, err);
            } else {
                frame_value += err;
            }
        }
        if (mode == LveMode::mean_vertex) {
            frame_value /= static_cast<double>(lm.lip_region().size());
        }
        total += frame_value;
    }
    return total / static_cast<double>(gt.frames());
}

} // namespace lipsync::readability

#endif
