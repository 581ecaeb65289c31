#ifndef LIPSYNC_CORE_HPP
#define LIPSYNC_CORE_HPP

// Domain types shared by every metric and loss module. All types validate
// their invariants at construction and are immutable afterwards, so values
// can be copied and shared across threads freely.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lipsync/errors.hpp"

namespace lipsync {

namespace detail {

inline void require(bool ok, const std::string& field, const std::string& rule) {
    if (!ok) {
        throw InvariantError(field + ": " + rule);
    }
}

inline bool all_finite(std::span<const double> xs) {
    for (double x : xs) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

// %.17g, enough digits for a double to survive a parse round trip.
inline std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

// T frames of V vertices, each an (x, y, z) triple in mesh units. Positions
// are stored frame-major, then vertex-major. Files carry 32-bit reals; the
// in-memory representation is double so metric arithmetic stays stable.
class MeshSequence {
public:
    MeshSequence(std::size_t frames, std::size_t vertex_count, std::vector<double> positions,
                 double fps)
        : frames_(frames), vertex_count_(vertex_count), positions_(std::move(positions)), fps_(fps) {
        detail::require(frames_ >= 1, "MeshSequence.frames", "must be >= 1");
        detail::require(vertex_count_ >= 1, "MeshSequence.vertex_count", "must be >= 1");
        detail::require(std::isfinite(fps_) && fps_ > 0.0, "MeshSequence.fps", "must be > 0");
        detail::require(positions_.size() == frames_ * vertex_count_ * 3,
                        "MeshSequence.positions",
                        "must hold frames * vertex_count * 3 values");
        detail::require(detail::all_finite(positions_), "MeshSequence.positions",
                        "must contain only finite values");
    }

    std::size_t frames() const noexcept { return frames_; }
    std::size_t vertex_count() const noexcept { return vertex_count_; }
    double fps() const noexcept { return fps_; }
    const std::vector<double>& positions() const noexcept { return positions_; }

    // (x, y, z) of vertex v at frame t.
    std::span<const double, 3> vertex(std::size_t t, std::size_t v) const {
        return std::span<const double, 3>(positions_.data() + (t * vertex_count_ + v) * 3, 3);
    }

private:
    std::size_t frames_;
    std::size_t vertex_count_;
    std::vector<double> positions_;
    double fps_;
};

// Mono audio, samples normalized to [-1, 1].
class AudioClip {
public:
    AudioClip(std::vector<double> samples, int sample_rate)
        : samples_(std::move(samples)), sample_rate_(sample_rate) {
        detail::require(!samples_.empty(), "AudioClip.samples", "must hold at least one sample");
        detail::require(sample_rate_ > 0, "AudioClip.sample_rate", "must be > 0");
        detail::require(detail::all_finite(samples_), "AudioClip.samples",
                        "must contain only finite values");
    }

    const std::vector<double>& samples() const noexcept { return samples_; }
    int sample_rate() const noexcept { return sample_rate_; }
    double duration_s() const noexcept {
        return static_cast<double>(samples_.size()) / sample_rate_;
    }

private:
    std::vector<double> samples_;
    int sample_rate_;
};

// Vertex indices of the lip centers, the lip region, and (optionally) the
// eyes. Indices are validated against a concrete mesh with validate_for().
class LandmarkSpec {
public:
    LandmarkSpec(std::uint32_t upper_lip_center, std::uint32_t lower_lip_center,
                 std::vector<std::uint32_t> lip_region,
                 std::optional<std::uint32_t> left_eye = std::nullopt,
                 std::optional<std::uint32_t> right_eye = std::nullopt)
        : upper_lip_center_(upper_lip_center),
          lower_lip_center_(lower_lip_center),
          lip_region_(std::move(lip_region)),
          left_eye_(left_eye),
          right_eye_(right_eye) {
        detail::require(!lip_region_.empty(), "LandmarkSpec.lip_region", "must be non-empty");
        detail::require(upper_lip_center_ != lower_lip_center_, "LandmarkSpec.upper_lip_center",
                        "must differ from lower_lip_center");
    }

    std::uint32_t upper_lip_center() const noexcept { return upper_lip_center_; }
    std::uint32_t lower_lip_center() const noexcept { return lower_lip_center_; }
    const std::vector<std::uint32_t>& lip_region() const noexcept { return lip_region_; }
    std::optional<std::uint32_t> left_eye() const noexcept { return left_eye_; }
    std::optional<std::uint32_t> right_eye() const noexcept { return right_eye_; }

    bool has_eyes() const noexcept { return left_eye_.has_value() && right_eye_.has_value(); }

    // Throws LandmarkError if any index is out of range for a V-vertex mesh.
    void validate_for(std::size_t vertex_count) const {
        auto check = [&](std::uint32_t idx, const char* name) {
            if (idx >= vertex_count) {
                throw LandmarkError(std::string(name) + " index " + std::to_string(idx) +
                                    " out of range for mesh with " +
                                    std::to_string(vertex_count) + " vertices");
            }
        };
        check(upper_lip_center_, "upper_lip_center");
        check(lower_lip_center_, "lower_lip_center");
        for (std::uint32_t idx : lip_region_) check(idx, "lip_region");
        if (left_eye_) check(*left_eye_, "left_eye");
        if (right_eye_) check(*right_eye_, "right_eye");
    }

private:
    std::uint32_t upper_lip_center_;
    std::uint32_t lower_lip_center_;
    std::vector<std::uint32_t> lip_region_;
    std::optional<std::uint32_t> left_eye_;
    std::optional<std::uint32_t> right_eye_;
};

enum class IntensityLevel { lv1, lv2, lv3 };

inline std::string to_string(IntensityLevel level) {
    switch (level) {
        case IntensityLevel::lv1: return "Lv1";
        case IntensityLevel::lv2: return "Lv2";
        case IntensityLevel::lv3: return "Lv3";
    }
    return "Lv?";
}

inline std::optional<IntensityLevel> intensity_level_from_string(const std::string& s) {
    if (s == "Lv1") return IntensityLevel::lv1;
    if (s == "Lv2") return IntensityLevel::lv2;
    if (s == "Lv3") return IntensityLevel::lv3;
    return std::nullopt;
}

// One corpus entry: identity, optional expressiveness level, asset paths,
// and the landmark set to use for this clip. Clips without an intensity
// level take part in overall SLCC but not in the level-wise variant.
struct ClipRecord {
    std::string clip_id;
    std::string identity;
    std::optional<IntensityLevel> intensity_level;
    std::string mesh_path;
    std::string audio_path;      // empty when the manifest omits it
    std::string embedding_path;  // empty when the manifest omits it
    LandmarkSpec landmarks;

    ClipRecord(std::string clip_id_, std::string identity_,
               std::optional<IntensityLevel> intensity_level_, std::string mesh_path_,
               std::string audio_path_, std::string embedding_path_, LandmarkSpec landmarks_)
        : clip_id(std::move(clip_id_)),
          identity(std::move(identity_)),
          intensity_level(intensity_level_),
          mesh_path(std::move(mesh_path_)),
          audio_path(std::move(audio_path_)),
          embedding_path(std::move(embedding_path_)),
          landmarks(std::move(landmarks_)) {
        detail::require(!clip_id.empty(), "ClipRecord.clip_id", "must be non-empty");
        detail::require(!identity.empty(), "ClipRecord.identity", "must be non-empty");
    }
};

// Paired speech/mesh embedding vectors: |L| layers x G windows x H dims per
// side, stored layer-major then window-major. Every vector must have a
// strictly positive norm so cosine similarity is defined.
class EmbeddingSet {
public:
    EmbeddingSet(std::vector<std::uint32_t> layer_ids, std::size_t windows, std::size_t dim,
                 std::vector<double> speech, std::vector<double> mesh)
        : layer_ids_(std::move(layer_ids)), windows_(windows), dim_(dim),
          speech_(std::move(speech)), mesh_(std::move(mesh)) {
        detail::require(!layer_ids_.empty(), "EmbeddingSet.layers", "must list >= 1 layer");
        detail::require(windows_ >= 1, "EmbeddingSet.windows", "must be >= 1");
        detail::require(dim_ >= 1, "EmbeddingSet.dim", "must be >= 1");
        const std::size_t expected = layer_ids_.size() * windows_ * dim_;
        detail::require(speech_.size() == expected, "EmbeddingSet.speech",
                        "must hold layers * windows * dim values");
        detail::require(mesh_.size() == expected, "EmbeddingSet.mesh",
                        "must match the speech tensor shape");
        detail::require(detail::all_finite(speech_), "EmbeddingSet.speech",
                        "must contain only finite values");
        detail::require(detail::all_finite(mesh_), "EmbeddingSet.mesh",
                        "must contain only finite values");
        check_norms(speech_, "EmbeddingSet.speech");
        check_norms(mesh_, "EmbeddingSet.mesh");
    }

    const std::vector<std::uint32_t>& layer_ids() const noexcept { return layer_ids_; }
    std::size_t windows() const noexcept { return windows_; }
    std::size_t dim() const noexcept { return dim_; }
    const std::vector<double>& speech_data() const noexcept { return speech_; }
    const std::vector<double>& mesh_data() const noexcept { return mesh_; }

    std::span<const double> speech(std::size_t layer_index, std::size_t window) const {
        return vector_at(speech_, layer_index, window);
    }
    std::span<const double> mesh(std::size_t layer_index, std::size_t window) const {
        return vector_at(mesh_, layer_index, window);
    }

    // Position of a layer id in layer_ids(), or nullopt if absent.
    std::optional<std::size_t> layer_index(std::uint32_t layer_id) const {
        for (std::size_t i = 0; i < layer_ids_.size(); ++i) {
            if (layer_ids_[i] == layer_id) return i;
        }
        return std::nullopt;
    }

private:
    std::span<const double> vector_at(const std::vector<double>& block, std::size_t layer_index,
                                      std::size_t window) const {
        return std::span<const double>(block.data() + (layer_index * windows_ + window) * dim_,
                                       dim_);
    }

    void check_norms(const std::vector<double>& block, const std::string& field) const {
        for (std::size_t l = 0; l < layer_ids_.size(); ++l) {
            for (std::size_t g = 0; g < windows_; ++g) {
                double sq = 0.0;
                for (double x : vector_at(block, l, g)) sq += x * x;
                detail::require(sq > 0.0, field,
                                "vector (layer " + std::to_string(layer_ids_[l]) + ", window " +
                                    std::to_string(g) + ") must have nonzero norm");
            }
        }
    }

    std::vector<std::uint32_t> layer_ids_;
    std::size_t windows_;
    std::size_t dim_;
    std::vector<double> speech_;
    std::vector<double> mesh_;
};

// Hyperparameters shared by the loss operations.
struct LossConfig {
    double temperature = 0.07;
    double lambda_contrastive = 1.0;
    double lambda_perceptual = 1e-7;

    LossConfig() = default;
    LossConfig(double temperature_, double lambda_contrastive_, double lambda_perceptual_)
        : temperature(temperature_),
          lambda_contrastive(lambda_contrastive_),
          lambda_perceptual(lambda_perceptual_) {
        detail::require(std::isfinite(temperature) && temperature > 0.0,
                        "LossConfig.temperature", "must be > 0");
        detail::require(std::isfinite(lambda_contrastive) && lambda_contrastive >= 0.0,
                        "LossConfig.lambda_contrastive", "must be >= 0");
        detail::require(std::isfinite(lambda_perceptual) && lambda_perceptual >= 0.0,
                        "LossConfig.lambda_perceptual", "must be >= 0");
    }
};

// How a report's aggregate is derived from its per-clip values.
enum class Aggregation {
    mean,    // aggregate = arithmetic mean of scalar per-clip values
    pearson, // per-clip values are (x, y) pairs; aggregate = their correlation
};

// Per-clip and corpus-aggregated values for one metric, plus the parameters
// the run used. Scalar metrics store one value per clip; SLCC stores the
// (SI, LI) pair. The aggregate is recomputed and checked at construction.
class MetricReport {
public:
    MetricReport(std::string metric_name, std::string unit, Aggregation aggregation,
                 std::map<std::string, std::vector<double>> per_clip, double aggregate,
                 std::map<std::string, std::string> parameters)
        : metric_name_(std::move(metric_name)),
          unit_(std::move(unit)),
          aggregation_(aggregation),
          per_clip_(std::move(per_clip)),
          aggregate_(aggregate),
          parameters_(std::move(parameters)) {
        if (!per_clip_.empty()) {
            detail::require(std::isfinite(aggregate_), "MetricReport.aggregate",
                            "must be finite");
            const double expected = recompute_aggregate();
            detail::require(std::abs(expected - aggregate_) <= 1e-9,
                            "MetricReport.aggregate",
                            "must equal the documented aggregation of per_clip values");
        }
    }

    static MetricReport mean_of(std::string metric_name, std::string unit,
                                const std::map<std::string, double>& per_clip,
                                std::map<std::string, std::string> parameters = {}) {
        std::map<std::string, std::vector<double>> values;
        double sum = 0.0;
        for (const auto& [id, v] : per_clip) {
            values.emplace(id, std::vector<double>{v});
            sum += v;
        }
        const double aggregate = per_clip.empty() ? 0.0 : sum / per_clip.size();
        return MetricReport(std::move(metric_name), std::move(unit), Aggregation::mean,
                            std::move(values), aggregate, std::move(parameters));
    }

    const std::string& metric_name() const noexcept { return metric_name_; }
    const std::string& unit() const noexcept { return unit_; }
    Aggregation aggregation() const noexcept { return aggregation_; }
    const std::map<std::string, std::vector<double>>& per_clip() const noexcept {
        return per_clip_;
    }
    double aggregate() const noexcept { return aggregate_; }
    const std::map<std::string, std::string>& parameters() const noexcept { return parameters_; }
    std::size_t clip_count() const noexcept { return per_clip_.size(); }

    // Value-semantic parameter extension: returns a copy with extra entries
    // merged in (existing keys win).
    MetricReport with_parameters(const std::map<std::string, std::string>& extra) const {
        MetricReport copy = *this;
        for (const auto& [k, v] : extra) copy.parameters_.emplace(k, v);
        return copy;
    }

private:
    double recompute_aggregate() const {
        if (aggregation_ == Aggregation::mean) {
            double sum = 0.0;
            for (const auto& [id, vs] : per_clip_) {
                detail::require(vs.size() == 1, "MetricReport.per_clip",
                                "mean aggregation requires one value per clip (clip " + id + ")");
                sum += vs[0];
            }
            return sum / static_cast<double>(per_clip_.size());
        }
        // Pearson over the (x, y) columns, two-pass.
        detail::require(per_clip_.size() >= 2, "MetricReport.per_clip",
                        "correlation aggregation requires >= 2 clips");
        double mx = 0.0, my = 0.0;
        for (const auto& [id, vs] : per_clip_) {
            detail::require(vs.size() == 2, "MetricReport.per_clip",
                            "correlation aggregation requires (x, y) pairs (clip " + id + ")");
            mx += vs[0];
            my += vs[1];
        }
        mx /= static_cast<double>(per_clip_.size());
        my /= static_cast<double>(per_clip_.size());
        double sxy = 0.0, sxx = 0.0, syy = 0.0;
        for (const auto& [id, vs] : per_clip_) {
            sxy += (vs[0] - mx) * (vs[1] - my);
            sxx += (vs[0] - mx) * (vs[0] - mx);
            syy += (vs[1] - my) * (vs[1] - my);
        }
        detail::require(sxx > 0.0 && syy > 0.0, "MetricReport.per_clip",
                        "correlation aggregation requires nonzero variance in both columns");
        return sxy / (std::sqrt(sxx) * std::sqrt(syy));
    }

    std::string metric_name_;
    std::string unit_;
    Aggregation aggregation_;
    std::map<std::string, std::vector<double>> per_clip_;
    double aggregate_;
    std::map<std::string, std::string> parameters_;
};

} // namespace lipsync

#endif
