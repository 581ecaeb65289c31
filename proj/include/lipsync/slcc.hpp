#ifndef LIPSYNC_SLCC_HPP
#define LIPSYNC_SLCC_HPP

// Speech-Lip Intensity Correlation Coefficient: speech intensity from RMS
// loudness, lip intensity from frame-to-frame lip displacement, both
// z-normalized per identity, then correlated across the corpus. Includes
// the level-wise variant and the delta against a reference distribution.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lipsync/core.hpp"
#include "lipsync/errors.hpp"
#include "lipsync/signal.hpp"

namespace lipsync::slcc {

// Per-clip (SI, LI) z-score pairs plus the intensity level of each clip.
// Per-identity means of both columns are ~0 by construction, except for
// degenerate identity groups which are pinned at 0.
struct IntensityTable {
    std::map<std::string, std::pair<double, double>> per_clip;
    std::map<std::string, std::optional<IntensityLevel>> levels;
    std::vector<std::string> warnings;
};

struct IntensityResult {
    std::map<std::string, double> values;
    std::vector<std::string> warnings;
};

struct SpeechClip {
    std::string clip_id;
    std::string identity;
    const AudioClip* audio = nullptr;
};

// SI_k: full-clip RMS, z-normalized within each identity.
inline IntensityResult speech_intensity(const std::vector<SpeechClip>& clips) {
    if (clips.empty()) throw ConfigError("speech_intensity: no clips");
    std::map<std::string, double> raw;
    std::map<std::string, std::string> identity_of;
    for (const auto& clip : clips) {
        if (raw.count(clip.clip_id)) {
            throw ConfigError("speech_intensity: duplicate clip_id \"" + clip.clip_id + "\"");
        }
        raw[clip.clip_id] = signal::rms(clip.audio->samples());
        identity_of[clip.clip_id] = clip.identity;
    }
    auto normalized = signal::z_normalize_by_group(raw, identity_of);
    IntensityResult out;
    out.values = std::move(normalized.values);
    for (const auto& group : normalized.degenerate_groups) {
        out.warnings.push_back("identity \"" + group + "\" has degenerate speech RMS; SI pinned to 0");
    }
    return out;
}

// Dist_k: RMS over the T-1 frame transitions of the mean per-vertex lip
// displacement. With eye_normalize, divided by the time-averaged
// inter-ocular distance to compare across mesh topologies.
inline double lip_displacement(const MeshSequence& mesh, const LandmarkSpec& lm,
                               bool eye_normalize = false) {
    lm.validate_for(mesh.vertex_count());
    if (mesh.frames() < 2) throw LengthError("lip_displacement: need >= 2 frames");
    if (eye_normalize && !lm.has_eyes()) {
        throw ConfigError("lip_displacement: eye_normalize requires eye landmarks");
    }

    const std::size_t transitions = mesh.frames() - 1;
    double acc = 0.0;
    for (std::size_t t = 0; t < transitions; ++t) {
        double mean_disp = 0.0;
        for (std::uint32_t v : lm.lip_region()) {
            const auto a = mesh.vertex(t, v);
            const auto b = mesh.vertex(t + 1, v);
            const double dx = b[0] - a[0];
            const double dy = b[1] - a[1];
            const double dz = b[2] - a[2];
            mean_disp += std::sqrt(dx * dx + dy * dy + dz * dz);
        }
        mean_disp /= static_cast<double>(lm.lip_region().size());
        acc += mean_disp * mean_disp;
    }
    double dist = std::sqrt(acc / static_cast<double>(transitions));

    if (eye_normalize) {
        double eye_acc = 0.0;
        for (std::size_t t = 0; t < mesh.frames(); ++t) {
            const auto l = mesh.vertex(t, *lm.left_eye());
            const auto r = mesh.vertex(t, *lm.right_eye());
            const double dx = l[0] - r[0];
            const double dy = l[1] - r[1];
            const double dz = l[2] - r[2];
            eye_acc += std::sqrt(dx * dx + dy * dy + dz * dz);
        }
        const double eye_distance = eye_acc / static_cast<double>(mesh.frames());
        if (eye_distance <= 0.0) {
            throw DataError("lip_displacement: zero inter-ocular distance");
        }
        dist /= eye_distance;
    }
    return dist;
}

struct MeshClip {
    std::string clip_id;
    std::string identity;
    const MeshSequence* mesh = nullptr;
    const LandmarkSpec* landmarks = nullptr;
};

// LI_k: lip displacement, z-normalized within each identity.
inline IntensityResult lip_intensity(const std::vector<MeshClip>& clips,
                                     bool eye_normalize = false) {
    if (clips.empty()) throw ConfigError("lip_intensity: no clips");
    std::map<std::string, double> raw;
    std::map<std::string, std::string> identity_of;
    for (const auto& clip : clips) {
        if (raw.count(clip.clip_id)) {
            throw ConfigError("lip_intensity: duplicate clip_id \"" + clip.clip_id + "\"");
        }
        raw[clip.clip_id] = lip_displacement(*clip.mesh, *clip.landmarks, eye_normalize);
        identity_of[clip.clip_id] = clip.identity;
    }
    auto normalized = signal::z_normalize_by_group(raw, identity_of);
    IntensityResult out;
    out.values = std::move(normalized.values);
    for (const auto& group : normalized.degenerate_groups) {
        out.warnings.push_back("identity \"" + group +
                               "\" has degenerate lip displacement; LI pinned to 0");
    }
    return out;
}

// r_SL over the whole table. per_clip records the (SI, LI) pairs; the
// aggregate is their Pearson correlation.
inline MetricReport slcc(const IntensityTable& table,
                         std::map<std::string, std::string> parameters = {}) {
    if (table.per_clip.size() < 2) {
        throw ConfigError("slcc: need >= 2 clips with (SI, LI) values");
    }
    std::vector<double> si, li;
    std::map<std::string, std::vector<double>> per_clip;
    for (const auto& [id, pair] : table.per_clip) {
        si.push_back(pair.first);
        li.push_back(pair.second);
        per_clip.emplace(id, std::vector<double>{pair.first, pair.second});
    }
    const double r = signal::pearson(si, li);

    if (!table.warnings.empty()) {
        std::string joined;
        for (const auto& w : table.warnings) {
            if (!joined.empty()) joined += "; ";
            joined += w;
        }
        parameters.emplace("warnings", joined);
    }
    return MetricReport("slcc", "r", Aggregation::pearson, std::move(per_clip), r,
                        std::move(parameters));
}

struct LevelwiseSlcc {
    // Levels with fewer than 2 clips are undefined rather than an error.
    std::map<IntensityLevel, std::optional<double>> per_level;
    double overall = 0.0;
};

// r_SL restricted to each intensity level. Clips without a level are
// excluded from the level subsets but still count toward overall.
inline LevelwiseSlcc levelwise_slcc(const IntensityTable& table) {
    LevelwiseSlcc out;
    out.overall = slcc(table).aggregate();

    for (IntensityLevel level :
         {IntensityLevel::lv1, IntensityLevel::lv2, IntensityLevel::lv3}) {
        std::vector<double> si, li;
        for (const auto& [id, pair] : table.per_clip) {
            const auto it = table.levels.find(id);
            if (it == table.levels.end() || !it->second || *it->second != level) continue;
            si.push_back(pair.first);
            li.push_back(pair.second);
        }
        if (si.empty()) continue; // level absent from the corpus
        if (si.size() < 2) {
            out.per_level[level] = std::nullopt;
            continue;
        }
        try {
            out.per_level[level] = signal::pearson(si, li);
        } catch (const DegenerateError&) {
            out.per_level[level] = std::nullopt;
        }
    }
    return out;
}

// |model - reference|: how far a model's intensity correlation sits from
// the correlation measured on the data distribution itself.
inline double slcc_delta(double model, double reference) {
    if (!std::isfinite(model) || !std::isfinite(reference)) {
        throw ConfigError("slcc_delta: inputs must be finite");
    }
    return std::abs(model - reference);
}

} // namespace lipsync::slcc

#endif
