#ifndef LIPSYNC_SYNTH_HPP
#define LIPSYNC_SYNTH_HPP

// Synthetic fixtures and brute-force oracles: parametric talking-mouth
// clips with controllable temporal offset and intensity gain, matched
// amplitude-modulated audio, a deterministic featurizer that stands in for
// trained encoders, and an exhaustive DTW reference.
//
// Synthetic topology (16 vertices): 0 upper lip center, 1 lower lip center,
// 2..13 lip region ring, 14 left eye, 15 right eye.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

#include "lipsync/core.hpp"
#include "lipsync/errors.hpp"
#include "lipsync/readability.hpp"
#include "lipsync/signal.hpp"

namespace lipsync::synth {

inline constexpr std::size_t kVertexCount = 16;
inline constexpr int kSampleRate = 16000;
// 400 Hz divides a 25 fps frame into whole cycles, so per-frame RMS carries
// no tone-phase ripple and the featurizer's envelope estimate is exact.
inline constexpr double kToneHz = 400.0;
inline constexpr double kAudioScale = 10.0; // lip distance (m) -> tone envelope
inline constexpr double kLipGap = 0.002;    // closed-mouth lip distance (m)

struct SynthSpec {
    double duration_s = 3.0;
    double fps = 25.0;
    double mouth_hz = 2.0; // open/close cycles per second
    double amplitude = 0.01;
    double noise_sigma = 0.0;
    int offset_frames = 0;   // >0 delays the mesh track relative to the audio
    double intensity_gain = 1.0;
    std::uint64_t seed = 0;

    void validate() const {
        lipsync::detail::require(std::isfinite(duration_s) && std::isfinite(fps) && fps > 0.0,
                                 "SynthSpec.fps", "must be > 0");
        lipsync::detail::require(duration_s * fps >= 4.0, "SynthSpec.duration_s",
                                 "must cover >= 4 frames");
        lipsync::detail::require(std::isfinite(mouth_hz) && mouth_hz > 0.0 &&
                                     mouth_hz < fps / 2.0,
                                 "SynthSpec.mouth_hz", "must satisfy 0 < mouth_hz < fps/2");
        lipsync::detail::require(std::isfinite(amplitude) && amplitude > 0.0,
                                 "SynthSpec.amplitude", "must be > 0");
        lipsync::detail::require(std::isfinite(noise_sigma) && noise_sigma >= 0.0,
                                 "SynthSpec.noise_sigma", "must be >= 0");
        lipsync::detail::require(std::isfinite(intensity_gain) && intensity_gain > 0.0,
                                 "SynthSpec.intensity_gain", "must be > 0");
    }
};

namespace detail {

// Box-Muller on top of mt19937_64 so noise is reproducible bit-for-bit from
// the seed alone, independent of the standard library's distribution
// implementation.
class SeededGaussian {
public:
    explicit SeededGaussian(std::uint64_t seed) : rng_(seed) {}

    double next() {
        const double u1 =
            (static_cast<double>(rng_()) + 1.0) / (static_cast<double>(rng_.max()) + 2.0);
        const double u2 =
            (static_cast<double>(rng_()) + 1.0) / (static_cast<double>(rng_.max()) + 2.0);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 rng_;
};

} // namespace detail

// Lip aperture per frame before any offset is applied:
// gain * (amplitude * |sin(pi * mouth_hz * t)| + noise), one open/close
// cycle per 1/mouth_hz seconds.
inline std::vector<double> aperture_track(const SynthSpec& spec) {
    spec.validate();
    const auto frames = static_cast<std::size_t>(std::llround(spec.duration_s * spec.fps));
    detail::SeededGaussian noise(spec.seed);
    std::vector<double> track(frames);
    for (std::size_t n = 0; n < frames; ++n) {
        const double t = static_cast<double>(n) / spec.fps;
        const double base =
            spec.amplitude * std::abs(std::sin(std::numbers::pi * spec.mouth_hz * t));
        const double jitter = spec.noise_sigma > 0.0 ? spec.noise_sigma * noise.next() : 0.0;
        track[n] = spec.intensity_gain * (base + jitter);
    }
    return track;
}

// Re-times a mesh by offset frames with edge-hold padding: frame n shows
// source frame clamp(n - offset, 0, T-1). Wraparound would fabricate an
// extra open/close event, so edges hold instead.
inline MeshSequence shift_frames(const MeshSequence& mesh, int offset) {
    const auto frames = static_cast<std::ptrdiff_t>(mesh.frames());
    const std::size_t frame_values = mesh.vertex_count() * 3;
    std::vector<double> positions(mesh.positions().size());
    for (std::ptrdiff_t n = 0; n < frames; ++n) {
        const auto src = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(
            n - offset, 0, frames - 1));
        std::copy_n(mesh.positions().begin() + static_cast<std::ptrdiff_t>(src * frame_values),
                    frame_values,
                    positions.begin() + n * static_cast<std::ptrdiff_t>(frame_values));
    }
    return MeshSequence(mesh.frames(), mesh.vertex_count(), std::move(positions), mesh.fps());
}

struct SynthClip {
    MeshSequence mesh;
    AudioClip audio;
    LandmarkSpec landmarks;
};

inline LandmarkSpec synthetic_landmarks() {
    return LandmarkSpec(0, 1, {2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13}, 14, 15);
}

// Builds a mesh whose lip distance is kLipGap + aperture, an audio tone
// whose envelope tracks that same distance, and the landmark set for the
// synthetic topology. offset_frames delays the mesh relative to the audio.
// Deterministic in the spec.
inline SynthClip make_clip(const SynthSpec& spec) {
    spec.validate();
    const std::vector<double> track = aperture_track(spec);
    const auto frames = track.size();

    // Mesh side uses the offset-shifted track.
    std::vector<double> mesh_track(frames);
    for (std::size_t n = 0; n < frames; ++n) {
        const auto src = static_cast<std::size_t>(
            std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n) - spec.offset_frames, 0,
                                       static_cast<std::ptrdiff_t>(frames) - 1));
        mesh_track[n] = track[src];
    }

    std::vector<double> positions;
    positions.reserve(frames * kVertexCount * 3);
    constexpr double ring_radius = 0.02;
    for (std::size_t n = 0; n < frames; ++n) {
        const double aperture = mesh_track[n];
        // 0: upper lip center, 1: lower lip center
        positions.insert(positions.end(), {0.0, kLipGap + aperture, 0.0});
        positions.insert(positions.end(), {0.0, 0.0, 0.0});
        // 2..13: lip ring, each vertex tracking a fixed fraction of the
        // aperture so displacement scales linearly with intensity
        for (std::size_t m = 0; m < 12; ++m) {
            const double angle = 2.0 * std::numbers::pi * static_cast<double>(m) / 12.0;
            const double weight = 0.2 + 0.6 * static_cast<double>(m) / 11.0;
            positions.insert(positions.end(),
                             {ring_radius * std::cos(angle), weight * aperture,
                              ring_radius * std::sin(angle)});
        }
        // 14, 15: eyes, static
        positions.insert(positions.end(), {-0.032, 0.06, 0.01});
        positions.insert(positions.end(), {0.032, 0.06, 0.01});
    }
    MeshSequence mesh(frames, kVertexCount, std::move(positions), spec.fps);

    // Audio side uses the unshifted track: tone with an envelope holding the
    // lip distance of the frame each sample falls in.
    const auto samples_count = static_cast<std::size_t>(
        std::llround(static_cast<double>(frames) * kSampleRate / spec.fps));
    std::vector<double> samples(samples_count);
    for (std::size_t k = 0; k < samples_count; ++k) {
        const double t = static_cast<double>(k) / kSampleRate;
        const auto frame = std::min(
            frames - 1, static_cast<std::size_t>(std::floor(t * spec.fps)));
        const double envelope = kAudioScale * (kLipGap + track[frame]);
        samples[k] =
            std::clamp(envelope * std::sin(2.0 * std::numbers::pi * kToneHz * t), -1.0, 1.0);
    }
    AudioClip audio(std::move(samples), kSampleRate);

    return SynthClip{std::move(mesh), std::move(audio), synthetic_landmarks()};
}

namespace detail {

// Internal scales that bring the handcrafted features to comparable
// magnitudes, so no single component dominates the cosine.
inline constexpr double kDistanceScale = 50.0;
inline constexpr double kDerivScale = 400.0;
inline constexpr double kRmsScale = 5.0;
inline constexpr double kZcrScale = 5.0;
inline constexpr double kBias = 0.25;

inline std::array<double, 8> window_features(double distance_mean, double deriv_rms,
                                             double audio_rms, double zcr) {
    return {distance_mean * kDistanceScale,
            deriv_rms * kDerivScale,
            audio_rms * kRmsScale,
            zcr * kZcrScale,
            kBias,
            0.0,
            0.0,
            0.0};
}

} // namespace detail

// Deterministic stand-in for the trained encoders. Per window, both sides
// compute the same handcrafted feature vector (lip-distance mean, distance
// derivative RMS, audio RMS, audio zero-crossing rate, padded) from their
// own modality -- the speech side estimates the lip distance from the tone
// envelope -- and embed it through one shared seeded random projection.
// Synchronized windows therefore embed near-identically; desynchronized
// ones do not. Expects the synthetic topology (lip centers at vertices
// 0 and 1).
inline EmbeddingSet test_featurizer(const AudioClip& speech, const MeshSequence& mesh,
                                    const readability::WindowingConfig& cfg, std::size_t dim,
                                    std::uint64_t seed) {
    if (mesh.vertex_count() < 2) {
        throw ConfigError("test_featurizer: mesh must carry the synthetic lip vertices");
    }
    if (dim < 1) throw ConfigError("test_featurizer: dim must be >= 1");
    cfg.validate();
    if (mesh.frames() < cfg.window_frames) {
        throw LengthError("test_featurizer: clip too short for one window");
    }

    // Lip distance per frame (vertices 0 and 1 of the synthetic topology).
    std::vector<double> distance(mesh.frames());
    for (std::size_t t = 0; t < mesh.frames(); ++t) {
        const auto u = mesh.vertex(t, 0);
        const auto l = mesh.vertex(t, 1);
        const double dx = u[0] - l[0];
        const double dy = u[1] - l[1];
        const double dz = u[2] - l[2];
        distance[t] = std::sqrt(dx * dx + dy * dy + dz * dz);
    }

    // Shared random projection, fixed by the seed.
    detail::SeededGaussian gaussian(seed);
    std::vector<double> projection(dim * 8);
    for (double& x : projection) x = gaussian.next();
    auto project = [&](const std::array<double, 8>& f) {
        std::vector<double> e(dim);
        for (std::size_t r = 0; r < dim; ++r) {
            double acc = 0.0;
            for (std::size_t c = 0; c < 8; ++c) acc += projection[r * 8 + c] * f[c];
            e[r] = acc;
        }
        return e;
    };

    const double sr = static_cast<double>(speech.sample_rate());
    const double samples_per_frame = sr / mesh.fps();

    std::vector<double> speech_block, mesh_block;
    std::size_t windows = 0;
    for (std::size_t start = 0; start + cfg.window_frames <= mesh.frames();
         start += cfg.stride) {
        // Mesh side: statistics of the true lip distance track.
        std::vector<double> track(distance.begin() + static_cast<std::ptrdiff_t>(start),
                                  distance.begin() +
                                      static_cast<std::ptrdiff_t>(start + cfg.window_frames));
        const double mesh_mean =
            std::accumulate(track.begin(), track.end(), 0.0) / static_cast<double>(track.size());
        const double mesh_deriv_rms =
            track.size() > 1 ? signal::rms(signal::first_difference(track)) : 0.0;
        const auto mesh_feat = detail::window_features(
            mesh_mean, mesh_deriv_rms, mesh_mean * kAudioScale / std::numbers::sqrt2,
            2.0 * kToneHz / sr);

        // Speech side: the same statistics estimated from the tone.
        const auto s0 = static_cast<std::size_t>(std::llround(
            static_cast<double>(start) * samples_per_frame));
        const auto s1 = std::min(speech.samples().size(),
                                 static_cast<std::size_t>(std::llround(
                                     static_cast<double>(start + cfg.window_frames) *
                                     samples_per_frame)));
        if (s1 <= s0) {
            throw LengthError("test_featurizer: audio too short for window at frame " +
                              std::to_string(start));
        }
        std::vector<double> estimated(cfg.window_frames);
        for (std::size_t k = 0; k < cfg.window_frames; ++k) {
            const auto f0 = static_cast<std::size_t>(std::llround(
                static_cast<double>(start + k) * samples_per_frame));
            const auto f1 = std::min(speech.samples().size(),
                                     static_cast<std::size_t>(std::llround(
                                         static_cast<double>(start + k + 1) *
                                         samples_per_frame)));
            if (f1 <= f0) {
                throw LengthError("test_featurizer: audio too short for frame " +
                                  std::to_string(start + k));
            }
            const double frame_rms = signal::rms(
                std::span<const double>(speech.samples().data() + f0, f1 - f0));
            estimated[k] = frame_rms * std::numbers::sqrt2 / kAudioScale;
        }
        const double est_mean = std::accumulate(estimated.begin(), estimated.end(), 0.0) /
                                static_cast<double>(estimated.size());
        const double est_deriv_rms =
            estimated.size() > 1 ? signal::rms(signal::first_difference(estimated)) : 0.0;
        const double window_rms = signal::rms(
            std::span<const double>(speech.samples().data() + s0, s1 - s0));
        std::size_t crossings = 0;
        for (std::size_t k = s0 + 1; k < s1; ++k) {
            if ((speech.samples()[k - 1] < 0.0) != (speech.samples()[k] < 0.0)) ++crossings;
        }
        const std::size_t span_len = s1 - s0;
        const double zcr =
            span_len > 1 ? static_cast<double>(crossings) / static_cast<double>(span_len - 1)
                         : 0.0;
        const auto speech_feat = detail::window_features(est_mean, est_deriv_rms, window_rms, zcr);

        const auto mesh_vec = project(mesh_feat);
        const auto speech_vec = project(speech_feat);
        mesh_block.insert(mesh_block.end(), mesh_vec.begin(), mesh_vec.end());
        speech_block.insert(speech_block.end(), speech_vec.begin(), speech_vec.end());
        ++windows;
    }

    return EmbeddingSet({0}, windows, dim, std::move(speech_block), std::move(mesh_block));
}

// Exhaustive minimum over all monotone boundary-complete warping paths,
// with costs accumulated in path order so the result is bit-identical to
// the dynamic program it checks.
inline double brute_force_dtw(const signal::Series& a, const signal::Series& b) {
    if (a.empty() || b.empty()) throw LengthError("brute_force_dtw: inputs must be non-empty");
    if (a.size() * b.size() > 64) {
        throw ConfigError("brute_force_dtw: problem larger than the 64-cell cap");
    }

    double best = std::numeric_limits<double>::infinity();
    struct Frame {
        std::size_t i, j;
        double acc;
    };
    std::vector<Frame> stack;
    stack.push_back({0, 0, std::abs(a[0] - b[0])});
    while (!stack.empty()) {
        const Frame f = stack.back();
        stack.pop_back();
        if (f.i == a.size() - 1 && f.j == b.size() - 1) {
            best = std::min(best, f.acc);
            continue;
        }
        const bool can_i = f.i + 1 < a.size();
        const bool can_j = f.j + 1 < b.size();
        if (can_i && can_j) {
            stack.push_back({f.i + 1, f.j + 1, f.acc + std::abs(a[f.i + 1] - b[f.j + 1])});
        }
        if (can_i) stack.push_back({f.i + 1, f.j, f.acc + std::abs(a[f.i + 1] - b[f.j])});
        if (can_j) stack.push_back({f.i, f.j + 1, f.acc + std::abs(a[f.i] - b[f.j + 1])});
    }
    return best;
}

} // namespace lipsync::synth

#endif
