#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "lipsync/slcc.hpp"
#include "lipsync/synth.hpp"
#include "test_util.hpp"

using namespace lipsync;

namespace {

AudioClip tone(double amplitude, std::size_t samples = 4000) {
    std::vector<double> out(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        out[i] = amplitude * std::sin(2.0 * std::numbers::pi * 200.0 * i / 16000.0);
    }
    return AudioClip(std::move(out), 16000);
}

// Mesh whose lip-region vertices move by `step` between consecutive frames.
MeshSequence stepping_mesh(std::size_t frames, double step) {
    std::vector<double> positions;
    for (std::size_t t = 0; t < frames; ++t) {
        const double y = step * static_cast<double>(t);
        positions.insert(positions.end(), {0.0, y + 0.01, 0.0}); // upper lip
        positions.insert(positions.end(), {0.0, 0.0, 0.0});      // lower lip
        positions.insert(positions.end(), {0.01, y, 0.0});       // lip region
        positions.insert(positions.end(), {-0.01, y, 0.0});      // lip region
        positions.insert(positions.end(), {-0.03, 0.05, 0.0});   // left eye
        positions.insert(positions.end(), {0.03, 0.05, 0.0});    // right eye
    }
    return MeshSequence(frames, 6, std::move(positions), 25.0);
}

const LandmarkSpec kLandmarks(0, 1, {2, 3}, 4, 5);

} // namespace

TEST_CASE("speech_intensity z-normalizes RMS per identity") {
    const auto quiet = tone(0.1);
    const auto loud = tone(0.3);
    const auto si = slcc::speech_intensity({{"a", "id0", &quiet}, {"b", "id0", &loud}});
    CHECK(si.values.at("a") == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(si.values.at("b") == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(si.warnings.empty());
}

TEST_CASE("speech_intensity pins single-clip identities to zero with a warning") {
    const auto clip = tone(0.2);
    const auto si = slcc::speech_intensity({{"solo", "lonely", &clip}});
    CHECK(si.values.at("solo") == 0.0);
    REQUIRE(si.warnings.size() == 1);
    CHECK(si.warnings[0].find("lonely") != std::string::npos);
}

TEST_CASE("speech_intensity matches compose(rms, z_norm) on random audio") {
    std::mt19937 rng(61);
    std::vector<AudioClip> audio;
    std::vector<slcc::SpeechClip> clips;
    std::map<std::string, double> raw;
    std::map<std::string, std::string> groups;
    for (int i = 0; i < 12; ++i) {
        audio.emplace_back(testutil::random_series(rng, 500), 16000);
    }
    for (int i = 0; i < 12; ++i) {
        const std::string id = "clip" + std::to_string(i);
        const std::string identity = "id" + std::to_string(i % 3);
        clips.push_back({id, identity, &audio[static_cast<std::size_t>(i)]});
        raw[id] = signal::rms(audio[static_cast<std::size_t>(i)].samples());
        groups[id] = identity;
    }
    const auto si = slcc::speech_intensity(clips);
    const auto expected = signal::z_normalize_by_group(raw, groups);
    for (const auto& [id, value] : expected.values) {
        CHECK(si.values.at(id) == doctest::Approx(value).epsilon(1e-12));
    }
}

TEST_CASE("lip_displacement closed forms") {
    SUBCASE("T=2 with every lip vertex moving by delta gives delta") {
        const auto mesh = stepping_mesh(2, 0.004);
        CHECK(slcc::lip_displacement(mesh, kLandmarks) ==
              doctest::Approx(0.004).epsilon(1e-12));
    }

    SUBCASE("static mesh gives zero") {
        const auto mesh = stepping_mesh(5, 0.0);
        CHECK(slcc::lip_displacement(mesh, kLandmarks) == 0.0);
    }

    SUBCASE("eye normalization divides by the inter-ocular distance") {
        const auto mesh = stepping_mesh(2, 0.004);
        CHECK(slcc::lip_displacement(mesh, kLandmarks, true) ==
              doctest::Approx(0.004 / 0.06).epsilon(1e-9));
    }

    SUBCASE("eye normalization without eye landmarks is a config error") {
        const auto mesh = stepping_mesh(2, 0.004);
        const LandmarkSpec no_eyes(0, 1, {2, 3});
        CHECK_THROWS_AS(slcc::lip_displacement(mesh, no_eyes, true), ConfigError);
    }

    SUBCASE("single frame is too short") {
        const auto mesh = stepping_mesh(2, 0.004);
        const MeshSequence one(1, 6,
                               std::vector<double>(mesh.positions().begin(),
                                                   mesh.positions().begin() + 18),
                               25.0);
        CHECK_THROWS_AS(slcc::lip_displacement(one, kLandmarks), LengthError);
    }
}

TEST_CASE("lip_displacement matches the double-loop formula oracle on random meshes") {
    std::mt19937 rng(67);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t frames = 2 + rng() % 8;
        const std::size_t vertices = 5 + rng() % 4;
        const auto positions = testutil::random_series(rng, frames * vertices * 3);
        const MeshSequence mesh(frames, vertices, positions, 25.0);
        const LandmarkSpec lm(0, 1, {2, 3, 4});

        // Oracle: straight transcription of the displacement formula.
        double acc = 0.0;
        for (std::size_t t = 0; t + 1 < frames; ++t) {
            double mean = 0.0;
            for (std::uint32_t v : {2u, 3u, 4u}) {
                double sq = 0.0;
                for (int c = 0; c < 3; ++c) {
                    const double d = positions[((t + 1) * vertices + v) * 3 + c] -
                                     positions[(t * vertices + v) * 3 + c];
                    sq += d * d;
                }
                mean += std::sqrt(sq);
            }
            mean /= 3.0;
            acc += mean * mean;
        }
        const double expected = std::sqrt(acc / static_cast<double>(frames - 1));
        CHECK(slcc::lip_displacement(mesh, lm) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("make_clip intensity gain scales lip displacement linearly") {
    synth::SynthSpec spec;
    spec.seed = 9;
    spec.intensity_gain = 1.0;
    const auto base = synth::make_clip(spec);
    spec.intensity_gain = 2.0;
    const auto doubled = synth::make_clip(spec);

    const double d1 = slcc::lip_displacement(base.mesh, base.landmarks);
    const double d2 = slcc::lip_displacement(doubled.mesh, doubled.landmarks);
    CHECK(d2 / d1 == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("lip_intensity z-normalizes displacement per identity") {
    const auto slow = stepping_mesh(4, 0.001);
    const auto fast = stepping_mesh(4, 0.003);
    const auto li = slcc::lip_intensity(
        {{"a", "id0", &slow, &kLandmarks}, {"b", "id0", &fast, &kLandmarks}});
    CHECK(li.values.at("a") == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(li.values.at("b") == doctest::Approx(1.0).epsilon(1e-9));

    const auto same = slcc::lip_intensity(
        {{"a", "id0", &slow, &kLandmarks}, {"b", "id0", &slow, &kLandmarks}});
    CHECK(same.values.at("a") == 0.0);
    CHECK(same.values.at("b") == 0.0);
    REQUIRE(same.warnings.size() == 1);
}

TEST_CASE("slcc on exact linear relations") {
    slcc::IntensityTable table;
    table.per_clip["a"] = {-1.2, -1.2};
    table.per_clip["b"] = {0.3, 0.3};
    table.per_clip["c"] = {0.9, 0.9};
    CHECK(slcc::slcc(table).aggregate() == doctest::Approx(1.0).epsilon(1e-12));

    for (auto& [id, pair] : table.per_clip) pair.second = -pair.second;
    CHECK(slcc::slcc(table).aggregate() == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("slcc matches the textbook Pearson oracle on noisy synthetic clips") {
    std::mt19937 rng(71);
    std::normal_distribution<double> noise(0.0, 0.2);
    std::normal_distribution<double> unit(0.0, 1.0);

    slcc::IntensityTable table;
    std::vector<double> si, li;
    for (int k = 0; k < 500; ++k) {
        const double s = unit(rng);
        const double l = 0.6 * s + noise(rng);
        table.per_clip["clip" + std::to_string(k)] = {s, l};
    }
    for (const auto& [id, pair] : table.per_clip) {
        si.push_back(pair.first);
        li.push_back(pair.second);
    }

    // Textbook oracle, computed independently.
    const double n = 500.0;
    double ms = 0.0, ml = 0.0;
    for (std::size_t i = 0; i < si.size(); ++i) {
        ms += si[i];
        ml += li[i];
    }
    ms /= n;
    ml /= n;
    double cov = 0.0, vs = 0.0, vl = 0.0;
    for (std::size_t i = 0; i < si.size(); ++i) {
        cov += (si[i] - ms) * (li[i] - ml);
        vs += (si[i] - ms) * (si[i] - ms);
        vl += (li[i] - ml) * (li[i] - ml);
    }
    const double expected = cov / (std::sqrt(vs) * std::sqrt(vl));

    const auto report = slcc::slcc(table);
    CHECK(report.aggregate() == doctest::Approx(expected).epsilon(1e-12));
    // Analytic expectation: 0.6 / sqrt(0.36 + 0.04).
    CHECK(std::abs(report.aggregate() - 0.6 / std::sqrt(0.4)) < 0.1);
    CHECK(report.clip_count() == 500);
}

TEST_CASE("slcc rejects degenerate tables") {
    slcc::IntensityTable flat;
    flat.per_clip["a"] = {0.0, 1.0};
    flat.per_clip["b"] = {0.0, 2.0};
    CHECK_THROWS_AS(slcc::slcc(flat), DegenerateError);

    slcc::IntensityTable tiny;
    tiny.per_clip["a"] = {0.0, 1.0};
    CHECK_THROWS_AS(slcc::slcc(tiny), ConfigError);
}

TEST_CASE("slcc surfaces degeneracy warnings in the report parameters") {
    slcc::IntensityTable table;
    table.per_clip["a"] = {-1.0, -1.0};
    table.per_clip["b"] = {1.0, 1.0};
    table.per_clip["solo"] = {0.0, 0.0};
    table.warnings.push_back("identity \"lonely\" has degenerate speech RMS; SI pinned to 0");
    const auto report = slcc::slcc(table);
    CHECK(report.parameters().at("warnings").find("lonely") != std::string::npos);
}

TEST_CASE("levelwise_slcc splits by level and keeps unlabeled clips in overall") {
    slcc::IntensityTable table;
    auto add = [&](const std::string& id, double s, double l,
                   std::optional<IntensityLevel> level) {
        table.per_clip[id] = {s, l};
        table.levels[id] = level;
    };
    // Lv1 perfectly correlated, Lv2 perfectly anti-correlated, one unlabeled.
    add("a1", -1.0, -1.0, IntensityLevel::lv1);
    add("a2", 0.0, 0.0, IntensityLevel::lv1);
    add("a3", 1.0, 1.0, IntensityLevel::lv1);
    add("b1", -1.0, 1.0, IntensityLevel::lv2);
    add("b2", 1.0, -1.0, IntensityLevel::lv2);
    add("c1", 2.0, 2.0, std::nullopt);

    const auto out = slcc::levelwise_slcc(table);
    CHECK(out.per_level.at(IntensityLevel::lv1).value() == doctest::Approx(1.0));
    CHECK(out.per_level.at(IntensityLevel::lv2).value() == doctest::Approx(-1.0));
    CHECK(out.per_level.count(IntensityLevel::lv3) == 0);
    CHECK(out.overall == slcc::slcc(table).aggregate());
}

TEST_CASE("levelwise_slcc marks single-clip levels undefined without failing others") {
    slcc::IntensityTable table;
    table.per_clip["a"] = {-1.0, -1.0};
    table.per_clip["b"] = {1.0, 1.0};
    table.per_clip["c"] = {0.5, 0.5};
    table.levels["a"] = IntensityLevel::lv1;
    table.levels["b"] = IntensityLevel::lv1;
    table.levels["c"] = IntensityLevel::lv3;

    const auto out = slcc::levelwise_slcc(table);
    CHECK(out.per_level.at(IntensityLevel::lv1).has_value());
    CHECK_FALSE(out.per_level.at(IntensityLevel::lv3).has_value());
}

TEST_CASE("all clips at one level reproduce the overall value") {
    slcc::IntensityTable table;
    table.per_clip["a"] = {-1.0, -0.9};
    table.per_clip["b"] = {0.2, 0.1};
    table.per_clip["c"] = {1.0, 1.2};
    for (const auto& [id, pair] : table.per_clip) table.levels[id] = IntensityLevel::lv1;

    const auto out = slcc::levelwise_slcc(table);
    CHECK(out.per_level.at(IntensityLevel::lv1).value() == doctest::Approx(out.overall));
}

TEST_CASE("slcc_delta reproduces the published differences") {
    CHECK(slcc::slcc_delta(0.26, 0.34) == doctest::Approx(0.08).epsilon(1e-12));
    CHECK(slcc::slcc_delta(0.35, 0.34) == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(slcc::slcc_delta(0.5, 0.5) == 0.0);
    CHECK_THROWS_AS(slcc::slcc_delta(std::nan(""), 0.0), ConfigError);
}

TEST_CASE("r_SL is invariant under per-identity affine rescaling of raw values") {
    std::mt19937 rng(73);
    std::map<std::string, double> raw;
    std::map<std::string, std::string> groups;
    std::map<std::string, double> li_column;
    for (int i = 0; i < 40; ++i) {
        const std::string id = "clip" + std::to_string(i);
        raw[id] = 0.1 + 0.01 * static_cast<double>(rng() % 100);
        groups[id] = "id" + std::to_string(i % 4);
        li_column[id] = testutil::random_series(rng, 1)[0];
    }

    auto table_for = [&](const std::map<std::string, double>& values) {
        const auto z = signal::z_normalize_by_group(values, groups);
        slcc::IntensityTable table;
        for (const auto& [id, si] : z.values) table.per_clip[id] = {si, li_column[id]};
        return table;
    };

    const double base = slcc::slcc(table_for(raw)).aggregate();

    // Per-identity gain and offset (positive gain) must not change r_SL.
    std::map<std::string, double> rescaled;
    for (const auto& [id, v] : raw) {
        const double gain = 1.0 + static_cast<double>(groups[id].back() - '0');
        rescaled[id] = gain * v + 0.05 * gain;
    }
    CHECK(slcc::slcc(table_for(rescaled)).aggregate() == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("slcc output is permutation-invariant in clip order") {
    // The table is a sorted map, so any insertion order yields identical
    // iteration; verify end to end anyway.
    slcc::IntensityTable forward, backward;
    std::mt19937 rng(79);
    std::vector<std::pair<std::string, std::pair<double, double>>> rows;
    for (int i = 0; i < 20; ++i) {
        rows.push_back({"clip" + std::to_string(i),
                        {testutil::random_series(rng, 1)[0], testutil::random_series(rng, 1)[0]}});
    }
    for (const auto& row : rows) forward.per_clip.insert(row);
    for (auto it = rows.rbegin(); it != rows.rend(); ++it) backward.per_clip.insert(*it);

    CHECK(slcc::slcc(forward).aggregate() == slcc::slcc(backward).aggregate());
}
