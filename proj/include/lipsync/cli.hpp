#ifndef LIPSYNC_CLI_HPP
#define LIPSYNC_CLI_HPP

// Command-line front end: manifest-driven evaluation (mtm, slcc, plrs,
// lve, loss), fixture generation (synth), report merging (report), and the
// MTM-vs-offset sweep with an SVG plot. Exit codes: 0 success, 2
// configuration/schema errors, 3 data errors.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lipsync/core.hpp"
#include "lipsync/errors.hpp"
#include "lipsync/io.hpp"
#include "lipsync/loss.hpp"
#include "lipsync/mtm.hpp"
#include "lipsync/parallel.hpp"
#include "lipsync/readability.hpp"
#include "lipsync/slcc.hpp"
#include "lipsync/synth.hpp"

namespace lipsync::cli {

namespace detail {

using lipsync::detail::format_real;

inline std::size_t default_jobs() {
    if (const char* env = std::getenv("LIPSYNC_EVAL_JOBS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<std::size_t>(v);
    }
    return 1;
}

// "A..B" -> [A, B], inclusive.
inline std::pair<int, int> parse_offset_range(const std::string& text) {
    const auto sep = text.find("..");
    if (sep == std::string::npos) {
        throw ConfigError("offset sweep must look like \"0..10\", got \"" + text + "\"");
    }
    try {
        const int lo = std::stoi(text.substr(0, sep));
        const int hi = std::stoi(text.substr(sep + 2));
        if (hi < lo) throw ConfigError("offset sweep range is empty: \"" + text + "\"");
        return {lo, hi};
    } catch (const std::invalid_argument&) {
        throw ConfigError("offset sweep must look like \"0..10\", got \"" + text + "\"");
    } catch (const std::out_of_range&) {
        throw ConfigError("offset sweep bounds out of range: \"" + text + "\"");
    }
}

inline io::ReportFormat parse_format(const std::string& name) {
    if (name == "json") return io::ReportFormat::json;
    if (name == "csv") return io::ReportFormat::csv;
    throw ConfigError("unknown report format \"" + name + "\"");
}

// Static SVG with one point per sweep offset and the numeric table embedded
// in a comment for machine consumption.
inline std::string render_sweep_svg(const std::vector<int>& offsets,
                                    const std::vector<double>& values) {
    const double width = 640.0, height = 420.0, margin = 60.0;
    double vmax = 1.0;
    for (double v : values) vmax = std::max(vmax, v);
    vmax *= 1.1;
    const double xmin = static_cast<double>(offsets.front());
    const double xmax = static_cast<double>(offsets.back());
    const double xspan = xmax > xmin ? xmax - xmin : 1.0;

    auto px = [&](double offset) {
        return margin + (offset - xmin) / xspan * (width - 2.0 * margin);
    };
    auto py = [&](double value) {
        return height - margin - value / vmax * (height - 2.0 * margin);
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" "
           "viewBox=\"0 0 640 420\">\n";
    svg += "<!-- offset_frames,mtm_ms\n";
    for (std::size_t k = 0; k < offsets.size(); ++k) {
        svg += std::to_string(offsets[k]) + "," + format_real(values[k]) + "\n";
    }
    svg += "-->\n";
    svg += "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                  margin, height - margin, width - margin, height - margin);
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                  margin, margin, margin, height - margin);
    svg += buf;
    svg += "<text x=\"320\" y=\"408\" text-anchor=\"middle\" font-size=\"14\">temporal offset "
           "(frames)</text>\n";
    svg += "<text x=\"16\" y=\"210\" text-anchor=\"middle\" font-size=\"14\" "
           "transform=\"rotate(-90 16 210)\">MTM (ms)</text>\n";

    std::string polyline = "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" "
                           "points=\"";
    for (std::size_t k = 0; k < offsets.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px(offsets[k]), py(values[k]));
        polyline += buf;
    }
    polyline += "\"/>\n";
    svg += polyline;

    for (std::size_t k = 0; k < offsets.size(); ++k) {
        std::snprintf(buf, sizeof(buf),
                      "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3.5\" fill=\"#1f77b4\"/>\n",
                      px(offsets[k]), py(values[k]));
        svg += buf;
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%.2f\" y=\"%.1f\" text-anchor=\"middle\" "
                      "font-size=\"11\">%d</text>\n",
                      px(offsets[k]), height - margin + 16.0, offsets[k]);
        svg += buf;
    }
    svg += "</svg>\n";
    return svg;
}

struct LoadedPair {
    std::string clip_id;
    MeshSequence gt;
    MeshSequence pred;
    LandmarkSpec landmarks;
};

// Pairs gt and pred manifests by clip_id (every gt clip must exist in pred)
// and loads both meshes, in parallel across clips.
inline std::vector<LoadedPair> load_mesh_pairs(const io::Manifest& gt, const io::Manifest& pred,
                                               std::size_t jobs) {
    std::map<std::string, const ClipRecord*> pred_by_id;
    for (const auto& clip : pred.clips) pred_by_id[clip.clip_id] = &clip;

    std::vector<std::optional<LoadedPair>> slots(gt.clips.size());
    parallel_for(gt.clips.size(), jobs, [&](std::size_t k) {
        const auto& record = gt.clips[k];
        const auto it = pred_by_id.find(record.clip_id);
        if (it == pred_by_id.end()) {
            throw ConfigError("clip \"" + record.clip_id + "\" missing from --pred manifest");
        }
        slots[k] = LoadedPair{record.clip_id, io::read_mesh(record.mesh_path),
                              io::read_mesh(it->second->mesh_path), record.landmarks};
    });

    std::vector<LoadedPair> out;
    out.reserve(slots.size());
    for (auto& slot : slots) out.push_back(std::move(*slot));
    return out;
}

inline void write_report_file(const MetricReport& report, const std::string& out_path,
                              io::ReportFormat format) {
    io::write_report(report, out_path, format);
}

// ------------------------------------------------------------ subcommands --

struct MtmOptions {
    std::string gt_manifest;
    std::string pred_manifest;
    std::string sweep;
    std::string plot_path;
    std::string out_path;
    std::string format = "json";
    double sigma = 1.0;
    std::size_t jobs = 1;
};

inline int run_mtm(const MtmOptions& opt) {
    const auto gt = io::read_manifest(opt.gt_manifest);

    if (!opt.sweep.empty()) {
        // Offset sweep: the prediction is the ground truth re-timed by k
        // frames, reproducing the physical-accuracy curve on any corpus.
        if (opt.out_path.empty() && opt.plot_path.empty()) {
            throw ConfigError("mtm sweep needs --out or --plot");
        }
        const auto [lo, hi] = parse_offset_range(opt.sweep);
        std::vector<std::optional<MeshSequence>> meshes(gt.clips.size());
        parallel_for(gt.clips.size(), opt.jobs, [&](std::size_t k) {
            meshes[k] = io::read_mesh(gt.clips[k].mesh_path);
        });

        std::vector<int> offsets;
        std::vector<double> values;
        std::map<std::string, double> per_offset;
        for (int offset = lo; offset <= hi; ++offset) {
            std::vector<mtm::MtmClipInput> clips;
            clips.reserve(gt.clips.size());
            for (std::size_t k = 0; k < gt.clips.size(); ++k) {
                clips.push_back({gt.clips[k].clip_id, *meshes[k],
                                 synth::shift_frames(*meshes[k], offset),
                                 gt.clips[k].landmarks});
            }
            const auto report = mtm::corpus_mtm(clips, opt.sigma, opt.jobs);
            offsets.push_back(offset);
            values.push_back(report.aggregate());
            char key[24];
            std::snprintf(key, sizeof(key), "offset_%03d", offset);
            per_offset[key] = report.aggregate();
        }

        auto report = MetricReport::mean_of(
            "mtm_sweep", "ms", per_offset,
            {{"subcommand", "mtm"},
             {"gt", opt.gt_manifest},
             {"sweep_offsets", opt.sweep},
             {"sigma", format_real(opt.sigma)}});
        if (!opt.out_path.empty()) {
            write_report_file(report, opt.out_path, parse_format(opt.format));
        }
        if (!opt.plot_path.empty()) {
            io::detail::write_file_atomic(opt.plot_path, render_sweep_svg(offsets, values));
        }
        return 0;
    }

    if (opt.pred_manifest.empty()) {
        throw ConfigError("mtm needs --pred or --sweep-offsets");
    }
    if (opt.out_path.empty()) throw ConfigError("mtm needs --out");
    const auto pred = io::read_manifest(opt.pred_manifest);
    const auto pairs = load_mesh_pairs(gt, pred, opt.jobs);
    std::vector<mtm::MtmClipInput> clips;
    clips.reserve(pairs.size());
    for (const auto& p : pairs) clips.push_back({p.clip_id, p.gt, p.pred, p.landmarks});

    const auto report = mtm::corpus_mtm(clips, opt.sigma, opt.jobs)
                            .with_parameters({{"subcommand", "mtm"},
                                              {"gt", opt.gt_manifest},
                                              {"pred", opt.pred_manifest}});
    write_report_file(report, opt.out_path, parse_format(opt.format));
    return 0;
}

struct SlccOptions {
    std::string manifest_path;
    std::string out_path;
    std::string format = "json";
    bool eye_normalize = false;
    bool levelwise = false;
    std::optional<double> reference;
    std::size_t jobs = 1;
};

inline int run_slcc(const SlccOptions& opt) {
    const auto manifest = io::read_manifest(opt.manifest_path);
    if (manifest.clips.empty()) throw ConfigError("manifest lists no clips");

    struct Loaded {
        std::optional<AudioClip> audio;
        std::optional<MeshSequence> mesh;
    };
    std::vector<Loaded> loaded(manifest.clips.size());
    parallel_for(manifest.clips.size(), opt.jobs, [&](std::size_t k) {
        const auto& record = manifest.clips[k];
        if (record.audio_path.empty()) {
            throw ConfigError("clip \"" + record.clip_id + "\" has no audio; slcc needs it");
        }
        loaded[k].audio = io::read_wav(record.audio_path);
        loaded[k].mesh = io::read_mesh(record.mesh_path);
    });

    std::vector<slcc::SpeechClip> speech_clips;
    std::vector<slcc::MeshClip> mesh_clips;
    for (std::size_t k = 0; k < manifest.clips.size(); ++k) {
        const auto& record = manifest.clips[k];
        speech_clips.push_back({record.clip_id, record.identity, &*loaded[k].audio});
        mesh_clips.push_back(
            {record.clip_id, record.identity, &*loaded[k].mesh, &record.landmarks});
    }

    const auto si = slcc::speech_intensity(speech_clips);
    const auto li = slcc::lip_intensity(mesh_clips, opt.eye_normalize);

    slcc::IntensityTable table;
    for (const auto& record : manifest.clips) {
        table.per_clip[record.clip_id] = {si.values.at(record.clip_id),
                                          li.values.at(record.clip_id)};
        table.levels[record.clip_id] = record.intensity_level;
    }
    table.warnings = si.warnings;
    table.warnings.insert(table.warnings.end(), li.warnings.begin(), li.warnings.end());

    std::map<std::string, std::string> parameters{
        {"subcommand", "slcc"},
        {"manifest", opt.manifest_path},
        {"eye_normalize", opt.eye_normalize ? "true" : "false"},
    };
    if (opt.levelwise) {
        const auto levels = slcc::levelwise_slcc(table);
        for (const auto& [level, value] : levels.per_level) {
            parameters["slcc_" + to_string(level)] =
                value ? format_real(*value) : "undefined";
        }
    }
    auto report = slcc::slcc(table, parameters);
    if (opt.reference) {
        report = report.with_parameters(
            {{"reference", format_real(*opt.reference)},
             {"delta", format_real(slcc::slcc_delta(report.aggregate(), *opt.reference))}});
    }
    write_report_file(report, opt.out_path, parse_format(opt.format));
    return 0;
}

struct PlrsOptions {
    std::string manifest_path;
    std::string out_path;
    std::string format = "json";
    std::optional<std::uint32_t> layer;
    std::size_t jobs = 1;
};

inline int run_plrs(const PlrsOptions& opt) {
    const auto manifest = io::read_manifest(opt.manifest_path);
    if (manifest.clips.empty()) throw ConfigError("manifest lists no clips");

    std::vector<std::optional<double>> scores(manifest.clips.size());
    parallel_for(manifest.clips.size(), opt.jobs, [&](std::size_t k) {
        const auto& record = manifest.clips[k];
        if (record.embedding_path.empty()) {
            throw ConfigError("clip \"" + record.clip_id + "\" has no embeddings; plrs needs them");
        }
        const auto emb = io::read_embeddings(record.embedding_path);
        // Default to the last listed layer when none is requested.
        const std::uint32_t layer = opt.layer ? *opt.layer : emb.layer_ids().back();
        scores[k] = readability::plrs(emb, layer).aggregate();
    });

    std::map<std::string, double> per_clip;
    for (std::size_t k = 0; k < manifest.clips.size(); ++k) {
        per_clip[manifest.clips[k].clip_id] = *scores[k];
    }
    const auto report = MetricReport::mean_of(
        "plrs", "cosine", per_clip,
        {{"subcommand", "plrs"},
         {"manifest", opt.manifest_path},
         {"layer", opt.layer ? std::to_string(*opt.layer) : std::string("last")}});
    write_report_file(report, opt.out_path, parse_format(opt.format));
    return 0;
}

struct LveOptions {
    std::string gt_manifest;
    std::string pred_manifest;
    std::string out_path;
    std::string format = "json";
    std::string mode = "max";
    std::size_t jobs = 1;
};

inline int run_lve(const LveOptions& opt) {
    const readability::LveMode mode = [&] {
        if (opt.mode == "max") return readability::LveMode::max_vertex;
        if (opt.mode == "mean") return readability::LveMode::mean_vertex;
        throw ConfigError("unknown lve mode \"" + opt.mode + "\"");
    }();

    const auto gt = io::read_manifest(opt.gt_manifest);
    const auto pred = io::read_manifest(opt.pred_manifest);
    const auto pairs = load_mesh_pairs(gt, pred, opt.jobs);

    std::vector<double> values(pairs.size());
    parallel_for(pairs.size(), opt.jobs, [&](std::size_t k) {
        values[k] = readability::lve(pairs[k].gt, pairs[k].pred, pairs[k].landmarks, mode);
    });

    std::map<std::string, double> per_clip;
    for (std::size_t k = 0; k < pairs.size(); ++k) per_clip[pairs[k].clip_id] = values[k];
    const auto report = MetricReport::mean_of("lve", "mesh_units", per_clip,
                                              {{"subcommand", "lve"},
                                               {"gt", opt.gt_manifest},
                                               {"pred", opt.pred_manifest},
                                               {"mode", opt.mode}});
    write_report_file(report, opt.out_path, parse_format(opt.format));
    return 0;
}

struct LossOptions {
    std::string embeddings_path;
    std::string out_path;
    std::string format = "json";
    double tau = 0.07;
    double lambda = 1.0;
    double weight = 1e-7;
    std::string similarity = "cosine";
    std::optional<double> mae;
};

inline int run_loss(const LossOptions& opt) {
    const loss::Similarity sim = [&] {
        if (opt.similarity == "cosine") return loss::Similarity::cosine;
        if (opt.similarity == "dot") return loss::Similarity::dot;
        throw ConfigError("unknown similarity \"" + opt.similarity + "\"");
    }();
    const LossConfig config(opt.tau, opt.lambda, opt.weight);

    const auto emb = io::read_embeddings(opt.embeddings_path);
    std::map<std::uint32_t, loss::EmbeddingBatch> batches;
    for (std::size_t l = 0; l < emb.layer_ids().size(); ++l) {
        std::vector<double> anchor, counterpart;
        anchor.reserve(emb.windows() * emb.dim());
        counterpart.reserve(emb.windows() * emb.dim());
        for (std::size_t g = 0; g < emb.windows(); ++g) {
            const auto s = emb.speech(l, g);
            const auto m = emb.mesh(l, g);
            anchor.insert(anchor.end(), s.begin(), s.end());
            counterpart.insert(counterpart.end(), m.begin(), m.end());
        }
        batches.emplace(emb.layer_ids()[l],
                        loss::EmbeddingBatch(emb.windows(), emb.dim(), std::move(anchor),
                                             std::move(counterpart)));
    }

    std::map<std::string, double> per_layer;
    for (const auto& [layer, batch] : batches) {
        char key[24];
        std::snprintf(key, sizeof(key), "layer_%03u", layer);
        per_layer[key] = loss::info_nce(batch, config.temperature, sim) +
                         loss::info_nce(batch.swapped(), config.temperature, sim);
    }
    const double symmetric = loss::symmetric_contrastive(batches, config.temperature, sim);
    const double perceptual =
        loss::perceptual_loss(batches, config.temperature, config.lambda_perceptual, sim);

    std::map<std::string, std::string> parameters{
        {"subcommand", "loss"},
        {"embeddings", opt.embeddings_path},
        {"tau", format_real(config.temperature)},
        {"lambda", format_real(config.lambda_contrastive)},
        {"weight", format_real(config.lambda_perceptual)},
        {"similarity", opt.similarity},
        {"symmetric_contrastive", format_real(symmetric)},
        {"perceptual_loss", format_real(perceptual)},
    };
    if (opt.mae) {
        parameters["mae"] = format_real(*opt.mae);
        parameters["total_stage1"] = format_real(
            loss::total_stage1_loss(*opt.mae, symmetric, config.lambda_contrastive));
    }

    const auto report =
        MetricReport::mean_of("loss", "nats", per_layer, std::move(parameters));
    write_report_file(report, opt.out_path, parse_format(opt.format));
    return 0;
}

struct SynthOptions {
    std::string out_dir;
    std::size_t clips = 6;
    std::size_t identities = 2;
    std::uint64_t seed = 1;
    double duration_s = 3.0;
    double fps = 25.0;
    double mouth_hz = 2.0;
    double amplitude = 0.01;
    double noise_sigma = 0.0;
    int offset = 0;
    std::size_t embed_dim = 16;
    std::size_t window = 5;
    std::size_t stride = 5;
};

// Writes a self-contained fixture corpus: per clip a MSH1 mesh, a WAV tone,
// an EMB1 embedding set from the test featurizer, plus one manifest.json.
// Intensity levels cycle Lv1/Lv2/Lv3 with gains 0.7/1.0/1.4, so the corpus
// exercises level-wise SLCC out of the box.
inline int run_synth(const SynthOptions& opt) {
    if (opt.out_dir.empty()) throw ConfigError("synth needs --out-dir");
    if (opt.clips == 0) throw ConfigError("synth needs --clips >= 1");
    if (opt.identities == 0) throw ConfigError("synth needs --identities >= 1");
    std::filesystem::create_directories(opt.out_dir);
    const std::filesystem::path dir(opt.out_dir);

    static constexpr double kLevelGains[3] = {0.7, 1.0, 1.4};
    static constexpr IntensityLevel kLevels[3] = {IntensityLevel::lv1, IntensityLevel::lv2,
                                                  IntensityLevel::lv3};

    nlohmann::json clips_json = nlohmann::json::array();
    for (std::size_t c = 0; c < opt.clips; ++c) {
        synth::SynthSpec spec;
        spec.duration_s = opt.duration_s;
        spec.fps = opt.fps;
        spec.mouth_hz = opt.mouth_hz;
        spec.amplitude = opt.amplitude;
        spec.noise_sigma = opt.noise_sigma;
        spec.offset_frames = opt.offset;
        spec.intensity_gain = kLevelGains[c % 3];
        spec.seed = opt.seed + c;

        const auto clip = synth::make_clip(spec);
        char name[32];
        std::snprintf(name, sizeof(name), "clip_%04zu", c);

        io::write_mesh(clip.mesh, dir / (std::string(name) + ".msh1"));
        io::write_wav(clip.audio, dir / (std::string(name) + ".wav"));
        const auto emb = synth::test_featurizer(
            clip.audio, clip.mesh, {opt.window, opt.stride}, opt.embed_dim, opt.seed);
        io::write_embeddings(emb, dir / (std::string(name) + ".emb1"));

        nlohmann::json cj;
        cj["clip_id"] = name;
        cj["identity"] = "id" + std::to_string(c % opt.identities);
        cj["intensity_level"] = to_string(kLevels[c % 3]);
        cj["mesh"] = std::string(name) + ".msh1";
        cj["audio"] = std::string(name) + ".wav";
        cj["embeddings"] = std::string(name) + ".emb1";
        clips_json.push_back(cj);
    }

    const auto lm = synth::synthetic_landmarks();
    nlohmann::json manifest;
    manifest["version"] = 1;
    manifest["default_landmarks"] = {
        {"upper_lip_center", lm.upper_lip_center()},
        {"lower_lip_center", lm.lower_lip_center()},
        {"lip_region", lm.lip_region()},
        {"left_eye", *lm.left_eye()},
        {"right_eye", *lm.right_eye()},
    };
    manifest["clips"] = clips_json;
    io::detail::write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
    return 0;
}

struct ReportOptions {
    std::string out_path;
    std::vector<std::string> inputs;
};

// Merges metric report JSONs into one document keyed by metric name. The
// original number formatting is preserved by splicing the input documents
// verbatim.
inline int run_report(const ReportOptions& opt) {
    if (opt.inputs.empty()) throw ConfigError("report needs at least one input");
    std::map<std::string, std::string> by_metric;
    for (const auto& input : opt.inputs) {
        const auto bytes = io::detail::read_file_bytes(input);
        const std::string text(bytes.begin(), bytes.end());
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw SchemaError(input + ": " + e.what());
        }
        if (!doc.is_object() || !doc.contains("metric")) {
            throw SchemaError(input + ": not a metric report (no \"metric\" key)");
        }
        const std::string metric = doc.at("metric").get<std::string>();
        if (by_metric.count(metric)) {
            throw SchemaError("duplicate metric \"" + metric + "\" across inputs");
        }
        by_metric[metric] = text;
    }

    std::string merged = "{\n";
    bool first = true;
    for (const auto& [metric, text] : by_metric) {
        if (!first) merged += ",\n";
        merged += "\"" + io::detail::json_escape(metric) + "\": " + text;
        first = false;
    }
    merged += "\n}";
    io::detail::write_file_atomic(opt.out_path, merged);
    return 0;
}

} // namespace detail

// Parses argv and dispatches. Returns the process exit code; diagnostics go
// to stderr.
inline int run(int argc, const char* const* argv) {
    CLI::App app{"Lip-sync evaluation toolkit: temporal misalignment (mtm), intensity "
                 "correlation (slcc), readability (plrs, lve), contrastive losses (loss), "
                 "fixture generation (synth), and report merging (report)."};
    app.require_subcommand(1);

    const std::size_t jobs_default = detail::default_jobs();

    detail::MtmOptions mtm_opt;
    mtm_opt.jobs = jobs_default;
    auto* mtm_cmd = app.add_subcommand("mtm", "Mean temporal misalignment (ms)");
    mtm_cmd->add_option("--gt", mtm_opt.gt_manifest, "Ground-truth manifest")->required();
    mtm_cmd->add_option("--pred", mtm_opt.pred_manifest, "Predicted manifest");
    mtm_cmd->add_option("--sweep-offsets", mtm_opt.sweep,
                        "Offset sweep \"A..B\"; prediction = gt re-timed by each offset");
    mtm_cmd->add_option("--plot", mtm_opt.plot_path, "SVG plot path (sweep mode)");
    mtm_cmd->add_option("--out", mtm_opt.out_path, "Report path");
    mtm_cmd->add_option("--format", mtm_opt.format, "json or csv");
    mtm_cmd->add_option("--sigma", mtm_opt.sigma, "Gaussian smoothing width in frames");
    mtm_cmd->add_option("--jobs", mtm_opt.jobs, "Worker count");

    detail::SlccOptions slcc_opt;
    slcc_opt.jobs = jobs_default;
    auto* slcc_cmd = app.add_subcommand("slcc", "Speech-lip intensity correlation");
    slcc_cmd->add_option("--manifest", slcc_opt.manifest_path, "Corpus manifest")->required();
    slcc_cmd->add_option("--out", slcc_opt.out_path, "Report path")->required();
    slcc_cmd->add_option("--format", slcc_opt.format, "json or csv");
    slcc_cmd->add_flag("--eye-normalize", slcc_opt.eye_normalize,
                       "Normalize lip displacement by inter-ocular distance");
    slcc_cmd->add_flag("--levelwise", slcc_opt.levelwise, "Also report per intensity level");
    slcc_cmd->add_option("--reference", slcc_opt.reference,
                         "Reference r_SL; adds |model - reference| to the report");
    slcc_cmd->add_option("--jobs", slcc_opt.jobs, "Worker count");

    detail::PlrsOptions plrs_opt;
    plrs_opt.jobs = jobs_default;
    auto* plrs_cmd = app.add_subcommand("plrs", "Perceptual lip readability score");
    plrs_cmd->add_option("--manifest", plrs_opt.manifest_path, "Corpus manifest")->required();
    plrs_cmd->add_option("--out", plrs_opt.out_path, "Report path")->required();
    plrs_cmd->add_option("--format", plrs_opt.format, "json or csv");
    plrs_cmd->add_option("--layer", plrs_opt.layer, "Embedding layer id (default: last listed)");
    plrs_cmd->add_option("--jobs", plrs_opt.jobs, "Worker count");

    detail::LveOptions lve_opt;
    lve_opt.jobs = jobs_default;
    auto* lve_cmd = app.add_subcommand("lve", "Lip vertex error (mesh units)");
    lve_cmd->add_option("--gt", lve_opt.gt_manifest, "Ground-truth manifest")->required();
    lve_cmd->add_option("--pred", lve_opt.pred_manifest, "Predicted manifest")->required();
    lve_cmd->add_option("--out", lve_opt.out_path, "Report path")->required();
    lve_cmd->add_option("--format", lve_opt.format, "json or csv");
    lve_cmd->add_option("--lve-mode", lve_opt.mode, "max (per-frame max) or mean");
    lve_cmd->add_option("--jobs", lve_opt.jobs, "Worker count");

    detail::LossOptions loss_opt;
    auto* loss_cmd = app.add_subcommand("loss", "Contrastive losses over an EMB1 file");
    loss_cmd->add_option("--embeddings", loss_opt.embeddings_path, "EMB1 file")->required();
    loss_cmd->add_option("--out", loss_opt.out_path, "Report path")->required();
    loss_cmd->add_option("--format", loss_opt.format, "json or csv");
    loss_cmd->add_option("--tau", loss_opt.tau, "InfoNCE temperature");
    loss_cmd->add_option("--lambda", loss_opt.lambda, "Contrastive weight in the total loss");
    loss_cmd->add_option("--weight", loss_opt.weight, "Perceptual loss weight");
    loss_cmd->add_option("--similarity", loss_opt.similarity, "cosine or dot");
    loss_cmd->add_option("--mae", loss_opt.mae,
                         "Reconstruction loss value; adds the total stage-1 loss");

    detail::SynthOptions synth_opt;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic fixture corpus");
    synth_cmd->add_option("--out-dir", synth_opt.out_dir, "Output directory")->required();
    synth_cmd->add_option("--clips", synth_opt.clips, "Clip count");
    synth_cmd->add_option("--identities", synth_opt.identities, "Identity count");
    synth_cmd->add_option("--seed", synth_opt.seed, "Base seed");
    synth_cmd->add_option("--duration", synth_opt.duration_s, "Clip duration (s)");
    synth_cmd->add_option("--fps", synth_opt.fps, "Mesh frame rate");
    synth_cmd->add_option("--mouth-hz", synth_opt.mouth_hz, "Open/close cycles per second");
    synth_cmd->add_option("--amplitude", synth_opt.amplitude, "Aperture amplitude (mesh units)");
    synth_cmd->add_option("--noise", synth_opt.noise_sigma, "Aperture noise sigma");
    synth_cmd->add_option("--offset", synth_opt.offset,
                          "Mesh delay vs audio, in frames (edge-hold)");
    synth_cmd->add_option("--embed-dim", synth_opt.embed_dim, "Featurizer embedding dim");
    synth_cmd->add_option("--window", synth_opt.window, "Featurizer window frames");
    synth_cmd->add_option("--stride", synth_opt.stride, "Featurizer window stride");

    detail::ReportOptions report_opt;
    auto* report_cmd = app.add_subcommand("report", "Merge metric reports into one document");
    report_cmd->add_option("--out", report_opt.out_path, "Merged report path")->required();
    report_cmd->add_option("inputs", report_opt.inputs, "Report JSON files")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n" << app.help() << "\n";
        return 2;
    }

    try {
        if (mtm_cmd->parsed()) return detail::run_mtm(mtm_opt);
        if (slcc_cmd->parsed()) return detail::run_slcc(slcc_opt);
        if (plrs_cmd->parsed()) return detail::run_plrs(plrs_opt);
        if (lve_cmd->parsed()) return detail::run_lve(lve_opt);
        if (loss_cmd->parsed()) return detail::run_loss(loss_opt);
        if (synth_cmd->parsed()) return detail::run_synth(synth_opt);
        if (report_cmd->parsed()) return detail::run_report(report_opt);
        std::cerr << app.help() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.category() == ErrorCategory::config ? 2 : 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}

// Convenience overload for in-process tests.
inline int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

} // namespace lipsync::cli

#endif
