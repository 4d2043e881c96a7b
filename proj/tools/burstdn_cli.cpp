// burstdn command line: burst synthesis, alignment, denoising and the
// supporting measurement commands. File outputs are deterministic for a
// fixed seed and config; wall-clock timings go to stdout only.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "burstdn/align.hpp"
#include "burstdn/config.hpp"
#include "burstdn/metrics.hpp"
#include "burstdn/pgm_io.hpp"
#include "burstdn/pipeline.hpp"
#include "burstdn/synth.hpp"
#include "burstdn/vst.hpp"

namespace fs = std::filesystem;
using namespace burstdn;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

PipelineConfig config_or_default(const std::string& path) {
    if (path.empty())
        return PipelineConfig{};
    return load_pipeline_config(path);
}

// Plain PGM (no sidecar): values normalized by maxval.
ImagePlane load_plain_pgm(const std::string& path) {
    const PgmImage img = load_pgm(path);
    ImagePlane out(img.width, img.height, Domain::RawLinear);
    const float inv = 1.0f / static_cast<float>(img.maxval);
    for (size_t i = 0; i < out.size(); ++i)
        out.samples[i] = img.samples[i] * inv;
    return out;
}

void write_alignment_diag(const std::string& path, const AlignDiagnostics& diag) {
    std::ofstream out(path);
    out << "# alignment diagnostics\n";
    out << "levels " << diag.levels << "\n";
    out << "tile_size " << diag.tile_size << "\n";
    const int first_tile_level = diag.levels >= 3 ? diag.levels - 3 : 0;
    for (size_t a = 0; a < diag.alternates.size(); ++a) {
        const auto& d = diag.alternates[a];
        out << "alternate " << a << "\n";
        out << "homography level=" << diag.levels - 1 << " fallback=" << d.global_fallback;
        for (double v : d.global.m)
            out << " " << fmt(v);
        out << "\n";
        if (d.has_blocks) {
            for (int b = 0; b < 4; ++b) {
                out << "homography level=" << diag.levels - 2 << " block=" << b
                    << " fallback=" << d.block_fallback[b];
                for (double v : d.blocks[b].m)
                    out << " " << fmt(v);
                out << "\n";
            }
        }
        for (size_t f = 0; f < d.flows.size(); ++f) {
            const TileFlow& flow = d.flows[f];
            out << "flow level=" << first_tile_level - static_cast<int>(f)
                << " tile=" << flow.tile_size << " grid=" << flow.grid_w << "x" << flow.grid_h
                << "\n";
            for (int ty = 0; ty < flow.grid_h; ++ty) {
                for (int tx = 0; tx < flow.grid_w; ++tx) {
                    if (tx) out << " ";
                    out << flow.at(tx, ty)[0] << " " << flow.at(tx, ty)[1];
                }
                out << "\n";
            }
        }
    }
}

void write_metrics_csv(const std::string& path, const std::string& frame_id,
                       const MetricReport& r) {
    std::ofstream out(path);
    out << "frame_id,psnr_db,ssim,l1,grad_l1,combined\n";
    out << frame_id << "," << fmt(r.psnr_db) << "," << fmt(r.ssim) << "," << fmt(r.l1) << ","
        << fmt(r.grad_l1) << "," << fmt(r.combined_loss) << "\n";
}

void print_timings(const PipelineDiagnostics& diag) {
    for (const auto& t : diag.timings)
        std::printf("timing %-12s %8.2f ms\n", t.name.c_str(), t.ms);
}

int fallback_count(const AlignDiagnostics& diag) {
    int n = 0;
    for (const auto& d : diag.alternates) {
        n += d.global_fallback ? 1 : 0;
        for (bool b : d.block_fallback)
            n += b ? 1 : 0;
    }
    return n;
}

struct ProfileRequest {
    std::string name;
    ProfileTransform kind;
};

std::vector<ProfileRequest> parse_kinds(const std::string& csv) {
    std::vector<ProfileRequest> out;
    std::string token;
    std::stringstream ss(csv);
    while (std::getline(ss, token, ',')) {
        if (token == "ft" || token == "freeman_tukey")
            out.push_back({"freeman_tukey", ProfileTransform::FreemanTukey});
        else if (token == "gat")
            out.push_back({"gat", ProfileTransform::Gat});
        else if (token == "ksigma" || token == "k_sigma")
            out.push_back({"k_sigma", ProfileTransform::KSigma});
        else if (token == "identity")
            out.push_back({"identity", ProfileTransform::Identity});
        else if (token == "bartlett")
            out.push_back({"bartlett", ProfileTransform::Bartlett});
        else if (token == "root")
            out.push_back({"root", ProfileTransform::Root});
        else
            throw std::invalid_argument("unknown vst-profile kind '" + token + "'");
    }
    if (out.empty())
        throw std::invalid_argument("vst-profile: no kinds given");
    return out;
}

std::vector<double> parse_doubles(const std::string& csv) {
    std::vector<double> out;
    std::string token;
    std::stringstream ss(csv);
    while (std::getline(ss, token, ','))
        out.push_back(std::stod(token));
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"burst raw denoising pipeline"};
    app.require_subcommand(1);

    // global knobs shared by the subcommands
    uint64_t seed = 1;
    std::string config_path;
    std::string preset = "kpn";
    double gain = 4.0;
    int frames = 8;
    std::string out_dir;
    app.add_option("--seed", seed, "random seed")->capture_default_str();
    app.add_option("--config", config_path, "pipeline config JSON");
    app.add_option("--preset", preset, "noise preset: kpn or crvd")->capture_default_str();
    app.add_option("--gain", gain, "sensor gain within the preset")->capture_default_str();
    app.add_option("--frames", frames, "burst frame count")->capture_default_str();
    app.add_option("--out", out_dir, "output directory or file");
    app.fallthrough();

    // ---- synth
    auto* synth_cmd = app.add_subcommand("synth", "synthesize a noisy burst directory");
    std::string synth_input;
    int synth_size = 512;
    double shift_min = 2.0, shift_max = 16.0, rotation_deg = 0.0;
    double black_level = 16384.0, white_level = 65535.0;
    synth_cmd->add_option("--input", synth_input, "clean PGM (default: procedural texture)");
    synth_cmd->add_option("--size", synth_size, "procedural texture size")->capture_default_str();
    synth_cmd->add_option("--shift-min", shift_min, "")->capture_default_str();
    synth_cmd->add_option("--shift-max", shift_max, "")->capture_default_str();
    synth_cmd->add_option("--rotation-deg", rotation_deg, "max rotation (0 = translation only)")
        ->capture_default_str();
    synth_cmd->add_option("--black-level", black_level, "")->capture_default_str();
    synth_cmd->add_option("--white-level", white_level, "")->capture_default_str();

    // ---- align
    auto* align_cmd = app.add_subcommand("align", "align a burst directory");
    std::string align_burst_dir;
    align_cmd->add_option("--burst", align_burst_dir, "input burst directory")->required();

    // ---- denoise
    auto* denoise_cmd = app.add_subcommand("denoise", "run the full pipeline on a burst");
    std::string denoise_burst_dir;
    denoise_cmd->add_option("--burst", denoise_burst_dir, "input burst directory")->required();

    // ---- vst-profile
    auto* profile_cmd = app.add_subcommand("vst-profile", "Monte-Carlo variance flatness curves");
    std::string kinds_csv = "ft,gat,ksigma";
    std::string means_csv = "0.1,0.2,0.5,1,2,3,5,10,20,50,100";
    double acute_sq = 0.0, gauss_mean = 0.0;
    long n_samples = 1000000;
    profile_cmd
        ->add_option("--kinds", kinds_csv, "comma list: ft,gat,ksigma,identity,bartlett,root")
        ->capture_default_str();
    profile_cmd->add_option("--means", means_csv, "comma list of Poisson means")
        ->capture_default_str();
    profile_cmd->add_option("--acute-sq", acute_sq, "gain-normalized read-noise variance")
        ->capture_default_str();
    profile_cmd->add_option("--gauss-mean", gauss_mean, "")->capture_default_str();
    profile_cmd->add_option("--samples", n_samples, "")->capture_default_str();

    // ---- metrics
    auto* metrics_cmd = app.add_subcommand("metrics", "score one image against another");
    std::string path_a, path_b;
    double metrics_gamma = 1.0 / 2.2;
    metrics_cmd->add_option("--candidate", path_a, "PGM to score")->required();
    metrics_cmd->add_option("--target", path_b, "reference PGM")->required();
    metrics_cmd->add_option("--gamma", metrics_gamma, "")->capture_default_str();

    // ---- bench
    auto* bench_cmd = app.add_subcommand("bench", "synthetic end-to-end experiment");
    int bench_size = 512;
    bench_cmd->add_option("--size", bench_size, "scene size")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth_cmd) {
            if (out_dir.empty())
                throw std::invalid_argument("synth: --out is required");
            ImagePlane clean = synth_input.empty()
                                   ? make_test_texture(synth_size, synth_size, seed)
                                   : load_plain_pgm(synth_input);
            SynthConfig scfg;
            scfg.n_frames = frames;
            scfg.shift_min = shift_min;
            scfg.shift_max = shift_max;
            scfg.motion = rotation_deg > 0.0 ? MotionKind::TranslationPlusRotation
                                             : MotionKind::TranslationOnly;
            scfg.max_rotation_deg = rotation_deg;
            scfg.preset = preset;
            scfg.gain = gain;
            scfg.seed = seed;
            auto res = synth_burst(clean, scfg);

            BurstMeta meta;
            meta.gain = gain;
            meta.black_level = black_level;
            meta.white_level = white_level;
            save_burst(out_dir, res.burst, meta);
            meta.sigma_s = res.burst.params.sigma_s;
            meta.sigma_r = res.burst.params.sigma_r;
            save_pgm((fs::path(out_dir) / "gt.pgm").string(), encode_plane(clean, meta));
            std::ofstream motions(fs::path(out_dir) / "motions.txt");
            motions << "# alt dx dy angle_deg\n";
            for (size_t i = 0; i < res.motions.size(); ++i)
                motions << i << " " << fmt(res.motions[i].dx) << " " << fmt(res.motions[i].dy)
                        << " " << fmt(res.motions[i].angle_deg) << "\n";
            std::printf("wrote %d frames to %s\n", res.burst.frame_count(), out_dir.c_str());
        }

        if (*align_cmd) {
            if (out_dir.empty())
                throw std::invalid_argument("align: --out is required");
            const PipelineConfig cfg = config_or_default(config_path);
            BurstMeta meta;
            Burst raw = load_burst(align_burst_dir, &meta);
            if (raw.alternates.empty())
                throw std::invalid_argument("align: burst has no alternates");

            Burst stabilized;
            stabilized.params = raw.params;
            stabilized.layout = raw.layout;
            stabilized.reference = vst_forward(cfg.vst, raw.reference, raw.params);
            for (const auto& alt : raw.alternates)
                stabilized.alternates.push_back(vst_forward(cfg.vst, alt, raw.params));

            const auto t0 = std::chrono::steady_clock::now();
            AlignResult ar = align_burst(stabilized, cfg.align);
            const auto t1 = std::chrono::steady_clock::now();

            Burst warped = apply_alignment(raw, ar.diag);
            save_burst(out_dir, warped, meta);
            write_alignment_diag((fs::path(out_dir) / "align_diag.txt").string(), ar.diag);
            std::printf("aligned %zu alternates (%d fallbacks) in %.2f ms\n",
                        raw.alternates.size(), fallback_count(ar.diag),
                        std::chrono::duration<double, std::milli>(t1 - t0).count());
        }

        if (*denoise_cmd) {
            if (out_dir.empty())
                throw std::invalid_argument("denoise: --out is required");
            const PipelineConfig cfg = config_or_default(config_path);
            BurstMeta meta;
            Burst raw = load_burst(denoise_burst_dir, &meta);

            std::optional<ImagePlane> gt;
            const fs::path gt_path = fs::path(denoise_burst_dir) / "gt.pgm";
            if (fs::exists(gt_path))
                gt = decode_plane(load_pgm(gt_path.string()), meta);

            PipelineResult res = run_pipeline(raw, cfg, gt ? &*gt : nullptr);

            fs::create_directories(out_dir);
            save_pgm((fs::path(out_dir) / "denoised.pgm").string(),
                     encode_plane(res.denoised, meta));
            if (res.diag.align_ran)
                write_alignment_diag((fs::path(out_dir) / "align_diag.txt").string(),
                                     res.diag.align);
            if (res.report)
                write_metrics_csv((fs::path(out_dir) / "metrics.csv").string(), "denoised",
                                  *res.report);
            print_timings(res.diag);
            if (res.report)
                std::printf("psnr %.2f dB ssim %.4f\n", res.report->psnr_db, res.report->ssim);
        }

        if (*profile_cmd) {
            const auto kinds = parse_kinds(kinds_csv);
            const auto means = parse_doubles(means_csv);
            VstParams vp;
            vp.acute_sigma_sq = acute_sq;
            vp.gauss_mean = gauss_mean;

            std::ostream* os = &std::cout;
            std::ofstream file;
            if (!out_dir.empty()) {
                file.open(out_dir);
                if (!file)
                    throw FormatError(out_dir + ": cannot open for writing");
                os = &file;
            }
            *os << "kind,mean,variance\n";
            for (const auto& req : kinds) {
                auto pts = stabilization_profile(req.kind, vp, means, n_samples, seed);
                for (const auto& pt : pts)
                    *os << req.name << "," << fmt(pt.mean) << "," << fmt(pt.variance) << "\n";
            }
        }

        if (*metrics_cmd) {
            const ImagePlane a = load_plain_pgm(path_a);
            const ImagePlane b = load_plain_pgm(path_b);
            MetricReport r = metric_report(a, b, 1.0, metrics_gamma);
            const std::string frame_id = fs::path(path_a).filename().string();
            if (!out_dir.empty()) {
                write_metrics_csv(out_dir, frame_id, r);
            } else {
                std::printf("frame_id,psnr_db,ssim,l1,grad_l1,combined\n");
                std::printf("%s,%s,%s,%s,%s,%s\n", frame_id.c_str(), fmt(r.psnr_db).c_str(),
                            fmt(r.ssim).c_str(), fmt(r.l1).c_str(), fmt(r.grad_l1).c_str(),
                            fmt(r.combined_loss).c_str());
            }
        }

        if (*bench_cmd) {
            if (out_dir.empty())
                throw std::invalid_argument("bench: --out is required");
            const PipelineConfig cfg = config_or_default(config_path);
            const ImagePlane clean = make_test_texture(bench_size, bench_size, seed);

            SynthConfig scfg;
            scfg.n_frames = frames;
            scfg.preset = preset;
            scfg.gain = gain;
            scfg.seed = seed;
            auto res = synth_burst(clean, scfg);

            PipelineResult multi = run_pipeline(res.burst, cfg, &clean);

            Burst single;
            single.reference = res.burst.reference;
            single.params = res.burst.params;
            PipelineResult one = run_pipeline(single, cfg, &clean);

            const MetricReport noisy =
                metric_report(res.burst.reference, clean, cfg.metrics.peak, cfg.metrics.gamma);

            fs::create_directories(out_dir);
            std::ofstream csv(fs::path(out_dir) / "bench.csv");
            csv << "scenario,psnr_db,ssim,l1,grad_l1,combined\n";
            auto row = [&](const std::string& name, const MetricReport& r) {
                csv << name << "," << fmt(r.psnr_db) << "," << fmt(r.ssim) << "," << fmt(r.l1)
                    << "," << fmt(r.grad_l1) << "," << fmt(r.combined_loss) << "\n";
            };
            row("noisy_ref", noisy);
            row("denoised_n" + std::to_string(frames), *multi.report);
            row("denoised_n1", *one.report);

            print_timings(multi.diag);
            std::printf("noisy %.2f dB -> burst %.2f dB (single frame %.2f dB)\n", noisy.psnr_db,
                        multi.report->psnr_db, one.report->psnr_db);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
