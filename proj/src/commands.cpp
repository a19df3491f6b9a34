#include "persense/commands.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "persense/core.hpp"
#include "persense/metrics.hpp"
#include "persense/persist.hpp"
#include "persense/stats.hpp"
#include "persense/synth.hpp"

#include "CLI11.hpp"

namespace fs = std::filesystem;

namespace persense::commands {

const char* kToolVersion = "persense 0.1.0";

namespace {

std::string image_id_for(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "scene_%03d", index);
    return buf;
}

std::vector<std::string> scene_ids_in(const fs::path& dir, const std::string& marker) {
    std::vector<std::string> ids;
    if (!fs::is_directory(dir)) throw UsageError("not a directory: " + dir.string());
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_directory() && fs::exists(entry.path() / marker))
            ids.push_back(entry.path().filename().string());
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

void write_manifest(const fs::path& out_dir, const std::string& command,
                    std::map<std::string, std::string> extra) {
    extra["command"] = command;
    extra["version"] = kToolVersion;
    persist::write_kv(extra, out_dir / "manifest.txt");
}

int resolve_jobs(int jobs_flag) {
    if (jobs_flag > 0) return jobs_flag;
    if (const char* env = std::getenv("PERSENSE_JOBS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return omp_get_max_threads();
}

double parse_double_or_throw(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw UsageError("malformed value for " + key + ": " + v);
    }
}

int parse_int_or_throw(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        const int x = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw UsageError("malformed value for " + key + ": " + v);
    }
}

}  // namespace

pipeline::PipelineConfig config_from_kv(const std::map<std::string, std::string>& kv) {
    pipeline::PipelineConfig cfg;
    for (const auto& [key, value] : kv) {
        if (key == "variant")
            cfg.variant = pipeline::variant_from_string(value);
        else if (key == "label")
            cfg.label = value;
        else if (key == "seed")
            cfg.seed = std::stoull(value);
        else if (key == "t_bin")
            cfg.idm.t_bin = parse_int_or_throw(value, key);
        else if (key == "frac_split")
            cfg.idm.frac_split = parse_double_or_throw(value, key);
        else if (key == "alpha")
            cfg.idm.alpha = parse_double_or_throw(value, key);
        else if (key == "peak_radius")
            cfg.idm.peak_radius = parse_int_or_throw(value, key);
        else if (key == "dedup_radius")
            cfg.idm.dedup_radius = parse_int_or_throw(value, key);
        else if (key == "k_ppsm")
            cfg.k_ppsm = parse_double_or_throw(value, key);
        else if (key == "count_from_dm")
            cfg.count_from_dm = parse_int_or_throw(value, key) != 0;
        else if (key == "m")
            cfg.m = parse_int_or_throw(value, key);
        else if (key == "t_sam")
            cfg.t_sam = parse_double_or_throw(value, key);
        else if (key == "k_clusters")
            cfg.k_clusters = parse_int_or_throw(value, key);
        else if (key == "w1")
            cfg.weights.w1 = parse_double_or_throw(value, key);
        else if (key == "w2")
            cfg.weights.w2 = parse_double_or_throw(value, key);
        else if (key == "w3")
            cfg.weights.w3 = parse_double_or_throw(value, key);
        else if (key == "w4")
            cfg.weights.w4 = parse_double_or_throw(value, key);
        else if (key == "p_lo")
            cfg.p_lo = parse_double_or_throw(value, key);
        else if (key == "p_hi")
            cfg.p_hi = parse_double_or_throw(value, key);
        else if (key == "iou_min")
            cfg.iou_min = parse_double_or_throw(value, key);
        else if (key == "feedback_iters")
            cfg.feedback_iters = parse_int_or_throw(value, key);
        else if (key == "diversity")
            cfg.diversity_selection = parse_int_or_throw(value, key) != 0;
        else if (key == "hybrid")
            cfg.hybrid_idm = parse_int_or_throw(value, key) != 0;
        else if (key == "imrm")
            cfg.imrm_enabled = parse_int_or_throw(value, key) != 0;
        else
            throw UsageError("unknown config key: " + key);
    }

    if (cfg.idm.t_bin < 0 || cfg.idm.t_bin > 255) throw UsageError("t_bin outside [0,255]");
    if (cfg.idm.frac_split <= 0.0 || cfg.idm.frac_split >= 1.0)
        throw UsageError("frac_split outside (0,1)");
    if (cfg.idm.peak_radius < 1) throw UsageError("peak_radius must be >= 1");
    if (cfg.idm.dedup_radius < 0) throw UsageError("dedup_radius must be >= 0");
    if (cfg.k_ppsm <= 0.0) throw UsageError("k_ppsm must be positive");
    if (cfg.m < 1) throw UsageError("m must be >= 1");
    if (cfg.t_sam < 0.0 || cfg.t_sam > 1.0) throw UsageError("t_sam outside [0,1]");
    if (cfg.k_clusters < 1) throw UsageError("k_clusters must be >= 1");
    if (cfg.iou_min <= 0.0 || cfg.iou_min > 1.0) throw UsageError("iou_min outside (0,1]");
    if (cfg.feedback_iters < 1) throw UsageError("feedback_iters must be >= 1");
    if (!(cfg.p_lo >= 0.0 && cfg.p_lo <= cfg.p_hi && cfg.p_hi <= 100.0))
        throw UsageError("percentile bounds must satisfy 0 <= p_lo <= p_hi <= 100");
    return cfg;
}

std::map<std::string, std::string> kv_from_config(const pipeline::PipelineConfig& cfg) {
    std::map<std::string, std::string> kv;
    kv["variant"] = pipeline::to_string(cfg.variant);
    kv["label"] = cfg.label;
    kv["seed"] = std::to_string(cfg.seed);
    kv["t_bin"] = std::to_string(cfg.idm.t_bin);
    kv["frac_split"] = persist::format_double(cfg.idm.frac_split);
    kv["alpha"] = persist::format_double(cfg.idm.alpha);
    kv["peak_radius"] = std::to_string(cfg.idm.peak_radius);
    kv["dedup_radius"] = std::to_string(cfg.idm.dedup_radius);
    kv["k_ppsm"] = persist::format_double(cfg.k_ppsm);
    kv["count_from_dm"] = cfg.count_from_dm ? "1" : "0";
    kv["m"] = std::to_string(cfg.m);
    kv["t_sam"] = persist::format_double(cfg.t_sam);
    kv["k_clusters"] = std::to_string(cfg.k_clusters);
    kv["w1"] = persist::format_double(cfg.weights.w1);
    kv["w2"] = persist::format_double(cfg.weights.w2);
    kv["w3"] = persist::format_double(cfg.weights.w3);
    kv["w4"] = persist::format_double(cfg.weights.w4);
    kv["p_lo"] = persist::format_double(cfg.p_lo);
    kv["p_hi"] = persist::format_double(cfg.p_hi);
    kv["iou_min"] = persist::format_double(cfg.iou_min);
    kv["feedback_iters"] = std::to_string(cfg.feedback_iters);
    if (cfg.diversity_selection) kv["diversity"] = *cfg.diversity_selection ? "1" : "0";
    if (cfg.hybrid_idm) kv["hybrid"] = *cfg.hybrid_idm ? "1" : "0";
    if (cfg.imrm_enabled) kv["imrm"] = *cfg.imrm_enabled ? "1" : "0";
    return kv;
}

void write_result(const ResultFile& result, const fs::path& path) {
    std::string out = "predicted_count=" + std::to_string(result.predicted_count) + "\n";
    auto box_line = [](const char* key, const BBox& b) {
        return std::string(key) + "=" + std::to_string(b.x0) + " " + std::to_string(b.y0) + " " +
               std::to_string(b.x1) + " " + std::to_string(b.y1) + "\n";
    };
    auto prompt_line = [](const char* key, const ppsm::PointPrompt& p) {
        return std::string(key) + "=" + std::to_string(p.point.x) + " " +
               std::to_string(p.point.y) + " " + persist::format_double(p.similarity) + "\n";
    };
    for (const auto& b : result.exemplars_pass1) out += box_line("exemplar_pass1", b);
    for (const auto& b : result.exemplars_final) out += box_line("exemplar_final", b);
    for (const auto& p : result.prompts_pass1) out += prompt_line("prompt_pass1", p);
    for (const auto& p : result.prompts_final) out += prompt_line("prompt_final", p);
    persist::atomic_write(path, out);
}

ResultFile read_result(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open " + path.string());
    ResultFile result;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(0, eq);
        std::istringstream value(line.substr(eq + 1));
        if (key == "predicted_count") {
            value >> result.predicted_count;
        } else if (key == "exemplar_pass1" || key == "exemplar_final") {
            BBox b;
            value >> b.x0 >> b.y0 >> b.x1 >> b.y1;
            (key == "exemplar_pass1" ? result.exemplars_pass1 : result.exemplars_final)
                .push_back(b);
        } else if (key == "prompt_pass1" || key == "prompt_final") {
            ppsm::PointPrompt p;
            value >> p.point.x >> p.point.y >> p.similarity;
            p.gated = true;
            (key == "prompt_pass1" ? result.prompts_pass1 : result.prompts_final).push_back(p);
        }
    }
    return result;
}

void cmd_synth(const fs::path& spec_path, const fs::path& out_dir, int count,
               std::uint64_t seed) {
    if (count < 1) throw UsageError("count must be >= 1");
    synth::SceneSpec base;
    try {
        base = synth::spec_from_kv(persist::read_kv(spec_path));
    } catch (const std::exception& e) {
        throw UsageError(std::string("invalid scene spec: ") + e.what());
    }

    fs::create_directories(out_dir);
    write_manifest(out_dir, "synth",
                   {{"spec", spec_path.string()},
                    {"out", out_dir.string()},
                    {"count", std::to_string(count)},
                    {"seed", std::to_string(seed)}});

    for (int i = 0; i < count; ++i) {
        const std::string id = image_id_for(i);
        synth::SceneSpec spec = base;
        spec.seed = rng::stable_hash(seed, id);
        const synth::Scene scene = synth::generate_scene(spec);

        const fs::path dir = out_dir / id;
        fs::create_directories(dir);
        persist::write_kv(synth::kv_from_spec(spec), dir / "spec.txt");
        persist::write_masks(scene.gt_masks(), dir / "gt_masks.bin");
        std::map<std::string, std::string> meta;
        meta["gt_count"] = std::to_string(scene.gt_count);
        meta["bin"] = metrics::to_string(metrics::density_bin(scene.gt_count));
        meta["cv"] = persist::format_double(metrics::cv_scale(scene.gt_areas()));
        persist::write_kv(meta, dir / "meta.txt");
    }
}

void cmd_run(const fs::path& data_dir, const fs::path& out_dir,
             const pipeline::PipelineConfig& cfg, int jobs) {
    const std::vector<std::string> ids = scene_ids_in(data_dir, "spec.txt");
    if (ids.empty()) throw UsageError("no scenes found under " + data_dir.string());

    fs::create_directories(out_dir);
    auto manifest = kv_from_config(cfg);
    manifest["data"] = data_dir.string();
    manifest["out"] = out_dir.string();
    write_manifest(out_dir, "run", manifest);

    const int n_jobs = resolve_jobs(jobs);
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic) num_threads(n_jobs)
    for (long long i = 0; i < static_cast<long long>(ids.size()); ++i) {
        try {
            const std::string& id = ids[static_cast<size_t>(i)];
            const synth::SceneSpec spec =
                synth::spec_from_kv(persist::read_kv(data_dir / id / "spec.txt"));
            const synth::Scene scene = synth::generate_scene(spec);
            const pipeline::Providers providers = synth::oracle_providers(scene);

            pipeline::PipelineConfig image_cfg = cfg;
            image_cfg.seed = rng::stable_hash(cfg.seed, id);
            const pipeline::SegmentationResult result =
                pipeline::run(providers, image_cfg, id);

            const fs::path dir = out_dir / id;
            fs::create_directories(dir);
            // The final-pass DM is re-derived for inspection; providers are
            // deterministic so this matches the one used inside run().
            persist::write_grid(providers.density(id, result.exemplars_final), dir / "dm.psg");
            persist::write_masks(result.masks, dir / "masks.bin");
            ResultFile rf{result.predicted_count, result.exemplars_pass1, result.exemplars_final,
                          result.prompts_pass1, result.prompts_final};
            write_result(rf, dir / "result.txt");
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
}

void cmd_eval(const fs::path& pred_dir, const fs::path& gt_dir, const fs::path& out_csv) {
    const std::vector<std::string> ids = scene_ids_in(gt_dir, "meta.txt");
    if (ids.empty()) throw UsageError("no ground truth found under " + gt_dir.string());

    std::vector<std::string> missing;
    for (const auto& id : ids)
        if (!fs::exists(pred_dir / id / "masks.bin") || !fs::exists(pred_dir / id / "result.txt"))
            missing.push_back(id);
    if (!missing.empty()) {
        std::string what = "missing predictions for:";
        for (const auto& id : missing) what += " " + id;
        throw UsageError(what);
    }

    std::string variant = "persense";
    if (fs::exists(pred_dir / "manifest.txt")) {
        const auto manifest = persist::read_kv(pred_dir / "manifest.txt");
        if (auto it = manifest.find("variant"); it != manifest.end()) variant = it->second;
    }

    std::vector<metrics::EvalReport> reports(ids.size());
    const int n_jobs = resolve_jobs(0);
#pragma omp parallel for schedule(dynamic) num_threads(n_jobs)
    for (long long i = 0; i < static_cast<long long>(ids.size()); ++i) {
        const std::string& id = ids[static_cast<size_t>(i)];
        const auto gt_masks = persist::read_masks(gt_dir / id / "gt_masks.bin");
        const auto meta = persist::read_kv(gt_dir / id / "meta.txt");
        const int gt_count = std::stoi(meta.at("gt_count"));
        const auto pred_masks = persist::read_masks(pred_dir / id / "masks.bin");
        const ResultFile result = read_result(pred_dir / id / "result.txt");

        metrics::EvalReport r;
        r.image_id = id;
        r.variant = variant;
        r.miou = metrics::class_miou(pred_masks, gt_masks);
        const double err = std::abs(result.predicted_count - gt_count);
        r.mae = err;
        r.rmse = err;
        const auto [precision, recall] = metrics::prompt_pr(result.prompts_final, gt_masks);
        r.prompt_precision = precision;
        r.prompt_recall = recall;
        r.bin = metrics::density_bin(gt_count);
        r.cv_scale = std::stod(meta.at("cv"));
        reports[static_cast<size_t>(i)] = r;
    }
    persist::write_report(reports, out_csv, /*include_bin_rows=*/true);
}

void cmd_ablate(const std::string& param, const std::string& values_csv, const fs::path& data_dir,
                const fs::path& out_dir, const pipeline::PipelineConfig& base_cfg, int jobs) {
    const bool known = param == "k_ppsm" || param == "m" || param == "alpha" ||
                       param == "weights" || param == "t_bin";
    if (!known) throw UsageError("unknown ablation parameter: " + param);
    if (values_csv.empty()) throw UsageError("empty values list");

    std::vector<std::string> values;
    {
        std::istringstream ss(values_csv);
        std::string item;
        while (std::getline(ss, item, ',')) values.push_back(item);
    }

    fs::create_directories(out_dir);
    write_manifest(out_dir, "ablate",
                   {{"param", param},
                    {"values", values_csv},
                    {"data", data_dir.string()},
                    {"out", out_dir.string()}});

    std::string csv = "param,value,miou,mae,rmse,precision,recall\n";
    for (size_t vi = 0; vi < values.size(); ++vi) {
        pipeline::PipelineConfig cfg = base_cfg;
        const std::string& value = values[vi];
        if (param == "k_ppsm")
            cfg.k_ppsm = parse_double_or_throw(value, param);
        else if (param == "m")
            cfg.m = parse_int_or_throw(value, param);
        else if (param == "alpha")
            cfg.idm.alpha = parse_double_or_throw(value, param);
        else if (param == "t_bin")
            cfg.idm.t_bin = parse_int_or_throw(value, param);
        else if (param == "weights") {
            std::istringstream ws(value);
            std::string w;
            std::vector<double> parsed;
            while (std::getline(ws, w, ':')) parsed.push_back(parse_double_or_throw(w, param));
            if (parsed.size() != 4) throw UsageError("weights value must be w1:w2:w3:w4");
            cfg.weights = exemplar::WeightConfig{parsed[0], parsed[1], parsed[2], parsed[3]};
        }

        const fs::path run_dir = out_dir / ("run_" + std::to_string(vi));
        const fs::path eval_csv = out_dir / ("eval_" + std::to_string(vi) + ".csv");
        cmd_run(data_dir, run_dir, cfg, jobs);
        cmd_eval(run_dir, data_dir, eval_csv);

        for (const auto& row : persist::parse_report(eval_csv)) {
            if (row.image_id != "aggregate") continue;
            csv += param + "," + value + "," + persist::format_double(row.miou) + "," +
                   persist::format_double(row.mae) + "," + persist::format_double(row.rmse) + "," +
                   persist::format_double(row.precision) + "," +
                   persist::format_double(row.recall) + "\n";
        }
    }
    persist::atomic_write(out_dir / "ablate.csv", csv);
}

namespace {

void draw_marker(GrayGrid& canvas, const PixelPoint& p) {
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
            if (canvas.in_bounds(p.x + dx, p.y + dy)) canvas.at(p.x + dx, p.y + dy) = 255;
}

}  // namespace

void cmd_inspect(const fs::path& run_dir, const std::string& image, const std::string& stage,
                 const fs::path& out_pgm) {
    if (!fs::exists(run_dir / "manifest.txt"))
        throw UsageError("no prior run at " + run_dir.string());
    const auto manifest = persist::read_kv(run_dir / "manifest.txt");
    const fs::path dir = run_dir / image;
    if (!fs::exists(dir / "dm.psg")) throw UsageError("no stored run for image " + image);

    const int t_bin = std::stoi(manifest.at("t_bin"));
    const double frac_split = std::stod(manifest.at("frac_split"));
    const ScalarGrid dm = persist::read_scalar_grid(dir / "dm.psg");
    const GrayGrid gray = normalize_to_gray(dm);

    GrayGrid out(gray.width(), gray.height(), 0);
    if (stage == "gray" || stage == "dm") {
        out = gray;
    } else if (stage == "binary") {
        out = persist::gray_from_binary(idm::binarize(gray, t_bin));
    } else if (stage == "eroded") {
        out = persist::gray_from_binary(idm::erode3x3(idm::binarize(gray, t_bin)));
    } else if (stage == "contours") {
        const BinaryGrid eroded = idm::erode3x3(idm::binarize(gray, t_bin));
        const auto contours = idm::extract_contours(eroded);
        if (!contours.empty()) {
            const auto cs = idm::contour_stats(contours);
            for (const auto& c : contours) {
                if (static_cast<double>(c.area) > cs.t_comp) {
                    for (const auto& child : idm::split_composite(c, eroded, frac_split))
                        draw_marker(out, idm::centroid(child, gray));
                } else {
                    draw_marker(out, idm::centroid(c, gray));
                }
            }
        }
    } else if (stage == "prompts") {
        const ResultFile result = read_result(dir / "result.txt");
        for (const auto& p : result.prompts_final) draw_marker(out, p.point);
    } else if (stage == "masks") {
        const auto masks = persist::read_masks(dir / "masks.bin");
        std::vector<BinaryGrid> grids;
        for (const auto& m : masks) grids.push_back(m.mask);
        out = persist::gray_from_binary(union_masks(grids, gray.width(), gray.height()));
    } else {
        throw UsageError("unknown stage: " + stage);
    }
    persist::export_pgm(out, out_pgm);
}

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Density-driven instance point-prompt segmentation harness"};
    app.require_subcommand(1);

    std::string spec_path, out_dir, data_dir, pred_dir, gt_dir, out_csv;
    std::string variant, config_path, param, values, image, stage, out_pgm, run_dir;
    std::vector<std::string> overrides;
    int count = 10;
    int jobs = 0;
    std::uint64_t seed = 0;
    bool seed_given = false;

    auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic scenes and fixtures");
    synth_cmd->add_option("--spec", spec_path, "Scene spec file")->required();
    synth_cmd->add_option("--out", out_dir, "Output directory")->required();
    synth_cmd->add_option("--count", count, "Number of scenes");
    synth_cmd->add_option("--seed", seed, "Master seed");

    auto* run_cmd = app.add_subcommand("run", "Run the segmentation pipeline");
    run_cmd->add_option("--data", data_dir, "Scene directory from synth")->required();
    run_cmd->add_option("--variant", variant, "persense or persense_pp");
    run_cmd->add_option("--config", config_path, "key=value config file");
    run_cmd->add_option("--out", out_dir, "Output directory")->required();
    run_cmd->add_option("--jobs", jobs, "Parallel image jobs (default PERSENSE_JOBS)");
    run_cmd->add_option("--seed", seed, "Pipeline seed")->each([&](const std::string&) {
        seed_given = true;
    });
    run_cmd->add_option("--set", overrides, "Config overrides key=value");

    auto* eval_cmd = app.add_subcommand("eval", "Score predictions against ground truth");
    eval_cmd->add_option("--pred", pred_dir, "Run output directory")->required();
    eval_cmd->add_option("--gt", gt_dir, "Ground-truth directory from synth")->required();
    eval_cmd->add_option("--out", out_csv, "Report CSV path")->required();

    auto* ablate_cmd = app.add_subcommand("ablate", "Sweep one parameter, run + eval per value");
    ablate_cmd->add_option("--param", param, "k_ppsm|m|alpha|weights|t_bin")->required();
    ablate_cmd->add_option("--values", values, "Comma-separated values")->required();
    ablate_cmd->add_option("--data", data_dir, "Scene directory from synth")->required();
    ablate_cmd->add_option("--out", out_dir, "Output directory")->required();
    ablate_cmd->add_option("--variant", variant, "persense or persense_pp");
    ablate_cmd->add_option("--config", config_path, "key=value config file");
    ablate_cmd->add_option("--jobs", jobs, "Parallel image jobs");
    ablate_cmd->add_option("--seed", seed, "Pipeline seed")->each([&](const std::string&) {
        seed_given = true;
    });

    auto* inspect_cmd = app.add_subcommand("inspect", "Export one pipeline stage as a PGM");
    inspect_cmd->add_option("--run", run_dir, "Prior run directory")->required();
    inspect_cmd->add_option("--image", image, "Image id, e.g. scene_000")->required();
    inspect_cmd->add_option("--stage", stage, "gray|binary|eroded|contours|dm|prompts|masks")
        ->required();
    inspect_cmd->add_option("--out", out_pgm, "Output PGM path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        auto build_config = [&]() {
            pipeline::PipelineConfig cfg;
            if (!config_path.empty()) {
                try {
                    cfg = config_from_kv(persist::read_kv(config_path));
                } catch (const persist::PersistError& e) {
                    throw UsageError(std::string("bad config: ") + e.what());
                }
            }
            std::map<std::string, std::string> extra;
            if (!variant.empty()) extra["variant"] = variant;
            for (const auto& kv : overrides) {
                const size_t eq = kv.find('=');
                if (eq == std::string::npos) throw UsageError("bad --set value: " + kv);
                extra[kv.substr(0, eq)] = kv.substr(eq + 1);
            }
            if (!extra.empty()) {
                auto merged = kv_from_config(cfg);
                for (const auto& [k, v] : extra) merged[k] = v;
                cfg = config_from_kv(merged);
            }
            if (seed_given) cfg.seed = seed;
            return cfg;
        };

        if (synth_cmd->parsed()) {
            cmd_synth(spec_path, out_dir, count, seed);
        } else if (run_cmd->parsed()) {
            cmd_run(data_dir, out_dir, build_config(), jobs);
        } else if (eval_cmd->parsed()) {
            cmd_eval(pred_dir, gt_dir, out_csv);
        } else if (ablate_cmd->parsed()) {
            cmd_ablate(param, values, data_dir, out_dir, build_config(), jobs);
        } else if (inspect_cmd->parsed()) {
            cmd_inspect(run_dir, image, stage, out_pgm);
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const pipeline::NoGroundingError& e) {
        std::cerr << "error: " << e.what() << "\n";  // detector produced nothing
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace persense::commands
