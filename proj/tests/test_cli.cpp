#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "persense/commands.hpp"
#include "persense/core.hpp"
#include "persense/idm.hpp"
#include "persense/persist.hpp"
#include "persense/synth.hpp"

using namespace persense;
using namespace persense::commands;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) {
        path = fs::temp_directory_path() / ("persense_cli_" + name + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int run_cli(std::initializer_list<std::string> args) {
    std::vector<std::string> owned = {"persense"};
    owned.insert(owned.end(), args);
    std::vector<const char*> argv;
    for (const auto& a : owned) argv.push_back(a.c_str());
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

fs::path write_spec(const fs::path& dir, int n_instances, int extra_hotspots = 4) {
    synth::SceneSpec spec;
    spec.width = 256;
    spec.height = 256;
    spec.n_instances = n_instances;
    spec.n_distractor_hotspots = extra_hotspots;
    const fs::path p = dir / "scene.spec";
    persist::write_kv(synth::kv_from_spec(spec), p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool trees_identical(const fs::path& a, const fs::path& b) {
    std::vector<std::string> rel_a, rel_b;
    for (auto& e : fs::recursive_directory_iterator(a))
        if (e.is_regular_file()) rel_a.push_back(fs::relative(e.path(), a).string());
    for (auto& e : fs::recursive_directory_iterator(b))
        if (e.is_regular_file()) rel_b.push_back(fs::relative(e.path(), b).string());
    std::sort(rel_a.begin(), rel_a.end());
    std::sort(rel_b.begin(), rel_b.end());
    if (rel_a != rel_b) return false;
    for (const auto& rel : rel_a) {
        // Manifests embed absolute paths; compare everything else bytewise.
        if (rel == "manifest.txt") continue;
        if (slurp(a / rel) != slurp(b / rel)) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("synth is deterministic and writes the expected layout") {
    TempDir tmp("synth");
    const fs::path spec = write_spec(tmp.path, 12);
    const fs::path out1 = tmp.path / "d1";
    const fs::path out2 = tmp.path / "d2";
    CHECK(run_cli({"synth", "--spec", spec.string(), "--out", out1.string(), "--count", "3",
                   "--seed", "7"}) == 0);
    CHECK(run_cli({"synth", "--spec", spec.string(), "--out", out2.string(), "--count", "3",
                   "--seed", "7"}) == 0);
    CHECK(fs::exists(out1 / "scene_000" / "spec.txt"));
    CHECK(fs::exists(out1 / "scene_002" / "gt_masks.bin"));
    CHECK(fs::exists(out1 / "manifest.txt"));
    CHECK(trees_identical(out1, out2));
}

TEST_CASE("synth bins high-count scenes as High and rejects bad specs") {
    TempDir tmp("synth_bins");
    synth::SceneSpec spec;
    spec.width = 448;
    spec.height = 448;
    spec.n_instances = 100;
    const fs::path p = tmp.path / "dense.spec";
    persist::write_kv(synth::kv_from_spec(spec), p);
    const fs::path out = tmp.path / "out";
    REQUIRE(run_cli({"synth", "--spec", p.string(), "--out", out.string(), "--count", "1"}) == 0);
    CHECK(persist::read_kv(out / "scene_000" / "meta.txt").at("bin") == "High");

    // Malformed spec: exit 2, no partial output.
    const fs::path bad = tmp.path / "bad.spec";
    persist::write_kv({{"n_instances", "0"}}, bad);
    const fs::path bad_out = tmp.path / "bad_out";
    CHECK(run_cli({"synth", "--spec", bad.string(), "--out", bad_out.string()}) == 2);
    CHECK(!fs::exists(bad_out));
}

TEST_CASE("run + eval round trip with deterministic outputs") {
    TempDir tmp("run");
    const fs::path spec = write_spec(tmp.path, 15);
    const fs::path data = tmp.path / "data";
    REQUIRE(run_cli({"synth", "--spec", spec.string(), "--out", data.string(), "--count", "3",
                     "--seed", "5"}) == 0);

    const fs::path run1 = tmp.path / "run1";
    const fs::path run2 = tmp.path / "run2";
    for (const auto& out : {run1, run2})
        REQUIRE(run_cli({"run", "--data", data.string(), "--variant", "persense_pp", "--out",
                         out.string(), "--seed", "9"}) == 0);
    CHECK(trees_identical(run1, run2));
    CHECK(fs::exists(run1 / "scene_000" / "dm.psg"));
    CHECK(fs::exists(run1 / "scene_000" / "masks.bin"));

    const fs::path csv = tmp.path / "report.csv";
    REQUIRE(run_cli({"eval", "--pred", run1.string(), "--gt", data.string(), "--out",
                     csv.string()}) == 0);
    const auto rows = persist::parse_report(csv);
    REQUIRE(rows.size() >= 4);  // 3 images + >=1 bin row + aggregate
    CHECK(rows.back().image_id == "aggregate");
    double agg_miou = rows.back().miou;
    CHECK(agg_miou > 0.5);

    // IMRM subset property surfaces in the CLI contract: persense_pp output
    // masks never exceed the unfiltered count.
    const fs::path run_nofilter = tmp.path / "run_nofilter";
    REQUIRE(run_cli({"run", "--data", data.string(), "--variant", "persense_pp", "--out",
                     run_nofilter.string(), "--seed", "9", "--set", "imrm=0"}) == 0);
    for (const auto& id : {"scene_000", "scene_001", "scene_002"}) {
        const auto filtered = persist::read_masks(run1 / id / "masks.bin");
        const auto unfiltered = persist::read_masks(run_nofilter / id / "masks.bin");
        CHECK(filtered.size() <= unfiltered.size());
    }
}

TEST_CASE("eval exits 2 when predictions are missing, listing ids") {
    TempDir tmp("eval_missing");
    const fs::path spec = write_spec(tmp.path, 10);
    const fs::path data = tmp.path / "data";
    REQUIRE(run_cli({"synth", "--spec", spec.string(), "--out", data.string(), "--count", "2"}) ==
            0);
    const fs::path empty_pred = tmp.path / "pred";
    fs::create_directories(empty_pred);
    CHECK(run_cli({"eval", "--pred", empty_pred.string(), "--gt", data.string(), "--out",
                   (tmp.path / "r.csv").string()}) == 2);
}

TEST_CASE("run exits 2 on missing data") {
    TempDir tmp("run_missing");
    CHECK(run_cli({"run", "--data", (tmp.path / "nope").string(), "--out",
                   (tmp.path / "out").string()}) == 2);
}

TEST_CASE("ablate sweeps k and emits one row per value") {
    TempDir tmp("ablate");
    const fs::path spec = write_spec(tmp.path, 12);
    const fs::path data = tmp.path / "data";
    REQUIRE(run_cli({"synth", "--spec", spec.string(), "--out", data.string(), "--count", "2",
                     "--seed", "3"}) == 0);
    const fs::path out = tmp.path / "sweep";
    REQUIRE(run_cli({"ablate", "--param", "k_ppsm", "--values",
                     "1,1.4142135623730951,1.7320508075688772,2.23606797749979", "--data",
                     data.string(), "--out", out.string(), "--variant", "persense"}) == 0);
    const std::string csv = slurp(out / "ablate.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);  // header + 4 rows

    CHECK(run_cli({"ablate", "--param", "bogus", "--values", "1", "--data", data.string(),
                   "--out", (tmp.path / "x").string()}) == 2);
}

TEST_CASE("ablate m sweep emits six rows") {
    TempDir tmp("ablate_m");
    const fs::path spec = write_spec(tmp.path, 12);
    const fs::path data = tmp.path / "data";
    REQUIRE(run_cli({"synth", "--spec", spec.string(), "--out", data.string(), "--count", "2",
                     "--seed", "4"}) == 0);
    const fs::path out = tmp.path / "sweep";
    REQUIRE(run_cli({"ablate", "--param", "m", "--values", "1,2,3,4,5,6", "--data", data.string(),
                     "--out", out.string(), "--variant", "persense"}) == 0);
    const auto lines = slurp(out / "ablate.csv");
    CHECK(std::count(lines.begin(), lines.end(), '\n') == 7);
    CHECK(lines.substr(0, lines.find('\n')) == "param,value,miou,mae,rmse,precision,recall");
}

TEST_CASE("inspect exports stage rasters consistent with the stored run") {
    TempDir tmp("inspect");
    const fs::path spec = write_spec(tmp.path, 10);
    const fs::path data = tmp.path / "data";
    REQUIRE(run_cli({"synth", "--spec", spec.string(), "--out", data.string(), "--count", "1",
                     "--seed", "2"}) == 0);
    const fs::path run_dir = tmp.path / "run";
    REQUIRE(run_cli({"run", "--data", data.string(), "--variant", "persense_pp", "--out",
                     run_dir.string()}) == 0);

    for (const std::string stage : {"gray", "binary", "eroded", "contours", "dm", "prompts",
                                    "masks"}) {
        const fs::path pgm = tmp.path / (stage + ".pgm");
        CHECK(run_cli({"inspect", "--run", run_dir.string(), "--image", "scene_000", "--stage",
                       stage, "--out", pgm.string()}) == 0);
        CHECK(fs::exists(pgm));
    }

    // stage=gray equals normalize_to_gray of the stored DM.
    const ScalarGrid dm = persist::read_scalar_grid(run_dir / "scene_000" / "dm.psg");
    const GrayGrid expected = normalize_to_gray(dm);
    const std::string bytes = slurp(tmp.path / "gray.pgm");
    const std::string header =
        "P5\n" + std::to_string(dm.width()) + " " + std::to_string(dm.height()) + "\n255\n";
    REQUIRE(bytes.size() == header.size() + expected.size());
    bool equal = true;
    for (size_t i = 0; i < expected.size(); ++i)
        equal &= static_cast<std::uint8_t>(bytes[header.size() + i]) == expected.data()[i];
    CHECK(equal);

    // stage=binary is the configured t_bin re-applied to the stored DM.
    const auto manifest = persist::read_kv(run_dir / "manifest.txt");
    const BinaryGrid rebin = idm::binarize(expected, std::stoi(manifest.at("t_bin")));
    const std::string bin_bytes = slurp(tmp.path / "binary.pgm");
    bool bin_equal = true;
    for (size_t i = 0; i < rebin.size(); ++i)
        bin_equal &= static_cast<std::uint8_t>(bin_bytes[header.size() + i]) ==
                     (rebin.data()[i] ? 255 : 0);
    CHECK(bin_equal);

    // stage=prompts marker count: every final prompt is drawn.
    const auto result = read_result(run_dir / "scene_000" / "result.txt");
    const std::string prompt_bytes = slurp(tmp.path / "prompts.pgm");
    int marked = 0;
    for (size_t i = header.size(); i < prompt_bytes.size(); ++i)
        marked += static_cast<std::uint8_t>(prompt_bytes[i]) == 255;
    CHECK(marked >= static_cast<int>(result.prompts_final.size()));
    CHECK(marked <= 9 * static_cast<int>(result.prompts_final.size()));

    CHECK(run_cli({"inspect", "--run", run_dir.string(), "--image", "scene_000", "--stage",
                   "wat", "--out", (tmp.path / "w.pgm").string()}) == 2);
}

TEST_CASE("eval scores perfect predictions at miou 1.0") {
    TempDir tmp("eval_perfect");
    const fs::path spec = write_spec(tmp.path, 12);
    const fs::path data = tmp.path / "data";
    REQUIRE(run_cli({"synth", "--spec", spec.string(), "--out", data.string(), "--count", "2",
                     "--seed", "8"}) == 0);

    // Predictions that are exactly the ground truth.
    const fs::path pred = tmp.path / "pred";
    for (const auto& id : {"scene_000", "scene_001"}) {
        fs::create_directories(pred / id);
        const auto gt = persist::read_masks(data / id / "gt_masks.bin");
        persist::write_masks(gt, pred / id / "masks.bin");
        ResultFile rf;
        rf.predicted_count = static_cast<int>(gt.size());
        for (const auto& m : gt) {
            const auto box = tight_bbox(m.mask);
            rf.prompts_final.push_back(
                {{(box->x0 + box->x1) / 2, (box->y0 + box->y1) / 2}, 1.0, true});
        }
        write_result(rf, pred / id / "result.txt");
    }
    const fs::path csv = tmp.path / "perfect.csv";
    REQUIRE(run_cli({"eval", "--pred", pred.string(), "--gt", data.string(), "--out",
                     csv.string()}) == 0);
    const auto rows = persist::parse_report(csv);
    CHECK(rows.back().image_id == "aggregate");
    CHECK(rows.back().miou == 1.0);
    CHECK(rows.back().mae == 0.0);
    CHECK(rows.back().recall == 1.0);
}

TEST_CASE("run accepts a config file with --set overrides on top") {
    TempDir tmp("run_config");
    const fs::path spec = write_spec(tmp.path, 10);
    const fs::path data = tmp.path / "data";
    REQUIRE(run_cli({"synth", "--spec", spec.string(), "--out", data.string(), "--count", "1"}) ==
            0);
    const fs::path cfg = tmp.path / "pipe.cfg";
    persist::write_kv({{"variant", "persense"}, {"m", "2"}, {"t_bin", "25"}}, cfg);
    const fs::path out = tmp.path / "out";
    REQUIRE(run_cli({"run", "--data", data.string(), "--config", cfg.string(), "--out",
                     out.string(), "--set", "m=3"}) == 0);
    const auto manifest = persist::read_kv(out / "manifest.txt");
    CHECK(manifest.at("variant") == "persense");
    CHECK(manifest.at("m") == "3");      // CLI override wins
    CHECK(manifest.at("t_bin") == "25");  // file value kept
}

TEST_CASE("ablate parses weights quadruples") {
    TempDir tmp("ablate_w");
    const fs::path spec = write_spec(tmp.path, 10);
    const fs::path data = tmp.path / "data";
    REQUIRE(run_cli({"synth", "--spec", spec.string(), "--out", data.string(), "--count", "1"}) ==
            0);
    const fs::path out = tmp.path / "sweep";
    REQUIRE(run_cli({"ablate", "--param", "weights", "--values", "1:1:1:1,1:1:0:0", "--data",
                     data.string(), "--out", out.string(), "--variant", "persense_pp"}) == 0);
    const std::string csv = slurp(out / "ablate.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);

    CHECK(run_cli({"ablate", "--param", "weights", "--values", "1:2", "--data", data.string(),
                   "--out", (tmp.path / "bad").string()}) == 2);
}

TEST_CASE("config file keys merge with CLI overrides") {
    TempDir tmp("config");
    const fs::path cfg_path = tmp.path / "pipe.cfg";
    persist::write_kv({{"variant", "persense"}, {"m", "2"}, {"alpha", "1.25"}}, cfg_path);
    const auto kv = persist::read_kv(cfg_path);
    const auto cfg = config_from_kv(kv);
    CHECK(cfg.variant == pipeline::Variant::persense);
    CHECK(cfg.m == 2);
    CHECK(cfg.idm.alpha == 1.25);

    const auto round = config_from_kv(kv_from_config(cfg));
    CHECK(round.m == cfg.m);
    CHECK(round.idm.alpha == cfg.idm.alpha);
    CHECK(round.k_ppsm == cfg.k_ppsm);

    CHECK_THROWS_AS(config_from_kv({{"nonsense", "1"}}), UsageError);
    CHECK_THROWS_AS(config_from_kv({{"t_bin", "300"}}), UsageError);
    CHECK_THROWS_AS(config_from_kv({{"m", "0"}}), UsageError);
    CHECK_THROWS_AS(config_from_kv({{"feedback_iters", "0"}}), UsageError);
}

TEST_CASE("bad config values surface as usage errors from the CLI") {
    TempDir tmp("bad_cfg");
    const fs::path spec = write_spec(tmp.path, 10);
    const fs::path data = tmp.path / "data";
    REQUIRE(run_cli({"synth", "--spec", spec.string(), "--out", data.string(), "--count", "1"}) ==
            0);
    CHECK(run_cli({"run", "--data", data.string(), "--out", (tmp.path / "o").string(), "--set",
                   "t_bin=999"}) == 2);
}
