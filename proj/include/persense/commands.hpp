#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "persense/pipeline.hpp"
#include "persense/ppsm.hpp"

namespace persense::commands {

// Input/usage problems exit with code 2; internal failures with 1.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

extern const char* kToolVersion;

pipeline::PipelineConfig config_from_kv(const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> kv_from_config(const pipeline::PipelineConfig& cfg);

// Per-image artifacts of a run, in text form.
struct ResultFile {
    int predicted_count = 0;
    std::vector<BBox> exemplars_pass1;
    std::vector<BBox> exemplars_final;
    std::vector<ppsm::PointPrompt> prompts_pass1;
    std::vector<ppsm::PointPrompt> prompts_final;
};

void write_result(const ResultFile& result, const std::filesystem::path& path);
ResultFile read_result(const std::filesystem::path& path);

void cmd_synth(const std::filesystem::path& spec_path, const std::filesystem::path& out_dir,
               int count, std::uint64_t seed);

void cmd_run(const std::filesystem::path& data_dir, const std::filesystem::path& out_dir,
             const pipeline::PipelineConfig& cfg, int jobs);

void cmd_eval(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
              const std::filesystem::path& out_csv);

void cmd_ablate(const std::string& param, const std::string& values_csv,
                const std::filesystem::path& data_dir, const std::filesystem::path& out_dir,
                const pipeline::PipelineConfig& base_cfg, int jobs);

void cmd_inspect(const std::filesystem::path& run_dir, const std::string& image,
                 const std::string& stage, const std::filesystem::path& out_pgm);

// Full CLI: subcommands synth/run/eval/ablate/inspect.
// Exit codes: 0 success, 2 usage or input error, 1 internal error.
int cli_main(int argc, const char* const* argv);

}  // namespace persense::commands
