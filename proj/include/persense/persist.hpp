#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "persense/grid.hpp"
#include "persense/metrics.hpp"

namespace persense::persist {

enum class ErrorCode { io_failure, bad_magic, truncated, dtype_mismatch, bad_payload };

class PersistError : public std::runtime_error {
public:
    PersistError(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

// Grid container: "PSG1" magic, u32le width, u32le height, dtype byte
// (0 = float32, 1 = uint8), row-major little-endian payload.
void write_grid(const ScalarGrid& grid, const std::filesystem::path& path);
void write_grid(const GrayGrid& grid, const std::filesystem::path& path);
ScalarGrid read_scalar_grid(const std::filesystem::path& path);
GrayGrid read_gray_grid(const std::filesystem::path& path);

// Run-length encoding of a binary mask, starting with the zero-run.
struct MaskRecord {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<std::uint32_t> rle;
    double quality = 0.0;
};

MaskRecord encode_mask(const InstanceMask& mask);
InstanceMask decode_mask(const MaskRecord& record);

// Mask container: "PSM1" magic, u32le count, then per record u32le width,
// u32le height, f64le quality, u32le run count, u32le runs.
void write_masks(const std::vector<InstanceMask>& masks, const std::filesystem::path& path);
std::vector<InstanceMask> read_masks(const std::filesystem::path& path);

// Binary PGM (P5, maxval 255).
void export_pgm(const GrayGrid& gray, const std::filesystem::path& path);
GrayGrid gray_from_binary(const BinaryGrid& mask);  // {0,1} -> {0,255}

// CSV report: fixed header, one row per report, then (optionally) one row
// per populated density bin, then the aggregate row. Empty input writes the
// header only. Floats use shortest round-trip formatting, LF endings.
void write_report(const std::vector<metrics::EvalReport>& reports,
                  const std::filesystem::path& path, bool include_bin_rows = false);

struct ParsedReportRow {
    std::string image_id;
    std::string variant;
    double miou = 0.0;
    double mae = 0.0;
    double rmse = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    std::string bin;
    double cv = 0.0;
};

std::vector<ParsedReportRow> parse_report(const std::filesystem::path& path);

// Flat key=value config files; keys written in sorted order.
std::map<std::string, std::string> read_kv(const std::filesystem::path& path);
void write_kv(const std::map<std::string, std::string>& kv, const std::filesystem::path& path);

// Write-temp-then-rename.
void atomic_write(const std::filesystem::path& path, const std::string& bytes);

std::string format_double(double v);  // shortest round-trip representation

}  // namespace persense::persist
