#include "persense/persist.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace persense::persist {

namespace {

void append_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_f32(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    append_u32(out, bits);
}

void append_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

class Reader {
public:
    explicit Reader(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw PersistError(ErrorCode::io_failure, "cannot open " + path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        bytes_ = ss.str();
    }

    void expect_magic(const char* magic) {
        if (bytes_.size() < pos_ + 4 || bytes_.compare(pos_, 4, magic) != 0)
            throw PersistError(ErrorCode::bad_magic, "bad magic");
        pos_ += 4;
    }

    std::uint32_t read_u32() {
        require(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::uint8_t read_u8() {
        require(1);
        return static_cast<std::uint8_t>(bytes_[pos_++]);
    }

    float read_f32() {
        const std::uint32_t bits = read_u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }

    double read_f64() {
        require(8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i)
            bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 8;
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }

    void require(size_t n) {
        if (bytes_.size() < pos_ + n)
            throw PersistError(ErrorCode::truncated, "truncated payload");
    }

    bool at_end() const { return pos_ == bytes_.size(); }

private:
    std::string bytes_;
    size_t pos_ = 0;
};

std::string grid_header(std::uint32_t w, std::uint32_t h, std::uint8_t dtype) {
    std::string out = "PSG1";
    append_u32(out, w);
    append_u32(out, h);
    out.push_back(static_cast<char>(dtype));
    return out;
}

}  // namespace

void atomic_write(const std::filesystem::path& path, const std::string& bytes) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw PersistError(ErrorCode::io_failure, "cannot open " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw PersistError(ErrorCode::io_failure, "write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void write_grid(const ScalarGrid& grid, const std::filesystem::path& path) {
    std::string out = grid_header(static_cast<std::uint32_t>(grid.width()),
                                  static_cast<std::uint32_t>(grid.height()), 0);
    out.reserve(out.size() + grid.size() * 4);
    for (double v : grid.values()) append_f32(out, static_cast<float>(v));
    atomic_write(path, out);
}

void write_grid(const GrayGrid& grid, const std::filesystem::path& path) {
    std::string out = grid_header(static_cast<std::uint32_t>(grid.width()),
                                  static_cast<std::uint32_t>(grid.height()), 1);
    out.append(reinterpret_cast<const char*>(grid.data()), grid.size());
    atomic_write(path, out);
}

ScalarGrid read_scalar_grid(const std::filesystem::path& path) {
    Reader r(path);
    r.expect_magic("PSG1");
    const std::uint32_t w = r.read_u32();
    const std::uint32_t h = r.read_u32();
    const std::uint8_t dtype = r.read_u8();
    if (dtype != 0) throw PersistError(ErrorCode::dtype_mismatch, "expected float32 grid");
    ScalarGrid grid(static_cast<int>(w), static_cast<int>(h), 0.0);
    for (auto& v : grid.values()) v = static_cast<double>(r.read_f32());
    if (!r.at_end()) throw PersistError(ErrorCode::bad_payload, "trailing bytes");
    return grid;
}

GrayGrid read_gray_grid(const std::filesystem::path& path) {
    Reader r(path);
    r.expect_magic("PSG1");
    const std::uint32_t w = r.read_u32();
    const std::uint32_t h = r.read_u32();
    const std::uint8_t dtype = r.read_u8();
    if (dtype != 1) throw PersistError(ErrorCode::dtype_mismatch, "expected uint8 grid");
    GrayGrid grid(static_cast<int>(w), static_cast<int>(h), 0);
    for (auto& v : grid.values()) v = r.read_u8();
    if (!r.at_end()) throw PersistError(ErrorCode::bad_payload, "trailing bytes");
    return grid;
}

MaskRecord encode_mask(const InstanceMask& mask) {
    MaskRecord rec;
    rec.width = static_cast<std::uint32_t>(mask.mask.width());
    rec.height = static_cast<std::uint32_t>(mask.mask.height());
    rec.quality = mask.quality;
    std::uint8_t current = 0;  // runs alternate starting with the zero-run
    std::uint32_t run = 0;
    for (std::uint8_t v : mask.mask.values()) {
        if (v == current) {
            ++run;
        } else {
            rec.rle.push_back(run);
            current = v;
            run = 1;
        }
    }
    rec.rle.push_back(run);
    return rec;
}

InstanceMask decode_mask(const MaskRecord& record) {
    BinaryGrid mask(static_cast<int>(record.width), static_cast<int>(record.height), 0);
    size_t pos = 0;
    std::uint8_t value = 0;
    for (std::uint32_t run : record.rle) {
        if (pos + run > mask.size())
            throw PersistError(ErrorCode::bad_payload, "rle runs exceed mask size");
        for (std::uint32_t i = 0; i < run; ++i) mask.data()[pos++] = value;
        value ^= 1;
    }
    if (pos != mask.size())
        throw PersistError(ErrorCode::bad_payload, "rle runs do not cover mask");
    return make_instance_mask(std::move(mask), record.quality);
}

void write_masks(const std::vector<InstanceMask>& masks, const std::filesystem::path& path) {
    std::string out = "PSM1";
    append_u32(out, static_cast<std::uint32_t>(masks.size()));
    for (const auto& m : masks) {
        const MaskRecord rec = encode_mask(m);
        append_u32(out, rec.width);
        append_u32(out, rec.height);
        append_f64(out, rec.quality);
        append_u32(out, static_cast<std::uint32_t>(rec.rle.size()));
        for (std::uint32_t run : rec.rle) append_u32(out, run);
    }
    atomic_write(path, out);
}

std::vector<InstanceMask> read_masks(const std::filesystem::path& path) {
    Reader r(path);
    r.expect_magic("PSM1");
    const std::uint32_t count = r.read_u32();
    std::vector<InstanceMask> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        MaskRecord rec;
        rec.width = r.read_u32();
        rec.height = r.read_u32();
        rec.quality = r.read_f64();
        const std::uint32_t n_runs = r.read_u32();
        rec.rle.resize(n_runs);
        for (auto& run : rec.rle) run = r.read_u32();
        out.push_back(decode_mask(rec));
    }
    if (!r.at_end()) throw PersistError(ErrorCode::bad_payload, "trailing bytes");
    return out;
}

void export_pgm(const GrayGrid& gray, const std::filesystem::path& path) {
    std::string out = "P5\n" + std::to_string(gray.width()) + " " +
                      std::to_string(gray.height()) + "\n255\n";
    out.append(reinterpret_cast<const char*>(gray.data()), gray.size());
    atomic_write(path, out);
}

GrayGrid gray_from_binary(const BinaryGrid& mask) {
    GrayGrid out(mask.width(), mask.height(), 0);
    for (size_t i = 0; i < mask.size(); ++i) out.data()[i] = mask.data()[i] ? 255 : 0;
    return out;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::string report_row(const std::string& image_id, const std::string& variant, double miou,
                       double mae, double rmse, double precision, double recall,
                       const std::string& bin, double cv) {
    std::ostringstream ss;
    ss << image_id << ',' << variant << ',' << format_double(miou) << ',' << format_double(mae)
       << ',' << format_double(rmse) << ',' << format_double(precision) << ','
       << format_double(recall) << ',' << bin << ',' << format_double(cv) << '\n';
    return ss.str();
}

std::string aggregate_row(const std::vector<metrics::EvalReport>& rs, const std::string& id,
                          const std::string& bin_label) {
    double miou = 0.0, mae = 0.0, sq = 0.0, prec = 0.0, rec = 0.0, cv = 0.0;
    for (const auto& r : rs) {
        miou += r.miou;
        mae += r.mae;
        sq += r.rmse * r.rmse;
        prec += r.prompt_precision;
        rec += r.prompt_recall;
        cv += r.cv_scale;
    }
    const double n = static_cast<double>(rs.size());
    return report_row(id, rs.front().variant, miou / n, mae / n, std::sqrt(sq / n), prec / n,
                      rec / n, bin_label, cv / n);
}

}  // namespace

void write_report(const std::vector<metrics::EvalReport>& reports,
                  const std::filesystem::path& path, bool include_bin_rows) {
    std::string out = "image_id,variant,miou,mae,rmse,precision,recall,bin,cv\n";
    for (const auto& r : reports)
        out += report_row(r.image_id, r.variant, r.miou, r.mae, r.rmse, r.prompt_precision,
                          r.prompt_recall, metrics::to_string(r.bin), r.cv_scale);
    if (!reports.empty()) {
        if (include_bin_rows) {
            for (auto bin :
                 {metrics::DensityBin::Low, metrics::DensityBin::Medium, metrics::DensityBin::High}) {
                std::vector<metrics::EvalReport> in_bin;
                for (const auto& r : reports)
                    if (r.bin == bin) in_bin.push_back(r);
                if (!in_bin.empty())
                    out += aggregate_row(in_bin, "bin:" + metrics::to_string(bin),
                                         metrics::to_string(bin));
            }
        }
        out += aggregate_row(reports, "aggregate", "all");
    }
    atomic_write(path, out);
}

std::vector<ParsedReportRow> parse_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw PersistError(ErrorCode::io_failure, "cannot open " + path.string());
    std::string line;
    std::getline(in, line);  // header
    std::vector<ParsedReportRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::istringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 9) throw PersistError(ErrorCode::bad_payload, "malformed csv row");
        ParsedReportRow row;
        row.image_id = fields[0];
        row.variant = fields[1];
        row.miou = std::stod(fields[2]);
        row.mae = std::stod(fields[3]);
        row.rmse = std::stod(fields[4]);
        row.precision = std::stod(fields[5]);
        row.recall = std::stod(fields[6]);
        row.bin = fields[7];
        row.cv = std::stod(fields[8]);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::map<std::string, std::string> read_kv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw PersistError(ErrorCode::io_failure, "cannot open " + path.string());
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw PersistError(ErrorCode::bad_payload, "malformed key=value line: " + line);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

void write_kv(const std::map<std::string, std::string>& kv, const std::filesystem::path& path) {
    std::string out;
    for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
    atomic_write(path, out);
}

}  // namespace persense::persist
