#include "poisonlab/dataset_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace poisonlab {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& msg) {
    throw DatasetIoError(path.string() + ": " + msg);
}

[[noreturn]] void fail_line(const std::filesystem::path& path, std::size_t line,
                            const std::string& msg) {
    fail(path, "line " + std::to_string(line) + ": " + msg);
}

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

template <typename T>
bool parse_int(std::string_view text, T& out) {
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

bool parse_float(std::string_view text, float& out) {
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

FeatureDataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(path, "cannot open for reading");

    std::string header;
    if (!std::getline(in, header)) fail(path, "missing header line");
    if (!header.empty() && header.back() == '\r') header.pop_back();

    int dim = 0;
    int classes = 0;
    SpaceTag space = SpaceTag::input_space;
    {
        const auto fields = split_csv(header);
        if (fields.size() != 3) fail_line(path, 1, "malformed header: expected d=,C=,space=");
        if (fields[0].substr(0, 2) != "d=" || !parse_int(fields[0].substr(2), dim))
            fail_line(path, 1, "malformed header field '" + std::string(fields[0]) + "'");
        if (fields[1].substr(0, 2) != "C=" || !parse_int(fields[1].substr(2), classes))
            fail_line(path, 1, "malformed header field '" + std::string(fields[1]) + "'");
        if (fields[2].substr(0, 6) != "space=")
            fail_line(path, 1, "malformed header field '" + std::string(fields[2]) + "'");
        const std::string_view tag = fields[2].substr(6);
        if (tag == "input")
            space = SpaceTag::input_space;
        else if (tag == "feature")
            space = SpaceTag::feature_space;
        else
            fail_line(path, 1, "unknown space tag '" + std::string(tag) + "'");
        if (dim < 1) fail_line(path, 1, "header dimension must be >= 1");
        if (classes < 1) fail_line(path, 1, "header class count must be >= 1");
    }

    FeatureDataset ds(space, classes, dim);
    std::string line;
    std::size_t line_no = 1;
    int row_width = -1;  // fields per row, fixed by the first data row
    std::vector<float> values(static_cast<std::size_t>(dim));
    std::uint64_t next_auto_id = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        const int width = static_cast<int>(fields.size());
        if (width != dim + 1 && width != dim + 2)
            fail_line(path, line_no,
                      "row has " + std::to_string(width) + " fields, expected " +
                          std::to_string(dim + 1) + " or " + std::to_string(dim + 2));
        if (row_width == -1) row_width = width;
        if (width != row_width) fail_line(path, line_no, "inconsistent row width");

        std::size_t f = 0;
        std::uint64_t id = next_auto_id;
        if (width == dim + 2) {
            if (!parse_int(fields[f], id))
                fail_line(path, line_no, "bad id '" + std::string(fields[f]) + "'");
            ++f;
        }
        std::int32_t label = 0;
        if (!parse_int(fields[f], label))
            fail_line(path, line_no, "bad label '" + std::string(fields[f]) + "'");
        if (label < 0 || label >= classes)
            fail_line(path, line_no, "label " + std::to_string(label) +
                                         " >= declared class count " + std::to_string(classes));
        ++f;
        for (int i = 0; i < dim; ++i, ++f) {
            if (!parse_float(fields[f], values[static_cast<std::size_t>(i)]))
                fail_line(path, line_no, "bad value '" + std::string(fields[f]) + "'");
            if (!std::isfinite(values[static_cast<std::size_t>(i)]))
                fail_line(path, line_no, "non-finite value in column " + std::to_string(i + 1));
        }
        try {
            ds.append(id, label, values);
        } catch (const DatasetError& e) {
            fail_line(path, line_no, e.what());
        }
        ++next_auto_id;
    }
    return ds;
}

void save_csv(const FeatureDataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) fail(path, "cannot open for writing");
    out << "d=" << ds.dim() << ",C=" << ds.num_classes() << ",space="
        << to_string(ds.space()) << "\n";
    char buf[64];
    for (std::size_t r = 0; r < ds.size(); ++r) {
        out << ds.id(r) << ',' << ds.label(r);
        for (float v : ds.point(r)) {
            std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
            out << ',' << buf;
        }
        out << '\n';
    }
    if (!out) fail(path, "write failure");
}

constexpr char kMagic[4] = {'F', 'P', 'D', 'S'};
constexpr std::uint16_t kVersion = 1;

void put_bytes(std::string& out, const void* p, std::size_t n) {
    out.append(static_cast<const char*>(p), n);
}

template <typename T>
void put_le(std::string& out, T value) {
    unsigned char bytes[sizeof(T)];
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                    std::conditional_t<sizeof(T) == 2, std::uint16_t,
                                                                       std::uint8_t>>>;
    U u;
    std::memcpy(&u, &value, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T); ++i)
        bytes[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xFF);
    put_bytes(out, bytes, sizeof(T));
}

class ByteReader {
public:
    ByteReader(const std::filesystem::path& path, std::string data)
        : path_(path), data_(std::move(data)) {}

    template <typename T>
    T get_le(const char* what) {
        if (pos_ + sizeof(T) > data_.size())
            fail(path_, std::string("truncated file while reading ") + what);
        using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                     std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                        std::conditional_t<sizeof(T) == 2, std::uint16_t,
                                                                           std::uint8_t>>>;
        U u = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i)
            u |= static_cast<U>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += sizeof(T);
        T value;
        std::memcpy(&value, &u, sizeof(T));
        return value;
    }

    bool at_end() const { return pos_ == data_.size(); }

private:
    const std::filesystem::path& path_;
    std::string data_;
    std::size_t pos_ = 0;
};

FeatureDataset load_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    ByteReader r(path, std::move(ss).str());

    char magic[4];
    for (char& c : magic) c = static_cast<char>(r.get_le<std::uint8_t>("magic"));
    if (std::memcmp(magic, kMagic, 4) != 0) fail(path, "bad magic bytes (expected FPDS)");
    const auto version = r.get_le<std::uint16_t>("version");
    if (version != kVersion)
        fail(path, "unsupported version " + std::to_string(version));
    const auto space_raw = r.get_le<std::uint8_t>("space tag");
    if (space_raw > 1) fail(path, "bad space tag " + std::to_string(space_raw));
    const auto classes = r.get_le<std::uint32_t>("class count");
    const auto n = r.get_le<std::uint64_t>("point count");
    const auto dim = r.get_le<std::uint32_t>("dimension");
    if (classes < 1) fail(path, "class count must be >= 1");
    if (dim < 1) fail(path, "dimension must be >= 1");

    FeatureDataset ds(static_cast<SpaceTag>(space_raw), static_cast<int>(classes),
                      static_cast<int>(dim));
    std::vector<float> values(dim);
    for (std::uint64_t rec = 0; rec < n; ++rec) {
        const auto id = r.get_le<std::uint64_t>("record id");
        const auto label = r.get_le<std::uint32_t>("record label");
        if (label >= classes)
            fail(path, "record " + std::to_string(rec) + ": label " + std::to_string(label) +
                           " >= declared class count " + std::to_string(classes));
        for (std::uint32_t i = 0; i < dim; ++i) values[i] = r.get_le<float>("record value");
        for (float v : values)
            if (!std::isfinite(v))
                fail(path, "record " + std::to_string(rec) + ": non-finite value");
        try {
            ds.append(id, static_cast<std::int32_t>(label), values);
        } catch (const DatasetError& e) {
            fail(path, "record " + std::to_string(rec) + ": " + e.what());
        }
    }
    if (!r.at_end()) fail(path, "trailing bytes after last record");
    return ds;
}

void save_binary(const FeatureDataset& ds, const std::filesystem::path& path) {
    std::string out;
    out.reserve(32 + ds.size() * (12 + static_cast<std::size_t>(ds.dim()) * 4));
    put_bytes(out, kMagic, 4);
    put_le<std::uint16_t>(out, kVersion);
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(ds.space()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ds.num_classes()));
    put_le<std::uint64_t>(out, ds.size());
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ds.dim()));
    for (std::size_t r = 0; r < ds.size(); ++r) {
        put_le<std::uint64_t>(out, ds.id(r));
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ds.label(r)));
        for (float v : ds.point(r)) put_le<float>(out, v);
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(path, "cannot open for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) fail(path, "write failure");
}

}  // namespace

FileFormat format_from_string(const std::string& name) {
    if (name == "csv") return FileFormat::csv;
    if (name == "binary" || name == "bin") return FileFormat::binary;
    throw DatasetIoError("unknown dataset format '" + name + "'");
}

FeatureDataset load_dataset(const std::filesystem::path& path, FileFormat format) {
    return format == FileFormat::csv ? load_csv(path) : load_binary(path);
}

void save_dataset(const FeatureDataset& ds, const std::filesystem::path& path,
                  FileFormat format) {
    if (format == FileFormat::csv)
        save_csv(ds, path);
    else
        save_binary(ds, path);
}

}  // namespace poisonlab
