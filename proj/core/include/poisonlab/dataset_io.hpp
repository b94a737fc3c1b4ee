#pragma once

#include <filesystem>
#include <stdexcept>

#include "poisonlab/dataset.hpp"

namespace poisonlab {

enum class FileFormat { csv, binary };

FileFormat format_from_string(const std::string& name);

struct DatasetIoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// CSV layout: header `d=<int>,C=<int>,space=<input|feature>`, then one line
// per point `id,label,v1,...,vd`. Rows may omit the id column (width d+1),
// in which case ids are assigned 0..n-1; mixing widths is an error.
// Binary layout: magic "FPDS", u16 version=1, u8 space, u32 C, u64 n, u32 d,
// then n records of (u64 id, u32 label, d x f32), all little-endian.
FeatureDataset load_dataset(const std::filesystem::path& path, FileFormat format);
void save_dataset(const FeatureDataset& ds, const std::filesystem::path& path,
                  FileFormat format);

}  // namespace poisonlab
