#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mieval/errors.hpp"
#include "mieval/volume.hpp"

namespace mieval::io {

/// NIfTI-1 parse failure, one kind per documented rejection path.
class NiftiError : public DataError {
public:
    enum class Kind {
        BadHeaderSize,
        BigEndian,
        BadMagic,
        BadDims,
        UnsupportedDatatype,
        Truncated,
        InvalidLabel,
    };

    NiftiError(Kind kind, const std::string& msg) : DataError(msg), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// The header fields this reader interprets. Single-file little-endian
/// NIfTI-1 only; qform/sform are ignored beyond pixdim.
struct NiftiHeader {
    std::array<std::int16_t, 8> dim{};
    std::array<float, 8> pixdim{};
    std::int16_t datatype = 0;
    std::int16_t bitpix = 0;
    float scl_slope = 0.0f;
    float scl_inter = 0.0f;
    float vox_offset = 0.0f;
    std::array<char, 4> magic{};
};

inline constexpr std::int16_t kDtUint8 = 2;
inline constexpr std::int16_t kDtInt16 = 4;
inline constexpr std::int16_t kDtFloat32 = 16;

/// Parses and validates the 348-byte header of an (already decompressed) blob.
NiftiHeader parse_nifti_header(std::span<const std::uint8_t> bytes);

bool is_gzip(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> gzip_compress(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> gzip_decompress(std::span<const std::uint8_t> bytes);

/// Reads a single-file NIfTI-1 blob (optionally gzipped) as an image volume.
/// Values are scaled by scl_slope/scl_inter when scl_slope != 0.
Volume read_nifti_volume(std::span<const std::uint8_t> bytes, std::string case_id = {});

/// Same parse path as read_nifti_volume, with the additional requirement that
/// every (scaled) value is an integer in {0..4}.
LabelMap read_nifti_labels(std::span<const std::uint8_t> bytes);

/// Serializes as single-file NIfTI-1: float32 for images, uint8 for labels,
/// scl_slope=1, scl_inter=0, payload at offset 352.
std::vector<std::uint8_t> write_nifti(const Volume& v);
std::vector<std::uint8_t> write_nifti(const LabelMap& lm);

Volume read_nifti_volume_file(const std::filesystem::path& path, std::string case_id = {});
LabelMap read_nifti_labels_file(const std::filesystem::path& path);

/// Writes to disk; a ".gz" suffix selects gzip compression.
void write_nifti_file(const Volume& v, const std::filesystem::path& path);
void write_nifti_file(const LabelMap& lm, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace mieval::io
