#include "mieval/nifti.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>

namespace mieval::io {

namespace {

constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kVoxOffset = 352;

template <typename T>
T read_le(std::span<const std::uint8_t> bytes, std::size_t offset) {
    T value;
    std::memcpy(&value, bytes.data() + offset, sizeof(T));
    return value;  // host is little-endian; big-endian files are rejected upfront
}

template <typename T>
void write_le(std::vector<std::uint8_t>& out, std::size_t offset, T value) {
    std::memcpy(out.data() + offset, &value, sizeof(T));
}

int bytes_per_voxel(std::int16_t datatype) {
    switch (datatype) {
        case kDtUint8: return 1;
        case kDtInt16: return 2;
        case kDtFloat32: return 4;
        default: return 0;
    }
}

struct DecodedImage {
    GridShape shape;
    Spacing spacing;
    std::vector<double> values;
};

DecodedImage decode(std::span<const std::uint8_t> raw, std::string_view what) {
    std::vector<std::uint8_t> inflated;
    std::span<const std::uint8_t> bytes = raw;
    if (is_gzip(raw)) {
        inflated = gzip_decompress(raw);
        bytes = inflated;
    }

    const NiftiHeader hdr = parse_nifti_header(bytes);

    const int ndim = hdr.dim[0];
    const int w = hdr.dim[1];
    const int h = hdr.dim[2];
    const int s = ndim == 3 ? hdr.dim[3] : 1;

    Spacing spacing;
    spacing.dx = hdr.pixdim[1];
    spacing.dy = hdr.pixdim[2];
    spacing.dz = ndim == 3 ? hdr.pixdim[3] : 1.0;

    const std::size_t count = static_cast<std::size_t>(w) * h * s;
    const std::size_t bpv = bytes_per_voxel(hdr.datatype);
    const std::size_t offset = static_cast<std::size_t>(hdr.vox_offset);
    if (bytes.size() < offset + count * bpv) {
        throw NiftiError(NiftiError::Kind::Truncated,
                         std::string(what) + ": payload truncated (need " +
                             std::to_string(offset + count * bpv) + " bytes, have " +
                             std::to_string(bytes.size()) + ")");
    }

    std::vector<double> values(count);
    const std::uint8_t* p = bytes.data() + offset;
    switch (hdr.datatype) {
        case kDtUint8:
            for (std::size_t i = 0; i < count; ++i) values[i] = p[i];
            break;
        case kDtInt16:
            for (std::size_t i = 0; i < count; ++i) {
                std::int16_t v;
                std::memcpy(&v, p + 2 * i, 2);
                values[i] = v;
            }
            break;
        case kDtFloat32:
            for (std::size_t i = 0; i < count; ++i) {
                float v;
                std::memcpy(&v, p + 4 * i, 4);
                values[i] = v;
            }
            break;
        default:
            break;  // unreachable, parse_nifti_header rejects other codes
    }

    if (hdr.scl_slope != 0.0f) {
        for (double& v : values) v = v * hdr.scl_slope + hdr.scl_inter;
    }

    // NIfTI stores x fastest, then y, then z, which matches the slice-major
    // (S, H, W) layout with W fastest.
    return DecodedImage{GridShape{s, h, w}, spacing, std::move(values)};
}

std::vector<std::uint8_t> make_header(const GridShape& shape, const Spacing& spacing,
                                      std::int16_t datatype, std::int16_t bitpix) {
    std::vector<std::uint8_t> out(kVoxOffset, 0);
    write_le<std::int32_t>(out, 0, static_cast<std::int32_t>(kHeaderSize));
    const std::int16_t dim[8] = {3,
                                 static_cast<std::int16_t>(shape.w),
                                 static_cast<std::int16_t>(shape.h),
                                 static_cast<std::int16_t>(shape.s),
                                 1, 1, 1, 1};
    for (int i = 0; i < 8; ++i) write_le<std::int16_t>(out, 40 + 2 * i, dim[i]);
    write_le<std::int16_t>(out, 70, datatype);
    write_le<std::int16_t>(out, 72, bitpix);
    const float pixdim[8] = {1.0f,
                             static_cast<float>(spacing.dx),
                             static_cast<float>(spacing.dy),
                             static_cast<float>(spacing.dz),
                             0.0f, 0.0f, 0.0f, 0.0f};
    for (int i = 0; i < 8; ++i) write_le<float>(out, 76 + 4 * i, pixdim[i]);
    write_le<float>(out, 108, static_cast<float>(kVoxOffset));
    write_le<float>(out, 112, 1.0f);  // scl_slope
    write_le<float>(out, 116, 0.0f);  // scl_inter
    out[344] = 'n';
    out[345] = '+';
    out[346] = '1';
    out[347] = '\0';
    return out;
}

}  // namespace

NiftiHeader parse_nifti_header(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderSize) {
        throw NiftiError(NiftiError::Kind::BadHeaderSize,
                         "file shorter than the 348-byte NIfTI-1 header");
    }
    const auto sizeof_hdr = read_le<std::int32_t>(bytes, 0);
    if (sizeof_hdr != static_cast<std::int32_t>(kHeaderSize)) {
        if (__builtin_bswap32(static_cast<std::uint32_t>(sizeof_hdr)) == kHeaderSize) {
            throw NiftiError(NiftiError::Kind::BigEndian,
                             "big-endian NIfTI-1 headers are not supported");
        }
        throw NiftiError(NiftiError::Kind::BadHeaderSize,
                         "sizeof_hdr is " + std::to_string(sizeof_hdr) + ", expected 348");
    }

    NiftiHeader hdr;
    for (int i = 0; i < 8; ++i) hdr.dim[i] = read_le<std::int16_t>(bytes, 40 + 2 * i);
    hdr.datatype = read_le<std::int16_t>(bytes, 70);
    hdr.bitpix = read_le<std::int16_t>(bytes, 72);
    for (int i = 0; i < 8; ++i) hdr.pixdim[i] = read_le<float>(bytes, 76 + 4 * i);
    hdr.vox_offset = read_le<float>(bytes, 108);
    hdr.scl_slope = read_le<float>(bytes, 112);
    hdr.scl_inter = read_le<float>(bytes, 116);
    std::memcpy(hdr.magic.data(), bytes.data() + 344, 4);

    const std::array<char, 4> expected{'n', '+', '1', '\0'};
    if (hdr.magic != expected) {
        throw NiftiError(NiftiError::Kind::BadMagic,
                         "magic is not \"n+1\" (single-file NIfTI-1 required)");
    }
    if (hdr.dim[0] != 2 && hdr.dim[0] != 3) {
        throw NiftiError(NiftiError::Kind::BadDims,
                         "dim[0] = " + std::to_string(hdr.dim[0]) +
                             ", only 2D and 3D images are supported");
    }
    for (int i = 1; i <= hdr.dim[0]; ++i) {
        if (hdr.dim[i] < 1) {
            throw NiftiError(NiftiError::Kind::BadDims,
                             "dim[" + std::to_string(i) + "] must be >= 1");
        }
        if (!(hdr.pixdim[i] > 0.0f) || !std::isfinite(hdr.pixdim[i])) {
            throw NiftiError(NiftiError::Kind::BadDims,
                             "pixdim[" + std::to_string(i) + "] must be > 0");
        }
    }
    if (bytes_per_voxel(hdr.datatype) == 0) {
        throw NiftiError(NiftiError::Kind::UnsupportedDatatype,
                         "datatype code " + std::to_string(hdr.datatype) +
                             " not in {uint8, int16, float32}");
    }
    if (hdr.bitpix != 8 * bytes_per_voxel(hdr.datatype)) {
        throw NiftiError(NiftiError::Kind::UnsupportedDatatype,
                         "bitpix " + std::to_string(hdr.bitpix) +
                             " inconsistent with datatype");
    }
    if (hdr.vox_offset < kHeaderSize || !std::isfinite(hdr.vox_offset)) {
        throw NiftiError(NiftiError::Kind::Truncated, "vox_offset points inside the header");
    }
    return hdr;
}

bool is_gzip(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b;
}

std::vector<std::uint8_t> gzip_compress(std::span<const std::uint8_t> bytes) {
    z_stream zs{};
    if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 15 + 16, 8,
                     Z_DEFAULT_STRATEGY) != Z_OK) {
        throw DataError("gzip: deflateInit2 failed");
    }
    zs.next_in = const_cast<Bytef*>(bytes.data());
    zs.avail_in = static_cast<uInt>(bytes.size());
    std::vector<std::uint8_t> out;
    std::uint8_t buf[65536];
    int rc;
    do {
        zs.next_out = buf;
        zs.avail_out = sizeof(buf);
        rc = deflate(&zs, Z_FINISH);
        out.insert(out.end(), buf, buf + (sizeof(buf) - zs.avail_out));
    } while (rc == Z_OK);
    deflateEnd(&zs);
    if (rc != Z_STREAM_END) throw DataError("gzip: compression failed");
    return out;
}

std::vector<std::uint8_t> gzip_decompress(std::span<const std::uint8_t> bytes) {
    z_stream zs{};
    if (inflateInit2(&zs, 15 + 32) != Z_OK) {
        throw DataError("gzip: inflateInit2 failed");
    }
    zs.next_in = const_cast<Bytef*>(bytes.data());
    zs.avail_in = static_cast<uInt>(bytes.size());
    std::vector<std::uint8_t> out;
    std::uint8_t buf[65536];
    int rc;
    do {
        zs.next_out = buf;
        zs.avail_out = sizeof(buf);
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw DataError("gzip: corrupt compressed stream");
        }
        out.insert(out.end(), buf, buf + (sizeof(buf) - zs.avail_out));
    } while (rc != Z_STREAM_END);
    inflateEnd(&zs);
    return out;
}

Volume read_nifti_volume(std::span<const std::uint8_t> bytes, std::string case_id) {
    DecodedImage img = decode(bytes, "image");
    std::vector<float> data(img.values.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        data[i] = static_cast<float>(img.values[i]);
    }
    return Volume(img.shape, img.spacing, std::move(data), std::move(case_id));
}

LabelMap read_nifti_labels(std::span<const std::uint8_t> bytes) {
    DecodedImage img = decode(bytes, "labels");
    std::vector<std::uint8_t> labels(img.values.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double v = img.values[i];
        const double rounded = std::nearbyint(v);
        if (!std::isfinite(v) || std::abs(v - rounded) > 1e-6 || rounded < 0 ||
            rounded >= kNumLabelCodes) {
            throw NiftiError(NiftiError::Kind::InvalidLabel,
                             "label value " + std::to_string(v) +
                                 " is not an integer in {0..4}");
        }
        labels[i] = static_cast<std::uint8_t>(rounded);
    }
    return LabelMap(img.shape, img.spacing, std::move(labels));
}

std::vector<std::uint8_t> write_nifti(const Volume& v) {
    std::vector<std::uint8_t> out = make_header(v.shape(), v.spacing(), kDtFloat32, 32);
    const std::size_t payload = v.data().size() * 4;
    out.resize(kVoxOffset + payload);
    std::memcpy(out.data() + kVoxOffset, v.data().data(), payload);
    return out;
}

std::vector<std::uint8_t> write_nifti(const LabelMap& lm) {
    std::vector<std::uint8_t> out = make_header(lm.shape(), lm.spacing(), kDtUint8, 8);
    out.insert(out.end(), lm.labels().begin(), lm.labels().end());
    return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                     std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("short write to " + path.string());
}

Volume read_nifti_volume_file(const std::filesystem::path& path, std::string case_id) {
    return read_nifti_volume(read_file_bytes(path), std::move(case_id));
}

LabelMap read_nifti_labels_file(const std::filesystem::path& path) {
    return read_nifti_labels(read_file_bytes(path));
}

namespace {

void write_maybe_gz(const std::filesystem::path& path, std::vector<std::uint8_t> bytes) {
    if (path.extension() == ".gz") {
        write_file_bytes(path, gzip_compress(bytes));
    } else {
        write_file_bytes(path, bytes);
    }
}

}  // namespace

void write_nifti_file(const Volume& v, const std::filesystem::path& path) {
    write_maybe_gz(path, write_nifti(v));
}

void write_nifti_file(const LabelMap& lm, const std::filesystem::path& path) {
    write_maybe_gz(path, write_nifti(lm));
}

}  // namespace mieval::io
