#include "mieval/nn/checkpoint.hpp"

#include <fstream>

namespace mieval::nn {

namespace {

constexpr char kMagic[8] = {'M', 'I', 'E', 'V', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void append(std::vector<std::uint8_t>& out, T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T take(std::span<const std::uint8_t> bytes, std::size_t& pos) {
    if (pos + sizeof(T) > bytes.size()) throw DataError("checkpoint: truncated");
    T value;
    std::memcpy(&value, bytes.data() + pos, sizeof(T));
    pos += sizeof(T);
    return value;
}

}  // namespace

std::size_t TensorBlob::element_count() const {
    std::size_t n = 1;
    for (auto d : dims) n *= static_cast<std::size_t>(d);
    return n;
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 8);
    append<std::uint32_t>(out, kVersion);
    append<std::uint64_t>(out, ckpt.size());
    for (const auto& blob : ckpt) {
        append<std::uint32_t>(out, static_cast<std::uint32_t>(blob.name.size()));
        out.insert(out.end(), blob.name.begin(), blob.name.end());
        append<std::uint8_t>(out, static_cast<std::uint8_t>(blob.dtype));
        append<std::uint8_t>(out, static_cast<std::uint8_t>(blob.dims.size()));
        for (auto d : blob.dims) append<std::int64_t>(out, d);
        append<std::uint64_t>(out, blob.raw.size());
        out.insert(out.end(), blob.raw.begin(), blob.raw.end());
    }
    return out;
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 0;
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
        throw DataError("checkpoint: bad magic");
    }
    pos = 8;
    const auto version = take<std::uint32_t>(bytes, pos);
    if (version != kVersion) {
        throw DataError("checkpoint: unsupported version " + std::to_string(version));
    }
    const auto count = take<std::uint64_t>(bytes, pos);
    Checkpoint ckpt;
    ckpt.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        TensorBlob blob;
        const auto name_len = take<std::uint32_t>(bytes, pos);
        if (pos + name_len > bytes.size()) throw DataError("checkpoint: truncated name");
        blob.name.assign(reinterpret_cast<const char*>(bytes.data() + pos), name_len);
        pos += name_len;
        blob.dtype = static_cast<TensorBlob::Dtype>(take<std::uint8_t>(bytes, pos));
        const auto ndim = take<std::uint8_t>(bytes, pos);
        for (int d = 0; d < ndim; ++d) blob.dims.push_back(take<std::int64_t>(bytes, pos));
        const auto raw_len = take<std::uint64_t>(bytes, pos);
        if (pos + raw_len > bytes.size()) throw DataError("checkpoint: truncated payload");
        blob.raw.assign(bytes.begin() + pos, bytes.begin() + pos + raw_len);
        pos += raw_len;
        ckpt.push_back(std::move(blob));
    }
    return ckpt;
}

void write_checkpoint_file(const std::filesystem::path& path, const Checkpoint& ckpt) {
    const auto bytes = serialize_checkpoint(ckpt);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

Checkpoint read_checkpoint_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint " + path.string());
    std::vector<std::uint8_t> bytes(std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>{});
    return deserialize_checkpoint(bytes);
}

const TensorBlob* find_blob(const Checkpoint& ckpt, std::string_view name) {
    for (const auto& blob : ckpt) {
        if (blob.name == name) return &blob;
    }
    return nullptr;
}

}  // namespace mieval::nn
