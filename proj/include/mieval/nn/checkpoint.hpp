#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mieval/errors.hpp"
#include "mieval/nn/tensor.hpp"

namespace mieval::nn {

/// One named tensor inside a checkpoint: dims plus raw little-endian values.
struct TensorBlob {
    enum class Dtype : std::uint8_t { F32 = 0, F64 = 1, I64 = 2 };

    std::string name;
    Dtype dtype = Dtype::F32;
    std::vector<std::int64_t> dims;
    std::vector<std::uint8_t> raw;

    std::size_t element_count() const;
};

/// Ordered container; order is part of the format so round-trips are exact.
using Checkpoint = std::vector<TensorBlob>;

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);

void write_checkpoint_file(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint_file(const std::filesystem::path& path);

const TensorBlob* find_blob(const Checkpoint& ckpt, std::string_view name);

template <typename T>
TensorBlob to_blob(const std::string& name, const Tensor<T>& t) {
    TensorBlob blob;
    blob.name = name;
    blob.dtype = sizeof(T) == 4 ? TensorBlob::Dtype::F32 : TensorBlob::Dtype::F64;
    blob.dims = {t.n, t.c, t.h, t.w};
    blob.raw.resize(t.v.size() * sizeof(T));
    std::memcpy(blob.raw.data(), t.v.data(), blob.raw.size());
    return blob;
}

inline TensorBlob scalar_blob(const std::string& name, std::int64_t value) {
    TensorBlob blob;
    blob.name = name;
    blob.dtype = TensorBlob::Dtype::I64;
    blob.dims = {1};
    blob.raw.resize(sizeof(std::int64_t));
    std::memcpy(blob.raw.data(), &value, sizeof(value));
    return blob;
}

template <typename T>
void from_blob(const TensorBlob& blob, Tensor<T>& out) {
    const auto expected =
        sizeof(T) == 4 ? TensorBlob::Dtype::F32 : TensorBlob::Dtype::F64;
    if (blob.dtype != expected) {
        throw DataError("checkpoint tensor " + blob.name + " has wrong dtype");
    }
    if (blob.dims.size() != 4) {
        throw DataError("checkpoint tensor " + blob.name + " is not rank 4");
    }
    Tensor<T> t(static_cast<int>(blob.dims[0]), static_cast<int>(blob.dims[1]),
                static_cast<int>(blob.dims[2]), static_cast<int>(blob.dims[3]));
    if (blob.raw.size() != t.v.size() * sizeof(T)) {
        throw DataError("checkpoint tensor " + blob.name + " has wrong payload size");
    }
    std::memcpy(t.v.data(), blob.raw.data(), blob.raw.size());
    out = std::move(t);
}

inline std::int64_t scalar_from_blob(const TensorBlob& blob) {
    if (blob.dtype != TensorBlob::Dtype::I64 || blob.raw.size() != sizeof(std::int64_t)) {
        throw DataError("checkpoint scalar " + blob.name + " malformed");
    }
    std::int64_t value;
    std::memcpy(&value, blob.raw.data(), sizeof(value));
    return value;
}

}  // namespace mieval::nn
