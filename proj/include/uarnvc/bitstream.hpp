// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

// Bitstream container. All integers little-endian; reals are IEEE-754 binary32.
//
//   offset 0   char[4]  magic "UARN"
//          4   u16      version (kVersion)
//          6   u16      flags (0)
//          8   u32      header body length L
//         12   u32      CRC-32 of the header body
//         16   L bytes  header body
//       16+L   ...      model payloads, concatenated in model order
//
// Header body:
//   u32 W, u32 H, u32 T, u32 p, u32 m, u64 global seed
//   u32 n + n bytes  backbone config text
//   u32 layer count, u32 model count
//   per model:
//     u32 model index, u8 role (0 = I, 1 = P), [f32 epsilon, P only]
//     per layer: f32 step, f32 mu, f32 sigma, u16 bound
//     u32 payload length, u32 payload CRC-32

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace uarnvc::bs {

inline constexpr char kMagic[4] = {'U', 'A', 'R', 'N'};
inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::size_t kPreambleBytes = 16;

enum class Role : std::uint8_t { I = 0, P = 1 };

struct LayerRecord {
    float step = 1.0f;
    float mu = 0.0f;
    float sigma = 1.0f;
    std::uint16_t bound = 1;
    bool operator==(const LayerRecord&) const = default;
};

struct ModelRecord {
    std::uint32_t index = 0;
    Role role = Role::I;
    float epsilon = 0.0f;  // P-models only
    std::vector<LayerRecord> layers;
    std::uint32_t payload_bytes = 0;
    std::uint32_t payload_crc = 0;
    bool operator==(const ModelRecord&) const = default;
};

struct BitstreamHeader {
    std::uint16_t version = kVersion;
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint32_t frames = 0;
    std::uint32_t gop = 0;
    std::uint32_t gom = 0;
    std::uint64_t seed = 0;
    std::string backbone_config;
    std::uint32_t layer_count = 0;
    std::vector<ModelRecord> models;
    bool operator==(const BitstreamHeader&) const = default;
};

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

// Fills payload_bytes / payload_crc of every record from `payloads`.
std::vector<std::uint8_t> write_bitstream(BitstreamHeader header,
                                          const std::vector<std::vector<std::uint8_t>>& payloads);

struct ParsedBitstream {
    BitstreamHeader header;
    std::vector<std::vector<std::uint8_t>> payloads;
};

// Validates magic, version, lengths and every CRC. Errors are DataError with
// the byte offset of the problem.
ParsedBitstream read_bitstream(std::span<const std::uint8_t> bytes);

// Random-access reading through a byte source.
class ByteSource {
public:
    virtual ~ByteSource() = default;
    virtual std::size_t size() const = 0;
    // Throws DataError when [offset, offset + n) is not inside the source.
    virtual std::vector<std::uint8_t> read(std::size_t offset, std::size_t n) = 0;
};

class MemorySource : public ByteSource {
public:
    explicit MemorySource(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
    std::size_t size() const override { return bytes_.size(); }
    std::vector<std::uint8_t> read(std::size_t offset, std::size_t n) override;

private:
    std::span<const std::uint8_t> bytes_;
};

class FileSource : public ByteSource {
public:
    explicit FileSource(const std::string& path);
    std::size_t size() const override { return size_; }
    std::vector<std::uint8_t> read(std::size_t offset, std::size_t n) override;

private:
    std::string path_;
    std::size_t size_ = 0;
};

// Records every byte range requested from the wrapped source.
class TracingSource : public ByteSource {
public:
    explicit TracingSource(ByteSource& inner) : inner_(inner) {}
    std::size_t size() const override { return inner_.size(); }
    std::vector<std::uint8_t> read(std::size_t offset, std::size_t n) override;
    const std::vector<std::pair<std::size_t, std::size_t>>& reads() const noexcept { return reads_; }

private:
    ByteSource& inner_;
    std::vector<std::pair<std::size_t, std::size_t>> reads_;
};

struct HeaderView {
    BitstreamHeader header;
    // Absolute offset of each model payload.
    std::vector<std::size_t> payload_offsets;
};

// Reads the preamble and header body only; checks the header CRC and that the
// declared payload lengths match the source size.
HeaderView read_header(ByteSource& src);

// Reads and CRC-checks one model payload.
std::vector<std::uint8_t> read_payload(ByteSource& src, const HeaderView& view, std::size_t model);

// Structured (JSON) rendering of the header.
std::string dump_header(const BitstreamHeader& header);

} // namespace uarnvc::bs
