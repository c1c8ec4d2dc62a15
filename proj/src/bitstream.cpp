// Copyright 2026 The uarnvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "uarnvc/bitstream.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <limits>

#include "json.hpp"

#include "uarnvc/bytes.hpp"
#include "uarnvc/error.hpp"

namespace uarnvc::bs {

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
    uLong c = ::crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed in chunks.
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        const std::size_t n = std::min<std::size_t>(bytes.size() - pos, std::numeric_limits<uInt>::max());
        c = ::crc32(c, bytes.data() + pos, static_cast<uInt>(n));
        pos += n;
    }
    return static_cast<std::uint32_t>(c);
}

namespace {

std::string at(std::size_t off) { return " at offset " + std::to_string(off); }

std::vector<std::uint8_t> encode_body(const BitstreamHeader& h) {
    bytes::Writer w;
    w.u32(h.width);
    w.u32(h.height);
    w.u32(h.frames);
    w.u32(h.gop);
    w.u32(h.gom);
    w.u64(h.seed);
    w.str(h.backbone_config);
    w.u32(h.layer_count);
    w.u32(static_cast<std::uint32_t>(h.models.size()));
    for (const auto& m : h.models) {
        if (m.layers.size() != h.layer_count) {
            throw std::invalid_argument("write_bitstream: model " + std::to_string(m.index) + " has " +
                                        std::to_string(m.layers.size()) + " layer records, header declares " +
                                        std::to_string(h.layer_count));
        }
        w.u32(m.index);
        w.u8(static_cast<std::uint8_t>(m.role));
        if (m.role == Role::P) w.f32(m.epsilon);
        for (const auto& l : m.layers) {
            w.f32(l.step);
            w.f32(l.mu);
            w.f32(l.sigma);
            w.u16(l.bound);
        }
        w.u32(m.payload_bytes);
        w.u32(m.payload_crc);
    }
    return w.take();
}

BitstreamHeader decode_body(std::span<const std::uint8_t> body, std::size_t base) {
    bytes::Reader r(body, base);
    BitstreamHeader h;
    h.width = r.u32();
    h.height = r.u32();
    h.frames = r.u32();
    h.gop = r.u32();
    h.gom = r.u32();
    h.seed = r.u64();
    h.backbone_config = r.str();
    h.layer_count = r.u32();
    const std::size_t model_off = r.offset();
    const std::uint32_t n_models = r.u32();
    // Each record takes at least 13 + 14 * layers bytes.
    const std::size_t min_rec = 13 + 14 * static_cast<std::size_t>(h.layer_count);
    if (static_cast<std::size_t>(n_models) * min_rec > r.remaining()) {
        throw DataError("header declares " + std::to_string(n_models) + " models but only " +
                        std::to_string(r.remaining()) + " header bytes remain" + at(model_off));
    }
    h.models.resize(n_models);
    for (auto& m : h.models) {
        m.index = r.u32();
        const std::size_t role_off = r.offset();
        const std::uint8_t role = r.u8();
        if (role > 1) throw DataError("invalid model role " + std::to_string(role) + at(role_off));
        m.role = static_cast<Role>(role);
        if (m.role == Role::P) m.epsilon = r.f32();
        m.layers.resize(h.layer_count);
        for (auto& l : m.layers) {
            l.step = r.f32();
            l.mu = r.f32();
            l.sigma = r.f32();
            l.bound = r.u16();
        }
        m.payload_bytes = r.u32();
        m.payload_crc = r.u32();
    }
    if (r.remaining() != 0) {
        throw DataError("header length mismatch: " + std::to_string(r.remaining()) + " trailing bytes" +
                        at(r.offset()));
    }
    return h;
}

struct Preamble {
    std::uint16_t version;
    std::uint32_t body_len;
    std::uint32_t body_crc;
};

Preamble parse_preamble(std::span<const std::uint8_t> b) {
    if (b.size() < kPreambleBytes) {
        throw DataError("truncated input" + at(b.size()) + ": preamble needs " + std::to_string(kPreambleBytes) +
                        " bytes");
    }
    if (std::memcmp(b.data(), kMagic, 4) != 0) throw DataError("bad magic" + at(0));
    bytes::Reader r(b.subspan(4, kPreambleBytes - 4), 4);
    Preamble p{};
    p.version = r.u16();
    if (p.version != kVersion) {
        throw DataError("unsupported version " + std::to_string(p.version) + " (expected " +
                        std::to_string(kVersion) + ")" + at(4));
    }
    const std::uint16_t flags = r.u16();
    if (flags != 0) throw DataError("unknown flags " + std::to_string(flags) + at(6));
    p.body_len = r.u32();
    p.body_crc = r.u32();
    return p;
}

} // namespace

std::vector<std::uint8_t> write_bitstream(BitstreamHeader header,
                                          const std::vector<std::vector<std::uint8_t>>& payloads) {
    if (payloads.size() != header.models.size()) {
        throw std::invalid_argument("write_bitstream: " + std::to_string(payloads.size()) + " payloads for " +
                                    std::to_string(header.models.size()) + " models");
    }
    for (std::size_t i = 0; i < payloads.size(); ++i) {
        header.models[i].payload_bytes = static_cast<std::uint32_t>(payloads[i].size());
        header.models[i].payload_crc = crc32(payloads[i]);
    }
    const auto body = encode_body(header);
    bytes::Writer w;
    w.raw(std::span(reinterpret_cast<const std::uint8_t*>(kMagic), 4));
    w.u16(kVersion);
    w.u16(0);
    w.u32(static_cast<std::uint32_t>(body.size()));
    w.u32(crc32(body));
    w.raw(body);
    for (const auto& p : payloads) w.raw(p);
    return w.take();
}

ParsedBitstream read_bitstream(std::span<const std::uint8_t> bytes) {
    MemorySource src(bytes);
    auto view = read_header(src);
    ParsedBitstream out;
    out.payloads.reserve(view.header.models.size());
    for (std::size_t i = 0; i < view.header.models.size(); ++i) out.payloads.push_back(read_payload(src, view, i));
    out.header = std::move(view.header);
    return out;
}

std::vector<std::uint8_t> MemorySource::read(std::size_t offset, std::size_t n) {
    if (offset > bytes_.size() || bytes_.size() - offset < n) {
        throw DataError("truncated input" + at(offset) + ": need " + std::to_string(n) + " bytes, have " +
                        std::to_string(offset > bytes_.size() ? 0 : bytes_.size() - offset));
    }
    return {bytes_.begin() + static_cast<std::ptrdiff_t>(offset),
            bytes_.begin() + static_cast<std::ptrdiff_t>(offset + n)};
}

FileSource::FileSource(const std::string& path) : path_(path) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) throw DataError("cannot open '" + path + "'");
    size_ = static_cast<std::size_t>(f.tellg());
}

std::vector<std::uint8_t> FileSource::read(std::size_t offset, std::size_t n) {
    if (offset > size_ || size_ - offset < n) {
        throw DataError("truncated input" + at(offset) + ": need " + std::to_string(n) + " bytes, have " +
                        std::to_string(offset > size_ ? 0 : size_ - offset));
    }
    std::ifstream f(path_, std::ios::binary);
    if (!f) throw DataError("cannot open '" + path_ + "'");
    std::vector<std::uint8_t> out(n);
    f.seekg(static_cast<std::streamoff>(offset));
    f.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(f.gcount()) != n) throw DataError("short read from '" + path_ + "'" + at(offset));
    return out;
}

std::vector<std::uint8_t> TracingSource::read(std::size_t offset, std::size_t n) {
    reads_.emplace_back(offset, n);
    return inner_.read(offset, n);
}

HeaderView read_header(ByteSource& src) {
    const auto pre_bytes = src.read(0, std::min(kPreambleBytes, src.size()));
    const Preamble pre = parse_preamble(pre_bytes);
    const auto body = src.read(kPreambleBytes, pre.body_len);
    if (crc32(body) != pre.body_crc) throw DataError("header checksum mismatch" + at(kPreambleBytes));
    HeaderView view;
    view.header = decode_body(body, kPreambleBytes);
    view.header.version = pre.version;
    std::size_t off = kPreambleBytes + pre.body_len;
    for (const auto& m : view.header.models) {
        view.payload_offsets.push_back(off);
        off += m.payload_bytes;
    }
    if (off != src.size()) {
        throw DataError("length mismatch: header declares " + std::to_string(off) + " bytes, stream has " +
                        std::to_string(src.size()) + at(std::min(off, src.size())));
    }
    return view;
}

std::vector<std::uint8_t> read_payload(ByteSource& src, const HeaderView& view, std::size_t model) {
    if (model >= view.header.models.size()) {
        throw std::out_of_range("read_payload: model " + std::to_string(model) + " out of range");
    }
    const auto& rec = view.header.models[model];
    const std::size_t off = view.payload_offsets[model];
    auto p = src.read(off, rec.payload_bytes);
    if (crc32(p) != rec.payload_crc) {
        throw DataError("payload checksum mismatch for model " + std::to_string(model) + at(off));
    }
    return p;
}

std::string dump_header(const BitstreamHeader& h) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["magic"] = "UARN";
    j["version"] = h.version;
    j["width"] = h.width;
    j["height"] = h.height;
    j["frames"] = h.frames;
    j["gop"] = h.gop;
    j["gom"] = h.gom;
    j["seed"] = h.seed;
    j["backbone"] = h.backbone_config;
    j["layers"] = h.layer_count;
    ordered_json models = ordered_json::array();
    for (const auto& m : h.models) {
        ordered_json jm;
        jm["index"] = m.index;
        jm["role"] = m.role == Role::I ? "I" : "P";
        if (m.role == Role::P) jm["epsilon"] = m.epsilon;
        ordered_json layers = ordered_json::array();
        for (const auto& l : m.layers) {
            layers.push_back({{"step", l.step}, {"mu", l.mu}, {"sigma", l.sigma}, {"bound", l.bound}});
        }
        jm["layer_records"] = std::move(layers);
        jm["payload_bytes"] = m.payload_bytes;
        jm["payload_crc"] = m.payload_crc;
        models.push_back(std::move(jm));
    }
    j["models"] = std::move(models);
    return j.dump(2);
}

} // namespace uarnvc::bs
