#include "pktclass/corpus.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pktclass/rng.hpp"

namespace pktclass {

namespace {

std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open source file " + path.string());
    std::vector<uint8_t> data((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
    return data;
}

// Counter-mode PRF over (seed, file hash): block i = sha256(seed || hash || i).
std::vector<uint8_t> derive_key_material(uint64_t seed, const Digest256& file_hash,
                                         size_t length, uint32_t stream_tag) {
    std::vector<uint8_t> out;
    uint32_t counter = 0;
    while (out.size() < length) {
        std::vector<uint8_t> block;
        block.reserve(8 + 32 + 8);
        for (int b = 0; b < 8; ++b) block.push_back(static_cast<uint8_t>(seed >> (8 * b)));
        block.insert(block.end(), file_hash.begin(), file_hash.end());
        for (int b = 0; b < 4; ++b) block.push_back(static_cast<uint8_t>(stream_tag >> (8 * b)));
        for (int b = 0; b < 4; ++b) block.push_back(static_cast<uint8_t>(counter >> (8 * b)));
        const Digest256 d = sha256(block);
        out.insert(out.end(), d.begin(), d.end());
        ++counter;
    }
    out.resize(length);
    return out;
}

}  // namespace

SourceFile load_source_file(const std::filesystem::path& path) {
    const auto data = read_file_bytes(path);
    if (data.empty()) throw std::runtime_error("source file is empty: " + path.string());
    SourceFile f;
    f.path = path;
    f.size_bytes = data.size();
    f.content_hash = sha256(data);
    return f;
}

CorpusPartition partition_corpus(const std::vector<SourceFile>& files, uint64_t seed,
                                 const std::vector<CodecTemplate>& compression_codecs,
                                 const std::vector<CodecTemplate>& encryption_codecs) {
    if (compression_codecs.empty() || encryption_codecs.empty())
        throw std::invalid_argument("partition_corpus: both codec sets must be non-empty");
    if (files.size() < 2 || files.size() % 2 != 0)
        throw std::invalid_argument("partition_corpus: file count must be even and >= 2, got " +
                                    std::to_string(files.size()));
    const size_t per_group = files.size() / 2;
    if (per_group < compression_codecs.size() || per_group < encryption_codecs.size())
        throw std::invalid_argument("insufficient corpus: " + std::to_string(files.size()) +
                                    " files for " + std::to_string(compression_codecs.size()) +
                                    "+" + std::to_string(encryption_codecs.size()) + " codecs");

    // Canonical order: content hash, so permuting the input changes nothing.
    std::vector<SourceFile> sorted = files;
    std::sort(sorted.begin(), sorted.end(), [](const SourceFile& a, const SourceFile& b) {
        return std::memcmp(a.content_hash.data(), b.content_hash.data(), 32) < 0;
    });

    // Equal cardinality split, biggest files first, each to the lighter group.
    std::vector<const SourceFile*> by_size;
    by_size.reserve(sorted.size());
    for (const SourceFile& f : sorted) by_size.push_back(&f);
    std::stable_sort(by_size.begin(), by_size.end(),
                     [](const SourceFile* a, const SourceFile* b) {
                         return a->size_bytes > b->size_bytes;
                     });

    std::vector<const SourceFile*> comp_files, enc_files;
    uint64_t comp_bytes = 0, enc_bytes = 0;
    for (const SourceFile* f : by_size) {
        const bool comp_full = comp_files.size() >= per_group;
        const bool enc_full = enc_files.size() >= per_group;
        const bool to_comp = !comp_full && (enc_full || comp_bytes <= enc_bytes);
        if (to_comp) {
            comp_files.push_back(f);
            comp_bytes += f->size_bytes;
        } else {
            enc_files.push_back(f);
            enc_bytes += f->size_bytes;
        }
    }

    // Deal each group across its codec set: seeded shuffle, contiguous chunks
    // of floor(n/k), the remainder spread one-per-set over the last sets.
    auto assign = [seed](std::vector<const SourceFile*>& group,
                         const std::vector<CodecTemplate>& codecs, CodecKind kind,
                         const char* stage) {
        Rng rng(derive_seed(seed, stage));
        rng.shuffle(group);
        const size_t k = codecs.size();
        const size_t base = group.size() / k;
        const size_t remainder = group.size() % k;
        std::vector<std::pair<const SourceFile*, size_t>> assignment;  // file -> codec idx
        size_t cursor = 0;
        for (size_t c = 0; c < k; ++c) {
            size_t take = base + (c >= k - remainder ? 1 : 0);
            for (size_t i = 0; i < take; ++i) assignment.emplace_back(group[cursor++], c);
        }
        (void)kind;
        return assignment;
    };

    auto comp_assign = assign(comp_files, compression_codecs, CodecKind::Compression,
                              "partition-compression");
    auto enc_assign = assign(enc_files, encryption_codecs, CodecKind::Encryption,
                             "partition-encryption");

    CorpusPartition out;
    for (auto& [file, codec_idx] : comp_assign) {
        CorpusAssignment a;
        a.file = *file;
        a.codec.name = compression_codecs[codec_idx].name;
        a.codec.kind = CodecKind::Compression;
        a.codec.command_template = compression_codecs[codec_idx].command_template;
        out.compression_group.push_back(std::move(a));
    }
    for (auto& [file, codec_idx] : enc_assign) {
        CorpusAssignment a;
        a.file = *file;
        a.codec.name = encryption_codecs[codec_idx].name;
        a.codec.kind = CodecKind::Encryption;
        a.codec.command_template = encryption_codecs[codec_idx].command_template;
        a.codec.key = derive_key_material(seed, file->content_hash, 32, 1);
        a.codec.iv = derive_key_material(seed, file->content_hash, 16, 2);
        out.encryption_group.push_back(std::move(a));
    }
    return out;
}

EncodedFile encode(const SourceFile& file, const CodecSpec& codec) {
    const auto data = read_file_bytes(file.path);
    if (data.empty()) throw std::runtime_error("encode: source file is empty: " +
                                               file.path.string());

    EncodedFile enc;
    enc.source_hash = file.content_hash;
    enc.source_path = file.path;
    enc.codec = codec;
    enc.label = codec.kind == CodecKind::Compression ? 1 : 0;

    if (codec.is_external()) {
        enc.payload = run_external_codec(codec.name, codec.command_template, data);
    } else if (codec.name == kDeflateCodecName) {
        enc.payload = deflate_compress(data);
    } else if (codec.name == kAes256CtrCodecName) {
        enc.payload = aes256ctr_apply(codec.key, codec.iv, data);
    } else {
        throw std::invalid_argument("encode: unknown built-in codec '" + codec.name + "'");
    }
    return enc;
}

bool decode_check(const EncodedFile& encoded) {
    if (encoded.codec.is_external())
        throw std::invalid_argument("decode_check: unsupported check for external codec '" +
                                    encoded.codec.name + "'");
    const auto source = read_file_bytes(encoded.source_path);
    std::vector<uint8_t> decoded;
    if (encoded.codec.name == kDeflateCodecName) {
        try {
            decoded = deflate_decompress(encoded.payload);
        } catch (const std::runtime_error&) {
            return false;  // corrupt stream maps to a failed check
        }
    } else if (encoded.codec.name == kAes256CtrCodecName) {
        decoded = aes256ctr_apply(encoded.codec.key, encoded.codec.iv, encoded.payload);
    } else {
        throw std::invalid_argument("decode_check: unknown built-in codec '" +
                                    encoded.codec.name + "'");
    }
    return decoded == source;
}

std::string payload_filename(const ManifestRecord& rec) {
    return hex_encode(std::span<const uint8_t>(rec.source_hash.data(), 8)) + "." +
           rec.codec_name + ".bin";
}

std::string payload_filename(const EncodedFile& enc) {
    return hex_encode(std::span<const uint8_t>(enc.source_hash.data(), 8)) + "." +
           enc.codec.name + ".bin";
}

void write_manifest(const std::vector<EncodedFile>& encoded, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_manifest: cannot open " + path.string());
    for (const EncodedFile& e : encoded) {
        out << hex_encode(e.source_hash) << ' ' << e.codec.name << ' ' << int(e.label) << ' '
            << e.payload.size();
        if (e.codec.kind == CodecKind::Encryption)
            out << ' ' << hex_encode(e.codec.key) << ' ' << hex_encode(e.codec.iv);
        out << '\n';
    }
    if (!out) throw std::runtime_error("write_manifest: write failed for " + path.string());
}

std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_manifest: cannot open " + path.string());
    std::vector<ManifestRecord> records;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string hash_hex;
        ManifestRecord rec;
        int label = -1;
        if (!(ss >> hash_hex >> rec.codec_name >> label >> rec.payload_length))
            throw std::runtime_error("read_manifest: line " + std::to_string(line_no) +
                                     ": malformed record");
        if (label != 0 && label != 1)
            throw std::runtime_error("read_manifest: line " + std::to_string(line_no) +
                                     ": label must be 0 or 1");
        rec.label = static_cast<uint8_t>(label);
        const auto hash_bytes = hex_decode(hash_hex);
        if (hash_bytes.size() != 32)
            throw std::runtime_error("read_manifest: line " + std::to_string(line_no) +
                                     ": hash must be 64 hex chars");
        std::copy(hash_bytes.begin(), hash_bytes.end(), rec.source_hash.begin());
        std::string key_hex, iv_hex;
        if (ss >> key_hex >> iv_hex) {
            rec.key = hex_decode(key_hex);
            rec.iv = hex_decode(iv_hex);
        }
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace pktclass
