#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pktclass/hash.hpp"

namespace pktclass {

enum class CodecKind { Compression, Encryption };

struct SourceFile {
    std::filesystem::path path;
    uint64_t size_bytes = 0;
    Digest256 content_hash{};
};

// Loads size and content hash; rejects empty files.
SourceFile load_source_file(const std::filesystem::path& path);

struct CodecSpec {
    std::string name;  // deflate | aes256ctr | any registered external name
    CodecKind kind = CodecKind::Compression;
    std::vector<uint8_t> key;  // encryption only
    std::vector<uint8_t> iv;   // encryption only
    std::string command_template;  // external only; {in}/{out} placeholders

    bool is_external() const { return !command_template.empty(); }
};

struct EncodedFile {
    Digest256 source_hash{};
    std::filesystem::path source_path;
    CodecSpec codec;
    std::vector<uint8_t> payload;
    uint8_t label = 0;  // 1 = compressed, 0 = encrypted
};

// A codec roster entry before key material is attached.
struct CodecTemplate {
    std::string name;
    CodecKind kind = CodecKind::Compression;
    std::string command_template;  // empty for built-ins
};

constexpr const char* kDeflateCodecName = "deflate";
constexpr const char* kAes256CtrCodecName = "aes256ctr";

struct CorpusAssignment {
    SourceFile file;
    CodecSpec codec;
};

struct CorpusPartition {
    std::vector<CorpusAssignment> compression_group;
    std::vector<CorpusAssignment> encryption_group;
};

// Splits the corpus into equal-cardinality compression/encryption groups
// (greedy byte balancing), then deals each group across its codec set,
// remainder files one-per-set. Deterministic in (files, seed): input order
// is canonicalized by content hash first. Encryption assignments carry
// per-file key/IV material derived from the seed.
CorpusPartition partition_corpus(const std::vector<SourceFile>& files, uint64_t seed,
                                 const std::vector<CodecTemplate>& compression_codecs,
                                 const std::vector<CodecTemplate>& encryption_codecs);

// Runs the codec over the file contents. The payload keeps every codec
// header byte the codec emits.
EncodedFile encode(const SourceFile& file, const CodecSpec& codec);

// True iff decoding the payload reproduces the source bytes exactly.
// Built-in codecs only; external codecs are rejected.
bool decode_check(const EncodedFile& encoded);

// Built-in codec primitives (raw RFC 1951 streams; CTR keystream XOR).
std::vector<uint8_t> deflate_compress(std::span<const uint8_t> data);
std::vector<uint8_t> deflate_decompress(std::span<const uint8_t> data);
std::vector<uint8_t> aes256ctr_apply(std::span<const uint8_t> key, std::span<const uint8_t> iv,
                                     std::span<const uint8_t> data);

// External command adapter: substitutes {in}/{out} with temp file paths,
// runs through the shell, returns the output file bytes.
std::vector<uint8_t> run_external_codec(const std::string& codec_name,
                                        const std::string& command_template,
                                        std::span<const uint8_t> input);

// Manifest: one line per encoded file —
//   <source sha256 hex> <codec> <label> <payload length> [<key hex> <iv hex>]
struct ManifestRecord {
    Digest256 source_hash{};
    std::string codec_name;
    uint8_t label = 0;
    uint64_t payload_length = 0;
    std::vector<uint8_t> key;
    std::vector<uint8_t> iv;
};

// Payload files sit next to the manifest under a name derived from the
// record, so the manifest itself stays path-free.
std::string payload_filename(const ManifestRecord& rec);
std::string payload_filename(const EncodedFile& enc);

void write_manifest(const std::vector<EncodedFile>& encoded, const std::filesystem::path& path);
std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path);

}  // namespace pktclass
