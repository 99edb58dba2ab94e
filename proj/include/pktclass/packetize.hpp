#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pktclass/hash.hpp"

namespace pktclass {

enum class PacketMode { Variable, Fixed1024 };

constexpr size_t kFixedPacketSize = 1024;
constexpr size_t kVariableMinPacket = 500;
constexpr size_t kVariableMaxPacket = 1500;

std::string to_string(PacketMode mode);
PacketMode packet_mode_from_string(const std::string& s);

// One labeled packet payload; the atomic dataset row.
struct Sample {
    std::vector<uint8_t> payload;
    uint8_t label = 0;  // 1 = compressed, 0 = encrypted
    Digest256 origin_hash{};
    uint32_t chunk_index = 0;

    size_t length() const { return payload.size(); }
};

struct Dataset {
    std::vector<Sample> samples;
    PacketMode mode = PacketMode::Fixed1024;
    uint64_t seed = 0;
    std::string manifest_ref;         // corpus manifest the samples came from
    uint64_t dropped_tail_bytes = 0;  // fixed mode: sub-chunk remainders discarded

    size_t count(uint8_t label) const;
};

// Splits one encoded payload into labeled packet-sized chunks. Variable mode
// draws each chunk length uniformly from [500, 1500]; a final shorter
// remainder is kept as-is. Fixed mode cuts consecutive 1024-byte chunks and
// discards the trailing remainder (returned via dropped_tail).
std::vector<Sample> packetize(std::span<const uint8_t> payload, uint8_t label,
                              const Digest256& origin, PacketMode mode, uint64_t seed,
                              uint64_t* dropped_tail = nullptr);

// Seeded shuffle of sample order (files were shuffled prior to transfer).
void shuffle_samples(Dataset& dataset, uint64_t seed);

// Trims the majority class by seeded uniform sampling until counts match.
// Order of the surviving samples is preserved.
Dataset balance(const Dataset& dataset, uint64_t seed);

// CSV rows: one decimal byte value per column, then the label bit.
// Fixed1024 datasets are rectangular (1025 fields per row); variable-mode
// datasets are written with ragged rows, same field layout.
void write_csv(const Dataset& dataset, const std::filesystem::path& path);

// Reads a dataset CSV. When a mode is expected (explicitly or via the .meta
// sidecar) rows are validated against it; otherwise the mode is inferred.
Dataset read_csv(const std::filesystem::path& path,
                 std::optional<PacketMode> expected_mode = std::nullopt);

// Sidecar with mode, seed and class counts, next to the CSV.
void write_dataset_meta(const Dataset& dataset, const std::filesystem::path& csv_path,
                        uint64_t config_hash);

}  // namespace pktclass
