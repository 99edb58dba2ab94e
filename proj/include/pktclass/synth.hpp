#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace pktclass {

// Source-file content generators for building corpora without external data.
// The mix mirrors the kinds of files consumer devices move around: prose,
// logs, structured binary records, already-compressed media and raster-ish
// gradients.
enum class ContentKind { Text, Log, Records, Media, Gradient };

std::string to_string(ContentKind kind);

std::vector<uint8_t> synth_content(ContentKind kind, size_t bytes, uint64_t seed);

struct SynthCorpusSpec {
    int file_count = 40;
    uint64_t seed = 1;
    size_t min_bytes = 80 * 1024;
    size_t max_bytes = 240 * 1024;
    // Weights for Text/Log/Records/Media/Gradient, normalized internally.
    std::vector<double> mix = {0.30, 0.15, 0.15, 0.30, 0.10};
    // Sub-packet-size media files (thumbnails, icons, beacons). They ride
    // along in variable-mode datasets and fall out of fixed-mode ones.
    int tiny_count = 0;
    size_t tiny_min_bytes = 120;
    size_t tiny_max_bytes = 900;
};

// Writes file_count files into dir (created if needed); returns their paths.
std::vector<std::filesystem::path> synth_corpus(const std::filesystem::path& dir,
                                                const SynthCorpusSpec& spec);

}  // namespace pktclass
