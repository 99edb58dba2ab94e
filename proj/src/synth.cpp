#include "pktclass/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "pktclass/rng.hpp"

namespace pktclass {

std::string to_string(ContentKind kind) {
    switch (kind) {
        case ContentKind::Text: return "text";
        case ContentKind::Log: return "log";
        case ContentKind::Records: return "records";
        case ContentKind::Media: return "media";
        case ContentKind::Gradient: return "gradient";
    }
    return "?";
}

namespace {

const char* kWords[] = {
    "the",     "of",       "and",     "to",        "a",        "in",      "is",
    "that",    "it",       "was",     "for",       "on",       "are",     "with",
    "as",      "device",   "network", "data",      "sensor",   "reading", "status",
    "update",  "config",   "stream",  "user",      "home",     "camera",  "record",
    "event",   "signal",   "measure", "value",     "report",   "service", "message",
    "packet",  "session",  "battery", "firmware",  "version",  "cloud",   "local",
    "monitor", "schedule", "trigger", "threshold", "interval", "channel", "gateway",
    "light",   "switch",   "motion",  "door",      "window",   "kitchen", "office",
};
constexpr size_t kWordCount = sizeof(kWords) / sizeof(kWords[0]);

// Zipf-ish rank draw over the word list.
size_t draw_word(Rng& rng) {
    const double u = rng.uniform01();
    const double x = std::pow(static_cast<double>(kWordCount) + 1.0, u) - 1.0;
    return std::min(kWordCount - 1, static_cast<size_t>(x));
}

std::vector<uint8_t> make_text(size_t bytes, Rng& rng) {
    std::string s;
    s.reserve(bytes + 64);
    size_t sentence_len = 0;
    bool capitalize = true;
    while (s.size() < bytes) {
        std::string w = kWords[draw_word(rng)];
        if (capitalize) {
            w[0] = static_cast<char>(std::toupper(w[0]));
            capitalize = false;
        }
        s += w;
        ++sentence_len;
        if (sentence_len >= 6 && rng.uniform01() < 0.18) {
            s += rng.uniform01() < 0.85 ? ". " : ",\n";
            capitalize = s[s.size() - 2] == '.';
            sentence_len = 0;
        } else {
            s += ' ';
        }
    }
    s.resize(bytes);
    return {s.begin(), s.end()};
}

std::vector<uint8_t> make_log(size_t bytes, Rng& rng) {
    static const char* levels[] = {"INFO", "DEBUG", "WARN", "ERROR"};
    static const char* modules[] = {"net.tcp", "sensor.hub", "cloud.sync", "auth.token",
                                    "dev.power"};
    std::string s;
    s.reserve(bytes + 128);
    uint64_t ts = 1600000000 + rng.below(10000000);
    char line[256];
    while (s.size() < bytes) {
        ts += rng.below(900) + 1;
        std::snprintf(line, sizeof(line),
                      "%llu.%03llu %s %s: request id=%llu status=%u bytes=%u latency_ms=%u\n",
                      static_cast<unsigned long long>(ts),
                      static_cast<unsigned long long>(rng.below(1000)),
                      levels[rng.below(4)], modules[rng.below(5)],
                      static_cast<unsigned long long>(rng.below(100000)),
                      static_cast<unsigned>(rng.below(2) ? 200 : 404),
                      static_cast<unsigned>(rng.below(65536)),
                      static_cast<unsigned>(rng.below(500)));
        s += line;
    }
    s.resize(bytes);
    return {s.begin(), s.end()};
}

std::vector<uint8_t> make_records(size_t bytes, Rng& rng) {
    // 32-byte records: sequence number, a few small-range fields, zero padding.
    std::vector<uint8_t> out;
    out.reserve(bytes + 32);
    uint32_t seq = static_cast<uint32_t>(rng.below(1000));
    while (out.size() < bytes) {
        ++seq;
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(seq >> (8 * i)));
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(rng.below(16)));
        for (int i = 0; i < 4; ++i)
            out.push_back(static_cast<uint8_t>(100 + rng.below(20)));
        for (int i = 0; i < 16; ++i) out.push_back(0);
    }
    out.resize(bytes);
    return out;
}

std::vector<uint8_t> make_media(size_t bytes, Rng& rng) {
    // Stand-in for already-compressed media payloads: incompressible bytes
    // carrying the two artifacts real container formats leave behind -- a
    // mild marker-byte frequency skew (escape bytes, chunk tags) and
    // occasional multi-byte sync markers. Both are too small a win for
    // deflate to beat a stored block, so they survive re-encoding.
    static const std::vector<std::vector<uint8_t>> kSyncMarkers = {
        {0xff, 0x00},
        {0x00, 0x00, 0x01},
        {0xff, 0xd8, 0xff},
    };

    // 0x00/0xff plus six per-file marker values at 2x uniform weight.
    std::vector<uint8_t> table;
    table.reserve(256 + 8);
    for (int v = 0; v < 256; ++v) table.push_back(static_cast<uint8_t>(v));
    table.push_back(0x00);
    table.push_back(0xff);
    for (int i = 0; i < 6; ++i) table.push_back(static_cast<uint8_t>(rng.below(256)));

    std::vector<uint8_t> out;
    out.reserve(bytes + 8);
    const uint8_t header[] = {0x89, 'M', 'D', 'A', 0x0d, 0x0a, 0x1a, 0x0a};
    out.insert(out.end(), header, header + sizeof(header));
    while (out.size() < bytes) {
        if (rng.below(192) == 0) {
            const auto& m = kSyncMarkers[rng.below(kSyncMarkers.size())];
            out.insert(out.end(), m.begin(), m.end());
        } else {
            out.push_back(table[rng.below(table.size())]);
        }
    }
    out.resize(bytes);
    return out;
}

std::vector<uint8_t> make_gradient(size_t bytes, Rng& rng) {
    // Raster-like rows: slowly varying base value plus small noise.
    std::vector<uint8_t> out;
    out.reserve(bytes);
    double base = static_cast<double>(rng.below(256));
    while (out.size() < bytes) {
        base += rng.uniform01() * 8.0 - 4.0;
        if (base < 0) base = 0;
        if (base > 255) base = 255;
        const size_t run = 16 + rng.below(48);
        for (size_t i = 0; i < run && out.size() < bytes; ++i) {
            const int noise = static_cast<int>(rng.below(5)) - 2;
            int v = static_cast<int>(base) + noise;
            out.push_back(static_cast<uint8_t>(std::clamp(v, 0, 255)));
        }
    }
    return out;
}

}  // namespace

std::vector<uint8_t> synth_content(ContentKind kind, size_t bytes, uint64_t seed) {
    if (bytes == 0) throw std::invalid_argument("synth_content: zero size");
    Rng rng(seed);
    switch (kind) {
        case ContentKind::Text: return make_text(bytes, rng);
        case ContentKind::Log: return make_log(bytes, rng);
        case ContentKind::Records: return make_records(bytes, rng);
        case ContentKind::Media: return make_media(bytes, rng);
        case ContentKind::Gradient: return make_gradient(bytes, rng);
    }
    throw std::invalid_argument("synth_content: unknown kind");
}

std::vector<std::filesystem::path> synth_corpus(const std::filesystem::path& dir,
                                                const SynthCorpusSpec& spec) {
    if (spec.file_count < 1) throw std::invalid_argument("synth_corpus: file_count must be >= 1");
    if (spec.mix.size() != 5) throw std::invalid_argument("synth_corpus: mix needs 5 weights");
    if (spec.min_bytes == 0 || spec.max_bytes < spec.min_bytes)
        throw std::invalid_argument("synth_corpus: bad size range");
    std::filesystem::create_directories(dir);

    double mix_total = 0.0;
    for (double w : spec.mix) mix_total += w;
    if (mix_total <= 0.0) throw std::invalid_argument("synth_corpus: mix weights sum to zero");

    Rng rng(derive_seed(spec.seed, "synth-corpus"));
    std::vector<std::filesystem::path> paths;
    paths.reserve(static_cast<size_t>(spec.file_count));
    for (int i = 0; i < spec.file_count; ++i) {
        double pick = rng.uniform01() * mix_total;
        size_t kind_idx = 0;
        for (; kind_idx + 1 < spec.mix.size(); ++kind_idx) {
            if (pick < spec.mix[kind_idx]) break;
            pick -= spec.mix[kind_idx];
        }
        const auto kind = static_cast<ContentKind>(kind_idx);
        const size_t bytes =
            spec.min_bytes + static_cast<size_t>(rng.below(spec.max_bytes - spec.min_bytes + 1));
        const auto content =
            synth_content(kind, bytes, derive_seed(spec.seed, "synth-file", static_cast<uint64_t>(i)));

        char name[64];
        std::snprintf(name, sizeof(name), "file_%03d_%s.bin", i, to_string(kind).c_str());
        const std::filesystem::path path = dir / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("synth_corpus: cannot open " + path.string());
        out.write(reinterpret_cast<const char*>(content.data()),
                  static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("synth_corpus: write failed for " + path.string());
        paths.push_back(path);
    }
    for (int i = 0; i < spec.tiny_count; ++i) {
        const size_t bytes =
            spec.tiny_min_bytes +
            static_cast<size_t>(rng.below(spec.tiny_max_bytes - spec.tiny_min_bytes + 1));
        const auto content = synth_content(
            ContentKind::Media, bytes,
            derive_seed(spec.seed, "synth-tiny", static_cast<uint64_t>(i)));
        char name[64];
        std::snprintf(name, sizeof(name), "tiny_%03d_media.bin", i);
        const std::filesystem::path path = dir / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("synth_corpus: cannot open " + path.string());
        out.write(reinterpret_cast<const char*>(content.data()),
                  static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("synth_corpus: write failed for " + path.string());
        paths.push_back(path);
    }
    return paths;
}

}  // namespace pktclass
