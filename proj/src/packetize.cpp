#include "pktclass/packetize.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

#include "pktclass/rng.hpp"

namespace pktclass {

std::string to_string(PacketMode mode) {
    return mode == PacketMode::Variable ? "variable" : "fixed1024";
}

PacketMode packet_mode_from_string(const std::string& s) {
    if (s == "variable") return PacketMode::Variable;
    if (s == "fixed1024") return PacketMode::Fixed1024;
    throw std::invalid_argument("unknown packet mode '" + s + "' (expected variable|fixed1024)");
}

size_t Dataset::count(uint8_t label) const {
    return static_cast<size_t>(std::count_if(samples.begin(), samples.end(),
                                             [label](const Sample& s) { return s.label == label; }));
}

std::vector<Sample> packetize(std::span<const uint8_t> payload, uint8_t label,
                              const Digest256& origin, PacketMode mode, uint64_t seed,
                              uint64_t* dropped_tail) {
    if (payload.empty()) throw std::invalid_argument("packetize: empty payload");

    std::vector<Sample> out;
    uint32_t chunk_index = 0;
    size_t offset = 0;

    if (mode == PacketMode::Fixed1024) {
        while (payload.size() - offset >= kFixedPacketSize) {
            Sample s;
            s.payload.assign(payload.begin() + static_cast<ptrdiff_t>(offset),
                             payload.begin() + static_cast<ptrdiff_t>(offset + kFixedPacketSize));
            s.label = label;
            s.origin_hash = origin;
            s.chunk_index = chunk_index++;
            out.push_back(std::move(s));
            offset += kFixedPacketSize;
        }
        if (dropped_tail) *dropped_tail += payload.size() - offset;
        return out;
    }

    Rng rng(seed);
    while (offset < payload.size()) {
        const size_t drawn = static_cast<size_t>(
            rng.uniform_int(static_cast<int64_t>(kVariableMinPacket),
                            static_cast<int64_t>(kVariableMaxPacket)));
        const size_t take = std::min(drawn, payload.size() - offset);  // final remainder kept as-is
        Sample s;
        s.payload.assign(payload.begin() + static_cast<ptrdiff_t>(offset),
                         payload.begin() + static_cast<ptrdiff_t>(offset + take));
        s.label = label;
        s.origin_hash = origin;
        s.chunk_index = chunk_index++;
        out.push_back(std::move(s));
        offset += take;
    }
    return out;
}

void shuffle_samples(Dataset& dataset, uint64_t seed) {
    Rng rng(derive_seed(seed, "dataset-shuffle"));
    rng.shuffle(dataset.samples);
}

Dataset balance(const Dataset& dataset, uint64_t seed) {
    const size_t n1 = dataset.count(1);
    const size_t n0 = dataset.samples.size() - n1;
    if (n0 == 0 || n1 == 0)
        throw std::invalid_argument("balance: both classes must be present");
    if (n0 == n1) return dataset;

    const uint8_t majority = n1 > n0 ? 1 : 0;
    const size_t excess = (n1 > n0 ? n1 : n0) - (n1 > n0 ? n0 : n1);

    std::vector<size_t> majority_positions;
    for (size_t i = 0; i < dataset.samples.size(); ++i)
        if (dataset.samples[i].label == majority) majority_positions.push_back(i);

    // Seeded partial Fisher-Yates picks which majority samples to drop.
    Rng rng(derive_seed(seed, "balance"));
    std::vector<size_t> pool = majority_positions;
    std::vector<char> drop(dataset.samples.size(), 0);
    for (size_t k = 0; k < excess; ++k) {
        const size_t j = k + static_cast<size_t>(rng.below(pool.size() - k));
        std::swap(pool[k], pool[j]);
        drop[pool[k]] = 1;
    }

    Dataset out;
    out.mode = dataset.mode;
    out.seed = dataset.seed;
    out.manifest_ref = dataset.manifest_ref;
    out.dropped_tail_bytes = dataset.dropped_tail_bytes;
    out.samples.reserve(dataset.samples.size() - excess);
    for (size_t i = 0; i < dataset.samples.size(); ++i)
        if (!drop[i]) out.samples.push_back(dataset.samples[i]);
    return out;
}

void write_csv(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path.string());

    std::string line;
    for (const Sample& s : dataset.samples) {
        if (dataset.mode == PacketMode::Fixed1024 && s.payload.size() != kFixedPacketSize)
            throw std::runtime_error("write_csv: fixed1024 dataset contains a sample of length " +
                                     std::to_string(s.payload.size()));
        line.clear();
        line.reserve(s.payload.size() * 4 + 2);
        char buf[8];
        for (uint8_t b : s.payload) {
            auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), static_cast<unsigned>(b));
            line.append(buf, p);
            line.push_back(',');
        }
        line.push_back(s.label == 1 ? '1' : '0');
        line.push_back('\n');
        out.write(line.data(), static_cast<std::streamsize>(line.size()));
    }
    if (!out) throw std::runtime_error("write_csv: write failed for " + path.string());
}

namespace {

// Pulls mode/seed from the .meta sidecar when one exists.
void apply_sidecar(const std::filesystem::path& csv_path, std::optional<PacketMode>& mode,
                   uint64_t& seed) {
    const std::filesystem::path meta = csv_path.string() + ".meta";
    std::ifstream in(meta, std::ios::binary);
    if (!in) return;
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("mode=", 0) == 0 && !mode.has_value())
            mode = packet_mode_from_string(line.substr(5));
        else if (line.rfind("seed=", 0) == 0)
            seed = std::strtoull(line.c_str() + 5, nullptr, 10);
    }
}

}  // namespace

Dataset read_csv(const std::filesystem::path& path, std::optional<PacketMode> expected_mode) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_csv: cannot open " + path.string());

    uint64_t sidecar_seed = 0;
    apply_sidecar(path, expected_mode, sidecar_seed);

    Dataset ds;
    ds.seed = sidecar_seed;
    std::string line;
    size_t line_no = 0;
    bool all_fixed = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();

        Sample s;
        s.payload.reserve(kFixedPacketSize);
        const char* p = line.data();
        const char* end = p + line.size();
        int last_value = -1;
        while (p < end) {
            unsigned value = 0;
            auto [next, ec] = std::from_chars(p, end, value);
            if (ec != std::errc() || next == p)
                throw std::runtime_error("read_csv: line " + std::to_string(line_no) +
                                         ": malformed field");
            if (value > 255)
                throw std::runtime_error("read_csv: line " + std::to_string(line_no) +
                                         ": byte value " + std::to_string(value) +
                                         " outside 0-255");
            p = next;
            if (p < end) {
                if (*p != ',')
                    throw std::runtime_error("read_csv: line " + std::to_string(line_no) +
                                             ": expected ',' separator");
                ++p;
                if (last_value >= 0) s.payload.push_back(static_cast<uint8_t>(last_value));
                last_value = static_cast<int>(value);
            } else {
                // Final field is the label bit.
                if (value > 1)
                    throw std::runtime_error("read_csv: line " + std::to_string(line_no) +
                                             ": label must be 0 or 1");
                if (last_value >= 0) s.payload.push_back(static_cast<uint8_t>(last_value));
                s.label = static_cast<uint8_t>(value);
            }
        }
        if (s.payload.empty())
            throw std::runtime_error("read_csv: line " + std::to_string(line_no) +
                                     ": row has no payload bytes");
        if (expected_mode == PacketMode::Fixed1024 && s.payload.size() != kFixedPacketSize)
            throw std::runtime_error("read_csv: line " + std::to_string(line_no) + ": row has " +
                                     std::to_string(s.payload.size() + 1) + " fields, expected " +
                                     std::to_string(kFixedPacketSize + 1));
        if (s.payload.size() != kFixedPacketSize) all_fixed = false;
        // Content digest stands in for origin so canonical ordering survives
        // the CSV round trip.
        std::vector<uint8_t> keyed(s.payload);
        keyed.push_back(s.label);
        s.origin_hash = sha256(keyed);
        s.chunk_index = 0;
        ds.samples.push_back(std::move(s));
    }
    if (expected_mode.has_value())
        ds.mode = *expected_mode;
    else
        ds.mode = all_fixed && !ds.samples.empty() ? PacketMode::Fixed1024 : PacketMode::Variable;
    return ds;
}

void write_dataset_meta(const Dataset& dataset, const std::filesystem::path& csv_path,
                        uint64_t config_hash) {
    std::ofstream out(csv_path.string() + ".meta", std::ios::binary);
    if (!out) throw std::runtime_error("write_dataset_meta: cannot open sidecar for " +
                                       csv_path.string());
    out << "kind=dataset\n"
        << "mode=" << to_string(dataset.mode) << '\n'
        << "seed=" << dataset.seed << '\n'
        << "config_hash=" << config_hash << '\n'
        << "samples=" << dataset.samples.size() << '\n'
        << "compressed=" << dataset.count(1) << '\n'
        << "encrypted=" << dataset.count(0) << '\n'
        << "dropped_tail_bytes=" << dataset.dropped_tail_bytes << '\n';
    if (!dataset.manifest_ref.empty()) out << "manifest=" << dataset.manifest_ref << '\n';
}

}  // namespace pktclass
