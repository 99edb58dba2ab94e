#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pktclass/packetize.hpp"

namespace pktclass {

// Four quadrant chi-square statistics for one packet, in payload order.
struct FeatureVector {
    std::array<double, 4> chi{};
    int label = -1;  // -1 = unlabeled

    double& operator[](size_t i) { return chi[i]; }
    double operator[](size_t i) const { return chi[i]; }
};

struct EntropyStats {
    double mean_compressed = 0.0;
    double std_compressed = 0.0;
    double mean_encrypted = 0.0;
    double std_encrypted = 0.0;
    double mean_ratio = 0.0;          // mean_compressed / mean_encrypted
    double gap_over_pooled_std = 0.0;  // |mean_c - mean_e| / pooled std
    size_t n_compressed = 0;
    size_t n_encrypted = 0;
};

// Pearson statistic of the byte histogram against uniform:
// sum over the 256 byte values of (O_i - E)^2 / E with E = n/256.
double chi_square(std::span<const uint8_t> bytes);

// Payload split into 4 contiguous chunks of floor(n/4) bytes, remainder
// appended to the last chunk; component k = chi_square(chunk k).
FeatureVector quadrant_features(std::span<const uint8_t> payload);
FeatureVector quadrant_features(const Sample& sample);

// Empirical byte entropy in bits per symbol; 0 <= result <= 8.
double shannon_entropy(std::span<const uint8_t> bytes);

// Per-class mean/std of per-sample entropy plus the between-class gap.
EntropyStats entropy_study(const Dataset& dataset);

// Standard normal quantile (Acklam's rational approximation, |rel err| < 1.2e-9).
double normal_quantile(double p);

// Upper chi-square quantile via the Wilson-Hilferty cube approximation.
// significance is the upper tail mass, e.g. 0.001.
double chi_square_critical_value(int degrees_of_freedom, double significance);

// Feature CSV, Fig-4 layout: 4 chi columns then the label bit.
void write_feature_csv(const std::vector<FeatureVector>& rows, const std::filesystem::path& path);
std::vector<FeatureVector> read_feature_csv(const std::filesystem::path& path);

}  // namespace pktclass
