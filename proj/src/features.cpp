#include "pktclass/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

namespace pktclass {

namespace {

std::array<uint64_t, 256> byte_histogram(std::span<const uint8_t> bytes) {
    std::array<uint64_t, 256> counts{};
    for (uint8_t b : bytes) ++counts[b];
    return counts;
}

}  // namespace

double chi_square(std::span<const uint8_t> bytes) {
    if (bytes.empty()) throw std::invalid_argument("chi_square: empty input");
    const auto counts = byte_histogram(bytes);
    const double expected = static_cast<double>(bytes.size()) / 256.0;
    double stat = 0.0;
    for (uint64_t c : counts) {
        const double d = static_cast<double>(c) - expected;
        stat += d * d / expected;
    }
    return stat;
}

FeatureVector quadrant_features(std::span<const uint8_t> payload) {
    if (payload.size() < 4)
        throw std::invalid_argument("quadrant_features: payload shorter than 4 bytes");
    const size_t quarter = payload.size() / 4;
    FeatureVector fv;
    for (size_t k = 0; k < 4; ++k) {
        const size_t begin = k * quarter;
        const size_t len = (k == 3) ? payload.size() - begin : quarter;
        fv.chi[k] = chi_square(payload.subspan(begin, len));
    }
    return fv;
}

FeatureVector quadrant_features(const Sample& sample) {
    FeatureVector fv = quadrant_features(std::span<const uint8_t>(sample.payload));
    fv.label = sample.label;
    return fv;
}

double shannon_entropy(std::span<const uint8_t> bytes) {
    if (bytes.empty()) throw std::invalid_argument("shannon_entropy: empty input");
    const auto counts = byte_histogram(bytes);
    const double n = static_cast<double>(bytes.size());
    double h = 0.0;
    for (uint64_t c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / n;
        h -= p * std::log2(p);
    }
    return h;
}

EntropyStats entropy_study(const Dataset& dataset) {
    std::vector<double> ent_c, ent_e;
    for (const Sample& s : dataset.samples) {
        if (s.payload.empty()) continue;
        const double h = shannon_entropy(s.payload);
        (s.label == 1 ? ent_c : ent_e).push_back(h);
    }
    if (ent_c.empty() || ent_e.empty())
        throw std::invalid_argument("entropy_study: both classes must be present");

    auto mean_of = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    auto var_of = [](const std::vector<double>& v, double mean) {
        if (v.size() < 2) return 0.0;
        double s = 0.0;
        for (double x : v) s += (x - mean) * (x - mean);
        return s / static_cast<double>(v.size() - 1);
    };

    EntropyStats st;
    st.n_compressed = ent_c.size();
    st.n_encrypted = ent_e.size();
    st.mean_compressed = mean_of(ent_c);
    st.mean_encrypted = mean_of(ent_e);
    const double var_c = var_of(ent_c, st.mean_compressed);
    const double var_e = var_of(ent_e, st.mean_encrypted);
    st.std_compressed = std::sqrt(var_c);
    st.std_encrypted = std::sqrt(var_e);
    st.mean_ratio = st.mean_compressed / st.mean_encrypted;
    const double pooled = std::sqrt((var_c + var_e) / 2.0);
    st.gap_over_pooled_std =
        pooled > 0.0 ? std::abs(st.mean_compressed - st.mean_encrypted) / pooled
                     : std::numeric_limits<double>::infinity();
    return st;
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p outside (0,1)");

    // Acklam's rational approximation.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;

    double q, r;
    if (p < plow) {
        q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - plow) {
        q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double chi_square_critical_value(int degrees_of_freedom, double significance) {
    if (degrees_of_freedom < 1)
        throw std::invalid_argument("chi_square_critical_value: df must be >= 1");
    if (!(significance > 0.0 && significance < 1.0))
        throw std::invalid_argument("chi_square_critical_value: significance outside (0,1)");
    const double df = static_cast<double>(degrees_of_freedom);
    const double z = normal_quantile(1.0 - significance);
    const double t = 2.0 / (9.0 * df);
    const double base = 1.0 - t + z * std::sqrt(t);
    return df * base * base * base;
}

void write_feature_csv(const std::vector<FeatureVector>& rows, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_feature_csv: cannot open " + path.string());
    char buf[64];
    for (const FeatureVector& fv : rows) {
        for (double v : fv.chi) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << buf << ',';
        }
        out << (fv.label == 1 ? '1' : '0') << '\n';
    }
    if (!out) throw std::runtime_error("write_feature_csv: write failed for " + path.string());
}

std::vector<FeatureVector> read_feature_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_feature_csv: cannot open " + path.string());
    std::vector<FeatureVector> rows;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        FeatureVector fv;
        size_t pos = 0;
        for (int field = 0; field < 5; ++field) {
            size_t comma = line.find(',', pos);
            const std::string tok = line.substr(
                pos, comma == std::string::npos ? std::string::npos : comma - pos);
            if (field < 4) {
                if (comma == std::string::npos)
                    throw std::runtime_error("read_feature_csv: line " + std::to_string(line_no) +
                                             ": expected 5 fields");
                try {
                    fv.chi[static_cast<size_t>(field)] = std::stod(tok);
                } catch (const std::exception&) {
                    throw std::runtime_error("read_feature_csv: line " + std::to_string(line_no) +
                                             ": bad value '" + tok + "'");
                }
                pos = comma + 1;
            } else {
                if (comma != std::string::npos || (tok != "0" && tok != "1"))
                    throw std::runtime_error("read_feature_csv: line " + std::to_string(line_no) +
                                             ": label must be 0 or 1");
                fv.label = tok == "1" ? 1 : 0;
            }
        }
        rows.push_back(fv);
    }
    return rows;
}

}  // namespace pktclass
