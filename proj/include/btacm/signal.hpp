#pragma once

// Epoch container, Butterworth band-pass with zero-phase application, the
// EPZ epoch file format, and the synthetic two-class dataset generator.

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "btacm/errors.hpp"

namespace btacm {

// One trial: d channels by T samples, plus a class id.
struct Epoch {
    Eigen::MatrixXd data;  // d x T
    int label = 0;
};

struct Dataset {
    std::vector<Epoch> epochs;  // all with identical d and T
    double fs = 0.0;            // sampling rate, Hz
    std::vector<std::string> class_names;

    int channels() const { return epochs.empty() ? 0 : static_cast<int>(epochs[0].data.rows()); }
    int samples() const { return epochs.empty() ? 0 : static_cast<int>(epochs[0].data.cols()); }
};

struct SosSection {
    double b0, b1, b2;  // numerator
    double a1, a2;      // denominator, monic
};

// Cascade of second-order sections; `order` is the digital pole count.
struct SosFilter {
    std::vector<SosSection> sections;
    int order() const { return 2 * static_cast<int>(sections.size()); }
};

// Butterworth band-pass realized as cascaded biquads via the bilinear
// transform with frequency pre-warping. `order` counts the poles of the
// digital filter (the analog prototype has order/2); gain is normalized to
// one at the geometric center of the band.
SosFilter design_bandpass(int order, double lo_hz, double hi_hz, double fs);

// Frequency response H(e^{i 2 pi f / fs}) of the cascade.
std::complex<double> sos_response(const SosFilter& f, double f_hz, double fs);

// Zero-phase application: forward pass, reverse, forward, reverse, with
// odd-symmetric edge extension of 3 * order samples per side.
Epoch filtfilt(const SosFilter& f, const Epoch& epoch);

// Subtract each channel's mean.
Epoch center(const Epoch& epoch);

// EPZ file format (little-endian): magic "BTAC", version u16 = 1,
// reserved u16 = 0, n_epochs u32, d u32, T u32, fs f64, n_classes u32,
// n_classes names (u16 length + UTF-8 bytes), n_epochs labels u32, then per
// epoch d*T f64 channel-major. No padding.
void write_epz(const Dataset& ds, const std::string& path);
Dataset read_epz(const std::string& path);

struct SynthConfig {
    int channels = 4;
    int epochs_per_class = 100;
    int samples = 512;
    double fs = 250.0;
    double noise_std = 0.1;
};

// Two classes sharing the spatial mixing (hence nearly equal lag-0
// covariance) but with class-specific AR(1) latent dynamics, so only the
// lagged structure separates them. Deterministic for a given (cfg, seed).
Dataset synth_var(const SynthConfig& cfg, std::uint64_t seed);

}  // namespace btacm
