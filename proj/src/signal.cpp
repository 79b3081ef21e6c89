#include "btacm/signal.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>

#include "btacm/rng.hpp"

namespace btacm {

namespace {

using cplx = std::complex<double>;

bool nearly_real(const cplx& z) {
    return std::abs(z.imag()) <= 1e-9 * std::max(1.0, std::abs(z));
}

}  // namespace

SosFilter design_bandpass(int order, double lo_hz, double hi_hz, double fs) {
    if (!(order == 2 || order == 4 || order == 8)) {
        throw InvalidBand("design_bandpass: order must be 2, 4, or 8");
    }
    if (!(lo_hz > 0.0 && lo_hz < hi_hz && hi_hz < fs / 2.0)) {
        throw InvalidBand("design_bandpass: need 0 < lo < hi < fs/2");
    }
    const int n = order / 2;  // analog prototype order

    // Pre-warped analog band edges for the bilinear transform s = 2 fs (z-1)/(z+1).
    const double wlo = 2.0 * fs * std::tan(M_PI * lo_hz / fs);
    const double whi = 2.0 * fs * std::tan(M_PI * hi_hz / fs);
    const double bw = whi - wlo;
    const double w0sq = wlo * whi;

    // Butterworth prototype poles on the unit circle, left half-plane,
    // mapped through the low-pass-to-band-pass transform.
    std::vector<cplx> analog_poles;
    for (int k = 0; k < n; ++k) {
        const double theta = M_PI * (2.0 * k + n + 1.0) / (2.0 * n);
        const cplx p(std::cos(theta), std::sin(theta));
        const cplx disc = std::sqrt(p * p * bw * bw - 4.0 * w0sq);
        analog_poles.push_back((p * bw + disc) / 2.0);
        analog_poles.push_back((p * bw - disc) / 2.0);
    }

    // Bilinear map of the poles; the 2n zeros land at z = +1 and z = -1.
    std::vector<cplx> zpoles;
    for (const cplx& s : analog_poles) {
        zpoles.push_back((2.0 * fs + s) / (2.0 * fs - s));
    }

    // Pair poles into real-coefficient sections.
    std::vector<std::pair<double, double>> denoms;  // (a1, a2)
    {
        std::vector<cplx> complexes;
        std::vector<double> reals;
        for (const cplx& p : zpoles) {
            if (nearly_real(p)) {
                reals.push_back(p.real());
            } else if (p.imag() > 0.0) {
                complexes.push_back(p);
            }
        }
        std::sort(complexes.begin(), complexes.end(), [](const cplx& a, const cplx& b) {
            return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
        });
        std::sort(reals.begin(), reals.end());
        for (const cplx& p : complexes) {
            denoms.emplace_back(-2.0 * p.real(), std::norm(p));
        }
        if (reals.size() % 2 != 0) {
            throw NumericalError("design_bandpass: unpaired real pole");
        }
        for (std::size_t i = 0; i + 1 < reals.size(); i += 2) {
            denoms.emplace_back(-(reals[i] + reals[i + 1]), reals[i] * reals[i + 1]);
        }
    }
    if (static_cast<int>(denoms.size()) != n) {
        throw NumericalError("design_bandpass: section pairing failed");
    }

    // Unit-gain sections (z^2 - 1 numerator), then normalize the cascade so
    // the magnitude is exactly one at the image of the analog center w0.
    SosFilter f;
    for (const auto& [a1, a2] : denoms) {
        f.sections.push_back(SosSection{1.0, 0.0, -1.0, a1, a2});
    }
    const double fc = std::atan(std::sqrt(w0sq) / (2.0 * fs)) * fs / M_PI;
    const double g = std::abs(sos_response(f, fc, fs));
    if (!(g > 0.0) || !std::isfinite(g)) {
        throw NumericalError("design_bandpass: degenerate center gain");
    }
    const double per_section = std::pow(1.0 / g, 1.0 / n);
    for (auto& s : f.sections) {
        s.b0 *= per_section;
        s.b1 *= per_section;
        s.b2 *= per_section;
    }
    for (const auto& s : f.sections) {
        // poles must sit strictly inside the unit circle
        const cplx p1 = (-s.a1 + std::sqrt(cplx(s.a1 * s.a1 - 4.0 * s.a2))) / 2.0;
        const cplx p2 = (-s.a1 - std::sqrt(cplx(s.a1 * s.a1 - 4.0 * s.a2))) / 2.0;
        if (std::abs(p1) >= 1.0 || std::abs(p2) >= 1.0) {
            throw NumericalError("design_bandpass: unstable section");
        }
    }
    return f;
}

std::complex<double> sos_response(const SosFilter& f, double f_hz, double fs) {
    const cplx zinv = std::exp(cplx(0.0, -2.0 * M_PI * f_hz / fs));
    cplx h(1.0, 0.0);
    for (const auto& s : f.sections) {
        h *= (s.b0 + s.b1 * zinv + s.b2 * zinv * zinv) /
             (1.0 + s.a1 * zinv + s.a2 * zinv * zinv);
    }
    return h;
}

namespace {

// Direct form II transposed, zero initial state.
void sos_forward(const SosFilter& f, std::vector<double>& x) {
    for (const auto& s : f.sections) {
        double s1 = 0.0, s2 = 0.0;
        for (double& v : x) {
            const double in = v;
            const double out = s.b0 * in + s1;
            s1 = s.b1 * in - s.a1 * out + s2;
            s2 = s.b2 * in - s.a2 * out;
            v = out;
        }
    }
}

}  // namespace

Epoch filtfilt(const SosFilter& f, const Epoch& epoch) {
    const int T = static_cast<int>(epoch.data.cols());
    const int settle = 3 * f.order();
    if (T <= 3 * settle) {
        throw EpochTooShort("filtfilt: epoch shorter than 3x the filter settle length");
    }
    const int ext = settle;
    Epoch out = epoch;
    for (int c = 0; c < epoch.data.rows(); ++c) {
        std::vector<double> buf(T + 2 * ext);
        // odd-symmetric extension about the first and last samples
        for (int i = 0; i < ext; ++i) {
            buf[i] = 2.0 * epoch.data(c, 0) - epoch.data(c, ext - i);
            buf[ext + T + i] = 2.0 * epoch.data(c, T - 1) - epoch.data(c, T - 2 - i);
        }
        for (int t = 0; t < T; ++t) buf[ext + t] = epoch.data(c, t);

        sos_forward(f, buf);
        std::reverse(buf.begin(), buf.end());
        sos_forward(f, buf);
        std::reverse(buf.begin(), buf.end());

        for (int t = 0; t < T; ++t) out.data(c, t) = buf[ext + t];
    }
    return out;
}

Epoch center(const Epoch& epoch) {
    Epoch out = epoch;
    out.data.colwise() -= epoch.data.rowwise().mean();
    return out;
}

namespace {

void put_u16(std::string& buf, std::uint16_t v) {
    buf.push_back(static_cast<char>(v & 0xff));
    buf.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

class Reader {
public:
    Reader(const std::string& bytes) : bytes_(bytes) {}

    std::uint64_t offset() const { return off_; }

    void need(std::size_t n, const char* what) {
        if (off_ + n > bytes_.size()) {
            throw FormatError(std::string("epz: truncated while reading ") + what, off_);
        }
    }

    std::uint16_t u16(const char* what) {
        need(2, what);
        std::uint16_t v = 0;
        for (int i = 0; i < 2; ++i) v |= std::uint16_t(std::uint8_t(bytes_[off_ + i])) << (8 * i);
        off_ += 2;
        return v;
    }

    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(bytes_[off_ + i])) << (8 * i);
        off_ += 4;
        return v;
    }

    double f64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(bytes_[off_ + i])) << (8 * i);
        off_ += 8;
        return std::bit_cast<double>(v);
    }

    std::string str(std::size_t n, const char* what) {
        need(n, what);
        std::string s = bytes_.substr(off_, n);
        off_ += n;
        return s;
    }

private:
    const std::string& bytes_;
    std::uint64_t off_ = 0;
};

}  // namespace

void write_epz(const Dataset& ds, const std::string& path) {
    const int d = ds.channels();
    const int T = ds.samples();
    if (ds.epochs.empty() || d < 1 || T < 2 || !(ds.fs > 0.0)) {
        throw InvalidInput("write_epz: dataset is empty or malformed");
    }
    for (const auto& e : ds.epochs) {
        if (e.data.rows() != d || e.data.cols() != T) {
            throw InvalidInput("write_epz: epochs disagree on shape");
        }
        if (e.label < 0 || e.label >= static_cast<int>(ds.class_names.size())) {
            throw InvalidInput("write_epz: label out of range of class_names");
        }
    }

    std::string buf;
    buf += "BTAC";
    put_u16(buf, 1);  // version
    put_u16(buf, 0);  // reserved
    put_u32(buf, static_cast<std::uint32_t>(ds.epochs.size()));
    put_u32(buf, static_cast<std::uint32_t>(d));
    put_u32(buf, static_cast<std::uint32_t>(T));
    put_f64(buf, ds.fs);
    put_u32(buf, static_cast<std::uint32_t>(ds.class_names.size()));
    for (const auto& name : ds.class_names) {
        put_u16(buf, static_cast<std::uint16_t>(name.size()));
        buf += name;
    }
    for (const auto& e : ds.epochs) put_u32(buf, static_cast<std::uint32_t>(e.label));
    for (const auto& e : ds.epochs) {
        for (int c = 0; c < d; ++c)
            for (int t = 0; t < T; ++t) put_f64(buf, e.data(c, t));
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("write_epz: cannot open " + path);
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) {
        throw Error("write_epz: write failed for " + path);
    }
}

Dataset read_epz(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("read_epz: cannot open " + path);
    }
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Reader r(bytes);

    if (r.str(4, "magic") != "BTAC") {
        throw FormatError("epz: bad magic", 0);
    }
    if (const auto v = r.u16("version"); v != 1) {
        throw FormatError("epz: unsupported version " + std::to_string(v), 4);
    }
    if (r.u16("reserved") != 0) {
        throw FormatError("epz: nonzero reserved field", 6);
    }
    const std::uint32_t n_epochs = r.u32("n_epochs");
    const std::uint32_t d = r.u32("d");
    const std::uint32_t T = r.u32("T");
    const double fs = r.f64("fs");
    const std::uint32_t n_classes = r.u32("n_classes");
    if (d < 1 || T < 2) {
        throw FormatError("epz: invalid dimensions", 12);
    }
    if (!(fs > 0.0) || !std::isfinite(fs)) {
        throw FormatError("epz: invalid sampling rate", 20);
    }

    Dataset ds;
    ds.fs = fs;
    for (std::uint32_t i = 0; i < n_classes; ++i) {
        const std::uint16_t len = r.u16("class name length");
        ds.class_names.push_back(r.str(len, "class name"));
    }
    std::vector<std::uint32_t> labels(n_epochs);
    for (std::uint32_t i = 0; i < n_epochs; ++i) {
        const std::uint64_t at = r.offset();
        labels[i] = r.u32("label");
        if (labels[i] >= n_classes) {
            throw FormatError("epz: label out of range", at);
        }
    }
    ds.epochs.reserve(n_epochs);
    for (std::uint32_t i = 0; i < n_epochs; ++i) {
        Epoch e;
        e.label = static_cast<int>(labels[i]);
        e.data.resize(d, T);
        for (std::uint32_t c = 0; c < d; ++c) {
            for (std::uint32_t t = 0; t < T; ++t) {
                const std::uint64_t at = r.offset();
                const double v = r.f64("sample");
                if (!std::isfinite(v)) {
                    throw FormatError("epz: non-finite sample", at);
                }
                e.data(c, t) = v;
            }
        }
        ds.epochs.push_back(std::move(e));
    }
    if (r.offset() != bytes.size()) {
        throw FormatError("epz: trailing bytes after payload", r.offset());
    }
    return ds;
}

namespace {

// Class AR(1) coefficient schedules. Class 1 flips the alternation phase,
// which equals the reversed schedule for even channel counts and still
// differs from class 0 when the count is odd.
double ar_coeff(int cls, int channel) {
    const bool even = channel % 2 == 0;
    if (cls == 0) return even ? 0.5 : -0.3;
    return even ? -0.3 : 0.5;
}

}  // namespace

Dataset synth_var(const SynthConfig& cfg, std::uint64_t seed) {
    if (cfg.channels < 2 || cfg.epochs_per_class < 10 || cfg.samples < 128 ||
        !(cfg.fs > 0.0) || cfg.noise_std < 0.0) {
        throw InvalidConfig("synth_var: need channels >= 2, epochs_per_class >= 10, samples >= 128, fs > 0");
    }
    const int d = cfg.channels;
    const int T = cfg.samples;
    Rng rng(seed);

    // Shared mixing matrix, drawn once.
    Eigen::MatrixXd mix(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) mix(i, j) = rng.gaussian() / std::sqrt(double(d));

    Dataset ds;
    ds.fs = cfg.fs;
    ds.class_names = {"class0", "class1"};
    ds.epochs.reserve(2 * cfg.epochs_per_class);

    for (int cls = 0; cls < 2; ++cls) {
        for (int e = 0; e < cfg.epochs_per_class; ++e) {
            // Unit-variance AR(1) latents: innovation scaled so the process
            // is stationary with variance one from the first sample.
            Eigen::MatrixXd z(d, T);
            for (int i = 0; i < d; ++i) {
                const double a = ar_coeff(cls, i);
                const double innov = std::sqrt(1.0 - a * a);
                z(i, 0) = rng.gaussian();
                for (int t = 1; t < T; ++t) {
                    z(i, t) = a * z(i, t - 1) + innov * rng.gaussian();
                }
            }
            Epoch ep;
            ep.label = cls;
            ep.data = mix * z;
            if (cfg.noise_std > 0.0) {
                for (int i = 0; i < d; ++i)
                    for (int t = 0; t < T; ++t) ep.data(i, t) += cfg.noise_std * rng.gaussian();
            }
            ds.epochs.push_back(std::move(ep));
        }
    }

    // Rescale each output channel to unit empirical variance over the whole
    // dataset so neither class carries a scale cue.
    const double total = static_cast<double>(ds.epochs.size()) * T;
    for (int i = 0; i < d; ++i) {
        double mean = 0.0;
        for (const auto& ep : ds.epochs) mean += ep.data.row(i).sum();
        mean /= total;
        double var = 0.0;
        for (const auto& ep : ds.epochs) var += (ep.data.row(i).array() - mean).square().sum();
        var /= total;
        const double scale = 1.0 / std::sqrt(var);
        for (auto& ep : ds.epochs) ep.data.row(i) *= scale;
    }
    return ds;
}

}  // namespace btacm
