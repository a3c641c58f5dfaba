#include "rseg/hsdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "rseg/kmeans.hpp"

namespace rseg {

using json = nlohmann::json;

std::string to_string(ChannelKind k) {
    switch (k) {
        case ChannelKind::raman: return "raman";
        case ChannelKind::transmission: return "transmission";
        case ChannelKind::tpef: return "tpef";
        case ChannelKind::shg: return "shg";
    }
    throw std::logic_error("bad ChannelKind");
}

ChannelKind channel_kind_from_string(const std::string& s) {
    if (s == "raman") return ChannelKind::raman;
    if (s == "transmission") return ChannelKind::transmission;
    if (s == "tpef") return ChannelKind::tpef;
    if (s == "shg") return ChannelKind::shg;
    throw std::invalid_argument("unknown channel kind: " + s);
}

Tensor<float> HyperCube::channel(int c) const {
    Tensor<float> out({height, width});
    const std::size_t plane = static_cast<std::size_t>(height) * width;
    std::copy_n(data.data.begin() + static_cast<std::ptrdiff_t>(c) * static_cast<std::ptrdiff_t>(plane),
                plane, out.data.begin());
    return out;
}

void HyperCube::set_channel(int c, const Tensor<float>& raster) {
    const std::size_t plane = static_cast<std::size_t>(height) * width;
    std::copy(raster.data.begin(), raster.data.end(),
              data.data.begin() + static_cast<std::ptrdiff_t>(c) * static_cast<std::ptrdiff_t>(plane));
}

void HyperCube::validate() const {
    if (data.size() != static_cast<std::int64_t>(channels) * height * width)
        throw std::runtime_error("HyperCube: data length mismatch");
    if (static_cast<int>(wavenumbers.size()) != channels ||
        static_cast<int>(channel_kinds.size()) != channels)
        throw std::runtime_error("HyperCube: metadata length mismatch");
    if (!data.all_finite()) throw std::runtime_error("HyperCube: non-finite values");
}

void MaskRaster::validate() const {
    if (static_cast<std::int64_t>(labels.size()) != static_cast<std::int64_t>(height) * width)
        throw std::runtime_error("MaskRaster: label length mismatch");
    for (auto v : labels)
        if (v > 1) throw std::runtime_error("MaskRaster: label not in {0,1}");
}

std::vector<ManifestEntry> DatasetManifest::split(const std::string& name) const {
    std::vector<ManifestEntry> out;
    for (const auto& e : entries)
        if (e.split == name) out.push_back(e);
    return out;
}

// ---- preprocessing ----------------------------------------------------

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("percentile: empty input");
    std::sort(values.begin(), values.end());
    const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

Tensor<float> percentile_normalize(const Tensor<float>& raster, double p_lo, double p_hi) {
    if (p_lo >= p_hi) throw std::invalid_argument("percentile_normalize: p_lo must be < p_hi");
    if (!raster.all_finite()) throw std::invalid_argument("percentile_normalize: non-finite input");
    std::vector<double> vals(raster.data.begin(), raster.data.end());
    const double lo = percentile(vals, p_lo);
    const double hi = percentile(vals, p_hi);
    Tensor<float> out = raster;
    if (hi <= lo) {  // degenerate range, documented to map to all zeros
        std::fill(out.data.begin(), out.data.end(), 0.0f);
        return out;
    }
    const double scale = 1.0 / (hi - lo);
    for (auto& v : out.data) {
        double s = (static_cast<double>(v) - lo) * scale;
        v = static_cast<float>(std::clamp(s, 0.0, 1.0));
    }
    return out;
}

void normalize_cube(HyperCube& cube) {
    for (int c = 0; c < cube.channels; ++c) {
        const bool wide = cube.channel_kinds[static_cast<std::size_t>(c)] == ChannelKind::tpef ||
                          cube.channel_kinds[static_cast<std::size_t>(c)] == ChannelKind::shg;
        const double p_lo = wide ? 1.0 : 5.0;
        const double p_hi = wide ? 99.0 : 95.0;
        cube.set_channel(c, percentile_normalize(cube.channel(c), p_lo, p_hi));
    }
}

Tensor<std::uint8_t> kmeans_foreground(const Tensor<float>& raster, ForegroundPolarity polarity) {
    if (!raster.all_finite()) throw std::invalid_argument("kmeans_foreground: non-finite input");
    const int h = raster.shape[0], w = raster.shape[1];
    Tensor<std::uint8_t> out({h, w});

    const float first = raster.data[0];
    bool constant = true;
    for (float v : raster.data)
        if (v != first) {
            constant = false;
            break;
        }
    if (constant) {
        std::cerr << "kmeans_foreground: constant raster, marking all background\n";
        return out;
    }

    std::vector<std::vector<double>> pts(raster.data.size());
    for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = {static_cast<double>(raster.data[i])};
    KMeansResult km = kmeans(pts, 2, 5, 0x5eed);

    int fg_cluster;
    if (polarity == ForegroundPolarity::brighter) {
        fg_cluster = km.centroids[0][0] > km.centroids[1][0] ? 0 : 1;
    } else if (polarity == ForegroundPolarity::darker) {
        fg_cluster = km.centroids[0][0] < km.centroids[1][0] ? 0 : 1;
    } else {
        std::vector<double> border;
        for (int x = 0; x < w; ++x) {
            border.push_back(raster.at2(0, x));
            border.push_back(raster.at2(h - 1, x));
        }
        for (int y = 0; y < h; ++y) {
            border.push_back(raster.at2(y, 0));
            border.push_back(raster.at2(y, w - 1));
        }
        const double bm = percentile(border, 50.0);
        fg_cluster = std::abs(km.centroids[0][0] - bm) > std::abs(km.centroids[1][0] - bm) ? 0 : 1;
    }
    for (std::size_t i = 0; i < pts.size(); ++i)
        out.data[i] = km.assignment[i] == fg_cluster ? 1 : 0;
    return out;
}

HyperCube column_drift_correct(const HyperCube& cube, const Tensor<std::uint8_t>& foreground) {
    if (foreground.shape != std::vector<int>{cube.height, cube.width})
        throw std::invalid_argument("column_drift_correct: foreground shape mismatch");
    const int h = cube.height, w = cube.width;

    std::vector<int> col_count(static_cast<std::size_t>(w), 0);
    int total_fg = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (foreground.at2(y, x)) {
                col_count[static_cast<std::size_t>(x)]++;
                total_fg++;
            }
    if (total_fg == 0) {
        std::cerr << "column_drift_correct: no foreground pixels, returning input unchanged\n";
        return cube;
    }

    HyperCube out = cube;
    constexpr double kEps = 1e-8;
    for (int c = 0; c < cube.channels; ++c) {
        std::vector<double> col_sum(static_cast<std::size_t>(w), 0.0);
        double glob_sum = 0.0;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (foreground.at2(y, x)) {
                    const double v = cube.data.at3(c, y, x);
                    col_sum[static_cast<std::size_t>(x)] += v;
                    glob_sum += v;
                }
        const double m_glob = glob_sum / total_fg;
        for (int x = 0; x < w; ++x) {
            if (col_count[static_cast<std::size_t>(x)] == 0) continue;
            const double m_col = col_sum[static_cast<std::size_t>(x)] / col_count[static_cast<std::size_t>(x)];
            if (m_col < kEps) continue;
            const double factor = m_glob / m_col;
            for (int y = 0; y < h; ++y)
                out.data.at3(c, y, x) = static_cast<float>(cube.data.at3(c, y, x) * factor);
        }
    }
    return out;
}

std::vector<std::pair<int, int>> patch_anchors(int height, int width, int patch, int stride) {
    if (patch > height || patch > width)
        throw std::invalid_argument("patch_anchors: patch larger than image");
    if (stride < 1) throw std::invalid_argument("patch_anchors: stride must be >= 1");
    auto axis = [&](int size) {
        std::vector<int> a;
        for (int p = 0;; p += stride) {
            if (p + patch >= size) {
                a.push_back(size - patch);  // edge-anchored last window
                break;
            }
            a.push_back(p);
        }
        return a;
    };
    const auto ys = axis(height);
    const auto xs = axis(width);
    std::vector<std::pair<int, int>> out;
    for (int y : ys)
        for (int x : xs) out.emplace_back(y, x);
    return out;
}

Tensor<float> crop_cube(const Tensor<float>& cube, int y, int x, int patch) {
    const int c = cube.shape[0];
    Tensor<float> out({c, patch, patch});
    for (int ci = 0; ci < c; ++ci)
        for (int py = 0; py < patch; ++py)
            for (int px = 0; px < patch; ++px)
                out.at3(ci, py, px) = cube.at3(ci, y + py, x + px);
    return out;
}

Tensor<std::uint8_t> crop_mask(const MaskRaster& mask, int y, int x, int patch) {
    Tensor<std::uint8_t> out({patch, patch});
    for (int py = 0; py < patch; ++py)
        for (int px = 0; px < patch; ++px)
            out.at2(py, px) =
                mask.labels[static_cast<std::size_t>(y + py) * mask.width + (x + px)];
    return out;
}

std::vector<PatchPair> extract_patches(const Sample& sample, int patch, int stride) {
    std::vector<PatchPair> out;
    for (auto [y, x] : patch_anchors(sample.cube.height, sample.cube.width, patch, stride)) {
        PatchPair p;
        p.cube = crop_cube(sample.cube.data, y, x, patch);
        p.mask = crop_mask(sample.mask, y, x, patch);
        p.y = y;
        p.x = x;
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<std::string> split_names() { return {"train", "val", "test"}; }

void split_by_patient(DatasetManifest& manifest, const std::vector<double>& ratios,
                      std::uint64_t seed) {
    const auto names = split_names();
    if (ratios.size() != names.size())
        throw std::invalid_argument("split_by_patient: need one ratio per split");
    double rsum = 0.0;
    for (double r : ratios) rsum += r;
    if (std::abs(rsum - 1.0) > 1e-9)
        throw std::invalid_argument("split_by_patient: ratios must sum to 1");

    // patients in first-appearance order, then seed-shuffled
    std::vector<std::string> patients;
    std::map<std::string, int> sample_count;
    for (const auto& e : manifest.entries) {
        if (!sample_count.count(e.patient_id)) patients.push_back(e.patient_id);
        sample_count[e.patient_id]++;
    }
    if (patients.size() < names.size())
        throw std::invalid_argument("split_by_patient: fewer patients than splits");
    std::mt19937_64 rng(seed);
    std::shuffle(patients.begin(), patients.end(), rng);

    const double total = static_cast<double>(manifest.entries.size());
    std::vector<double> assigned(names.size(), 0.0);
    std::map<std::string, std::size_t> patient_split;
    for (const auto& p : patients) {
        std::size_t best = 0;
        double best_deficit = -1e18;
        for (std::size_t s = 0; s < names.size(); ++s) {
            const double deficit = ratios[s] * total - assigned[s];
            if (deficit > best_deficit) {
                best_deficit = deficit;
                best = s;
            }
        }
        patient_split[p] = best;
        assigned[best] += sample_count[p];
    }
    // every split must end up non-empty
    for (std::size_t s = 0; s < names.size(); ++s) {
        bool used = false;
        for (const auto& [p, sp] : patient_split) used |= (sp == s);
        if (used) continue;
        std::size_t donor = 0;
        int donor_patients = 0;
        for (std::size_t d = 0; d < names.size(); ++d) {
            int np = 0;
            for (const auto& [p, sp] : patient_split)
                if (sp == d) np++;
            if (np > donor_patients) {
                donor_patients = np;
                donor = d;
            }
        }
        for (auto& [p, sp] : patient_split)
            if (sp == donor) {
                sp = s;
                break;
            }
    }
    for (auto& e : manifest.entries) e.split = names[patient_split.at(e.patient_id)];
}

void preprocess_sample(Sample& sample, const PreprocessOptions& options) {
    auto drift = [&] {
        int ref = 0;
        for (int c = 0; c < sample.cube.channels; ++c)
            if (sample.cube.channel_kinds[static_cast<std::size_t>(c)] ==
                ChannelKind::transmission) {
                ref = c;
                break;
            }
        const auto fg = kmeans_foreground(sample.cube.channel(ref), options.polarity);
        sample.cube = column_drift_correct(sample.cube, fg);
    };
    if (options.normalize_before_drift) {
        if (options.normalize) normalize_cube(sample.cube);
        if (options.drift_correct) drift();
    } else {
        if (options.drift_correct) drift();
        if (options.normalize) normalize_cube(sample.cube);
    }
}

// ---- synthetic data ----------------------------------------------------

std::string SyntheticConfig::to_json() const {
    json j;
    j["raman_channels"] = raman_channels;
    j["wavenumber_lo"] = wavenumber_lo;
    j["wavenumber_hi"] = wavenumber_hi;
    j["background_center"] = background_center;
    j["foreground_center"] = foreground_center;
    j["peak_width"] = peak_width;
    j["peak_amplitude"] = peak_amplitude;
    j["noise_sigma"] = noise_sigma;
    j["overlap"] = overlap;
    j["blob_count"] = blob_count;
    j["blob_radius_frac"] = blob_radius_frac;
    j["drift_amplitude"] = drift_amplitude;
    j["samples_per_patient"] = samples_per_patient;
    return j.dump();
}

SyntheticConfig SyntheticConfig::from_json(const std::string& text) {
    const json j = json::parse(text);
    SyntheticConfig c;
    c.raman_channels = j.value("raman_channels", c.raman_channels);
    c.wavenumber_lo = j.value("wavenumber_lo", c.wavenumber_lo);
    c.wavenumber_hi = j.value("wavenumber_hi", c.wavenumber_hi);
    c.background_center = j.value("background_center", c.background_center);
    c.foreground_center = j.value("foreground_center", c.foreground_center);
    c.peak_width = j.value("peak_width", c.peak_width);
    c.peak_amplitude = j.value("peak_amplitude", c.peak_amplitude);
    c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
    c.overlap = j.value("overlap", c.overlap);
    c.blob_count = j.value("blob_count", c.blob_count);
    c.blob_radius_frac = j.value("blob_radius_frac", c.blob_radius_frac);
    c.drift_amplitude = j.value("drift_amplitude", c.drift_amplitude);
    c.samples_per_patient = j.value("samples_per_patient", c.samples_per_patient);
    return c;
}

namespace {

double effective_center(const SyntheticConfig& cfg, int label) {
    if (label == 0) return cfg.background_center;
    return cfg.foreground_center -
           cfg.overlap * (cfg.foreground_center - cfg.background_center);
}

double raman_intensity(const SyntheticConfig& cfg, double wavenumber, int label) {
    const double c = effective_center(cfg, label);
    const double d = wavenumber - c;
    return 0.1 + cfg.peak_amplitude * std::exp(-d * d / (2.0 * cfg.peak_width * cfg.peak_width));
}

// auxiliary channel means, indexed [kind][label]
constexpr double kTransmission[2] = {0.85, 0.45};
constexpr double kTpef[2] = {0.30, 0.70};
constexpr double kShg[2] = {0.60, 0.20};

}  // namespace

std::vector<float> synthetic_class_spectrum(const SyntheticConfig& cfg, int label) {
    std::vector<float> spec;
    for (int k = 0; k < cfg.raman_channels; ++k) {
        const double wn = cfg.wavenumber_lo + (cfg.wavenumber_hi - cfg.wavenumber_lo) * k /
                                                  (cfg.raman_channels - 1);
        spec.push_back(static_cast<float>(raman_intensity(cfg, wn, label)));
    }
    spec.push_back(static_cast<float>(kTransmission[label]));
    spec.push_back(static_cast<float>(kTpef[label]));
    spec.push_back(static_cast<float>(kShg[label]));
    return spec;
}

std::vector<Sample> generate_synthetic(int n_samples, int height, int width, std::uint64_t seed,
                                       const SyntheticConfig& cfg) {
    if (n_samples < 0) throw std::invalid_argument("generate_synthetic: negative count");
    if (n_samples > 0 && (height < 64 || width < 64))
        throw std::invalid_argument("generate_synthetic: height and width must be >= 64");

    const int total_channels = cfg.raman_channels + 3;
    std::vector<std::optional<double>> wavenumbers;
    std::vector<ChannelKind> kinds;
    for (int k = 0; k < cfg.raman_channels; ++k) {
        wavenumbers.push_back(cfg.wavenumber_lo + (cfg.wavenumber_hi - cfg.wavenumber_lo) * k /
                                                      (cfg.raman_channels - 1));
        kinds.push_back(ChannelKind::raman);
    }
    wavenumbers.insert(wavenumbers.end(), 3, std::nullopt);
    kinds.push_back(ChannelKind::transmission);
    kinds.push_back(ChannelKind::tpef);
    kinds.push_back(ChannelKind::shg);

    const std::vector<float> spec_bg = synthetic_class_spectrum(cfg, 0);
    const std::vector<float> spec_fg = synthetic_class_spectrum(cfg, 1);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<Sample> samples;
    for (int i = 0; i < n_samples; ++i) {
        Sample s;
        char buf[32];
        std::snprintf(buf, sizeof buf, "S%03d", i);
        s.sample_id = buf;
        std::snprintf(buf, sizeof buf, "P%03d", i / std::max(1, cfg.samples_per_patient));
        s.patient_id = buf;

        // smooth blob foreground: thresholded sum of gaussian bumps
        Tensor<double> field({height, width});
        for (int b = 0; b < cfg.blob_count; ++b) {
            const double cy = (0.15 + 0.7 * uni(rng)) * height;
            const double cx = (0.15 + 0.7 * uni(rng)) * width;
            const double r = cfg.blob_radius_frac * std::min(height, width) * (0.7 + 0.6 * uni(rng));
            for (int y = 0; y < height; ++y)
                for (int x = 0; x < width; ++x) {
                    const double dy = y - cy, dx = x - cx;
                    field.at2(y, x) += std::exp(-(dy * dy + dx * dx) / (2.0 * r * r));
                }
        }
        s.mask.height = height;
        s.mask.width = width;
        s.mask.labels.resize(static_cast<std::size_t>(height) * width);
        for (std::size_t p = 0; p < s.mask.labels.size(); ++p)
            s.mask.labels[p] = field.data[p] > 0.6 ? 1 : 0;

        s.cube.channels = total_channels;
        s.cube.height = height;
        s.cube.width = width;
        s.cube.wavenumbers = wavenumbers;
        s.cube.channel_kinds = kinds;
        s.cube.data = Tensor<float>({total_channels, height, width});
        const double phase = 2.0 * M_PI * uni(rng);
        std::vector<double> col_factor(static_cast<std::size_t>(width));
        for (int x = 0; x < width; ++x)
            col_factor[static_cast<std::size_t>(x)] =
                1.0 + cfg.drift_amplitude * std::sin(2.0 * M_PI * x / width + phase);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                const int label = s.mask.labels[static_cast<std::size_t>(y) * width + x];
                const auto& spec = label ? spec_fg : spec_bg;
                for (int c = 0; c < total_channels; ++c) {
                    double v = spec[static_cast<std::size_t>(c)] + cfg.noise_sigma * gauss(rng);
                    v = std::max(0.0, v) * col_factor[static_cast<std::size_t>(x)];
                    s.cube.data.at3(c, y, x) = static_cast<float>(v);
                }
            }
        samples.push_back(std::move(s));
    }
    return samples;
}

// ---- file formats -------------------------------------------------------

namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw std::runtime_error("unexpected end of file");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f32(std::ostream& os, float v) {
    std::uint32_t u;
    std::memcpy(&u, &v, 4);
    write_u32(os, u);
}

float read_f32(std::istream& is) {
    const std::uint32_t u = read_u32(is);
    float v;
    std::memcpy(&v, &u, 4);
    return v;
}

void expect_magic(std::istream& is, const char* magic) {
    char got[4];
    is.read(got, 4);
    if (!is || std::memcmp(got, magic, 4) != 0)
        throw std::runtime_error(std::string("bad magic, expected ") + magic);
}

}  // namespace

void write_cube(const std::string& path, const HyperCube& cube) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os.write("HSC1", 4);
    write_u32(os, 3);
    write_u32(os, static_cast<std::uint32_t>(cube.channels));
    write_u32(os, static_cast<std::uint32_t>(cube.height));
    write_u32(os, static_cast<std::uint32_t>(cube.width));
    for (float v : cube.data.data) write_f32(os, v);
    if (!os) throw std::runtime_error("write failed: " + path);

    json meta;
    json wn = json::array();
    json ck = json::array();
    for (int c = 0; c < cube.channels; ++c) {
        const auto& w = cube.wavenumbers[static_cast<std::size_t>(c)];
        wn.push_back(w ? json(*w) : json(nullptr));
        ck.push_back(to_string(cube.channel_kinds[static_cast<std::size_t>(c)]));
    }
    meta["wavenumbers"] = wn;
    meta["channel_kinds"] = ck;
    std::ofstream ms(path + ".meta.json");
    ms << meta.dump(2) << "\n";
    if (!ms) throw std::runtime_error("write failed: " + path + ".meta.json");
}

HyperCube read_cube(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    expect_magic(is, "HSC1");
    if (read_u32(is) != 3) throw std::runtime_error("HSC1: expected 3 dims");
    HyperCube cube;
    cube.channels = static_cast<int>(read_u32(is));
    cube.height = static_cast<int>(read_u32(is));
    cube.width = static_cast<int>(read_u32(is));
    cube.data = Tensor<float>({cube.channels, cube.height, cube.width});
    for (auto& v : cube.data.data) v = read_f32(is);

    std::ifstream ms(path + ".meta.json");
    if (ms) {
        json meta = json::parse(ms);
        for (const auto& w : meta.at("wavenumbers"))
            cube.wavenumbers.push_back(w.is_null() ? std::optional<double>{}
                                                   : std::optional<double>{w.get<double>()});
        for (const auto& k : meta.at("channel_kinds"))
            cube.channel_kinds.push_back(channel_kind_from_string(k.get<std::string>()));
    } else {
        cube.wavenumbers.assign(static_cast<std::size_t>(cube.channels), std::nullopt);
        cube.channel_kinds.assign(static_cast<std::size_t>(cube.channels), ChannelKind::raman);
    }
    return cube;
}

void write_mask(const std::string& path, const MaskRaster& mask) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os.write("MSK1", 4);
    write_u32(os, static_cast<std::uint32_t>(mask.height));
    write_u32(os, static_cast<std::uint32_t>(mask.width));
    os.write(reinterpret_cast<const char*>(mask.labels.data()),
             static_cast<std::streamsize>(mask.labels.size()));
    if (!os) throw std::runtime_error("write failed: " + path);
}

MaskRaster read_mask(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    expect_magic(is, "MSK1");
    MaskRaster mask;
    mask.height = static_cast<int>(read_u32(is));
    mask.width = static_cast<int>(read_u32(is));
    mask.labels.resize(static_cast<std::size_t>(mask.height) * mask.width);
    is.read(reinterpret_cast<char*>(mask.labels.data()),
            static_cast<std::streamsize>(mask.labels.size()));
    if (!is) throw std::runtime_error("truncated mask file: " + path);
    return mask;
}

void write_manifest(const std::string& path, const DatasetManifest& manifest) {
    json j;
    j["seed"] = manifest.seed;
    j["generator_config"] = manifest.generator_config_json.empty()
                                ? json(nullptr)
                                : json::parse(manifest.generator_config_json);
    json arr = json::array();
    for (const auto& e : manifest.entries) {
        json je;
        je["sample_id"] = e.sample_id;
        je["patient_id"] = e.patient_id;
        je["cube"] = e.cube_path;
        je["mask"] = e.mask_path;
        je["split"] = e.split;
        arr.push_back(je);
    }
    j["samples"] = arr;
    std::ofstream os(path);
    os << j.dump(2) << "\n";
    if (!os) throw std::runtime_error("write failed: " + path);
}

DatasetManifest read_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    json j = json::parse(is);
    DatasetManifest m;
    m.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("generator_config") && !j["generator_config"].is_null())
        m.generator_config_json = j["generator_config"].dump();
    for (const auto& je : j.at("samples")) {
        ManifestEntry e;
        e.sample_id = je.at("sample_id").get<std::string>();
        e.patient_id = je.at("patient_id").get<std::string>();
        e.cube_path = je.at("cube").get<std::string>();
        e.mask_path = je.at("mask").get<std::string>();
        e.split = je.value("split", std::string{});
        m.entries.push_back(std::move(e));
    }
    return m;
}

Sample load_sample(const ManifestEntry& entry) {
    Sample s;
    s.sample_id = entry.sample_id;
    s.patient_id = entry.patient_id;
    s.cube = read_cube(entry.cube_path);
    s.mask = read_mask(entry.mask_path);
    return s;
}

}  // namespace rseg
