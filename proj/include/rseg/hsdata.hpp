#ifndef RSEG_HSDATA_HPP
#define RSEG_HSDATA_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rseg/tensor.hpp"

namespace rseg {

enum class ChannelKind { raman, transmission, tpef, shg };

std::string to_string(ChannelKind k);
ChannelKind channel_kind_from_string(const std::string& s);

// Channel-first hyperspectral raster with per-channel metadata. Raman
// channels carry a wavenumber (cm^-1); auxiliary channels do not.
struct HyperCube {
    int channels = 0;
    int height = 0;
    int width = 0;
    Tensor<float> data;  // (C, H, W)
    std::vector<std::optional<double>> wavenumbers;
    std::vector<ChannelKind> channel_kinds;

    Tensor<float> channel(int c) const;          // (H, W) copy
    void set_channel(int c, const Tensor<float>& raster);
    void validate() const;
};

// Binary per-pixel labels: 0 background, 1 foreground.
struct MaskRaster {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> labels;

    void validate() const;
};

struct Sample {
    std::string sample_id;
    std::string patient_id;
    HyperCube cube;
    MaskRaster mask;
};

struct ManifestEntry {
    std::string sample_id;
    std::string patient_id;
    std::string cube_path;
    std::string mask_path;
    std::string split;  // train | val | test
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    std::uint64_t seed = 0;
    std::string generator_config_json;  // echoed generator config, may be empty

    std::vector<ManifestEntry> split(const std::string& name) const;
};

// ---- preprocessing ----------------------------------------------------

// Linear interpolation percentile (numpy 'linear' convention), q in [0,100].
double percentile(std::vector<double> values, double q);

// Rescales so the p_lo percentile maps to 0 and p_hi to 1, clamping outside.
// A degenerate raster (p_lo percentile == p_hi percentile) maps to all zeros.
Tensor<float> percentile_normalize(const Tensor<float>& raster, double p_lo, double p_hi);

// Per-channel percentile normalization: Raman and transmission channels use
// (5, 95), TPEF/SHG use (1, 99).
void normalize_cube(HyperCube& cube);

enum class ForegroundPolarity { automatic, brighter, darker };

// 2-cluster k-means on pixel intensity. With 'automatic' polarity the
// foreground cluster is the one whose centroid is farther from the raster's
// border-median intensity. Constant rasters yield all-background.
Tensor<std::uint8_t> kmeans_foreground(const Tensor<float>& raster,
                                       ForegroundPolarity polarity = ForegroundPolarity::automatic);

// Multiplies each column of each channel by m_glob/m_col where m_col is the
// column's foreground mean and m_glob the global foreground mean for that
// channel. Columns with no foreground or m_col < 1e-8 are left unchanged; a
// cube with no foreground at all is returned unchanged.
HyperCube column_drift_correct(const HyperCube& cube, const Tensor<std::uint8_t>& foreground);

// Row-major sliding-window anchors; the last window per axis is anchored to
// the image edge (may overlap its predecessor). Throws if patch > image.
std::vector<std::pair<int, int>> patch_anchors(int height, int width, int patch, int stride);

struct PatchPair {
    Tensor<float> cube;        // (C, patch, patch)
    Tensor<std::uint8_t> mask; // (patch, patch)
    int y = 0, x = 0;
};

std::vector<PatchPair> extract_patches(const Sample& sample, int patch, int stride);

Tensor<float> crop_cube(const Tensor<float>& cube, int y, int x, int patch);
Tensor<std::uint8_t> crop_mask(const MaskRaster& mask, int y, int x, int patch);

// Shuffles patients with the seed and assigns whole patients to splits
// greedily by remaining sample-count deficit. Ratios must sum to 1; needs at
// least as many patients as splits.
std::vector<std::string> split_names();
void split_by_patient(DatasetManifest& manifest, const std::vector<double>& ratios,
                      std::uint64_t seed);

// Preprocessing applied identically at train and eval time. Foreground for
// drift correction comes from the transmission channel (the morphological
// channel); by default tissue is the darker cluster there. Default order is
// drift-correct then normalize; the flag flips it.
struct PreprocessOptions {
    bool drift_correct = true;
    bool normalize = true;
    bool normalize_before_drift = false;
    ForegroundPolarity polarity = ForegroundPolarity::darker;
};

void preprocess_sample(Sample& sample, const PreprocessOptions& options = {});

// ---- synthetic data ----------------------------------------------------

struct SyntheticConfig {
    int raman_channels = 21;
    double wavenumber_lo = 2802.0;
    double wavenumber_hi = 3094.0;
    double background_center = 2850.0;  // lipid-like peak
    double foreground_center = 2950.0;  // cellular-like peak
    double peak_width = 45.0;
    double peak_amplitude = 1.0;
    double noise_sigma = 0.05;
    double overlap = 0.0;           // 0 separable .. 1 identical spectra
    int blob_count = 4;
    double blob_radius_frac = 0.16;
    double drift_amplitude = 0.0;   // multiplicative column drift
    int samples_per_patient = 2;

    std::string to_json() const;
    static SyntheticConfig from_json(const std::string& text);
};

// 24 channels: raman_channels Raman-like + transmission + TPEF + SHG.
// Deterministic in (n_samples, height, width, seed, config).
std::vector<Sample> generate_synthetic(int n_samples, int height, int width, std::uint64_t seed,
                                       const SyntheticConfig& config);

// Mean spectra of the two classes before noise, used by oracle tests.
std::vector<float> synthetic_class_spectrum(const SyntheticConfig& config, int label);

// ---- file formats -------------------------------------------------------

// HyperCube: magic "HSC1", u32 ndims, dims (C,H,W), f32 data, all
// little-endian; JSON sidecar <path>.meta.json for wavenumbers/kinds.
void write_cube(const std::string& path, const HyperCube& cube);
HyperCube read_cube(const std::string& path);

// MaskRaster: magic "MSK1", u32 dims (H,W), u8 labels.
void write_mask(const std::string& path, const MaskRaster& mask);
MaskRaster read_mask(const std::string& path);

void write_manifest(const std::string& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::string& path);

Sample load_sample(const ManifestEntry& entry);

}  // namespace rseg

#endif
