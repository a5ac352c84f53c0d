#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "regmine/contours.hpp"
#include "regmine/font.hpp"
#include "regmine/raster.hpp"

namespace regmine {

struct OcrResult {
    std::vector<std::string> lines;  // UTF-8, top to bottom
    double mean_confidence = 0.0;    // in [0, 1]

    std::string text() const;
};

struct BackendInfo {
    std::string name;
    bool concurrent_safe = false;
};

/// Turns the pixels inside a box into text. Implementations must be
/// deterministic for a fixed version and input, and must not read pixels
/// outside the box.
class OcrBackend {
public:
    virtual ~OcrBackend() = default;
    virtual BackendInfo info() const = 0;

    /// Throws BoxOutOfBounds when the box is not inside the image,
    /// BackendUnavailable when the engine cannot run at all and OcrFailure
    /// when it runs but fails on this input.
    virtual OcrResult recognize(const GrayRaster& img, const BBox& box) const = 0;
};

inline OcrResult recognize(const OcrBackend& backend, const GrayRaster& img, const BBox& box)
{
    return backend.recognize(img, box);
}

/// Background pixels added around every crop before recognition.
inline constexpr int kCropPadding = 2;

/// Copies `box` out of `img` and surrounds it with `pad` pixels of
/// `background`. Throws BoxOutOfBounds.
GrayRaster crop_padded(const GrayRaster& img, const BBox& box, int pad = kCropPadding,
                       std::uint8_t background = 255);

/// Template matcher for pages drawn with the embedded font. Each text line
/// is located from the row ink profile, its cell grid phase is taken from the
/// blank inter-glyph columns, and every cell is matched to the nearest glyph
/// (or blank) by Hamming distance. Cells farther than `max_distance_fraction`
/// of the cell area from every template become U+FFFD.
class MockOcrBackend final : public OcrBackend {
public:
    explicit MockOcrBackend(font::Metrics metrics = {}, int threshold = 128, double max_distance_fraction = 0.15);

    BackendInfo info() const override { return {"mock", true}; }
    OcrResult recognize(const GrayRaster& img, const BBox& box) const override;

    /// Recognizes a whole (already cropped) image.
    OcrResult recognize_image(const GrayRaster& img) const;

private:
    font::Metrics metrics_;
    int threshold_;
    double max_distance_fraction_;
};

struct SubprocessOcrConfig {
    std::string engine = "tesseract";
    std::vector<std::string> extra_flags;
    std::filesystem::path scratch_dir;  // empty: system temp directory
    int page_segmentation_mode = 6;     // single uniform block
};

/// Runs an external engine with the Tesseract command line
/// (`<engine> <image> stdout --psm N [flags] tsv`) on a temporary PGM and
/// parses its TSV report. Temporary files are removed on every exit path.
class SubprocessOcrBackend final : public OcrBackend {
public:
    explicit SubprocessOcrBackend(SubprocessOcrConfig config);

    BackendInfo info() const override { return {"subprocess:" + config_.engine, true}; }
    OcrResult recognize(const GrayRaster& img, const BBox& box) const override;

private:
    SubprocessOcrConfig config_;
};

/// Parses Tesseract TSV output: word rows (level 5) grouped into lines by
/// (block, paragraph, line); confidence is the mean word confidence / 100.
OcrResult parse_tesseract_tsv(std::string_view tsv);

struct ProcessResult {
    int exit_code = -1;
    std::string stdout_text;
};

/// fork/exec without a shell. Throws BackendUnavailable if the program
/// cannot be started.
ProcessResult run_process(const std::vector<std::string>& argv);

} // namespace regmine
