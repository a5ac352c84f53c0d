#include "regmine/ocr.hpp"

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstring>
#include <map>
#include <optional>
#include <tuple>

#include "regmine/error.hpp"
#include "regmine/image_io.hpp"
#include "regmine/text.hpp"

namespace regmine {

namespace fs = std::filesystem;

std::string OcrResult::text() const
{
    return text::join(lines, "\n");
}

GrayRaster crop_padded(const GrayRaster& img, const BBox& box, int pad, std::uint8_t background)
{
    if (!box.valid() || box.left < 0 || box.top < 0 || box.right > img.width() || box.bottom > img.height()) {
        throw BoxOutOfBounds("box (" + std::to_string(box.left) + "," + std::to_string(box.top) + "," +
                             std::to_string(box.right) + "," + std::to_string(box.bottom) +
                             ") is outside the " + std::to_string(img.width()) + "x" +
                             std::to_string(img.height()) + " image");
    }
    GrayRaster out(box.width() + 2 * pad, box.height() + 2 * pad, background);
    for (int y = box.top; y < box.bottom; ++y) {
        auto src = img.row(y);
        std::copy(src.begin() + box.left, src.begin() + box.right, out.data().begin() +
                  static_cast<std::ptrdiff_t>(y - box.top + pad) * out.width() + pad);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Mock backend

MockOcrBackend::MockOcrBackend(font::Metrics metrics, int threshold, double max_distance_fraction)
    : metrics_(metrics), threshold_(threshold), max_distance_fraction_(max_distance_fraction)
{
}

OcrResult MockOcrBackend::recognize(const GrayRaster& img, const BBox& box) const
{
    return recognize_image(crop_padded(img, box));
}

namespace {

struct InkGrid {
    int width;
    int height;
    std::vector<std::uint8_t> bits;

    int get(int x, int y) const
    {
        if (x < 0 || y < 0 || x >= width || y >= height) return 0;
        return bits[static_cast<std::size_t>(y) * width + x];
    }
};

// A text line candidate. Bands at least one glyph high get one top per line,
// snapped to the window holding the most ink; lower bands (punctuation only,
// or specks) keep every top whose window covers the band. Short bands are
// under half a glyph high.
struct LineBand {
    std::vector<int> tops;
    bool short_band = false;
};

std::vector<LineBand> find_lines(const InkGrid& ink, int cell_h)
{
    std::vector<LineBand> out;
    if (ink.height < cell_h) return out;
    std::vector<int> rows(ink.height, 0);
    for (int y = 0; y < ink.height; ++y) {
        for (int x = 0; x < ink.width; ++x) rows[y] += ink.get(x, y);
    }
    const int tau = std::max(2, static_cast<int>(0.02 * ink.width));
    auto window = [&](int top) {
        int s = 0;
        for (int y = top; y < top + cell_h; ++y) s += rows[y];
        return s;
    };

    int y = 0;
    while (y < ink.height) {
        if (rows[y] < tau) {
            ++y;
            continue;
        }
        int end = y;
        while (end < ink.height && rows[end] >= tau) ++end;
        // punctuation like ';' or '-.-' leaves blank rows inside one line
        for (;;) {
            int next = end;
            while (next < ink.height && rows[next] < tau) ++next;
            int next_end = next;
            while (next_end < ink.height && rows[next_end] >= tau) ++next_end;
            if (next >= ink.height || next_end - y > cell_h) break;
            end = next_end;
        }
        if (end - y >= cell_h) {
            int t = y;
            while (end - t >= (cell_h + 1) / 2) {
                int best = -1;
                int best_sum = -1;
                for (int o = t - 2; o <= t + 2; ++o) {
                    if (o < 0 || o + cell_h > ink.height) continue;
                    const int s = window(o);
                    if (s > best_sum) {
                        best_sum = s;
                        best = o;
                    }
                }
                if (best < 0) break;
                out.push_back({{best}, false});
                t = best + cell_h;
            }
        } else {
            // ink lower than a cell does not fix the line top
            LineBand band{{}, end - y < (cell_h + 1) / 2};
            for (int o = std::max(0, end - cell_h); o <= std::min(y, ink.height - cell_h); ++o) band.tops.push_back(o);
            if (!band.tops.empty()) out.push_back(std::move(band));
        }
        y = end;
    }
    return out;
}

struct DecodedLine {
    std::string text;
    long distance = 0;
    double confidence_sum = 0;
    int glyph_cells = 0;
    int replacements = 0;
};

} // namespace

OcrResult MockOcrBackend::recognize_image(const GrayRaster& img) const
{
    InkGrid ink{img.width(), img.height(), std::vector<std::uint8_t>(img.data().size())};
    for (std::size_t i = 0; i < img.data().size(); ++i) ink.bits[i] = img.data()[i] < threshold_ ? 1 : 0;

    const int s = metrics_.scale;
    const int cell_w = metrics_.cell_width();
    const int cell_h = metrics_.cell_height();
    const int advance = metrics_.advance();
    const int spacing = metrics_.spacing();
    const int cell_area = cell_w * cell_h;
    const int max_distance = static_cast<int>(max_distance_fraction_ * cell_area);
    const auto& glyphs = font::glyphs();

    auto decode = [&](int top, int first_cell) {
        DecodedLine out;
        std::string line;
        for (int cx = first_cell; cx < ink.width; cx += advance) {
            int blank_distance = 0;
            for (int y = 0; y < cell_h; ++y) {
                for (int x = 0; x < cell_w; ++x) blank_distance += ink.get(cx + x, top + y);
            }
            int best_distance = blank_distance;
            int best_glyph = -1;
            for (std::size_t g = 0; g < glyphs.size(); ++g) {
                int d = 0;
                for (int y = 0; y < cell_h && d < best_distance; ++y) {
                    for (int x = 0; x < cell_w; ++x) {
                        const int want = glyphs[g].ink(x / s, y / s) ? 1 : 0;
                        d += want ^ ink.get(cx + x, top + y);
                    }
                }
                if (d < best_distance) {
                    best_distance = d;
                    best_glyph = static_cast<int>(g);
                }
            }
            out.distance += best_distance;
            if (best_glyph < 0 && best_distance <= max_distance) {
                line.push_back(' ');
                continue;
            }
            ++out.glyph_cells;
            if (best_distance > max_distance) {
                line += font::kReplacement;
                ++out.replacements;
            } else {
                line.push_back(glyphs[best_glyph].ch);
                out.confidence_sum += 1.0 - static_cast<double>(best_distance) / cell_area;
            }
        }
        out.text = text::normalize_whitespace(line);
        return out;
    };

    // The spacing columns between cells are blank on clean text. Letters and
    // digits touch both cell edges, so any of them pins the phase; lines of
    // narrow punctuation leave several blank phases, decided by match distance.
    auto decode_best = [&](int top) {
        std::vector<long> cols(ink.width, 0);
        for (int x = 0; x < ink.width; ++x) {
            for (int y = top; y < top + cell_h; ++y) cols[x] += ink.get(x, y);
        }
        std::vector<long> score(advance, 0);
        for (int x = 0; x < ink.width; ++x) {
            for (int p = 0; p < advance; ++p) {
                if (((x - p) % advance + advance) % advance < spacing) score[p] += cols[x];
            }
        }
        const long low = *std::min_element(score.begin(), score.end());
        std::optional<DecodedLine> best;
        for (int p = 0; p < advance; ++p) {
            if (score[p] != low) continue;
            int first_cell = (p + spacing) % advance;
            if (first_cell > 0) first_cell -= advance;
            DecodedLine d = decode(top, first_cell);
            if (!best || d.distance < best->distance) best = std::move(d);
        }
        return *best;
    };

    OcrResult result;
    double confidence_sum = 0;
    int glyph_cells = 0;
    for (const LineBand& band : find_lines(ink, cell_h)) {
        std::optional<DecodedLine> best;
        for (int top : band.tops) {
            DecodedLine d = decode_best(top);
            if (!best || d.distance < best->distance) best = std::move(d);
        }
        // short bands that do not read as glyphs are specks or rules
        if (band.short_band && (best->replacements > 0 || best->glyph_cells == 0)) continue;
        glyph_cells += best->glyph_cells;
        confidence_sum += best->confidence_sum;
        if (!best->text.empty()) result.lines.push_back(std::move(best->text));
    }
    result.mean_confidence = glyph_cells ? confidence_sum / glyph_cells : 0.0;
    return result;
}

// ---------------------------------------------------------------------------
// Subprocess backend

ProcessResult run_process(const std::vector<std::string>& argv)
{
    if (argv.empty()) throw BackendUnavailable("empty command line");
    int out_pipe[2];
    int err_pipe[2];
    if (pipe(out_pipe) != 0) throw BackendUnavailable(std::string("pipe: ") + std::strerror(errno));
    if (pipe2(err_pipe, O_CLOEXEC) != 0) {
        ::close(out_pipe[0]);
        ::close(out_pipe[1]);
        throw BackendUnavailable(std::string("pipe: ") + std::strerror(errno));
    }

    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);

    const pid_t pid = fork();
    if (pid < 0) {
        for (int fd : {out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]}) ::close(fd);
        throw BackendUnavailable(std::string("fork: ") + std::strerror(errno));
    }
    if (pid == 0) {
        dup2(out_pipe[1], STDOUT_FILENO);
        const int devnull = ::open("/dev/null", O_WRONLY);
        if (devnull >= 0) dup2(devnull, STDERR_FILENO);
        ::close(out_pipe[0]);
        ::close(out_pipe[1]);
        ::close(err_pipe[0]);
        execvp(args[0], args.data());
        const int code = errno;
        [[maybe_unused]] auto n = write(err_pipe[1], &code, sizeof code);
        _exit(127);
    }

    ::close(out_pipe[1]);
    ::close(err_pipe[1]);
    ProcessResult result;
    char buf[4096];
    for (;;) {
        const ssize_t n = read(out_pipe[0], buf, sizeof buf);
        if (n > 0) {
            result.stdout_text.append(buf, static_cast<std::size_t>(n));
        } else if (n == 0 || errno != EINTR) {
            break;
        }
    }
    ::close(out_pipe[0]);

    int exec_errno = 0;
    const ssize_t got = read(err_pipe[0], &exec_errno, sizeof exec_errno);
    ::close(err_pipe[0]);

    int status = 0;
    while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    if (got == static_cast<ssize_t>(sizeof exec_errno)) {
        throw BackendUnavailable("cannot execute " + argv[0] + ": " + std::strerror(exec_errno));
    }
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
    return result;
}

OcrResult parse_tesseract_tsv(std::string_view tsv)
{
    using LineKey = std::tuple<int, int, int, int>;  // page, block, paragraph, line
    std::map<LineKey, std::vector<std::string>> words;
    std::vector<LineKey> order;
    double conf_sum = 0;
    int conf_count = 0;

    for (const std::string& raw : text::split(tsv, '\n')) {
        const auto f = text::split(raw, '\t');
        if (f.size() < 12 || f[0] != "5") continue;  // header and non-word rows
        double conf = -1;
        try {
            conf = std::stod(f[10]);
        } catch (const std::exception&) {
            continue;
        }
        std::string word = text::trim(f[11]);
        if (conf < 0 || word.empty()) continue;
        const LineKey key{std::stoi(f[1]), std::stoi(f[2]), std::stoi(f[3]), std::stoi(f[4])};
        if (!words.count(key)) order.push_back(key);
        words[key].push_back(std::move(word));
        conf_sum += conf;
        ++conf_count;
    }

    OcrResult result;
    for (const auto& key : order) result.lines.push_back(text::join(words[key], " "));
    result.mean_confidence = conf_count ? std::clamp(conf_sum / conf_count / 100.0, 0.0, 1.0) : 0.0;
    return result;
}

SubprocessOcrBackend::SubprocessOcrBackend(SubprocessOcrConfig config) : config_(std::move(config))
{
    if (config_.scratch_dir.empty()) config_.scratch_dir = fs::temp_directory_path();
}

namespace {

class TempFile {
public:
    explicit TempFile(fs::path path) : path_(std::move(path)) {}
    ~TempFile()
    {
        std::error_code ec;
        fs::remove(path_, ec);
    }
    TempFile(const TempFile&) = delete;
    TempFile& operator=(const TempFile&) = delete;
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

fs::path unique_scratch_name(const fs::path& dir)
{
    static std::atomic<unsigned long> counter{0};
    return dir / ("regmine-ocr-" + std::to_string(getpid()) + "-" + std::to_string(counter++) + ".pgm");
}

} // namespace

OcrResult SubprocessOcrBackend::recognize(const GrayRaster& img, const BBox& box) const
{
    const GrayRaster crop = crop_padded(img, box);
    std::error_code ec;
    fs::create_directories(config_.scratch_dir, ec);
    TempFile tmp(unique_scratch_name(config_.scratch_dir));
    try {
        write_pgm(tmp.path(), crop);
    } catch (const Error& e) {
        throw BackendUnavailable(std::string("cannot stage OCR input: ") + e.what());
    }

    std::vector<std::string> argv{config_.engine, tmp.path().string(), "stdout", "--psm",
                                  std::to_string(config_.page_segmentation_mode)};
    argv.insert(argv.end(), config_.extra_flags.begin(), config_.extra_flags.end());
    argv.emplace_back("tsv");

    const ProcessResult run = run_process(argv);
    if (run.exit_code != 0) {
        throw OcrFailure(config_.engine + " exited with status " + std::to_string(run.exit_code));
    }
    return parse_tesseract_tsv(run.stdout_text);
}

} // namespace regmine
