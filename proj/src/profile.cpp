#include "regmine/profile.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "regmine/error.hpp"
#include "regmine/text.hpp"

namespace regmine {

namespace {

constexpr std::string_view kBuiltinGazetteer = "builtin:rhode-island";

class Reader {
public:
    Reader(std::map<std::string, std::string> kv, std::string origin) : kv_(std::move(kv)), origin_(std::move(origin)) {}

    const std::string* raw(const std::string& key)
    {
        auto it = kv_.find(key);
        if (it == kv_.end()) return nullptr;
        used_.push_back(key);
        return &it->second;
    }

    void get(const std::string& key, std::string& out)
    {
        if (auto v = raw(key)) out = *v;
    }

    template <typename T>
    void get(const std::string& key, T& out)
    {
        const std::string* v = raw(key);
        if (!v) return;
        T parsed{};
        const char* first = v->data();
        const char* last = first + v->size();
        auto [ptr, ec] = std::from_chars(first, last, parsed);
        if (ec != std::errc() || ptr != last) throw FormatError(origin_ + ": bad value for " + key + ": '" + *v + "'");
        out = parsed;
    }

    void finish() const
    {
        for (const auto& [key, value] : kv_) {
            if (std::find(used_.begin(), used_.end(), key) == used_.end()) {
                throw FormatError(origin_ + ": unknown profile key '" + key + "'");
            }
        }
    }

private:
    std::map<std::string, std::string> kv_;
    std::string origin_;
    std::vector<std::string> used_;
};

std::string resolve(const std::string& value, const std::filesystem::path& base)
{
    if (value.empty() || value == "default" || value == kBuiltinGazetteer) return value;
    std::filesystem::path p(value);
    if (p.is_relative() && !base.empty()) p = base / p;
    return p.lexically_normal().string();
}

} // namespace

void Profile::validate() const
{
    merge.validate();
    if (columns == 0) throw std::invalid_argument("columns must be >= 1");
    if (!(classify.sigma_threshold > 0)) throw std::invalid_argument("sigma_threshold must be > 0");
    if (!(classify.center_tol >= 0)) throw std::invalid_argument("center_tol must be >= 0");
    if (!(classify.sigma_floor >= 0)) throw std::invalid_argument("sigma_floor must be >= 0");
    if (kmeans.max_iter < 1) throw std::invalid_argument("kmeans_max_iter must be >= 1");
    if (!(kmeans.tol >= 0)) throw std::invalid_argument("kmeans_tol must be >= 0");
    if (indent_px < 0) throw std::invalid_argument("indent_px must be >= 0");
    if (min_rows < 1) throw std::invalid_argument("min_rows must be >= 1");
    if (min_block_area < 0) throw std::invalid_argument("min_block_area must be >= 0");
    if (grammar.empty()) throw std::invalid_argument("grammar must be set");
    if (ocr_backend != "mock" && ocr_backend != "tesseract") {
        throw std::invalid_argument("unknown ocr_backend '" + ocr_backend + "'");
    }
    if (geocoder != "file" && geocoder != "http" && geocoder != "none") {
        throw std::invalid_argument("unknown geocoder '" + geocoder + "'");
    }
    if (geocoder == "http" && http.endpoint.empty()) throw std::invalid_argument("http geocoder needs http_endpoint");
    if (!(http.timeout_seconds > 0)) throw std::invalid_argument("http_timeout must be > 0");
    if (!(http.score_scale > 0)) throw std::invalid_argument("http_score_scale must be > 0");
    if (http.max_in_flight < 1 || http.max_in_flight > 1024) {
        throw std::invalid_argument("http_max_in_flight must be in [1,1024]");
    }
    if (!(min_ratio >= 0 && min_ratio <= 1)) throw std::invalid_argument("min_ratio must be in [0,1]");
    if (!(min_conf >= 0 && min_conf <= 1)) throw std::invalid_argument("min_conf must be in [0,1]");
}

int Profile::indent_for(int page_width) const
{
    if (indent_px > 0) return indent_px;
    const double column_width = static_cast<double>(page_width) / static_cast<double>(columns);
    return std::max(1, static_cast<int>(std::lround(0.05 * column_width)));
}

Profile Profile::parse(std::string_view contents, const std::filesystem::path& base_dir, const std::string& origin)
{
    std::map<std::string, std::string> kv;
    int lineno = 0;
    for (const std::string& raw : text::split(contents, '\n')) {
        ++lineno;
        std::string line = raw;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = text::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw FormatError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        }
        std::string key = text::trim(line.substr(0, eq));
        if (kv.count(key)) throw FormatError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
        kv[key] = text::trim(line.substr(eq + 1));
    }

    Profile p;
    Reader r(std::move(kv), origin);
    r.get("year", p.year);
    r.get("threshold", p.merge.threshold);
    int kw = p.merge.kernel.width();
    int kh = p.merge.kernel.height();
    r.get("kernel_width", kw);
    r.get("kernel_height", kh);
    try {
        p.merge.kernel = StructuringKernel(kw, kh);
    } catch (const std::invalid_argument& e) {
        throw FormatError(origin + ": " + e.what());
    }
    r.get("close_iterations", p.merge.close_iterations);
    r.get("open_iterations", p.merge.open_iterations);
    r.get("columns", p.columns);
    r.get("sigma_threshold", p.classify.sigma_threshold);
    r.get("center_tol", p.classify.center_tol);
    r.get("sigma_floor", p.classify.sigma_floor);
    r.get("kmeans_max_iter", p.kmeans.max_iter);
    r.get("kmeans_tol", p.kmeans.tol);
    r.get("indent_px", p.indent_px);
    r.get("min_rows", p.min_rows);
    r.get("min_block_area", p.min_block_area);
    r.get("grammar", p.grammar);
    r.get("ocr_backend", p.ocr_backend);
    r.get("tesseract_path", p.tesseract.engine);
    if (auto flags = r.raw("tesseract_flags")) {
        for (const auto& f : text::split(text::normalize_whitespace(*flags), ' ')) {
            if (!f.empty()) p.tesseract.extra_flags.push_back(f);
        }
    }
    r.get("tesseract_psm", p.tesseract.page_segmentation_mode);
    std::string scratch;
    r.get("ocr_scratch", scratch);
    if (!scratch.empty()) p.tesseract.scratch_dir = resolve(scratch, base_dir);
    r.get("geocoder", p.geocoder);
    r.get("gazetteer", p.gazetteer);
    r.get("http_endpoint", p.http.endpoint);
    r.get("http_api_key_env", p.http.api_key_env);
    r.get("http_timeout", p.http.timeout_seconds);
    r.get("http_score_scale", p.http.score_scale);
    r.get("http_region", p.http.region);
    r.get("http_max_in_flight", p.http.max_in_flight);
    r.get("min_ratio", p.min_ratio);
    r.get("min_conf", p.min_conf);
    r.finish();

    p.grammar = resolve(p.grammar, base_dir);
    p.gazetteer = resolve(p.gazetteer, base_dir);
    // tesseract_path is looked up on PATH unless it contains a slash
    if (p.tesseract.engine.find('/') != std::string::npos) p.tesseract.engine = resolve(p.tesseract.engine, base_dir);

    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw FormatError(origin + ": " + e.what());
    }
    return p;
}

Profile Profile::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open profile " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.parent_path(), path.string());
}

std::string Profile::serialize() const
{
    std::ostringstream o;
    auto num = [](double v) {
        std::string s = text::format_fixed(v, 6);
        while (s.back() == '0') s.pop_back();
        if (s.back() == '.') s.pop_back();
        return s;
    };
    o << "year = " << year << "\n";
    o << "threshold = " << merge.threshold << "\n";
    o << "kernel_width = " << merge.kernel.width() << "\n";
    o << "kernel_height = " << merge.kernel.height() << "\n";
    o << "close_iterations = " << merge.close_iterations << "\n";
    o << "open_iterations = " << merge.open_iterations << "\n";
    o << "columns = " << columns << "\n";
    o << "sigma_threshold = " << num(classify.sigma_threshold) << "\n";
    o << "center_tol = " << num(classify.center_tol) << "\n";
    o << "sigma_floor = " << num(classify.sigma_floor) << "\n";
    o << "kmeans_max_iter = " << kmeans.max_iter << "\n";
    o << "kmeans_tol = " << num(kmeans.tol) << "\n";
    o << "indent_px = " << indent_px << "\n";
    o << "min_rows = " << min_rows << "\n";
    o << "min_block_area = " << min_block_area << "\n";
    o << "grammar = " << grammar << "\n";
    o << "ocr_backend = " << ocr_backend << "\n";
    o << "tesseract_path = " << tesseract.engine << "\n";
    if (!tesseract.extra_flags.empty()) o << "tesseract_flags = " << text::join(tesseract.extra_flags, " ") << "\n";
    o << "tesseract_psm = " << tesseract.page_segmentation_mode << "\n";
    if (!tesseract.scratch_dir.empty()) o << "ocr_scratch = " << tesseract.scratch_dir.string() << "\n";
    o << "geocoder = " << geocoder << "\n";
    o << "gazetteer = " << gazetteer << "\n";
    if (!http.endpoint.empty()) o << "http_endpoint = " << http.endpoint << "\n";
    if (!http.api_key_env.empty()) o << "http_api_key_env = " << http.api_key_env << "\n";
    o << "http_timeout = " << num(http.timeout_seconds) << "\n";
    o << "http_score_scale = " << num(http.score_scale) << "\n";
    o << "http_region = " << http.region << "\n";
    o << "http_max_in_flight = " << http.max_in_flight << "\n";
    o << "min_ratio = " << num(min_ratio) << "\n";
    o << "min_conf = " << num(min_conf) << "\n";
    return o.str();
}

void Profile::save(const std::filesystem::path& path) const
{
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << serialize();
}

Backends make_backends(const Profile& profile)
{
    profile.validate();
    Backends b;
    if (profile.ocr_backend == "mock") {
        b.ocr = std::make_shared<MockOcrBackend>(font::Metrics{}, profile.merge.threshold);
    } else {
        b.ocr = std::make_shared<SubprocessOcrBackend>(profile.tesseract);
    }

    Gazetteer gaz = profile.gazetteer == kBuiltinGazetteer ? rhode_island_gazetteer()
                    : profile.gazetteer.empty()            ? Gazetteer{}
                                                           : Gazetteer::load(profile.gazetteer);
    b.gazetteer = std::make_shared<const Gazetteer>(gaz);

    if (profile.geocoder == "file") {
        b.geocoder = std::make_shared<CachingGeocoder>(std::make_shared<FileGeocoder>(std::move(gaz)));
    } else if (profile.geocoder == "http") {
        b.geocoder = std::make_shared<CachingGeocoder>(std::make_shared<HttpGeocoder>(profile.http));
    }

    b.grammar = std::make_shared<const RecordGrammar>(profile.grammar == "default"
                                                          ? RecordGrammar::default_grammar()
                                                          : RecordGrammar::load(profile.grammar));
    return b;
}

} // namespace regmine
