#include "lexigrad/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace lexigrad {

namespace {

constexpr double kPixelScale = 1.0 / 255.0;

// stream tags for synthetic generation
constexpr std::uint64_t kTagCenters = 0xB10B5;
constexpr std::uint64_t kTagSamples = 0x5A3B1E;

[[noreturn]] void parse_error(const std::string& path, std::size_t offset, const std::string& what) {
    throw std::runtime_error(path + ": " + what + " at byte offset " + std::to_string(offset));
}

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& buf, std::size_t off, const std::string& path) {
    if (off + 4 > buf.size()) parse_error(path, buf.size(), "unexpected end of file reading u32");
    return (static_cast<std::uint32_t>(buf[off]) << 24) | (static_cast<std::uint32_t>(buf[off + 1]) << 16) |
           (static_cast<std::uint32_t>(buf[off + 2]) << 8) | static_cast<std::uint32_t>(buf[off + 3]);
}

}  // namespace

SubsetPartition partition(std::int64_t n, std::int64_t p, Rng& rng) {
    if (p < 1) throw std::invalid_argument("population size must be >= 1");
    if (p > n)
        throw std::invalid_argument("population size " + std::to_string(p) + " exceeds dataset size " +
                                    std::to_string(n));
    std::vector<std::int64_t> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);

    SubsetPartition part;
    part.assignments.resize(static_cast<std::size_t>(p));
    const std::int64_t base = n / p;
    const std::int64_t rem = n % p;
    std::size_t pos = 0;
    for (std::int64_t i = 0; i < p; ++i) {
        const std::int64_t len = base + (i < rem ? 1 : 0);
        auto& subset = part.assignments[static_cast<std::size_t>(i)];
        subset.assign(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                      perm.begin() + static_cast<std::ptrdiff_t>(pos + static_cast<std::size_t>(len)));
        pos += static_cast<std::size_t>(len);
    }
    return part;
}

CaseSequence shuffle_cases(std::int64_t n, Rng& rng) {
    if (n < 1) throw std::invalid_argument("case count must be >= 1");
    CaseSequence seq;
    seq.order.resize(static_cast<std::size_t>(n));
    std::iota(seq.order.begin(), seq.order.end(), 0);
    rng.shuffle(seq.order);
    return seq;
}

Tensor augment(const Tensor& image, const AugmentConfig& cfg, Rng& rng) {
    if (image.rank() != 3) throw std::invalid_argument("augment expects a [C,H,W] image");
    if (!cfg.enabled) return image;
    const std::int64_t c_n = image.dim(0), h = image.dim(1), w = image.dim(2);
    const std::int64_t p = cfg.crop_padding;

    // crop offsets into the zero-padded image; draw order: oy, ox, flip
    const std::int64_t oy = static_cast<std::int64_t>(rng.bounded(static_cast<std::uint64_t>(2 * p + 1)));
    const std::int64_t ox = static_cast<std::int64_t>(rng.bounded(static_cast<std::uint64_t>(2 * p + 1)));
    const bool flip = rng.bernoulli(cfg.hflip_prob);

    Tensor out = Tensor::zeros(image.shape);
    for (std::int64_t c = 0; c < c_n; ++c) {
        for (std::int64_t y = 0; y < h; ++y) {
            const std::int64_t sy = y + oy - p;
            if (sy < 0 || sy >= h) continue;
            for (std::int64_t x = 0; x < w; ++x) {
                const std::int64_t sx = x + ox - p;
                if (sx < 0 || sx >= w) continue;
                const std::int64_t dx = flip ? (w - 1 - x) : x;
                out[(c * h + y) * w + dx] = image[(c * h + sy) * w + sx];
            }
        }
    }
    return out;
}

Tensor normalize(const Tensor& t, std::span<const double> means) {
    const int chan_dim = t.rank() == 4 ? 1 : (t.rank() == 3 ? 0 : -1);
    if (chan_dim < 0) throw std::invalid_argument("normalize expects [C,H,W] or [N,C,H,W], got " +
                                                  shape_str(t.shape));
    const std::int64_t c_n = t.dim(chan_dim);
    if (static_cast<std::int64_t>(means.size()) != c_n)
        throw std::invalid_argument("got " + std::to_string(means.size()) + " channel means for " +
                                    std::to_string(c_n) + " channels");
    Tensor out = t;
    const std::int64_t plane = t.dim(chan_dim + 1) * t.dim(chan_dim + 2);
    const std::int64_t n = t.rank() == 4 ? t.dim(0) : 1;
    for (std::int64_t im = 0; im < n; ++im)
        for (std::int64_t c = 0; c < c_n; ++c) {
            double* base = out.data() + (im * c_n + c) * plane;
            for (std::int64_t i = 0; i < plane; ++i) base[i] -= means[static_cast<std::size_t>(c)];
        }
    return out;
}

std::vector<double> compute_channel_means(const Dataset& ds) {
    const std::int64_t n = ds.images.dim(0), c_n = ds.images.dim(1);
    const std::int64_t plane = ds.images.dim(2) * ds.images.dim(3);
    std::vector<double> means(static_cast<std::size_t>(c_n), 0.0);
    for (std::int64_t im = 0; im < n; ++im)
        for (std::int64_t c = 0; c < c_n; ++c) {
            const double* base = ds.images.data() + (im * c_n + c) * plane;
            double s = 0.0;
            for (std::int64_t i = 0; i < plane; ++i) s += base[i];
            means[static_cast<std::size_t>(c)] += s;
        }
    const double denom = static_cast<double>(n * plane);
    for (auto& m : means) m /= denom;
    return means;
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    const auto img = read_file(images_path);
    const std::uint32_t magic = read_be32(img, 0, images_path);
    if (magic != 0x00000803u)
        parse_error(images_path, 0, "bad magic 0x" + [&] {
            std::ostringstream os;
            os << std::hex << magic;
            return os.str();
        }() + " (want 0x803)");
    const std::int64_t n = read_be32(img, 4, images_path);
    const std::int64_t h = read_be32(img, 8, images_path);
    const std::int64_t w = read_be32(img, 12, images_path);
    const std::size_t need = 16 + static_cast<std::size_t>(n * h * w);
    if (img.size() < need)
        parse_error(images_path, img.size(),
                    "unexpected end of file (expected " + std::to_string(need) + " bytes)");

    const auto lbl = read_file(labels_path);
    const std::uint32_t lmagic = read_be32(lbl, 0, labels_path);
    if (lmagic != 0x00000801u) parse_error(labels_path, 0, "bad magic (want 0x801)");
    const std::int64_t ln = read_be32(lbl, 4, labels_path);
    if (ln != n)
        throw std::runtime_error(labels_path + ": label count " + std::to_string(ln) +
                                 " does not match image count " + std::to_string(n));
    if (lbl.size() < 8 + static_cast<std::size_t>(n))
        parse_error(labels_path, lbl.size(),
                    "unexpected end of file (expected " + std::to_string(8 + n) + " bytes)");

    Dataset ds;
    ds.images = Tensor::zeros({n, 1, h, w});
    for (std::int64_t i = 0; i < n * h * w; ++i)
        ds.images[i] = static_cast<double>(img[16 + static_cast<std::size_t>(i)]) * kPixelScale;
    ds.labels.resize(static_cast<std::size_t>(n));
    int max_label = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        ds.labels[static_cast<std::size_t>(i)] = lbl[8 + static_cast<std::size_t>(i)];
        max_label = std::max(max_label, ds.labels[static_cast<std::size_t>(i)]);
    }
    ds.num_classes = max_label + 1;
    ds.name = "idx";
    return ds;
}

Dataset load_cifar10(const std::vector<std::string>& batch_files) {
    constexpr std::size_t kRecord = 3073;  // 1 label byte + 3*32*32 pixels
    std::vector<double> pixels;
    std::vector<int> labels;
    for (const auto& path : batch_files) {
        const auto buf = read_file(path);
        if (buf.empty() || buf.size() % kRecord != 0)
            parse_error(path, (buf.size() / kRecord) * kRecord,
                        "truncated record (file size " + std::to_string(buf.size()) +
                            " not a multiple of 3073)");
        const std::size_t count = buf.size() / kRecord;
        for (std::size_t r = 0; r < count; ++r) {
            const std::uint8_t label = buf[r * kRecord];
            if (label > 9) parse_error(path, r * kRecord, "label byte out of range");
            labels.push_back(label);
            for (std::size_t i = 0; i < 3072; ++i)
                pixels.push_back(static_cast<double>(buf[r * kRecord + 1 + i]) * kPixelScale);
        }
    }
    if (labels.empty()) throw std::runtime_error("no cifar10 records loaded");
    Dataset ds;
    const std::int64_t n = static_cast<std::int64_t>(labels.size());
    ds.images = Tensor({n, 3, 32, 32}, std::move(pixels));
    ds.labels = std::move(labels);
    ds.num_classes = 10;
    ds.name = "cifar10";
    return ds;
}

Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");

    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::string cur;
        std::istringstream is(s);
        while (std::getline(is, cur, ',')) out.push_back(cur);
        if (!s.empty() && s.back() == ',') out.push_back("");
        return out;
    };

    const auto header = split(line);
    int label_col = -1;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == "label") label_col = static_cast<int>(i);
    if (label_col < 0) throw std::runtime_error(path + ": no column named \"label\" in header");
    const std::int64_t dims = static_cast<std::int64_t>(header.size()) - 1;
    if (dims < 1) throw std::runtime_error(path + ": no feature columns");

    std::vector<double> features;
    std::vector<int> labels;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != header.size())
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected " +
                                     std::to_string(header.size()) + " columns, got " +
                                     std::to_string(cells.size()));
        for (std::size_t i = 0; i < cells.size(); ++i) {
            try {
                const double v = std::stod(cells[i]);
                if (static_cast<int>(i) == label_col)
                    labels.push_back(static_cast<int>(v));
                else
                    features.push_back(v);
            } catch (const std::exception&) {
                throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad numeric value \"" +
                                         cells[i] + "\"");
            }
        }
    }
    if (labels.empty()) throw std::runtime_error(path + ": no data rows");

    Dataset ds;
    const std::int64_t n = static_cast<std::int64_t>(labels.size());
    ds.images = Tensor({n, 1, 1, dims}, std::move(features));
    int max_label = 0;
    for (int l : labels) {
        if (l < 0) throw std::runtime_error(path + ": negative label");
        max_label = std::max(max_label, l);
    }
    ds.labels = std::move(labels);
    ds.num_classes = max_label + 1;
    ds.name = "csv";
    return ds;
}

Dataset make_synthetic(const SyntheticSpec& spec) {
    if (spec.n < 1) throw std::invalid_argument("synthetic n must be >= 1");
    Dataset ds;
    if (spec.kind == SyntheticSpec::Kind::TwoMoons) {
        // label = i mod 2; class 0 on (cos t, sin t), class 1 on
        // (1 - cos t, 0.5 - sin t), t uniform in [0, pi); iid gaussian noise
        Rng rng(derive_seed(spec.seed, kTagSamples));
        std::vector<double> vals;
        vals.reserve(static_cast<std::size_t>(spec.n) * 2);
        ds.labels.resize(static_cast<std::size_t>(spec.n));
        for (std::int64_t i = 0; i < spec.n; ++i) {
            const int label = static_cast<int>(i % 2);
            const double t = rng.uniform01() * 3.14159265358979323846;
            double x, y;
            if (label == 0) {
                x = std::cos(t);
                y = std::sin(t);
            } else {
                x = 1.0 - std::cos(t);
                y = 0.5 - std::sin(t);
            }
            x += spec.noise * rng.gaussian();
            y += spec.noise * rng.gaussian();
            vals.push_back(x);
            vals.push_back(y);
            ds.labels[static_cast<std::size_t>(i)] = label;
        }
        ds.images = Tensor({spec.n, 1, 1, 2}, std::move(vals));
        ds.num_classes = 2;
        ds.name = "two-moons";
        return ds;
    }

    // gaussian blobs: class centers m_c[j] = 2 * N(0,1); x = m_label + noise * N(0,I)
    if (spec.classes < 2) throw std::invalid_argument("blobs need >= 2 classes");
    std::int64_t c = spec.image_c, h = spec.image_h, w = spec.image_w;
    if (c == 0) {
        c = 1;
        h = 1;
        w = spec.dims;
    }
    const std::int64_t dims = c * h * w;
    if (dims < 1) throw std::invalid_argument("blobs need >= 1 dims");

    Rng centers_rng(derive_seed(spec.seed, kTagCenters));
    std::vector<std::vector<double>> centers(static_cast<std::size_t>(spec.classes));
    for (auto& center : centers) {
        center.resize(static_cast<std::size_t>(dims));
        for (auto& v : center) v = 2.0 * centers_rng.gaussian();
    }

    Rng rng(derive_seed(spec.seed, kTagSamples));
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(spec.n * dims));
    ds.labels.resize(static_cast<std::size_t>(spec.n));
    for (std::int64_t i = 0; i < spec.n; ++i) {
        const int label = static_cast<int>(i % spec.classes);
        const auto& center = centers[static_cast<std::size_t>(label)];
        for (std::int64_t j = 0; j < dims; ++j)
            vals.push_back(center[static_cast<std::size_t>(j)] + spec.noise * rng.gaussian());
        ds.labels[static_cast<std::size_t>(i)] = label;
    }
    ds.images = Tensor({spec.n, c, h, w}, std::move(vals));
    ds.num_classes = spec.classes;
    ds.name = "gaussian-blobs";
    return ds;
}

TrainTest load_dataset(const DataSpec& spec) {
    TrainTest tt;
    switch (spec.source) {
        case DataSpec::Source::SyntheticBlobs: {
            // one draw of train_n + test_n samples so both splits share the
            // same class centers; split by position
            SyntheticSpec s;
            s.kind = SyntheticSpec::Kind::GaussianBlobs;
            s.classes = spec.classes;
            s.dims = spec.dims;
            s.noise = spec.noise;
            s.image_c = spec.image_c;
            s.image_h = spec.image_h;
            s.image_w = spec.image_w;
            s.n = spec.train_n + spec.test_n;
            s.seed = spec.seed;
            Dataset all = make_synthetic(s);
            const std::int64_t dims = all.images.size() / all.size();
            auto take = [&](std::int64_t begin, std::int64_t count) {
                Dataset out;
                out.images = Tensor({count, all.images.dim(1), all.images.dim(2), all.images.dim(3)},
                                    std::vector<double>(all.images.values.begin() + begin * dims,
                                                        all.images.values.begin() + (begin + count) * dims));
                out.labels.assign(all.labels.begin() + begin, all.labels.begin() + begin + count);
                out.num_classes = all.num_classes;
                out.name = all.name;
                return out;
            };
            tt.train = take(0, spec.train_n);
            tt.test = take(spec.train_n, spec.test_n);
            break;
        }
        case DataSpec::Source::SyntheticMoons: {
            SyntheticSpec s;
            s.kind = SyntheticSpec::Kind::TwoMoons;
            s.noise = spec.noise;
            s.n = spec.train_n;
            s.seed = derive_seed(spec.seed, 0x7121A117);  // train stream
            tt.train = make_synthetic(s);
            s.n = spec.test_n;
            s.seed = derive_seed(spec.seed, 0x7E57);  // test stream
            tt.test = make_synthetic(s);
            break;
        }
        case DataSpec::Source::Idx:
            tt.train = load_idx(spec.train_images, spec.train_labels);
            tt.test = load_idx(spec.test_images, spec.test_labels);
            break;
        case DataSpec::Source::Cifar10:
            tt.train = load_cifar10(spec.train_files);
            tt.test = load_cifar10({spec.test_file});
            break;
        case DataSpec::Source::Csv:
            tt.train = load_csv(spec.train_csv);
            tt.test = load_csv(spec.test_csv);
            break;
    }
    tt.train.channel_means = compute_channel_means(tt.train);
    tt.test.channel_means = tt.train.channel_means;
    tt.test.num_classes = std::max(tt.test.num_classes, tt.train.num_classes);
    tt.train.num_classes = tt.test.num_classes;
    return tt;
}

Tensor gather_raw(const Dataset& ds, std::span<const std::int64_t> indices) {
    const std::int64_t c = ds.images.dim(1), h = ds.images.dim(2), w = ds.images.dim(3);
    const std::int64_t sample = c * h * w;
    Tensor out = Tensor::zeros({static_cast<std::int64_t>(indices.size()), c, h, w});
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::int64_t idx = indices[i];
        if (idx < 0 || idx >= ds.size())
            throw std::out_of_range("sample index " + std::to_string(idx) + " out of range");
        std::memcpy(out.data() + static_cast<std::int64_t>(i) * sample, ds.images.data() + idx * sample,
                    static_cast<std::size_t>(sample) * sizeof(double));
    }
    return out;
}

Tensor gather_eval_batch(const Dataset& ds, std::span<const std::int64_t> indices) {
    return normalize(gather_raw(ds, indices), ds.channel_means);
}

Tensor gather_train_batch(const Dataset& ds, std::span<const std::int64_t> indices,
                          const AugmentConfig& cfg, Rng& rng) {
    const std::int64_t c = ds.images.dim(1), h = ds.images.dim(2), w = ds.images.dim(3);
    const std::int64_t sample = c * h * w;
    Tensor out = Tensor::zeros({static_cast<std::int64_t>(indices.size()), c, h, w});
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::int64_t idx = indices[i];
        if (idx < 0 || idx >= ds.size())
            throw std::out_of_range("sample index " + std::to_string(idx) + " out of range");
        Tensor img({c, h, w},
                   std::vector<double>(ds.images.values.begin() + idx * sample,
                                       ds.images.values.begin() + (idx + 1) * sample));
        img = augment(img, cfg, rng);
        std::memcpy(out.data() + static_cast<std::int64_t>(i) * sample, img.data(),
                    static_cast<std::size_t>(sample) * sizeof(double));
    }
    return normalize(out, ds.channel_means);
}

std::vector<int> gather_labels(const Dataset& ds, std::span<const std::int64_t> indices) {
    std::vector<int> out(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) out[i] = ds.labels[static_cast<std::size_t>(indices[i])];
    return out;
}

}  // namespace lexigrad
