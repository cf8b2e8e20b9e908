#include "gradsal/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "gradsal/error.hpp"
#include "gradsal/image_io.hpp"

namespace gradsal {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// xorshift-style generator with a portable uniform draw, so datasets are
// identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(splitmix64(seed)) {}
    std::uint64_t next() {
        state_ = splitmix64(state_);
        return state_;
    }
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

private:
    std::uint64_t state_;
};

enum class Shape { Circle = 0, Triangle = 1, Rectangle = 2, Cross = 3 };

struct Object {
    Shape shape;
    double cx, cy, radius, angle, aspect;
    double r, g, b;
};

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// Multi-octave bilinear value noise in [0, 1].
std::vector<double> value_noise(std::size_t size, Rng& rng) {
    std::vector<double> out(size * size, 0.0);
    const std::size_t grids[3] = {4, 8, 16};
    const double amps[3] = {0.6, 0.3, 0.1};
    for (int o = 0; o < 3; ++o) {
        const std::size_t g = grids[o];
        std::vector<double> lattice((g + 1) * (g + 1));
        for (double& v : lattice) v = rng.uniform();
        for (std::size_t y = 0; y < size; ++y) {
            const double fy = (static_cast<double>(y) + 0.5) / static_cast<double>(size) * static_cast<double>(g);
            const std::size_t iy = std::min(static_cast<std::size_t>(fy), g - 1);
            const double ty = smoothstep(fy - static_cast<double>(iy));
            for (std::size_t x = 0; x < size; ++x) {
                const double fx = (static_cast<double>(x) + 0.5) / static_cast<double>(size) * static_cast<double>(g);
                const std::size_t ix = std::min(static_cast<std::size_t>(fx), g - 1);
                const double tx = smoothstep(fx - static_cast<double>(ix));
                const double v00 = lattice[iy * (g + 1) + ix], v01 = lattice[iy * (g + 1) + ix + 1];
                const double v10 = lattice[(iy + 1) * (g + 1) + ix], v11 = lattice[(iy + 1) * (g + 1) + ix + 1];
                const double top = v00 + (v01 - v00) * tx, bottom = v10 + (v11 - v10) * tx;
                out[y * size + x] += amps[o] * (top + (bottom - top) * ty);
            }
        }
    }
    return out;
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
    const double c = v * s;
    const double hp = h * 6.0;
    const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
    double r1 = 0, g1 = 0, b1 = 0;
    switch (static_cast<int>(hp) % 6) {
        case 0: r1 = c; g1 = x; break;
        case 1: r1 = x; g1 = c; break;
        case 2: g1 = c; b1 = x; break;
        case 3: g1 = x; b1 = c; break;
        case 4: r1 = x; b1 = c; break;
        default: r1 = c; b1 = x; break;
    }
    const double m = v - c;
    r = r1 + m;
    g = g1 + m;
    b = b1 + m;
}

bool inside(const Object& o, double px, double py) {
    const double dx = px - o.cx, dy = py - o.cy;
    const double cs = std::cos(o.angle), sn = std::sin(o.angle);
    const double u = cs * dx + sn * dy, v = -sn * dx + cs * dy;
    const double r = o.radius;
    switch (o.shape) {
        case Shape::Circle:
            return u * u + v * v <= r * r;
        case Shape::Rectangle:
            return std::fabs(u) <= 0.95 * r && std::fabs(v) <= o.aspect * r;
        case Shape::Cross: {
            const double arm = 0.3 * r;
            return (std::fabs(u) <= r && std::fabs(v) <= arm) || (std::fabs(v) <= r && std::fabs(u) <= arm);
        }
        case Shape::Triangle: {
            double vx[3], vy[3];
            for (int k = 0; k < 3; ++k) {
                const double a = 2.0 * std::numbers::pi * k / 3.0 - std::numbers::pi / 2.0;
                vx[k] = r * std::cos(a);
                vy[k] = r * std::sin(a);
            }
            bool pos = false, neg = false;
            for (int k = 0; k < 3; ++k) {
                const int n = (k + 1) % 3;
                const double cross = (vx[n] - vx[k]) * (v - vy[k]) - (vy[n] - vy[k]) * (u - vx[k]);
                pos |= cross > 0;
                neg |= cross < 0;
            }
            return !(pos && neg);
        }
    }
    return false;
}

SyntheticSample render(std::size_t label, std::size_t size, std::uint64_t sample_seed) {
    Rng rng(sample_seed);
    SyntheticSample s;
    s.label = label;
    s.image = make_image(size, size);
    s.mask = Mask(size, size);

    double bg0[3], bg1[3];
    for (int c = 0; c < 3; ++c) {
        bg0[c] = rng.uniform(0.08, 0.45);
        bg1[c] = rng.uniform(0.08, 0.45);
    }
    const auto noise = value_noise(size, rng);
    for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
            const double n = noise[y * size + x];
            for (std::size_t c = 0; c < 3; ++c) {
                const double grain = rng.uniform(-0.03, 0.03);
                s.image.at(c, y, x) = std::clamp(bg0[c] + (bg1[c] - bg0[c]) * n + grain, 0.0, 1.0);
            }
        }
    }

    const auto dim = static_cast<double>(size);
    Object obj{};
    obj.shape = static_cast<Shape>(label);
    obj.radius = rng.uniform(0.22, 0.30) * dim;
    const double jitter = 0.12 * dim;
    obj.cx = 0.5 * dim + rng.uniform(-jitter, jitter);
    obj.cy = 0.5 * dim + rng.uniform(-jitter, jitter);
    obj.angle = rng.uniform(-0.26, 0.26);
    obj.aspect = rng.uniform(0.55, 0.85);
    hsv_to_rgb(rng.uniform(), rng.uniform(0.6, 1.0), rng.uniform(0.75, 1.0), obj.r, obj.g, obj.b);
    const double rgb[3] = {obj.r, obj.g, obj.b};
    for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
            if (!inside(obj, static_cast<double>(x) + 0.5, static_cast<double>(y) + 0.5)) continue;
            s.mask.values[y * size + x] = 1;
            for (std::size_t c = 0; c < 3; ++c) {
                s.image.at(c, y, x) = std::clamp(rgb[c] + rng.uniform(-0.02, 0.02), 0.0, 1.0);
            }
        }
    }
    return s;
}

std::string sample_id(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "sample_%05zu", i);
    return buf;
}

}  // namespace

const std::vector<std::string>& synthetic_class_names() {
    static const std::vector<std::string> names{"circle", "triangle", "rectangle", "cross"};
    return names;
}

std::vector<SyntheticSample> generate_dataset(std::size_t n, std::size_t classes, std::size_t size,
                                              std::uint64_t seed) {
    if (n < 1) throw UsageError("dataset size must be >= 1");
    if (classes < 1 || classes > synthetic_class_names().size()) {
        throw UsageError("class count must lie in [1, " +
                         std::to_string(synthetic_class_names().size()) + "]");
    }
    if (size < kMinSyntheticSize) {
        throw DataError("image size " + std::to_string(size) + " is too small to place objects (minimum " +
                        std::to_string(kMinSyntheticSize) + ")");
    }
    std::vector<SyntheticSample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(render(i % classes, size, splitmix64(seed) ^ splitmix64(i + 0x51ed27ULL)));
    }
    return out;
}

std::vector<Sample> to_training_samples(const std::vector<SyntheticSample>& data) {
    std::vector<Sample> out;
    out.reserve(data.size());
    for (const auto& s : data) out.push_back({s.image, s.label});
    return out;
}

void write_dataset(const std::vector<SyntheticSample>& data, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "images");
    fs::create_directories(dir / "masks");
    std::ofstream labels(dir / "labels.csv", std::ios::trunc);
    if (!labels) throw DataError("cannot write " + (dir / "labels.csv").string());
    labels << "id,label,class\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        const std::string id = sample_id(i);
        write_rgb8(data[i].image, dir / "images" / (id + ".png"));
        write_mask(data[i].mask, dir / "masks" / (id + ".png"));
        labels << id << ',' << data[i].label << ',' << synthetic_class_names()[data[i].label] << '\n';
    }
}

std::vector<LabeledImage> read_labeled_dir(const std::filesystem::path& dir) {
    std::ifstream in(dir / "labels.csv");
    if (!in) throw DataError("missing " + (dir / "labels.csv").string());
    std::vector<LabeledImage> out;
    std::string line;
    std::getline(in, line);  // header
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string id, label, class_name;
        if (!std::getline(ss, id, ',') || !std::getline(ss, label, ',')) {
            throw DataError("labels.csv line " + std::to_string(line_no) + " is malformed");
        }
        LabeledImage item;
        item.id = id;
        try {
            item.label = std::stoul(label);
        } catch (const std::exception&) {
            throw DataError("labels.csv line " + std::to_string(line_no) + " has a bad label");
        }
        if (std::getline(ss, class_name)) item.class_name = class_name;
        item.image = read_rgb(dir / "images" / (id + ".png"));
        out.push_back(std::move(item));
    }
    if (out.empty()) throw DataError("no labeled images in " + dir.string());
    return out;
}

}  // namespace gradsal
