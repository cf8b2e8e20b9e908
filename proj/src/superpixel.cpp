#include "gradsal/superpixel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "gradsal/error.hpp"

namespace gradsal {
namespace {

struct Center {
    double l, a, b, x, y;
};

constexpr std::uint32_t kUnassigned = std::numeric_limits<std::uint32_t>::max();

// Labels every 4-connected component; returns the component count.
std::size_t label_components(std::size_t h, std::size_t w, const std::vector<std::uint32_t>& labels,
                             std::vector<std::uint32_t>& comp,
                             std::vector<std::vector<std::size_t>>& pixels) {
    comp.assign(h * w, kUnassigned);
    pixels.clear();
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < h * w; ++start) {
        if (comp[start] != kUnassigned) continue;
        const auto id = static_cast<std::uint32_t>(pixels.size());
        pixels.emplace_back();
        auto& members = pixels.back();
        comp[start] = id;
        stack.assign(1, start);
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            members.push_back(p);
            const std::size_t y = p / w, x = p % w;
            const std::size_t nbr[4] = {y > 0 ? p - w : p, y + 1 < h ? p + w : p,
                                        x > 0 ? p - 1 : p, x + 1 < w ? p + 1 : p};
            for (std::size_t q : nbr) {
                if (q != p && comp[q] == kUnassigned && labels[q] == labels[p]) {
                    comp[q] = id;
                    stack.push_back(q);
                }
            }
        }
        std::sort(members.begin(), members.end());
    }
    return pixels.size();
}

// Splits disconnected labels and folds fragments smaller than min_size into
// their largest adjacent component. Relabels 0..K-1 by first raster pixel.
SuperpixelMap enforce_connectivity(std::size_t h, std::size_t w,
                                   const std::vector<std::uint32_t>& labels, double min_size) {
    std::vector<std::uint32_t> comp;
    std::vector<std::vector<std::size_t>> pixels;
    const std::size_t n = label_components(h, w, labels, comp, pixels);

    std::vector<std::uint32_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0u);
    std::vector<std::size_t> size(n);
    for (std::size_t c = 0; c < n; ++c) size[c] = pixels[c].size();
    auto find = [&](std::uint32_t c) {
        while (parent[c] != c) c = parent[c] = parent[parent[c]];
        return c;
    };

    for (std::uint32_t c = 0; c < n; ++c) {
        if (find(c) != c || static_cast<double>(size[c]) >= min_size) continue;
        std::uint32_t best = kUnassigned;
        for (std::size_t p : pixels[c]) {
            const std::size_t y = p / w, x = p % w;
            const std::size_t nbr[4] = {y > 0 ? p - w : p, y + 1 < h ? p + w : p,
                                        x > 0 ? p - 1 : p, x + 1 < w ? p + 1 : p};
            for (std::size_t q : nbr) {
                const std::uint32_t r = find(comp[q]);
                if (r == c) continue;
                if (best == kUnassigned || size[r] > size[best] || (size[r] == size[best] && r < best)) {
                    best = r;
                }
            }
        }
        if (best == kUnassigned) continue;  // the component is the whole image
        parent[c] = best;
        size[best] += size[c];
    }

    SuperpixelMap out;
    out.height = h;
    out.width = w;
    out.labels.assign(h * w, 0);
    std::vector<std::uint32_t> relabel(n, kUnassigned);
    for (std::size_t p = 0; p < h * w; ++p) {
        const std::uint32_t r = find(comp[p]);
        if (relabel[r] == kUnassigned) {
            relabel[r] = static_cast<std::uint32_t>(out.counts.size());
            out.counts.push_back(0);
        }
        out.labels[p] = relabel[r];
        ++out.counts[relabel[r]];
    }
    return out;
}

SuperpixelMap compact_labels(std::size_t h, std::size_t w, const std::vector<std::uint32_t>& labels) {
    SuperpixelMap out;
    out.height = h;
    out.width = w;
    out.labels.resize(h * w);
    std::vector<std::uint32_t> relabel;
    for (std::size_t p = 0; p < h * w; ++p) {
        if (labels[p] >= relabel.size()) relabel.resize(labels[p] + 1, kUnassigned);
        if (relabel[labels[p]] == kUnassigned) {
            relabel[labels[p]] = static_cast<std::uint32_t>(out.counts.size());
            out.counts.push_back(0);
        }
        out.labels[p] = relabel[labels[p]];
        ++out.counts[out.labels[p]];
    }
    return out;
}

}  // namespace

SuperpixelMap slic(const ImageRGB& image, const SlicParams& params) {
    return slic_lab(rgb_to_lab(image), params);
}

SuperpixelMap slic_lab(const LabImage& lab, const SlicParams& params) {
    require_image(lab, "slic");
    const std::size_t h = lab.dim(1), w = lab.dim(2), n = h * w;
    if (params.superpixels < 1) throw UsageError("slic: superpixel count must be >= 1");
    if (params.superpixels > n) throw UsageError("slic: more superpixels requested than pixels");
    if (!(params.compactness > 0.0) || !std::isfinite(params.compactness)) {
        throw UsageError("slic: compactness must be > 0");
    }
    if (params.max_iterations < 1) throw UsageError("slic: max_iterations must be >= 1");

    const double k = static_cast<double>(params.superpixels);
    const double step = std::sqrt(static_cast<double>(n) / k);
    const auto nx = static_cast<std::size_t>(std::min<double>(
        static_cast<double>(w), std::ceil(std::sqrt(k * static_cast<double>(w) / static_cast<double>(h)) - 1e-9)));
    const auto ny = static_cast<std::size_t>(std::clamp<double>(
        std::round(k / static_cast<double>(std::max<std::size_t>(nx, 1))), 1.0, static_cast<double>(h)));
    const double cell_w = static_cast<double>(w) / static_cast<double>(nx);
    const double cell_h = static_cast<double>(h) / static_cast<double>(ny);

    std::vector<Center> centers;
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            const double cx = (static_cast<double>(i) + 0.5) * cell_w - 0.5;
            const double cy = (static_cast<double>(j) + 0.5) * cell_h - 0.5;
            const auto px = static_cast<std::size_t>(std::clamp<double>(std::round(cx), 0.0, static_cast<double>(w - 1)));
            const auto py = static_cast<std::size_t>(std::clamp<double>(std::round(cy), 0.0, static_cast<double>(h - 1)));
            centers.push_back({lab.at(0, py, px), lab.at(1, py, px), lab.at(2, py, px), cx, cy});
        }
    }

    const double spatial = (params.compactness / step) * (params.compactness / step);
    const auto radius = static_cast<long>(std::ceil(std::max(cell_w, cell_h)));
    auto distance = [&](const Center& c, std::size_t p) {
        const std::size_t y = p / w, x = p % w;
        const double dl = lab[p] - c.l, da = lab[n + p] - c.a, db = lab[2 * n + p] - c.b;
        const double dx = static_cast<double>(x) - c.x, dy = static_cast<double>(y) - c.y;
        return dl * dl + da * da + db * db + spatial * (dx * dx + dy * dy);
    };

    std::vector<std::uint32_t> labels(n, kUnassigned), previous;
    std::vector<double> best(n);
    for (std::size_t iter = 0; iter < params.max_iterations; ++iter) {
        std::fill(best.begin(), best.end(), std::numeric_limits<double>::infinity());
        std::fill(labels.begin(), labels.end(), kUnassigned);
        for (std::size_t c = 0; c < centers.size(); ++c) {
            const long x0 = std::max<long>(0, static_cast<long>(std::floor(centers[c].x)) - radius);
            const long x1 = std::min<long>(static_cast<long>(w) - 1, static_cast<long>(std::ceil(centers[c].x)) + radius);
            const long y0 = std::max<long>(0, static_cast<long>(std::floor(centers[c].y)) - radius);
            const long y1 = std::min<long>(static_cast<long>(h) - 1, static_cast<long>(std::ceil(centers[c].y)) + radius);
            for (long y = y0; y <= y1; ++y) {
                for (long x = x0; x <= x1; ++x) {
                    const std::size_t p = static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x);
                    const double d = distance(centers[c], p);
                    if (d < best[p]) {
                        best[p] = d;
                        labels[p] = static_cast<std::uint32_t>(c);
                    }
                }
            }
        }
        // Pixels outside every search window fall back to a global search.
        for (std::size_t p = 0; p < n; ++p) {
            if (labels[p] != kUnassigned) continue;
            for (std::size_t c = 0; c < centers.size(); ++c) {
                const double d = distance(centers[c], p);
                if (d < best[p]) {
                    best[p] = d;
                    labels[p] = static_cast<std::uint32_t>(c);
                }
            }
        }
        if (labels == previous) break;
        previous = labels;

        std::vector<Center> sums(centers.size(), Center{0, 0, 0, 0, 0});
        std::vector<std::size_t> members(centers.size(), 0);
        for (std::size_t p = 0; p < n; ++p) {
            Center& s = sums[labels[p]];
            s.l += lab[p];
            s.a += lab[n + p];
            s.b += lab[2 * n + p];
            s.x += static_cast<double>(p % w);
            s.y += static_cast<double>(p / w);
            ++members[labels[p]];
        }
        for (std::size_t c = 0; c < centers.size(); ++c) {
            if (members[c] == 0) continue;
            const double inv = 1.0 / static_cast<double>(members[c]);
            centers[c] = {sums[c].l * inv, sums[c].a * inv, sums[c].b * inv, sums[c].x * inv,
                          sums[c].y * inv};
        }
    }

    if (!params.enforce_connectivity) return compact_labels(h, w, labels);
    return enforce_connectivity(h, w, labels, step * step / 4.0);
}

void validate_superpixels(const SuperpixelMap& sp, bool require_connected) {
    if (sp.labels.size() != sp.height * sp.width || sp.labels.empty()) {
        throw DataError("superpixel map size does not match its dimensions");
    }
    std::vector<std::size_t> seen(sp.count(), 0);
    for (std::uint32_t l : sp.labels) {
        if (l >= sp.count()) throw DataError("superpixel label " + std::to_string(l) + " out of range");
        ++seen[l];
    }
    for (std::size_t j = 0; j < sp.count(); ++j) {
        if (seen[j] == 0) throw DataError("superpixel " + std::to_string(j) + " is empty");
        if (seen[j] != sp.counts[j]) {
            throw DataError("superpixel " + std::to_string(j) + " count does not match its labels");
        }
    }
    if (!require_connected) return;
    std::vector<std::uint32_t> comp;
    std::vector<std::vector<std::size_t>> pixels;
    if (label_components(sp.height, sp.width, sp.labels, comp, pixels) != sp.count()) {
        throw DataError("a superpixel is not 4-connected");
    }
}

SaliencyMap smooth(const SaliencyMap& s, const SuperpixelMap& sp) {
    if (s.height != sp.height || s.width != sp.width) {
        throw DataError("smooth: saliency map and superpixel map differ in shape");
    }
    validate_superpixels(sp, false);
    const std::size_t k = sp.count();
    // Region mean taken relative to its first value, clamped to its range.
    std::vector<double> ref(k), lo(k), hi(k), sum(k, 0.0);
    std::vector<bool> started(k, false);
    for (std::size_t p = 0; p < s.size(); ++p) {
        const std::uint32_t j = sp.labels[p];
        const double v = s.values[p];
        if (!started[j]) {
            started[j] = true;
            ref[j] = lo[j] = hi[j] = v;
        }
        lo[j] = std::min(lo[j], v);
        hi[j] = std::max(hi[j], v);
        sum[j] += v - ref[j];
    }
    std::vector<double> mean(k);
    for (std::size_t j = 0; j < k; ++j) {
        mean[j] = std::clamp(ref[j] + sum[j] / static_cast<double>(sp.counts[j]), lo[j], hi[j]);
    }
    SaliencyMap out(s.height, s.width);
    for (std::size_t p = 0; p < s.size(); ++p) out.values[p] = mean[sp.labels[p]];
    return out;
}

}  // namespace gradsal
