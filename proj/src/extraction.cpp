#include "palettizer/extraction.hpp"

#include "palettizer/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numbers>
#include <numeric>
#include <unordered_map>

namespace palettizer {
namespace {

std::uint32_t pack(RgbColor c) { return (std::uint32_t{c.r} << 16) | (std::uint32_t{c.g} << 8) | c.b; }
RgbColor unpack(std::uint32_t v) {
    return {static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
}

/// Lab for every pixel, memoised per distinct sRGB value.
std::vector<LabColor> lab_pixels(const RasterImage& img) {
    std::unordered_map<std::uint32_t, LabColor> cache;
    std::vector<LabColor> out;
    out.reserve(img.size());
    for (const RgbColor& p : img.pixels()) {
        auto [it, inserted] = cache.try_emplace(pack(p));
        if (inserted) it->second = rgb_to_lab(p);
        out.push_back(it->second);
    }
    return out;
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (b < a) std::swap(a, b);
        parent[b] = a;
        return true;
    }
};

BBox bbox_of(const std::vector<int>& pixels, int width) {
    int x0 = width, y0 = std::numeric_limits<int>::max(), x1 = -1, y1 = -1;
    for (int p : pixels) {
        const int x = p % width;
        const int y = p / width;
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
    }
    if (x1 < 0) return {};
    return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

/// Rebuilds segments from a label image; labels are renumbered by first pixel.
std::vector<Segment> segments_from_labels(const std::vector<int>& labels, const std::vector<LabColor>& lab,
                                          int width) {
    std::unordered_map<int, int> remap;
    std::vector<Segment> segs;
    for (int i = 0; i < static_cast<int>(labels.size()); ++i) {
        auto [it, inserted] = remap.try_emplace(labels[i], static_cast<int>(segs.size()));
        if (inserted) segs.emplace_back();
        segs[it->second].pixels.push_back(i);
    }
    for (auto& s : segs) {
        double l = 0, a = 0, b = 0;
        for (int p : s.pixels) {
            l += lab[p].l;
            a += lab[p].a;
            b += lab[p].b;
        }
        const double n = static_cast<double>(s.pixels.size());
        s.mean = {l / n, a / n, b / n};
        s.bbox = bbox_of(s.pixels, width);
    }
    return segs;
}

LabColor weighted_mean(const LabColor& x, double wx, const LabColor& y, double wy) {
    const double w = wx + wy;
    return {(x.l * wx + y.l * wy) / w, (x.a * wx + y.a * wy) / w, (x.b * wx + y.b * wy) / w};
}

/// Signed shortest angular difference a - b in degrees, in (-180, 180].
double angle_diff(double a, double b) {
    double d = std::fmod(a - b, 360.0);
    if (d <= -180.0) d += 360.0;
    if (d > 180.0) d -= 360.0;
    return d;
}

/// Gaussian mean-shift from every sample; returns the converged mode per sample.
std::vector<double> mean_shift_modes(const std::vector<double>& xs, double bandwidth, bool circular) {
    std::vector<double> modes;
    modes.reserve(xs.size());
    for (double start : xs) {
        double m = start;
        for (int iter = 0; iter < 500; ++iter) {
            double num = 0.0, den = 0.0;
            for (double x : xs) {
                const double d = circular ? angle_diff(x, m) : x - m;
                const double w = std::exp(-0.5 * d * d / (bandwidth * bandwidth));
                num += w * d;
                den += w;
            }
            const double step = num / den;
            m += step;
            if (circular) m = std::fmod(m + 360.0, 360.0);
            if (std::abs(step) < 1e-9) break;
        }
        modes.push_back(m);
    }
    return modes;
}

/// Pairs of adjacent segment indices (4-neighbourhood).
std::vector<std::pair<int, int>> adjacent_pairs(const std::vector<Segment>& segs, int width, int height) {
    std::vector<int> labels(static_cast<std::size_t>(width) * height, -1);
    for (int s = 0; s < static_cast<int>(segs.size()); ++s) {
        for (int p : segs[s].pixels) labels[p] = s;
    }
    std::vector<std::pair<int, int>> out;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const int a = labels[y * width + x];
            if (a < 0) continue;
            if (x + 1 < width) {
                const int b = labels[y * width + x + 1];
                if (b >= 0 && b != a) out.emplace_back(std::min(a, b), std::max(a, b));
            }
            if (y + 1 < height) {
                const int b = labels[(y + 1) * width + x];
                if (b >= 0 && b != a) out.emplace_back(std::min(a, b), std::max(a, b));
            }
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

using Pt = std::pair<double, double>;

double point_segment_distance(const Pt& p, const Pt& a, const Pt& b) {
    const double dx = b.first - a.first;
    const double dy = b.second - a.second;
    const double len2 = dx * dx + dy * dy;
    if (len2 == 0.0) return std::hypot(p.first - a.first, p.second - a.second);
    double t = ((p.first - a.first) * dx + (p.second - a.second) * dy) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(p.first - (a.first + t * dx), p.second - (a.second + t * dy));
}

/// Open-chain RDP over pts[first..last]; returns kept indices including both ends.
std::vector<std::size_t> rdp_chain(const std::vector<Pt>& pts, std::size_t first, std::size_t last, double eps) {
    std::vector<bool> keep(pts.size(), false);
    keep[first] = keep[last] = true;
    std::vector<std::pair<std::size_t, std::size_t>> stack = {{first, last}};
    while (!stack.empty()) {
        auto [i, j] = stack.back();
        stack.pop_back();
        double best = -1.0;
        std::size_t best_k = i;
        for (std::size_t k = i + 1; k < j; ++k) {
            const double d = point_segment_distance(pts[k], pts[i], pts[j]);
            if (d > best) {
                best = d;
                best_k = k;
            }
        }
        if (best > eps) {
            keep[best_k] = true;
            stack.emplace_back(i, best_k);
            stack.emplace_back(best_k, j);
        }
    }
    std::vector<std::size_t> out;
    for (std::size_t k = first; k <= last; ++k) {
        if (keep[k]) out.push_back(k);
    }
    return out;
}

double polygon_area(const std::vector<Pt>& pts) {
    double s = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Pt& a = pts[i];
        const Pt& b = pts[(i + 1) % pts.size()];
        s += a.first * b.second - b.first * a.second;
    }
    return 0.5 * std::abs(s);
}

RgbColor ring_mode(const RasterImage& img, const BBox& box, const std::vector<DataAnnotation>& all,
                   bool skip_other_boxes, bool& found) {
    std::map<std::uint32_t, int> counts;
    const int x0 = std::max(0, box.x - 2), y0 = std::max(0, box.y - 2);
    const int x1 = std::min(img.width(), box.right() + 2), y1 = std::min(img.height(), box.bottom() + 2);
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
            if (x >= box.x && x < box.right() && y >= box.y && y < box.bottom()) continue;
            if (skip_other_boxes) {
                bool inside = false;
                for (const auto& d : all) {
                    if (x >= d.bbox.x && x < d.bbox.right() && y >= d.bbox.y && y < d.bbox.bottom()) {
                        inside = true;
                        break;
                    }
                }
                if (inside) continue;
            }
            ++counts[pack(img.at(x, y))];
        }
    }
    found = !counts.empty();
    std::uint32_t best = 0;
    int best_n = -1;
    for (auto [c, n] : counts) {
        if (n > best_n) {
            best = c;
            best_n = n;
        }
    }
    return unpack(best);
}

}  // namespace

AnnotationSet annotations_from_json(const nlohmann::json& j, int width, int height) {
    AnnotationSet ann;
    try {
        if (!j.is_object()) throw InvalidInput("annotations must be a JSON object");
        for (const auto& d : j.value("data_elements", nlohmann::json::array())) {
            DataAnnotation a;
            const auto& b = d.at("bbox");
            a.bbox = {b.at("x").get<int>(), b.at("y").get<int>(), b.at("w").get<int>(), b.at("h").get<int>()};
            a.element_type = parse_element_type(d.at("element_type").get<std::string>());
            if (!is_data_type(a.element_type))
                throw InvalidInput("data element type must be index, text, icon or arrow");
            if (a.bbox.w <= 0 || a.bbox.h <= 0 || a.bbox.x < 0 || a.bbox.y < 0 || a.bbox.right() > width ||
                a.bbox.bottom() > height)
                throw InvalidInput("data element bbox outside the image");
            ann.data_elements.push_back(a);
        }
        if (j.contains("visual_groups") && !j["visual_groups"].is_null()) {
            std::vector<std::vector<int>> groups = j["visual_groups"].get<std::vector<std::vector<int>>>();
            std::vector<bool> used(ann.data_elements.size(), false);
            for (const auto& g : groups) {
                for (int i : g) {
                    if (i < 0 || i >= static_cast<int>(used.size()) || used[i])
                        throw InvalidInput("visual group index out of range or repeated");
                    used[i] = true;
                }
            }
            ann.visual_groups = std::move(groups);
        }
        if (j.contains("vif_type") && !j["vif_type"].is_null())
            ann.vif_type = parse_vif_type(j["vif_type"].get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed annotations: ") + e.what());
    }
    return ann;
}

nlohmann::json to_json(const AnnotationSet& ann) {
    using nlohmann::json;
    json elems = json::array();
    for (const auto& d : ann.data_elements) {
        elems.push_back({{"bbox", {{"x", d.bbox.x}, {"y", d.bbox.y}, {"w", d.bbox.w}, {"h", d.bbox.h}}},
                         {"element_type", to_string(d.element_type)}});
    }
    json j = {{"data_elements", elems}};
    j["visual_groups"] = ann.visual_groups ? json(*ann.visual_groups) : json(nullptr);
    j["vif_type"] = ann.vif_type ? json(to_string(*ann.vif_type)) : json(nullptr);
    return j;
}

RasterImage remove_data_elements(const RasterImage& img, const AnnotationSet& ann) {
    RasterImage out = img;
    for (const auto& d : ann.data_elements) {
        bool found = false;
        RgbColor fill = ring_mode(img, d.bbox, ann.data_elements, true, found);
        if (!found) fill = ring_mode(img, d.bbox, ann.data_elements, false, found);
        if (!found) continue;
        const BBox clip = d.bbox.intersect({0, 0, img.width(), img.height()});
        for (int y = clip.y; y < clip.bottom(); ++y) {
            for (int x = clip.x; x < clip.right(); ++x) out.at(x, y) = fill;
        }
    }
    return out;
}

std::vector<Segment> segment_regions(const RasterImage& img, const ExtractionConfig& cfg) {
    const int w = img.width();
    const int h = img.height();
    const int n = w * h;
    if (n == 0) return {};
    const std::vector<LabColor> lab = lab_pixels(img);

    std::vector<int> labels(n, -1);
    int next_label = 0;
    std::deque<int> queue;
    for (int seed = 0; seed < n; ++seed) {
        if (labels[seed] >= 0) continue;
        const int label = next_label++;
        labels[seed] = label;
        double sl = lab[seed].l, sa = lab[seed].a, sb = lab[seed].b;
        double count = 1.0;
        queue.assign(1, seed);
        while (!queue.empty()) {
            const int p = queue.front();
            queue.pop_front();
            const int x = p % w;
            const int y = p / w;
            const int nbrs[4] = {x > 0 ? p - 1 : -1, x + 1 < w ? p + 1 : -1, y > 0 ? p - w : -1,
                                 y + 1 < h ? p + w : -1};
            for (int q : nbrs) {
                if (q < 0 || labels[q] >= 0) continue;
                const LabColor mean{sl / count, sa / count, sb / count};
                if (ciede2000(lab[q], mean) < cfg.region_threshold) {
                    labels[q] = label;
                    sl += lab[q].l;
                    sa += lab[q].a;
                    sb += lab[q].b;
                    count += 1.0;
                    queue.push_back(q);
                }
            }
        }
    }

    std::vector<Segment> segs = segments_from_labels(labels, lab, w);
    const long long min_area =
        std::max<long long>(1, static_cast<long long>(std::ceil(cfg.min_segment_fraction * n)));

    // Absorb slivers, smallest first, into the most similar neighbour.
    std::vector<int> seg_of(n);
    for (int s = 0; s < static_cast<int>(segs.size()); ++s) {
        for (int p : segs[s].pixels) seg_of[p] = s;
    }
    std::vector<bool> alive(segs.size(), true);
    while (true) {
        int victim = -1;
        for (int s = 0; s < static_cast<int>(segs.size()); ++s) {
            if (alive[s] && segs[s].area() < min_area && (victim < 0 || segs[s].area() < segs[victim].area()))
                victim = s;
        }
        if (victim < 0) break;
        std::vector<int> nbrs;
        for (int p : segs[victim].pixels) {
            const int x = p % w;
            const int y = p / w;
            for (int q : {x > 0 ? p - 1 : -1, x + 1 < w ? p + 1 : -1, y > 0 ? p - w : -1, y + 1 < h ? p + w : -1}) {
                if (q >= 0 && seg_of[q] != victim) nbrs.push_back(seg_of[q]);
            }
        }
        std::sort(nbrs.begin(), nbrs.end());
        nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
        if (nbrs.empty()) break;  // whole image is one tiny region
        int target = nbrs.front();
        double best = std::numeric_limits<double>::infinity();
        for (int s : nbrs) {
            const double d = ciede2000(segs[victim].mean, segs[s].mean);
            if (d < best) {
                best = d;
                target = s;
            }
        }
        Segment& t = segs[target];
        t.mean = weighted_mean(t.mean, static_cast<double>(t.area()), segs[victim].mean,
                               static_cast<double>(segs[victim].area()));
        for (int p : segs[victim].pixels) seg_of[p] = target;
        t.pixels.insert(t.pixels.end(), segs[victim].pixels.begin(), segs[victim].pixels.end());
        segs[victim].pixels.clear();
        alive[victim] = false;
    }
    return segments_from_labels(seg_of, lab, w);
}

std::vector<Segment> merge_gradient_segments(std::vector<Segment> segs, int width, int height,
                                             const ExtractionConfig& cfg) {
    while (segs.size() > 1) {
        const std::size_t n = segs.size();
        std::vector<int> chromatic, grey;
        std::vector<double> hues, lights;
        for (std::size_t i = 0; i < n; ++i) {
            if (chroma(segs[i].mean) >= cfg.achromatic_chroma) {
                chromatic.push_back(static_cast<int>(i));
                hues.push_back(hue_degrees(segs[i].mean));
            } else {
                grey.push_back(static_cast<int>(i));
                lights.push_back(segs[i].mean.l);
            }
        }
        // Cluster id per segment: basin of attraction of its KDE mode.
        std::vector<int> cluster(n, -1);
        int next_cluster = 0;
        auto assign = [&](const std::vector<int>& members, const std::vector<double>& modes, bool circular) {
            std::vector<std::pair<double, int>> reps;
            for (std::size_t k = 0; k < members.size(); ++k) {
                int id = -1;
                for (auto [m, c] : reps) {
                    const double d = circular ? angle_diff(modes[k], m) : modes[k] - m;
                    if (std::abs(d) < 1e-3 * cfg.kde_bandwidth + 1e-6) {
                        id = c;
                        break;
                    }
                }
                if (id < 0) {
                    id = next_cluster++;
                    reps.emplace_back(modes[k], id);
                }
                cluster[members[k]] = id;
            }
        };
        assign(chromatic, mean_shift_modes(hues, cfg.kde_bandwidth, true), true);
        assign(grey, mean_shift_modes(lights, cfg.kde_bandwidth, false), false);

        UnionFind uf(n);
        bool merged = false;
        for (auto [a, b] : adjacent_pairs(segs, width, height)) {
            if (cluster[a] == cluster[b]) merged |= uf.unite(a, b);
        }
        if (!merged) break;

        std::vector<Segment> next;
        std::unordered_map<int, std::size_t> slot;
        for (std::size_t i = 0; i < n; ++i) {
            const int r = uf.find(static_cast<int>(i));
            auto [it, inserted] = slot.try_emplace(r, next.size());
            if (inserted) {
                next.push_back(std::move(segs[i]));
                continue;
            }
            Segment& t = next[it->second];
            t.mean = weighted_mean(t.mean, static_cast<double>(t.area()), segs[i].mean,
                                   static_cast<double>(segs[i].area()));
            t.bbox = t.bbox.unite(segs[i].bbox);
            t.pixels.insert(t.pixels.end(), segs[i].pixels.begin(), segs[i].pixels.end());
        }
        for (auto& s : next) std::sort(s.pixels.begin(), s.pixels.end());
        segs = std::move(next);
    }
    return segs;
}

std::vector<std::pair<int, int>> trace_contour(const Segment& seg, int width) {
    if (seg.pixels.empty()) return {};
    const BBox& bb = seg.bbox;
    // Local mask with a one-pixel margin so the tracer never leaves it.
    const int mw = bb.w + 2;
    const int mh = bb.h + 2;
    std::vector<char> mask(static_cast<std::size_t>(mw) * mh, 0);
    for (int p : seg.pixels) mask[(p / width - bb.y + 1) * mw + (p % width - bb.x + 1)] = 1;
    auto inside = [&](int x, int y) { return mask[y * mw + x] != 0; };

    // Clockwise with y pointing down, starting west.
    static constexpr int kDx[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
    static constexpr int kDy[8] = {0, -1, -1, -1, 0, 1, 1, 1};
    auto dir_of = [](int dx, int dy) {
        for (int d = 0; d < 8; ++d) {
            if (kDx[d] == dx && kDy[d] == dy) return d;
        }
        return 0;
    };

    const int first = seg.pixels.front();
    const int sx = first % width - bb.x + 1;
    const int sy = first / width - bb.y + 1;
    std::vector<std::pair<int, int>> out = {{sx + bb.x - 1, sy + bb.y - 1}};

    int cx = sx, cy = sy;
    int back = 0;  // west of the topmost-leftmost pixel is always outside
    int first_move = -1;
    const std::size_t limit = 4 * seg.pixels.size() + 8;
    while (out.size() < limit) {
        int move = -1;
        for (int k = 1; k <= 8; ++k) {
            const int d = (back + k) % 8;
            if (inside(cx + kDx[d], cy + kDy[d])) {
                move = d;
                break;
            }
        }
        if (move < 0) break;  // isolated pixel
        if (cx == sx && cy == sy) {
            if (first_move < 0) first_move = move;
            else if (move == first_move) break;
        }
        const int prev = (move + 7) % 8;
        const int bx = cx + kDx[prev];
        const int by = cy + kDy[prev];
        cx += kDx[move];
        cy += kDy[move];
        back = dir_of(bx - cx, by - cy);
        if (cx == sx && cy == sy) continue;
        out.emplace_back(cx + bb.x - 1, cy + bb.y - 1);
    }
    return out;
}

std::vector<Pt> simplify_closed(const std::vector<Pt>& pts, double epsilon) {
    if (pts.size() < 4) return pts;
    std::size_t far = 0;
    double best = -1.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const double d = std::hypot(pts[i].first - pts[0].first, pts[i].second - pts[0].second);
        if (d > best) {
            best = d;
            far = i;
        }
    }
    // Close the ring by appending the start so the second chain ends there.
    std::vector<Pt> ring = pts;
    ring.push_back(pts[0]);
    std::vector<std::size_t> a = rdp_chain(ring, 0, far, epsilon);
    std::vector<std::size_t> b = rdp_chain(ring, far, ring.size() - 1, epsilon);
    std::vector<Pt> poly;
    for (std::size_t k : a) poly.push_back(ring[k]);
    for (std::size_t i = 1; i + 1 < b.size(); ++i) poly.push_back(ring[b[i]]);

    // The split points are arbitrary; drop vertices that sit on the line between their neighbours.
    while (poly.size() > 3) {
        std::size_t worst = 0;
        double worst_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < poly.size(); ++i) {
            const Pt& prev = poly[(i + poly.size() - 1) % poly.size()];
            const Pt& next = poly[(i + 1) % poly.size()];
            const double d = point_segment_distance(poly[i], prev, next);
            if (d < worst_d) {
                worst_d = d;
                worst = i;
            }
        }
        if (worst_d >= epsilon) break;
        poly.erase(poly.begin() + static_cast<std::ptrdiff_t>(worst));
    }
    return poly;
}

ElementType classify_shape(const Segment& seg, int width, const ExtractionConfig& cfg) {
    const auto contour = trace_contour(seg, width);
    if (contour.size() < 3) return ElementType::others;
    std::vector<Pt> pts;
    pts.reserve(contour.size());
    for (auto [x, y] : contour) pts.emplace_back(x, y);

    double length = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Pt& a = pts[i];
        const Pt& b = pts[(i + 1) % pts.size()];
        length += std::hypot(b.first - a.first, b.second - a.second);
    }
    const auto poly = simplify_closed(pts, cfg.rdp_eps_fraction * length);
    const std::size_t v = poly.size();

    if (v == 3) return ElementType::triangle;
    if (v == 4) {
        std::array<double, 4> side{};
        for (std::size_t i = 0; i < 4; ++i) {
            const Pt& a = poly[i];
            const Pt& b = poly[(i + 1) % 4];
            side[i] = std::hypot(b.first - a.first, b.second - a.second);
            const Pt& prev = poly[(i + 3) % 4];
            const double ux = prev.first - a.first, uy = prev.second - a.second;
            const double vx = b.first - a.first, vy = b.second - a.second;
            const double angle =
                std::acos(std::clamp((ux * vx + uy * vy) / (std::hypot(ux, uy) * std::hypot(vx, vy)), -1.0, 1.0)) *
                180.0 / std::numbers::pi;
            if (std::abs(angle - 90.0) > cfg.right_angle_tolerance) return ElementType::others;
        }
        const double p = 0.5 * (side[0] + side[2]);
        const double q = 0.5 * (side[1] + side[3]);
        const double ratio = std::max(p, q) / std::min(p, q);
        return ratio <= cfg.square_ratio_cutoff ? ElementType::square : ElementType::rectangle;
    }
    if (v == 5) return ElementType::pentagon;
    if (static_cast<int>(v) > cfg.circle_min_vertices) {
        double cx = 0.0, cy = 0.0;
        for (const Pt& p : pts) {
            cx += p.first;
            cy += p.second;
        }
        cx /= static_cast<double>(pts.size());
        cy /= static_cast<double>(pts.size());
        double r = 0.0;
        for (const Pt& p : pts) r += std::hypot(p.first - cx, p.second - cy);
        r /= static_cast<double>(pts.size());
        const double ratio = polygon_area(pts) / (std::numbers::pi * r * r);
        if (std::abs(ratio - 1.0) <= cfg.circle_area_tolerance) return ElementType::circle;
    }
    return ElementType::others;
}

namespace {

struct Candidate {
    std::string id;
    NodeKind kind;
    std::optional<ElementType> type;
    BBox bbox;
    long long pixel_area = 0;
    std::optional<LabColor> color;
    int order = 0;  // index within its kind
    int data_index = -1;
};

/// Strict total order used to decide who may contain whom.
bool outranks(const Candidate& a, const Candidate& b) {
    if (a.bbox.area() != b.bbox.area()) return a.bbox.area() > b.bbox.area();
    if (a.kind != b.kind) return a.kind == NodeKind::artistic;
    return a.order < b.order;
}

}  // namespace

InfographicDoc build_tree(const RasterImage& img, const AnnotationSet& ann, const std::vector<Segment>& segments,
                          const ExtractionConfig& cfg) {
    const int w = img.width();
    const int h = img.height();
    if (segments.empty()) throw InvalidInput("no segments");

    // Background: the segment with the most border pixels.
    std::size_t bg = 0;
    long long bg_border = -1;
    for (std::size_t s = 0; s < segments.size(); ++s) {
        long long border = 0;
        for (int p : segments[s].pixels) {
            const int x = p % w, y = p / w;
            if (x == 0 || y == 0 || x == w - 1 || y == h - 1) ++border;
        }
        if (border > bg_border || (border == bg_border && segments[s].area() > segments[bg].area())) {
            bg = s;
            bg_border = border;
        }
    }

    std::vector<Candidate> elems;
    int art = 0;
    for (std::size_t s = 0; s < segments.size(); ++s) {
        if (s == bg) continue;
        Candidate c;
        c.id = "a" + std::to_string(art);
        c.kind = NodeKind::artistic;
        c.type = classify_shape(segments[s], w, cfg);
        c.bbox = segments[s].bbox;
        c.pixel_area = segments[s].area();
        c.color = clamp_to_gamut(segments[s].mean);
        c.order = art++;
        elems.push_back(std::move(c));
    }
    for (std::size_t i = 0; i < ann.data_elements.size(); ++i) {
        const auto& d = ann.data_elements[i];
        bool found = false;
        const LabColor fill = rgb_to_lab(ring_mode(img, d.bbox, ann.data_elements, true, found));
        std::map<std::uint32_t, long long> counts;
        long long fg = 0;
        for (int y = d.bbox.y; y < d.bbox.bottom(); ++y) {
            for (int x = d.bbox.x; x < d.bbox.right(); ++x) {
                const RgbColor p = img.at(x, y);
                if (!found || ciede2000(rgb_to_lab(p), fill) >= cfg.region_threshold) {
                    ++counts[pack(p)];
                    ++fg;
                }
            }
        }
        Candidate c;
        c.id = "d" + std::to_string(i);
        c.kind = NodeKind::data;
        c.type = d.element_type;
        c.bbox = d.bbox;
        c.pixel_area = fg;
        if (!counts.empty()) {
            auto best = std::max_element(counts.begin(), counts.end(),
                                         [](const auto& a, const auto& b) { return a.second < b.second; });
            c.color = rgb_to_lab(unpack(best->first));
        }
        c.order = static_cast<int>(i);
        c.data_index = static_cast<int>(i);
        elems.push_back(std::move(c));
    }

    const std::size_t node_count_without_groups = elems.size() + 1;
    if (node_count_without_groups > cfg.max_nodes) throw CapacityError(node_count_without_groups, cfg.max_nodes);

    // Parent of each element: smallest container, else the largest-overlap bigger element, else root.
    const int n = static_cast<int>(elems.size());
    std::vector<int> parent(n, -1);
    for (int i = 0; i < n; ++i) {
        int best = -1;
        for (int j = 0; j < n; ++j) {
            if (j == i || !outranks(elems[j], elems[i]) || !elems[j].bbox.contains(elems[i].bbox)) continue;
            if (best < 0 || outranks(elems[best], elems[j])) best = j;
        }
        if (best < 0) {
            double best_frac = 0.0;
            const double own = static_cast<double>(std::max<long long>(1, elems[i].bbox.area()));
            for (int j = 0; j < n; ++j) {
                if (j == i || !outranks(elems[j], elems[i])) continue;
                const double frac = static_cast<double>(elems[j].bbox.intersect(elems[i].bbox).area()) / own;
                if (frac > best_frac) {
                    best_frac = frac;
                    best = j;
                }
            }
        }
        parent[i] = best;
    }

    // Visual groups over data elements.
    std::vector<std::vector<int>> groups;  // data indices
    if (ann.visual_groups) {
        groups = *ann.visual_groups;
    } else if (!ann.data_elements.empty()) {
        const double gap = cfg.group_gap * std::hypot(w, h);
        UnionFind uf(ann.data_elements.size());
        for (std::size_t a = 0; a < ann.data_elements.size(); ++a) {
            for (std::size_t b = a + 1; b < ann.data_elements.size(); ++b) {
                const auto& ba = ann.data_elements[a].bbox;
                const auto& bb = ann.data_elements[b].bbox;
                if (std::hypot(ba.cx() - bb.cx(), ba.cy() - bb.cy()) <= gap)
                    uf.unite(static_cast<int>(a), static_cast<int>(b));
            }
        }
        std::map<int, std::vector<int>> by_root;
        for (std::size_t a = 0; a < ann.data_elements.size(); ++a) by_root[uf.find(static_cast<int>(a))].push_back(a);
        for (auto& [r, members] : by_root) groups.push_back(std::move(members));
        // Backbone heuristic without a VIF annotation: reading order of group extents.
        auto extent = [&](const std::vector<int>& g) {
            BBox b = ann.data_elements[g.front()].bbox;
            for (int i : g) b = b.unite(ann.data_elements[i].bbox);
            return b;
        };
        std::stable_sort(groups.begin(), groups.end(),
                         [&](const auto& a, const auto& b) { return reading_order_less(extent(a), extent(b)); });
    }
    std::vector<int> group_of_data(ann.data_elements.size(), -1);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (int i : groups[g]) group_of_data[i] = static_cast<int>(g);
    }

    // Top-level branches go to the group owning most of their data elements.
    auto top_of = [&](int i) {
        while (parent[i] >= 0) i = parent[i];
        return i;
    };
    std::map<int, std::vector<int>> votes;  // top element -> count per group
    for (int i = 0; i < n; ++i) {
        if (elems[i].kind != NodeKind::data) continue;
        const int g = group_of_data[elems[i].data_index];
        if (g < 0) continue;
        auto& v = votes[top_of(i)];
        v.resize(groups.size(), 0);
        ++v[g];
    }
    std::vector<int> branch_group(n, -1);
    for (auto& [top, v] : votes) {
        branch_group[top] = static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
    }

    // Without data elements, top-level artistic branches cluster by proximity instead.
    if (!ann.visual_groups && ann.data_elements.empty() && n > 0) {
        std::vector<int> tops;
        for (int i = 0; i < n; ++i) {
            if (parent[i] < 0) tops.push_back(i);
        }
        const double gap = cfg.group_gap * std::hypot(w, h);
        UnionFind uf(tops.size());
        for (std::size_t a = 0; a < tops.size(); ++a) {
            for (std::size_t b = a + 1; b < tops.size(); ++b) {
                const auto& ba = elems[tops[a]].bbox;
                const auto& bb = elems[tops[b]].bbox;
                if (std::hypot(ba.cx() - bb.cx(), ba.cy() - bb.cy()) <= gap)
                    uf.unite(static_cast<int>(a), static_cast<int>(b));
            }
        }
        std::map<int, std::vector<int>> by_root;
        for (std::size_t a = 0; a < tops.size(); ++a) by_root[uf.find(static_cast<int>(a))].push_back(tops[a]);
        std::vector<std::vector<int>> clusters;
        for (auto& [r, members] : by_root) clusters.push_back(std::move(members));
        auto extent = [&](const std::vector<int>& c) {
            BBox b = elems[c.front()].bbox;
            for (int i : c) b = b.unite(elems[i].bbox);
            return b;
        };
        std::stable_sort(clusters.begin(), clusters.end(),
                         [&](const auto& a, const auto& b) { return reading_order_less(extent(a), extent(b)); });
        groups.assign(clusters.size(), {});
        for (std::size_t g = 0; g < clusters.size(); ++g) {
            for (int i : clusters[g]) branch_group[i] = static_cast<int>(g);
        }
    }

    InfographicDoc doc;
    doc.width = w;
    doc.height = h;
    doc.root = "bg";
    ElementNode root;
    root.id = "bg";
    root.kind = NodeKind::background;
    root.bbox = {0, 0, w, h};
    root.pixel_area = segments[bg].area();
    root.color = clamp_to_gamut(segments[bg].mean);

    std::vector<ElementNode> el_nodes(n);
    for (int i = 0; i < n; ++i) {
        el_nodes[i].id = elems[i].id;
        el_nodes[i].kind = elems[i].kind;
        el_nodes[i].element_type = elems[i].type;
        el_nodes[i].bbox = elems[i].bbox;
        el_nodes[i].pixel_area = elems[i].pixel_area;
        el_nodes[i].color = elems[i].color;
    }
    for (int i = 0; i < n; ++i) {
        if (parent[i] >= 0) el_nodes[parent[i]].children.push_back(elems[i].id);
    }

    std::vector<ElementNode> group_nodes;
    std::vector<int> group_slot(groups.size(), -1);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        bool has_branch = false;
        for (int i = 0; i < n; ++i) has_branch |= parent[i] < 0 && branch_group[i] == static_cast<int>(g);
        if (!has_branch) continue;
        group_slot[g] = static_cast<int>(group_nodes.size());
        ElementNode gn;
        gn.id = "g" + std::to_string(group_nodes.size());
        gn.kind = NodeKind::visual_group;
        group_nodes.push_back(std::move(gn));
    }
    if (1 + n + group_nodes.size() > cfg.max_nodes) throw CapacityError(1 + n + group_nodes.size(), cfg.max_nodes);

    for (int i = 0; i < n; ++i) {
        if (parent[i] >= 0) continue;
        const int g = branch_group[i] >= 0 ? group_slot[branch_group[i]] : -1;
        if (g >= 0) {
            ElementNode& gn = group_nodes[g];
            gn.bbox = gn.children.empty() ? elems[i].bbox : gn.bbox.unite(elems[i].bbox);
            gn.children.push_back(elems[i].id);
        } else {
            root.children.push_back(elems[i].id);
        }
    }
    for (auto& gn : group_nodes) {
        gn.pixel_area = gn.bbox.area();
        doc.visual_groups.push_back(gn.id);
        root.children.push_back(gn.id);
    }

    doc.nodes.push_back(std::move(root));
    for (auto& g : group_nodes) doc.nodes.push_back(std::move(g));
    for (auto& e : el_nodes) doc.nodes.push_back(std::move(e));

    // Clip overlapping children into their parents top-down, then sort siblings.
    for (const auto& id : doc.preorder()) {
        ElementNode* node = doc.find(id);
        for (const auto& c : node->children) {
            ElementNode* child = doc.find(c);
            if (!node->bbox.contains(child->bbox)) child->bbox = child->bbox.intersect(node->bbox);
        }
    }
    for (auto& node : doc.nodes) {
        std::stable_sort(node.children.begin(), node.children.end(), [&](const auto& a, const auto& b) {
            return reading_order_less(doc.at(a).bbox, doc.at(b).bbox);
        });
    }

    if (ann.vif_type) {
        doc.vif_type = *ann.vif_type;
    } else {
        double x0 = w, x1 = 0, y0 = h, y1 = 0;
        for (const auto& g : doc.visual_groups) {
            const BBox& b = doc.at(g).bbox;
            x0 = std::min(x0, b.cx());
            x1 = std::max(x1, b.cx());
            y0 = std::min(y0, b.cy());
            y1 = std::max(y1, b.cy());
        }
        doc.vif_type = (x1 - x0) > (y1 - y0) ? VifType::landscape : VifType::portrait;
    }
    return doc;
}

InfographicDoc extract_document(const RasterImage& img, const AnnotationSet& ann, const ExtractionConfig& cfg) {
    const RasterImage clean = remove_data_elements(img, ann);
    auto segs = segment_regions(clean, cfg);
    segs = merge_gradient_segments(std::move(segs), img.width(), img.height(), cfg);
    return build_tree(img, ann, segs, cfg);
}

}  // namespace palettizer
