#include "palettizer/synth.hpp"

#include "palettizer/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <queue>

namespace palettizer {
namespace {

using Point = std::pair<double, double>;

constexpr double kDeg = std::numbers::pi / 180.0;

LabColor lch(double l, double c, double h_deg) {
    return {l, c * std::cos(h_deg * kDeg), c * std::sin(h_deg * kDeg)};
}

LabColor jitter(LabColor c, double sd, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, sd);
    if (sd > 0.0) {
        c.l += n(rng);
        c.a += n(rng);
        c.b += n(rng);
    }
    return clamp_to_gamut(c);
}

bool in_polygon(const std::vector<Point>& poly, double px, double py) {
    bool inside = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const auto [xi, yi] = poly[i];
        const auto [xj, yj] = poly[j];
        if ((yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi) inside = !inside;
    }
    return inside;
}

// Vertices of a shape inscribed in the box, before rotation.
std::vector<Point> polygon_in_box(ElementType type, double x, double y, double w, double h) {
    switch (type) {
        case ElementType::triangle: return {{x + w / 2, y}, {x + w, y + h}, {x, y + h}};
        case ElementType::pentagon: {
            std::vector<Point> p;
            // Regular pentagon stretched so its extent fills the box.
            const double top = -1.0, bottom = std::sin(54.0 * kDeg), half_w = std::cos(18.0 * kDeg);
            for (int i = 0; i < 5; ++i) {
                const double t = (-90.0 + 72.0 * i) * kDeg;
                const double ux = std::cos(t) / half_w;
                const double uy = (std::sin(t) - top) / (bottom - top);
                p.emplace_back(x + w / 2 + ux * w / 2, y + uy * h);
            }
            return p;
        }
        case ElementType::arrow:
            return {{x, y + 0.3 * h},     {x + 0.6 * w, y + 0.3 * h}, {x + 0.6 * w, y},
                    {x + w, y + 0.5 * h}, {x + 0.6 * w, y + h},       {x + 0.6 * w, y + 0.7 * h},
                    {x, y + 0.7 * h}};
        default: return {{x, y}, {x + w, y}, {x + w, y + h}, {x, y + h}};
    }
}

std::vector<int> mask_pixels(const BBox& box, int image_w, ElementType type) {
    std::vector<int> px;
    for (int y = box.y; y < box.bottom(); ++y) {
        for (int x = box.x; x < box.right(); ++x) {
            if (shape_contains(type, box, x + 0.5, y + 0.5)) px.push_back(y * image_w + x);
        }
    }
    return px;
}

BBox bounds_of(const std::vector<int>& pixels, int width) {
    int x0 = width, y0 = std::numeric_limits<int>::max(), x1 = -1, y1 = -1;
    for (int p : pixels) {
        const int x = p % width, y = p / width;
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
    }
    if (x1 < 0) return {};
    return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

// 4-connected components of a label image, each as ascending pixel indices.
std::vector<std::vector<int>> components(const std::vector<int>& labels, int w, int h) {
    std::vector<int> comp(labels.size(), -1);
    std::vector<std::vector<int>> out;
    for (int start = 0; start < w * h; ++start) {
        if (comp[start] >= 0) continue;
        const int id = static_cast<int>(out.size());
        out.emplace_back();
        std::queue<int> q;
        q.push(start);
        comp[start] = id;
        while (!q.empty()) {
            const int p = q.front();
            q.pop();
            out[id].push_back(p);
            const int x = p % w, y = p / w;
            const int nbr[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
            for (const auto& n : nbr) {
                if (n[0] < 0 || n[1] < 0 || n[0] >= w || n[1] >= h) continue;
                const int q2 = n[1] * w + n[0];
                if (comp[q2] < 0 && labels[q2] == labels[p]) {
                    comp[q2] = id;
                    q.push(q2);
                }
            }
        }
        std::sort(out[id].begin(), out[id].end());
    }
    return out;
}

struct Placed {
    BBox box;
    int level = 0;
    std::string id;
    bool host = false;  // can receive children
};

bool overlaps(const BBox& a, const BBox& b, int gap) {
    return a.x < b.right() + gap && b.x < a.right() + gap && a.y < b.bottom() + gap && b.y < a.bottom() + gap;
}

constexpr ElementType kShapes[] = {ElementType::triangle, ElementType::square, ElementType::rectangle,
                                   ElementType::pentagon, ElementType::circle};
constexpr ElementType kData[] = {ElementType::text, ElementType::icon, ElementType::index, ElementType::arrow};

}  // namespace

bool shape_contains(ElementType type, const BBox& box, double px, double py) {
    switch (type) {
        case ElementType::circle:
        case ElementType::icon: {
            const double rx = box.w / 2.0, ry = box.h / 2.0;
            const double dx = (px - box.cx()) / rx, dy = (py - box.cy()) / ry;
            return dx * dx + dy * dy <= 1.0;
        }
        case ElementType::text:
            return px >= box.x && px < box.right() && py >= box.y && py < box.bottom() &&
                   static_cast<int>(py - box.y) % 4 < 2;
        case ElementType::triangle:
        case ElementType::pentagon:
        case ElementType::arrow: return in_polygon(polygon_in_box(type, box.x, box.y, box.w, box.h), px, py);
        default: return px >= box.x && px < box.right() && py >= box.y && py < box.bottom();
    }
}

InfographicDoc generate_document(std::mt19937_64& rng, const SynthConfig& cfg) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    auto uniform = [&](double a, double b) { return a + (b - a) * u01(rng); };
    auto pick = [&](int n) { return std::min(n - 1, static_cast<int>(u01(rng) * n)); };

    const int W = cfg.width, H = cfg.height;
    const double hue0 = uniform(0.0, 360.0);
    const bool dark = u01(rng) < 0.5;
    const bool landscape = u01(rng) < 0.5;
    const int n_groups = 1 + pick(cfg.max_groups);

    InfographicDoc doc;
    doc.width = W;
    doc.height = H;
    doc.root = "bg";
    doc.vif_type = landscape ? VifType::landscape : VifType::portrait;

    ElementNode bg;
    bg.id = "bg";
    bg.kind = NodeKind::background;
    bg.bbox = {0, 0, W, H};
    bg.pixel_area = static_cast<long long>(W) * H;
    bg.color = jitter(lch(dark ? 22.0 : 92.0, 8.0, hue0), cfg.color_noise, rng);

    std::vector<ElementNode> elements;
    std::vector<ElementNode> groups;
    int artistic_count = 0, data_count = 0;
    const int margin = 6;

    for (int g = 0; g < n_groups; ++g) {
        BBox cell;
        if (landscape) {
            const int cw = (W - margin) / n_groups;
            cell = {margin + g * cw, margin, cw - margin, H - 2 * margin};
        } else {
            const int ch = (H - margin) / n_groups;
            cell = {margin, margin + g * ch, W - 2 * margin, ch - margin};
        }
        const std::string gid = "g" + std::to_string(g);
        std::vector<Placed> placed;
        std::map<std::string, std::vector<std::string>> kids;  // host id -> children
        std::map<std::string, LabColor> color_of;
        const int n_elems = 2 + pick(cfg.max_elements_per_group - 1);

        for (int e = 0; e < n_elems; ++e) {
            const bool want_data = e == n_elems - 1 || u01(rng) < 0.25;
            // Host: nest under the latest host element or start a new top-level sibling.
            Placed host{cell, 0, gid, true};
            for (auto it = placed.rbegin(); it != placed.rend(); ++it) {
                if (it->host && u01(rng) < cfg.nest_probability) {
                    host = *it;
                    break;
                }
            }
            const std::vector<std::string>& siblings = kids[host.id];
            BBox box;
            bool ok = false;
            ElementType type = want_data ? kData[pick(4)] : kShapes[pick(5)];
            for (int attempt = 0; attempt < 30 && !ok; ++attempt) {
                double fw = uniform(0.3, 0.6), fh = uniform(0.3, 0.6);
                if (host.level == 0 && u01(rng) < cfg.top_level_shrink_probability) {
                    // Shrink as if nested once more, so size alone does not reveal depth.
                    const double shrink = uniform(0.3, 0.6);
                    fw *= shrink;
                    fh *= shrink;
                }
                int bw = std::max(8, static_cast<int>(host.box.w * fw));
                int bh = std::max(8, static_cast<int>(host.box.h * fh));
                if (type == ElementType::square || type == ElementType::circle || type == ElementType::icon)
                    bw = bh = std::min(bw, bh);
                if (type == ElementType::text) bh = std::max(8, bh / 2);
                // Children sit inside a 15% inset so they stay within non-rectangular hosts.
                const int inset_x = host.level == 0 ? 2 : static_cast<int>(std::ceil(host.box.w * 0.18));
                const int inset_y = host.level == 0 ? 2 : static_cast<int>(std::ceil(host.box.h * 0.22));
                const int free_w = host.box.w - 2 * inset_x - bw;
                const int free_h = host.box.h - 2 * inset_y - bh;
                if (free_w < 0 || free_h < 0) continue;
                box = {host.box.x + inset_x + pick(free_w + 1), host.box.y + inset_y + pick(free_h + 1), bw, bh};
                ok = std::none_of(siblings.begin(), siblings.end(), [&](const std::string& s) {
                    return std::any_of(placed.begin(), placed.end(),
                                       [&](const Placed& p) { return p.id == s && overlaps(p.box, box, 3); });
                });
                if (ok && host.level > 0) {
                    const auto& hn = *std::find_if(elements.begin(), elements.end(),
                                                   [&](const ElementNode& n) { return n.id == host.id; });
                    for (double fy : {0.0, 1.0}) {
                        for (double fx : {0.0, 1.0}) {
                            ok &= shape_contains(*hn.element_type, hn.bbox, box.x + fx * box.w, box.y + fy * box.h);
                        }
                    }
                }
            }
            if (!ok) {
                if (e == n_elems - 1 && std::none_of(elements.begin(), elements.end(), [&](const ElementNode& n) {
                        return n.kind == NodeKind::data && color_of.count(n.id);
                    })) {
                    // Guarantee one data element per group: a small text strip in the cell corner.
                    host = {cell, 0, gid, true};
                    type = ElementType::text;
                    box = {cell.x + 2, cell.bottom() - 10, std::max(8, cell.w / 4), 8};
                    ok = std::none_of(kids[gid].begin(), kids[gid].end(), [&](const std::string& s) {
                        return std::any_of(placed.begin(), placed.end(),
                                           [&](const Placed& p) { return p.id == s && overlaps(p.box, box, 1); });
                    });
                }
                if (!ok) continue;
            }

            ElementNode node;
            node.bbox = box;
            node.element_type = type;
            const int level = host.level + 1;
            const LabColor host_color = host.level == 0 ? *bg.color : color_of.at(host.id);
            if (want_data || is_data_type(type)) {
                node.kind = NodeKind::data;
                node.id = "d" + std::to_string(data_count++);
                node.color = jitter(lch(host_color.l > 60.0 ? 15.0 : 95.0, 3.0, hue0), cfg.color_noise, rng);
            } else {
                node.kind = NodeKind::artistic;
                node.id = "a" + std::to_string(artistic_count++);
                const bool odd = level % 2 == 1;
                const double l = dark ? (odd ? 70.0 : 38.0) : (odd ? 50.0 : 78.0);
                node.color = jitter(lch(l, odd ? 45.0 : 30.0, hue0 + 60.0 * (level - 1)), cfg.color_noise, rng);
            }
            node.pixel_area = static_cast<long long>(mask_pixels(box, W, type).size());
            color_of[node.id] = *node.color;
            kids[host.id].push_back(node.id);
            placed.push_back({box, level, node.id, node.kind == NodeKind::artistic && box.w >= 24 && box.h >= 24});
            elements.push_back(std::move(node));
        }

        ElementNode gn;
        gn.id = gid;
        gn.kind = NodeKind::visual_group;
        bool first = true;
        for (const auto& c : kids[gid]) {
            const auto& b = std::find_if(placed.begin(), placed.end(), [&](const Placed& p) { return p.id == c; })->box;
            gn.bbox = first ? b : gn.bbox.unite(b);
            first = false;
        }
        gn.children = kids[gid];
        gn.pixel_area = gn.bbox.area();
        for (auto& el : elements) {
            if (kids.count(el.id)) el.children = kids[el.id];
        }
        if (!gn.children.empty()) groups.push_back(std::move(gn));
    }

    // Renumber groups densely in backbone order.
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const std::string id = "g" + std::to_string(g);
        groups[g].id = id;
        bg.children.push_back(id);
        doc.visual_groups.push_back(id);
    }
    doc.nodes.push_back(std::move(bg));
    for (auto& g : groups) doc.nodes.push_back(std::move(g));
    for (auto& e : elements) doc.nodes.push_back(std::move(e));
    for (auto& node : doc.nodes) {
        std::stable_sort(node.children.begin(), node.children.end(), [&](const auto& a, const auto& b) {
            return reading_order_less(doc.at(a).bbox, doc.at(b).bbox);
        });
    }
    return doc;
}

std::vector<InfographicDoc> generate_corpus(std::size_t n, std::uint64_t seed, const SynthConfig& config) {
    std::mt19937_64 rng(seed);
    std::vector<InfographicDoc> docs;
    docs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) docs.push_back(generate_document(rng, config));
    return docs;
}

RasterImage render_document(const InfographicDoc& doc) {
    const ElementNode& root = doc.at(doc.root);
    RasterImage img(doc.width, doc.height, lab_to_rgb_clamped(root.color.value_or(LabColor{100, 0, 0})));
    for (const auto& id : doc.preorder()) {
        const ElementNode& n = doc.at(id);
        if (n.kind == NodeKind::background || n.kind == NodeKind::visual_group || !n.color) continue;
        const RgbColor c = lab_to_rgb_clamped(*n.color);
        const ElementType t = n.element_type.value_or(ElementType::rectangle);
        for (int p : mask_pixels(n.bbox, doc.width, t)) img.at(p % doc.width, p / doc.width) = c;
    }
    return img;
}

AnnotationSet annotations_for(const InfographicDoc& doc) {
    AnnotationSet ann;
    std::map<std::string, int> index;
    std::vector<const ElementNode*> data;
    for (const auto& n : doc.nodes) {
        if (n.kind == NodeKind::data) data.push_back(&n);
    }
    std::sort(data.begin(), data.end(), [](const ElementNode* a, const ElementNode* b) {
        return std::stoi(a->id.substr(1)) < std::stoi(b->id.substr(1));
    });
    for (const auto* n : data) {
        index[n->id] = static_cast<int>(ann.data_elements.size());
        ann.data_elements.push_back({n->bbox, *n->element_type});
    }
    std::vector<std::vector<int>> groups;
    for (const auto& gid : doc.visual_groups) {
        std::vector<int> members;
        std::vector<std::string> stack = {gid};
        while (!stack.empty()) {
            const std::string id = stack.back();
            stack.pop_back();
            const ElementNode& n = doc.at(id);
            if (index.count(id)) members.push_back(index[id]);
            for (const auto& c : n.children) stack.push_back(c);
        }
        std::sort(members.begin(), members.end());
        if (!members.empty()) groups.push_back(std::move(members));
    }
    ann.visual_groups = std::move(groups);
    ann.vif_type = doc.vif_type;
    return ann;
}

TestCard generate_test_card(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const int W = 200, H = 150;
    const double min_area = 0.0005 * W * H;
    for (;;) {
        const int n_shapes = 1 + static_cast<int>(u01(rng) * 4);
        const LabColor bg = {88.0 + 8.0 * u01(rng), 0.0, 0.0};
        std::vector<LabColor> colors = {clamp_to_gamut(bg)};
        const double hue_start = 360.0 * u01(rng);
        std::vector<int> hue_slots = {0, 1, 2, 3, 4, 5, 6, 7};
        std::shuffle(hue_slots.begin(), hue_slots.end(), rng);
        for (int i = 0; i < n_shapes; ++i) {
            colors.push_back(clamp_to_gamut(lch(40.0 + 30.0 * u01(rng), 40.0 + 20.0 * u01(rng),
                                                hue_start + 45.0 * hue_slots[i])));
        }
        bool distinct = true;
        for (std::size_t a = 0; a < colors.size(); ++a) {
            for (std::size_t b = a + 1; b < colors.size(); ++b) distinct &= ciede2000(colors[a], colors[b]) > 10.0;
        }
        if (!distinct) continue;

        std::vector<int> labels(static_cast<std::size_t>(W) * H, 0);
        std::vector<BBox> boxes;
        for (int i = 0; i < n_shapes; ++i) {
            const ElementType t = kShapes[static_cast<int>(u01(rng) * 5) % 5];
            // Nest inside an earlier rectangle-like shape half the time.
            BBox area = {4, 4, W - 8, H - 8};
            if (!boxes.empty() && u01(rng) < 0.5) {
                const BBox& host = boxes[static_cast<int>(u01(rng) * boxes.size()) % boxes.size()];
                area = {host.x + host.w / 4, host.y + host.h / 4, host.w / 2, host.h / 2};
            }
            int bw = static_cast<int>(area.w * (0.3 + 0.4 * u01(rng)));
            int bh = static_cast<int>(area.h * (0.3 + 0.4 * u01(rng)));
            if (t == ElementType::square || t == ElementType::circle) bw = bh = std::min(bw, bh);
            if (bw < 10 || bh < 10) continue;
            const BBox box = {area.x + static_cast<int>(u01(rng) * (area.w - bw)),
                              area.y + static_cast<int>(u01(rng) * (area.h - bh)), bw, bh};
            boxes.push_back(box);
            for (int p : mask_pixels(box, W, t)) labels[p] = i + 1;
        }
        auto regions = components(labels, W, H);
        const bool big_enough = std::all_of(regions.begin(), regions.end(),
                                            [&](const auto& r) { return static_cast<double>(r.size()) >= min_area; });
        if (!big_enough) continue;

        TestCard card;
        card.image = RasterImage(W, H);
        for (int p = 0; p < W * H; ++p) card.image.at(p % W, p / W) = lab_to_rgb_clamped(colors[labels[p]]);
        std::sort(regions.begin(), regions.end());
        card.regions = std::move(regions);
        card.shape_count = static_cast<int>(boxes.size());
        return card;
    }
}

TestCard generate_gradient_card(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const int W = 200, H = 150;
    const LabColor bg = clamp_to_gamut({95.0, 0.0, 0.0});
    const ElementType t = u01(rng) < 0.5 ? ElementType::rectangle : ElementType::circle;
    const int bw = 90 + static_cast<int>(u01(rng) * 40);
    const int bh = t == ElementType::circle ? std::min(bw, 120) : 80 + static_cast<int>(u01(rng) * 40);
    const BBox box = {(W - (t == ElementType::circle ? bh : bw)) / 2, (H - bh) / 2,
                      t == ElementType::circle ? bh : bw, bh};
    // Resample until the whole ramp is displayable: clipping would bend the hue.
    auto ramp_in_gamut = [](double c, double h) {
        for (int k = 0; k <= 20; ++k) {
            const LabColor want = lch(35.0 + 35.0 * k / 20.0, c, h);
            if (ciede2000(want, clamp_to_gamut(want)) > 1.0) return false;
        }
        return true;
    };
    double hue = 0.0, c0 = 0.0;
    do {
        hue = 360.0 * u01(rng);
        c0 = 45.0 + 10.0 * u01(rng);
    } while (!ramp_in_gamut(c0, hue));

    TestCard card;
    card.image = RasterImage(W, H, lab_to_rgb_clamped(bg));
    std::vector<int> labels(static_cast<std::size_t>(W) * H, 0);
    for (int p : mask_pixels(box, W, t)) {
        const int y = p / W;
        const double f = static_cast<double>(y - box.y) / std::max(1, box.h - 1);
        card.image.at(p % W, y) = lab_to_rgb_clamped(lch(35.0 + 35.0 * f, c0, hue));
        labels[p] = 1;
    }
    auto regions = components(labels, W, H);
    std::sort(regions.begin(), regions.end());
    card.regions = std::move(regions);
    card.shape_count = 1;
    return card;
}

Segment shape_mask(ElementType type, double angle_degrees, int canvas) {
    const double c = canvas / 2.0;
    std::vector<Point> poly;
    auto regular = [&](int n, double r) {
        for (int i = 0; i < n; ++i) {
            const double t = (-90.0 + 360.0 * i / n) * kDeg;
            poly.emplace_back(r * std::cos(t), r * std::sin(t));
        }
    };
    double radius = 0.0;
    switch (type) {
        case ElementType::triangle: regular(3, canvas * 0.38); break;
        case ElementType::pentagon: regular(5, canvas * 0.36); break;
        case ElementType::square: {
            const double s = canvas * 0.25;
            poly = {{-s, -s}, {s, -s}, {s, s}, {-s, s}};
            break;
        }
        case ElementType::rectangle: {
            const double a = canvas * 0.32, b = canvas * 0.16;
            poly = {{-a, -b}, {a, -b}, {a, b}, {-a, b}};
            break;
        }
        case ElementType::circle: radius = canvas * 0.34; break;
        default: throw InvalidInput("shape_mask supports artistic polygon types and circles");
    }
    const double ca = std::cos(angle_degrees * kDeg), sa = std::sin(angle_degrees * kDeg);
    for (auto& [x, y] : poly) {
        const double rx = x * ca - y * sa, ry = x * sa + y * ca;
        x = c + rx;
        y = c + ry;
    }
    Segment seg;
    for (int y = 0; y < canvas; ++y) {
        for (int x = 0; x < canvas; ++x) {
            const double px = x + 0.5, py = y + 0.5;
            const bool in = type == ElementType::circle ? std::hypot(px - c, py - c) <= radius : in_polygon(poly, px, py);
            if (in) seg.pixels.push_back(y * canvas + x);
        }
    }
    seg.bbox = bounds_of(seg.pixels, canvas);
    seg.mean = {50.0, 0.0, 0.0};
    return seg;
}

std::vector<FeatureVector> generate_linear_corpus(std::size_t n, std::uint64_t seed, double noise) {
    SynthConfig cfg;
    cfg.color_noise = 0.0;
    const auto docs = generate_corpus(n, seed, cfg);
    std::mt19937_64 rng(seed ^ 0xa5a5a5a5ull);
    std::normal_distribution<double> nd(0.0, noise);
    std::vector<FeatureVector> out;
    out.reserve(n);
    for (const auto& doc : docs) {
        FeatureVector v = featurize(doc);
        const auto& l = *v.layout;
        const double groups = v.values[kVifTypeCount];
        const double landscape = v.values[static_cast<std::size_t>(VifType::landscape)];
        for (std::size_t s = 0; s < l.slots(); ++s) {
            if (!v.colorable(s)) continue;
            const int base = l.colorable_offset[s] - 4;  // rel_w, rel_h, rel_area, group_elements precede colorable
            const double rel_w = v.values[base], rel_h = v.values[base + 1], area = v.values[base + 2];
            const double left = l.left_offset[s] >= 0 ? v.values[l.left_offset[s]] : 0.0;
            LabColor c;
            c.l = 30.0 + 60.0 * rel_w - 20.0 * area + 8.0 * landscape + nd(rng);
            c.a = -25.0 + 50.0 * rel_h + 10.0 * groups / 3.0 + nd(rng);
            c.b = 30.0 - 60.0 * left + 5.0 * groups + nd(rng);
            v.set_color(s, c);
        }
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace palettizer
