#include "mieval/preproc.hpp"

#include <algorithm>
#include <cmath>

namespace mieval {

void PreprocConfig::validate() const {
    if (target_h < 8 || target_w < 8 || target_h % 2 != 0 || target_w % 2 != 0) {
        throw ConfigError("preproc: target dims must be >= 8 and even");
    }
    if (!(epsilon_std > 0.0)) {
        throw ConfigError("preproc: epsilon_std must be > 0");
    }
}

namespace {

// Half-pixel-centre source coordinate for output index `t` (align_corners=false).
inline double src_coord(int t, double scale) {
    return (t + 0.5) * scale - 0.5;
}

inline int clampi(int v, int lo, int hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

Volume resize_volume(const Volume& v, const PreprocConfig& cfg) {
    cfg.validate();
    const GridShape in = v.shape();
    const GridShape out{in.s, cfg.target_h, cfg.target_w};
    const double sy = static_cast<double>(in.h) / out.h;
    const double sx = static_cast<double>(in.w) / out.w;

    std::vector<float> data(out.voxels());
    for (int s = 0; s < out.s; ++s) {
        for (int ty = 0; ty < out.h; ++ty) {
            const double yc = src_coord(ty, sy);
            const int y0 = static_cast<int>(std::floor(yc));
            const double fy = yc - y0;
            const int ya = clampi(y0, 0, in.h - 1);
            const int yb = clampi(y0 + 1, 0, in.h - 1);
            for (int tx = 0; tx < out.w; ++tx) {
                const double xc = src_coord(tx, sx);
                const int x0 = static_cast<int>(std::floor(xc));
                const double fx = xc - x0;
                const int xa = clampi(x0, 0, in.w - 1);
                const int xb = clampi(x0 + 1, 0, in.w - 1);
                const double top = (1.0 - fx) * v.at(s, ya, xa) + fx * v.at(s, ya, xb);
                const double bot = (1.0 - fx) * v.at(s, yb, xa) + fx * v.at(s, yb, xb);
                data[(static_cast<std::size_t>(s) * out.h + ty) * out.w + tx] =
                    static_cast<float>((1.0 - fy) * top + fy * bot);
            }
        }
    }

    Spacing spacing = v.spacing();
    spacing.dy *= sy;
    spacing.dx *= sx;
    return Volume(out, spacing, std::move(data), v.case_id());
}

LabelMap resize_labels_to(const LabelMap& lm, int target_h, int target_w) {
    const GridShape in = lm.shape();
    const GridShape out{in.s, target_h, target_w};
    const double sy = static_cast<double>(in.h) / out.h;
    const double sx = static_cast<double>(in.w) / out.w;

    std::vector<std::uint8_t> labels(out.voxels());
    for (int s = 0; s < out.s; ++s) {
        for (int ty = 0; ty < out.h; ++ty) {
            const int ys = clampi(static_cast<int>(std::floor((ty + 0.5) * sy)), 0, in.h - 1);
            for (int tx = 0; tx < out.w; ++tx) {
                const int xs =
                    clampi(static_cast<int>(std::floor((tx + 0.5) * sx)), 0, in.w - 1);
                labels[(static_cast<std::size_t>(s) * out.h + ty) * out.w + tx] =
                    lm.at(s, ys, xs);
            }
        }
    }

    Spacing spacing = lm.spacing();
    spacing.dy *= sy;
    spacing.dx *= sx;
    return LabelMap(out, spacing, std::move(labels));
}

LabelMap resize_labels(const LabelMap& lm, const PreprocConfig& cfg) {
    cfg.validate();
    return resize_labels_to(lm, cfg.target_h, cfg.target_w);
}

Volume normalize_intensity(const Volume& v, const PreprocConfig& cfg) {
    cfg.validate();
    double sum = 0.0;
    for (float x : v.data()) sum += x;
    const double mean = sum / v.data().size();
    double sq = 0.0;
    for (float x : v.data()) {
        const double d = x - mean;
        sq += d * d;
    }
    const double std_dev = std::sqrt(sq / v.data().size());
    const double denom = std::max(std_dev, cfg.epsilon_std);

    std::vector<float> data(v.data().size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        data[i] = static_cast<float>((v.data()[i] - mean) / denom);
    }
    return Volume(v.shape(), v.spacing(), std::move(data), v.case_id());
}

Volume preprocess_case(const Volume& v, const PreprocConfig& cfg) {
    return normalize_intensity(resize_volume(v, cfg), cfg);
}

}  // namespace mieval
