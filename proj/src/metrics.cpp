#include "mieval/metrics.hpp"

#include <cmath>
#include <limits>

namespace mieval::metrics {

namespace {

void require_same_grid(const StructureMask& a, const StructureMask& b) {
    if (a.shape() != b.shape()) throw ShapeError("metric: mask shapes differ");
    if (a.spacing() != b.spacing()) throw ShapeError("metric: mask spacings differ");
}

constexpr double kInf = std::numeric_limits<double>::infinity();

/// 1-D lower-envelope distance transform (Felzenszwalb-Huttenlocher) over
/// samples at positions i*step: out[j] = min_i ((j-i)^2 * step^2 + f[i]).
/// Infinite entries simply contribute no parabola.
void dt_1d(const double* f, double* out, int n, double step, std::vector<int>& v,
           std::vector<double>& z) {
    v.resize(n);
    z.resize(n + 1);
    const double s2 = step * step;
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[q] == kInf) continue;
        double s = 0.0;
        while (k >= 0) {
            const int p = v[k];
            s = ((f[q] - f[p]) / s2 + double(q) * q - double(p) * p) / (2.0 * (q - p));
            if (s > z[k]) break;
            --k;
        }
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -kInf;
        } else {
            ++k;
            v[k] = q;
            z[k] = s;
        }
        z[k + 1] = kInf;
    }
    if (k < 0) {
        std::fill(out, out + n, kInf);
        return;
    }
    int kk = 0;
    for (int q = 0; q < n; ++q) {
        while (z[kk + 1] < q) ++kk;
        const int p = v[kk];
        out[q] = (double(q) - p) * (double(q) - p) * s2 + f[p];
    }
}

}  // namespace

std::vector<double> squared_distance_field(const StructureMask& mask) {
    const GridShape sh = mask.shape();
    const Spacing sp = mask.spacing();
    std::vector<double> field(sh.voxels());
    for (std::size_t i = 0; i < field.size(); ++i) {
        field[i] = mask.bits()[i] ? 0.0 : kInf;
    }

    std::vector<int> v;
    std::vector<double> z, line, out;

    // along W (rows are contiguous)
    out.resize(sh.w);
    for (int s = 0; s < sh.s; ++s) {
        for (int y = 0; y < sh.h; ++y) {
            double* row = field.data() + (static_cast<std::size_t>(s) * sh.h + y) * sh.w;
            dt_1d(row, out.data(), sh.w, sp.dx, v, z);
            std::copy(out.begin(), out.begin() + sh.w, row);
        }
    }
    // along H
    line.resize(sh.h);
    out.resize(sh.h);
    for (int s = 0; s < sh.s; ++s) {
        for (int x = 0; x < sh.w; ++x) {
            for (int y = 0; y < sh.h; ++y) {
                line[y] = field[(static_cast<std::size_t>(s) * sh.h + y) * sh.w + x];
            }
            dt_1d(line.data(), out.data(), sh.h, sp.dy, v, z);
            for (int y = 0; y < sh.h; ++y) {
                field[(static_cast<std::size_t>(s) * sh.h + y) * sh.w + x] = out[y];
            }
        }
    }
    // along S
    line.resize(sh.s);
    out.resize(sh.s);
    for (int y = 0; y < sh.h; ++y) {
        for (int x = 0; x < sh.w; ++x) {
            for (int s = 0; s < sh.s; ++s) {
                line[s] = field[(static_cast<std::size_t>(s) * sh.h + y) * sh.w + x];
            }
            dt_1d(line.data(), out.data(), sh.s, sp.dz, v, z);
            for (int s = 0; s < sh.s; ++s) {
                field[(static_cast<std::size_t>(s) * sh.h + y) * sh.w + x] = out[s];
            }
        }
    }
    return field;
}

double dice3d(const StructureMask& a, const StructureMask& b) {
    require_same_grid(a, b);
    std::size_t inter = 0, ca = 0, cb = 0;
    for (std::size_t i = 0; i < a.bits().size(); ++i) {
        const bool va = a.bits()[i] != 0;
        const bool vb = b.bits()[i] != 0;
        inter += va && vb;
        ca += va;
        cb += vb;
    }
    if (ca + cb == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(ca + cb);
}

std::optional<double> hausdorff3d_mm(const StructureMask& a, const StructureMask& b) {
    require_same_grid(a, b);
    if (a.count() == 0 || b.count() == 0) return std::nullopt;

    auto directed_sq = [](const StructureMask& from, const StructureMask& to) {
        const std::vector<double> field = squared_distance_field(to);
        double worst = 0.0;
        for (std::size_t i = 0; i < from.bits().size(); ++i) {
            if (from.bits()[i] && field[i] > worst) worst = field[i];
        }
        return worst;
    };
    return std::sqrt(std::max(directed_sq(a, b), directed_sq(b, a)));
}

std::optional<double> rvd(const StructureMask& a, const StructureMask& gt) {
    require_same_grid(a, gt);
    const std::size_t va = a.count();
    const std::size_t vg = gt.count();
    if (vg == 0) return std::nullopt;
    const double diff = va >= vg ? double(va - vg) : double(vg - va);
    return diff / static_cast<double>(vg);
}

double accuracy(const std::vector<io::CaseClass>& predictions,
                const std::vector<io::CaseClass>& truths) {
    if (predictions.empty() || predictions.size() != truths.size()) {
        throw DataError("accuracy: prediction/truth lists must be non-empty and equal");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        hits += predictions[i] == truths[i];
    }
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

}  // namespace mieval::metrics
