#include "mieval/clinical/svm.hpp"

#include <algorithm>
#include <cmath>

namespace mieval::clinical {

namespace {

void check_training_set(const std::vector<std::vector<double>>& x,
                        const std::vector<int>& y) {
    if (x.empty() || x.size() != y.size()) {
        throw DataError("svm: need matching non-empty sample/label lists");
    }
    const std::size_t dim = x.front().size();
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i].size() != dim) throw ShapeError("svm: inconsistent feature dims");
        if (y[i] == +1) has_pos = true;
        else if (y[i] == -1) has_neg = true;
        else throw DataError("svm: labels must be -1 or +1");
    }
    if (!has_pos || !has_neg) {
        throw DataError("svm: training set must contain both classes");
    }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// Exact minimizer over b of sum_i hinge(1 - y_i (s_i + b)) for fixed scores
/// s_i = w.x_i. The objective is piecewise linear in b; scan the breakpoints
/// b_i = y_i - s_i and return the midpoint of the optimal interval.
double best_bias(const std::vector<double>& scores, const std::vector<int>& y) {
    struct Breakpoint {
        double b;
        int y;
    };
    std::vector<Breakpoint> bps(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        bps[i] = {static_cast<double>(y[i]) - scores[i], y[i]};
    }
    std::sort(bps.begin(), bps.end(),
              [](const Breakpoint& a, const Breakpoint& b) { return a.b < b.b; });

    // Left of all breakpoints every positive sample is active (slope -n_pos
    // ... wait, slope = -#active_pos + #active_neg); walk the breakpoints
    // accumulating slope and track where the objective is minimal.
    int n_pos = 0, n_neg = 0;
    for (int label : y) (label == +1 ? n_pos : n_neg)++;

    // objective value at the first breakpoint, computed directly
    auto value_at = [&](double b) {
        double v = 0.0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            v += std::max(0.0, 1.0 - y[i] * (scores[i] + b));
        }
        return v;
    };

    int active_pos = n_pos;  // hinge active for positives when b < bp
    int active_neg = 0;      // for negatives when b > bp
    double best_value = value_at(bps.front().b);
    double cur_value = best_value;
    double best_lo = bps.front().b, best_hi = bps.front().b;
    double prev_b = bps.front().b;
    for (std::size_t i = 0; i < bps.size(); ++i) {
        if (i > 0) {
            const double slope = -active_pos + active_neg;
            cur_value += slope * (bps[i].b - prev_b);
            prev_b = bps[i].b;
            if (cur_value < best_value - 1e-12) {
                best_value = cur_value;
                best_lo = best_hi = bps[i].b;
            } else if (cur_value <= best_value + 1e-12) {
                best_hi = bps[i].b;
            }
        }
        if (bps[i].y == +1) --active_pos;
        else ++active_neg;
    }
    return 0.5 * (best_lo + best_hi);
}

}  // namespace

double LinearSvmModel::decision(const std::vector<double>& x) const {
    if (!trained) throw NumericError("linear svm: model not trained");
    if (x.size() != w.size()) throw ShapeError("linear svm: feature dim mismatch");
    return dot(w, x) + b;
}

double linear_svm_objective(const std::vector<std::vector<double>>& x,
                            const std::vector<int>& y, const std::vector<double>& w,
                            double b, double c) {
    const double lambda = 1.0 / (c * static_cast<double>(x.size()));
    double obj = 0.5 * lambda * dot(w, w);
    double hinge = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        hinge += std::max(0.0, 1.0 - y[i] * (dot(w, x[i]) + b));
    }
    return obj + hinge / static_cast<double>(x.size());
}

LinearSvmModel train_linear_svm(const std::vector<std::vector<double>>& x,
                                const std::vector<int>& y, const LinearSvmConfig& cfg) {
    check_training_set(x, y);
    if (cfg.epochs < 1) throw ConfigError("linear svm: epochs must be >= 1");
    if (!(cfg.c > 0.0)) throw ConfigError("linear svm: C must be > 0");

    const std::size_t n = x.size();
    const std::size_t dim = x.front().size();
    const double lambda = 1.0 / (cfg.c * static_cast<double>(n));
    const double radius = 1.0 / std::sqrt(lambda);  // ||w*|| bound for projection

    std::vector<double> w(dim, 0.0), w_avg(dim, 0.0), grad(dim, 0.0);
    std::vector<double> scores(n, 0.0);

    LinearSvmModel model;
    model.c = cfg.c;
    model.w.assign(dim, 0.0);
    double best_obj = linear_svm_objective(x, y, model.w, 0.0, cfg.c);
    model.b = best_bias(std::vector<double>(n, 0.0), y);
    best_obj = linear_svm_objective(x, y, model.w, model.b, cfg.c);
    model.objective_history.push_back(best_obj);

    const int checkpoint_every = std::max(1, cfg.epochs / 50);

    for (int t = 1; t <= cfg.epochs; ++t) {
        for (std::size_t i = 0; i < n; ++i) scores[i] = dot(w, x[i]);
        const double b_now = best_bias(scores, y);

        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (y[i] * (scores[i] + b_now) < 1.0) {
                for (std::size_t f = 0; f < dim; ++f) {
                    grad[f] -= y[i] * x[i][f];
                }
            }
        }
        const double eta = 1.0 / (lambda * (t + 1.0));
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t f = 0; f < dim; ++f) {
            w[f] -= eta * (lambda * w[f] + grad[f] * inv_n);
        }
        // Pegasos projection onto the ball that contains the optimum.
        const double norm = std::sqrt(dot(w, w));
        if (norm > radius) {
            const double scale = radius / norm;
            for (double& v : w) v *= scale;
        }
        for (std::size_t f = 0; f < dim; ++f) {
            w_avg[f] += (w[f] - w_avg[f]) / t;
        }

        if (t % checkpoint_every == 0 || t == cfg.epochs) {
            for (std::size_t i = 0; i < n; ++i) scores[i] = dot(w_avg, x[i]);
            const double b_avg = best_bias(scores, y);
            const double obj = linear_svm_objective(x, y, w_avg, b_avg, cfg.c);
            if (obj < best_obj) {
                best_obj = obj;
                model.w = w_avg;
                model.b = b_avg;
                model.objective_history.push_back(obj);
            }
        }
    }

    model.trained = true;
    return model;
}

std::vector<int> select_features(const LinearSvmModel& model, double tau) {
    if (!model.trained) throw NumericError("select_features: model not trained");
    double max_abs = 0.0;
    for (double v : model.w) max_abs = std::max(max_abs, std::abs(v));

    std::vector<int> selected;
    for (std::size_t i = 0; i < model.w.size(); ++i) {
        if (std::abs(model.w[i]) >= tau * max_abs) {
            selected.push_back(static_cast<int>(i));
        }
    }
    if (selected.empty() || max_abs == 0.0) {
        // degenerate weights: keep the single largest-|w| feature
        std::size_t arg = 0;
        for (std::size_t i = 1; i < model.w.size(); ++i) {
            if (std::abs(model.w[i]) > std::abs(model.w[arg])) arg = i;
        }
        selected.assign(1, static_cast<int>(arg));
    }
    return selected;
}

double rbf_kernel(const std::vector<double>& a, const std::vector<double>& b,
                  double gamma) {
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sq += d * d;
    }
    return std::exp(-gamma * sq);
}

double default_gamma(const std::vector<std::vector<double>>& x) {
    const std::size_t dim = x.front().size();
    double sum = 0.0, sq = 0.0;
    std::size_t count = 0;
    for (const auto& row : x) {
        for (double v : row) {
            sum += v;
            sq += v * v;
            ++count;
        }
    }
    const double mean = sum / count;
    const double var = std::max(sq / count - mean * mean, 1e-12);
    return 1.0 / (static_cast<double>(dim) * var);
}

double RbfSvmModel::decision(const std::vector<double>& x) const {
    if (!trained) throw NumericError("rbf svm: model not trained");
    double s = b;
    for (std::size_t i = 0; i < support_vectors.size(); ++i) {
        s += alpha_y[i] * rbf_kernel(support_vectors[i], x, gamma);
    }
    return s;
}

namespace {

/// Platt's SMO with a deterministic second-choice heuristic.
class SmoSolver {
public:
    SmoSolver(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
              double c, double gamma, double tol)
        : x_(x), y_(y), c_(c), tol_(tol), n_(x.size()), alpha_(x.size(), 0.0),
          error_(x.size()) {
        kernel_.assign(n_ * n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = i; j < n_; ++j) {
                const double k = rbf_kernel(x[i], x[j], gamma);
                kernel_[i * n_ + j] = k;
                kernel_[j * n_ + i] = k;
            }
        }
        for (std::size_t i = 0; i < n_; ++i) error_[i] = -y_[i];
    }

    void solve() {
        bool examine_all = true;
        std::size_t passes = 0;
        const std::size_t max_passes = 2000 + 200 * n_;
        while (passes++ < max_passes) {
            int changed = 0;
            if (examine_all) {
                for (std::size_t i = 0; i < n_; ++i) changed += examine(i);
            } else {
                for (std::size_t i = 0; i < n_; ++i) {
                    if (alpha_[i] > 0.0 && alpha_[i] < c_) changed += examine(i);
                }
            }
            if (examine_all) {
                if (changed == 0) return;
                examine_all = false;
            } else if (changed == 0) {
                examine_all = true;
            }
        }
        throw NumericError("rbf svm: SMO did not converge");
    }

    const std::vector<double>& alpha() const { return alpha_; }
    double bias() const { return b_; }

private:
    const std::vector<std::vector<double>>& x_;
    const std::vector<int>& y_;
    double c_;
    double tol_;
    std::size_t n_;
    std::vector<double> alpha_;
    std::vector<double> error_;
    std::vector<double> kernel_;
    double b_ = 0.0;

    double f(std::size_t i) const { return error_[i] + y_[i]; }

    int examine(std::size_t i2) {
        const double y2 = y_[i2];
        const double a2 = alpha_[i2];
        const double e2 = error_[i2];
        const double r2 = e2 * y2;
        const bool violated = (r2 < -tol_ && a2 < c_) || (r2 > tol_ && a2 > 0.0);
        if (!violated) return 0;

        // second choice: maximal |E1 - E2| over non-bound points
        std::size_t best = n_;
        double best_gap = -1.0;
        for (std::size_t i = 0; i < n_; ++i) {
            if (i == i2 || alpha_[i] <= 0.0 || alpha_[i] >= c_) continue;
            const double gap = std::abs(error_[i] - e2);
            if (gap > best_gap) {
                best_gap = gap;
                best = i;
            }
        }
        if (best < n_ && take_step(best, i2)) return 1;

        for (std::size_t i = 0; i < n_; ++i) {
            if (i == i2 || alpha_[i] <= 0.0 || alpha_[i] >= c_) continue;
            if (take_step(i, i2)) return 1;
        }
        for (std::size_t i = 0; i < n_; ++i) {
            if (i == i2) continue;
            if (take_step(i, i2)) return 1;
        }
        return 0;
    }

    bool take_step(std::size_t i1, std::size_t i2) {
        if (i1 == i2) return false;
        const double a1 = alpha_[i1], a2 = alpha_[i2];
        const double y1 = y_[i1], y2 = y_[i2];
        const double e1 = error_[i1], e2 = error_[i2];
        const double s = y1 * y2;

        double lo, hi;
        if (s < 0) {
            lo = std::max(0.0, a2 - a1);
            hi = std::min(c_, c_ + a2 - a1);
        } else {
            lo = std::max(0.0, a1 + a2 - c_);
            hi = std::min(c_, a1 + a2);
        }
        if (lo >= hi) return false;

        const double k11 = kernel_[i1 * n_ + i1];
        const double k12 = kernel_[i1 * n_ + i2];
        const double k22 = kernel_[i2 * n_ + i2];
        const double eta = k11 + k22 - 2.0 * k12;

        double a2_new;
        if (eta > 0.0) {
            a2_new = a2 + y2 * (e1 - e2) / eta;
            a2_new = std::clamp(a2_new, lo, hi);
        } else {
            // evaluate the objective at both clip bounds (Platt's formulas,
            // adapted to the f = sum + b sign convention)
            const double f1 = y1 * (e1 - b_) - a1 * k11 - s * a2 * k12;
            const double f2 = y2 * (e2 - b_) - a2 * k22 - s * a1 * k12;
            const double l1 = a1 + s * (a2 - lo);
            const double h1 = a1 + s * (a2 - hi);
            const double obj_lo =
                l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 + 0.5 * lo * lo * k22 +
                s * lo * l1 * k12;
            const double obj_hi =
                h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 + 0.5 * hi * hi * k22 +
                s * hi * h1 * k12;
            if (obj_lo < obj_hi - 1e-12) a2_new = lo;
            else if (obj_hi < obj_lo - 1e-12) a2_new = hi;
            else return false;
        }
        if (std::abs(a2_new - a2) < 1e-12 * (a2_new + a2 + 1e-12)) return false;

        const double a1_new = a1 + s * (a2 - a2_new);

        const double b1 = b_ - e1 - y1 * (a1_new - a1) * k11 - y2 * (a2_new - a2) * k12;
        const double b2 = b_ - e2 - y1 * (a1_new - a1) * k12 - y2 * (a2_new - a2) * k22;
        double b_new;
        if (a1_new > 0.0 && a1_new < c_) b_new = b1;
        else if (a2_new > 0.0 && a2_new < c_) b_new = b2;
        else b_new = 0.5 * (b1 + b2);

        const double d1 = y1 * (a1_new - a1);
        const double d2 = y2 * (a2_new - a2);
        for (std::size_t i = 0; i < n_; ++i) {
            error_[i] += d1 * kernel_[i1 * n_ + i] + d2 * kernel_[i2 * n_ + i] +
                         (b_new - b_);
        }
        alpha_[i1] = a1_new;
        alpha_[i2] = a2_new;
        b_ = b_new;
        return true;
    }
};

}  // namespace

RbfSvmModel train_rbf_svm(const std::vector<std::vector<double>>& x,
                          const std::vector<int>& y, const RbfSvmConfig& cfg,
                          std::vector<double>* alpha_out) {
    check_training_set(x, y);
    if (!(cfg.c > 0.0)) throw ConfigError("rbf svm: C must be > 0");

    const double gamma = cfg.gamma ? *cfg.gamma : default_gamma(x);
    if (!(gamma > 0.0)) throw ConfigError("rbf svm: gamma must be > 0");

    SmoSolver solver(x, y, cfg.c, gamma, cfg.tol);
    solver.solve();

    const std::vector<double>& alpha = solver.alpha();
    RbfSvmModel model;
    model.gamma = gamma;
    model.c = cfg.c;
    model.b = solver.bias();
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (alpha[i] > 1e-12) {
            model.support_vectors.push_back(x[i]);
            model.alpha_y.push_back(alpha[i] * y[i]);
        }
    }
    model.trained = true;
    if (alpha_out) *alpha_out = alpha;  // aligned with the training set
    return model;
}

RbfSvmModel train_rbf_svm(const std::vector<std::vector<double>>& x,
                          const std::vector<int>& y, const RbfSvmConfig& cfg) {
    return train_rbf_svm(x, y, cfg, nullptr);
}

double max_kkt_violation(const RbfSvmModel& model,
                         const std::vector<std::vector<double>>& x,
                         const std::vector<int>& y,
                         const std::vector<double>& alpha) {
    if (alpha.size() != x.size()) {
        throw ShapeError("kkt check: alpha must be aligned with the training set");
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double a = alpha[i];
        const double margin = y[i] * model.decision(x[i]);
        if (a <= 1e-9) {
            worst = std::max(worst, 1.0 - margin);  // want margin >= 1
        } else if (a >= model.c - 1e-9) {
            worst = std::max(worst, margin - 1.0);  // want margin <= 1
        } else {
            worst = std::max(worst, std::abs(margin - 1.0));
        }
    }
    return worst;
}

}  // namespace mieval::clinical
