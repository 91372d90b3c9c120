#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mieval/errors.hpp"

namespace mieval::clinical {

/// Hinge-loss linear SVM trained by deterministic full-batch subgradient
/// descent with iterate averaging; the model keeps the best averaged
/// checkpoint, so `objective_history` is non-increasing by construction.
struct LinearSvmModel {
    std::vector<double> w;
    double b = 0.0;
    double c = 1.0;
    bool trained = false;
    std::vector<double> objective_history;

    double decision(const std::vector<double>& x) const;
};

struct LinearSvmConfig {
    double c = 1.0;
    int epochs = 4000;
    std::uint64_t seed = 0;  // reserved; the solver itself is deterministic
};

LinearSvmModel train_linear_svm(const std::vector<std::vector<double>>& x,
                                const std::vector<int>& y, const LinearSvmConfig& cfg);

/// Primal objective lambda/2 ||w||^2 + mean hinge with lambda = 1/(C n).
double linear_svm_objective(const std::vector<std::vector<double>>& x,
                            const std::vector<int>& y, const std::vector<double>& w,
                            double b, double c);

/// Indices with |w_i| >= tau * max|w|; never empty (falls back to the single
/// strongest feature).
std::vector<int> select_features(const LinearSvmModel& model, double tau = 0.1);

/// Soft-margin RBF-kernel SVM solved by sequential minimal optimization.
struct RbfSvmModel {
    std::vector<std::vector<double>> support_vectors;
    std::vector<double> alpha_y;  // alpha_i * y_i per support vector
    double b = 0.0;
    double gamma = 1.0;
    double c = 1.0;
    bool trained = false;

    double decision(const std::vector<double>& x) const;
};

struct RbfSvmConfig {
    double c = 1.0;
    std::optional<double> gamma;  // default 1 / (d * Var(features))
    double tol = 1e-3;
    std::uint64_t seed = 0;  // reserved
};

double rbf_kernel(const std::vector<double>& a, const std::vector<double>& b,
                  double gamma);

/// The gamma heuristic used when RbfSvmConfig::gamma is unset.
double default_gamma(const std::vector<std::vector<double>>& x);

RbfSvmModel train_rbf_svm(const std::vector<std::vector<double>>& x,
                          const std::vector<int>& y, const RbfSvmConfig& cfg);

/// Largest KKT violation of the trained model on its training set; used by
/// the verification suites.
double max_kkt_violation(const RbfSvmModel& model,
                         const std::vector<std::vector<double>>& x,
                         const std::vector<int>& y,
                         const std::vector<double>& alpha);

/// Variant exposing the full dual solution: alpha_out (when non-null) gets
/// one alpha per training point, aligned with x.
RbfSvmModel train_rbf_svm(const std::vector<std::vector<double>>& x,
                          const std::vector<int>& y, const RbfSvmConfig& cfg,
                          std::vector<double>* alpha_out);

}  // namespace mieval::clinical
