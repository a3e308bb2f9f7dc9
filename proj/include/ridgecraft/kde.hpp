#pragma once

#include "ridgecraft/csv.hpp"
#include "ridgecraft/types.hpp"

#include <json.hpp>

#include <cmath>
#include <numbers>

namespace ridgecraft {

/// Kernel-density asdf: value(x) = -log[(1/N) sum_i exp(-pi ||x^ - y^_i||^2)]
/// + log_nf in coordinates scaled by 1/(sigma sqrt(2 pi)). Derivatives are
/// taken with respect to the scaled coordinates; the ridge set is invariant
/// to the uniform rescaling. Immutable after construction.
class KdeAsdf {
  public:
    KdeAsdf(PointCloud samples, double sigma, int intrinsic_dim,
            double log_nf = 0.0)
        : sigma_(sigma), intrinsic_dim_(intrinsic_dim), log_nf_(log_nf) {
        if (!(sigma > 0)) throw std::invalid_argument("KdeAsdf: sigma > 0");
        if (samples.empty()) throw std::invalid_argument("KdeAsdf: empty sample");
        if (intrinsic_dim < 1 || intrinsic_dim >= samples.ambient_dim)
            throw std::invalid_argument("KdeAsdf: need 1 <= d < ambient_dim");
        ambient_dim_ = samples.ambient_dim;
        samples_ = std::move(samples);
        const double s = coordinate_scale();
        scaled_samples_.resize(ambient_dim_, static_cast<Eigen::Index>(samples_.size()));
        for (std::size_t i = 0; i < samples_.size(); ++i)
            scaled_samples_.col(static_cast<Eigen::Index>(i)) = samples_[i] / s;
    }

    double sigma() const { return sigma_; }
    int intrinsic_dim() const { return intrinsic_dim_; }
    int ambient_dim() const { return ambient_dim_; }
    double log_nf() const { return log_nf_; }
    const PointCloud& samples() const { return samples_; }

    /// sigma * sqrt(2 pi): x_scaled = x / coordinate_scale().
    double coordinate_scale() const {
        return sigma_ * std::sqrt(2.0 * std::numbers::pi);
    }

    /// Evaluation at a point given in scaled coordinates. Log-sum-exp
    /// stabilized; throws NumericUnderflow when even the nearest sample's
    /// exponent falls below the representable range (the query left the
    /// tubular neighborhood).
    AsdfEvaluation eval_scaled(const Vec& x_scaled) const {
        if (x_scaled.size() != ambient_dim_)
            throw std::invalid_argument("kde_eval: dimension mismatch");
        const double pi = std::numbers::pi;
        const Eigen::Index n_samples = scaled_samples_.cols();

        // exponents e_i = -pi ||x - y_i||^2; stabilize around the max.
        Eigen::VectorXd exponents(n_samples);
        for (Eigen::Index i = 0; i < n_samples; ++i)
            exponents[i] = -pi * (x_scaled - scaled_samples_.col(i)).squaredNorm();
        const double max_exp = exponents.maxCoeff();
        if (max_exp < -700.0)
            throw NumericUnderflowError("kde_eval: query too far from every sample");

        double weight_sum = 0.0;
        Vec mean_diff = Vec::Zero(ambient_dim_);       // sum w_i * u_i
        Mat second_moment = Mat::Zero(ambient_dim_, ambient_dim_);
        for (Eigen::Index i = 0; i < n_samples; ++i) {
            const double w = std::exp(exponents[i] - max_exp);
            if (w < 1e-300) continue;
            Vec u = x_scaled - scaled_samples_.col(i);
            weight_sum += w;
            mean_diff += w * u;
            second_moment.noalias() += w * (u * u.transpose());
        }
        mean_diff /= weight_sum;
        second_moment /= weight_sum;

        AsdfEvaluation out;
        out.value = -max_exp - std::log(weight_sum / static_cast<double>(n_samples)) +
                    log_nf_;
        out.gradient = 2.0 * pi * mean_diff;
        Mat hess = 2.0 * pi * Mat::Identity(ambient_dim_, ambient_dim_) -
                   4.0 * pi * pi * second_moment +
                   out.gradient * out.gradient.transpose();
        out.hessian = 0.5 * (hess + hess.transpose());
        return out;
    }

    /// Evaluation at a point given in the original (unscaled) coordinates.
    AsdfEvaluation eval(const Vec& x) const {
        return eval_scaled(x / coordinate_scale());
    }

  private:
    PointCloud samples_;
    Mat scaled_samples_;  // one column per sample, already divided by scale
    double sigma_;
    int intrinsic_dim_;
    int ambient_dim_ = 0;
    double log_nf_;
};

inline AsdfEvaluation kde_eval(const KdeAsdf& asdf, const Vec& x) {
    return asdf.eval(x);
}

/// Cylinder half-width schedule tau_bar = sigma^(5/6).
inline double kde_schedule(double sigma) {
    if (!(sigma > 0 && sigma <= 1))
        throw std::invalid_argument("kde_schedule: 0 < sigma <= 1");
    return std::pow(sigma, 5.0 / 6.0);
}

/// KdeAsdf serialization points at a samples CSV rather than inlining the
/// cloud.
inline nlohmann::json kde_to_json(const KdeAsdf& asdf, const std::string& samples_file) {
    return nlohmann::json{{"sigma", asdf.sigma()},
                          {"intrinsic_dim", asdf.intrinsic_dim()},
                          {"log_nf", asdf.log_nf()},
                          {"samples_file", samples_file}};
}

inline KdeAsdf kde_from_json(const nlohmann::json& j) {
    PointCloud samples = read_cloud_csv(j.at("samples_file").get<std::string>());
    return KdeAsdf(std::move(samples), j.at("sigma").get<double>(),
                   j.at("intrinsic_dim").get<int>(), j.at("log_nf").get<double>());
}

/// Concentration / regularity constants evaluated from the printed formulas.
/// Order-of-magnitude diagnostics, not certified bounds.
struct KdeDiagnostics {
    double k1 = 0.0;       // lower bound on E p_N over the tube
    double k2 = 0.0;       // upper bound on E p_N over the tube
    double c_f = 0.0;      // tangent-vs-manifold integral gap
    double epsilon1 = 0.0; // finite-sample deviation at confidence 1-delta
    double rho = 0.0;      // asdf offset sqrt(2(alpha+beta+C_f+eps'))
    double tau_bar = 0.0;  // sigma^(5/6), unscaled
};

inline constexpr double kDiagnosticSentinel = 1e12;

/// Evaluates K1, K2, C_f, epsilon_1 and rho in scaled coordinates
/// (tau_hat = tau/sigma, tau_bar_hat = sigma^(-1/6)). The unspecified
/// universal constant C defaults to 1.
inline KdeDiagnostics kde_diagnostics(const KdeAsdf& asdf, double manifold_volume,
                                      double reach, double delta,
                                      double universal_c = 1.0) {
    if (!(delta > 0 && delta < 1))
        throw std::invalid_argument("kde_diagnostics: 0 < delta < 1");
    if (!(manifold_volume > 0) || !(reach > 0))
        throw std::invalid_argument("kde_diagnostics: volume, reach > 0");

    const double pi = std::numbers::pi;
    const double sigma = asdf.sigma();
    const int d = asdf.intrinsic_dim();
    const int n = asdf.ambient_dim();
    const double n_samples = static_cast<double>(asdf.samples().size());
    const double C = universal_c;

    KdeDiagnostics diag;
    diag.tau_bar = kde_schedule(sigma);
    const double tau_hat = reach / sigma;
    const double tau_bar_hat = std::pow(sigma, -1.0 / 6.0);

    diag.c_f = d * C * C * tau_bar_hat * tau_bar_hat / (2.0 * tau_hat * tau_hat) +
               (std::pow(tau_bar_hat, 4) / (tau_hat * tau_hat) +
                2.0 * std::sqrt(2.0) * std::pow(tau_bar_hat, 3) / tau_hat) *
                   pi;

    const double nf = std::pow(sigma, d) / manifold_volume;
    const double sqrt_d_2pi = std::sqrt(d / (2.0 * pi));
    const double t = tau_bar_hat - sqrt_d_2pi;
    const double concentration =
        t > 0 ? 1.0 - 2.0 * std::exp(-t * t * pi) : 0.0;
    diag.k1 = std::max(0.0, nf * std::exp(-0.5) * concentration * std::exp(-diag.c_f));
    diag.k2 = std::exp(diag.c_f) * nf +
              std::exp(-tau_bar_hat * tau_bar_hat * pi / 2.0);

    const double alpha =
        4.0 * manifold_volume * std::pow(sigma, -d) *
        std::exp(-std::pow(sigma, -1.0 / 3.0) * pi / 4.0);
    const double beta = 4.0 * std::exp(-std::pow(sigma, -1.0 / 3.0) * pi / 2.0);

    const double v_hat = manifold_volume / std::pow(sigma, d);
    const double c_prime = C * v_hat * std::pow(100.0, d) *
                           std::pow(2.0 * std::sqrt(2.0 * pi / std::numbers::e), n);
    diag.epsilon1 =
        24.0 / std::sqrt(n_samples) *
            (std::sqrt(pi * n) / 2.0 + std::sqrt(std::log(c_prime))) +
        std::sqrt(2.0 * std::log(2.0 / delta) / n_samples);

    const double eps_prime = diag.epsilon1 < diag.k1
                                 ? diag.epsilon1 / (diag.k1 - diag.epsilon1)
                                 : kDiagnosticSentinel;
    diag.rho = std::sqrt(2.0 * (alpha + beta + diag.c_f + eps_prime));
    return diag;
}

}  // namespace ridgecraft
