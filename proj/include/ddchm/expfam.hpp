#pragma once

// Exponential-family machinery: sufficient statistics, natural parameters
// through link functions, log normalizers, mean parameters, conditional
// sampling and log densities for every family used by the hierarchy.

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "ddchm/rng.hpp"

namespace ddchm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

constexpr double kLaplaceScaleFloor = 1e-8;

// Overflow-safe scalar helpers.
inline double softplus(double u) {
    return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u)));
}

inline double sigmoid(double u) {
    if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
    const double e = std::exp(u);
    return e / (1.0 + e);
}

inline double logsumexp2(double a, double b) {
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// ---------------------------------------------------------------------------
// Families
// ---------------------------------------------------------------------------

enum class FamilyTag {
    BernoulliVec,
    GaussianDiag,
    LaplaceZeroLoc,
    FixedMixtureOfTwoGaussians, // sample/density/score only, no natural params
};

struct Family {
    FamilyTag tag = FamilyTag::BernoulliVec;
    int dim = 1;
};

inline std::string family_name(FamilyTag t) {
    switch (t) {
        case FamilyTag::BernoulliVec: return "BernoulliVec";
        case FamilyTag::GaussianDiag: return "GaussianDiag";
        case FamilyTag::LaplaceZeroLoc: return "LaplaceZeroLoc";
        case FamilyTag::FixedMixtureOfTwoGaussians: return "FixedMixtureOfTwoGaussians";
    }
    return "?";
}

// Number of natural parameters (= length of the sufficient statistics vector).
inline int nat_dim(const Family& f) {
    switch (f.tag) {
        case FamilyTag::BernoulliVec: return f.dim;
        case FamilyTag::GaussianDiag: return 2 * f.dim;
        case FamilyTag::LaplaceZeroLoc: return f.dim;
        case FamilyTag::FixedMixtureOfTwoGaussians:
            throw std::domain_error("FixedMixtureOfTwoGaussians has no natural parameters");
    }
    return 0;
}

inline void check_family_value_dim(const Family& f, const Vec& value, const char* who) {
    if (value.size() != f.dim)
        throw std::invalid_argument(std::string(who) + ": value dim " +
                                    std::to_string(value.size()) + " != family dim " +
                                    std::to_string(f.dim));
}

inline void check_nat_domain(const Family& f, const Vec& eta, const char* who) {
    if (eta.size() != nat_dim(f))
        throw std::invalid_argument(std::string(who) + ": natural-parameter length " +
                                    std::to_string(eta.size()) + " != expected " +
                                    std::to_string(nat_dim(f)));
    switch (f.tag) {
        case FamilyTag::LaplaceZeroLoc:
            if ((eta.array() >= 0.0).any())
                throw std::domain_error(std::string(who) + ": Laplace natural parameter must be < 0");
            break;
        case FamilyTag::GaussianDiag:
            if ((eta.tail(f.dim).array() >= 0.0).any())
                throw std::domain_error(std::string(who) + ": Gaussian second-block natural parameter must be < 0");
            break;
        default:
            break;
    }
}

// S(z). BernoulliVec: z; GaussianDiag: (x, x∘x); LaplaceZeroLoc: |z|.
inline Vec suff_stats(const Family& f, const Vec& value) {
    check_family_value_dim(f, value, "suff_stats");
    switch (f.tag) {
        case FamilyTag::BernoulliVec:
            return value;
        case FamilyTag::GaussianDiag: {
            Vec s(2 * f.dim);
            s.head(f.dim) = value;
            s.tail(f.dim) = value.array().square();
            return s;
        }
        case FamilyTag::LaplaceZeroLoc:
            return value.array().abs();
        case FamilyTag::FixedMixtureOfTwoGaussians:
            throw std::domain_error("suff_stats: mixture family has no sufficient statistics");
    }
    return {};
}

// Log normalizer Phi(eta), so that exp(eta.S(z) - Phi + log h(z)) normalizes.
inline double log_normalizer(const Family& f, const Vec& eta) {
    check_nat_domain(f, eta, "log_normalizer");
    switch (f.tag) {
        case FamilyTag::BernoulliVec: {
            double phi = 0.0;
            for (int i = 0; i < f.dim; ++i) phi += softplus(eta[i]);
            return phi;
        }
        case FamilyTag::GaussianDiag: {
            double phi = 0.0;
            for (int i = 0; i < f.dim; ++i) {
                const double a = eta[i], b = eta[f.dim + i];
                phi += -a * a / (4.0 * b) - 0.5 * std::log(-2.0 * b);
            }
            return phi;
        }
        case FamilyTag::LaplaceZeroLoc: {
            double phi = 0.0;
            for (int i = 0; i < f.dim; ++i) phi += std::log(2.0) - std::log(-eta[i]);
            return phi;
        }
        case FamilyTag::FixedMixtureOfTwoGaussians:
            throw std::domain_error("log_normalizer: mixture family unsupported");
    }
    return 0.0;
}

// Mean parameters mu = dPhi/deta = <S(z)>.
inline Vec mean_params(const Family& f, const Vec& eta) {
    check_nat_domain(f, eta, "mean_params");
    switch (f.tag) {
        case FamilyTag::BernoulliVec: {
            Vec mu(f.dim);
            for (int i = 0; i < f.dim; ++i) mu[i] = sigmoid(eta[i]);
            return mu;
        }
        case FamilyTag::GaussianDiag: {
            Vec mu(2 * f.dim);
            for (int i = 0; i < f.dim; ++i) {
                const double a = eta[i], b = eta[f.dim + i];
                const double m = -a / (2.0 * b);
                const double v = -1.0 / (2.0 * b);
                mu[i] = m;
                mu[f.dim + i] = m * m + v;
            }
            return mu;
        }
        case FamilyTag::LaplaceZeroLoc:
            return (-eta.array()).inverse(); // lambda = -1/eta
        case FamilyTag::FixedMixtureOfTwoGaussians:
            throw std::domain_error("mean_params: mixture family unsupported");
    }
    return {};
}

// log h(z): base measure, fixed per family.
inline double log_base_measure(const Family& f, const Vec& value) {
    check_family_value_dim(f, value, "log_base_measure");
    if (f.tag == FamilyTag::GaussianDiag)
        return -0.5 * f.dim * std::log(2.0 * M_PI);
    return 0.0;
}

inline double log_pdf(const Family& f, const Vec& eta, const Vec& value) {
    check_nat_domain(f, eta, "log_pdf");
    return eta.dot(suff_stats(f, value)) - log_normalizer(f, eta) + log_base_measure(f, value);
}

inline Vec sample_conditional(const Family& f, const Vec& eta, Rng& rng) {
    check_nat_domain(f, eta, "sample_conditional");
    Vec z(f.dim);
    switch (f.tag) {
        case FamilyTag::BernoulliVec: {
            std::uniform_real_distribution<double> u(0.0, 1.0);
            for (int i = 0; i < f.dim; ++i) z[i] = (u(rng) < sigmoid(eta[i])) ? 1.0 : 0.0;
            return z;
        }
        case FamilyTag::GaussianDiag: {
            std::normal_distribution<double> n(0.0, 1.0);
            for (int i = 0; i < f.dim; ++i) {
                const double v = -1.0 / (2.0 * eta[f.dim + i]);
                const double m = eta[i] * v;
                z[i] = m + std::sqrt(v) * n(rng);
            }
            return z;
        }
        case FamilyTag::LaplaceZeroLoc: {
            std::exponential_distribution<double> e(1.0);
            std::uniform_real_distribution<double> u(0.0, 1.0);
            for (int i = 0; i < f.dim; ++i) {
                const double lambda = -1.0 / eta[i];
                z[i] = (u(rng) < 0.5 ? -1.0 : 1.0) * lambda * e(rng);
            }
            return z;
        }
        case FamilyTag::FixedMixtureOfTwoGaussians:
            throw std::domain_error("sample_conditional: use MixtureOfTwoGaussians::sample");
    }
    return z;
}

// d(eta . S(z))/dz for continuous families; used by gradient-based samplers.
inline Vec suff_stats_score(const Family& f, const Vec& eta, const Vec& z) {
    check_nat_domain(f, eta, "suff_stats_score");
    check_family_value_dim(f, z, "suff_stats_score");
    switch (f.tag) {
        case FamilyTag::GaussianDiag:
            return eta.head(f.dim).array() + 2.0 * eta.tail(f.dim).array() * z.array();
        case FamilyTag::LaplaceZeroLoc: {
            Vec g(f.dim);
            for (int i = 0; i < f.dim; ++i) {
                const double s = (z[i] > 0.0) ? 1.0 : (z[i] < 0.0 ? -1.0 : 0.0);
                g[i] = eta[i] * s;
            }
            return g;
        }
        default:
            throw std::domain_error("suff_stats_score: family is not continuous");
    }
}

// ---------------------------------------------------------------------------
// Fixed two-component Gaussian mixture prior: 1/2 N(m, s^2 I) + 1/2 N(-m, s^2 I).
// Not an exponential family; exposes sample / log_pdf / score only.
// ---------------------------------------------------------------------------

struct MixtureOfTwoGaussians {
    Vec m;
    double sigma = 1.0;

    int dim() const { return static_cast<int>(m.size()); }

    double log_pdf(const Vec& z) const {
        const double d = static_cast<double>(dim());
        const double c = -0.5 * d * std::log(2.0 * M_PI * sigma * sigma);
        const double qa = (z - m).squaredNorm() / (2.0 * sigma * sigma);
        const double qb = (z + m).squaredNorm() / (2.0 * sigma * sigma);
        return std::log(0.5) + c + logsumexp2(-qa, -qb);
    }

    Vec score(const Vec& z) const {
        const double qa = -(z - m).squaredNorm() / (2.0 * sigma * sigma);
        const double qb = -(z + m).squaredNorm() / (2.0 * sigma * sigma);
        const double lse = logsumexp2(qa, qb);
        const double wa = std::exp(qa - lse);
        const double wb = std::exp(qb - lse);
        return (wa * (m - z) + wb * (-m - z)) / (sigma * sigma);
    }

    Vec sample(Rng& rng) const {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::normal_distribution<double> n(0.0, 1.0);
        Vec z(dim());
        const double sign = (u(rng) < 0.5) ? 1.0 : -1.0;
        for (int i = 0; i < dim(); ++i) z[i] = sign * m[i] + sigma * n(rng);
        return z;
    }
};

// ---------------------------------------------------------------------------
// Link functions g(parent, theta) -> natural parameters of the child family.
//
// Parameter block layout (flattened row-major W, then extra):
//   Linear:              W is (nat_dim x parent_dim [+1 bias column]); extra empty
//   SoftplusLaplaceScale: W = B (child_dim x parent_dim); extra empty
//   GaussianLinearMean:  W = Lambda (child_dim x parent_dim);
//                        extra = log diagonal variance (child_dim)
// ---------------------------------------------------------------------------

enum class LinkTag { Linear, SoftplusLaplaceScale, GaussianLinearMean };

struct LinkFn {
    LinkTag tag = LinkTag::Linear;
    int out_nat_dim = 1; // rows of eta
    int in_dim = 1;      // parent value dim
    bool bias = false;   // Linear only: append constant 1 to the parent
};

struct ParamBlock {
    Mat W;
    Vec extra;
};

inline std::string link_name(LinkTag t) {
    switch (t) {
        case LinkTag::Linear: return "Linear";
        case LinkTag::SoftplusLaplaceScale: return "SoftplusLaplaceScale";
        case LinkTag::GaussianLinearMean: return "GaussianLinearMean";
    }
    return "?";
}

inline int param_size(const ParamBlock& p) {
    return static_cast<int>(p.W.size() + p.extra.size());
}

inline Vec flatten_param(const ParamBlock& p) {
    Vec v(param_size(p));
    int k = 0;
    for (Eigen::Index i = 0; i < p.W.rows(); ++i)
        for (Eigen::Index j = 0; j < p.W.cols(); ++j) v[k++] = p.W(i, j);
    v.tail(p.extra.size()) = p.extra;
    return v;
}

inline void unflatten_param(ParamBlock& p, const Vec& v) {
    if (v.size() != param_size(p))
        throw std::invalid_argument("unflatten_param: size mismatch");
    int k = 0;
    for (Eigen::Index i = 0; i < p.W.rows(); ++i)
        for (Eigen::Index j = 0; j < p.W.cols(); ++j) p.W(i, j) = v[k++];
    p.extra = v.tail(p.extra.size());
}

inline void check_link_shapes(const LinkFn& link, const ParamBlock& theta, const Vec& parent,
                              const char* who) {
    if (parent.size() != link.in_dim)
        throw std::invalid_argument(std::string(who) + ": parent dim " +
                                    std::to_string(parent.size()) + " != link in_dim " +
                                    std::to_string(link.in_dim));
    const Eigen::Index expect_cols = link.in_dim + (link.bias ? 1 : 0);
    switch (link.tag) {
        case LinkTag::Linear:
            if (theta.W.rows() != link.out_nat_dim || theta.W.cols() != expect_cols)
                throw std::invalid_argument(std::string(who) + ": Linear weight shape mismatch");
            break;
        case LinkTag::SoftplusLaplaceScale:
            if (theta.W.rows() != link.out_nat_dim || theta.W.cols() != link.in_dim)
                throw std::invalid_argument(std::string(who) + ": SoftplusLaplaceScale weight shape mismatch");
            break;
        case LinkTag::GaussianLinearMean: {
            const int d = link.out_nat_dim / 2;
            if (link.out_nat_dim % 2 != 0 || theta.W.rows() != d ||
                theta.W.cols() != link.in_dim || theta.extra.size() != d)
                throw std::invalid_argument(std::string(who) + ": GaussianLinearMean shape mismatch");
            break;
        }
    }
}

inline Vec with_bias(const Vec& z) {
    Vec zb(z.size() + 1);
    zb.head(z.size()) = z;
    zb[z.size()] = 1.0;
    return zb;
}

// eta = g(parent, theta)
inline Vec natural_param(const LinkFn& link, const ParamBlock& theta, const Vec& parent) {
    check_link_shapes(link, theta, parent, "natural_param");
    switch (link.tag) {
        case LinkTag::Linear:
            return link.bias ? Vec(theta.W * with_bias(parent)) : Vec(theta.W * parent);
        case LinkTag::SoftplusLaplaceScale: {
            Vec u = theta.W * parent;
            Vec eta(u.size());
            for (Eigen::Index i = 0; i < u.size(); ++i) {
                const double lambda = std::max(softplus(u[i]), kLaplaceScaleFloor);
                eta[i] = -1.0 / lambda;
            }
            return eta;
        }
        case LinkTag::GaussianLinearMean: {
            const int d = link.out_nat_dim / 2;
            const Vec inv_var = (-theta.extra.array()).exp();
            Vec eta(2 * d);
            eta.head(d) = (theta.W * parent).cwiseProduct(inv_var);
            eta.tail(d) = -0.5 * inv_var;
            return eta;
        }
    }
    return {};
}

// d(eta)/d(parent): (out_nat_dim x in_dim). Needed for latent-space gradients.
inline Mat dnat_dparent(const LinkFn& link, const ParamBlock& theta, const Vec& parent) {
    check_link_shapes(link, theta, parent, "dnat_dparent");
    switch (link.tag) {
        case LinkTag::Linear:
            return theta.W.leftCols(link.in_dim);
        case LinkTag::SoftplusLaplaceScale: {
            Vec u = theta.W * parent;
            Mat J(link.out_nat_dim, link.in_dim);
            for (int i = 0; i < link.out_nat_dim; ++i) {
                const double sp = softplus(u[i]);
                const double lambda = std::max(sp, kLaplaceScaleFloor);
                const double c = (sp > kLaplaceScaleFloor) ? sigmoid(u[i]) / (lambda * lambda) : 0.0;
                J.row(i) = c * theta.W.row(i);
            }
            return J;
        }
        case LinkTag::GaussianLinearMean: {
            const int d = link.out_nat_dim / 2;
            Mat J = Mat::Zero(2 * d, link.in_dim);
            const Vec inv_var = (-theta.extra.array()).exp();
            J.topRows(d) = inv_var.asDiagonal() * theta.W;
            return J;
        }
    }
    return {};
}

// ---------------------------------------------------------------------------
// Jacobian of eta with respect to the parameter block.
//
// The full Jacobian (nat_dim x param_size) is sparse and structured; all of
// its parent-dependent content fits in a small representation vector, from
// which the dense matrix (jac_from_rep) or the contraction s^T J
// (contract_suff_jac) is reconstructed with coefficients that depend only on
// theta. Both reconstructions are affine in the representation, so they
// commute with taking expectations over the parent.
//
// Representations:
//   Linear:               rep = parent (+1 if bias), length cols(W)
//   SoftplusLaplaceScale:  rep = row-major (c_i * z_b), c_i = sigmoid(u_i)/lambda_i^2
//   GaussianLinearMean:    rep = parent, length in_dim
// ---------------------------------------------------------------------------

inline int jac_rep_dim(const LinkFn& link) {
    switch (link.tag) {
        case LinkTag::Linear: return link.in_dim + (link.bias ? 1 : 0);
        case LinkTag::SoftplusLaplaceScale: return link.out_nat_dim * link.in_dim;
        case LinkTag::GaussianLinearMean: return link.in_dim;
    }
    return 0;
}

inline Vec jac_rep(const LinkFn& link, const ParamBlock& theta, const Vec& parent) {
    check_link_shapes(link, theta, parent, "jac_rep");
    switch (link.tag) {
        case LinkTag::Linear:
            return link.bias ? with_bias(parent) : parent;
        case LinkTag::SoftplusLaplaceScale: {
            Vec u = theta.W * parent;
            Vec rep(link.out_nat_dim * link.in_dim);
            for (int i = 0; i < link.out_nat_dim; ++i) {
                const double sp = softplus(u[i]);
                const double lambda = std::max(sp, kLaplaceScaleFloor);
                const double c = (sp > kLaplaceScaleFloor) ? sigmoid(u[i]) / (lambda * lambda) : 0.0;
                for (int b = 0; b < link.in_dim; ++b) rep[i * link.in_dim + b] = c * parent[b];
            }
            return rep;
        }
        case LinkTag::GaussianLinearMean:
            return parent;
    }
    return {};
}

// s^T dEta/dTheta, flattened over the parameter block; affine in rep.
inline Vec contract_suff_jac(const LinkFn& link, const ParamBlock& theta, const Vec& s,
                             const Vec& rep) {
    if (s.size() != link.out_nat_dim)
        throw std::invalid_argument("contract_suff_jac: statistic length mismatch");
    if (rep.size() != jac_rep_dim(link))
        throw std::invalid_argument("contract_suff_jac: rep length mismatch");
    switch (link.tag) {
        case LinkTag::Linear: {
            // d eta_i / d W_{ab} = delta_{ia} ztilde_b  ->  (s^T J)_{ab} = s_a ztilde_b
            Mat G = s * rep.transpose();
            Vec out(G.size());
            int k = 0;
            for (Eigen::Index i = 0; i < G.rows(); ++i)
                for (Eigen::Index j = 0; j < G.cols(); ++j) out[k++] = G(i, j);
            return out;
        }
        case LinkTag::SoftplusLaplaceScale: {
            // d eta_i / d B_{ab} = delta_{ia} rep_{(a,b)}
            Vec out(link.out_nat_dim * link.in_dim);
            for (int a = 0; a < link.out_nat_dim; ++a)
                for (int b = 0; b < link.in_dim; ++b)
                    out[a * link.in_dim + b] = s[a] * rep[a * link.in_dim + b];
            return out;
        }
        case LinkTag::GaussianLinearMean: {
            const int d = link.out_nat_dim / 2;
            const int p = link.in_dim;
            const Vec inv_var = (-theta.extra.array()).exp();
            const Vec lam_rep = theta.W * rep; // (Lambda z) reconstructed from rep
            Vec out(d * p + d);
            // d eta1_a / d Lambda_{ab} = inv_var_a * z_b
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < p; ++b)
                    out[a * p + b] = s[a] * inv_var[a] * rep[b];
            // d eta1_a / d rho_a = -inv_var_a (Lambda z)_a ; d eta2_a / d rho_a = inv_var_a / 2
            for (int a = 0; a < d; ++a)
                out[d * p + a] = -s[a] * inv_var[a] * lam_rep[a] + s[d + a] * 0.5 * inv_var[a];
            return out;
        }
    }
    return {};
}

// Dense Jacobian d eta / d theta (nat_dim x param_size); affine in rep.
inline Mat jac_from_rep(const LinkFn& link, const ParamBlock& theta, const Vec& rep) {
    const int n = link.out_nat_dim;
    Mat J(n, param_size(theta));
    for (int i = 0; i < n; ++i) {
        Vec e = Vec::Zero(n);
        e[i] = 1.0;
        J.row(i) = contract_suff_jac(link, theta, e, rep);
    }
    return J;
}

// Exact analytic Jacobian of natural_param with respect to every theta entry.
inline Mat grad_g(const LinkFn& link, const ParamBlock& theta, const Vec& parent) {
    return jac_from_rep(link, theta, jac_rep(link, theta, parent));
}

} // namespace ddchm
