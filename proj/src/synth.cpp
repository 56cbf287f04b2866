#include "distlasso/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "distlasso/error.hpp"
#include "distlasso/glm.hpp"

namespace distlasso {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id)
    : key_(mix64(mix64(seed) ^ (stream_id * kGolden + 0x632be59bd9b4e019ULL))) {}

std::uint64_t RandomStream::next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

double RandomStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RandomStream::below(std::uint64_t bound) {
    if (bound == 0) throw InvalidInput("RandomStream::below needs a positive bound");
    // Reject the top partial block so every residue is equally likely.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t r;
    do {
        r = next_u64();
    } while (r >= limit);
    return r % bound;
}

double RandomStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
}

void SynthConfig::validate() const {
    if (n < 1 || p < 1) throw InvalidInput("synth needs n >= 1 and p >= 1");
    if (s > p) throw InvalidInput("sparsity s cannot exceed p");
    if (cov.p != p) throw InvalidInput("covariance dimension does not match p");
    if (cov.kind == CovarianceSpec::Kind::ar1 && !(std::fabs(cov.rho) < 1.0))
        throw InvalidCovariance("ar1 requires |rho| < 1");
    if (!(sigma_y >= 0.0)) throw InvalidInput("sigma_y must be >= 0");
    if (!(amplitude != 0.0) || !std::isfinite(amplitude))
        throw InvalidInput("amplitude must be finite and nonzero");
}

std::string to_string(SynthConfig::Response r) {
    return r == SynthConfig::Response::linear ? "linear" : "logistic";
}

SynthConfig::Response parse_response(const std::string& s) {
    if (s == "linear") return SynthConfig::Response::linear;
    if (s == "logistic") return SynthConfig::Response::logistic;
    throw InvalidInput("unknown response '" + s + "' (expected linear or logistic)");
}

Matrix gen_design(const SynthConfig& cfg) {
    cfg.validate();
    const Matrix l = cholesky(cfg.cov.matrix());
    const bool identity = cfg.cov.kind == CovarianceSpec::Kind::identity;
    RandomStream rng(cfg.seed, static_cast<std::uint64_t>(Substream::design));
    Matrix x(cfg.n, cfg.p);
    Vector z(cfg.p);
    for (std::size_t i = 0; i < cfg.n; ++i) {
        for (double& v : z) v = rng.normal();
        auto row = x.row(i);
        if (identity) {
            std::copy(z.begin(), z.end(), row.begin());
            continue;
        }
        // Plain loop rather than the dispatched dot: generated data must
        // not depend on which kernel backend the host picked.
        for (std::size_t j = 0; j < cfg.p; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k <= j; ++k) acc += l(j, k) * z[k];
            row[j] = acc;
        }
    }
    return x;
}

GroundTruth gen_sparse_beta(const SynthConfig& cfg) {
    cfg.validate();
    RandomStream pick(cfg.seed, static_cast<std::uint64_t>(Substream::support));
    RandomStream sign(cfg.seed, static_cast<std::uint64_t>(Substream::signs));
    std::vector<std::size_t> idx(cfg.p);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < cfg.s; ++i) {
        const std::size_t r = i + static_cast<std::size_t>(pick.below(cfg.p - i));
        std::swap(idx[i], idx[r]);
    }
    std::vector<std::size_t> support(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(cfg.s));
    std::sort(support.begin(), support.end());
    Vector beta(cfg.p, 0.0);
    for (std::size_t j : support) beta[j] = sign.uniform() < 0.5 ? -cfg.amplitude : cfg.amplitude;
    GroundTruth t;
    t.beta_star = std::move(beta);
    t.support = std::move(support);
    t.sigma_y = cfg.sigma_y;
    return t;
}

Vector gen_response(const Matrix& x, const GroundTruth& truth, const SynthConfig& cfg) {
    if (x.cols() != truth.beta_star.size()) throw InvalidInput("gen_response dimension mismatch");
    RandomStream rng(cfg.seed, static_cast<std::uint64_t>(Substream::noise));
    Vector y(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t j : truth.support) acc += x(i, j) * truth.beta_star[j];
        y[i] = acc;
    }
    if (cfg.response == SynthConfig::Response::linear) {
        if (cfg.sigma_y > 0.0)
            for (double& v : y) v += cfg.sigma_y * rng.normal();
    } else {
        for (double& v : y) v = rng.uniform() < sigmoid(v) ? 1.0 : 0.0;
    }
    return y;
}

SyntheticProblem generate(const SynthConfig& cfg) {
    SyntheticProblem prob;
    prob.data.x = gen_design(cfg);
    prob.truth = gen_sparse_beta(cfg);
    prob.data.y = gen_response(prob.data.x, prob.truth, cfg);
    prob.noise.resize(cfg.n);
    for (std::size_t i = 0; i < cfg.n; ++i) {
        double signal = 0.0;
        for (std::size_t j : prob.truth.support) signal += prob.data.x(i, j) * prob.truth.beta_star[j];
        prob.noise[i] = prob.data.y[i] - signal;
    }
    return prob;
}

}  // namespace distlasso
