#pragma once

#include <cstdint>
#include <string>

#include "distlasso/core.hpp"

namespace distlasso {

/// Counter-based generator: output k of stream s under seed is a pure
/// function of (seed, s, k). Normals come from the Marsaglia polar method.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound);
    double normal();

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Independent substreams. The design, support, sign and noise draws never
/// share a stream, so e.g. beta_star does not depend on n.
enum class Substream : std::uint64_t { design = 1, support = 2, signs = 3, noise = 4 };

struct SynthConfig {
    enum class Response { linear, logistic };

    std::size_t n = 100;
    std::size_t p = 50;
    std::size_t s = 5;
    CovarianceSpec cov = CovarianceSpec::identity(50);
    double sigma_y = 1.0;
    double amplitude = 1.0;
    std::uint64_t seed = 1;
    Response response = Response::linear;

    void validate() const;
};

std::string to_string(SynthConfig::Response r);
SynthConfig::Response parse_response(const std::string& s);

/// Rows i.i.d. N(0, Sigma) as L z_i with Sigma = L L^T.
Matrix gen_design(const SynthConfig& cfg);

/// Support uniform without replacement, entries amplitude * random sign.
GroundTruth gen_sparse_beta(const SynthConfig& cfg);

/// linear: X beta* + sigma_y z; logistic: Bernoulli(sigmoid(x_i^T beta*)).
Vector gen_response(const Matrix& x, const GroundTruth& truth, const SynthConfig& cfg);

struct SyntheticProblem {
    Dataset data;
    GroundTruth truth;
    Vector noise;  // y - X beta* (linear responses)
};

SyntheticProblem generate(const SynthConfig& cfg);

}  // namespace distlasso
