#ifndef WVFIELD_TYPES_HPP
#define WVFIELD_TYPES_HPP

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace wvf {

using Complex = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;
using RealVec = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};

// Physical constants threaded explicitly through every module so the hbar
// factors are exercised instead of silently fixed to 1.
struct Constants {
    double hbar = 1.0;
    double mass = 1.0;
    double c_light = 1.0;

    Constants() = default;
    Constants(double hbar_, double mass_, double c_ = 1.0)
        : hbar(hbar_), mass(mass_), c_light(c_) {
        validate();
    }
    void validate() const {
        if (!(hbar > 0.0) || !(mass > 0.0) || !(c_light > 0.0))
            throw std::invalid_argument("Constants: hbar, mass, c must be > 0");
    }
};

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionError : Error {
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// Pre/post overlap below the orthogonality threshold: the conditioned value
// does not exist, as opposed to being anomalously large.
struct OrthogonalityError : Error {
    explicit OrthogonalityError(const std::string& msg) : Error(msg) {}
};

// Amplitude vanished (or jumped branch) somewhere on a log-unwrapping path.
struct BranchError : Error {
    explicit BranchError(const std::string& msg) : Error(msg) {}
};

// The boundary-value system is singular: omega*T sits at a discrete resonance.
struct ResonanceError : Error {
    explicit ResonanceError(const std::string& msg) : Error(msg) {}
};

struct TruncationError : Error {
    explicit TruncationError(const std::string& msg) : Error(msg) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

}  // namespace wvf

#endif
