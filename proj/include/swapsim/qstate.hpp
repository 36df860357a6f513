#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <optional>
#include <utility>
#include <vector>

// Polarization-state algebra for up to four photons.
//
// Conventions (fixed project-wide):
//   basis order per photon pair: (HH, HV, VH, VV), H = 0, V = 1,
//   first listed photon label is the most significant bit;
//   global phase: first nonzero amplitude is real and non-negative;
//   circular basis: |R> = (|H> - i|V>)/sqrt2, |L> = (|H> + i|V>)/sqrt2.
namespace swapsim::qstate {

using Complex = std::complex<double>;

enum class BellKind { PsiMinus, PsiPlus, PhiPlus, PhiMinus };

// Two-outcome polarization analyzer. Outcome 0 is the first basis vector
// (H, +, R, or the theta-aligned linear state).
struct MeasBasis {
    enum class Kind { HV, PM, RL, Linear };

    Kind kind = Kind::HV;
    double angle_rad = 0.0;  // only meaningful for Linear

    static MeasBasis hv() { return {Kind::HV, 0.0}; }
    static MeasBasis pm() { return {Kind::PM, 0.0}; }
    static MeasBasis rl() { return {Kind::RL, 0.0}; }
    static MeasBasis linear(double angle_rad) { return {Kind::Linear, angle_rad}; }

    Eigen::Vector2cd ket(int outcome) const;

    friend bool operator==(const MeasBasis& a, const MeasBasis& b) {
        return a.kind == b.kind && a.angle_rad == b.angle_rad;
    }
};

// Pure state of n labeled photons, n in [1,4]; 2^n amplitudes, unit norm.
class PureState {
public:
    PureState(std::vector<int> labels, Eigen::VectorXcd amps);

    int photon_count() const { return static_cast<int>(labels_.size()); }
    const std::vector<int>& labels() const { return labels_; }
    const Eigen::VectorXcd& amplitudes() const { return amps_; }
    Complex amplitude(int index) const { return amps_(index); }

    // applies the global-phase convention
    PureState canonicalized() const;

private:
    std::vector<int> labels_;
    Eigen::VectorXcd amps_;
};

PureState bell_state(BellKind kind, std::pair<int, int> labels);

// amplitudes a x b, labels concatenated in argument order
PureState tensor(const PureState& a, const PureState& b);

// permutes amplitudes so labels ascend
PureState sort_labels(const PureState& s);

// |<a|b>|^2 over matching label sets
double fidelity(const PureState& a, const PureState& b);

// <outer(0,3) x inner(1,2) | state> for a state on labels {0,1,2,3}
Complex bell_overlap(const PureState& state, BellKind outer, BellKind inner);

struct BsmProjection {
    double probability = 0.0;
    std::optional<PureState> conditional;  // photons (0,3); empty when probability ~ 0
};

// Projects photons 1,2 of a 4-photon state onto a Bell outcome.
BsmProjection bsm_project(const PureState& state, BellKind outcome);

// Two-photon mixed state; validated Hermitian, unit trace, positive semidefinite.
class DensityOp {
public:
    DensityOp(std::vector<int> labels, Eigen::Matrix4cd matrix);

    static DensityOp from_pure(const PureState& s);

    const std::vector<int>& labels() const { return labels_; }
    const Eigen::Matrix4cd& matrix() const { return mat_; }

private:
    std::vector<int> labels_;
    Eigen::Matrix4cd mat_;
};

// m * |kind><kind| + (1-m) * classical anticorrelated (Psi) or correlated (Phi) noise,
// on labels (0,3).
DensityOp swapped_mixture(double m, BellKind kind);

// Joint outcome probabilities ordered (00, 01, 10, 11); party A is the first label.
std::array<double, 4> born_probabilities(const DensityOp& rho, const MeasBasis& basis_a,
                                         const MeasBasis& basis_b);

}  // namespace swapsim::qstate
