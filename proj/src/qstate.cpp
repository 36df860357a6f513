#include "swapsim/qstate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace swapsim::qstate {

namespace {

constexpr double kNormTol = 1e-12;
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

void check_labels_unique(const std::vector<int>& labels) {
    std::unordered_set<int> seen;
    for (int l : labels)
        if (!seen.insert(l).second) throw std::invalid_argument("duplicate photon label");
}

}  // namespace

Eigen::Vector2cd MeasBasis::ket(int outcome) const {
    if (outcome != 0 && outcome != 1) throw std::invalid_argument("outcome must be 0 or 1");
    Eigen::Vector2cd v;
    switch (kind) {
        case Kind::HV:
            v = outcome == 0 ? Eigen::Vector2cd(1, 0) : Eigen::Vector2cd(0, 1);
            break;
        case Kind::PM:
            v = outcome == 0 ? Eigen::Vector2cd(kInvSqrt2, kInvSqrt2)
                             : Eigen::Vector2cd(kInvSqrt2, -kInvSqrt2);
            break;
        case Kind::RL:
            v = outcome == 0 ? Eigen::Vector2cd(Complex(kInvSqrt2, 0), Complex(0, -kInvSqrt2))
                             : Eigen::Vector2cd(Complex(kInvSqrt2, 0), Complex(0, kInvSqrt2));
            break;
        case Kind::Linear: {
            double c = std::cos(angle_rad), s = std::sin(angle_rad);
            v = outcome == 0 ? Eigen::Vector2cd(c, s) : Eigen::Vector2cd(-s, c);
            break;
        }
    }
    return v;
}

PureState::PureState(std::vector<int> labels, Eigen::VectorXcd amps)
    : labels_(std::move(labels)), amps_(std::move(amps)) {
    if (labels_.empty() || labels_.size() > 4)
        throw std::invalid_argument("photon count must be in [1,4]");
    check_labels_unique(labels_);
    if (amps_.size() != (1 << labels_.size()))
        throw std::invalid_argument("amplitude count must be 2^n");
    if (std::abs(amps_.norm() - 1.0) > kNormTol)
        throw std::invalid_argument("state norm must be 1");
}

PureState PureState::canonicalized() const {
    Eigen::VectorXcd a = amps_;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        double mag = std::abs(a(i));
        if (mag > 1e-14) {
            Complex phase = a(i) / mag;
            a /= phase;
            break;
        }
    }
    return PureState(labels_, a);
}

PureState bell_state(BellKind kind, std::pair<int, int> labels) {
    if (labels.first == labels.second) throw std::invalid_argument("duplicate photon label");
    Eigen::VectorXcd a = Eigen::VectorXcd::Zero(4);
    switch (kind) {
        case BellKind::PsiMinus: a(1) = kInvSqrt2; a(2) = -kInvSqrt2; break;
        case BellKind::PsiPlus:  a(1) = kInvSqrt2; a(2) = kInvSqrt2;  break;
        case BellKind::PhiPlus:  a(0) = kInvSqrt2; a(3) = kInvSqrt2;  break;
        case BellKind::PhiMinus: a(0) = kInvSqrt2; a(3) = -kInvSqrt2; break;
    }
    return PureState({labels.first, labels.second}, a);
}

PureState tensor(const PureState& a, const PureState& b) {
    std::vector<int> labels = a.labels();
    labels.insert(labels.end(), b.labels().begin(), b.labels().end());
    check_labels_unique(labels);
    if (labels.size() > 4) throw std::invalid_argument("photon count must be in [1,4]");
    const Eigen::Index nb = b.amplitudes().size();
    Eigen::VectorXcd amps(a.amplitudes().size() * nb);
    for (Eigen::Index i = 0; i < a.amplitudes().size(); ++i)
        for (Eigen::Index j = 0; j < nb; ++j) amps(i * nb + j) = a.amplitude(i) * b.amplitude(j);
    return PureState(std::move(labels), std::move(amps));
}

PureState sort_labels(const PureState& s) {
    const int n = s.photon_count();
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int x, int y) { return s.labels()[x] < s.labels()[y]; });

    std::vector<int> labels(n);
    for (int j = 0; j < n; ++j) labels[j] = s.labels()[order[j]];

    Eigen::VectorXcd amps(s.amplitudes().size());
    for (int i = 0; i < (1 << n); ++i) {
        int k = 0;
        for (int j = 0; j < n; ++j) {
            int bit = (i >> (n - 1 - order[j])) & 1;
            k |= bit << (n - 1 - j);
        }
        amps(k) = s.amplitude(i);
    }
    return PureState(std::move(labels), std::move(amps));
}

double fidelity(const PureState& a, const PureState& b) {
    PureState sa = sort_labels(a), sb = sort_labels(b);
    if (sa.labels() != sb.labels()) throw std::invalid_argument("label sets differ");
    Complex ip = sa.amplitudes().dot(sb.amplitudes());
    return std::norm(ip);
}

Complex bell_overlap(const PureState& state, BellKind outer, BellKind inner) {
    if (state.photon_count() != 4) throw std::invalid_argument("state must have 4 photons");
    PureState s = sort_labels(state);
    if (s.labels() != std::vector<int>{0, 1, 2, 3})
        throw std::invalid_argument("state labels must be {0,1,2,3}");
    PureState ref = sort_labels(tensor(bell_state(outer, {0, 3}), bell_state(inner, {1, 2})));
    return ref.amplitudes().dot(s.amplitudes());
}

BsmProjection bsm_project(const PureState& state, BellKind outcome) {
    if (state.photon_count() != 4) throw std::invalid_argument("state must have 4 photons");
    PureState s = sort_labels(state);
    if (s.labels() != std::vector<int>{0, 1, 2, 3})
        throw std::invalid_argument("state labels must be {0,1,2,3}");

    const PureState k = bell_state(outcome, {1, 2});
    // c(b0,b3) = sum_{b1,b2} conj(k(b1,b2)) * psi(b0,b1,b2,b3)
    Eigen::VectorXcd cond = Eigen::VectorXcd::Zero(4);
    for (int b0 = 0; b0 < 2; ++b0)
        for (int b3 = 0; b3 < 2; ++b3) {
            Complex c = 0;
            for (int b1 = 0; b1 < 2; ++b1)
                for (int b2 = 0; b2 < 2; ++b2) {
                    int si = (b0 << 3) | (b1 << 2) | (b2 << 1) | b3;
                    c += std::conj(k.amplitude((b1 << 1) | b2)) * s.amplitude(si);
                }
            cond((b0 << 1) | b3) = c;
        }

    BsmProjection out;
    out.probability = cond.squaredNorm();
    if (out.probability > 1e-15) {
        cond /= std::sqrt(out.probability);
        out.conditional = PureState({0, 3}, cond).canonicalized();
    }
    return out;
}

DensityOp::DensityOp(std::vector<int> labels, Eigen::Matrix4cd matrix)
    : labels_(std::move(labels)), mat_(std::move(matrix)) {
    if (labels_.size() != 2) throw std::invalid_argument("density operator is two-photon");
    check_labels_unique(labels_);
    if ((mat_ - mat_.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("matrix must be Hermitian");
    if (std::abs(mat_.trace().real() - 1.0) > 1e-12 || std::abs(mat_.trace().imag()) > 1e-12)
        throw std::invalid_argument("trace must be 1");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(mat_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10)
        throw std::invalid_argument("matrix must be positive semidefinite");
}

DensityOp DensityOp::from_pure(const PureState& s) {
    if (s.photon_count() != 2) throw std::invalid_argument("density operator is two-photon");
    Eigen::Vector4cd v = s.amplitudes();
    return DensityOp(s.labels(), v * v.adjoint());
}

DensityOp swapped_mixture(double m, BellKind kind) {
    if (m < 0.0 || m > 1.0) throw std::invalid_argument("overlap m must be in [0,1]");
    Eigen::Vector4cd v = bell_state(kind, {0, 3}).amplitudes();
    Eigen::Matrix4cd rho = m * (v * v.adjoint()).eval();
    const bool psi = kind == BellKind::PsiMinus || kind == BellKind::PsiPlus;
    // classical residue of a distinguishable-photon pattern: anticorrelated for Psi,
    // correlated for Phi
    if (psi) {
        rho(1, 1) += (1.0 - m) * 0.5;
        rho(2, 2) += (1.0 - m) * 0.5;
    } else {
        rho(0, 0) += (1.0 - m) * 0.5;
        rho(3, 3) += (1.0 - m) * 0.5;
    }
    return DensityOp({0, 3}, rho);
}

std::array<double, 4> born_probabilities(const DensityOp& rho, const MeasBasis& basis_a,
                                         const MeasBasis& basis_b) {
    std::array<double, 4> p{};
    double sum = 0.0;
    for (int oa = 0; oa < 2; ++oa)
        for (int ob = 0; ob < 2; ++ob) {
            Eigen::Vector2cd a = basis_a.ket(oa), b = basis_b.ket(ob);
            Eigen::Vector4cd v;
            v << a(0) * b(0), a(0) * b(1), a(1) * b(0), a(1) * b(1);
            double prob = (v.adjoint() * rho.matrix() * v).value().real();
            if (prob < 0.0 && prob > -1e-12) prob = 0.0;
            p[oa * 2 + ob] = prob;
            sum += prob;
        }
    if (std::abs(sum - 1.0) > 1e-9) throw std::runtime_error("probabilities do not sum to 1");
    return p;
}

}  // namespace swapsim::qstate
