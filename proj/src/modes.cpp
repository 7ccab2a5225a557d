#include "weakflow/modes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "weakflow/errors.hpp"

namespace weakflow {

namespace {

constexpr cplx I{0.0, 1.0};

bool lex_positive(const Eigen::Vector3d& k) {
    for (int i = 0; i < 3; ++i) {
        if (k[i] > 0.0) return true;
        if (k[i] < 0.0) return false;
    }
    return false;
}

// Per-pair derivatives of L = ln R and S at a configuration.
struct PairJet {
    cplx dL;            // dL/dz*
    double ddL = 0.0;   // d^2 L / dz dz*
    cplx v;             // dS/dz*
    double ddS = 0.0;   // d^2 S / dz dz*
};

struct Jet {
    std::vector<PairJet> pair;
    double L = 0.0;
    double S = 0.0;
    double dtL = 0.0;
    double dtS = 0.0;
};

// Single-photon polynomial chi = sum_p (alpha_p z_p* + beta_p z_p).
struct PhotonCoefficients {
    std::vector<cplx> alpha;
    std::vector<cplx> beta;
};

PhotonCoefficients photon_coefficients(const FieldState& st, double t) {
    const ModeSet& m = st.modes();
    PhotonCoefficients c;
    for (std::size_t rep : m.pairs()) {
        const double kappa = m[rep].kappa();
        const cplx rot = std::sqrt(2.0 * kappa) * std::polar(1.0, -kappa * t);
        c.alpha.push_back(st.weights()[rep] * rot);
        c.beta.push_back(st.weights()[m.partner(rep)] * rot);
    }
    return c;
}

// Coherent centre and its derivatives for each pair.
struct Centre {
    cplx q, dq, ddq;
    double f = 0.0, df = 0.0;
};

Centre coherent_centre(const FieldState& st, std::size_t rep, double t) {
    const ModeSet& m = st.modes();
    const double kappa = m[rep].kappa();
    const cplx P = st.weights()[rep];
    const cplx M = st.weights()[m.partner(rep)];
    const cplx em = std::polar(1.0, -kappa * t);
    const cplx a = P * em;
    const cplx b = std::conj(M) * std::conj(em);
    Centre c;
    c.q = a + b;
    c.dq = -I * kappa * a + I * kappa * b;
    c.ddq = -kappa * kappa * c.q;
    const cplx pm = P * M * em * em;
    c.f = -kappa * t - 2.0 * kappa * pm.imag();
    c.df = -kappa + 4.0 * kappa * kappa * pm.real();
    return c;
}

Jet local_jet(const FieldState& st, const ModeConfiguration& cfg) {
    const ModeSet& m = st.modes();
    if (cfg.q.size() != m.size()) throw DomainError("configuration does not match the mode set");
    const auto& pairs = m.pairs();
    Jet jet;
    jet.pair.resize(pairs.size());
    const double t = cfg.t;

    switch (st.kind()) {
        case FieldState::Kind::ground: {
            for (std::size_t p = 0; p < pairs.size(); ++p) {
                const double kappa = m[pairs[p]].kappa();
                const cplx z = cfg.q[pairs[p]];
                jet.pair[p].dL = -kappa * z;
                jet.pair[p].ddL = -kappa;
                jet.L -= kappa * std::norm(z);
            }
            jet.S = -m.zero_point_energy() * t;
            jet.dtS = -m.zero_point_energy();
            break;
        }
        case FieldState::Kind::coherent: {
            for (std::size_t p = 0; p < pairs.size(); ++p) {
                const double kappa = m[pairs[p]].kappa();
                const cplx z = cfg.q[pairs[p]];
                const Centre c = coherent_centre(st, pairs[p], t);
                const cplx d = z - c.q;
                jet.pair[p].dL = -kappa * d;
                jet.pair[p].ddL = -kappa;
                jet.pair[p].v = c.dq;
                jet.L -= kappa * std::norm(d);
                jet.S += 2.0 * std::real(c.dq * std::conj(z)) + c.f;
                jet.dtL += 2.0 * kappa * std::real(c.dq * std::conj(d));
                jet.dtS += 2.0 * std::real(c.ddq * std::conj(z)) + c.df;
            }
            break;
        }
        case FieldState::Kind::single_photon: {
            const PhotonCoefficients c = photon_coefficients(st, t);
            cplx chi = 0.0, chi_dot = 0.0;
            double scale = 0.0;
            for (std::size_t p = 0; p < pairs.size(); ++p) {
                const double kappa = m[pairs[p]].kappa();
                const cplx z = cfg.q[pairs[p]];
                const cplx term = c.alpha[p] * std::conj(z) + c.beta[p] * z;
                chi += term;
                chi_dot += -I * kappa * term;
                scale += (std::abs(c.alpha[p]) + std::abs(c.beta[p])) * std::max(std::abs(z), 1.0 / std::sqrt(kappa));
                jet.L -= kappa * std::norm(z);
            }
            if (!(std::abs(chi) > 1e-14 * scale)) throw NodeError("wave functional vanishes", 0.0, t);
            const cplx chi_c = std::conj(chi);
            for (std::size_t p = 0; p < pairs.size(); ++p) {
                const double kappa = m[pairs[p]].kappa();
                const cplx z = cfg.q[pairs[p]];
                const cplx a = c.alpha[p] / chi;
                const cplx b = std::conj(c.beta[p]) / chi_c;
                const cplx ab = c.alpha[p] * c.beta[p] / (chi * chi);
                jet.pair[p].dL = 0.5 * (a + b) - kappa * z;
                jet.pair[p].ddL = -ab.real() - kappa;
                jet.pair[p].v = (a - b) / (2.0 * I);
                jet.pair[p].ddS = -ab.imag();
            }
            const cplx r = chi_dot / chi;
            jet.L += std::log(std::abs(chi));
            jet.S = std::arg(chi) - m.zero_point_energy() * t;
            jet.dtL = r.real();
            jet.dtS = r.imag() - m.zero_point_energy();
            break;
        }
    }
    return jet;
}

double potential_from(const Jet& jet) {
    double q = 0.0;
    for (const auto& p : jet.pair) q -= p.ddL + std::norm(p.dL);
    return q;
}

Eigen::Vector3cd mode_sum(const ModeSet& modes, const std::vector<cplx>& coef, const Eigen::Vector3d& r, bool curl) {
    Eigen::Vector3cd out = Eigen::Vector3cd::Zero();
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const Mode& md = modes[i];
        const cplx ph = coef[i] * std::polar(1.0, md.k.dot(r));
        if (curl) {
            const Eigen::Vector3d kx = md.k.cross(md.polarization);
            out += (I * ph) * kx.cast<cplx>();
        } else {
            out += ph * md.polarization.cast<cplx>();
        }
    }
    return out / std::sqrt(modes.volume());
}

}  // namespace

ModeSet::ModeSet(std::vector<Mode> modes, double volume) : modes_(std::move(modes)), volume_(volume) {
    if (!(volume_ > 0.0) || !std::isfinite(volume_)) throw DomainError("mode volume must be positive");
    const std::size_t n = modes_.size();
    partner_.assign(n, n);
    representative_.assign(n, false);
    pair_of_.assign(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const Mode& m = modes_[i];
        const double kappa = m.kappa();
        if (!(kappa > 0.0) || !std::isfinite(kappa)) throw DomainError("mode wave vector must be non-zero");
        if (m.mu != 1 && m.mu != 2) throw DomainError("polarization index must be 1 or 2");
        if (std::abs(m.polarization.norm() - 1.0) > 1e-12) throw DomainError("polarization vector must be unit length");
        if (std::abs(m.polarization.dot(m.k)) > 1e-12 * kappa) throw DomainError("polarization not transverse to k");
        representative_[i] = lex_positive(m.k);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const Mode& m = modes_[i];
        const double tol = 1e-12 * m.kappa();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || modes_[j].mu != m.mu) continue;
            if ((modes_[j].k + m.k).norm() <= tol) {
                if (partner_[i] != n) throw DomainError("duplicate mode in mode set");
                if ((modes_[j].polarization - m.polarization).norm() > 1e-12)
                    throw DomainError("conjugate modes must share the polarization vector");
                partner_[i] = j;
            }
        }
        if (partner_[i] == n) throw DomainError("mode set is not closed under k -> -k");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!representative_[i]) continue;
        pair_of_[i] = pairs_.size();
        pair_of_[partner_[i]] = pairs_.size();
        pairs_.push_back(i);
    }
}

ModeSet ModeSet::box(double side, const std::vector<Eigen::Vector3i>& wave_numbers, bool both_polarizations) {
    if (!(side > 0.0)) throw DomainError("box side must be positive");
    std::vector<Eigen::Vector3i> reps;
    for (const auto& n : wave_numbers) {
        if (n.isZero()) throw DomainError("zero wave number has no transverse modes");
        const Eigen::Vector3i r = lex_positive(n.cast<double>()) ? n : Eigen::Vector3i(-n);
        if (std::find(reps.begin(), reps.end(), r) == reps.end()) reps.push_back(r);
    }
    std::vector<Mode> modes;
    for (const auto& n : reps) {
        const Eigen::Vector3d k = (2.0 * M_PI / side) * n.cast<double>();
        const Eigen::Vector3d khat = k.normalized();
        Eigen::Vector3d e1 = k.cross(Eigen::Vector3d::UnitZ());
        e1 = e1.norm() > 1e-12 * k.norm() ? e1.normalized() : Eigen::Vector3d::UnitX();
        const Eigen::Vector3d e2 = khat.cross(e1);
        const int nmu = both_polarizations ? 2 : 1;
        for (int mu = 1; mu <= nmu; ++mu) {
            const Eigen::Vector3d e = mu == 1 ? e1 : e2;
            modes.push_back({k, mu, e});
            modes.push_back({-k, mu, e});
        }
    }
    return ModeSet(std::move(modes), side * side * side);
}

std::size_t ModeSet::find(const Eigen::Vector3d& k, int mu, double tol) const {
    for (std::size_t i = 0; i < modes_.size(); ++i)
        if (modes_[i].mu == mu && (modes_[i].k - k).norm() <= tol * std::max(1.0, k.norm())) return i;
    return modes_.size();
}

double ModeSet::zero_point_energy() const {
    double e = 0.0;
    for (std::size_t rep : pairs_) e += modes_[rep].kappa();
    return e;
}

ModeConfiguration ModeConfiguration::from_pairs(const ModeSet& modes, std::span<const cplx> z, double t) {
    if (z.size() != modes.pairs().size()) throw DomainError("one value per conjugate pair expected");
    ModeConfiguration c;
    c.t = t;
    c.q.resize(modes.size());
    for (std::size_t p = 0; p < z.size(); ++p) {
        const std::size_t rep = modes.pairs()[p];
        c.q[rep] = z[p];
        c.q[modes.partner(rep)] = std::conj(z[p]);
    }
    return c;
}

ModeConfiguration ModeConfiguration::from_modes(const ModeSet& modes, std::vector<cplx> q, double t) {
    if (q.size() != modes.size()) throw DomainError("configuration does not match the mode set");
    for (std::size_t rep : modes.pairs()) {
        const cplx a = q[rep];
        const cplx b = q[modes.partner(rep)];
        if (std::abs(a - std::conj(b)) > 1e-12 * std::max({std::abs(a), std::abs(b), 1e-300}))
            throw DomainError("amplitudes of k and -k must be complex conjugates");
        q[modes.partner(rep)] = std::conj(a);
    }
    ModeConfiguration c;
    c.q = std::move(q);
    c.t = t;
    return c;
}

std::vector<cplx> ModeConfiguration::pair_values(const ModeSet& modes) const {
    std::vector<cplx> z;
    for (std::size_t rep : modes.pairs()) z.push_back(q.at(rep));
    return z;
}

FieldState::FieldState(Kind kind, ModeSet modes, std::vector<cplx> weights, Eigen::Vector3d center)
    : kind_(kind), modes_(std::move(modes)), weights_(std::move(weights)), center_(std::move(center)) {
    if (weights_.size() != modes_.size()) throw DomainError("one weight per mode expected");
    for (const cplx& w : weights_)
        if (!std::isfinite(w.real()) || !std::isfinite(w.imag())) throw DomainError("state weights must be finite");
}

FieldState FieldState::ground(ModeSet modes) {
    const std::size_t n = modes.size();
    return FieldState(Kind::ground, std::move(modes), std::vector<cplx>(n), Eigen::Vector3d::Zero());
}

FieldState FieldState::single_photon(ModeSet modes, std::vector<cplx> weights, Eigen::Vector3d center) {
    double norm = 0.0;
    for (const cplx& w : weights) norm += std::norm(w);
    if (std::abs(norm - 1.0) > 1e-12) throw DomainError("single-photon weights must satisfy sum |f|^2 = 1");
    return FieldState(Kind::single_photon, std::move(modes), std::move(weights), std::move(center));
}

FieldState FieldState::single_photon(ModeSet modes, std::size_t mode) {
    if (mode >= modes.size()) throw DomainError("mode index out of range");
    std::vector<cplx> f(modes.size());
    f[mode] = 1.0;
    const Eigen::Vector3d k = modes[mode].k;
    return single_photon(std::move(modes), std::move(f), k);
}

FieldState FieldState::coherent(ModeSet modes, std::vector<cplx> alpha) {
    return FieldState(Kind::coherent, std::move(modes), std::move(alpha), Eigen::Vector3d::Zero());
}

std::vector<cplx> gaussian_packet(const ModeSet& modes, const Eigen::Vector3d& center, double sigma_k, int mu) {
    if (!(sigma_k > 0.0)) throw DomainError("packet width must be positive");
    std::vector<cplx> f(modes.size());
    double norm = 0.0;
    for (std::size_t i = 0; i < modes.size(); ++i) {
        if (modes[i].mu != mu) continue;
        const double d2 = (modes[i].k - center).squaredNorm();
        f[i] = std::exp(-d2 / (4.0 * sigma_k * sigma_k));
        norm += std::norm(f[i]);
    }
    if (!(norm > 0.0)) throw DomainError("packet has no support on the mode set");
    for (auto& w : f) w /= std::sqrt(norm);
    return f;
}

AmplitudePhase amplitude_phase(const FieldState& state, const ModeConfiguration& cfg) {
    try {
        const Jet jet = local_jet(state, cfg);
        return {std::exp(jet.L), jet.S};
    } catch (const NodeError&) {
        return {0.0, std::nan("")};
    }
}

double quantum_potential(const FieldState& state, const ModeConfiguration& cfg) {
    return potential_from(local_jet(state, cfg));
}

double hj_residual(const FieldState& state, const ModeConfiguration& cfg) {
    const Jet jet = local_jet(state, cfg);
    const ModeSet& m = state.modes();
    double r = jet.dtS + potential_from(jet);
    for (std::size_t p = 0; p < jet.pair.size(); ++p) {
        const double kappa = m[m.pairs()[p]].kappa();
        r += std::norm(jet.pair[p].v) + kappa * kappa * std::norm(cfg.q[m.pairs()[p]]);
    }
    return std::abs(r);
}

double continuity_residual(const FieldState& state, const ModeConfiguration& cfg) {
    const Jet jet = local_jet(state, cfg);
    // d_t ln rho + sum [ 2 Re(2 dL/dz v) + 2 d^2S/dz dz* ]
    double r = 2.0 * jet.dtL;
    for (const auto& p : jet.pair) r += 4.0 * std::real(std::conj(p.dL) * p.v) + 2.0 * p.ddS;
    return std::abs(r);
}

std::vector<cplx> guidance_velocity(const FieldState& state, const ModeConfiguration& cfg) {
    const ModeSet& m = state.modes();
    std::vector<cplx> v(m.size());
    if (state.kind() == FieldState::Kind::ground) return v;
    const Jet jet = local_jet(state, cfg);
    for (std::size_t p = 0; p < jet.pair.size(); ++p) {
        const std::size_t rep = m.pairs()[p];
        v[rep] = jet.pair[p].v;
        v[m.partner(rep)] = std::conj(jet.pair[p].v);
    }
    return v;
}

Eigen::Vector3cd vector_potential(const ModeSet& modes, const ModeConfiguration& cfg, const Eigen::Vector3d& r) {
    if (cfg.q.size() != modes.size()) throw DomainError("configuration does not match the mode set");
    return mode_sum(modes, cfg.q, r, false);
}

Eigen::Vector3d electric_field(const FieldState& state, const ModeConfiguration& cfg, const Eigen::Vector3d& r) {
    const std::vector<cplx> v = guidance_velocity(state, cfg);
    return -mode_sum(state.modes(), v, r, false).real();
}

Eigen::Vector3d magnetic_field(const ModeSet& modes, const ModeConfiguration& cfg, const Eigen::Vector3d& r) {
    if (cfg.q.size() != modes.size()) throw DomainError("configuration does not match the mode set");
    return mode_sum(modes, cfg.q, r, true).real();
}

double energy_density(const FieldState& state, const ModeConfiguration& cfg, const Eigen::Vector3d& r,
                      bool normal_ordered) {
    const ModeSet& m = state.modes();
    const Eigen::Vector3d E = electric_field(state, cfg, r);
    const Eigen::Vector3d B = magnetic_field(m, cfg, r);
    double w = 0.5 * (E.squaredNorm() + B.squaredNorm()) + quantum_potential(state, cfg) / m.volume();
    if (normal_ordered) w -= m.zero_point_energy() / m.volume();
    return w;
}

Eigen::Vector3d momentum_density(const FieldState& state, const ModeConfiguration& cfg, const Eigen::Vector3d& r) {
    if (state.kind() == FieldState::Kind::ground) return Eigen::Vector3d::Zero();
    const Eigen::Vector3d E = electric_field(state, cfg, r);
    const Eigen::Vector3d B = magnetic_field(state.modes(), cfg, r);
    return E.cross(B);
}

double field_energy(const FieldState& state, const ModeConfiguration& cfg, bool normal_ordered) {
    const ModeSet& m = state.modes();
    const Jet jet = local_jet(state, cfg);
    double e = potential_from(jet);
    for (std::size_t p = 0; p < jet.pair.size(); ++p) {
        const double kappa = m[m.pairs()[p]].kappa();
        e += std::norm(jet.pair[p].v) + kappa * kappa * std::norm(cfg.q[m.pairs()[p]]);
    }
    if (normal_ordered) e -= m.zero_point_energy();
    return e;
}

Eigen::Vector3d total_momentum(const FieldState& state, const ModeConfiguration& cfg) {
    const ModeSet& m = state.modes();
    Eigen::Vector3d P = Eigen::Vector3d::Zero();
    if (state.kind() == FieldState::Kind::ground) return P;
    const Jet jet = local_jet(state, cfg);
    for (std::size_t p = 0; p < jet.pair.size(); ++p) {
        const std::size_t rep = m.pairs()[p];
        P += 2.0 * m[rep].k * std::imag(cfg.q[rep] * std::conj(jet.pair[p].v));
    }
    return P;
}

double total_energy(const FieldState& state, bool normal_ordered) {
    const ModeSet& m = state.modes();
    double e = m.zero_point_energy();
    switch (state.kind()) {
        case FieldState::Kind::ground:
            break;
        case FieldState::Kind::single_photon:
            for (std::size_t i = 0; i < m.size(); ++i) e += std::norm(state.weights()[i]) * m[i].kappa();
            break;
        case FieldState::Kind::coherent:
            for (std::size_t i = 0; i < m.size(); ++i) {
                const double kappa = m[i].kappa();
                e += 2.0 * kappa * kappa * std::norm(state.weights()[i]);
            }
            break;
    }
    if (normal_ordered) e -= m.zero_point_energy();
    return e;
}

BeableTrajectory evolve_beables(const FieldState& state, const ModeConfiguration& cfg0, double t1,
                                const StepControl& control, std::size_t samples) {
    const ModeSet& m = state.modes();
    if (cfg0.q.size() != m.size()) throw DomainError("configuration does not match the mode set");
    if (!(t1 > cfg0.t)) throw DomainError("evolution needs t1 > t0");
    if (samples < 2) throw DomainError("trajectory needs at least two samples");
    const std::size_t np = m.pairs().size();

    auto unpack = [&](double t, const Dopri5::Vector& y) {
        std::vector<cplx> z(np);
        for (std::size_t p = 0; p < np; ++p) z[p] = {y[2 * p], y[2 * p + 1]};
        return ModeConfiguration::from_pairs(m, z, t);
    };
    Dopri5 ode(
        [&](double t, const Dopri5::Vector& y, Dopri5::Vector& dy) {
            const ModeConfiguration c = unpack(t, y);
            const std::vector<cplx> v = guidance_velocity(state, c);
            for (std::size_t p = 0; p < np; ++p) {
                const cplx vp = v[m.pairs()[p]];
                dy[2 * p] = vp.real();
                dy[2 * p + 1] = vp.imag();
            }
        },
        control);

    Dopri5::Vector y(2 * np);
    const std::vector<cplx> z0 = cfg0.pair_values(m);
    for (std::size_t p = 0; p < np; ++p) {
        y[2 * p] = z0[p].real();
        y[2 * p + 1] = z0[p].imag();
    }
    BeableTrajectory traj;
    double t = cfg0.t;
    traj.points.push_back(unpack(t, y));
    for (std::size_t i = 1; i < samples; ++i) {
        const double tn = i + 1 == samples ? t1 : cfg0.t + (t1 - cfg0.t) * static_cast<double>(i) / static_cast<double>(samples - 1);
        ode.advance(t, y, tn);
        traj.points.push_back(unpack(t, y));
    }
    traj.stats = ode.stats();
    return traj;
}

double newton_residual(const FieldState& state, const ModeConfiguration& cfg, double h) {
    const ModeSet& m = state.modes();
    const std::size_t np = m.pairs().size();
    const std::vector<cplx> z = cfg.pair_values(m);

    auto velocity = [&](const std::vector<cplx>& zz, double t) {
        const auto v = guidance_velocity(state, ModeConfiguration::from_pairs(m, zz, t));
        std::vector<cplx> out(np);
        for (std::size_t p = 0; p < np; ++p) out[p] = v[m.pairs()[p]];
        return out;
    };
    auto q_at = [&](const std::vector<cplx>& zz) {
        return quantum_potential(state, ModeConfiguration::from_pairs(m, zz, cfg.t));
    };

    const std::vector<cplx> v0 = velocity(z, cfg.t);
    std::vector<cplx> zp(np), zm(np);
    for (std::size_t p = 0; p < np; ++p) {
        zp[p] = z[p] + h * v0[p];
        zm[p] = z[p] - h * v0[p];
    }
    const std::vector<cplx> vp = velocity(zp, cfg.t + h);
    const std::vector<cplx> vm = velocity(zm, cfg.t - h);

    double worst = 0.0;
    for (std::size_t p = 0; p < np; ++p) {
        const double kappa = m[m.pairs()[p]].kappa();
        const cplx acc = (vp[p] - vm[p]) / (2.0 * h);
        // dQ/dz* = (dQ/da + i dQ/db) / 2 for z = a + ib
        std::vector<cplx> w = z;
        w[p] = z[p] + h;
        const double qa_p = q_at(w);
        w[p] = z[p] - h;
        const double qa_m = q_at(w);
        w[p] = z[p] + I * h;
        const double qb_p = q_at(w);
        w[p] = z[p] - I * h;
        const double qb_m = q_at(w);
        const cplx dq = 0.5 * cplx((qa_p - qa_m) / (2.0 * h), (qb_p - qb_m) / (2.0 * h));
        worst = std::max(worst, std::abs(acc + kappa * kappa * z[p] + dq));
    }
    return worst;
}

double detection_probability(const FieldState& state, const Eigen::Vector3d& r, double t) {
    const ModeSet& m = state.modes();
    if (state.kind() == FieldState::Kind::ground) return 0.0;
    Eigen::Vector3cd amp = Eigen::Vector3cd::Zero();
    double norm = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double kappa = m[i].kappa();
        cplx b = state.weights()[i];
        if (state.kind() == FieldState::Kind::coherent) b *= std::sqrt(2.0 * kappa);
        if (b == 0.0) continue;
        const cplx c = b * std::sqrt(kappa / (2.0 * m.volume())) * std::polar(1.0, m[i].k.dot(r) - kappa * t);
        amp += c * m[i].polarization.cast<cplx>();
        norm += std::norm(b) * kappa / 2.0;
    }
    if (!(norm > 0.0)) return 0.0;
    return amp.squaredNorm() / norm;
}

double separability_defect(const FieldState& state, const ModeConfiguration& a, const ModeConfiguration& b,
                           std::size_t pair_j) {
    const ModeSet& m = state.modes();
    if (pair_j >= m.pairs().size()) throw DomainError("pair index out of range");
    std::vector<cplx> za = a.pair_values(m), zb = b.pair_values(m);
    std::vector<cplx> ab = za, ba = zb;
    ab[pair_j] = zb[pair_j];
    ba[pair_j] = za[pair_j];
    const double t = a.t;
    auto Q = [&](const std::vector<cplx>& z) {
        return quantum_potential(state, ModeConfiguration::from_pairs(m, z, t));
    };
    return Q(za) + Q(zb) - Q(ab) - Q(ba);
}

}  // namespace weakflow
