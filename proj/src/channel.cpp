// SPDX-License-Identifier: Apache-2.0
#include "bdris/channel.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

namespace bdris {

CVec steering_vector(double theta_rad, int length) {
    if (length < 1) throw std::invalid_argument("steering_vector: length must be positive");
    CVec a(length);
    const double phase = kPi * std::cos(theta_rad);
    const double scale = 1.0 / std::sqrt(static_cast<double>(length));
    for (int n = 0; n < length; ++n) a(n) = scale * std::polar(1.0, phase * n);
    return a;
}

double path_loss_linear(double distance_m, double exponent, double zeta0_db) {
    if (!(distance_m > 0.0)) throw std::invalid_argument("path_loss_linear: distance must be positive");
    return db_to_linear(zeta0_db) * std::pow(distance_m, -exponent);
}

double user_separation(const ScenarioConfig& cfg, int k, int i) {
    const double dk = cfg.user_distances_m[k], di = cfg.user_distances_m[i];
    const double tk = cfg.user_angles_rad[k], ti = cfg.user_angles_rad[i];
    return std::hypot(dk * std::cos(tk) - di * std::cos(ti), dk * std::sin(tk) - di * std::sin(ti));
}

CMat sample_ris_user_channel(const ScenarioConfig& cfg, int k, RandomStream& rng) {
    const int m = cfg.ris.elements, n = cfg.antennas;
    const double pl = path_loss_linear(cfg.user_distances_m[k], cfg.exponent_ris, cfg.pathloss_ref_db);
    const CVec a_ris = steering_vector(cfg.user_angles_rad[k], m);
    const CVec a_user = steering_vector(deg_to_rad(cfg.user_departure_deg), n);
    const CMat los = std::sqrt(static_cast<double>(m) * n) * (a_ris * a_user.transpose());
    const CMat nlos = rng.complex_normal(m, n);

    const double kappa = cfg.rician_kappa;
    double w_los = 1.0, w_nlos = 0.0;
    if (std::isfinite(kappa)) {
        w_los = std::sqrt(kappa / (1.0 + kappa));
        w_nlos = std::sqrt(1.0 / (1.0 + kappa));
    }
    return std::sqrt(pl) * (w_los * los + w_nlos * nlos);
}

CMat sample_direct_channel(const ScenarioConfig& cfg, int k, int i, RandomStream& rng) {
    const int n = cfg.antennas;
    if (!cfg.direct_links || k == i) return CMat::Zero(n, n);
    const double pl =
        path_loss_linear(user_separation(cfg, k, i), cfg.exponent_direct, cfg.pathloss_ref_db);
    return std::sqrt(pl) * rng.complex_normal(n, n);
}

CMat sample_si_channel(const ScenarioConfig& cfg, int /*k*/, RandomStream& rng) {
    const int n = cfg.antennas;
    return std::sqrt(cfg.si_gain) * rng.complex_normal(n, n);
}

ChannelSet sample_channels(const ScenarioConfig& cfg, const TrialSeed& seed) {
    const int users = cfg.users;
    ChannelSet ch;
    ch.users = users;
    ch.antennas = cfg.antennas;
    ch.elements = cfg.ris.elements;

    RandomStream ref_rng(mix_seed(seed.derived_seed, 0));
    RandomStream dir_rng(mix_seed(seed.derived_seed, 1));
    RandomStream si_rng(mix_seed(seed.derived_seed, 2));

    ch.h_ref.reserve(users);
    for (int k = 0; k < users; ++k) ch.h_ref.push_back(sample_ris_user_channel(cfg, k, ref_rng));
    ch.h_si.reserve(users);
    for (int k = 0; k < users; ++k) ch.h_si.push_back(sample_si_channel(cfg, k, si_rng));
    ch.h_dir.assign(users, std::vector<CMat>(users));
    for (int k = 0; k < users; ++k)
        for (int i = 0; i < users; ++i)
            ch.h_dir[k][i] = (k == i) ? ch.h_si[k] : sample_direct_channel(cfg, k, i, dir_rng);
    return ch;
}

EffectiveChannels effective_channels(const ChannelSet& ch, const CMat& phi, bool structural) {
    const int users = ch.users, m = ch.elements;
    if (phi.rows() != m || phi.cols() != m)
        throw std::invalid_argument("effective_channels: scattering matrix must be M x M");
    if (static_cast<int>(ch.h_ref.size()) != users || static_cast<int>(ch.h_dir.size()) != users)
        throw std::invalid_argument("effective_channels: channel set has inconsistent user count");
    for (const auto& h : ch.h_ref)
        if (h.rows() != m || h.cols() != ch.antennas)
            throw std::invalid_argument("effective_channels: RIS channel must be M x N");

    CMat e = phi;
    if (structural) e.diagonal().array() -= 1.0;

    std::vector<CMat> scattered(users);  // (Phi - I) h_ref[i]
    for (int i = 0; i < users; ++i) scattered[i] = e * ch.h_ref[i];

    EffectiveChannels eff;
    eff.h_tilde.assign(users, std::vector<CMat>(users));
    eff.h_bar.resize(users);
    for (int k = 0; k < users; ++k) {
        for (int i = 0; i < users; ++i)
            eff.h_tilde[k][i] = ch.h_dir[k][i].transpose() + ch.h_ref[k].transpose() * scattered[i];
        eff.h_bar[k] = ch.h_ref[k].transpose() * scattered[k];
    }
    return eff;
}

namespace {

void dump_matrix(std::ostream& out, const std::string& name, const CMat& m) {
    out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    char buf[96];
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g %.17g\n", m(i, j).real(), m(i, j).imag());
            out << buf;
        }
}

}  // namespace

void write_channel_dump(std::ostream& out, const ChannelSet& ch) {
    out << "channelset users=" << ch.users << " antennas=" << ch.antennas
        << " elements=" << ch.elements << '\n';
    for (int k = 0; k < ch.users; ++k) dump_matrix(out, "h_ref[" + std::to_string(k) + "]", ch.h_ref[k]);
    for (int k = 0; k < ch.users; ++k)
        for (int i = 0; i < ch.users; ++i)
            dump_matrix(out, "h_dir[" + std::to_string(k) + "][" + std::to_string(i) + "]", ch.h_dir[k][i]);
}

}  // namespace bdris
