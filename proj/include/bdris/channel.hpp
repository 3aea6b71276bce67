// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <vector>

#include "bdris/config.hpp"
#include "bdris/rng.hpp"
#include "bdris/types.hpp"

namespace bdris {

/// One realization of every physical channel. Index conventions:
///  h_ref[k]     user k <-> RIS, M x N
///  h_dir[k][i]  user i -> user k, N x N (zero off-diagonal when direct links are off)
///  h_si[k]      self-interference of user k, identical to h_dir[k][k]
struct ChannelSet {
    int users = 0;
    int antennas = 0;
    int elements = 0;
    std::vector<CMat> h_ref;
    std::vector<std::vector<CMat>> h_dir;
    std::vector<CMat> h_si;
};

/// Composite channels for a given scattering matrix.
///  h_tilde[k][i] = h_dir[k][i]^T + h_ref[k]^T (Phi - I) h_ref[i]   (transmitter i, receiver k)
///  h_bar[k]      = h_ref[k]^T (Phi - I) h_ref[k]                   (loop channel)
/// Without structural scattering the "- I" is dropped.
struct EffectiveChannels {
    std::vector<std::vector<CMat>> h_tilde;
    std::vector<CMat> h_bar;
};

/// Unit-norm ULA response, entry n = exp(j pi n cos(theta)) / sqrt(L).
CVec steering_vector(double theta_rad, int length);

/// zeta0 * (d / 1 m)^(-exponent).
double path_loss_linear(double distance_m, double exponent, double zeta0_db);

/// Planar distance between users k and i placed at (d, theta) around the RIS.
double user_separation(const ScenarioConfig& cfg, int k, int i);

CMat sample_ris_user_channel(const ScenarioConfig& cfg, int k, RandomStream& rng);
CMat sample_direct_channel(const ScenarioConfig& cfg, int k, int i, RandomStream& rng);
CMat sample_si_channel(const ScenarioConfig& cfg, int k, RandomStream& rng);

/// Draws a full ChannelSet. RIS links, direct links and SI use independent substreams
/// of the trial seed, so toggling direct links leaves the other families unchanged.
ChannelSet sample_channels(const ScenarioConfig& cfg, const TrialSeed& seed);

EffectiveChannels effective_channels(const ChannelSet& ch, const CMat& phi, bool structural);

/// Plain-text dump: "name rows cols" header then "re im" per entry, column-major, %.17g.
void write_channel_dump(std::ostream& out, const ChannelSet& ch);

}  // namespace bdris
