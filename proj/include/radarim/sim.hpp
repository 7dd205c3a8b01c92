#pragma once

// Synthetic FMCW scene and interference generation. Produces the raw
// multi-antenna time-domain cubes that the rest of the pipeline consumes:
// clean beat signals for parametric point-target scenes, plus mutual
// interference bursts from other radars with different chirp parameters.

#include <cstdint>
#include <vector>

#include "radarim/maps.hpp"
#include "radarim/rng.hpp"
#include "radarim/tensor.hpp"

namespace radarim {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

// Acquisition parameters of the ego radar. Defaults describe a 79 GHz
// automotive MIMO-lite setup: 96 samples per sweep, 96 sweeps per frame,
// 16-element half-wavelength ULA, back-to-back sweeps.
struct RadarConfig {
  std::size_t n_range = 96;     // samples per sweep (range bins)
  std::size_t n_doppler = 96;   // sweeps per frame (Doppler bins)
  std::size_t n_antennas = 16;  // ULA elements (angle bins)
  double carrier_freq = 79e9;   // Hz
  double bandwidth = 0.2e9;     // Hz swept per chirp
  double sweep_duration = 16e-6;  // s
  double sample_rate = 6e6;       // Hz; must equal n_range / sweep_duration
  double antenna_spacing = 0.5;   // in wavelengths
  double noise_floor_db = -20.0;  // noise power relative to unit amplitude

  // Throws std::invalid_argument when a field is non-positive or when
  // sample_rate * sweep_duration does not come out to n_range.
  void validate() const;

  double slope() const { return bandwidth / sweep_duration; }
  double frame_duration() const {
    return sweep_duration * double(n_doppler);
  }
  // Unambiguous range c*f_s*T_sw / (4B): beat frequencies stay below f_s/2.
  double max_range() const;
  // Unambiguous radial velocity c / (4 f_c T_sw).
  double max_velocity() const;
};

struct ObjectParams {
  double range_m = 0.0;
  double velocity_mps = 0.0;
  double azimuth_deg = 0.0;  // [-90, 90], broadside = 0
  double amplitude = 1.0;    // linear
};

struct Scene {
  std::vector<ObjectParams> objects;
};

// One interfering radar. Its chirp sequence starts at time_offset relative
// to the ego frame start and consists of n_sweeps sweeps; each sweep covers
// the band [start_freq, start_freq + bandwidth], rising for slope sign +1
// and falling for -1.
struct InterfererConfig {
  double sweep_duration = 16e-6;  // s
  double bandwidth = 0.2e9;       // Hz
  double start_freq = 79e9;       // Hz, lower edge of the swept band
  double aoa_deg = 0.0;           // angle of arrival, [-90, 90]
  int n_sweeps = 128;
  double snir_db = 40.0;  // burst strength over mean clean sample power
  double time_offset = 0.0;  // s, chirp-sequence start vs frame start
  int chirp_slope_sign = 1;  // +1 up-chirp, -1 down-chirp
};

struct InterferenceResult {
  ComplexTensor cube;  // [n_range, n_doppler, n_antennas]
  BoolMap mask;        // [n_range, n_doppler]; true where a burst is active
};

// Draws a random scene: 1..10 objects, ranges in [2 m, 0.9 * max_range],
// velocities within the unambiguous interval, azimuth uniform in
// [-90, 90] degrees, amplitudes log-uniform over a 30 dB span below 1.
Scene sample_scene(Rng& rng, const RadarConfig& cfg);
Scene sample_scene(std::uint64_t rng_seed, const RadarConfig& cfg);

// Beat-signal cube for the scene:
//   s[n,m,a] = sum_o A_o * exp(j2pi (f_b n / f_s + f_D m T_sw
//                                    + spacing * a * sin(azimuth)))
// with f_b = 2 B R / (c T_sw) and f_D = 2 v f_c / c, plus circularly
// symmetric Gaussian noise at cfg.noise_floor_db drawn from noise_rng.
// Throws std::invalid_argument for an empty scene.
ComplexTensor synthesize_clean(const Scene& scene, const RadarConfig& cfg,
                               Rng& noise_rng);

// Draws 1..3 interferers with parameters uniform over: sweep duration
// [12, 24] us, bandwidth [0.15, 0.25] GHz, AoA [-90, 90] deg, start
// frequency [78.9, 79.1] GHz, sweep count {100..156}, strength [30, 50] dB,
// slope sign +-1 equiprobable, and a time offset placing the sequence so it
// can overlap the frame.
std::vector<InterfererConfig> sample_interferers(Rng& rng,
                                                 const RadarConfig& cfg);
std::vector<InterfererConfig> sample_interferers(std::uint64_t rng_seed,
                                                 const RadarConfig& cfg);

// Dechirped interference bursts. A sample at absolute time t is hit by an
// interferer whenever the instantaneous frequency difference f_delta(t)
// between the interferer chirp and the ego chirp lies inside the receiver
// band (-f_s/2, f_s/2); the burst phase is the time integral of f_delta,
// a quadratic chirp anchored at the crossing point of each linear segment.
// Antenna a carries the steering factor exp(-j2pi spacing a sin(aoa)).
//
// With reference_power <= 0 every burst has unit amplitude (the caller
// scales later, e.g. via mix_at_snir). With reference_power > 0 each
// interferer's burst amplitude is sqrt(reference_power) * 10^(snir_db/20),
// i.e. snir_db says how far the burst sticks out above the mean clean
// per-sample power. Throws std::invalid_argument for an empty list.
InterferenceResult synthesize_interference(
    const std::vector<InterfererConfig>& ics, const RadarConfig& cfg,
    double reference_power = 0.0);

// clean + g * interference with g chosen so the whole-cube power ratio
// P_clean / P_interference equals snir_db. Throws std::invalid_argument on
// shape mismatch or zero interference power.
ComplexTensor mix_at_snir(const ComplexTensor& clean,
                          const ComplexTensor& interference, double snir_db);

}  // namespace radarim
