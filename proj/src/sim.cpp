#include "radarim/sim.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace radarim {

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;
constexpr double kTwoPi = 2.0 * kPi;
constexpr double kDegToRad = kPi / 180.0;

}  // namespace

void RadarConfig::validate() const {
  if (n_range == 0 || n_doppler == 0 || n_antennas == 0) {
    throw std::invalid_argument("RadarConfig: grid dimensions must be > 0");
  }
  if (carrier_freq <= 0.0 || bandwidth <= 0.0 || sweep_duration <= 0.0 ||
      sample_rate <= 0.0 || antenna_spacing <= 0.0) {
    throw std::invalid_argument(
        "RadarConfig: physical parameters must be > 0");
  }
  const double samples = sample_rate * sweep_duration;
  if (std::abs(samples - double(n_range)) > 1e-6 * double(n_range)) {
    throw std::invalid_argument(
        "RadarConfig: sample_rate * sweep_duration must equal n_range, got " +
        std::to_string(samples));
  }
}

double RadarConfig::max_range() const {
  return kSpeedOfLight * sample_rate * sweep_duration / (4.0 * bandwidth);
}

double RadarConfig::max_velocity() const {
  return kSpeedOfLight / (4.0 * carrier_freq * sweep_duration);
}

Scene sample_scene(Rng& rng, const RadarConfig& cfg) {
  cfg.validate();
  const std::int64_t count = rng.uniform_int(1, 10);
  const double r_hi = 0.9 * cfg.max_range();
  const double v_max = cfg.max_velocity();
  Scene scene;
  scene.objects.reserve(std::size_t(count));
  for (std::int64_t i = 0; i < count; ++i) {
    ObjectParams obj;
    obj.range_m = rng.uniform(2.0, r_hi);
    obj.velocity_mps = rng.uniform(-v_max, v_max);
    obj.azimuth_deg = rng.uniform(-90.0, 90.0);
    // log-uniform over 30 dB below unit amplitude: 10^(-30/20 * u)
    obj.amplitude = std::pow(10.0, -1.5 * rng.uniform());
    scene.objects.push_back(obj);
  }
  return scene;
}

Scene sample_scene(std::uint64_t rng_seed, const RadarConfig& cfg) {
  Rng rng(rng_seed);
  return sample_scene(rng, cfg);
}

ComplexTensor synthesize_clean(const Scene& scene, const RadarConfig& cfg,
                               Rng& noise_rng) {
  cfg.validate();
  if (scene.objects.empty()) {
    throw std::invalid_argument("synthesize_clean: scene has no objects");
  }
  const std::size_t nr = cfg.n_range;
  const std::size_t nd = cfg.n_doppler;
  const std::size_t na = cfg.n_antennas;

  // Accumulate in double; the per-object signal is a rank-1 outer product
  // of three phase ramps, so a handful of small tables covers the cube.
  std::vector<std::complex<double>> acc(nr * nd * na, {0.0, 0.0});
  std::vector<std::complex<double>> range_ph(nr), dopp_ph(nd), ant_ph(na);
  for (const ObjectParams& obj : scene.objects) {
    const double f_beat = 2.0 * cfg.bandwidth * obj.range_m /
                          (kSpeedOfLight * cfg.sweep_duration);
    const double f_dopp =
        2.0 * obj.velocity_mps * cfg.carrier_freq / kSpeedOfLight;
    const double sin_az = std::sin(obj.azimuth_deg * kDegToRad);
    for (std::size_t n = 0; n < nr; ++n) {
      range_ph[n] =
          std::polar(1.0, kTwoPi * f_beat * double(n) / cfg.sample_rate);
    }
    for (std::size_t m = 0; m < nd; ++m) {
      dopp_ph[m] =
          std::polar(1.0, kTwoPi * f_dopp * double(m) * cfg.sweep_duration);
    }
    for (std::size_t a = 0; a < na; ++a) {
      ant_ph[a] =
          std::polar(1.0, kTwoPi * cfg.antenna_spacing * double(a) * sin_az);
    }
    std::complex<double>* dst = acc.data();
    for (std::size_t n = 0; n < nr; ++n) {
      const std::complex<double> rn = obj.amplitude * range_ph[n];
      for (std::size_t m = 0; m < nd; ++m) {
        const std::complex<double> rd = rn * dopp_ph[m];
        for (std::size_t a = 0; a < na; ++a) {
          *dst++ += rd * ant_ph[a];
        }
      }
    }
  }

  const double noise_power = std::pow(10.0, cfg.noise_floor_db / 10.0);
  const double sigma = std::sqrt(noise_power / 2.0);  // per component
  for (std::complex<double>& value : acc) {
    value += noise_rng.cnormal(sigma);
  }

  ComplexTensor out({nr, nd, na});
  for (std::size_t i = 0; i < acc.size(); ++i) {
    out[i] = cfloat(float(acc[i].real()), float(acc[i].imag()));
  }
  return out;
}

std::vector<InterfererConfig> sample_interferers(Rng& rng,
                                                 const RadarConfig& cfg) {
  cfg.validate();
  const std::int64_t count = rng.uniform_int(1, 3);
  const double frame = cfg.frame_duration();
  std::vector<InterfererConfig> ics;
  ics.reserve(std::size_t(count));
  for (std::int64_t i = 0; i < count; ++i) {
    InterfererConfig ic;
    ic.sweep_duration = rng.uniform(12e-6, 24e-6);
    ic.bandwidth = rng.uniform(0.15e9, 0.25e9);
    ic.aoa_deg = rng.uniform(-90.0, 90.0);
    ic.start_freq = rng.uniform(78.9e9, 79.1e9);
    ic.n_sweeps = int(rng.uniform_int(100, 156));
    ic.snir_db = rng.uniform(30.0, 50.0);
    ic.chirp_slope_sign = rng.uniform() < 0.5 ? 1 : -1;
    // Place the sequence anywhere that lets it overlap the frame: when the
    // sequence outlasts the frame its start slides into negative offsets.
    const double dur = double(ic.n_sweeps) * ic.sweep_duration;
    const double lo = std::min(0.0, frame - dur);
    const double hi = std::max(0.0, frame - dur);
    ic.time_offset = rng.uniform(lo, hi);
    ics.push_back(ic);
  }
  return ics;
}

std::vector<InterfererConfig> sample_interferers(std::uint64_t rng_seed,
                                                 const RadarConfig& cfg) {
  Rng rng(rng_seed);
  return sample_interferers(rng, cfg);
}

InterferenceResult synthesize_interference(
    const std::vector<InterfererConfig>& ics, const RadarConfig& cfg,
    double reference_power) {
  cfg.validate();
  if (ics.empty()) {
    throw std::invalid_argument(
        "synthesize_interference: interferer list is empty");
  }
  const std::size_t nr = cfg.n_range;
  const std::size_t nd = cfg.n_doppler;
  const std::size_t na = cfg.n_antennas;
  const double half_band = cfg.sample_rate / 2.0;
  const double ego_slope = cfg.slope();

  InterferenceResult res{ComplexTensor({nr, nd, na}), BoolMap(nr, nd)};
  std::vector<std::complex<double>> acc(nr * nd * na, {0.0, 0.0});
  std::vector<std::complex<double>> steer(na);

  for (const InterfererConfig& ic : ics) {
    if (ic.sweep_duration <= 0.0 || ic.bandwidth <= 0.0 ||
        ic.n_sweeps <= 0) {
      throw std::invalid_argument(
          "synthesize_interference: invalid interferer parameters");
    }
    const double amp =
        reference_power > 0.0
            ? std::sqrt(reference_power) * std::pow(10.0, ic.snir_db / 20.0)
            : 1.0;
    const double k_int = ic.bandwidth / ic.sweep_duration;
    // Instantaneous-frequency slope of the interferer chirp, and the slope
    // of the beat frequency f_delta = f_int - f_ego within one segment
    // where both chirps are linear.
    const double slope_int = ic.chirp_slope_sign >= 0 ? k_int : -k_int;
    const double slope_rel = slope_int - ego_slope;
    const double seq_duration = double(ic.n_sweeps) * ic.sweep_duration;
    const double sin_aoa = std::sin(ic.aoa_deg * kDegToRad);
    for (std::size_t a = 0; a < na; ++a) {
      steer[a] = std::polar(
          1.0, -kTwoPi * cfg.antenna_spacing * double(a) * sin_aoa);
    }

    for (std::size_t m = 0; m < nd; ++m) {
      const double sweep_start = double(m) * cfg.sweep_duration;
      for (std::size_t n = 0; n < nr; ++n) {
        const double in_sweep = double(n) / cfg.sample_rate;
        const double t = sweep_start + in_sweep;
        const double tau = t - ic.time_offset;  // time into the sequence
        if (tau < 0.0 || tau >= seq_duration) continue;
        const double q = std::floor(tau / ic.sweep_duration);
        const double tq = tau - q * ic.sweep_duration;  // time into chirp q
        const double f_int = ic.chirp_slope_sign >= 0
                                 ? ic.start_freq + k_int * tq
                                 : ic.start_freq + ic.bandwidth - k_int * tq;
        const double f_ego = cfg.carrier_freq + ego_slope * in_sweep;
        const double f_delta = f_int - f_ego;
        if (std::abs(f_delta) >= half_band) continue;
        // Phase = 2pi * integral of f_delta over the segment. Anchoring the
        // integral at the segment's zero crossing gives pi f_delta^2 /
        // slope_rel; for parallel chirps f_delta is constant and the phase
        // ramps linearly from the chirp start.
        const double phase = slope_rel != 0.0
                                 ? kPi * f_delta * f_delta / slope_rel
                                 : kTwoPi * f_delta * tq;
        const std::complex<double> burst = std::polar(amp, phase);
        std::complex<double>* dst = &acc[(n * nd + m) * na];
        for (std::size_t a = 0; a < na; ++a) {
          dst[a] += burst * steer[a];
        }
        res.mask.at(n, m) = 1;
      }
    }
  }

  for (std::size_t i = 0; i < acc.size(); ++i) {
    res.cube[i] = cfloat(float(acc[i].real()), float(acc[i].imag()));
  }
  return res;
}

ComplexTensor mix_at_snir(const ComplexTensor& clean,
                          const ComplexTensor& interference, double snir_db) {
  if (clean.shape() != interference.shape()) {
    throw std::invalid_argument("mix_at_snir: shape mismatch");
  }
  const double p_clean = power_sum(clean);
  const double p_int = power_sum(interference);
  if (p_int <= 0.0) {
    throw std::invalid_argument("mix_at_snir: interference power is zero");
  }
  const double gain =
      std::sqrt(p_clean / (p_int * std::pow(10.0, snir_db / 10.0)));
  ComplexTensor out = clean;
  add_scaled_inplace(out, interference, cfloat(float(gain), 0.0f));
  return out;
}

}  // namespace radarim
