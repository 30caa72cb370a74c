//! Cooperative amplify-and-forward link: per-branch SINRs at the destination,
//! the maximum-ratio-combined rate and the rate constraint.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot_t, norm_sqr, CVector, C64};
use crate::propagation::ChannelSet;

/// Transmit beamformers: one `u_k` per data stream plus the radar beam `v`.
/// Symbols are unit power, so beam norms carry the transmit power.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    comm: Vec<CVector>,
    radar: CVector,
}

impl BeamformerSet {
    pub fn new(comm: Vec<CVector>, radar: CVector) -> Result<Self> {
        let n = radar.len();
        if n == 0 {
            return Err(Error::invalid("radar_beam", "must have at least one entry"));
        }
        if let Some(u) = comm.iter().find(|u| u.len() != n) {
            return Err(Error::invalid(
                "comm_beams",
                format!("length {} differs from radar beam length {n}", u.len()),
            ));
        }
        let set = BeamformerSet { comm, radar };
        if !set.total_power().is_finite() {
            return Err(Error::invalid("beams", "total power is not finite"));
        }
        Ok(set)
    }

    /// One silent data stream and a silent radar beam.
    pub fn zeros(n: usize) -> Self {
        BeamformerSet {
            comm: vec![CVector::zeros(n)],
            radar: CVector::zeros(n),
        }
    }

    /// Fixed matched directions with power `p` split as `(1−ρ)·p` on
    /// maximum-ratio transmission toward the destination and `ρ·p` on the
    /// conjugate target steering vector.
    pub fn matched(h_sd: &CVector, target_steering: &CVector, power: f64, rho: f64) -> Result<Self> {
        if !(power >= 0.0 && power.is_finite()) {
            return Err(Error::invalid("power", format!("must be >= 0, got {power}")));
        }
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::invalid("rho", format!("must lie in [0, 1], got {rho}")));
        }
        let hn = h_sd.norm();
        let an = target_steering.norm();
        if hn == 0.0 || an == 0.0 {
            return Err(Error::invalid("h_sd", "matched directions need non-zero vectors"));
        }
        let u = h_sd.map(|z| z.conj()) * C64::new(((1.0 - rho) * power).sqrt() / hn, 0.0);
        let v = target_steering.map(|z| z.conj()) * C64::new((rho * power).sqrt() / an, 0.0);
        BeamformerSet::new(vec![u], v)
    }

    pub fn n_antennas(&self) -> usize {
        self.radar.len()
    }

    pub fn comm(&self) -> &[CVector] {
        &self.comm
    }

    pub fn radar(&self) -> &CVector {
        &self.radar
    }

    /// `Σ‖u_k‖² + ‖v‖²`.
    pub fn total_power(&self) -> f64 {
        self.comm.iter().map(norm_sqr).sum::<f64>() + norm_sqr(&self.radar)
    }

    /// Transmitted vector `x = Σ u_k s_k + v s_0`.
    pub fn waveform(&self, comm_symbols: &[C64], radar_symbol: C64) -> CVector {
        assert_eq!(comm_symbols.len(), self.comm.len(), "one symbol per data stream");
        let mut x = &self.radar * radar_symbol;
        for (u, s) in self.comm.iter().zip(comm_symbols) {
            x += u * *s;
        }
        x
    }

    /// Waveform with every symbol equal to one.
    pub fn unit_waveform(&self) -> CVector {
        self.waveform(&vec![C64::new(1.0, 0.0); self.comm.len()], C64::new(1.0, 0.0))
    }

    /// Every beam multiplied by `c`.
    pub fn scaled(&self, c: f64) -> BeamformerSet {
        let k = C64::new(c, 0.0);
        BeamformerSet {
            comm: self.comm.iter().map(|u| u * k).collect(),
            radar: &self.radar * k,
        }
    }
}

/// Relay amplification and the power budget it was normalised to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelayGain {
    pub f_rd: f64,
    pub relay_power_budget: f64,
}

/// Whether the relayed SINR counts the forwarded radar signal as interference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelayMode {
    /// Relay noise and destination noise only.
    #[default]
    NoiseOnly,
    /// Adds `|h_rd·f·h_srᵀv|²` to the denominator.
    Strict,
}

/// Amplify-and-forward gain that scales the relay's received power
/// (all streams, radar beam and noise) to `relay_power_budget`.
pub fn af_gain(
    h_sr: &CVector,
    beams: &BeamformerSet,
    noise_var_relay: f64,
    relay_power_budget: f64,
) -> Result<RelayGain> {
    if !(relay_power_budget > 0.0) {
        return Err(Error::invalid(
            "relay_power_budget",
            format!("must be > 0, got {relay_power_budget}"),
        ));
    }
    let received: f64 = beams.comm.iter().map(|u| dot_t(h_sr, u).norm_sqr()).sum::<f64>()
        + dot_t(h_sr, &beams.radar).norm_sqr()
        + noise_var_relay;
    Ok(RelayGain {
        f_rd: (relay_power_budget / received).sqrt(),
        relay_power_budget,
    })
}

/// Direct-path SINR of stream `k`: `|h_sdᵀu_k|² / (|h_sdᵀv|² + N_d)`.
pub fn sinr_direct(h_sd: &CVector, beams: &BeamformerSet, k: usize, noise_var_dest: f64) -> f64 {
    dot_t(h_sd, &beams.comm[k]).norm_sqr() / (dot_t(h_sd, &beams.radar).norm_sqr() + noise_var_dest)
}

/// Relayed-path SINR of stream `k`:
/// `|h_rd·f·h_srᵀu_k|² / (|h_rd·f|²·N_r + N_d)`, plus the forwarded radar term
/// in [`RelayMode::Strict`].
pub fn sinr_relayed(
    h_rd: C64,
    gain: &RelayGain,
    h_sr: &CVector,
    beams: &BeamformerSet,
    k: usize,
    noise_var_relay: f64,
    noise_var_dest: f64,
    mode: RelayMode,
) -> f64 {
    let hf = h_rd * gain.f_rd;
    let signal = (hf * dot_t(h_sr, &beams.comm[k])).norm_sqr();
    let mut denom = hf.norm_sqr() * noise_var_relay + noise_var_dest;
    if mode == RelayMode::Strict {
        denom += (hf * dot_t(h_sr, &beams.radar)).norm_sqr();
    }
    signal / denom
}

/// `log2(1 + γ_sd + γ_rd)` in bits/s/Hz.
pub fn mrc_rate(sinr_d: f64, sinr_r: f64) -> f64 {
    (1.0 + sinr_d + sinr_r).log2()
}

/// SINR-sum threshold `Γ = 2^R − 1` for a target rate `R`.
pub fn rate_threshold(rate_target: f64) -> f64 {
    rate_target.exp2() - 1.0
}

pub fn rate_constraint_satisfied(sinr_d: f64, sinr_r: f64, gamma: f64) -> bool {
    sinr_d + sinr_r >= gamma
}

/// Branch SINRs and combined rate of stream 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkMetrics {
    pub sinr_direct: f64,
    pub sinr_relayed: f64,
    pub rate: f64,
}

pub fn link_metrics(
    ch: &ChannelSet,
    beams: &BeamformerSet,
    relay_power_budget: f64,
    mode: RelayMode,
) -> Result<LinkMetrics> {
    let gain = af_gain(&ch.h_sr, beams, ch.noise_var_relay, relay_power_budget)?;
    let d = sinr_direct(&ch.h_sd, beams, 0, ch.noise_var_dest);
    let r = sinr_relayed(
        ch.h_rd,
        &gain,
        &ch.h_sr,
        beams,
        0,
        ch.noise_var_relay,
        ch.noise_var_dest,
        mode,
    );
    Ok(LinkMetrics {
        sinr_direct: d,
        sinr_relayed: r,
        rate: mrc_rate(d, r),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::complex_normal;
    use crate::stats::derive_stream;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_vec<R: Rng>(rng: &mut R, n: usize, scale: f64) -> CVector {
        CVector::from_fn(n, |_, _| complex_normal(rng) * scale)
    }

    fn random_beams<R: Rng>(rng: &mut R, n: usize) -> BeamformerSet {
        let s = rng.random::<f64>() * 3.0;
        let t = rng.random::<f64>();
        BeamformerSet::new(vec![random_vec(rng, n, s)], random_vec(rng, n, t)).unwrap()
    }

    #[test]
    fn beams_reject_length_mismatch() {
        assert!(BeamformerSet::new(vec![CVector::zeros(3)], CVector::zeros(4)).is_err());
    }

    #[test]
    fn matched_beams_carry_requested_power() {
        let mut rng = derive_stream(2, 0);
        let h = random_vec(&mut rng, 5, 1.0);
        let a = random_vec(&mut rng, 5, 1.0);
        let b = BeamformerSet::matched(&h, &a, 2.5, 0.3).unwrap();
        assert!((b.total_power() - 2.5).abs() < 1e-12);
        assert!((norm_sqr(&b.radar) - 0.75).abs() < 1e-12);
        // MRT: h_sdᵀu is real positive and equals ‖h‖·√p_c.
        let g = dot_t(&h, &b.comm[0]);
        assert!((g - C64::new(h.norm() * 1.75f64.sqrt(), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn af_gain_trivial_cases() {
        let h = CVector::from_element(4, C64::new(0.3, -0.1));
        let g = af_gain(&h, &BeamformerSet::zeros(4), 1e-3, 0.2).unwrap();
        assert!((g.f_rd - (0.2f64 / 1e-3).sqrt()).abs() < 1e-12);
        let mut rng = derive_stream(1, 1);
        let b = random_beams(&mut rng, 4);
        let g1 = af_gain(&h, &b, 0.5, 1.0).unwrap();
        let g2 = af_gain(&h, &b, 0.5, 2.0).unwrap();
        assert!((g2.f_rd / g1.f_rd - 2f64.sqrt()).abs() < 1e-12);
        assert!(af_gain(&h, &b, 0.5, 0.0).is_err());
    }

    #[test]
    fn af_gain_meets_budget_on_random_inputs() {
        let mut rng = derive_stream(8, 0);
        for _ in 0..1000 {
            let n = rng.random_range(1..12);
            let h = random_vec(&mut rng, n, 1.0);
            let b = random_beams(&mut rng, n);
            let nr = 10f64.powf(rng.random_range(-6.0..1.0));
            let budget = 10f64.powf(rng.random_range(-3.0..2.0));
            let g = af_gain(&h, &b, nr, budget).unwrap();
            let rx = dot_t(&h, &b.comm[0]).norm_sqr() + dot_t(&h, &b.radar).norm_sqr() + nr;
            assert!((g.f_rd * g.f_rd * rx / budget - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sinr_direct_trivial_cases() {
        let h = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
        let u = CVector::from_vec(vec![C64::new(2.0, 0.0), C64::new(0.0, -1.0)]);
        let b = BeamformerSet::new(vec![u.clone()], CVector::zeros(2)).unwrap();
        assert!((sinr_direct(&h, &b, 0, 0.5) - 9.0 / 0.5).abs() < 1e-12);
        // hᵀu = 0 for u ∝ (1, j): orthogonal to conj(h).
        let ortho = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
        let b0 = BeamformerSet::new(vec![ortho], CVector::zeros(2)).unwrap();
        assert!(sinr_direct(&h, &b0, 0, 0.5).abs() < 1e-30);
        let b3 = BeamformerSet::new(vec![&u * C64::new(0.0, 3.0)], CVector::zeros(2)).unwrap();
        assert!((sinr_direct(&h, &b3, 0, 0.5) / sinr_direct(&h, &b, 0, 0.5) - 9.0).abs() < 1e-12);
    }

    #[test]
    fn sinr_relayed_trivial_cases() {
        let mut rng = derive_stream(4, 0);
        let h = random_vec(&mut rng, 5, 1.0);
        let b = random_beams(&mut rng, 5);
        let silent = RelayGain {
            f_rd: 0.0,
            relay_power_budget: 1.0,
        };
        assert_eq!(
            sinr_relayed(C64::new(0.7, 0.1), &silent, &h, &b, 0, 0.1, 0.1, RelayMode::NoiseOnly),
            0.0
        );
        let g = af_gain(&h, &b, 0.1, 1.0).unwrap();
        let limit = dot_t(&h, &b.comm[0]).norm_sqr() / 0.1;
        let near = sinr_relayed(C64::new(0.7, 0.1), &g, &h, &b, 0, 0.1, 1e-14, RelayMode::NoiseOnly);
        assert!((near / limit - 1.0).abs() < 1e-10);
    }

    /// Writes the destination's relayed sample as a linear combination of the
    /// independent unit-power sources (s, s0, relay noise, destination noise)
    /// and reads the SINR off the coefficients.
    fn relayed_oracle(h_rd: C64, f: f64, h: &CVector, b: &BeamformerSet, nr: f64, nd: f64, strict: bool) -> f64 {
        let relay_s = h
            .iter()
            .zip(b.comm[0].iter())
            .fold(C64::new(0.0, 0.0), |acc, (x, y)| acc + x * y);
        let relay_s0 = h
            .iter()
            .zip(b.radar.iter())
            .fold(C64::new(0.0, 0.0), |acc, (x, y)| acc + x * y);
        let coeff = [
            h_rd * f * relay_s,
            h_rd * f * relay_s0,
            h_rd * f * nr.sqrt(),
            C64::new(nd.sqrt(), 0.0),
        ];
        let interference = if strict { coeff[1].norm_sqr() } else { 0.0 };
        coeff[0].norm_sqr() / (coeff[2].norm_sqr() + coeff[3].norm_sqr() + interference)
    }

    #[test]
    fn sinr_relayed_matches_source_expansion() {
        let mut rng = derive_stream(6, 0);
        for _ in 0..500 {
            let n = rng.random_range(1..10);
            let h = random_vec(&mut rng, n, 1.0);
            let b = random_beams(&mut rng, n);
            let h_rd = complex_normal(&mut rng);
            let nr = rng.random_range(0.01..2.0);
            let nd = rng.random_range(0.01..2.0);
            let g = af_gain(&h, &b, nr, rng.random_range(0.1..5.0)).unwrap();
            for (mode, strict) in [(RelayMode::NoiseOnly, false), (RelayMode::Strict, true)] {
                let got = sinr_relayed(h_rd, &g, &h, &b, 0, nr, nd, mode);
                let want = relayed_oracle(h_rd, g.f_rd, &h, &b, nr, nd, strict);
                assert!((got - want).abs() <= 1e-12 * want.max(1e-300));
            }
        }
    }

    #[test]
    fn rate_trivial_values() {
        assert_eq!(mrc_rate(0.0, 0.0), 0.0);
        assert_eq!(mrc_rate(0.5, 0.5), 1.0);
        assert_eq!(mrc_rate(3.0, 0.0), 2.0);
        assert_eq!(rate_threshold(0.0), 0.0);
        assert_eq!(rate_threshold(1.0), 1.0);
        assert_eq!(rate_threshold(5.0), 31.0);
        assert!(rate_constraint_satisfied(31.0, 0.0, 31.0));
        assert!(!rate_constraint_satisfied(15.0, 15.0, 31.0));
    }

    proptest! {
        #[test]
        fn rate_constraint_agrees_with_rate(d in 0.0..1e4f64, r in 0.0..1e4f64, target in 0.0..14.0f64) {
            let gamma = rate_threshold(target);
            let by_rate = mrc_rate(d, r) >= target - 1e-12;
            let by_sum = rate_constraint_satisfied(d, r, gamma);
            // Only a sub-1e-12 band around the boundary may disagree.
            if by_rate != by_sum {
                prop_assert!((mrc_rate(d, r) - target).abs() < 1e-12);
            }
        }

        #[test]
        fn cooperation_never_hurts(d in 0.0..1e6f64, r in 0.0..1e6f64) {
            prop_assert!(mrc_rate(d, r) >= mrc_rate(d, 0.0));
        }

        #[test]
        fn radar_power_degrades_direct_sinr(seed in any::<u64>(), c1 in 0.0..10.0f64, c2 in 0.0..10.0f64) {
            let mut rng = derive_stream(seed, 0);
            let h = random_vec(&mut rng, 5, 1.0);
            let u = random_vec(&mut rng, 5, 1.0);
            let v = random_vec(&mut rng, 5, 1.0);
            let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
            let at = |c: f64| {
                let b = BeamformerSet::new(vec![u.clone()], &v * C64::new(c, 0.0)).unwrap();
                sinr_direct(&h, &b, 0, 0.3)
            };
            prop_assert!(at(hi) <= at(lo));
        }

        #[test]
        fn scaling_source_and_relay_power_helps(seed in any::<u64>(), c in 1.0..20.0f64) {
            let mut rng = derive_stream(seed, 1);
            let ch = ChannelSet::new(random_vec(&mut rng, 4, 1.0), random_vec(&mut rng, 4, 1.0), complex_normal(&mut rng), 0.2, 0.3).unwrap();
            let u = random_vec(&mut rng, 4, 1.0);
            let v = random_vec(&mut rng, 4, 0.5);
            let base = BeamformerSet::new(vec![u.clone()], v.clone()).unwrap();
            let boosted = BeamformerSet::new(vec![&u * C64::new(c, 0.0)], v).unwrap();
            let r0 = link_metrics(&ch, &base, 1.0, RelayMode::NoiseOnly).unwrap().rate;
            let r1 = link_metrics(&ch, &boosted, c * c, RelayMode::NoiseOnly).unwrap().rate;
            prop_assert!(r1 >= r0 - 1e-12);
        }

        #[test]
        fn relayed_sinr_phase_invariant(seed in any::<u64>(), phi in 0.0..std::f64::consts::TAU) {
            let mut rng = derive_stream(seed, 2);
            let h = random_vec(&mut rng, 6, 1.0);
            let b = random_beams(&mut rng, 6);
            let h_rd = complex_normal(&mut rng);
            let g = af_gain(&h, &b, 0.4, 1.0).unwrap();
            let rot = C64::from_polar(1.0, phi);
            let rb = BeamformerSet::new(vec![&b.comm[0] * rot], b.radar.clone()).unwrap();
            let base = sinr_relayed(h_rd, &g, &h, &b, 0, 0.4, 0.2, RelayMode::NoiseOnly);
            let rotated = sinr_relayed(h_rd * rot, &g, &(&h * rot), &rb, 0, 0.4, 0.2, RelayMode::NoiseOnly);
            prop_assert!((base - rotated).abs() <= 1e-12 * base.max(1e-300));
        }
    }
}
