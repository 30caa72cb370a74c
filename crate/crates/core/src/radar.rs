//! Monostatic near-field radar: two-way responses, clutter-plus-noise
//! covariance, the clutter-aware receive beamformer and SCNR.
//!
//! Receiver noise is unit variance, so beams passed here must already be
//! expressed in units of the radar noise power.

use nalgebra::SVD;
use rand::Rng;

use crate::array::{steering_vector, ArrayConfig, PolarPosition};
use crate::comm::BeamformerSet;
use crate::error::{Error, Result};
use crate::linalg::{complex_normal, dot_h, dot_t, norm_sqr, outer_h, CMatrix, CVector, C64};
use crate::propagation::{ClutterStatistics, Scene};

/// Two-way response `A = a·aᵀ` (plain transpose), kept in factored form.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMatrix {
    a: CVector,
}

impl ResponseMatrix {
    pub fn from_steering(a: CVector) -> Self {
        ResponseMatrix { a }
    }

    pub fn steering(&self) -> &CVector {
        &self.a
    }

    pub fn matrix(&self) -> CMatrix {
        &self.a * self.a.transpose()
    }

    /// `A·x = a·(aᵀx)`.
    pub fn apply(&self, x: &CVector) -> CVector {
        &self.a * dot_t(&self.a, x)
    }

    /// `wᴴ·A·x`.
    pub fn bilinear(&self, w: &CVector, x: &CVector) -> C64 {
        dot_h(w, &self.a) * dot_t(&self.a, x)
    }

    /// `aᵀ·R·conj(a)`, the transmit power `R` delivers to this direction
    /// (real and non-negative for Hermitian PSD `R`).
    pub fn illumination(&self, r_x: &CMatrix) -> f64 {
        let ac = self.a.map(|z| z.conj());
        dot_t(&self.a, &(r_x * ac)).re.max(0.0)
    }
}

pub fn response_matrix(cfg: &ArrayConfig, pos: &PolarPosition) -> ResponseMatrix {
    ResponseMatrix::from_steering(steering_vector(cfg, pos))
}

/// `R_x = Σ u_k u_kᴴ + v vᴴ` for independent unit-power symbols.
pub fn transmit_covariance(beams: &BeamformerSet) -> CMatrix {
    let v = beams.radar();
    let mut r = outer_h(v, v);
    for u in beams.comm() {
        r += outer_h(u, u);
    }
    r
}

/// Clutter-plus-noise covariance `W = I + Σ_l c_l·a_l·a_lᴴ`.
///
/// Each clutter term `σ_l²·A_l·R_x·A_lᴴ` collapses to a rank-one `c_l·a_l·a_lᴴ`
/// with `c_l = σ_l²·a_lᵀR_x·conj(a_l)`. Solves go through an SVD of the
/// square-root factor `G = [√c_l·a_l]`, which keeps full accuracy in the
/// noise subspace even when clutter exceeds noise by many orders of
/// magnitude.
#[derive(Debug, Clone)]
pub struct ClutterCovariance {
    n: usize,
    terms: Vec<(f64, CVector)>,
    /// Left singular vectors of `G` (`N × min(N, L)`).
    basis: CMatrix,
    /// Squared singular values of `G`.
    gains: Vec<f64>,
}

impl ClutterCovariance {
    /// Builds `I + Σ c_l·a_l·a_lᴴ` from `(c_l, a_l)` pairs.
    pub fn from_terms(n: usize, terms: Vec<(f64, CVector)>) -> Result<Self> {
        if let Some((c, a)) = terms
            .iter()
            .find(|(c, a)| a.len() != n || !(*c >= 0.0 && c.is_finite()))
        {
            return Err(Error::invalid(
                "clutter term",
                format!("need length {n} and finite c >= 0, got length {} and c = {c}", a.len()),
            ));
        }
        let terms: Vec<_> = terms.into_iter().filter(|(c, _)| *c > 0.0).collect();
        let (basis, gains) = if terms.is_empty() {
            (CMatrix::zeros(n, 0), Vec::new())
        } else {
            let g = CMatrix::from_fn(n, terms.len(), |i, j| terms[j].1[i] * terms[j].0.sqrt());
            let svd = SVD::try_new(g, true, false, f64::EPSILON, 0).ok_or(Error::SingularCovariance)?;
            let gains = svd.singular_values.iter().map(|s| s * s).collect();
            (svd.u.ok_or(Error::SingularCovariance)?, gains)
        };
        Ok(ClutterCovariance { n, terms, basis, gains })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Dense `W`, for inspection and tests.
    pub fn matrix(&self) -> CMatrix {
        let mut w = CMatrix::identity(self.n, self.n);
        for (c, a) in &self.terms {
            w += outer_h(a, a) * C64::new(*c, 0.0);
        }
        w
    }

    /// `wᴴ·W·w = ‖w‖² + Σ c_l·|a_lᴴw|²`.
    pub fn quad_form(&self, w: &CVector) -> f64 {
        norm_sqr(w) + self.terms.iter().map(|(c, a)| c * dot_h(a, w).norm_sqr()).sum::<f64>()
    }

    /// Splits `b` into its clutter-subspace coordinates and the orthogonal rest.
    fn split(&self, b: &CVector) -> (CVector, Option<CVector>) {
        let coords = self.basis.adjoint() * b;
        if self.basis.ncols() == self.n {
            (coords, None)
        } else {
            let rest = b - &self.basis * &coords;
            (coords, Some(rest))
        }
    }

    /// `W⁻¹·b`.
    pub fn solve(&self, b: &CVector) -> CVector {
        let (mut coords, rest) = self.split(b);
        for (z, g) in coords.iter_mut().zip(&self.gains) {
            *z /= 1.0 + g;
        }
        let mut out = &self.basis * coords;
        if let Some(rest) = rest {
            out += rest;
        }
        out
    }

    /// `bᴴ·W⁻¹·b`.
    pub fn inverse_quad_form(&self, b: &CVector) -> f64 {
        let (coords, rest) = self.split(b);
        let inside: f64 = coords
            .iter()
            .zip(&self.gains)
            .map(|(z, g)| z.norm_sqr() / (1.0 + g))
            .sum();
        inside + rest.map_or(0.0, |r| norm_sqr(&r))
    }

    /// Eigenvalues of `W` in descending order (all `≥ 1`).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.gains.iter().map(|g| 1.0 + g).collect();
        ev.resize(self.n, 1.0);
        ev
    }
}

/// Steering vectors of the scene's clutter scatterers.
pub fn clutter_responses(cfg: &ArrayConfig, scene: &Scene) -> Vec<ResponseMatrix> {
    scene
        .clutter
        .iter()
        .map(|c| response_matrix(cfg, &c.position))
        .collect()
}

/// `W = Σ_l σ_l²·A_l·R_x·A_lᴴ + I`.
pub fn clutter_covariance(cfg: &ArrayConfig, scene: &Scene, r_x: &CMatrix) -> Result<ClutterCovariance> {
    let n = cfg.n_antennas();
    if r_x.nrows() != n || r_x.ncols() != n {
        return Err(Error::invalid("r_x", format!("must be {n}×{n}")));
    }
    let terms = scene
        .clutter
        .iter()
        .zip(clutter_responses(cfg, scene))
        .map(|(c, resp)| (c.amplitude_scale.powi(2) * resp.illumination(r_x), resp.a))
        .collect();
    ClutterCovariance::from_terms(n, terms)
}

/// Covariance seen when the transmit waveform `x` is known:
/// `I + Σ σ_l²·|a_lᵀx|²·a_l·a_lᴴ`.
pub fn conditioned_covariance(cfg: &ArrayConfig, scene: &Scene, x: &CVector) -> Result<ClutterCovariance> {
    let terms = scene
        .clutter
        .iter()
        .zip(clutter_responses(cfg, scene))
        .map(|(c, resp)| (c.amplitude_scale.powi(2) * dot_t(&resp.a, x).norm_sqr(), resp.a))
        .collect();
    ClutterCovariance::from_terms(cfg.n_antennas(), terms)
}

/// `|α₀|²·|wᴴ·A·x|² / (wᴴ·W·w)`.
pub fn scnr(w: &CVector, alpha0: C64, target: &ResponseMatrix, cov: &ClutterCovariance, x: &CVector) -> Result<f64> {
    if w.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return Err(Error::ZeroBeamformer);
    }
    Ok(alpha0.norm_sqr() * target.bilinear(w, x).norm_sqr() / cov.quad_form(w))
}

/// `w* = W⁻¹·A·x`, unnormalised.
pub fn optimal_receive_beamformer(
    _alpha0: C64,
    target: &ResponseMatrix,
    cov: &ClutterCovariance,
    x: &CVector,
) -> CVector {
    cov.solve(&target.apply(x))
}

/// `|α₀|²·(A·x)ᴴ·W⁻¹·(A·x)`.
pub fn scnr_at_optimum(alpha0: C64, target: &ResponseMatrix, cov: &ClutterCovariance, x: &CVector) -> f64 {
    alpha0.norm_sqr() * cov.inverse_quad_form(&target.apply(x))
}

/// Symbol-averaged optimum SCNR `|α₀|²·tr(Aᴴ·W⁻¹·A·R_x)`, which factors into
/// `|α₀|²·(aᴴW⁻¹a)·(aᵀR_x·conj(a))`.
pub fn average_scnr(cfg: &ArrayConfig, beams: &BeamformerSet, scene: &Scene) -> Result<f64> {
    let r_x = transmit_covariance(beams);
    let cov = clutter_covariance(cfg, scene, &r_x)?;
    let target = response_matrix(cfg, &scene.target.position);
    Ok(average_scnr_with(scene.target.reflectivity, &target, &cov, &r_x))
}

pub fn average_scnr_with(alpha0: C64, target: &ResponseMatrix, cov: &ClutterCovariance, r_x: &CMatrix) -> f64 {
    alpha0.norm_sqr() * cov.inverse_quad_form(target.steering()) * target.illumination(r_x)
}

/// Unit-power QPSK symbol.
pub fn qpsk_symbol<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let im = if rng.random::<bool>() { 1.0 } else { -1.0 };
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// One received snapshot `α₀·A·x + Σ α_l·A_l·x + n` with fresh QPSK symbols,
/// clutter amplitudes drawn per `stats` and unit complex Gaussian noise.
pub fn radar_snapshot<R: Rng + ?Sized>(
    cfg: &ArrayConfig,
    scene: &Scene,
    beams: &BeamformerSet,
    stats: ClutterStatistics,
    rng: &mut R,
) -> CVector {
    let symbols: Vec<C64> = (0..beams.comm().len()).map(|_| qpsk_symbol(rng)).collect();
    let x = beams.waveform(&symbols, qpsk_symbol(rng));
    let mut s = response_matrix(cfg, &scene.target.position).apply(&x) * scene.target.reflectivity;
    for c in &scene.clutter {
        let alpha = c.draw_amplitude(stats, rng);
        s += response_matrix(cfg, &c.position).apply(&x) * alpha;
    }
    for z in s.iter_mut() {
        *z += complex_normal(rng);
    }
    s
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::linalg::hermitian_defect;
    use crate::propagation::{make_clutter_scene, Target};
    use crate::stats::derive_stream;
    use nalgebra::SymmetricEigen;
    use proptest::prelude::*;

    pub(crate) fn random_vec<R: rand::Rng>(rng: &mut R, n: usize) -> CVector {
        CVector::from_fn(n, |_, _| complex_normal(rng))
    }

    pub(crate) fn test_scene<R: rand::Rng>(rng: &mut R, l: usize, sigma: f64) -> Scene {
        let theta = rng.random_range(0.6..2.5);
        Scene {
            target: Target {
                position: PolarPosition::new(5.0, theta).unwrap(),
                reflectivity: C64::from_polar(rng.random_range(0.5..2.0), rng.random_range(0.0..6.0)),
            },
            clutter: make_clutter_scene(rng, l, 5.0, sigma, theta, 0.05).unwrap(),
        }
    }

    /// Largest generalised eigenvalue of `(|α|²·b·bᴴ, W)` via `W^{-1/2}`.
    pub(crate) fn generalized_eigen_oracle(alpha: C64, b: &CVector, w: &CMatrix) -> f64 {
        let eig = SymmetricEigen::new(w.clone());
        let inv_sqrt = CMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(1.0 / l.sqrt(), 0.0)));
        let w_isqrt = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.adjoint();
        let m = &w_isqrt * outer_h(b, b) * &w_isqrt * C64::new(alpha.norm_sqr(), 0.0);
        SymmetricEigen::new(m)
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn cfg(n: usize, f: f64) -> ArrayConfig {
        ArrayConfig::half_wavelength(n, f).unwrap()
    }

    #[test]
    fn response_matrix_basics() {
        let one = response_matrix(&cfg(1, 28e9), &PolarPosition::new(5.0, 1.0).unwrap());
        assert!((one.matrix()[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-15);
        let c = cfg(6, 28e9);
        let resp = response_matrix(&c, &PolarPosition::new(2.0, 0.7).unwrap());
        let a = resp.matrix();
        let tr: C64 = resp.steering().iter().map(|z| z * z).sum();
        assert!((a.trace() - tr).norm() < 1e-12);
        assert!((&a - a.transpose()).norm() < 1e-15);
        assert!(a.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        let sv = a.clone().singular_values();
        assert!(sv[1] < 1e-9 * sv[0]);
        let mut rng = derive_stream(0, 0);
        for _ in 0..100 {
            let x = random_vec(&mut rng, 6);
            assert!((&a * &x - resp.apply(&x)).norm() < 1e-12 * x.norm().max(1.0) * 6.0);
        }
    }

    #[test]
    fn transmit_covariance_trace_is_power() {
        assert_eq!(transmit_covariance(&BeamformerSet::zeros(4)), CMatrix::zeros(4, 4));
        let mut rng = derive_stream(1, 0);
        let u = random_vec(&mut rng, 4);
        let single = BeamformerSet::new(vec![u.clone()], CVector::zeros(4)).unwrap();
        let r = transmit_covariance(&single);
        assert!((r.trace().re - norm_sqr(&u)).abs() < 1e-12);
        assert!(r.clone().singular_values()[1] < 1e-12 * norm_sqr(&u));
        for _ in 0..200 {
            let b = BeamformerSet::new(
                vec![random_vec(&mut rng, 4), random_vec(&mut rng, 4)],
                random_vec(&mut rng, 4),
            )
            .unwrap();
            let r = transmit_covariance(&b);
            assert!((r.trace().re - b.total_power()).abs() < 1e-12 * b.total_power());
            assert!(hermitian_defect(&r) < 1e-12);
        }
    }

    #[test]
    fn covariance_trivial_cases() {
        let c = cfg(5, 28e9);
        let mut rng = derive_stream(2, 0);
        let scene = test_scene(&mut rng, 3, 0.8);
        let w = clutter_covariance(&c, &scene, &CMatrix::zeros(5, 5)).unwrap();
        assert_eq!(w.matrix(), CMatrix::identity(5, 5));
        let r =
            transmit_covariance(&BeamformerSet::new(vec![random_vec(&mut rng, 5)], random_vec(&mut rng, 5)).unwrap());
        let w = clutter_covariance(&c, &scene.clutter_free(), &r).unwrap();
        assert_eq!(w.matrix(), CMatrix::identity(5, 5));
    }

    #[test]
    fn covariance_matches_explicit_product() {
        let mut rng = derive_stream(3, 0);
        for n in [3, 5, 10] {
            let c = cfg(n, 28e9);
            for l in [1, 3, 12] {
                let scene = test_scene(&mut rng, l, 0.8);
                let beams = BeamformerSet::new(vec![random_vec(&mut rng, n)], random_vec(&mut rng, n)).unwrap();
                let r = transmit_covariance(&beams);
                let mut want = CMatrix::identity(n, n);
                for e in &scene.clutter {
                    let a = response_matrix(&c, &e.position).matrix();
                    want += &a * &r * a.adjoint() * C64::new(e.amplitude_scale.powi(2), 0.0);
                }
                let got = clutter_covariance(&c, &scene, &r).unwrap();
                let dense = got.matrix();
                assert!((&dense - &want).norm() < 1e-12 * want.norm());
                assert!(hermitian_defect(&dense) < 1e-12 * want.norm());
                let ev = SymmetricEigen::new(dense.clone()).eigenvalues;
                assert!(ev.iter().all(|&l| l >= 1.0 - 1e-9 * want.norm()));
                let mut mine = got.eigenvalues();
                let mut theirs: Vec<f64> = ev.iter().cloned().collect();
                mine.sort_by(f64::total_cmp);
                theirs.sort_by(f64::total_cmp);
                for (a, b) in mine.iter().zip(&theirs) {
                    assert!((a - b).abs() < 1e-10 * want.norm());
                }
                // Solves against a dense Cholesky at moderate conditioning.
                let b = random_vec(&mut rng, n);
                let z = got.solve(&b);
                assert!((&dense * &z - &b).norm() < 1e-10 * b.norm());
                let q = dot_h(&b, &z).re;
                assert!((got.inverse_quad_form(&b) - q).abs() < 1e-10 * q);
                assert!((got.quad_form(&b) - dot_h(&b, &(&dense * &b)).re).abs() < 1e-10 * got.quad_form(&b));
            }
        }
    }

    #[test]
    fn inverse_quad_form_accurate_at_extreme_clutter() {
        // Target in the noise subspace of a single strong clutter direction:
        // the exact value is ‖b_⊥‖² + |aᴴb|²/(‖a‖²(1 + c‖a‖²)).
        let c = cfg(5, 28e9);
        let a = steering_vector(&c, &PolarPosition::new(2.0, 1.0).unwrap());
        let t = steering_vector(&c, &PolarPosition::new(5.0, 2.0).unwrap());
        let big = 1e14;
        let cov = ClutterCovariance::from_terms(5, vec![(big, a.clone())]).unwrap();
        let proj = dot_h(&a, &t) / norm_sqr(&a);
        let perp = &t - &a * proj;
        let exact = norm_sqr(&perp) + dot_h(&a, &t).norm_sqr() / (norm_sqr(&a) * (1.0 + big * norm_sqr(&a)));
        assert!((cov.inverse_quad_form(&t) / exact - 1.0).abs() < 1e-9);
    }

    #[test]
    fn covariance_matches_snapshot_sample_covariance() {
        let c = cfg(5, 28e9);
        let mut rng = derive_stream(4, 0);
        let scene = test_scene(&mut rng, 3, 0.8).without_target();
        let beams = BeamformerSet::new(vec![random_vec(&mut rng, 5)], random_vec(&mut rng, 5)).unwrap();
        let w = clutter_covariance(&c, &scene, &transmit_covariance(&beams))
            .unwrap()
            .matrix();
        let trials = 100_000;
        let mut acc = CMatrix::zeros(5, 5);
        for _ in 0..trials {
            let s = radar_snapshot(&c, &scene, &beams, ClutterStatistics::Gaussian, &mut rng);
            acc += outer_h(&s, &s);
        }
        acc /= C64::new(trials as f64, 0.0);
        let rel = (&acc - &w).norm() / w.norm();
        assert!(rel < 0.02, "relative Frobenius error {rel}");
    }

    #[test]
    fn snapshot_noise_only_and_determinism() {
        let c = cfg(4, 28e9);
        let mut rng = derive_stream(5, 0);
        let scene = test_scene(&mut rng, 0, 0.0).without_target();
        let beams = BeamformerSet::zeros(4);
        let trials = 100_000;
        let mut acc = CMatrix::zeros(4, 4);
        let mut mean = CVector::zeros(4);
        for _ in 0..trials {
            let s = radar_snapshot(&c, &scene, &beams, ClutterStatistics::Gaussian, &mut rng);
            acc += outer_h(&s, &s);
            mean += s;
        }
        acc /= C64::new(trials as f64, 0.0);
        mean /= C64::new(trials as f64, 0.0);
        assert!((&acc - CMatrix::identity(4, 4)).norm() / 2.0 < 0.02);
        assert!(mean.norm() < 3.0 * (4.0 / trials as f64).sqrt());

        let scene = test_scene(&mut derive_stream(6, 0), 3, 0.8);
        let beams = BeamformerSet::new(
            vec![CVector::from_element(4, C64::new(1.0, 0.0))],
            CVector::from_element(4, C64::new(0.0, 1.0)),
        )
        .unwrap();
        let draw = || {
            let mut r = derive_stream(6, 1);
            (0..10)
                .map(|_| radar_snapshot(&c, &scene, &beams, ClutterStatistics::Gaussian, &mut r))
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn snapshot_mean_is_zero_with_clutter() {
        let c = cfg(5, 28e9);
        let mut rng = derive_stream(7, 0);
        let scene = test_scene(&mut rng, 3, 0.8);
        let beams = BeamformerSet::new(vec![random_vec(&mut rng, 5)], random_vec(&mut rng, 5)).unwrap();
        let r_x = transmit_covariance(&beams);
        let w = clutter_covariance(&c, &scene, &r_x).unwrap();
        let target_power =
            scene.target.reflectivity.norm_sqr() * response_matrix(&c, &scene.target.position).illumination(&r_x) * 5.0;
        let trials = 50_000;
        let mut mean = CVector::zeros(5);
        for _ in 0..trials {
            mean += radar_snapshot(&c, &scene, &beams, ClutterStatistics::Gaussian, &mut rng);
        }
        mean /= C64::new(trials as f64, 0.0);
        // Per-entry variance is bounded by the largest eigenvalue plus target power.
        let scale = (w.eigenvalues()[0] + target_power).sqrt();
        assert!(mean.norm() < 3.0 * scale * (5.0 / trials as f64).sqrt());
    }

    #[test]
    fn scnr_trivial_cases() {
        let c = cfg(5, 28e9);
        let mut rng = derive_stream(8, 0);
        let scene = test_scene(&mut rng, 0, 0.0);
        let target = response_matrix(&c, &scene.target.position);
        let x = random_vec(&mut rng, 5);
        let eye = ClutterCovariance::from_terms(5, vec![]).unwrap();
        let alpha = scene.target.reflectivity;
        let ax = target.apply(&x);
        // Matched filter w = A·x.
        let s = scnr(&ax, alpha, &target, &eye, &x).unwrap();
        assert!((s / (alpha.norm_sqr() * norm_sqr(&ax)) - 1.0).abs() < 1e-12);
        assert_eq!(scnr(&ax, C64::new(0.0, 0.0), &target, &eye, &x).unwrap(), 0.0);
        assert!(matches!(
            scnr(&CVector::zeros(5), alpha, &target, &eye, &x),
            Err(Error::ZeroBeamformer)
        ));
        let w = optimal_receive_beamformer(alpha, &target, &eye, &x);
        assert!((&w - &ax).norm() < 1e-12 * ax.norm());
        assert!((scnr_at_optimum(alpha, &target, &eye, &x) / (alpha.norm_sqr() * norm_sqr(&ax)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn optimum_beats_random_and_matches_eigen_oracle() {
        let mut rng = derive_stream(9, 0);
        for (n, l, sigma) in [(5, 3, 0.8), (10, 1, 0.1), (5, 0, 0.0), (10, 3, 0.8)] {
            let c = cfg(n, 28e9);
            let scene = test_scene(&mut rng, l, sigma);
            let beams = BeamformerSet::new(vec![random_vec(&mut rng, n)], random_vec(&mut rng, n)).unwrap();
            let x = beams.unit_waveform();
            let cov = clutter_covariance(&c, &scene, &transmit_covariance(&beams)).unwrap();
            let target = response_matrix(&c, &scene.target.position);
            let alpha = scene.target.reflectivity;
            let w = optimal_receive_beamformer(alpha, &target, &cov, &x);
            let best = scnr(&w, alpha, &target, &cov, &x).unwrap();
            let closed = scnr_at_optimum(alpha, &target, &cov, &x);
            assert!((best / closed - 1.0).abs() < 1e-12);
            let oracle = generalized_eigen_oracle(alpha, &target.apply(&x), &cov.matrix());
            assert!((best / oracle - 1.0).abs() < 1e-9, "{best} vs {oracle}");
            for _ in 0..2000 {
                let mut r = random_vec(&mut rng, n);
                r /= C64::new(r.norm(), 0.0);
                assert!(scnr(&r, alpha, &target, &cov, &x).unwrap() <= best * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn optimum_non_increasing_in_clutter_scale() {
        let c = cfg(5, 28e9);
        let mut rng = derive_stream(10, 0);
        for _ in 0..10 {
            let scene = test_scene(&mut rng, 3, 0.0);
            let x = random_vec(&mut rng, 5);
            let target = response_matrix(&c, &scene.target.position);
            let mut prev = f64::INFINITY;
            for k in 0..=40 {
                let s = scene.with_clutter_scale(k as f64 * 0.05);
                let cov = conditioned_covariance(&c, &s, &x).unwrap();
                let v = scnr_at_optimum(s.target.reflectivity, &target, &cov, &x);
                assert!(v <= prev * (1.0 + 1e-12));
                prev = v;
            }
        }
    }

    #[test]
    fn average_scnr_trivial_and_linear() {
        let c = cfg(5, 28e9);
        let mut rng = derive_stream(11, 0);
        let scene = test_scene(&mut rng, 3, 0.8);
        assert_eq!(average_scnr(&c, &BeamformerSet::zeros(5), &scene).unwrap(), 0.0);
        let beams = BeamformerSet::new(vec![random_vec(&mut rng, 5)], random_vec(&mut rng, 5)).unwrap();
        let free = scene.clutter_free();
        let base = average_scnr(&c, &beams, &free).unwrap();
        for k in [0.01f64, 0.5, 3.0, 1e4] {
            let scaled = average_scnr(&c, &beams.scaled(k.sqrt()), &free).unwrap();
            assert!((scaled / (k * base) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn average_scnr_matches_trace_form() {
        let c = cfg(5, 28e9);
        let mut rng = derive_stream(12, 0);
        let scene = test_scene(&mut rng, 3, 0.8);
        let beams = BeamformerSet::new(vec![random_vec(&mut rng, 5)], random_vec(&mut rng, 5)).unwrap();
        let r_x = transmit_covariance(&beams);
        let cov = clutter_covariance(&c, &scene, &r_x).unwrap();
        let a = response_matrix(&c, &scene.target.position).matrix();
        let w_inv = cov.matrix().try_inverse().unwrap();
        let tr = (a.adjoint() * w_inv * &a * &r_x).trace();
        let want = scene.target.reflectivity.norm_sqr() * tr.re;
        assert!(tr.im.abs() < 1e-9 * tr.re);
        assert!((average_scnr(&c, &beams, &scene).unwrap() / want - 1.0).abs() < 1e-10);
    }

    #[test]
    fn average_scnr_matches_symbol_average() {
        let c = cfg(5, 28e9);
        let mut rng = derive_stream(13, 0);
        let scene = test_scene(&mut rng, 3, 0.8);
        let beams = BeamformerSet::new(vec![random_vec(&mut rng, 5)], random_vec(&mut rng, 5)).unwrap();
        let r_x = transmit_covariance(&beams);
        let cov = clutter_covariance(&c, &scene, &r_x).unwrap();
        let target = response_matrix(&c, &scene.target.position);
        let trials = 100_000;
        let mut sum = 0.0;
        for _ in 0..trials {
            let x = beams.waveform(&[qpsk_symbol(&mut rng)], qpsk_symbol(&mut rng));
            sum += scnr_at_optimum(scene.target.reflectivity, &target, &cov, &x);
        }
        let mc = sum / trials as f64;
        let avg = average_scnr(&c, &beams, &scene).unwrap();
        assert!((mc / avg - 1.0).abs() < 0.01, "mc {mc} vs {avg}");
    }

    proptest! {
        #[test]
        fn scnr_scale_invariant(seed in any::<u64>(), re in -5.0..5.0f64, im in -5.0..5.0f64) {
            prop_assume!(re.abs() + im.abs() > 1e-3);
            let c = cfg(5, 28e9);
            let mut rng = derive_stream(seed, 0);
            let scene = test_scene(&mut rng, 3, 0.8);
            let x = random_vec(&mut rng, 5);
            let cov = conditioned_covariance(&c, &scene, &x).unwrap();
            let target = response_matrix(&c, &scene.target.position);
            let w = random_vec(&mut rng, 5);
            let s1 = scnr(&w, scene.target.reflectivity, &target, &cov, &x).unwrap();
            let s2 = scnr(&(&w * C64::new(re, im)), scene.target.reflectivity, &target, &cov, &x).unwrap();
            prop_assert!((s1 - s2).abs() <= 1e-12 * s1.max(1e-300));
        }

        #[test]
        fn covariance_is_hermitian_with_floor(seed in any::<u64>(), l in 0usize..8, sigma in 0.0..2.0f64) {
            let c = cfg(5, 28e9);
            let mut rng = derive_stream(seed, 1);
            let scene = test_scene(&mut rng, l, sigma);
            let beams = BeamformerSet::new(vec![random_vec(&mut rng, 5)], random_vec(&mut rng, 5)).unwrap();
            let cov = clutter_covariance(&c, &scene, &transmit_covariance(&beams)).unwrap();
            let m = cov.matrix();
            prop_assert!(hermitian_defect(&m) <= 1e-12 * m.norm());
            let ev = SymmetricEigen::new(m.clone()).eigenvalues;
            prop_assert!(ev.iter().all(|&e| e >= 1.0 - 1e-10 * m.norm()));
        }
    }
}
