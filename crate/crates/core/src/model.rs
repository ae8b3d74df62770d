//! Physical quantities of the IRS-assisted MISO link: channels, SNR,
//! harvested power, outage, and seeded generation of synthetic channel
//! realizations and uncertainty-set samples.

use crate::error::{Error, Result};
use crate::linalg::{fro_norm, C64, CMat, CVec};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Static network parameters: array sizes, geometry, path loss and the
/// receiver/IRS requirements.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkGeometry {
    /// AP antenna count.
    pub m: usize,
    /// IRS element count.
    pub n: usize,
    /// AP-receiver distance (m).
    pub d0: f64,
    /// AP-IRS distance (m).
    pub d1: f64,
    /// IRS-receiver distance (m).
    pub d2: f64,
    /// Reference path loss (dB).
    pub l0_db: f64,
    /// Path loss exponent.
    pub path_exponent: f64,
    /// Energy harvesting efficiency, in (0, 1].
    pub eta: f64,
    /// Per-element power consumption (W).
    pub mu: f64,
    /// Receiver SNR requirement, linear scale.
    pub gamma1: f64,
}

impl NetworkGeometry {
    /// Desk-scale defaults: M = 4, N = 8, d0 = d1 = 1 m, d2 = 2 m,
    /// L0 = 30 dB at 1 m, exponent 2, eta = 0.8.
    pub fn desk_default() -> Self {
        NetworkGeometry {
            m: 4,
            n: 8,
            d0: 1.0,
            d1: 1.0,
            d2: 2.0,
            l0_db: 30.0,
            path_exponent: 2.0,
            eta: 0.8,
            mu: 0.01,
            gamma1: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::InvalidArgument("M and N must be positive".into()));
        }
        if self.d0 <= 0.0 || self.d1 <= 0.0 || self.d2 <= 0.0 {
            return Err(Error::InvalidArgument("distances must be positive".into()));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::InvalidArgument("eta must lie in (0, 1]".into()));
        }
        if self.mu < 0.0 {
            return Err(Error::InvalidArgument("mu must be nonnegative".into()));
        }
        if self.gamma1 <= 0.0 {
            return Err(Error::InvalidArgument("gamma1 must be positive".into()));
        }
        Ok(())
    }

    /// Average per-entry power gain of a link at distance `d` under the
    /// log-distance model.
    pub fn path_gain(&self, d: f64) -> f64 {
        let loss_db = self.l0_db + 10.0 * self.path_exponent * d.log10();
        10f64.powf(-loss_db / 10.0)
    }

    /// Amplitude scale (sqrt of power gain) of a link at distance `d`.
    pub fn amp(&self, d: f64) -> f64 {
        self.path_gain(d).sqrt()
    }
}

/// One draw of the three links plus the cascaded matrix
/// `H_f = [f_1 h_1, ..., f_N h_N]`.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// AP-receiver channel, length M.
    pub g: CVec,
    /// AP-IRS channel, M x N (columns h_n).
    pub h: CMat,
    /// IRS-receiver channel, length N.
    pub f: CVec,
    /// Cascaded AP-IRS-receiver channel, column n = f_n * h_n.
    pub h_f: CMat,
}

impl ChannelRealization {
    /// Builds the cascaded matrix from the raw links.
    pub fn from_links(g: CVec, h: CMat, f: CVec) -> Result<Self> {
        let m = g.len();
        if h.nrows() != m {
            return Err(Error::DimensionMismatch(format!(
                "H has {} rows, expected {}",
                h.nrows(),
                m
            )));
        }
        if h.ncols() != f.len() {
            return Err(Error::DimensionMismatch(format!(
                "H has {} columns but f has length {}",
                h.ncols(),
                f.len()
            )));
        }
        let mut h_f = h.clone();
        for (n, fv) in f.iter().enumerate() {
            let mut col = h_f.column_mut(n);
            col *= *fv;
        }
        Ok(ChannelRealization { g, h, f, h_f })
    }
}

/// Mean channel estimates with Frobenius-ball radii for the two uncertain
/// links.
#[derive(Debug, Clone)]
pub struct UncertaintyModel {
    pub h_bar: CMat,
    pub hf_bar: CMat,
    pub delta_h: f64,
    pub delta_f: f64,
}

impl UncertaintyModel {
    pub fn validate(&self) -> Result<()> {
        if self.delta_h < 0.0 || self.delta_f < 0.0 {
            return Err(Error::InvalidArgument("radii must be nonnegative".into()));
        }
        if self.h_bar.shape() != self.hf_bar.shape() {
            return Err(Error::DimensionMismatch(
                "H_bar and Hf_bar must share dimensions".into(),
            ));
        }
        Ok(())
    }

    /// Exact mean model with zero radii.
    pub fn exact(ch: &ChannelRealization) -> Self {
        UncertaintyModel {
            h_bar: ch.h.clone(),
            hf_bar: ch.h_f.clone(),
            delta_h: 0.0,
            delta_f: 0.0,
        }
    }
}

/// Which uncertain link a ball sample refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UncertainLink {
    ApIrs,
    Cascaded,
}

/// Joint action: transmit beamformer, unit-modulus phase vector, common
/// power-splitting ratio.
#[derive(Debug, Clone)]
pub struct BeamformingAction {
    pub w: CVec,
    pub theta: CVec,
    pub rho: f64,
}

impl BeamformingAction {
    pub fn validate(&self) -> Result<()> {
        for t in self.theta.iter() {
            if (t.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "theta entry has modulus {}",
                    t.norm()
                )));
            }
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::InvalidArgument(format!("rho = {} not in (0,1)", self.rho)));
        }
        Ok(())
    }
}

fn check_effective_dims(g: &CVec, h_f: &CMat, theta: &CVec) -> Result<()> {
    if h_f.nrows() != g.len() || h_f.ncols() != theta.len() {
        return Err(Error::DimensionMismatch(format!(
            "g: {}, H_f: {}x{}, theta: {}",
            g.len(),
            h_f.nrows(),
            h_f.ncols(),
            theta.len()
        )));
    }
    Ok(())
}

/// IRS-assisted effective channel `g + rho * H_f * theta`.
pub fn effective_channel(g: &CVec, h_f: &CMat, theta: &CVec, rho: f64) -> Result<CVec> {
    check_effective_dims(g, h_f, theta)?;
    Ok(g + (h_f * theta).scale(rho))
}

/// Received SNR `|g_hat^H w|^2` with noise normalized to 1.
pub fn received_snr(ch: &ChannelRealization, action: &BeamformingAction) -> Result<f64> {
    let g_hat = effective_channel(&ch.g, &ch.h_f, &action.theta, action.rho)?;
    if action.w.len() != g_hat.len() {
        return Err(Error::DimensionMismatch(format!(
            "w has length {}, expected {}",
            action.w.len(),
            g_hat.len()
        )));
    }
    Ok((g_hat.adjoint() * &action.w)[(0, 0)].norm_sqr())
}

/// Power harvested by the IRS: `eta * (1 - rho^2) * ||H^H w||^2`.
pub fn harvested_power(
    ch: &ChannelRealization,
    action: &BeamformingAction,
    geometry: &NetworkGeometry,
) -> Result<f64> {
    if ch.h.nrows() != action.w.len() {
        return Err(Error::DimensionMismatch(format!(
            "H has {} rows but w has length {}",
            ch.h.nrows(),
            action.w.len()
        )));
    }
    let proj = ch.h.adjoint() * &action.w;
    Ok(geometry.eta * (1.0 - action.rho * action.rho) * proj.norm_squared())
}

/// Outage: the realized channel violates the SNR requirement or the IRS
/// power budget.
pub fn check_outage(
    true_ch: &ChannelRealization,
    action: &BeamformingAction,
    geometry: &NetworkGeometry,
) -> Result<bool> {
    let snr = received_snr(true_ch, action)?;
    let harvest = harvested_power(true_ch, action, geometry)?;
    Ok(snr < geometry.gamma1 || harvest < geometry.n as f64 * geometry.mu)
}

fn complex_gaussian_entry<R: Rng + ?Sized>(rng: &mut R, amp: f64) -> C64 {
    // circularly-symmetric with E|z|^2 = amp^2
    let s = amp / 2f64.sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * s, im * s)
}

/// Draws one i.i.d. Rayleigh realization of all three links under the
/// log-distance path-loss model.
pub fn sample_channel<R: Rng + ?Sized>(geometry: &NetworkGeometry, rng: &mut R) -> ChannelRealization {
    let (m, n) = (geometry.m, geometry.n);
    let ag = geometry.amp(geometry.d0);
    let ah = geometry.amp(geometry.d1);
    let af = geometry.amp(geometry.d2);
    let g = CVec::from_fn(m, |_, _| complex_gaussian_entry(rng, ag));
    let h = CMat::from_fn(m, n, |_, _| complex_gaussian_entry(rng, ah));
    let f = CVec::from_fn(n, |_, _| complex_gaussian_entry(rng, af));
    ChannelRealization::from_links(g, h, f).expect("consistent dimensions by construction")
}

/// Draws `mean + Delta` with `Delta` uniform in the Frobenius ball of the
/// selected link's radius.
pub fn sample_uncertainty<R: Rng + ?Sized>(
    model: &UncertaintyModel,
    rng: &mut R,
    which: UncertainLink,
) -> CMat {
    let (mean, delta) = match which {
        UncertainLink::ApIrs => (&model.h_bar, model.delta_h),
        UncertainLink::Cascaded => (&model.hf_bar, model.delta_f),
    };
    mean + ball_sample(mean.nrows(), mean.ncols(), delta, rng)
}

/// Uniform draw from the complex Frobenius ball of the given radius:
/// direction uniform on the sphere, radius = delta * u^(1/(2MN)).
pub fn ball_sample<R: Rng + ?Sized>(rows: usize, cols: usize, delta: f64, rng: &mut R) -> CMat {
    if delta == 0.0 {
        return CMat::zeros(rows, cols);
    }
    let dir = CMat::from_fn(rows, cols, |_, _| complex_gaussian_entry(rng, 1.0));
    let norm = fro_norm(&dir);
    let dim = 2 * rows * cols;
    let u: f64 = rng.random();
    let r = delta * u.powf(1.0 / dim as f64);
    dir.scale(r / norm)
}

/// Builds the mean/radius model from a window of channel estimations:
/// element-wise means, radii = max deviation over the window.
pub fn estimate_uncertainty_model(history: &[ChannelRealization]) -> Result<UncertaintyModel> {
    if history.is_empty() {
        return Err(Error::InvalidArgument("empty channel history".into()));
    }
    let t = history.len() as f64;
    let (m, n) = history[0].h.shape();
    let mut h_bar = CMat::zeros(m, n);
    let mut hf_bar = CMat::zeros(m, n);
    for ch in history {
        if ch.h.shape() != (m, n) {
            return Err(Error::DimensionMismatch("inconsistent window dimensions".into()));
        }
        h_bar += &ch.h;
        hf_bar += &ch.h_f;
    }
    h_bar /= C64::new(t, 0.0);
    hf_bar /= C64::new(t, 0.0);
    let mut delta_h = 0f64;
    let mut delta_f = 0f64;
    for ch in history {
        delta_h = delta_h.max(fro_norm(&(&ch.h - &h_bar)));
        delta_f = delta_f.max(fro_norm(&(&ch.h_f - &hf_bar)));
    }
    Ok(UncertaintyModel { h_bar, hf_bar, delta_h, delta_f })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn unit_theta(n: usize, rng: &mut ChaCha8Rng) -> CVec {
        CVec::from_fn(n, |_, _| {
            let a: f64 = rng.random::<f64>() * std::f64::consts::TAU;
            C64::from_polar(1.0, a)
        })
    }

    #[test]
    fn effective_channel_rho_zero_is_direct() {
        let mut r = rng(1);
        let geo = NetworkGeometry::desk_default();
        let ch = sample_channel(&geo, &mut r);
        let theta = unit_theta(geo.n, &mut r);
        let out = effective_channel(&ch.g, &ch.h_f, &theta, 0.0).unwrap();
        assert_relative_eq!((out - &ch.g).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn effective_channel_scalar_case() {
        let g = CVec::from_element(1, C64::new(1.0, 0.0));
        let hf = CMat::from_element(1, 1, C64::new(1.0, 0.0));
        let theta = CVec::from_element(1, C64::new(1.0, 0.0));
        let out = effective_channel(&g, &hf, &theta, 0.5).unwrap();
        assert_relative_eq!(out[0].re, 1.5, epsilon = 1e-15);
        assert_relative_eq!(out[0].im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn effective_channel_matches_elementwise_oracle() {
        // g + sum_n rho * theta_n * f_n * h_n by explicit loop
        let mut r = rng(2);
        let geo = NetworkGeometry { m: 3, n: 4, ..NetworkGeometry::desk_default() };
        let ch = sample_channel(&geo, &mut r);
        let theta = unit_theta(4, &mut r);
        let rho = 0.7;
        let fast = effective_channel(&ch.g, &ch.h_f, &theta, rho).unwrap();
        let mut slow = ch.g.clone();
        for n in 0..4 {
            let col = ch.h.column(n).into_owned();
            slow += col.scale(rho) * (theta[n] * ch.f[n]);
        }
        assert!((fast - slow).norm() < 1e-12);
    }

    #[test]
    fn effective_channel_rejects_dim_mismatch() {
        let g = CVec::zeros(3);
        let hf = CMat::zeros(3, 4);
        let theta = CVec::from_element(5, C64::new(1.0, 0.0));
        assert!(matches!(
            effective_channel(&g, &hf, &theta, 0.5),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn snr_scalar_hand_arithmetic() {
        let g = CVec::from_element(1, C64::new(1.0, 0.0));
        let h = CMat::from_element(1, 1, C64::new(1.0, 0.0));
        let f = CVec::from_element(1, C64::new(1.0, 0.0));
        let ch = ChannelRealization::from_links(g, h, f).unwrap();
        let action = BeamformingAction {
            w: CVec::from_element(1, C64::new(2.0, 0.0)),
            theta: CVec::from_element(1, C64::new(1.0, 0.0)),
            rho: 0.5,
        };
        assert_relative_eq!(received_snr(&ch, &action).unwrap(), 9.0, epsilon = 1e-12);
    }

    #[test]
    fn snr_matches_expansion_oracle() {
        let mut r = rng(3);
        let geo = NetworkGeometry::desk_default();
        let ch = sample_channel(&geo, &mut r);
        let action = BeamformingAction {
            w: CVec::from_fn(geo.m, |_, _| complex_gaussian_entry(&mut r, 1.0)),
            theta: unit_theta(geo.n, &mut r),
            rho: 0.4,
        };
        let snr = received_snr(&ch, &action).unwrap();
        // explicit expansion of Eq. (1)
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..geo.m {
            let mut gi = ch.g[i];
            for n in 0..geo.n {
                gi += ch.h[(i, n)] * ch.f[n] * action.theta[n] * action.rho;
            }
            acc += gi.conj() * action.w[i];
        }
        assert_relative_eq!(snr, acc.norm_sqr(), max_relative = 1e-10);
    }

    #[test]
    fn snr_scales_quadratically_in_w() {
        let mut r = rng(4);
        let geo = NetworkGeometry::desk_default();
        let ch = sample_channel(&geo, &mut r);
        let w = CVec::from_fn(geo.m, |_, _| complex_gaussian_entry(&mut r, 1.0));
        let theta = unit_theta(geo.n, &mut r);
        let c = C64::new(-1.3, 2.1);
        let a1 = BeamformingAction { w: w.clone(), theta: theta.clone(), rho: 0.6 };
        let a2 = BeamformingAction { w: w.map(|x| x * c), theta, rho: 0.6 };
        let s1 = received_snr(&ch, &a1).unwrap();
        let s2 = received_snr(&ch, &a2).unwrap();
        assert_relative_eq!(s2, c.norm_sqr() * s1, max_relative = 1e-10);
    }

    #[test]
    fn harvest_zero_at_full_reflection() {
        let mut r = rng(5);
        let geo = NetworkGeometry::desk_default();
        let ch = sample_channel(&geo, &mut r);
        let action = BeamformingAction {
            w: CVec::from_element(geo.m, C64::new(1.0, 0.0)),
            theta: unit_theta(geo.n, &mut r),
            rho: 1.0, // boundary probe, allowed for testing
        };
        assert_relative_eq!(harvested_power(&ch, &action, &geo).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn harvest_hand_arithmetic() {
        let geo = NetworkGeometry { m: 1, n: 2, eta: 0.8, ..NetworkGeometry::desk_default() };
        let g = CVec::from_element(1, C64::new(1.0, 0.0));
        let h = CMat::from_element(1, 2, C64::new(1.0, 0.0));
        let f = CVec::from_element(2, C64::new(1.0, 0.0));
        let ch = ChannelRealization::from_links(g, h, f).unwrap();
        let action = BeamformingAction {
            w: CVec::from_element(1, C64::new(1.0, 0.0)),
            theta: CVec::from_element(2, C64::new(1.0, 0.0)),
            rho: 0.0,
        };
        assert_relative_eq!(harvested_power(&ch, &action, &geo).unwrap(), 1.6, epsilon = 1e-12);
    }

    #[test]
    fn harvest_matches_per_element_oracle_and_decreases_in_rho() {
        let mut r = rng(6);
        let geo = NetworkGeometry::desk_default();
        let ch = sample_channel(&geo, &mut r);
        let w = CVec::from_fn(geo.m, |_, _| complex_gaussian_entry(&mut r, 1.0));
        let theta = unit_theta(geo.n, &mut r);
        let mut prev = f64::INFINITY;
        for &rho in &[0.1, 0.3, 0.5, 0.7, 0.9] {
            let action = BeamformingAction { w: w.clone(), theta: theta.clone(), rho };
            let fast = harvested_power(&ch, &action, &geo).unwrap();
            let mut slow = 0.0;
            for n in 0..geo.n {
                let hn = ch.h.column(n);
                slow += geo.eta * (1.0 - rho * rho) * (hn.adjoint() * &w)[(0, 0)].norm_sqr();
            }
            assert_relative_eq!(fast, slow, max_relative = 1e-10);
            assert!(fast < prev);
            prev = fast;
        }
    }

    #[test]
    fn outage_trivial_cases() {
        let mut r = rng(7);
        let geo = NetworkGeometry::desk_default();
        let ch = sample_channel(&geo, &mut r);
        let zero = BeamformingAction {
            w: CVec::zeros(geo.m),
            theta: unit_theta(geo.n, &mut r),
            rho: 0.5,
        };
        assert!(check_outage(&ch, &zero, &geo).unwrap());
    }

    #[test]
    fn outage_agrees_with_reimplementation_oracle() {
        let mut r = rng(8);
        let geo = NetworkGeometry::desk_default();
        for _ in 0..200 {
            let ch = sample_channel(&geo, &mut r);
            let p: f64 = r.random::<f64>() * 2000.0;
            let dir = CVec::from_fn(geo.m, |_, _| complex_gaussian_entry(&mut r, 1.0));
            let action = BeamformingAction {
                w: dir.scale(p.sqrt() / dir.norm()),
                theta: unit_theta(geo.n, &mut r),
                rho: 0.5,
            };
            let fast = check_outage(&ch, &action, &geo).unwrap();
            // independently coded predicate
            let ghat = &ch.g + (&ch.h_f * &action.theta).scale(action.rho);
            let snr = (ghat.adjoint() * &action.w)[(0, 0)].norm_sqr();
            let harvest: f64 = (0..geo.n)
                .map(|n| {
                    geo.eta
                        * (1.0 - action.rho * action.rho)
                        * (ch.h.column(n).adjoint() * &action.w)[(0, 0)].norm_sqr()
                })
                .sum();
            let slow = snr < geo.gamma1 || harvest < geo.n as f64 * geo.mu;
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn path_gain_reference_values() {
        let geo = NetworkGeometry::desk_default();
        // L0 = 30 dB at the 1 m reference point
        assert_relative_eq!(geo.path_gain(1.0), 1e-3, max_relative = 1e-12);
        // d = 2 m, exponent 2: 36.02 dB loss
        let loss_db = -10.0 * geo.path_gain(2.0).log10();
        assert_relative_eq!(loss_db, 30.0 + 20.0 * 2f64.log10(), max_relative = 1e-12);
    }

    #[test]
    fn sample_channel_empirical_power_matches_model() {
        let geo = NetworkGeometry::desk_default();
        let mut r = rng(9);
        let mut acc_g = 0.0;
        let mut acc_f = 0.0;
        let draws = 10_000;
        for _ in 0..draws {
            let ch = sample_channel(&geo, &mut r);
            acc_g += ch.g.norm_squared() / geo.m as f64;
            acc_f += ch.f.norm_squared() / geo.n as f64;
        }
        let mean_g = acc_g / draws as f64;
        let mean_f = acc_f / draws as f64;
        assert!((mean_g - geo.path_gain(geo.d0)).abs() < 0.05 * geo.path_gain(geo.d0));
        assert!((mean_f - geo.path_gain(geo.d2)).abs() < 0.05 * geo.path_gain(geo.d2));
    }

    #[test]
    fn cascaded_matrix_reconstruction() {
        let mut r = rng(10);
        let geo = NetworkGeometry::desk_default();
        let ch = sample_channel(&geo, &mut r);
        let theta = unit_theta(geo.n, &mut r);
        let fast = &ch.h_f * &theta;
        let mut slow = CVec::zeros(geo.m);
        for n in 0..geo.n {
            slow += ch.h.column(n).into_owned().map(|x| x * (theta[n] * ch.f[n]));
        }
        assert!((fast - slow).norm() <= 1e-10);
    }

    #[test]
    fn uncertainty_ball_membership_and_extremes() {
        let mut r = rng(11);
        let geo = NetworkGeometry::desk_default();
        let ch = sample_channel(&geo, &mut r);
        let mut model = UncertaintyModel::exact(&ch);
        model.delta_h = 0.02;
        model.delta_f = 0.0;

        // delta = 0: exact mean
        let s = sample_uncertainty(&model, &mut r, UncertainLink::Cascaded);
        assert!(fro_norm(&(s - &model.hf_bar)) == 0.0);

        let mut max_norm = 0f64;
        for _ in 0..10_000 {
            let s = sample_uncertainty(&model, &mut r, UncertainLink::ApIrs);
            let dev = fro_norm(&(s - &model.h_bar));
            assert!(dev <= model.delta_h + 1e-12);
            max_norm = max_norm.max(dev);
        }
        assert!((model.delta_h - max_norm) < 0.01 * model.delta_h);
    }

    #[test]
    fn estimate_model_constant_and_two_point() {
        let mut r = rng(12);
        let geo = NetworkGeometry::desk_default();
        let ch = sample_channel(&geo, &mut r);
        let est = estimate_uncertainty_model(&[ch.clone(), ch.clone(), ch.clone()]).unwrap();
        // mean of identical matrices is exact up to rounding in the divide
        assert!(est.delta_h <= 1e-12 * fro_norm(&ch.h));
        assert!(est.delta_f <= 1e-12 * fro_norm(&ch.h_f));
        assert!(fro_norm(&(&est.h_bar - &ch.h)) <= 1e-12 * fro_norm(&ch.h));

        let ch2 = sample_channel(&geo, &mut r);
        let est2 = estimate_uncertainty_model(&[ch.clone(), ch2.clone()]).unwrap();
        let midpoint = (&ch.h + &ch2.h).scale(0.5);
        assert!(fro_norm(&(&est2.h_bar - &midpoint)) < 1e-14);
        assert_relative_eq!(
            est2.delta_h,
            fro_norm(&(&ch.h - &ch2.h)) / 2.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn estimate_model_containment_scan() {
        let mut r = rng(13);
        let geo = NetworkGeometry::desk_default();
        let window: Vec<_> = (0..16).map(|_| sample_channel(&geo, &mut r)).collect();
        let est = estimate_uncertainty_model(&window).unwrap();
        for ch in &window {
            assert!(fro_norm(&(&ch.h - &est.h_bar)) <= est.delta_h + 1e-12);
            assert!(fro_norm(&(&ch.h_f - &est.hf_bar)) <= est.delta_f + 1e-12);
        }
        assert!(matches!(
            estimate_uncertainty_model(&[]),
            Err(Error::InvalidArgument(_))
        ));
    }
}
