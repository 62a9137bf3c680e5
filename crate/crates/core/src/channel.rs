//! Geometry-driven channel realizations.
//!
//! The IRS is a uniform planar array in the x-z plane. Every link except
//! IRS -> controller is drawn with a far-field mean gain (path gain to the
//! node or to the IRS center) and exact spherical-wave LoS phases; the
//! IRS -> controller link is the deterministic near-field LoS channel.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{sample_cn, unit, CScalar, CVec, NumericsError, RngStream};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("point coincides with IRS element {0}")]
    ZeroDistance(usize),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid fading spec: {0}")]
    InvalidFading(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

pub type Point3 = [f64; 3];

pub fn distance(a: Point3, b: Point3) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Node placement and array layout.
///
/// `irs_rows = irs_cols = 0` describes a system without an IRS (M = 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub ap_pos: Point3,
    pub irs_center_pos: Point3,
    pub controller_pos: Point3,
    /// The user sits at `(d0, user_y, user_z)`.
    pub user_y: f64,
    pub user_z: f64,
    pub irs_rows: usize,
    pub irs_cols: usize,
    pub element_spacing: f64,
    pub wavelength: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            ap_pos: [0.0, 1.0, 2.0],
            irs_center_pos: [50.0, 0.0, 1.0],
            controller_pos: [50.0, 0.3, 1.5],
            user_y: 1.0,
            user_z: 1.0,
            irs_rows: 8,
            irs_cols: 8,
            element_spacing: 0.025,
            wavelength: 0.05,
        }
    }
}

impl Geometry {
    pub fn num_elements(&self) -> usize {
        self.irs_rows * self.irs_cols
    }

    pub fn user_pos(&self, d0: f64) -> Point3 {
        [d0, self.user_y, self.user_z]
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        let no_irs = self.irs_rows == 0 && self.irs_cols == 0;
        if !no_irs && (self.irs_rows == 0 || self.irs_cols == 0) {
            return Err(ChannelError::InvalidGeometry(format!(
                "array is {}x{}; use 0x0 for no IRS",
                self.irs_rows, self.irs_cols
            )));
        }
        if !(self.element_spacing > 0.0) {
            return Err(ChannelError::InvalidGeometry(format!(
                "element spacing {} must be positive",
                self.element_spacing
            )));
        }
        if !(self.wavelength > 0.0) {
            return Err(ChannelError::InvalidGeometry(format!(
                "wavelength {} must be positive",
                self.wavelength
            )));
        }
        let coords = self
            .ap_pos
            .iter()
            .chain(&self.irs_center_pos)
            .chain(&self.controller_pos)
            .chain([&self.user_y, &self.user_z]);
        if coords.into_iter().any(|v| !v.is_finite()) {
            return Err(ChannelError::InvalidGeometry("non-finite coordinate".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkModel {
    Rayleigh,
    Rician,
    NearFieldLos,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub model: LinkModel,
    pub exponent: f64,
}

impl LinkSpec {
    pub const fn new(model: LinkModel, exponent: f64) -> Self {
        Self { model, exponent }
    }
}

/// Large-scale and small-scale fading parameters, one entry per link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FadingSpec {
    pub gamma0_db: f64,
    pub rician_k_db: f64,
    pub ap_user: LinkSpec,
    pub ap_irs: LinkSpec,
    pub ap_controller: LinkSpec,
    pub irs_controller: LinkSpec,
    pub irs_user: LinkSpec,
    pub controller_user: LinkSpec,
}

impl Default for FadingSpec {
    fn default() -> Self {
        use LinkModel::*;
        Self {
            gamma0_db: -30.0,
            rician_k_db: 10.0,
            ap_user: LinkSpec::new(Rayleigh, 3.0),
            ap_irs: LinkSpec::new(Rician, 2.5),
            ap_controller: LinkSpec::new(Rician, 2.5),
            irs_controller: LinkSpec::new(NearFieldLos, 2.0),
            irs_user: LinkSpec::new(Rician, 2.5),
            controller_user: LinkSpec::new(Rician, 2.5),
        }
    }
}

impl FadingSpec {
    fn links(&self) -> [(&'static str, LinkSpec); 6] {
        [
            ("ap_user", self.ap_user),
            ("ap_irs", self.ap_irs),
            ("ap_controller", self.ap_controller),
            ("irs_controller", self.irs_controller),
            ("irs_user", self.irs_user),
            ("controller_user", self.controller_user),
        ]
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if !self.gamma0_db.is_finite() || !self.rician_k_db.is_finite() {
            return Err(ChannelError::InvalidFading("non-finite dB value".into()));
        }
        for (name, link) in self.links() {
            if !(link.exponent > 0.0) {
                return Err(ChannelError::InvalidFading(format!(
                    "{name}: path loss exponent {} must be positive",
                    link.exponent
                )));
            }
        }
        Ok(())
    }
}

/// One realization of the six baseband channels.
///
/// `g_cu` also serves as `h_CU` in the phase-2 SNR (reciprocity).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSet {
    pub h_au: CScalar,
    pub h_ai: CVec,
    pub h_ac: CScalar,
    pub h_ic: CVec,
    pub g_iu: CVec,
    pub g_cu: CScalar,
}

impl ChannelSet {
    pub fn num_elements(&self) -> usize {
        self.h_ai.len()
    }

    /// Checks lengths and finiteness.
    pub fn validate(&self) -> Result<(), ChannelError> {
        let m = self.h_ai.len();
        if self.h_ic.len() != m || self.g_iu.len() != m {
            return Err(ChannelError::InvalidGeometry(format!(
                "channel vector lengths differ: h_ai {}, h_ic {}, g_iu {}",
                m,
                self.h_ic.len(),
                self.g_iu.len()
            )));
        }
        let finite = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        let all = [self.h_au, self.h_ac, self.g_cu];
        if !all.iter().chain(&self.h_ai).chain(&self.h_ic).chain(&self.g_iu).all(finite) {
            return Err(ChannelError::Numerics(NumericsError::NonFinite));
        }
        Ok(())
    }
}

/// Element-wise cascaded channels, conjugated so that `q^H θ` is the
/// reflected contribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadedChannels {
    pub q_u: CVec,
    pub q_c: CVec,
    pub q_tilde_u: CVec,
}

/// `γ0 / d^exponent` in linear units.
pub fn path_gain(gamma0_db: f64, d: f64, exponent: f64) -> Result<f64, ChannelError> {
    if !(d > 0.0) {
        return Err(ChannelError::NonPositiveDistance(d));
    }
    Ok(db_to_linear(gamma0_db) / d.powf(exponent))
}

/// Element centers, row-major starting at the (-x, -z) corner.
pub fn upa_positions(geometry: &Geometry) -> Vec<Point3> {
    let rows = geometry.irs_rows;
    let cols = geometry.irs_cols;
    let s = geometry.element_spacing;
    let c = geometry.irs_center_pos;
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let dz = (r as f64 - (rows as f64 - 1.0) / 2.0) * s;
        for k in 0..cols {
            let dx = (k as f64 - (cols as f64 - 1.0) / 2.0) * s;
            out.push([c[0] + dx, c[1], c[2] + dz]);
        }
    }
    out
}

/// Near-field LoS vector: entry m is `sqrt(γ0) / d_m * exp(-j 2π d_m / λ)`.
pub fn near_field_los(
    elements: &[Point3],
    point: Point3,
    gamma0_db: f64,
    wavelength: f64,
) -> Result<CVec, ChannelError> {
    let amp0 = db_to_linear(gamma0_db).sqrt();
    elements
        .iter()
        .enumerate()
        .map(|(m, &e)| {
            let d = distance(e, point);
            if d == 0.0 {
                return Err(ChannelError::ZeroDistance(m));
            }
            Ok(Complex64::from_polar(amp0 / d, -2.0 * PI * d / wavelength))
        })
        .collect()
}

/// Unit-magnitude spherical-wave phases from each element to `point`.
pub fn los_phases(elements: &[Point3], point: Point3, wavelength: f64) -> CVec {
    elements
        .iter()
        .map(|&e| unit(-2.0 * PI * distance(e, point) / wavelength))
        .collect()
}

/// Rician vector `sqrt(gain) * (sqrt(K/(K+1)) los + sqrt(1/(K+1)) w)`.
pub fn rician(
    rng: &mut RngStream,
    los_component: &[Complex64],
    k_db: f64,
    mean_power_gain: f64,
) -> Result<CVec, ChannelError> {
    if los_component.is_empty() {
        return Ok(Vec::new());
    }
    let k = db_to_linear(k_db);
    let (w_los, w_nlos) = if k.is_infinite() {
        (1.0, 0.0)
    } else {
        ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt())
    };
    let amp = mean_power_gain.sqrt();
    let w = sample_cn(rng, los_component.len())?;
    Ok(los_component
        .iter()
        .zip(&w)
        .map(|(l, n)| (l * w_los + n * w_nlos) * amp)
        .collect())
}

fn draw_link(
    rng: &mut RngStream,
    link: LinkSpec,
    spec: &FadingSpec,
    mean_distance: f64,
    los: &[Complex64],
) -> Result<CVec, ChannelError> {
    let gain = path_gain(spec.gamma0_db, mean_distance, link.exponent)?;
    match link.model {
        LinkModel::Rayleigh => {
            if los.is_empty() {
                return Ok(Vec::new());
            }
            Ok(sample_cn(rng, los.len())?
                .into_iter()
                .map(|w| w * gain.sqrt())
                .collect())
        }
        LinkModel::Rician => rician(rng, los, spec.rician_k_db, gain),
        // Near-field treatment only makes sense per element; for a node link
        // it degenerates to the deterministic LoS term at the mean gain.
        LinkModel::NearFieldLos => Ok(los.iter().map(|l| l * gain.sqrt()).collect()),
    }
}

/// Draws one channel set with the user at `(d0, user_y, user_z)`.
///
/// Draw order is fixed (h_AU, h_AI, h_AC, h_IC, g_IU, g_CU) so a given
/// stream always yields the same set.
pub fn draw_channel_set(
    rng: &mut RngStream,
    geometry: &Geometry,
    spec: &FadingSpec,
    d0: f64,
) -> Result<ChannelSet, ChannelError> {
    if !(d0 > 0.0) {
        return Err(ChannelError::NonPositiveDistance(d0));
    }
    geometry.validate()?;
    spec.validate()?;
    let lambda = geometry.wavelength;
    let elements = upa_positions(geometry);
    let ap = geometry.ap_pos;
    let irs = geometry.irs_center_pos;
    let ctrl = geometry.controller_pos;
    let user = geometry.user_pos(d0);

    let scalar_los = |a: Point3, b: Point3| vec![unit(-2.0 * PI * distance(a, b) / lambda)];

    let h_au = draw_link(rng, spec.ap_user, spec, distance(ap, user), &scalar_los(ap, user))?[0];
    let h_ai = draw_link(
        rng,
        spec.ap_irs,
        spec,
        distance(ap, irs),
        &los_phases(&elements, ap, lambda),
    )?;
    let h_ac = draw_link(
        rng,
        spec.ap_controller,
        spec,
        distance(ap, ctrl),
        &scalar_los(ap, ctrl),
    )?[0];
    let h_ic = match spec.irs_controller.model {
        LinkModel::NearFieldLos => near_field_los(&elements, ctrl, spec.gamma0_db, lambda)?,
        _ => draw_link(
            rng,
            spec.irs_controller,
            spec,
            distance(irs, ctrl),
            &los_phases(&elements, ctrl, lambda),
        )?,
    };
    let g_iu = draw_link(
        rng,
        spec.irs_user,
        spec,
        distance(irs, user),
        &los_phases(&elements, user, lambda),
    )?;
    let g_cu = draw_link(
        rng,
        spec.controller_user,
        spec,
        distance(ctrl, user),
        &scalar_los(ctrl, user),
    )?[0];

    Ok(ChannelSet {
        h_au,
        h_ai,
        h_ac,
        h_ic,
        g_iu,
        g_cu,
    })
}

/// Cascaded channels: `q_U = conj(h_AI ⊙ g_IU)`, `q_C = conj(h_AI ⊙ h_IC)`,
/// `q̃_U = conj(h_IC ⊙ g_IU)`.
pub fn cascade(cs: &ChannelSet) -> CascadedChannels {
    let prod = |a: &[Complex64], b: &[Complex64]| -> CVec {
        a.iter().zip(b).map(|(x, y)| (x * y).conj()).collect()
    };
    CascadedChannels {
        q_u: prod(&cs.h_ai, &cs.g_iu),
        q_c: prod(&cs.h_ai, &cs.h_ic),
        q_tilde_u: prod(&cs.h_ic, &cs.g_iu),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::inner;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn path_gain_reference_values() {
        assert!((path_gain(-30.0, 1.0, 2.5).unwrap() - 1e-3).abs() < 1e-18);
        assert_eq!(path_gain(0.0, 1.0, 7.0).unwrap(), 1.0);
        // 1e-3 / 50^2.5 = 1e-3 / 17677.67 = 5.65685e-8
        assert!((path_gain(-30.0, 50.0, 2.5).unwrap() - 5.657e-8).abs() < 1e-11);
        assert_eq!(
            path_gain(-30.0, 0.0, 2.0),
            Err(ChannelError::NonPositiveDistance(0.0))
        );
    }

    #[test]
    fn upa_layouts() {
        let mut g = Geometry {
            irs_rows: 1,
            irs_cols: 1,
            ..Geometry::default()
        };
        assert_eq!(upa_positions(&g), vec![g.irs_center_pos]);

        g.irs_cols = 2;
        let p = upa_positions(&g);
        assert!((distance(p[0], p[1]) - 0.025).abs() < 1e-12);
        assert!((p[0][0] + p[1][0] - 2.0 * g.irs_center_pos[0]).abs() < 1e-12);
        assert!(p[0][0] < p[1][0]);
        assert_eq!(p[0][1], p[1][1]);
        assert_eq!(p[0][2], p[1][2]);

        g.irs_rows = 20;
        g.irs_cols = 20;
        let p = upa_positions(&g);
        assert_eq!(p.len(), 400);
        let corner = distance(p[0], p[399]);
        let expected = ((19.0 * 0.025f64).powi(2) * 2.0).sqrt();
        assert!((corner - expected).abs() < 1e-12);
        assert!((corner - 0.6718).abs() < 1e-4);
    }

    #[test]
    fn near_field_cases() {
        let lambda = 0.05;
        let h = near_field_los(&[[0.0, 0.0, 0.0]], [lambda, 0.0, 0.0], -30.0, lambda).unwrap();
        let amp = 1e-3f64.sqrt() / lambda;
        assert!((h[0] - c(amp, 0.0)).norm() < 1e-9 * amp);

        let h = near_field_los(&[[0.0, 0.0, 0.0]], [0.0, 0.5, 0.0], -30.0, lambda).unwrap();
        assert!((h[0].norm() - 0.06325).abs() < 1e-5);

        let h = near_field_los(
            &[[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
            [0.0, 0.3, 0.0],
            -30.0,
            lambda,
        )
        .unwrap();
        assert_eq!(h[0], h[1]);

        assert_eq!(
            near_field_los(&[[1.0, 1.0, 1.0]], [1.0, 1.0, 1.0], -30.0, lambda),
            Err(ChannelError::ZeroDistance(0))
        );
    }

    #[test]
    fn near_field_magnitude_is_inverse_distance() {
        let elements = upa_positions(&Geometry::default());
        let ctrl = [50.0, 0.3, 1.5];
        let near = near_field_los(&elements, ctrl, -30.0, 0.05).unwrap();
        // Doubling every distance: scale all coordinates about the point.
        let doubled: Vec<Point3> = elements
            .iter()
            .map(|e| [2.0 * e[0] - ctrl[0], 2.0 * e[1] - ctrl[1], 2.0 * e[2] - ctrl[2]])
            .collect();
        let halved = near_field_los(&doubled, ctrl, -30.0, 0.05).unwrap();
        for (a, b) in near.iter().zip(&halved) {
            assert!((a.norm() - 2.0 * b.norm()).abs() < 1e-12 * a.norm());
        }
    }

    #[test]
    fn rician_limits() {
        let los = vec![c(1.0, 0.0), c(0.0, 1.0), unit(0.3)];
        let mut rng = RngStream::new(5);
        let out = rician(&mut rng, &los, 300.0, 4.0).unwrap();
        for (o, l) in out.iter().zip(&los) {
            assert!((o - l * 2.0).norm() < 1e-6);
        }
        let zero = rician(&mut rng, &los, 10.0, 0.0).unwrap();
        assert!(zero.iter().all(|z| z.norm() == 0.0));
        let k = db_to_linear(10.0);
        assert!(((k / (k + 1.0)).sqrt() - 0.95346).abs() < 1e-5);
    }

    #[test]
    fn rician_mean_power() {
        let mut rng = RngStream::new(77);
        let los = vec![unit(1.1); 4];
        let gain = 3e-6;
        let n = 10_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let v = rician(&mut rng, &los, 10.0, gain).unwrap();
            acc += v.iter().map(|z| z.norm_sqr()).sum::<f64>() / v.len() as f64;
        }
        let mean = acc / n as f64;
        assert!((mean / gain - 1.0).abs() < 0.03, "{}", mean / gain);
    }

    #[test]
    fn rayleigh_direct_link_mean_power() {
        let geometry = Geometry {
            irs_rows: 2,
            irs_cols: 2,
            ..Geometry::default()
        };
        let spec = FadingSpec::default();
        let d0 = 50.0;
        let d_au = distance(geometry.ap_pos, geometry.user_pos(d0));
        let expected = path_gain(-30.0, d_au, 3.0).unwrap();
        let mut rng = RngStream::new(1234);
        let n = 10_000;
        let mut acc = 0.0;
        for _ in 0..n {
            acc += draw_channel_set(&mut rng, &geometry, &spec, d0).unwrap().h_au.norm_sqr();
        }
        let ratio = acc / n as f64 / expected;
        assert!((ratio - 1.0).abs() < 0.03, "ratio {ratio}");
    }

    #[test]
    fn draw_shapes_and_determinism() {
        let geometry = Geometry::default();
        let spec = FadingSpec::default();
        let a = draw_channel_set(&mut RngStream::new(3), &geometry, &spec, 40.0).unwrap();
        let b = draw_channel_set(&mut RngStream::new(3), &geometry, &spec, 40.0).unwrap();
        let other = draw_channel_set(&mut RngStream::new(4), &geometry, &spec, 40.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.h_ic, other.h_ic);
        assert_ne!(a.h_au, other.h_au);
        let m = geometry.num_elements();
        assert_eq!(a.h_ai.len(), m);
        assert_eq!(a.h_ic.len(), m);
        assert_eq!(a.g_iu.len(), m);
        a.validate().unwrap();
        assert!(draw_channel_set(&mut RngStream::new(3), &geometry, &spec, 0.0).is_err());
    }

    #[test]
    fn no_irs_geometry_draws_empty_vectors() {
        let geometry = Geometry {
            irs_rows: 0,
            irs_cols: 0,
            ..Geometry::default()
        };
        let cs = draw_channel_set(&mut RngStream::new(1), &geometry, &FadingSpec::default(), 30.0)
            .unwrap();
        assert_eq!(cs.num_elements(), 0);
        assert!(cs.h_au.norm() > 0.0);
        let bad = Geometry {
            irs_rows: 0,
            irs_cols: 3,
            ..Geometry::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn cascade_cases() {
        let cs = ChannelSet {
            h_au: c(0.0, 0.0),
            h_ai: vec![c(1.0, 0.0)],
            h_ac: c(0.0, 0.0),
            h_ic: vec![c(0.0, 0.0)],
            g_iu: vec![c(0.0, 1.0)],
            g_cu: c(0.0, 0.0),
        };
        let casc = cascade(&cs);
        assert_eq!(inner(&casc.q_u, &[c(1.0, 0.0)]), c(0.0, 1.0));

        let mut rng = RngStream::new(11);
        let m = 4;
        let cs = ChannelSet {
            h_au: rng.cn(),
            h_ai: sample_cn(&mut rng, m).unwrap(),
            h_ac: rng.cn(),
            h_ic: sample_cn(&mut rng, m).unwrap(),
            g_iu: sample_cn(&mut rng, m).unwrap(),
            g_cu: rng.cn(),
        };
        let casc = cascade(&cs);
        let theta: CVec = (0..m).map(|_| unit(rng.uniform() * 2.0 * PI)).collect();
        let direct: Complex64 = (0..m).map(|i| cs.h_ai[i] * cs.g_iu[i] * theta[i]).sum();
        assert!((inner(&casc.q_u, &theta) - direct).norm() < 1e-12);
        for i in 0..m {
            assert_eq!(casc.q_c[i].norm(), (cs.h_ai[i] * cs.h_ic[i]).norm());
            assert!(
                (casc.q_c[i].norm() - cs.h_ai[i].norm() * cs.h_ic[i].norm()).abs() < 1e-15
            );
        }

        let zero_user = ChannelSet {
            g_iu: vec![c(0.0, 0.0); m],
            ..cs
        };
        assert!(cascade(&zero_user).q_u.iter().all(|z| z.norm() == 0.0));
    }
}
