//! Analytic meandering-jet current field with a wind-driven surface term.
//!
//! Horizontal coordinates, time and velocities are dimensionless (jet model
//! units). Depth is in metres, positive down.

use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("depth must be non-negative, got {0}")]
    NegativeDepth(f64),

    #[error("invalid flow parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

/// Parameters of the meandering jet stream function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JetParams {
    /// Mean meander amplitude.
    pub b0: f64,
    /// Oscillation amplitude of the meander.
    pub epsilon: f64,
    /// Angular frequency of the amplitude oscillation.
    pub omega: f64,
    /// Phase of the amplitude oscillation, radians.
    pub theta: f64,
    /// Meander wavenumber.
    pub k: f64,
    /// Phase speed of the meander.
    pub c: f64,
}

impl Default for JetParams {
    fn default() -> Self {
        Self {
            b0: 1.2,
            epsilon: 0.3,
            omega: 0.4,
            theta: FRAC_PI_2,
            k: 0.84,
            c: 0.12,
        }
    }
}

impl JetParams {
    pub fn validate(&self) -> Result<(), FlowError> {
        let fields = [
            ("b0", self.b0),
            ("epsilon", self.epsilon),
            ("omega", self.omega),
            ("theta", self.theta),
            ("k", self.k),
            ("c", self.c),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(invalid(name, format!("must be finite, got {value}")));
            }
        }
        if self.b0 <= 0.0 {
            return Err(invalid("b0", format!("must be > 0, got {}", self.b0)));
        }
        if self.epsilon < 0.0 {
            return Err(invalid("epsilon", format!("must be >= 0, got {}", self.epsilon)));
        }
        if self.k <= 0.0 {
            return Err(invalid("k", format!("must be > 0, got {}", self.k)));
        }
        Ok(())
    }

    /// Meander wavelength `2π/k`; the field is periodic in x with this period.
    pub fn wavelength(&self) -> f64 {
        std::f64::consts::TAU / self.k
    }

    /// Time-dependent meander amplitude `B(t) = B0 + ε·cos(ωt + θ)`.
    pub fn meander_amplitude(&self, t: f64) -> f64 {
        self.b0 + self.epsilon * (self.omega * t + self.theta).cos()
    }

    /// Stream function of the jet.
    pub fn stream_function(&self, x: f64, y: f64, t: f64) -> f64 {
        let b = self.meander_amplitude(t);
        let phase = self.k * (x - self.c * t);
        let (sin, cos) = phase.sin_cos();
        let denom = (1.0 + self.k * self.k * b * b * sin * sin).sqrt();
        1.0 - ((y - b * cos) / denom).tanh()
    }

    /// Jet velocity `u = -∂φ/∂y`, `v = ∂φ/∂x` in closed form.
    pub fn velocity(&self, x: f64, y: f64, t: f64) -> FlowSample {
        let b = self.meander_amplitude(t);
        let k = self.k;
        let phase = k * (x - self.c * t);
        let (sin, cos) = phase.sin_cos();

        let numer = y - b * cos;
        let denom_sq = 1.0 + k * k * b * b * sin * sin;
        let denom = denom_sq.sqrt();
        let xi = numer / denom;

        // sech² via cosh keeps relative accuracy far from the jet axis
        let cosh = xi.cosh();
        let sech_sq = 1.0 / (cosh * cosh);

        // ∂ξ/∂y = 1/D
        let u = sech_sq / denom;

        // ∂ξ/∂x = (∂N/∂x)/D - N·(∂D/∂x)/D²,  ∂N/∂x = kB·sin,  ∂D/∂x = k³B²·sin·cos / D
        let dxi_dx = k * b * sin / denom - numer * k * k * k * b * b * sin * cos / (denom_sq * denom);
        let v = -sech_sq * dxi_dx;

        FlowSample { u, v }
    }
}

/// Parameters of the wind-driven surface term acting on u only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceCurrentParams {
    /// Wind-current amplitude.
    pub w0: f64,
    /// Frequency multiplier applied to the jet's ω.
    pub d: f64,
    /// Depth in metres at which the surface influence vanishes.
    pub z_decay: f64,
}

impl Default for SurfaceCurrentParams {
    fn default() -> Self {
        Self {
            w0: 0.5,
            d: 2.0,
            z_decay: 15.0,
        }
    }
}

impl SurfaceCurrentParams {
    pub fn validate(&self) -> Result<(), FlowError> {
        for (name, value) in [("w0", self.w0), ("d", self.d), ("z_decay", self.z_decay)] {
            if !value.is_finite() {
                return Err(invalid(name, format!("must be finite, got {value}")));
            }
        }
        if self.z_decay <= 0.0 {
            return Err(invalid("z_decay", format!("must be > 0, got {}", self.z_decay)));
        }
        Ok(())
    }

    /// Wind amplitude `W(t) = W0·cos(d·ω·t)`.
    pub fn wind(&self, t: f64, omega: f64) -> f64 {
        self.w0 * (self.d * omega * t).cos()
    }

    fn term_unchecked(&self, z: f64, t: f64, omega: f64) -> f64 {
        self.wind(t, omega) * (1.0 - z / self.z_decay).max(0.0)
    }
}

/// Eastward u contribution of the surface term; its v contribution is zero.
pub fn surface_term(z: f64, t: f64, surface: &SurfaceCurrentParams, omega: f64) -> Result<f64, FlowError> {
    if z < 0.0 || z.is_nan() {
        return Err(FlowError::NegativeDepth(z));
    }
    Ok(surface.term_unchecked(z, t, omega))
}

/// Horizontal current sample.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FlowSample {
    pub u: f64,
    pub v: f64,
}

impl FlowSample {
    pub fn magnitude(&self) -> f64 {
        self.u.hypot(self.v)
    }
}

/// Which terms of the field are active.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum FlowMode {
    /// Jet plus surface term.
    #[default]
    Full,
    JetOnly,
    SurfaceOnly,
    /// Spatially and temporally constant current.
    Uniform {
        u: f64,
        v: f64,
    },
    StillWater,
}

impl FlowMode {
    pub fn name(&self) -> &'static str {
        match self {
            FlowMode::Full => "full",
            FlowMode::JetOnly => "jet",
            FlowMode::SurfaceOnly => "surface",
            FlowMode::Uniform { .. } => "uniform",
            FlowMode::StillWater => "still",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FlowEnvironment {
    pub jet: JetParams,
    pub surface: SurfaceCurrentParams,
    pub mode: FlowMode,
}

impl FlowEnvironment {
    pub fn new(jet: JetParams, surface: SurfaceCurrentParams, mode: FlowMode) -> Self {
        Self { jet, surface, mode }
    }

    pub fn still_water() -> Self {
        Self {
            mode: FlowMode::StillWater,
            ..Self::default()
        }
    }

    pub fn uniform(u: f64, v: f64) -> Self {
        Self {
            mode: FlowMode::Uniform { u, v },
            ..Self::default()
        }
    }

    pub fn with_mode(self, mode: FlowMode) -> Self {
        Self { mode, ..self }
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        self.jet.validate()?;
        self.surface.validate()?;
        if let FlowMode::Uniform { u, v } = self.mode {
            if !u.is_finite() || !v.is_finite() {
                return Err(invalid("uniform", format!("components must be finite, got ({u}, {v})")));
            }
        }
        Ok(())
    }

    /// Current at `(x, y)`, depth `z` metres and time `t`.
    pub fn velocity(&self, x: f64, y: f64, z: f64, t: f64) -> Result<FlowSample, FlowError> {
        if z < 0.0 || z.is_nan() {
            return Err(FlowError::NegativeDepth(z));
        }
        Ok(self.sample(x, y, z, t))
    }

    /// Same as [`velocity`](Self::velocity) for callers that already hold a
    /// non-negative depth.
    pub(crate) fn sample(&self, x: f64, y: f64, z: f64, t: f64) -> FlowSample {
        debug_assert!(z >= 0.0);
        match self.mode {
            FlowMode::Full => {
                let jet = self.jet.velocity(x, y, t);
                FlowSample {
                    u: jet.u + self.surface.term_unchecked(z, t, self.jet.omega),
                    v: jet.v,
                }
            }
            FlowMode::JetOnly => self.jet.velocity(x, y, t),
            FlowMode::SurfaceOnly => FlowSample {
                u: self.surface.term_unchecked(z, t, self.jet.omega),
                v: 0.0,
            },
            FlowMode::Uniform { u, v } => FlowSample { u, v },
            FlowMode::StillWater => FlowSample::default(),
        }
    }
}

fn invalid(name: &'static str, reason: String) -> FlowError {
    FlowError::InvalidParameter { name, reason }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{rngs::StdRng, Rng, SeedableRng};
    use std::f64::consts::PI;

    // Finite-difference oracle on the stream function, kept independent of
    // the closed-form derivatives.
    fn fd_velocity(jet: &JetParams, x: f64, y: f64, t: f64, h: f64) -> FlowSample {
        let dphi_dy = (jet.stream_function(x, y + h, t) - jet.stream_function(x, y - h, t)) / (2.0 * h);
        let dphi_dx = (jet.stream_function(x + h, y, t) - jet.stream_function(x - h, y, t)) / (2.0 * h);
        FlowSample {
            u: -dphi_dy,
            v: dphi_dx,
        }
    }

    #[test]
    fn meander_amplitude_extremes() {
        let jet = JetParams::default();
        assert!((jet.meander_amplitude(0.0) - 1.2).abs() < 1e-15);
        // ωt + θ = 0
        let t = -jet.theta / jet.omega;
        assert!((jet.meander_amplitude(t) - 1.5).abs() < 1e-12);
        // ωt + θ = π
        let t = (PI - jet.theta) / jet.omega;
        assert!((jet.meander_amplitude(t) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn stream_function_on_axis_and_limits() {
        let jet = JetParams::default();
        for &(x, t) in &[(0.0, 0.0), (1.3, 2.0), (-4.0, 7.5)] {
            let y = jet.meander_amplitude(t) * (jet.k * (x - jet.c * t)).cos();
            assert!((jet.stream_function(x, y, t) - 1.0).abs() < 1e-15);
        }
        assert!(jet.stream_function(0.3, 1e3, 1.0).abs() < 1e-15);
        assert!((jet.stream_function(0.3, -1e3, 1.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn stream_function_is_periodic_in_x() {
        let jet = JetParams::default();
        let wl = jet.wavelength();
        for &(x, y, t) in &[(0.1, 0.5, 0.0), (2.0, -1.0, 3.0), (5.5, 1.4, 9.0)] {
            let a = jet.stream_function(x, y, t);
            let b = jet.stream_function(x + wl, y, t);
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn axis_velocity_is_inverse_denominator() {
        let jet = JetParams::default();
        for &(x, t) in &[(0.0, 0.0), (0.9, 1.0), (3.1, 4.2)] {
            let b = jet.meander_amplitude(t);
            let phase = jet.k * (x - jet.c * t);
            let y = b * phase.cos();
            let expected = 1.0 / (1.0 + jet.k * jet.k * b * b * phase.sin().powi(2)).sqrt();
            let got = jet.velocity(x, y, t);
            assert!(got.u > 0.0);
            assert!((got.u - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn jet_velocity_matches_finite_differences() {
        let jet = JetParams::default();
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..1000 {
            let x = rng.gen_range(0.0..15.0);
            let y = rng.gen_range(-3.5..3.5);
            let t = rng.gen_range(0.0..50.0);
            let a = jet.velocity(x, y, t);
            let f = fd_velocity(&jet, x, y, t, 1e-5);
            let err = (a.u - f.u).hypot(a.v - f.v) / f.magnitude();
            assert!(err < 1e-5, "rel err {err} at ({x}, {y}, {t})");
        }
    }

    #[test]
    fn v_at_nodes_of_sin_matches_finite_differences() {
        // sin(k(x-ct)) = 0 and y on the axis: numerator of ξ is zero.
        let jet = JetParams::default();
        for n in 0..4 {
            let t = 1.7 * n as f64;
            let x = jet.c * t + n as f64 * PI / jet.k;
            let y = jet.meander_amplitude(t) * (jet.k * (x - jet.c * t)).cos();
            let a = jet.velocity(x, y, t);
            let f = fd_velocity(&jet, x, y, t, 1e-5);
            assert!(a.v.abs() < 1e-12);
            assert!((a.v - f.v).abs() < 1e-8, "{} vs {}", a.v, f.v);
            assert!((a.u - f.u).abs() / f.u.abs() < 1e-5);
        }
    }

    #[test]
    fn surface_term_values() {
        let s = SurfaceCurrentParams::default();
        let omega = 0.4;
        assert_eq!(surface_term(15.0, 3.0, &s, omega).unwrap().abs(), 0.0);
        assert_eq!(surface_term(0.0, 0.0, &s, omega).unwrap(), 0.5);
        assert_eq!(surface_term(7.5, 0.0, &s, omega).unwrap(), 0.25);
        assert_eq!(surface_term(40.0, 1.0, &s, omega).unwrap().abs(), 0.0);
        assert!(matches!(
            surface_term(-0.1, 0.0, &s, omega),
            Err(FlowError::NegativeDepth(_))
        ));
    }

    #[test]
    fn surface_term_sign_follows_wind() {
        let s = SurfaceCurrentParams::default();
        let omega = 0.4;
        for i in 0..50 {
            let t = i as f64 * 0.37;
            let term = surface_term(3.0, t, &s, omega).unwrap();
            let wind = s.wind(t, omega);
            assert!(term == 0.0 || term.signum() == wind.signum());
        }
    }

    #[test]
    fn velocity_below_decay_equals_jet() {
        let env = FlowEnvironment::default();
        for &(x, y, t) in &[(0.5, 0.2, 0.0), (3.0, -0.7, 4.0), (6.0, 1.1, 10.0)] {
            let jet = env.jet.velocity(x, y, t);
            for z in [15.0, 20.0, 200.0] {
                assert_eq!(env.velocity(x, y, z, t).unwrap(), jet);
            }
        }
    }

    #[test]
    fn v_is_depth_independent() {
        let env = FlowEnvironment::default();
        let a = env.velocity(1.0, 0.5, 0.0, 2.0).unwrap();
        let b = env.velocity(1.0, 0.5, 9.0, 2.0).unwrap();
        let c = env.velocity(1.0, 0.5, 100.0, 2.0).unwrap();
        assert_eq!(a.v, b.v);
        assert_eq!(b.v, c.v);
    }

    #[test]
    fn test_modes() {
        let still = FlowEnvironment::still_water();
        assert_eq!(
            still.velocity(1.0, 2.0, 3.0, 4.0).unwrap(),
            FlowSample { u: 0.0, v: 0.0 }
        );
        let uni = FlowEnvironment::uniform(0.1, -0.2);
        assert_eq!(
            uni.velocity(9.0, 2.0, 0.0, 4.0).unwrap(),
            FlowSample { u: 0.1, v: -0.2 }
        );
        assert!(uni.velocity(0.0, 0.0, -1.0, 0.0).is_err());
        let surf = FlowEnvironment::default().with_mode(FlowMode::SurfaceOnly);
        assert_eq!(
            surf.velocity(4.0, 1.0, 0.0, 0.0).unwrap(),
            FlowSample { u: 0.5, v: 0.0 }
        );
    }

    #[test]
    fn full_field_is_divergence_free() {
        let env = FlowEnvironment::default();
        let mut rng = StdRng::seed_from_u64(11);
        let h = 1e-4;
        for _ in 0..1000 {
            let x = rng.gen_range(0.0..15.0);
            let y = rng.gen_range(-3.5..3.5);
            let z = rng.gen_range(0.0..30.0);
            let t = rng.gen_range(0.0..50.0);
            let du_dx = (env.sample(x + h, y, z, t).u - env.sample(x - h, y, z, t).u) / (2.0 * h);
            let dv_dy = (env.sample(x, y + h, z, t).v - env.sample(x, y - h, z, t).v) / (2.0 * h);
            assert!((du_dx + dv_dy).abs() < 1e-6);
        }
    }

    #[test]
    fn full_field_is_periodic() {
        let env = FlowEnvironment::default();
        let wl = env.jet.wavelength();
        let a = env.velocity(1.1, 0.3, 5.0, 2.0).unwrap();
        let b = env.velocity(1.1 + wl, 0.3, 5.0, 2.0).unwrap();
        assert!((a.u - b.u).abs() < 1e-12 && (a.v - b.v).abs() < 1e-12);
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        let jet = JetParams {
            k: 0.0,
            ..JetParams::default()
        };
        assert!(jet.validate().is_err());
        let jet = JetParams {
            b0: -1.0,
            ..JetParams::default()
        };
        assert!(jet.validate().is_err());
        let jet = JetParams {
            epsilon: -0.1,
            ..JetParams::default()
        };
        assert!(jet.validate().is_err());
        let s = SurfaceCurrentParams {
            z_decay: 0.0,
            ..SurfaceCurrentParams::default()
        };
        assert!(s.validate().is_err());
        assert!(FlowEnvironment::default().validate().is_ok());
    }
}
