//! Candidate sawtooth dive profiles built from depth-band parameters.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("invalid dive-profile parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("no dive profile satisfies the minimum dive amplitude")]
    NoFeasibleProfile,
}

/// Inputs to the profile generator. Depths are in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiveProfileParams {
    pub z_min: f64,
    pub z_max: f64,
    pub z_climb_to_max: f64,
    /// Minimum dive amplitude `z_dive_to - z_climb_to`.
    pub d_min_range: f64,
    pub n_climb_levels: usize,
    pub n_dive_levels: usize,
}

impl Default for DiveProfileParams {
    fn default() -> Self {
        Self {
            z_min: 0.0,
            z_max: 200.0,
            z_climb_to_max: 40.0,
            d_min_range: 50.0,
            n_climb_levels: 4,
            n_dive_levels: 6,
        }
    }
}

impl DiveProfileParams {
    pub fn validate(&self) -> Result<(), ProfileError> {
        let bad = |field, reason: String| Err(ProfileError::InvalidParameter { field, reason });
        for (field, value) in [
            ("z_min", self.z_min),
            ("z_max", self.z_max),
            ("z_climb_to_max", self.z_climb_to_max),
            ("d_min_range", self.d_min_range),
        ] {
            if !value.is_finite() {
                return bad(field, format!("must be finite, got {value}"));
            }
        }
        if self.z_min < 0.0 {
            return bad("z_min", format!("must be >= 0, got {}", self.z_min));
        }
        if self.z_climb_to_max < self.z_min {
            return bad(
                "z_climb_to_max",
                format!("must be >= z_min ({}), got {}", self.z_min, self.z_climb_to_max),
            );
        }
        if self.z_max <= self.z_climb_to_max {
            return bad(
                "z_max",
                format!("must be > z_climb_to_max ({}), got {}", self.z_climb_to_max, self.z_max),
            );
        }
        if self.d_min_range <= 0.0 {
            return bad("d_min_range", format!("must be > 0, got {}", self.d_min_range));
        }
        if self.z_max - self.z_min < self.d_min_range {
            return bad(
                "d_min_range",
                format!("exceeds the depth band z_max - z_min = {}", self.z_max - self.z_min),
            );
        }
        if self.n_climb_levels == 0 {
            return bad("n_climb_levels", "must be >= 1".into());
        }
        if self.n_dive_levels == 0 {
            return bad("n_dive_levels", "must be >= 1".into());
        }
        Ok(())
    }

    /// Climb-to levels, ascending from `z_min` to `z_climb_to_max`.
    pub fn climb_levels(&self) -> Vec<f64> {
        spaced_levels(self.z_min, self.z_climb_to_max, self.n_climb_levels)
    }

    /// Dive-to levels, descending from `z_max` to `z_min + d_min_range`.
    pub fn dive_levels(&self) -> Vec<f64> {
        spaced_levels(self.z_max, self.z_min + self.d_min_range, self.n_dive_levels)
    }
}

// Level i is first + (last - first)·i/(n-1), with the final level pinned to
// `last` so that rounding never pushes it outside the band.
fn spaced_levels(first: f64, last: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![first];
    }
    let span = last - first;
    let steps = n - 1;
    (0..n)
        .map(|i| {
            if i == steps {
                last
            } else {
                first + span * i as f64 / steps as f64
            }
        })
        .collect()
}

/// One sawtooth between a shallow and a deep turning depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiveProfile {
    pub index: usize,
    pub z_climb_to: f64,
    pub z_dive_to: f64,
}

impl DiveProfile {
    pub fn amplitude(&self) -> f64 {
        self.z_dive_to - self.z_climb_to
    }
}

/// Cross product of climb-to and dive-to levels (climb-to outer, ascending;
/// dive-to inner, descending), keeping pairs whose amplitude is at least
/// `d_min_range`.
pub fn generate_dive_profiles(params: &DiveProfileParams) -> Result<Vec<DiveProfile>, ProfileError> {
    params.validate()?;
    let dive = params.dive_levels();
    let mut out = Vec::with_capacity(params.n_climb_levels * params.n_dive_levels);
    for climb in params.climb_levels() {
        for &dive_to in &dive {
            if dive_to - climb >= params.d_min_range {
                out.push(DiveProfile {
                    index: out.len(),
                    z_climb_to: climb,
                    z_dive_to: dive_to,
                });
            }
        }
    }
    if out.is_empty() {
        return Err(ProfileError::NoFeasibleProfile);
    }
    Ok(out)
}
