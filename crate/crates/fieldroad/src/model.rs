//! Problem definition for the field-road system: a rectangular field
//! Omega = (xMin, xMax) x (0, L) diffusing with coefficient d, coupled through
//! its bottom edge to a one-dimensional road diffusing with coefficient D.
//! The coupling exchanges mass at rates mu0 u^beta (road to field) and
//! nu0 v^alpha (field to road), scaled so that (1/alpha) field mass plus
//! (1/beta) road mass is conserved exactly.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    /// Field depth L; the field occupies y in (0, L).
    pub l: f64,
    pub x_min: f64,
    pub x_max: f64,
}

impl Geometry {
    pub fn new(l: f64, x_min: f64, x_max: f64) -> Result<Self> {
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::Config(format!("field depth must be positive, got {l}")));
        }
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::Config(format!(
                "road interval must satisfy xMin < xMax, got ({x_min}, {x_max})"
            )));
        }
        Ok(Self { l, x_min, x_max })
    }

    pub fn length_road(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn area_field(&self) -> f64 {
        self.length_road() * self.l
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub alpha: f64,
    pub beta: f64,
    /// Field diffusivity.
    pub d_field: f64,
    /// Road diffusivity.
    pub d_road: f64,
    pub mu0: f64,
    pub nu0: f64,
}

impl Params {
    pub fn new(alpha: f64, beta: f64, d_field: f64, d_road: f64, mu0: f64, nu0: f64) -> Result<Self> {
        for (name, value) in [("alpha", alpha), ("beta", beta)] {
            if !(value >= 1.0) || !value.is_finite() {
                return Err(Error::Config(format!("{name} must be >= 1, got {value}")));
            }
        }
        for (name, value) in [
            ("d", d_field),
            ("D", d_road),
            ("mu0", mu0),
            ("nu0", nu0),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {value}")));
            }
        }
        Ok(Self { alpha, beta, d_field, d_road, mu0, nu0 })
    }

    /// Shortcut mu = alpha mu0 (net road-to-field rate coefficient).
    pub fn mu(&self) -> f64 {
        self.alpha * self.mu0
    }

    /// Shortcut nu = alpha nu0.
    pub fn nu(&self) -> f64 {
        self.alpha * self.nu0
    }
}

/// One piecewise-constant block of field data: `value` on the union of the
/// x-intervals times the single y-interval.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPiece {
    pub x_intervals: Vec<[f64; 2]>,
    pub y_interval: [f64; 2],
    pub value: f64,
}

/// One piecewise-constant block of road data.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadPiece {
    pub x_intervals: Vec<[f64; 2]>,
    pub value: f64,
}

/// Piecewise-constant initial data. Intervals are closed; where pieces
/// overlap their values add.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InitialData {
    pub field: Vec<FieldPiece>,
    pub road: Vec<RoadPiece>,
}

fn check_intervals(kind: &str, intervals: &[[f64; 2]], lo: f64, hi: f64) -> Result<()> {
    if intervals.is_empty() {
        return Err(Error::Config(format!("{kind} piece has no x-intervals")));
    }
    for w in intervals {
        let [a, b] = *w;
        if !(a < b) {
            return Err(Error::Config(format!("{kind} interval [{a}, {b}] is empty or reversed")));
        }
        if a < lo || b > hi {
            return Err(Error::Config(format!(
                "{kind} interval [{a}, {b}] leaves the domain [{lo}, {hi}]"
            )));
        }
    }
    // Disjointness keeps the union measure equal to the sum of lengths.
    let mut sorted: Vec<[f64; 2]> = intervals.to_vec();
    sorted.sort_by(|p, q| p[0].total_cmp(&q[0]));
    for pair in sorted.windows(2) {
        if pair[1][0] < pair[0][1] {
            return Err(Error::Config(format!(
                "{kind} intervals [{}, {}] and [{}, {}] overlap",
                pair[0][0], pair[0][1], pair[1][0], pair[1][1]
            )));
        }
    }
    Ok(())
}

impl InitialData {
    pub fn validate(&self, geom: &Geometry) -> Result<()> {
        for piece in &self.field {
            check_intervals("field", &piece.x_intervals, geom.x_min, geom.x_max)?;
            let [c, d] = piece.y_interval;
            if !(c < d) || c < 0.0 || d > geom.l {
                return Err(Error::Config(format!(
                    "field y-interval [{c}, {d}] must lie inside [0, {}]",
                    geom.l
                )));
            }
            if !(piece.value >= 0.0) {
                return Err(Error::Config(format!(
                    "field piece value must be nonnegative, got {}",
                    piece.value
                )));
            }
        }
        for piece in &self.road {
            check_intervals("road", &piece.x_intervals, geom.x_min, geom.x_max)?;
            if !(piece.value >= 0.0) {
                return Err(Error::Config(format!(
                    "road piece value must be nonnegative, got {}",
                    piece.value
                )));
            }
        }
        if self.initial_mass(geom) == 0.0 {
            return Err(Error::Config(
                "initial data carries no mass on either the field or the road".into(),
            ));
        }
        Ok(())
    }

    /// Pointwise field value v0(x, y). Errors outside the closed rectangle.
    pub fn eval_field(&self, geom: &Geometry, x: f64, y: f64) -> Result<f64> {
        if x < geom.x_min || x > geom.x_max || y < 0.0 || y > geom.l {
            return Err(Error::Domain(format!("({x}, {y}) lies outside the field rectangle")));
        }
        let mut v = 0.0;
        for piece in &self.field {
            let [c, d] = piece.y_interval;
            if y >= c && y <= d && piece.x_intervals.iter().any(|w| x >= w[0] && x <= w[1]) {
                v += piece.value;
            }
        }
        Ok(v)
    }

    /// Pointwise road value u0(x). Errors outside the closed interval.
    pub fn eval_road(&self, geom: &Geometry, x: f64) -> Result<f64> {
        if x < geom.x_min || x > geom.x_max {
            return Err(Error::Domain(format!("{x} lies outside the road interval")));
        }
        let mut u = 0.0;
        for piece in &self.road {
            if piece.x_intervals.iter().any(|w| x >= w[0] && x <= w[1]) {
                u += piece.value;
            }
        }
        Ok(u)
    }

    /// Total initial mass M0 = int v0 + int u0, by exact interval arithmetic.
    pub fn initial_mass(&self, _geom: &Geometry) -> f64 {
        let mut m = 0.0;
        for piece in &self.field {
            let lx: f64 = piece.x_intervals.iter().map(|w| w[1] - w[0]).sum();
            m += piece.value * lx * (piece.y_interval[1] - piece.y_interval[0]);
        }
        for piece in &self.road {
            let lx: f64 = piece.x_intervals.iter().map(|w| w[1] - w[0]).sum();
            m += piece.value * lx;
        }
        m
    }
}

/// The two reference configurations: four source blocks of width 2.5 placed
/// symmetrically about x = 0, either all mass in the field (1) or split
/// between a thinner field layer and the road (2). Both carry total mass 2500
/// on the rectangle (-40, 40) x (0, 20). Exponents are chosen by the caller.
pub fn preset(id: u32) -> Result<(Geometry, InitialData)> {
    let geom = Geometry::new(20.0, -40.0, 40.0)?;
    let blocks = vec![[-10.0, -7.5], [-5.0, -2.5], [2.5, 5.0], [7.5, 10.0]];
    let data = match id {
        1 => InitialData {
            field: vec![FieldPiece {
                x_intervals: blocks,
                y_interval: [7.5, 10.0],
                value: 100.0,
            }],
            road: vec![],
        },
        2 => InitialData {
            field: vec![FieldPiece {
                x_intervals: blocks.clone(),
                y_interval: [8.75, 10.0],
                value: 150.0,
            }],
            road: vec![RoadPiece { x_intervals: blocks, value: 62.5 }],
        },
        other => {
            return Err(Error::Config(format!("unknown preset {other}; available presets are 1 and 2")))
        }
    };
    Ok((geom, data))
}

/// Default coefficients used by the reference configurations:
/// d = D = 1, mu0 = 1, nu0 = 5.
pub fn default_coefficients() -> (f64, f64, f64, f64) {
    (1.0, 1.0, 1.0, 5.0)
}
