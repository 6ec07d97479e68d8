//! Exclusion scans over the classical-quantum `(D0, D2)` plane.
//!
//! A cell is excluded by a detector when the predicted single-body force
//! noise exceeds `m² S_aa²`. Both sides scale with `m²`, so only the
//! detector's linear size and acceleration noise set the boundary.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{require_positive, Error, Result};
use crate::models::{cq_sff_closed, CqParams};
use crate::units::{G_N, HBAR};

/// Minimum points per axis.
pub const MIN_RESOLUTION: usize = 8;
/// Default test-mass density, kg/m³.
pub const DEFAULT_DENSITY: f64 = 2e4;
/// Linear size of the measured device, m.
pub const LISA_PATHFINDER_ELL: f64 = 46e-3;
/// Its acceleration noise, m/s²/√Hz.
pub const LISA_PATHFINDER_SAA: f64 = 1e-15;
/// Acceleration noise at the non-entangling threshold, m/s²/√Hz.
pub const THRESHOLD_SAA: f64 = 1e-18;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct LogAxis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl LogAxis {
    pub fn new(min: f64, max: f64, points: usize) -> Result<Self> {
        let a = Self { min, max, points };
        a.validate("axis")?;
        Ok(a)
    }

    fn validate(&self, what: &'static str) -> Result<()> {
        require_positive(what, self.min)?;
        require_positive(what, self.max)?;
        if !(self.max > self.min) {
            return Err(Error::domain(
                what,
                alloc::format!("range [{:e}, {:e}] is empty", self.min, self.max),
            ));
        }
        if self.points < MIN_RESOLUTION {
            return Err(Error::domain(
                what,
                alloc::format!("{} points, at least {MIN_RESOLUTION} required", self.points),
            ));
        }
        Ok(())
    }

    /// The `i`-th point. Shared points of an axis and its refinement
    /// (`2n - 1` points) agree bit for bit.
    pub fn value(&self, i: usize) -> f64 {
        if i == 0 {
            return self.min;
        }
        if i + 1 == self.points {
            return self.max;
        }
        let t = i as f64 / (self.points - 1) as f64;
        let (a, b) = (libm::log(self.min), libm::log(self.max));
        libm::exp(a + t * (b - a))
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.value(i)).collect()
    }

    /// Halved spacing over the same range.
    pub fn refined(&self) -> Self {
        Self {
            points: 2 * self.points - 1,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct Detector {
    /// Linear size of the test mass, m.
    pub ell: f64,
    /// Test mass, kg. Defaults to `rho ℓ³`.
    #[cfg_attr(feature = "serde", serde(default))]
    pub mass: Option<f64>,
    /// Density, kg/m³, used when `mass` is absent.
    #[cfg_attr(feature = "serde", serde(default = "default_density"))]
    pub rho: f64,
    /// Acceleration noise amplitude, m/s²/√Hz.
    pub s_aa: f64,
}

#[cfg(feature = "serde")]
fn default_density() -> f64 {
    DEFAULT_DENSITY
}

impl Detector {
    pub fn new(ell: f64, s_aa: f64) -> Self {
        Self {
            ell,
            mass: None,
            rho: DEFAULT_DENSITY,
            s_aa,
        }
    }

    pub fn lisa_pathfinder() -> Self {
        Self::new(LISA_PATHFINDER_ELL, LISA_PATHFINDER_SAA)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("detector ell", self.ell)?;
        require_positive("detector s_aa", self.s_aa)?;
        match self.mass {
            Some(m) => require_positive("detector mass", m).map(|_| ()),
            None => require_positive("detector rho", self.rho).map(|_| ()),
        }
    }

    pub fn mass(&self) -> f64 {
        self.mass.unwrap_or(self.rho * self.ell * self.ell * self.ell)
    }

    /// Force-noise bound `m² S_aa²`, N²/Hz.
    pub fn sff_bound(&self) -> f64 {
        let m = self.mass();
        m * m * self.s_aa * self.s_aa
    }

    /// `K` in the exclusion condition `D0 + 5ℓ⁴ D2 > K`, m².
    pub fn exclusion_level(&self) -> f64 {
        let l = self.ell;
        15.0 * core::f64::consts::PI * l * l * l * l * l * self.s_aa * self.s_aa / (4.0 * G_N * HBAR)
    }

    /// Straight-line limits of the exclusion boundary in the log-log plane.
    pub fn boundary(&self) -> BoundaryAsymptotes {
        let k = self.exclusion_level();
        let l4 = self.ell * self.ell * self.ell * self.ell;
        BoundaryAsymptotes {
            d0_limit: k,
            d2_limit: k / (5.0 * l4),
            corner: (0.5 * k, 0.1 * k / l4),
        }
    }
}

/// Boundary of `D0 + 5ℓ⁴ D2 = K`: constant `D0 = K` as `D2 → 0`, constant
/// `D2 = K/5ℓ⁴` as `D0 → 0`, crossing over where `ℓ D0 = 5ℓ⁵ D2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryAsymptotes {
    pub d0_limit: f64,
    pub d2_limit: f64,
    pub corner: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ScanSpec {
    /// `D0`, m².
    pub d0: LogAxis,
    /// `D2`, m⁻².
    pub d2: LogAxis,
    pub measured: Detector,
    pub threshold: Detector,
}

impl Default for ScanSpec {
    /// Spans all four regions for the measured device and the same device
    /// operated at the threshold noise.
    fn default() -> Self {
        Self {
            d0: LogAxis {
                min: 1e-6,
                max: 1e12,
                points: 61,
            },
            d2: LogAxis {
                min: 1e-6,
                max: 1e18,
                points: 61,
            },
            measured: Detector::lisa_pathfinder(),
            threshold: Detector::new(LISA_PATHFINDER_ELL, THRESHOLD_SAA),
        }
    }
}

impl ScanSpec {
    pub fn validate(&self) -> Result<()> {
        self.d0.validate("D0 axis")?;
        self.d2.validate("D2 axis")?;
        self.measured.validate()?;
        self.threshold.validate()
    }

    pub fn cells(&self) -> usize {
        self.d0.points * self.d2.points
    }

    /// Axis indices of cell `index`; `D0` is the outer index.
    pub fn indices(&self, index: usize) -> (usize, usize) {
        (index / self.d2.points, index % self.d2.points)
    }

    pub fn refined(&self) -> Self {
        Self {
            d0: self.d0.refined(),
            d2: self.d2.refined(),
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Label {
    #[cfg_attr(feature = "serde", serde(rename = "FORBIDDEN_TRADEOFF"))]
    ForbiddenTradeoff,
    #[cfg_attr(feature = "serde", serde(rename = "EXCLUDED_MEASURED"))]
    ExcludedMeasured,
    #[cfg_attr(feature = "serde", serde(rename = "EXCLUDED_AT_THRESHOLD"))]
    ExcludedAtThreshold,
    #[cfg_attr(feature = "serde", serde(rename = "OPEN"))]
    Open,
}

impl Label {
    pub const ALL: [Label; 4] = [
        Label::ForbiddenTradeoff,
        Label::ExcludedMeasured,
        Label::ExcludedAtThreshold,
        Label::Open,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Label::ForbiddenTradeoff => "FORBIDDEN_TRADEOFF",
            Label::ExcludedMeasured => "EXCLUDED_MEASURED",
            Label::ExcludedAtThreshold => "EXCLUDED_AT_THRESHOLD",
            Label::Open => "OPEN",
        }
    }

    pub fn is_excluded(&self) -> bool {
        matches!(self, Label::ExcludedMeasured | Label::ExcludedAtThreshold)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Label::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::domain("label", alloc::format!("unknown label {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Cell {
    #[cfg_attr(feature = "serde", serde(rename = "D0"))]
    pub d0: f64,
    #[cfg_attr(feature = "serde", serde(rename = "D2"))]
    pub d2: f64,
    /// Predicted force noise on the measured device, N²/Hz.
    #[cfg_attr(feature = "serde", serde(rename = "S_FF_pred"))]
    pub s_ff_pred: f64,
    pub label: Label,
}

/// Prediction and label of a single point.
pub fn classify(spec: &ScanSpec, d0: f64, d2: f64) -> Result<Cell> {
    let measured = CqParams::new(d0, d2, spec.measured.ell)?;
    let s_ff_pred = cq_sff_closed(&measured, spec.measured.mass())?;
    let label = if !measured.satisfies_tradeoff() {
        Label::ForbiddenTradeoff
    } else if s_ff_pred > spec.measured.sff_bound() {
        Label::ExcludedMeasured
    } else {
        let at_threshold = CqParams::new(d0, d2, spec.threshold.ell)?;
        if cq_sff_closed(&at_threshold, spec.threshold.mass())? > spec.threshold.sff_bound() {
            Label::ExcludedAtThreshold
        } else {
            Label::Open
        }
    };
    Ok(Cell {
        d0,
        d2,
        s_ff_pred,
        label,
    })
}

/// Cell `index` of the grid; cells are independent.
pub fn scan_cell(spec: &ScanSpec, index: usize) -> Result<Cell> {
    let (i, j) = spec.indices(index);
    classify(spec, spec.d0.value(i), spec.d2.value(j))
}

/// Sequential scan; front ends may evaluate [`scan_cell`] in parallel and
/// assemble with [`ExclusionGrid::from_cells`].
pub fn scan_cq(spec: &ScanSpec) -> Result<ExclusionGrid> {
    spec.validate()?;
    let cells = (0..spec.cells())
        .map(|n| scan_cell(spec, n))
        .collect::<Result<Vec<_>>>()?;
    ExclusionGrid::from_cells(cells)
}

/// Rectangular grid of cells, `D0` outer and `D2` inner, both ascending.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExclusionGrid {
    pub d0: Vec<f64>,
    pub d2: Vec<f64>,
    pub cells: Vec<Cell>,
}

impl ExclusionGrid {
    /// Rebuilds the axes from cells in any order and checks that they tile a
    /// rectangle exactly once.
    pub fn from_cells(mut cells: Vec<Cell>) -> Result<Self> {
        if cells
            .iter()
            .any(|c| !(c.d0 > 0.0 && c.d2 > 0.0) || c.s_ff_pred.is_nan())
        {
            return Err(Error::domain("grid", "cells need positive D0, D2 and a prediction"));
        }
        cells.sort_by(|a, b| a.d0.total_cmp(&b.d0).then(a.d2.total_cmp(&b.d2)));
        let mut d0: Vec<f64> = cells.iter().map(|c| c.d0).collect();
        d0.dedup();
        let mut d2: Vec<f64> = cells.iter().map(|c| c.d2).collect();
        d2.sort_by(f64::total_cmp);
        d2.dedup();
        if d0.len() * d2.len() != cells.len() {
            return Err(Error::domain(
                "grid",
                alloc::format!("{} cells do not tile a {}x{} grid", cells.len(), d0.len(), d2.len()),
            ));
        }
        for (n, c) in cells.iter().enumerate() {
            if c.d0 != d0[n / d2.len()] || c.d2 != d2[n % d2.len()] {
                return Err(Error::domain("grid", "duplicate or missing cells"));
            }
        }
        Ok(Self { d0, d2, cells })
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn at(&self, i: usize, j: usize) -> &Cell {
        &self.cells[i * self.d2.len() + j]
    }

    pub fn count(&self, label: Label) -> usize {
        self.cells.iter().filter(|c| c.label == label).count()
    }

    pub fn check(&self) -> GridCheck {
        let mut check = GridCheck {
            tradeoff_exact: true,
            upward_closed: true,
            measured_upward_closed: true,
        };
        let (n0, n2) = (self.d0.len(), self.d2.len());
        for i in 0..n0 {
            for j in 0..n2 {
                let c = self.at(i, j);
                if (c.label == Label::ForbiddenTradeoff) != (c.d0 * c.d2 < 1.0) {
                    check.tradeoff_exact = false;
                }
                // Checking the two neighbours above suffices by induction.
                for (ii, jj) in [(i + 1, j), (i, j + 1)] {
                    if ii >= n0 || jj >= n2 {
                        continue;
                    }
                    let up = self.at(ii, jj).label;
                    if c.label.is_excluded() && !up.is_excluded() {
                        check.upward_closed = false;
                    }
                    if c.label == Label::ExcludedMeasured && up != Label::ExcludedMeasured {
                        check.measured_upward_closed = false;
                    }
                }
            }
        }
        check
    }

    /// Labels at the points this grid shares with `fine` that differ.
    pub fn disagreements_with_refinement(&self, fine: &ExclusionGrid) -> usize {
        let mut bad = 0;
        for (i, &d0) in self.d0.iter().enumerate() {
            for (j, &d2) in self.d2.iter().enumerate() {
                let fi = fine.d0.iter().position(|&x| x == d0);
                let fj = fine.d2.iter().position(|&x| x == d2);
                match (fi, fj) {
                    (Some(fi), Some(fj)) if fine.at(fi, fj).label == self.at(i, j).label => {}
                    _ => bad += 1,
                }
            }
        }
        bad
    }

    /// Smallest `D0` in row `j` whose label satisfies `pred`.
    pub fn boundary_d0(&self, j: usize, pred: impl Fn(Label) -> bool) -> Option<f64> {
        (0..self.d0.len())
            .map(|i| self.at(i, j))
            .find(|c| pred(c.label))
            .map(|c| c.d0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridCheck {
    pub tradeoff_exact: bool,
    /// The union of both exclusion labels is upward closed.
    pub upward_closed: bool,
    pub measured_upward_closed: bool,
}

impl GridCheck {
    pub fn ok(&self) -> bool {
        self.tradeoff_exact && self.upward_closed && self.measured_upward_closed
    }

    pub fn failures(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !self.tradeoff_exact {
            v.push(String::from("tradeoff label does not match D0*D2 < 1"));
        }
        if !self.upward_closed {
            v.push(String::from("exclusion is not upward closed"));
        }
        if !self.measured_upward_closed {
            v.push(String::from("measured exclusion is not upward closed"));
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn half_tradeoff_is_forbidden() {
        let c = classify(&ScanSpec::default(), 0.5, 1.0).unwrap();
        assert_eq!(c.label, Label::ForbiddenTradeoff);
    }

    #[test]
    fn default_scan_has_all_labels() {
        let g = scan_cq(&ScanSpec::default()).unwrap();
        for l in Label::ALL {
            assert!(g.count(l) > 0, "{l}");
        }
        assert!(g.check().ok(), "{:?}", g.check().failures());
    }

    #[test]
    fn exclusion_level_matches_prediction() {
        let det = Detector::lisa_pathfinder();
        let k = det.exclusion_level();
        // D0 alone at the level reproduces the bound.
        let p = CqParams::new(k, 1.0 / k, det.ell).unwrap();
        let s = cq_sff_closed(&p, det.mass()).unwrap();
        let s_only_d0 = s - cq_sff_closed(&CqParams::new(1e-300, 1.0 / k, det.ell).unwrap(), det.mass()).unwrap();
        assert_relative_eq!(s_only_d0, det.sff_bound(), max_relative = 1e-12);
        assert!(k > 1e8 && k < 1e9, "{k}");
    }

    #[test]
    fn refinement_shares_points() {
        let a = LogAxis::new(1e-3, 1e5, 9).unwrap();
        let f = a.refined();
        for i in 0..a.points {
            assert_eq!(a.value(i), f.value(2 * i));
        }
    }

    #[test]
    fn spec_validation() {
        let mut s = ScanSpec::default();
        s.d0.points = 7;
        assert!(s.validate().is_err());
        s = ScanSpec::default();
        s.d2.min = 0.0;
        assert!(s.validate().is_err());
        s = ScanSpec::default();
        s.measured.mass = Some(-1.0);
        assert!(s.validate().is_err());
    }

    #[test]
    fn cells_round_trip_through_from_cells() {
        let mut s = ScanSpec::default();
        s.d0.points = 8;
        s.d2.points = 9;
        let g = scan_cq(&s).unwrap();
        let mut shuffled = g.cells.clone();
        shuffled.reverse();
        assert_eq!(ExclusionGrid::from_cells(shuffled).unwrap(), g);
        let mut missing = g.cells.clone();
        missing.pop();
        assert!(ExclusionGrid::from_cells(missing).is_err());
        assert!(ExclusionGrid::from_cells(Vec::new()).unwrap().is_empty());
    }
}
