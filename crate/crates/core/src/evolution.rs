//! Continuous paths `s -> P(s)` on `[0, 1]`.
//!
//! Every kind is stored as keyframes and sampled by linear interpolation
//! between adjacent keyframes. `Convex` is the two-keyframe case,
//! `PiecewiseLinear` an arbitrary polyline, and `SampledGrid` a user-supplied
//! grid whose Lipschitz constant is only an estimate of the underlying path's.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{normalize_rows, StochasticMatrix};
use crate::structure::{Mode, Structure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolutionKind {
    Convex,
    PiecewiseLinear,
    SampledGrid,
}

impl EvolutionKind {
    /// Whether the stored polyline is the path itself (as opposed to samples of it).
    pub fn is_exact(self) -> bool {
        !matches!(self, EvolutionKind::SampledGrid)
    }
}

/// Immutable path of stochastic matrices over `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    kind: EvolutionKind,
    breakpoints: Vec<f64>,
    matrices: Vec<StochasticMatrix>,
}

/// Serialized form of an [`Evolution`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSpec {
    pub kind: EvolutionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breakpoints: Option<Vec<f64>>,
    pub matrices: Vec<Vec<Vec<f64>>>,
}

impl Evolution {
    /// `P(s) = (1 - s) P0 + s P1`.
    pub fn convex(p0: StochasticMatrix, p1: StochasticMatrix) -> Result<Self> {
        if p0.n() != p1.n() {
            return Err(Error::DimensionMismatch {
                expected: p0.n(),
                found: p1.n(),
            });
        }
        Ok(Self {
            kind: EvolutionKind::Convex,
            breakpoints: vec![0.0, 1.0],
            matrices: vec![p0, p1],
        })
    }

    /// The constant path at `p`.
    pub fn constant(p: StochasticMatrix) -> Self {
        Self {
            kind: EvolutionKind::Convex,
            breakpoints: vec![0.0, 1.0],
            matrices: vec![p.clone(), p],
        }
    }

    pub fn piecewise_linear(keyframes: Vec<(f64, StochasticMatrix)>) -> Result<Self> {
        Self::from_keyframes(EvolutionKind::PiecewiseLinear, keyframes)
    }

    /// A grid of samples of an arbitrary path, interpolated linearly.
    pub fn sampled_grid(samples: Vec<(f64, StochasticMatrix)>) -> Result<Self> {
        Self::from_keyframes(EvolutionKind::SampledGrid, samples)
    }

    fn from_keyframes(kind: EvolutionKind, keyframes: Vec<(f64, StochasticMatrix)>) -> Result<Self> {
        if keyframes.len() < 2 {
            return Err(Error::BadBreakpoints(format!(
                "need at least 2 keyframes, got {}",
                keyframes.len()
            )));
        }
        let (breakpoints, matrices): (Vec<f64>, Vec<StochasticMatrix>) = keyframes.into_iter().unzip();
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return Err(Error::BadBreakpoints(
                "breakpoints must start at 0 and end at 1".into(),
            ));
        }
        if let Some(w) = breakpoints.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(Error::BadBreakpoints(format!(
                "breakpoints not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        let n = matrices[0].n();
        if let Some(m) = matrices.iter().find(|m| m.n() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.n(),
            });
        }
        Ok(Self {
            kind,
            breakpoints,
            matrices,
        })
    }

    pub fn from_spec(spec: &EvolutionSpec, row_tol: f64) -> Result<Self> {
        let matrices = spec
            .matrices
            .iter()
            .map(|m| StochasticMatrix::ingest(m, row_tol))
            .collect::<Result<Vec<_>>>()?;
        match spec.kind {
            EvolutionKind::Convex => {
                if let Some(b) = &spec.breakpoints {
                    if b.as_slice() != [0.0, 1.0] {
                        return Err(Error::BadBreakpoints(
                            "convex evolutions have breakpoints [0, 1]".into(),
                        ));
                    }
                }
                let [p0, p1]: [StochasticMatrix; 2] = matrices.try_into().map_err(|m: Vec<_>| {
                    Error::BadBreakpoints(format!(
                        "convex evolutions take exactly 2 matrices, got {}",
                        m.len()
                    ))
                })?;
                Self::convex(p0, p1)
            }
            kind => {
                let breakpoints = spec.breakpoints.clone().ok_or_else(|| {
                    Error::BadBreakpoints("breakpoints are required for this kind".into())
                })?;
                if breakpoints.len() != matrices.len() {
                    return Err(Error::BadBreakpoints(format!(
                        "{} breakpoints for {} matrices",
                        breakpoints.len(),
                        matrices.len()
                    )));
                }
                Self::from_keyframes(kind, breakpoints.into_iter().zip(matrices).collect())
            }
        }
    }

    pub fn to_spec(&self) -> EvolutionSpec {
        EvolutionSpec {
            kind: self.kind,
            breakpoints: match self.kind {
                EvolutionKind::Convex => None,
                _ => Some(self.breakpoints.clone()),
            },
            matrices: self.matrices.iter().map(|m| m.to_rows()).collect(),
        }
    }

    pub fn kind(&self) -> EvolutionKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.matrices[0].n()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn keyframes(&self) -> impl Iterator<Item = (f64, &StochasticMatrix)> {
        self.breakpoints.iter().copied().zip(self.matrices.iter())
    }

    /// Uniform grid of `points` values on `[0, 1]` merged with every breakpoint.
    pub fn grid(&self, points: usize) -> Vec<f64> {
        let points = points.max(2);
        let mut g: Vec<f64> = (0..points)
            .map(|i| i as f64 / (points - 1) as f64)
            .chain(self.breakpoints.iter().copied())
            .collect();
        g.sort_by(f64::total_cmp);
        g.dedup();
        g
    }

    /// `P(s)`. Returns the stored keyframe bit-for-bit when `s` is a breakpoint.
    pub fn sample(&self, s: f64) -> Result<StochasticMatrix> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::OutOfRange { s });
        }
        let idx = self.breakpoints.partition_point(|&b| b <= s);
        // idx >= 1 since breakpoints[0] == 0 <= s
        let i = idx - 1;
        if self.breakpoints[i] == s {
            return Ok(self.matrices[i].clone());
        }
        let (a, b) = (self.breakpoints[i], self.breakpoints[i + 1]);
        let t = (s - a) / (b - a);
        let (lo, hi) = (&self.matrices[i], &self.matrices[i + 1]);
        let mut data: Vec<f64> = lo
            .as_slice()
            .iter()
            .zip(hi.as_slice())
            .map(|(&x, &y)| if x == y { x } else { (1.0 - t) * x + t * y })
            .collect();
        normalize_rows(self.n(), &mut data);
        Ok(StochasticMatrix::from_normalized(self.n(), data))
    }

    /// Largest segment slope `||P_{i+1} - P_i|| / (s_{i+1} - s_i)`.
    ///
    /// Along one linear segment `||P(x) - P(y)|| = |x - y| * ||slope||`, so the
    /// maximum slope is the global Lipschitz constant for exact kinds.
    pub fn lipschitz_constant(&self) -> LipschitzEstimate {
        let value = self
            .breakpoints
            .windows(2)
            .zip(self.matrices.windows(2))
            .map(|(s, m)| {
                m[1].distance(&m[0]).expect("dimensions checked at construction") / (s[1] - s[0])
            })
            .fold(0.0, f64::max);
        let exact = self.kind.is_exact();
        LipschitzEstimate {
            value,
            exact,
            grid_resolution: (!exact).then_some(self.breakpoints.len()),
        }
    }

    /// Classify every keyframe and one interior point (the midpoint) of every
    /// segment.
    ///
    /// On an open segment the support is the union of the two endpoint
    /// supports, so the midpoint verdict holds for the whole segment.
    pub fn structural_certificate(&self, mode: Mode) -> StructuralCertificate {
        let segments: Vec<SegmentVerdict> = self
            .breakpoints
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let p = self.sample(mid).expect("midpoint lies in [0, 1]");
                let st = p.structure();
                SegmentVerdict {
                    start: w[0],
                    end: w[1],
                    irreducible: st.irreducible,
                    aperiodic: st.aperiodic,
                }
            })
            .collect();
        let keyframes: Vec<KeyframeVerdict> = self
            .keyframes()
            .map(|(s, m)| KeyframeVerdict {
                s,
                passes: m.structure().satisfies(mode),
                structure: m.structure().clone(),
            })
            .collect();
        let overall = segments.iter().all(|v| v.irreducible && v.aperiodic)
            && keyframes.iter().all(|k| k.passes);
        StructuralCertificate {
            mode,
            segments,
            keyframes,
            overall,
        }
    }

    /// Certificate in `mode`, or a [`Error::Hypotheses`] naming the first failure.
    pub fn require(&self, mode: Mode) -> Result<StructuralCertificate> {
        let cert = self.structural_certificate(mode);
        match cert.first_failure() {
            None => Ok(cert),
            Some(msg) => Err(Error::Hypotheses(msg)),
        }
    }

    /// The path restricted to `[a, b]` and reparametrized onto `[0, 1]`.
    pub fn restrict(&self, a: f64, b: f64) -> Result<Self> {
        if !(0.0 <= a && a < b && b <= 1.0) {
            return Err(Error::BadBreakpoints(format!(
                "restriction interval [{a}, {b}] is not a subinterval of [0, 1]"
            )));
        }
        let mut frames = vec![(0.0, self.sample(a)?)];
        for (s, m) in self.keyframes() {
            if a < s && s < b {
                frames.push(((s - a) / (b - a), m.clone()));
            }
        }
        frames.push((1.0, self.sample(b)?));
        if self.kind == EvolutionKind::Convex {
            let [(_, p0), (_, p1)]: [(f64, StochasticMatrix); 2] =
                frames.try_into().expect("convex restriction has two frames");
            return Self::convex(p0, p1);
        }
        Self::from_keyframes(self.kind, frames)
    }
}

impl Serialize for Evolution {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_spec().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Evolution {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let spec = EvolutionSpec::deserialize(deserializer)?;
        Evolution::from_spec(&spec, crate::matrix::DEFAULT_ROW_TOL).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEstimate {
    pub value: f64,
    pub exact: bool,
    pub grid_resolution: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentVerdict {
    pub start: f64,
    pub end: f64,
    pub irreducible: bool,
    pub aperiodic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyframeVerdict {
    pub s: f64,
    pub passes: bool,
    pub structure: Structure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralCertificate {
    pub mode: Mode,
    pub segments: Vec<SegmentVerdict>,
    pub keyframes: Vec<KeyframeVerdict>,
    pub overall: bool,
}

impl StructuralCertificate {
    pub fn first_failure(&self) -> Option<String> {
        if let Some(seg) = self.segments.iter().find(|v| !(v.irreducible && v.aperiodic)) {
            return Some(format!(
                "segment ({}, {}) is {}",
                seg.start,
                seg.end,
                if seg.irreducible { "periodic" } else { "reducible" }
            ));
        }
        self.keyframes.iter().find(|k| !k.passes).map(|k| {
            format!(
                "keyframe at s = {} fails {:?} mode ({} recurrent classes, periods {:?})",
                k.s,
                self.mode,
                k.structure.recurrent_classes.len(),
                k.structure.class_periods
            )
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::shift_reset_family;

    fn m(rows: &[&[f64]]) -> StochasticMatrix {
        StochasticMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn convex_family_midpoint() {
        let e = shift_reset_family(3);
        let p = e.sample(0.5).unwrap();
        assert_eq!(
            p.to_rows(),
            vec![
                vec![0.5, 0.5, 0.0],
                vec![0.5, 0.0, 0.5],
                vec![0.5, 0.0, 0.5]
            ]
        );
        assert!(p.structure().is_ergodic());
    }

    #[test]
    fn endpoints_and_breakpoints_are_exact() {
        let e = shift_reset_family(4);
        assert_eq!(&e.sample(0.0).unwrap(), e.keyframes().next().unwrap().1);
        assert_eq!(&e.sample(1.0).unwrap(), e.keyframes().nth(1).unwrap().1);
        let a = m(&[&[0.9, 0.1], &[0.3, 0.7]]);
        let b = m(&[&[0.2, 0.8], &[0.6, 0.4]]);
        let c = m(&[&[0.5, 0.5], &[0.1, 0.9]]);
        let pl = Evolution::piecewise_linear(vec![(0.0, a), (0.3, b.clone()), (1.0, c)]).unwrap();
        assert_eq!(pl.sample(0.3).unwrap().as_slice(), b.as_slice());
    }

    #[test]
    fn piecewise_linear_interpolates() {
        let a = m(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let b = m(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let e = Evolution::piecewise_linear(vec![(0.0, a.clone()), (0.5, b.clone()), (1.0, a)]).unwrap();
        assert_eq!(e.sample(0.25).unwrap().to_rows(), vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
        let two = Evolution::piecewise_linear(vec![(0.0, m(&[&[1.0, 0.0], &[0.0, 1.0]])), (1.0, b.clone())])
            .unwrap();
        let cvx = Evolution::convex(m(&[&[1.0, 0.0], &[0.0, 1.0]]), b).unwrap();
        for s in [0.0, 0.1, 0.37, 0.5, 1.0] {
            assert_eq!(two.sample(s).unwrap(), cvx.sample(s).unwrap());
        }
    }

    #[test]
    fn bad_breakpoints() {
        let a = StochasticMatrix::uniform(2);
        let frames = |bs: &[f64]| bs.iter().map(|&s| (s, a.clone())).collect::<Vec<_>>();
        assert!(matches!(
            Evolution::piecewise_linear(frames(&[0.0, 0.5, 0.4, 1.0])),
            Err(Error::BadBreakpoints(_))
        ));
        assert!(Evolution::piecewise_linear(frames(&[0.0])).is_err());
        assert!(Evolution::piecewise_linear(frames(&[0.1, 1.0])).is_err());
        assert!(Evolution::piecewise_linear(frames(&[0.0, 0.9])).is_err());
        assert!(matches!(
            Evolution::convex(a.clone(), StochasticMatrix::uniform(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sample_out_of_range() {
        let e = Evolution::constant(StochasticMatrix::uniform(2));
        assert!(matches!(e.sample(1.5), Err(Error::OutOfRange { .. })));
        assert!(matches!(e.sample(-0.1), Err(Error::OutOfRange { .. })));
        assert!(matches!(e.sample(f64::NAN), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn lipschitz_examples() {
        let e = Evolution::constant(m(&[&[0.75, 0.25], &[0.25, 0.75]]));
        assert_eq!(e.lipschitz_constant().value, 0.0);
        for n in 2..8 {
            let l = shift_reset_family(n).lipschitz_constant();
            assert_eq!(l.value, 2.0);
            assert!(l.exact);
        }
        // slopes 1 and 3
        let a = m(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let b = m(&[&[0.75, 0.25], &[0.0, 1.0]]); // ||b - a|| = 0.5 over 0.5
        let c = m(&[&[0.0, 1.0], &[0.0, 1.0]]); // ||c - b|| = 1.5 over 0.5
        let pl = Evolution::piecewise_linear(vec![(0.0, a), (0.5, b), (1.0, c)]).unwrap();
        assert_eq!(pl.lipschitz_constant().value, 3.0);
        let grid = Evolution::sampled_grid(pl.keyframes().map(|(s, m)| (s, m.clone())).collect()).unwrap();
        let est = grid.lipschitz_constant();
        assert!(!est.exact);
        assert_eq!(est.grid_resolution, Some(3));
    }

    #[test]
    fn certificate_examples() {
        let p = m(&[&[0.75, 0.25], &[0.25, 0.75]]);
        assert!(Evolution::constant(p).structural_certificate(Mode::Strict).overall);

        let fam = shift_reset_family(3);
        let strict = fam.structural_certificate(Mode::Strict);
        assert!(strict.segments.iter().all(|v| v.irreducible && v.aperiodic));
        assert!(!strict.overall);
        assert!(strict.keyframes.iter().all(|k| !k.passes));
        assert!(fam.structural_certificate(Mode::Relaxed).overall);

        let id = Evolution::constant(StochasticMatrix::identity(3));
        assert!(!id.structural_certificate(Mode::Relaxed).overall);
        assert!(id.require(Mode::Relaxed).is_err());
    }

    #[test]
    fn json_schema_round_trip() {
        let fam = shift_reset_family(3);
        let json = serde_json::to_string(&fam).unwrap();
        assert!(json.starts_with(r#"{"kind":"convex","matrices":"#));
        let back: Evolution = serde_json::from_str(&json).unwrap();
        assert_eq!(back, fam);

        let pl = r#"{"kind":"piecewise_linear","breakpoints":[0,0.5,1],
            "matrices":[[[1,0],[0,1]],[[0.5,0.5],[0.5,0.5]],[[0,1],[1,0]]]}"#;
        let e: Evolution = serde_json::from_str(pl).unwrap();
        assert_eq!(e.kind(), EvolutionKind::PiecewiseLinear);
        let missing = r#"{"kind":"sampled_grid","matrices":[[[1]],[[1]]]}"#;
        assert!(serde_json::from_str::<Evolution>(missing).is_err());
        let three = r#"{"kind":"convex","matrices":[[[1]],[[1]],[[1]]]}"#;
        assert!(serde_json::from_str::<Evolution>(three).is_err());
    }

    #[test]
    fn restriction_reparametrizes() {
        let fam = shift_reset_family(3);
        let r = fam.restrict(0.1, 0.9).unwrap();
        assert_eq!(r.kind(), EvolutionKind::Convex);
        let direct = fam.sample(0.5).unwrap();
        let via = r.sample(0.5).unwrap();
        assert!(direct.distance(&via).unwrap() < 1e-15);
        assert!((r.lipschitz_constant().value - 1.6).abs() < 1e-12);
    }
}
