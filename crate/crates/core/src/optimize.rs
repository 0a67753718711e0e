//! Design search over material and geometry parameters: exhaustive grid
//! search followed by cyclic golden-section coordinate refinement.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use crate::circuit::ReflectionResult;
use crate::sweep::{linspace, unravel, validate_baseline, Execution, Scenario, SweepParameter};
use crate::Error;

/// Parameters the optimizer may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DesignParameter {
    FermiLevel,
    PatchWidth,
    RelaxationTime,
    Frequency,
}

impl DesignParameter {
    pub const ALL: [DesignParameter; 4] = [
        DesignParameter::FermiLevel,
        DesignParameter::PatchWidth,
        DesignParameter::RelaxationTime,
        DesignParameter::Frequency,
    ];

    pub fn sweep_parameter(self) -> SweepParameter {
        match self {
            DesignParameter::FermiLevel => SweepParameter::FermiLevel,
            DesignParameter::PatchWidth => SweepParameter::PatchWidth,
            DesignParameter::RelaxationTime => SweepParameter::RelaxationTime,
            DesignParameter::Frequency => SweepParameter::Frequency,
        }
    }

    pub fn name(self) -> &'static str {
        self.sweep_parameter().name()
    }
}

impl fmt::Display for DesignParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DesignParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DesignParameter::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::config(format!("`{s}` is not an optimizable parameter")))
    }
}

/// Closed interval with grid resolution, interface units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterRange {
    pub parameter: DesignParameter,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl ParameterRange {
    pub fn grid(&self) -> Vec<f64> {
        linspace(self.min, self.max, self.steps)
    }
}

/// Search box: ranges for the varied parameters, baseline for the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterBox {
    pub ranges: Vec<ParameterRange>,
    pub baseline: Scenario,
}

impl ParameterBox {
    pub fn validate(&self) -> Result<(), Error> {
        for (i, r) in self.ranges.iter().enumerate() {
            let name = r.parameter.name();
            if !(r.min.is_finite() && r.max.is_finite() && r.min <= r.max) {
                return Err(Error::validation(
                    name,
                    "range must be finite with min <= max",
                ));
            }
            let positive = match r.parameter {
                DesignParameter::FermiLevel => r.min >= 0.0,
                _ => r.min > 0.0,
            };
            if !positive {
                return Err(Error::validation(
                    name,
                    "range lies outside the physical domain",
                ));
            }
            if r.steps == 0 {
                return Err(Error::validation(name, "steps must be >= 1"));
            }
            if self.ranges[..i].iter().any(|o| o.parameter == r.parameter) {
                return Err(Error::config(format!("parameter `{name}` listed twice")));
            }
        }
        if self.baseline.gate.is_some()
            && self
                .ranges
                .iter()
                .any(|r| r.parameter == DesignParameter::FermiLevel)
        {
            return Err(Error::config(
                "fermi_level cannot be optimized while the gate bias sets it",
            ));
        }
        if self.baseline.phase_target.is_some()
            && self
                .ranges
                .iter()
                .any(|r| r.parameter == DesignParameter::PatchWidth)
        {
            return Err(Error::config(
                "patch_width cannot be optimized while a phase target sets it",
            ));
        }
        validate_baseline(&self.baseline)
    }

    /// Baseline with `point` (interface units, `ranges` order) applied.
    pub fn scenario_at(&self, point: &[f64]) -> Scenario {
        let mut s = self.baseline.clone();
        for (r, &v) in self.ranges.iter().zip(point) {
            s.set(r.parameter.sweep_parameter(), v);
        }
        s
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.ranges.iter().map(|r| (r.min, r.max)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DesignObjective {
    MaximizeRa,
    MatchTarget {
        target_ra: f64,
        target_phase: f64,
        phase_weight: f64,
    },
}

impl DesignObjective {
    pub const DEFAULT_PHASE_WEIGHT: f64 = 1.0 / PI;

    pub fn validate(&self) -> Result<(), Error> {
        if let DesignObjective::MatchTarget {
            target_ra,
            target_phase,
            phase_weight,
        } = *self
        {
            if !(0.0..=1.0).contains(&target_ra) {
                return Err(Error::validation("target_ra", "must lie in [0, 1]"));
            }
            if !target_phase.is_finite() {
                return Err(Error::validation("target_phase", "must be finite"));
            }
            if !(phase_weight.is_finite() && phase_weight >= 0.0) {
                return Err(Error::validation("phase_weight", "must be finite and >= 0"));
            }
        }
        Ok(())
    }

    /// Higher is better.
    pub fn score(&self, r: &ReflectionResult) -> f64 {
        match *self {
            DesignObjective::MaximizeRa => r.reflection_amplitude,
            DesignObjective::MatchTarget {
                target_ra,
                target_phase,
                phase_weight,
            } => {
                -((r.reflection_amplitude - target_ra).abs()
                    + phase_weight * angle_distance(r.phase_circuit, target_phase))
            }
        }
    }
}

/// Wrapped distance between two angles, in [0, π].
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    /// Best point, interface units, in `ranges` order.
    pub point: Vec<f64>,
    pub score: f64,
    pub reflection: ReflectionResult,
    /// Grid points evaluated, including skipped ones.
    pub evaluations: usize,
    /// Points skipped because the model raised an error.
    pub skipped: usize,
}

/// Exhaustive search over the box grid. Ties go to the first point in
/// lexicographic grid order.
pub fn grid_search(
    bx: &ParameterBox,
    obj: &DesignObjective,
    exec: Execution,
) -> Result<GridOutcome, Error> {
    bx.validate()?;
    obj.validate()?;
    let grids: Vec<Vec<f64>> = bx.ranges.iter().map(ParameterRange::grid).collect();
    let lengths: Vec<usize> = grids.iter().map(Vec::len).collect();
    let count = lengths.iter().product::<usize>();
    let evaluated = exec.map_indexed(count, |k| {
        let point: Vec<f64> = unravel(k, &lengths)
            .iter()
            .zip(&grids)
            .map(|(&i, g)| g[i])
            .collect();
        let outcome = bx.scenario_at(&point).evaluate().ok();
        (point, outcome)
    });

    let scores: Vec<Option<f64>> = evaluated
        .iter()
        .map(|(_, o)| {
            o.as_ref()
                .map(|p| obj.score(&p.reflection))
                .filter(|s| !s.is_nan())
        })
        .collect();
    let skipped = scores.iter().filter(|s| s.is_none()).count();
    let k = first_argmax(&scores).ok_or(Error::EmptyFeasibleSet { evaluated: count })?;
    let (point, outcome) = evaluated
        .into_iter()
        .nth(k)
        .expect("index from the same list");
    Ok(GridOutcome {
        point,
        score: scores[k].expect("argmax is feasible"),
        reflection: outcome.expect("argmax is feasible").reflection,
        evaluations: count,
        skipped,
    })
}

/// Index of the largest score; the earliest wins ties, `None` entries are skipped.
fn first_argmax(scores: &[Option<f64>]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, s) in scores.iter().enumerate() {
        if let Some(s) = *s {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((k, s));
            }
        }
    }
    best.map(|(k, _)| k)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub point: Vec<f64>,
    pub score: f64,
    pub start_score: f64,
    /// Set when a non-finite score stopped the search early.
    pub degraded: bool,
    pub cycles: usize,
    pub evaluations: usize,
}

const MAX_CYCLES: usize = 200;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Cyclic coordinate ascent with golden-section line searches.
///
/// `score` returns `None` for infeasible points; those rank below every
/// feasible one. A `Some` non-finite score aborts the search, returning the
/// best point seen so far with `degraded` set. The returned score is never
/// below the start's.
pub fn coordinate_search<F>(
    start: &[f64],
    bounds: &[(f64, f64)],
    tol: &[f64],
    mut score: F,
) -> Refinement
where
    F: FnMut(&[f64]) -> Option<f64>,
{
    struct Abort;
    let mut evaluations = 0;
    let mut eval = |x: &[f64]| -> Result<f64, Abort> {
        evaluations += 1;
        match score(x) {
            None => Ok(f64::NEG_INFINITY),
            Some(s) if s.is_finite() => Ok(s),
            Some(_) => Err(Abort),
        }
    };

    let mut x: Vec<f64> = start
        .iter()
        .zip(bounds)
        .map(|(&v, &(lo, hi))| v.clamp(lo, hi))
        .collect();
    let start_score = match eval(&x) {
        Ok(s) => s,
        Err(Abort) => {
            return Refinement {
                point: x,
                score: f64::NAN,
                start_score: f64::NAN,
                degraded: true,
                cycles: 0,
                evaluations: 1,
            }
        }
    };
    let mut best = start_score;
    let mut cycles = 0;
    let mut degraded = false;

    'outer: while cycles < MAX_CYCLES {
        cycles += 1;
        let mut converged = true;
        for i in 0..x.len() {
            let (mut a, mut b) = bounds[i];
            let tol_i = tol[i].abs().max(f64::MIN_POSITIVE);
            let mut probe = x.clone();
            let mut line = |t: f64, probe: &mut Vec<f64>| {
                probe[i] = t;
                eval(probe)
            };
            let mut cand = (x[i], best);
            let consider = |t: f64, s: f64, cand: &mut (f64, f64)| {
                if s > cand.1 {
                    *cand = (t, s);
                }
            };
            // endpoints first so boundary optima are found exactly
            for t in [a, b] {
                match line(t, &mut probe) {
                    Ok(s) => consider(t, s, &mut cand),
                    Err(Abort) => {
                        degraded = true;
                        break 'outer;
                    }
                }
            }
            if b - a > tol_i {
                let mut c = b - INV_PHI * (b - a);
                let mut d = a + INV_PHI * (b - a);
                let (mut fc, mut fd) = match (line(c, &mut probe), line(d, &mut probe)) {
                    (Ok(fc), Ok(fd)) => (fc, fd),
                    _ => {
                        degraded = true;
                        break 'outer;
                    }
                };
                consider(c, fc, &mut cand);
                consider(d, fd, &mut cand);
                while b - a > tol_i {
                    if fc >= fd {
                        b = d;
                        d = c;
                        fd = fc;
                        c = b - INV_PHI * (b - a);
                        fc = match line(c, &mut probe) {
                            Ok(s) => s,
                            Err(Abort) => {
                                degraded = true;
                                break 'outer;
                            }
                        };
                        consider(c, fc, &mut cand);
                    } else {
                        a = c;
                        c = d;
                        fc = fd;
                        d = a + INV_PHI * (b - a);
                        fd = match line(d, &mut probe) {
                            Ok(s) => s,
                            Err(Abort) => {
                                degraded = true;
                                break 'outer;
                            }
                        };
                        consider(d, fd, &mut cand);
                    }
                }
            }
            if cand.1 > best {
                if (cand.0 - x[i]).abs() >= tol_i {
                    converged = false;
                }
                x[i] = cand.0;
                best = cand.1;
            }
        }
        if converged {
            break;
        }
    }

    Refinement {
        point: x,
        score: best,
        start_score,
        degraded,
        cycles,
        evaluations,
    }
}

/// Refine a design point inside the box with model-evaluated scores.
pub fn refine(
    start: &[f64],
    bx: &ParameterBox,
    obj: &DesignObjective,
    tol: &[f64],
) -> Result<Refinement, Error> {
    bx.validate()?;
    obj.validate()?;
    if start.len() != bx.ranges.len() || tol.len() != bx.ranges.len() {
        return Err(Error::config(
            "start and tolerance must have one entry per range",
        ));
    }
    for (r, &v) in bx.ranges.iter().zip(start) {
        if !(r.min..=r.max).contains(&v) {
            return Err(Error::validation(
                r.parameter.name(),
                "start point lies outside the box",
            ));
        }
    }
    Ok(coordinate_search(start, &bx.bounds(), tol, |x| {
        bx.scenario_at(x)
            .evaluate()
            .ok()
            .map(|p| obj.score(&p.reflection))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_distance_wraps() {
        assert_eq!(angle_distance(0.0, 0.0), 0.0);
        assert!((angle_distance(PI - 0.1, -PI + 0.1) - 0.2).abs() < 1e-12);
        assert!((angle_distance(0.0, PI) - PI).abs() < 1e-12);
        assert!((angle_distance(3.0 * TAU + 0.5, 0.25) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn stationary_start_stays_put() {
        let r = coordinate_search(
            &[0.3, -0.2],
            &[(-1.0, 1.0), (-1.0, 1.0)],
            &[1e-7, 1e-7],
            |x| Some(-(x[0] - 0.3).powi(2) - 2.0 * (x[1] + 0.2).powi(2)),
        );
        assert!((r.point[0] - 0.3).abs() <= 1e-7);
        assert!((r.point[1] + 0.2).abs() <= 1e-7);
        assert_eq!(r.score, 0.0);
    }

    #[test]
    fn monotone_score_hits_upper_endpoint() {
        let r = coordinate_search(&[0.5], &[(0.0, 2.0)], &[1e-6], |x| Some(x[0]));
        assert_eq!(r.point, vec![2.0]);
        assert_eq!(r.score, 2.0);
    }

    #[test]
    fn non_finite_score_degrades() {
        let r = coordinate_search(&[0.5], &[(0.0, 2.0)], &[1e-6], |x| {
            Some(if x[0] > 1.9 { f64::INFINITY } else { x[0] })
        });
        assert!(r.degraded);
        assert!(r.score >= r.start_score);
    }

    #[test]
    fn infeasible_points_rank_last() {
        let r = coordinate_search(&[0.2], &[(0.0, 1.0)], &[1e-8], |x| {
            (x[0] < 0.6).then(|| x[0])
        });
        assert!(!r.degraded);
        assert!(r.point[0] < 0.6 && r.point[0] > 0.6 - 1e-6);
    }

    #[test]
    fn grid_ties_go_to_the_first_point() {
        assert_eq!(first_argmax(&[Some(1.0), Some(1.0), Some(1.0)]), Some(0));
        assert_eq!(
            first_argmax(&[None, Some(0.5), Some(2.0), Some(2.0)]),
            Some(2)
        );
        assert_eq!(first_argmax(&[None, None]), None);
        assert_eq!(first_argmax(&[Some(f64::NEG_INFINITY)]), Some(0));
    }

    #[test]
    fn single_point_grid() {
        let bx = ParameterBox {
            ranges: vec![ParameterRange {
                parameter: DesignParameter::PatchWidth,
                min: 12.0,
                max: 12.0,
                steps: 1,
            }],
            baseline: Scenario::default(),
        };
        let g = grid_search(&bx, &DesignObjective::MaximizeRa, Execution::Serial).unwrap();
        assert_eq!(g.point, vec![12.0]);
        assert_eq!(g.evaluations, 1);
    }

    #[test]
    fn box_validation() {
        let bx = |min, max, steps| ParameterBox {
            ranges: vec![ParameterRange {
                parameter: DesignParameter::Frequency,
                min,
                max,
                steps,
            }],
            baseline: Scenario::default(),
        };
        assert!(bx(1.0, 2.0, 3).validate().is_ok());
        assert!(bx(2.0, 1.0, 3).validate().is_err());
        assert!(bx(0.0, 1.0, 3).validate().is_err());
        assert!(bx(1.0, 2.0, 0).validate().is_err());
    }

    #[test]
    fn target_validation() {
        let bad = DesignObjective::MatchTarget {
            target_ra: 1.5,
            target_phase: 0.0,
            phase_weight: 1.0,
        };
        assert!(bad.validate().is_err());
    }
}
