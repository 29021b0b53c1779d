//! Common fixed-point (convex feasibility) instances built from projections,
//! with a distance oracle for the intersection and sampling validators for
//! the Hölderian error bound.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::math::{self, check_dim};
use crate::rate_kernel::PhiSpec;
use crate::rng;
use crate::stats::{self, LineFit};

use super::operators::OperatorSpec;

/// Serializable description of a feasibility instance.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeasibilitySpec {
    pub name: String,
    pub operators: Vec<OperatorSpec>,
    pub x0: Vec<f64>,
    pub certified_theta: f64,
    pub certified_r: f64,
    pub valid_radius: f64,
    /// Index law; uniform when absent.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub weights: Option<Vec<f64>>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub witness: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Structure {
    Single,
    TwoHalfspaces,
    BallHalfspace { ball: usize, half: usize },
    General,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityInstance {
    spec: FeasibilitySpec,
    weights: Vec<f64>,
    witness: Vec<f64>,
    structure: Structure,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "method", rename_all = "snake_case"))]
pub enum DistanceMethod {
    ClosedForm,
    Dykstra {
        cycles: usize,
        residual: f64,
        converged: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Distance {
    pub dist_sq: f64,
    pub projection: Vec<f64>,
    pub method: DistanceMethod,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HolderFit {
    pub theta_hat: f64,
    pub r_hat: f64,
    /// Largest `dist - r * resid^theta` over all evaluated points.
    pub max_violation: f64,
    pub line: LineFit,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampleCheck {
    pub samples: usize,
    pub max_violation: f64,
    pub worst_sample: usize,
    pub passed: bool,
}

const DYKSTRA_TOL: f64 = 1e-12;
const DYKSTRA_MAX_CYCLES: usize = 200_000;
const MIN_SAMPLE_RADIUS: f64 = 1e-6;

impl FeasibilityInstance {
    pub fn new(spec: FeasibilitySpec) -> Result<Self> {
        let m = spec.operators.len();
        if m == 0 {
            return Err(invalid("operators", "need at least one operator"));
        }
        let d = spec.x0.len();
        if d == 0 {
            return Err(invalid("x0", "must be nonempty"));
        }
        for op in &spec.operators {
            op.validate()?;
            check_dim(d, op.dim())?;
        }
        if !(spec.certified_theta > 0.0 && spec.certified_theta <= 1.0) {
            return Err(invalid("certified_theta", "must lie in (0, 1]"));
        }
        if !(spec.certified_r > 0.0) {
            return Err(invalid("certified_r", "must be positive"));
        }
        if !(spec.valid_radius > 0.0) {
            return Err(invalid("valid_radius", "must be positive"));
        }
        let weights = match &spec.weights {
            Some(w) => {
                check_dim(m, w.len())?;
                let total: f64 = w.iter().sum();
                if w.iter().any(|v| !(*v > 0.0)) || (total - 1.0).abs() > 1e-12 {
                    return Err(invalid("weights", "must be positive and sum to 1"));
                }
                w.clone()
            }
            None => vec![1.0 / m as f64; m],
        };
        let structure = classify(&spec.operators);
        let mut inst = FeasibilityInstance {
            weights,
            witness: Vec::new(),
            structure,
            spec,
        };
        let witness = match &inst.spec.witness {
            Some(w) => {
                check_dim(d, w.len())?;
                w.clone()
            }
            None => inst.dist_to_f(&vec![0.0; d])?.projection,
        };
        let tol = 1e-9 * (1.0 + math::norm(&witness));
        if inst.spec.operators.iter().any(|op| !op.contains(&witness, tol)) {
            return Err(invalid(
                "witness",
                "not a common fixed point; the intersection may be empty",
            ));
        }
        inst.witness = witness;
        Ok(inst)
    }

    pub fn spec(&self) -> &FeasibilitySpec {
        &self.spec
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn dim(&self) -> usize {
        self.spec.x0.len()
    }

    pub fn operators(&self) -> &[OperatorSpec] {
        &self.spec.operators
    }

    pub fn x0(&self) -> &[f64] {
        &self.spec.x0
    }

    pub fn witness(&self) -> &[f64] {
        &self.witness
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Per-index probability floor.
    pub fn rho(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `phi(t) = (t / r^2)^(1/theta)` on `[0, valid_radius^2)`.
    pub fn phi(&self) -> Result<PhiSpec> {
        PhiSpec::holder(
            self.spec.certified_theta,
            self.spec.certified_r,
            self.spec.valid_radius * self.spec.valid_radius,
        )
    }

    /// `|T_i x - x|^2` for every operator.
    pub fn residuals(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        Ok(self.spec.operators.iter().map(|op| op.residual_sq(x)).collect())
    }

    /// `g(x) = max_i |T_i x - x|^2`.
    pub fn residual_g(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.residual_unchecked(x))
    }

    pub(crate) fn residual_unchecked(&self, x: &[f64]) -> f64 {
        self.spec
            .operators
            .iter()
            .map(|op| op.residual_sq(x))
            .fold(0.0, f64::max)
    }

    /// Squared distance to the intersection and the nearest point in it.
    pub fn dist_to_f(&self, x: &[f64]) -> Result<Distance> {
        check_dim(self.dim(), x.len())?;
        let ops = &self.spec.operators;
        let closed = |p: Vec<f64>| Distance {
            dist_sq: math::dist_sq(x, &p),
            projection: p,
            method: DistanceMethod::ClosedForm,
        };
        match self.structure {
            Structure::Single => Ok(closed(ops[0].project(x))),
            Structure::TwoHalfspaces => {
                let p = nearest_feasible(ops, x, two_halfspace_candidates(&ops[0], &ops[1], x));
                match p {
                    Some(p) => Ok(closed(p)),
                    None => Ok(self.dykstra(x)),
                }
            }
            Structure::BallHalfspace { ball, half } => {
                let p = nearest_feasible(ops, x, ball_halfspace_candidates(&ops[ball], &ops[half], x));
                match p {
                    Some(p) => Ok(closed(p)),
                    None => Ok(self.dykstra(x)),
                }
            }
            Structure::General => Ok(self.dykstra(x)),
        }
    }

    /// Cyclic Dykstra projections, stopped when a full cycle moves the iterate
    /// by at most `1e-12` (relative) and all residuals are below `1e-12`.
    fn dykstra(&self, x: &[f64]) -> Distance {
        let ops = &self.spec.operators;
        let d = x.len();
        let mut y = x.to_vec();
        let mut incr = vec![vec![0.0; d]; ops.len()];
        let mut cycles = 0;
        let mut residual = f64::INFINITY;
        let mut converged = false;
        while cycles < DYKSTRA_MAX_CYCLES {
            cycles += 1;
            let start = y.clone();
            for (op, inc) in ops.iter().zip(incr.iter_mut()) {
                let shifted: Vec<f64> = y.iter().zip(inc.iter()).map(|(a, b)| a + b).collect();
                let p = op.project(&shifted);
                for j in 0..d {
                    inc[j] = shifted[j] - p[j];
                }
                y = p;
            }
            let moved = math::dist(&start, &y);
            residual = math::sqrt(self.residual_unchecked(&y));
            let scale = 1.0 + math::norm(&y);
            if moved <= DYKSTRA_TOL * scale && residual <= DYKSTRA_TOL * scale {
                converged = true;
                break;
            }
        }
        Distance {
            dist_sq: math::dist_sq(x, &y),
            projection: y,
            method: DistanceMethod::Dykstra {
                cycles,
                residual,
                converged,
            },
        }
    }

    fn sample_point(&self, r: &mut rng::LabRng) -> Vec<f64> {
        let radius = rng::log_uniform(r, MIN_SAMPLE_RADIUS, self.spec.valid_radius);
        let dir = rng::unit_direction(r, self.dim());
        self.witness.iter().zip(&dir).map(|(w, u)| w + radius * u).collect()
    }

    /// Empirical Hölder exponent. At each log-uniform radius around the
    /// witness a direction search minimizes `resid / dist`, so the fitted
    /// line tracks the worst case of the error bound rather than its average.
    pub fn holder_fit(&self, samples: usize, rng_seed: u64) -> Result<HolderFit> {
        const STARTS: usize = 24;
        const REFINE: usize = 300;
        let d = self.dim();
        let theta = self.spec.certified_theta;
        let r_cert = self.spec.certified_r;
        let mut r = rng::stream(rng_seed, 0);
        let mut log_res = Vec::with_capacity(samples);
        let mut log_dist = Vec::with_capacity(samples);
        let mut max_violation = f64::NEG_INFINITY;
        for _ in 0..samples {
            let radius = rng::log_uniform(&mut r, MIN_SAMPLE_RADIUS, self.spec.valid_radius);
            let eval = |dir: &[f64], max_violation: &mut f64| -> Option<(f64, f64, f64)> {
                let x: Vec<f64> = self.witness.iter().zip(dir).map(|(w, u)| w + radius * u).collect();
                let dist = math::sqrt(self.dist_to_f(&x).ok()?.dist_sq);
                let res = math::sqrt(self.residual_unchecked(&x));
                let v = dist - r_cert * math::powf(res, theta);
                if v > *max_violation {
                    *max_violation = v;
                }
                if dist <= 0.0 {
                    return None;
                }
                Some((res / dist, res, dist))
            };
            let mut best: Option<(f64, f64, f64, Vec<f64>)> = None;
            for _ in 0..STARTS {
                let dir = rng::unit_direction(&mut r, d);
                if let Some((ratio, res, dist)) = eval(&dir, &mut max_violation) {
                    if best.as_ref().map_or(true, |b| ratio < b.0) {
                        best = Some((ratio, res, dist, dir));
                    }
                }
            }
            let Some(mut b) = best else { continue };
            let mut step = 0.5;
            for _ in 0..REFINE {
                let pert = rng::unit_direction(&mut r, d);
                let cand: Vec<f64> = b.3.iter().zip(&pert).map(|(u, p)| u + step * p).collect();
                let n = math::norm(&cand);
                if !(n > 0.0) {
                    continue;
                }
                let cand: Vec<f64> = cand.into_iter().map(|c| c / n).collect();
                match eval(&cand, &mut max_violation) {
                    Some((ratio, res, dist)) if ratio < b.0 => {
                        b = (ratio, res, dist, cand);
                        step = (step * 1.5).min(1.0);
                    }
                    _ => step *= 0.8,
                }
                if step < 1e-12 {
                    break;
                }
            }
            if b.1 > 1e-14 {
                log_res.push(math::ln(b.1));
                log_dist.push(math::ln(b.2));
            }
        }
        if log_res.len() < 2 {
            return Err(Error::DegenerateSamples("all residuals below 1e-14".into()));
        }
        let line = stats::linear_fit(&log_res, &log_dist)?;
        Ok(HolderFit {
            theta_hat: line.slope,
            r_hat: math::exp(line.intercept),
            max_violation,
            line,
        })
    }

    /// Checks `g(x) <= h(x)`, i.e. `max_i |T_i x - x|^2 <= dist^2(x, F)`, on
    /// random points around the witness.
    pub fn eb_conflict_check(&self, samples: usize, rng_seed: u64) -> Result<SampleCheck> {
        let mut r = rng::stream(rng_seed, 1);
        let mut max_violation = f64::NEG_INFINITY;
        let mut worst_sample = 0;
        for s in 0..samples {
            let x = if s == 0 {
                self.witness.clone()
            } else {
                self.sample_point(&mut r)
            };
            let h = self.dist_to_f(&x)?.dist_sq;
            let g = self.residual_unchecked(&x);
            let v = (g - h) / h.max(1.0);
            if v > max_violation {
                max_violation = v;
                worst_sample = s;
            }
        }
        Ok(SampleCheck {
            samples,
            max_violation,
            worst_sample,
            passed: max_violation <= 1e-9,
        })
    }

    /// Checks that the oracle distance vanishes exactly when the residual does.
    pub fn oracle_consistency_check(&self, samples: usize, rng_seed: u64) -> Result<SampleCheck> {
        let mut r = rng::stream(rng_seed, 2);
        let mut failures = 0usize;
        let mut worst_sample = 0;
        for s in 0..samples {
            let x = if s % 2 == 0 {
                self.sample_point(&mut r)
            } else {
                // points of F itself
                let y = self.sample_point(&mut r);
                self.dist_to_f(&y)?.projection
            };
            let h = self.dist_to_f(&x)?.dist_sq;
            let g = self.residual_unchecked(&x);
            let zero_h = h <= 1e-18;
            let zero_g = g <= 1e-18;
            if zero_h != zero_g {
                failures += 1;
                worst_sample = s;
            }
        }
        Ok(SampleCheck {
            samples,
            max_violation: failures as f64,
            worst_sample,
            passed: failures == 0,
        })
    }
}

fn classify(ops: &[OperatorSpec]) -> Structure {
    match ops {
        [_] => Structure::Single,
        [OperatorSpec::HalfspaceProj { .. }, OperatorSpec::HalfspaceProj { .. }] => Structure::TwoHalfspaces,
        [OperatorSpec::BallProj { .. }, OperatorSpec::HalfspaceProj { .. }] => {
            Structure::BallHalfspace { ball: 0, half: 1 }
        }
        [OperatorSpec::HalfspaceProj { .. }, OperatorSpec::BallProj { .. }] => {
            Structure::BallHalfspace { ball: 1, half: 0 }
        }
        _ => Structure::General,
    }
}

fn nearest_feasible(ops: &[OperatorSpec], x: &[f64], candidates: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for c in candidates {
        // Tight on purpose: a loosely accepted candidate would undercut the
        // true projection by the size of its infeasibility.
        let tol = 2e-15 * (1.0 + math::norm(&c));
        if !ops.iter().all(|op| op.contains(&c, tol)) {
            continue;
        }
        let d = math::dist_sq(x, &c);
        if best.as_ref().map_or(true, |b| d < b.0) {
            best = Some((d, c));
        }
    }
    best.map(|b| b.1)
}

fn two_halfspace_candidates(a: &OperatorSpec, b: &OperatorSpec, x: &[f64]) -> Vec<Vec<f64>> {
    let mut out = vec![x.to_vec(), a.project(x), b.project(x)];
    let (
        OperatorSpec::HalfspaceProj { normal: n1, offset: c1 },
        OperatorSpec::HalfspaceProj { normal: n2, offset: c2 },
    ) = (a, b)
    else {
        return out;
    };
    let g11 = math::norm_sq(n1);
    let g22 = math::norm_sq(n2);
    let g12 = math::dot(n1, n2);
    let det = g11 * g22 - g12 * g12;
    if det > 1e-14 * g11 * g22 {
        let r1 = math::dot(n1, x) - c1;
        let r2 = math::dot(n2, x) - c2;
        let l1 = (g22 * r1 - g12 * r2) / det;
        let l2 = (g11 * r2 - g12 * r1) / det;
        out.push(
            x.iter()
                .zip(n1.iter().zip(n2))
                .map(|(xi, (a, b))| xi - l1 * a - l2 * b)
                .collect(),
        );
    }
    out
}

fn ball_halfspace_candidates(ball: &OperatorSpec, half: &OperatorSpec, x: &[f64]) -> Vec<Vec<f64>> {
    let mut out = vec![x.to_vec(), ball.project(x), half.project(x)];
    let (OperatorSpec::BallProj { center, radius }, OperatorSpec::HalfspaceProj { normal, offset }) = (ball, half)
    else {
        return out;
    };
    let nn = math::norm_sq(normal);
    let s = (math::dot(normal, center) - offset) / nn;
    let rho_sq = radius * radius - s * s * nn;
    if rho_sq < 0.0 {
        return out;
    }
    let rho = math::sqrt(rho_sq);
    // The sphere meets the hyperplane in a sphere of radius rho around c'.
    let c_prime: Vec<f64> = center.iter().zip(normal).map(|(c, n)| c - s * n).collect();
    let v: Vec<f64> = x.iter().zip(&c_prime).map(|(a, b)| a - b).collect();
    let t = math::dot(normal, &v) / nn;
    let u: Vec<f64> = v.iter().zip(normal).map(|(vi, ni)| vi - t * ni).collect();
    let un = math::norm(&u);
    if un > 0.0 {
        out.push(c_prime.iter().zip(&u).map(|(c, ui)| c + rho * ui / un).collect());
    } else if rho == 0.0 {
        out.push(c_prime);
    } else {
        // x sits on the axis: every point of the rim is nearest; pick one.
        let mut e = vec![0.0; x.len()];
        let k = (0..x.len())
            .min_by(|&i, &j| normal[i].abs().total_cmp(&normal[j].abs()))
            .unwrap_or(0);
        e[k] = 1.0;
        let te = math::dot(normal, &e) / nn;
        let w: Vec<f64> = e.iter().zip(normal).map(|(ei, ni)| ei - te * ni).collect();
        let wn = math::norm(&w);
        out.push(c_prime.iter().zip(&w).map(|(c, wi)| c + rho * wi / wn).collect());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn quadrant() -> FeasibilityInstance {
        FeasibilityInstance::new(FeasibilitySpec {
            name: "quadrant".to_string(),
            operators: vec![
                OperatorSpec::HalfspaceProj {
                    normal: vec![1.0, 0.0],
                    offset: 0.0,
                },
                OperatorSpec::HalfspaceProj {
                    normal: vec![0.0, 1.0],
                    offset: 0.0,
                },
            ],
            x0: vec![1.0, 1.0],
            certified_theta: 1.0,
            certified_r: math::sqrt(2.0),
            valid_radius: 10.0,
            weights: None,
            witness: None,
        })
        .unwrap()
    }

    fn tangent() -> FeasibilityInstance {
        FeasibilityInstance::new(FeasibilitySpec {
            name: "tangent".to_string(),
            operators: vec![
                OperatorSpec::BallProj {
                    center: vec![0.0, 0.0],
                    radius: 1.0,
                },
                OperatorSpec::HalfspaceProj {
                    normal: vec![-1.0, 0.0],
                    offset: -1.0,
                },
            ],
            x0: vec![0.0, 1.5],
            certified_theta: 0.5,
            certified_r: math::sqrt(5.0),
            valid_radius: 2.0,
            weights: None,
            witness: None,
        })
        .unwrap()
    }

    #[test]
    fn residual_examples() {
        let q = quadrant();
        assert_eq!(q.residual_g(&[1.0, -1.0]).unwrap(), 1.0);
        assert_eq!(q.residual_g(&[-1.0, -2.0]).unwrap(), 0.0);
        assert!(q.residual_g(&[1.0]).is_err());
    }

    #[test]
    fn distance_examples() {
        let q = quadrant();
        assert_eq!(q.dist_to_f(&[1.0, 1.0]).unwrap().dist_sq, 2.0);
        assert_eq!(q.dist_to_f(&[-1.0, -1.0]).unwrap().dist_sq, 0.0);
        let t = tangent();
        assert_eq!(t.witness(), &[1.0, 0.0]);
        let d = t.dist_to_f(&[0.0, 0.0]).unwrap();
        assert!((d.dist_sq - 1.0).abs() < 1e-15);
        assert_eq!(d.method, DistanceMethod::ClosedForm);
    }

    #[test]
    fn closed_forms_agree_with_dykstra() {
        let ops = vec![
            OperatorSpec::BallProj {
                center: vec![0.0, 0.0],
                radius: 1.0,
            },
            OperatorSpec::HalfspaceProj {
                normal: vec![-1.0, -1.0],
                offset: -0.5,
            },
        ];
        let inst = FeasibilityInstance::new(FeasibilitySpec {
            name: "cap".to_string(),
            operators: ops,
            x0: vec![2.0, 2.0],
            certified_theta: 1.0,
            certified_r: 1.0,
            valid_radius: 5.0,
            weights: None,
            witness: None,
        })
        .unwrap();
        let mut r = rng::stream(5, 0);
        for _ in 0..50 {
            let x: Vec<f64> = (0..2).map(|_| 3.0 * rng::normal(&mut r)).collect();
            let closed = inst.dist_to_f(&x).unwrap();
            let dyk = inst.dykstra(&x);
            assert!(matches!(dyk.method, DistanceMethod::Dykstra { converged: true, .. }));
            assert!(
                (closed.dist_sq - dyk.dist_sq).abs() < 1e-9 * (1.0 + dyk.dist_sq),
                "{x:?}"
            );
        }
    }

    #[test]
    fn wedge_two_halfspaces_agree_with_dykstra() {
        let inst = FeasibilityInstance::new(FeasibilitySpec {
            name: "wedge".to_string(),
            operators: vec![
                OperatorSpec::HalfspaceProj {
                    normal: vec![3.0, -1.0],
                    offset: 0.0,
                },
                OperatorSpec::HalfspaceProj {
                    normal: vec![-3.0, -1.0],
                    offset: 0.0,
                },
            ],
            x0: vec![0.3, -1.0],
            certified_theta: 1.0,
            certified_r: math::sqrt(10.0),
            valid_radius: 10.0,
            weights: None,
            witness: None,
        })
        .unwrap();
        let mut r = rng::stream(6, 0);
        for _ in 0..50 {
            let x: Vec<f64> = (0..2).map(|_| 2.0 * rng::normal(&mut r)).collect();
            let closed = inst.dist_to_f(&x).unwrap().dist_sq;
            let dyk = inst.dykstra(&x).dist_sq;
            assert!((closed - dyk).abs() < 1e-9 * (1.0 + dyk));
        }
        assert!((inst.dist_to_f(&[0.3, -1.0]).unwrap().dist_sq - 1.09).abs() < 1e-15);
    }

    #[test]
    fn holder_fit_examples() {
        let q = quadrant();
        let f = q.holder_fit(100, 1).unwrap();
        assert!((0.9..=1.1).contains(&f.theta_hat), "{f:?}");
        assert!(f.max_violation <= 1e-9);
        let t = tangent();
        let f = t.holder_fit(100, 1).unwrap();
        assert!((0.4..=0.6).contains(&f.theta_hat), "{f:?}");
        assert!(f.max_violation <= 1e-9, "{f:?}");
    }

    #[test]
    fn single_halfspace_certificate_is_tight() {
        let inst = FeasibilityInstance::new(FeasibilitySpec {
            name: "half".to_string(),
            operators: vec![OperatorSpec::HalfspaceProj {
                normal: vec![1.0, 0.0],
                offset: 0.0,
            }],
            x0: vec![1.0, 0.0],
            certified_theta: 1.0,
            certified_r: 1.0,
            valid_radius: 1.0,
            weights: None,
            witness: None,
        })
        .unwrap();
        let f = inst.holder_fit(50, 2).unwrap();
        assert!(f.max_violation.abs() <= 1e-12, "{f:?}");
    }

    #[test]
    fn eb_conflict_examples() {
        let q = quadrant();
        assert_eq!(q.residual_g(&[1.0, 1.0]).unwrap(), 1.0);
        assert!(q.eb_conflict_check(500, 3).unwrap().passed);
        assert!(tangent().eb_conflict_check(500, 3).unwrap().passed);
        assert!(q.oracle_consistency_check(200, 1).unwrap().passed);
        assert!(tangent().oracle_consistency_check(200, 1).unwrap().passed);
    }

    #[test]
    fn empty_intersection_is_rejected() {
        let r = FeasibilityInstance::new(FeasibilitySpec {
            name: "empty".to_string(),
            operators: vec![
                OperatorSpec::HalfspaceProj {
                    normal: vec![1.0],
                    offset: -1.0,
                },
                OperatorSpec::HalfspaceProj {
                    normal: vec![-1.0],
                    offset: -1.0,
                },
            ],
            x0: vec![0.0],
            certified_theta: 1.0,
            certified_r: 1.0,
            valid_radius: 1.0,
            weights: None,
            witness: None,
        });
        assert!(r.is_err());
    }
}
