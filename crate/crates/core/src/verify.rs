//! The desk acceptance suite: eleven numbered criteria, each a list of
//! residual checks against fixed tolerances.

use crate::a2::{self, A2Point, CycleBasis, WPoint};
use crate::bps::{BpsStructure, Lattice, Ray};
use crate::error::{Error, Result};
use crate::frobenius::{a2_discriminant, contract, FrobeniusStructure};
use crate::joyce::{
    compatibility_check, linear_data, linear_identities, wdvv_check, ConifoldModel, DoubledModel, IdentityChart,
    JoyceModel, Prepotential, UncoupledModel,
};
use crate::numerics::{c, integrate_adaptive, max_abs, C64, I, TWO_PI_I};
use crate::rh::{
    a1_rabbit_residual, conifold_b, conifold_d, conifold_hessian_closed_form, conifold_reflection_residuals,
    extract_hessian, half_plane_samples, solve_a1_doubled, solve_conifold, solve_uncoupled, verify_asymptotics,
    verify_jumps, wrap_log, ConifoldParams, RhSolution,
};
use crate::specfn::{
    lambda_reflection_residual, ln_lambda, ln_starred, stirling_tail, ConifoldKind, QuadOptions, StarredParams,
};
use crate::torus::{pentagon_check, sector_product, Orientation, QuadraticRefinement, Sector, TorusPoint};
use nalgebra::DMatrix;
use num_rational::Rational64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIPPED",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    /// The measured residual; `NaN` when the computation itself failed.
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Check { name: name.into(), value, tol, pass: value <= tol, note: None }
    }

    fn from_result(name: impl Into<String>, tol: f64, r: Result<f64>) -> Self {
        match r {
            Ok(v) => Check::new(name, v, tol),
            Err(e) => Check { name: name.into(), value: f64::NAN, tol, pass: false, note: Some(failure(&e)) },
        }
    }

    /// Also requires `cond`, recording `why` when it fails.
    fn and(mut self, cond: bool, why: &str) -> Self {
        if !cond {
            self.pass = false;
            self.note = Some(why.to_string());
        }
        self
    }
}

fn failure(e: &Error) -> String {
    format!("{}: {e}", e.code())
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub status: Status,
    pub checks: Vec<Check>,
    pub seconds: f64,
    /// Target runtime; reported, not enforced.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget_seconds: Option<f64>,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        let worst = self
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("{} = {:.3e} (tol {:.0e})", c.name, c.value, c.tol))
            .next()
            .unwrap_or_default();
        let tail = if worst.is_empty() { String::new() } else { format!("; first failure: {worst}") };
        format!(
            "{} criterion {:>2} {} [{} checks, {:.2}s{}]",
            self.status,
            self.id,
            self.title,
            self.checks.len(),
            self.seconds,
            tail
        )
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Multiplies every tolerance.
    pub tol_scale: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { seed: 20240501, tol_scale: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub seed: u64,
    pub criteria: Vec<CriterionResult>,
    /// All criteria 1–10 pass; criterion 11 may be skipped.
    pub pass: bool,
}

pub const CRITERIA: [(u8, &str, Option<f64>); 11] = [
    (1, "A1 Riemann-Hilbert solution", Some(1.0)),
    (2, "Lambda function identities", Some(1.0)),
    (3, "Hessian extraction", Some(1.0)),
    (4, "uncoupled Joyce data", None),
    (5, "WDVV and linear identities", None),
    (6, "conifold solution", Some(60.0)),
    (7, "pentagon and wall-crossing", None),
    (8, "A2 periods", None),
    (9, "A2 isomonodromic flows", None),
    (10, "Frobenius compatibility", None),
    (11, "A2 Joyce form", None),
];

pub fn run_criterion(id: u8, opts: &SuiteOptions) -> Result<CriterionResult> {
    let &(_, title, budget) = CRITERIA
        .iter()
        .find(|(k, _, _)| *k == id)
        .ok_or_else(|| Error::InvalidInput(format!("no criterion {id}; expected 1..=11")))?;
    let t = opts.tol_scale;
    let start = Instant::now();
    let mut skipped = false;
    let checks = match id {
        1 => a1_solution(t),
        2 => lambda_identities(t),
        3 => hessian_extraction(t),
        4 => uncoupled_data(t, opts.seed),
        5 => wdvv_and_identities(t),
        6 => conifold(t),
        7 => wall_crossing(t, opts.seed),
        8 => a2_periods(t, opts.seed),
        9 => a2_flows(t),
        10 => compatibility(t, opts.seed),
        _ => {
            let (checks, s) = a2_form(t);
            skipped = s;
            checks
        }
    };
    let status = if skipped {
        Status::Skipped
    } else if checks.iter().all(|c| c.pass) {
        Status::Pass
    } else {
        Status::Fail
    };
    Ok(CriterionResult { id, title, status, checks, seconds: start.elapsed().as_secs_f64(), budget_seconds: budget })
}

/// Runs every criterion in order.
pub fn run_suite(opts: &SuiteOptions) -> SuiteReport {
    let criteria: Vec<_> =
        CRITERIA.iter().map(|(id, _, _)| run_criterion(*id, opts).expect("listed criterion")).collect();
    let pass = criteria.iter().all(|c| c.status == Status::Pass || (c.id == 11 && c.status == Status::Skipped));
    SuiteReport { suite: "desk", seed: opts.seed, criteria, pass }
}

fn a1_solution(t: f64) -> Vec<Check> {
    let (z, th) = (c(0.7, 0.4), c(0.3, 0.2));
    let rabbit = (|| {
        let mut worst = 0.0f64;
        for phase in [z, -z] {
            for h in half_plane_samples(phase / z.norm(), 20, 0.05, 2.0, 1.3) {
                worst = worst.max(a1_rabbit_residual(z, th, h)?);
            }
        }
        Ok(worst)
    })();
    let mut out = vec![Check::from_result("jump relation, 20 samples per half-plane", 1e-10 * t, rabbit)];

    let jumps = (|| {
        let sol = solve_a1_doubled(c(1.0, 0.0), c(0.3, 0.2) - PI * I, c(0.4, -0.7), c(0.1, 0.5))?;
        let mut worst = 0.0f64;
        for ray in [Ray::new(c(1.0, 0.0))?, Ray::new(c(-1.0, 0.0))?] {
            let samples = half_plane_samples(ray.phase(), 20, 0.05, 2.0, 1.3);
            worst = worst.max(verify_jumps(&sol, &ray, &samples, 1e-10 * t)?.max_error);
        }
        Ok(worst)
    })();
    out.push(Check::from_result("wall-crossing across both active rays", 1e-10 * t, jumps));

    for (name, phase) in [("R+ along i 2^-k", I), ("R- along -i 2^-k", -I)] {
        let r = (|| {
            let sol = solve_a1_doubled(c(100.0, 0.0), c(0.3, 0.2), c(0.0, 0.0), c(0.1, 0.0))?;
            let ray = Ray::new(phase)?;
            let hs: Vec<_> = (1..=20).map(|k| phase * 0.5f64.powi(k)).collect();
            verify_asymptotics(&sol, &ray, &[0, 1], &hs, 1e-8 * t)
        })();
        out.push(match r {
            Ok(rep) => Check::new(name, rep.final_distance, 1e-8 * t).and(rep.monotone, "tail not monotone"),
            Err(e) => Check::from_result(name, 1e-8 * t, Err(e)),
        });
    }
    out
}

fn lambda_identities(t: f64) -> Vec<Check> {
    let grid: Vec<C64> = (0..10)
        .flat_map(|i| (0..10).map(move |j| c(-4.0 + 8.0 * i as f64 / 9.0, -3.0 + 6.0 * j as f64 / 9.0)))
        .collect();
    let eta = c(0.3, 0.2);
    let refl = grid.iter().try_fold(0.0f64, |m, &w| Ok(m.max(lambda_reflection_residual(w, eta)?.norm())));
    let mut out = vec![Check::from_result("reflection on a 10x10 grid", 1e-11 * t, refl)];

    let ends = grid.iter().try_fold(0.0f64, |m, &w| -> Result<f64> {
        let (l0, l1) = (ln_lambda(w, c(0.0, 0.0))?.exp(), ln_lambda(w, c(1.0, 0.0))?.exp());
        Ok(m.max((l0 - l1).norm() / l1.norm().max(1.0)))
    });
    out.push(Check::from_result("Lambda(w,0) = Lambda(w,1)", 1e-12 * t, ends));

    let stirling = (|| {
        let mut worst = 0.0f64;
        for r in [10.0, 20.0, 50.0] {
            for k in 0..12 {
                let w = C64::from_polar(r, -2.75 + 5.5 * k as f64 / 11.0);
                for eta in [c(0.3, 0.0), c(0.7, 0.1)] {
                    worst = worst.max((stirling_tail(w, eta, 8)? - ln_lambda(w, eta)?).norm());
                }
            }
        }
        Ok(worst)
    })();
    out.push(Check::from_result("Stirling series K = 8 for |w| >= 10", 1e-8 * t, stirling));
    out
}

fn hessian_extraction(t: f64) -> Vec<Check> {
    let r = (|| {
        let sol = solve_a1_doubled(c(1.0, 0.0), c(0.3, 0.2) - PI * I, c(0.4, -0.7), c(0.1, 0.5))?;
        let ray = Ray::new(I)?;
        let expect = sol.base_theta()[0] / TWO_PI_I;
        let mut vals = Vec::new();
        for h in [c(0.0, 1.0), c(0.0, 2.0), c(1.0, 1.0), c(-0.5, 0.8), c(0.3, 0.2)] {
            vals.push(extract_hessian(&sol, &ray, h, None)?.value[0][0]);
        }
        let err = vals.iter().map(|v| (v - expect).norm()).fold(0.0, f64::max);
        let spread = vals.iter().flat_map(|a| vals.iter().map(move |b| (a - b).norm())).fold(0.0, f64::max);
        Ok((err, spread))
    })();
    match r {
        Ok((err, spread)) => vec![
            Check::new("Hessian against theta/(2 pi i z)", err, 1e-7 * t),
            Check::new("independence of hbar over 5 values", spread, 1e-6 * t),
        ],
        Err(e) => vec![Check::from_result("Hessian extraction", 1e-7 * t, Err(e))],
    }
}

/// A finite uncoupled rank-`n` structure on the trivial lattice with primitive
/// active classes, `Ω ∈ {1, 2}` and `|Z(γ)| > 0.3`.
fn random_uncoupled(rng: &mut ChaCha8Rng, n: usize) -> (BpsStructure, Vec<C64>) {
    loop {
        let z: Vec<C64> = (0..n).map(|_| c(rng.random_range(-2.0..2.0), rng.random_range(0.2..2.0))).collect();
        let mut pairs: Vec<(Vec<i64>, Rational64)> = Vec::new();
        for _ in 0..rng.random_range(1..=3usize) {
            let g: Vec<i64> = (0..n).map(|_| rng.random_range(-1..=1i64)).collect();
            let neg: Vec<i64> = g.iter().map(|k| -k).collect();
            if g.iter().all(|&k| k == 0) || pairs.iter().any(|(h, _)| *h == g || *h == neg) {
                continue;
            }
            pairs.push((g, Rational64::from_integer(rng.random_range(1..=2i64))));
        }
        let central = |g: &[i64]| -> C64 { g.iter().zip(&z).map(|(&k, v)| v * k as f64).sum() };
        if pairs.is_empty() || pairs.iter().any(|(g, _)| central(g).norm() < 0.3) {
            continue;
        }
        if let Ok(s) = BpsStructure::from_pairs(Lattice::trivial(n), z.clone(), &pairs) {
            return (s, z);
        }
    }
}

/// The ray furthest in angle from every active ray of a finite structure.
pub fn quiet_ray(s: &BpsStructure) -> Result<Ray> {
    let args: Vec<f64> = s.active_classes(None)?.iter().map(|(g, _)| s.central(g).arg()).collect();
    let gap = |a: f64| args.iter().map(|&b| (C64::from_polar(1.0, a - b)).arg().abs()).fold(PI, f64::min);
    let best = (0..720).map(|k| k as f64 * PI / 360.0).max_by(|a, b| gap(*a).total_cmp(&gap(*b))).expect("nonempty");
    Ok(Ray::from_angle(best))
}

/// Relative error of the extracted Hessian against `m`, compared through
/// the change between the solution's fibre point and a shifted one. The
/// refinement moves `J` by a quadratic term, which this removes.
pub fn hessian_change_error(sol: &dyn RhSolution, m: &dyn JoyceModel, ray: &Ray, hbar: C64) -> Result<f64> {
    let n = m.dim();
    let z = sol.base_z();
    let th0 = sol.base_theta();
    let th1: Vec<C64> = th0.iter().enumerate().map(|(i, v)| v + c(0.2 - 0.1 * i as f64, 0.15)).collect();
    let other = sol.with_base(&z, &th1)?;
    let h0 = extract_hessian(sol, ray, hbar, None)?.value;
    let h1 = extract_hessian(other.as_ref(), ray, hbar, None)?.value;
    let expect = m.hessian(&z, &th1)? - m.hessian(&z, &th0)?;
    let got = DMatrix::from_fn(n, n, |i, j| h1[i][j] - h0[i][j]);
    Ok(max_abs(&(got - &expect)) / (1.0 + max_abs(&expect)))
}

fn uncoupled_data(t: f64, seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for k in 0..3 {
        let (s, z) = random_uncoupled(&mut rng, k + 2);
        let n = z.len();
        let dual: Vec<C64> = (0..n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let vartheta: Vec<C64> =
            (0..2 * n).map(|_| c(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5))).collect();
        let label = format!("structure {} (rank {n})", k + 1);
        let model = UncoupledModel::new(&s);
        let hess = (|| {
            let m = model.clone()?;
            let sol = solve_uncoupled(&s, dual, vartheta, QuadraticRefinement::minus(n))?;
            let ray = quiet_ray(&s)?;
            hessian_change_error(&sol, &m, &ray, ray.phase() * c(0.4, 0.1))
        })();
        out.push(Check::from_result(format!("{label}: extracted Hessian against cubic J"), 1e-6 * t, hess));

        let third = (|| {
            let ld = linear_data(&model.clone()?, &z)?;
            let p = Prepotential::uncoupled(&s)?.third_derivatives(&z, 0.02)?;
            Ok(p.max_diff(&ld.third) / (1.0 + ld.third.max_abs()))
        })();
        out.push(Check::from_result(format!("{label}: prepotential third derivatives"), 1e-6 * t, third));

        let form = (|| {
            let m = model.clone()?;
            let ld = linear_data(&m, &z)?;
            let g = DMatrix::from_fn(n, n, |a, b| {
                m.classes().iter().map(|(gg, w)| c(w * gg[a] * gg[b], 0.0)).sum::<C64>() / (TWO_PI_I * 2.0)
            });
            Ok(max_abs(&(&ld.joyce_form - g)))
        })();
        out.push(Check::from_result(format!("{label}: Joyce form"), 1e-10 * t, form));
    }
    out
}

fn wdvv_and_identities(t: f64) -> Vec<Check> {
    let one = Rational64::from_integer(1);
    let roots: Vec<_> = [[1, 0], [0, 1], [1, 1]].iter().map(|g| (g.to_vec(), one)).collect();
    let z = vec![c(0.3, 1.0), c(-0.7, 0.4)];
    let s = BpsStructure::from_pairs(Lattice::trivial(2), z.clone(), &roots);
    let wdvv = s.clone().and_then(|s| {
        let samples = vec![z.clone(), vec![c(1.1, 0.2), c(0.3, -0.9)], vec![c(-0.4, 0.5), c(2.0, 1.0)]];
        Ok(wdvv_check(&s, &samples, 1e-10 * t)?.max_error)
    });
    let mut out = vec![Check::from_result("A2 root system diamond associativity", 1e-10 * t, wdvv)];

    let coni = linear_identities(
        &DoubledModel::new(ConifoldModel::resolved()),
        &[c(0.4, 0.7), c(1.0, 0.1), c(0.3, 0.2), c(-0.5, 0.9)],
        1e-5,
    );
    let roots_doubled = s.and_then(|s| {
        let d = DoubledModel::new(UncoupledModel::new(&s)?);
        linear_identities(&d, &[z[0], z[1], c(0.2, -0.3), c(0.5, 0.4)], 1e-5)
    });
    for (label, li) in [("doubled conifold", coni), ("doubled A2 roots", roots_doubled)] {
        match li {
            Ok(li) => {
                out.push(Check::new(format!("{label}: connection flat"), li.flatness, 1e-6 * t));
                out.push(Check::new(format!("{label}: metric parallel"), li.metric_parallel, 1e-6 * t));
            }
            Err(e) => out.push(Check::from_result(format!("{label}: linear identities"), 1e-6 * t, Err(e))),
        }
    }
    out
}

fn conifold_params() -> ConifoldParams {
    ConifoldParams {
        v: c(0.4, 0.7),
        w: c(1.0, 0.0),
        vartheta: c(0.13, -0.21),
        phi: c(0.07, 0.11),
        v_dual: c(0.2, 0.1),
        w_dual: c(-0.3, 0.2),
        vartheta_dual: c(0.05, 0.0),
        phi_dual: c(0.0, -0.04),
    }
}

fn conifold(t: f64) -> Vec<Check> {
    let p = conifold_params();
    let o = QuadOptions::default();
    let diff = (|| {
        let mut worst = 0.0f64;
        for k in 0..10 {
            let h = C64::from_polar(0.05 + 0.03 * k as f64, 0.2 + 0.11 * k as f64);
            let x = (p.vartheta - p.v / h).exp();
            let b0 = conifold_b(p.v, p.w, p.vartheta, p.phi, h, o)?;
            let b1 = conifold_b(p.v + p.w, p.w, p.vartheta + p.phi, p.phi, h, o)?;
            worst = worst.max(wrap_log(b1 - b0 + crate::numerics::log1p(-x)).norm());
            let d0 = conifold_d(p.v, p.w, p.vartheta, p.phi, h, o)?;
            let d1 = conifold_d(p.v + p.w, p.w, p.vartheta + p.phi, p.phi, h, o)?;
            worst = worst.max(wrap_log(d1 - d0 + b1).norm());
        }
        Ok(worst)
    })();
    let mut out = vec![Check::from_result("difference relations at 10 hbar", 1e-8 * t, diff)];

    // Samples on the ray -i·Σ(0), between v - w and v.
    let mid = (p.v / p.v.norm() + (p.v - p.w) / (p.v - p.w).norm()) * 0.5;
    let zero = c(0.0, 0.0);
    let reflection = |th: C64, ph: C64, corrected: bool| -> Result<f64> {
        let mut worst = 0.0f64;
        for r in [0.1, 0.2, 0.3] {
            let (eb, ed) = conifold_reflection_residuals(p.v, p.w, th, ph, -I * mid * r, corrected, o)?;
            worst = worst.max(eb).max(ed);
        }
        Ok(worst)
    };
    out.push(Check::from_result(
        "reflection relations, generic fibre point",
        1e-7 * t,
        reflection(p.vartheta, p.phi, false),
    ));
    out.push(Check::from_result("reflection relations, zero fibre point", 1e-7 * t, reflection(zero, zero, false)));
    out.push(Check::from_result(
        "reflection relations with the Li1 correction",
        1e-7 * t,
        reflection(p.vartheta, p.phi, true),
    ));

    let starred = (|| {
        let mut last = 0.0f64;
        for k in 0..=24 {
            let h = C64::from_polar(0.2 * 0.5f64.powi(k), 1.3);
            let sp = StarredParams::new(p.v, p.w, p.vartheta, p.phi, h)?;
            last = (ln_starred(ConifoldKind::F, &sp, o)?.exp() - 1.0).norm();
            last = last.max((ln_starred(ConifoldKind::G, &sp, o)?.exp() - 1.0).norm());
        }
        Ok(last)
    })();
    out.push(Check::from_result("F* and G* tend to 1 as hbar -> 0", 1e-6 * t, starred));

    let hess = (|| {
        let s = solve_conifold(p, o)?;
        let th = s.base_theta();
        let expect = conifold_hessian_closed_form(p.v, p.w, th[0], th[1])?;
        let hs = extract_hessian(&s, &Ray::new(c(0.3, 0.7))?, c(0.1, 0.2), None)?;
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((hs.value[i][j] - expect[i][j]).norm());
            }
        }
        Ok(worst)
    })();
    out.push(Check::from_result("extracted Hessian against Li0 formulas", 1e-6 * t, hess));

    let h = (|| {
        let m = ConifoldModel::resolved();
        let mut worst = 0.0f64;
        for th in [[p.vartheta, p.phi], [c(0.3, -0.2), c(-0.1, 0.25)]] {
            let g = m.grad_theta(&[p.v, p.w], &th)?;
            worst = worst.max((p.v * g[0] + p.w * g[1]).norm());
        }
        Ok(worst)
    })();
    out.push(Check::from_result("v J_theta + w J_phi = 0", 1e-12 * t, h));
    out
}

fn wall_crossing(t: f64, seed: u64) -> Vec<Check> {
    let lat = Lattice::new(vec![vec![0, 1], vec![-1, 0]]).expect("skew");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7e57);
    let pent = (|| {
        let pts = (0..50)
            .map(|_| {
                let mut r = || c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                TorusPoint::new(lat.clone(), vec![r(), r()], false)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(pentagon_check(&pts, 1e-12 * t)?.max_error)
    })();
    let mut out = vec![Check::from_result("pentagon at 50 random points", 1e-12 * t, pent)];

    let chambers = (|| {
        let sa = BpsStructure::a2(c(-0.5, 1.0), c(0.5, 1.0))?;
        let sb = BpsStructure::a2(c(0.5, 1.0), c(-0.5, 1.0))?;
        let h = Sector::upper_half_plane();
        let mut worst = 0.0f64;
        for y in [[c(2.0, 0.0), c(3.0, 0.0)], [c(0.7, 0.2), c(1.3, -0.4)], [c(-0.4, 1.1), c(0.6, 0.5)]] {
            let p = TorusPoint::new(lat.clone(), vec![y[0].ln(), y[1].ln()], false)?;
            let qa = sector_product(&sa, &h, Orientation::Anticlockwise, &p, 10.0)?;
            let qb = sector_product(&sb, &h, Orientation::Anticlockwise, &p, 10.0)?;
            for g in [[1, 0], [0, 1]] {
                let (a, b) = (qa.character(&g), qb.character(&g));
                worst = worst.max((a - b).norm() / b.norm().max(1.0));
            }
        }
        Ok(worst)
    })();
    out.push(Check::from_result("A2 chamber (a) against chamber (b)", 1e-12 * t, chambers));
    out
}

fn rel_periods(p: &A2Point) -> Result<[C64; 2]> {
    a2::periods(p, &CycleBasis::canonical(p)?)
}

fn a2_periods(t: f64, seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa2);
    let mut pts = vec![(c(0.7, 0.3), c(-0.4, 0.9)), (c(2.0, -1.0), c(0.5, 3.0))];
    for _ in 0..3 {
        pts.push((
            c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
            c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
        ));
    }
    let scaling = pts.iter().try_fold(0.0f64, |m, &(a, b)| -> Result<f64> {
        let lam: f64 = 1.1;
        let z = rel_periods(&A2Point::new(a, b)?)?;
        let zq = rel_periods(&A2Point::new(a * lam.powi(4), b * lam.powi(6))?)?;
        Ok((0..2).map(|i| (zq[i] - z[i] * lam.powi(5)).norm() / z[i].norm()).fold(m, f64::max))
    });
    let mut out = vec![Check::from_result("weight-5 scaling", 1e-8 * t, scaling)];

    let cycles = [(c(0.7, 0.3), c(-0.4, 0.9)), (c(1.0, 1.0), c(-0.5, 0.2)), (c(2.0, -1.0), c(0.5, 3.0))]
        .iter()
        .try_fold(0.0f64, |m, &(a, b)| Ok(m.max(a2::cycle_relation_residual(&A2Point::new(a, b)?)?)));
    out.push(Check::from_result("cycle-sum relation", 1e-8 * t, cycles));

    let oracle = (|| {
        let z = rel_periods(&A2Point::new(c(-1.0, 0.0), c(0.0, 0.0))?)?;
        // x = (1 - cos φ)/2 removes both endpoint square roots on [0, 1].
        let reference = integrate_adaptive(
            |phi| {
                let x = 0.5 * (1.0 - phi.cos());
                let s = phi.sin();
                c(0.25 * s * s * (1.0 + x).sqrt(), 0.0)
            },
            0.0,
            PI,
            1e-15,
            1e-14,
        )? * 2.0
            * I;
        Ok(z.iter().map(|v| (v - reference).norm()).fold(f64::INFINITY, f64::min))
    })();
    out.push(Check::from_result("real curve (a,b) = (-1,0) against adaptive quadrature", 1e-8 * t, oracle));
    out
}

/// Three generic points of the fibred space, away from the discriminant and
/// with `q` off the cycles.
pub fn generic_wpoints() -> Vec<(C64, C64, C64, C64)> {
    vec![
        (c(0.7, 0.3), c(-0.4, 0.9), c(0.5, -0.2), c(0.3, 0.1)),
        (c(2.0, -1.0), c(0.5, 3.0), c(-1.0, 0.5), c(0.2, 0.0)),
        (c(1.0, 1.0), c(-0.5, 0.2), c(0.4, 1.3), c(0.1, -0.3)),
    ]
}

fn a2_flows(t: f64) -> Vec<Check> {
    let mut out = Vec::new();
    for (k, (a, b, q, r)) in generic_wpoints().into_iter().enumerate() {
        let label = format!("point {}", k + 1);
        match WPoint::from_qr(a, b, q, r, None)
            .and_then(|w| a2::verify_flow_pushforward(&w, &[I, c(1.0, 1.0)], 1e-3 * t))
        {
            Ok(rep) => {
                out.push(Check::new(format!("{label}: tangency"), rep.tangency, 1e-12));
                out.push(Check::new(format!("{label}: pushforward residual"), rep.max_residual, 1e-3 * t));
                out.push(Check::new(
                    format!("{label}: 1/hbar coefficient consistency"),
                    rep.hbar_consistency,
                    1e-6 * t,
                ));
            }
            Err(e) => out.push(Check::from_result(format!("{label}: flows"), 1e-3 * t, Err(e))),
        }
    }
    out
}

fn compatibility(t: f64, seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    let a1 = (|| {
        let m = UncoupledModel::new(&BpsStructure::a1(c(1.0, 0.0))?)?;
        let samples: Vec<_> = [c(0.5, 0.5), c(2.0, -1.0), c(-0.3, 0.8)].iter().map(|&z| vec![z]).collect();
        compatibility_check(&m, &FrobeniusStructure::trivial(), &IdentityChart, &samples, 1e-10 * t)
    })();
    match a1 {
        Ok(rep) => {
            let resid = [rep.metric, rep.diamond, rep.euler, rep.v, rep.mu_residual].into_iter().fold(0.0, f64::max);
            out.push(Check::new("A1 against trivial Frobenius: residuals", resid, 1e-10 * t));
            out.push(Check::new(
                "A1 against trivial Frobenius: mu = 1",
                (c(rep.mu[0], rep.mu[1]) - 1.0).norm(),
                1e-10 * t,
            ));
        }
        Err(e) => out.push(Check::from_result("A1 against trivial Frobenius", 1e-10 * t, Err(e))),
    }

    let f = FrobeniusStructure::a2();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xf0);
    let mut pts = vec![(c(1.0, 0.0), c(1.0, 0.0))];
    while pts.len() < 6 {
        let (a, b) = (
            c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
            c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
        );
        if a2_discriminant(a, b).norm() > 0.1 {
            pts.push((a, b));
        }
    }
    let det = pts.iter().try_fold(0.0f64, |m, &(a, b)| -> Result<f64> {
        let d = a2_discriminant(a, b);
        let u = f.multiplication_operator_u(&[a, b])?;
        Ok(m.max((u.determinant() * 27.0 - d).norm() / (1.0 + d.norm())))
    });
    out.push(Check::from_result("A2: det U = discriminant/27", 1e-10 * t, det));

    let displays = pts.iter().try_fold(0.0f64, |m, &(a, b)| -> Result<f64> {
        let d = a2_discriminant(a, b);
        let p = f.twisted_product(&[a, b])?;
        let ea = [c(1.0, 0.0), c(0.0, 0.0)];
        let eb = [c(0.0, 0.0), c(1.0, 0.0)];
        let mut worst = m;
        for (x, y, want) in [
            (&ea, &ea, [a * a * 6.0, -a * b * 9.0]),
            (&eb, &eb, [-a * 18.0, b * 27.0]),
            (&ea, &eb, [b * 27.0, a * a * 6.0]),
        ] {
            let v = contract(&p, x, y);
            for k in 0..2 {
                worst = worst.max((v[k] * d - want[k]).norm() / (1.0 + want[k].norm()));
            }
        }
        Ok(worst)
    });
    out.push(Check::from_result("A2: twisted products against closed forms", 1e-10 * t, displays));

    let v = f.frobenius_v();
    let want = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(-1.0 / 6.0, 0.0), c(1.0 / 6.0, 0.0)]));
    out.push(Check::new("A2: V = diag(-1/6, 1/6)", max_abs(&(v - want)), 1e-15));
    out.push(Check::new("A2: mu = (2 - d)/2 = 5/6", ((2.0 - f.conformal_dimension()) / 2.0 - 5.0 / 6.0).abs(), 1e-15));

    let joyce = (|| {
        let pts: Vec<_> = [(c(0.7, 0.3), c(-0.4, 0.9)), (c(2.0, -1.0), c(0.5, 3.0))]
            .iter()
            .map(|&(a, b)| A2Point::new(a, b))
            .collect::<Result<_>>()?;
        a2::a2_compatibility(&pts, 1e-6 * t)
    })();
    match joyce {
        Ok(rep) => {
            let resid = [rep.metric, rep.diamond, rep.euler, rep.v, rep.mu_residual].into_iter().fold(0.0, f64::max);
            out.push(Check::new("A2 Joyce structure against A2 Frobenius", resid, 1e-6 * t));
        }
        Err(e) => out.push(Check::from_result("A2 Joyce structure against A2 Frobenius", 1e-6 * t, Err(e))),
    }
    out
}

fn a2_form(t: f64) -> (Vec<Check>, bool) {
    let name = "Joyce form against (2 pi i/5)(da db + db da)";
    match A2Point::new(c(0.7, 0.3), c(-0.4, 0.9)).and_then(|p| a2::a2_joyce_form(&p, 1e-3 * t)) {
        Ok(f) => (
            vec![
                Check::new(name, f.error, 1e-3 * t),
                Check::new("zero-section Newton residual", f.newton_residual, 1e-10),
            ],
            false,
        ),
        Err(e @ Error::NewtonDiverged(_)) => {
            let mut ch = Check::from_result(name, 1e-3 * t, Err(e));
            ch.pass = true;
            (vec![ch], true)
        }
        Err(e) => (vec![Check::from_result(name, 1e-3 * t, Err(e))], false),
    }
}
