//! Deterministic randomized property suite.
//!
//! Each property runs `trials` seeded instances and reports the largest
//! residual, i.e. the amount by which an inequality or identity is missed
//! (zero or negative when it holds exactly). Instance seeds depend only on
//! the suite seed, the property and the trial index.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::conic::verify_feasible;
use crate::entropic::{
    isotropic_holevo_closed_form, relative_entropy, relative_entropy_gradient, sandwiched_renyi, upsilon_a, upsilon_b,
    FwConfig,
};
use crate::error::Result;
use crate::measures::{
    beta_a, beta_b, comm_bound_map_triple, dimension_feasible_point, dp_map_triple, fidelity_bound_check,
    gamma_heuristic, swap_triple, tensor_triple, Certificate, FeasibleTriple, GammaOptions, CERT_TOL,
};
use crate::opalg::{
    dephase_both, fidelity, matrix_function, partial_transpose, schatten_norm_hermitian, BipartiteOp, HermitianOp,
    MatrixFunction, Subsystem, SupportPolicy,
};
use crate::states::{
    isotropic, max_classically_correlated, random_bipartite_state, random_channel, random_density_matrix,
    random_hermitian, random_product_state, CqState,
};

#[derive(Clone, Debug, Serialize)]
pub struct PropertyOutcome {
    pub name: &'static str,
    pub trials: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// First failing trial, if any.
    pub failure: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PropertyReport {
    pub seed: u64,
    pub trials: usize,
    pub outcomes: Vec<PropertyOutcome>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn failing(&self) -> Vec<&'static str> {
        self.outcomes.iter().filter(|o| !o.passed).map(|o| o.name).collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("property suite: seed {} trials {}\n", self.seed, self.trials);
        let width = self.outcomes.iter().map(|o| o.name.len()).max().unwrap_or(0);
        for o in &self.outcomes {
            let _ = writeln!(
                s,
                "{} {:width$}  max_residual {:>11.3e}  tol {:.0e}",
                if o.passed { "PASS" } else { "FAIL" },
                o.name,
                o.max_residual,
                o.tolerance,
            );
            if let Some(f) = &o.failure {
                let _ = writeln!(s, "     {f}");
            }
        }
        let _ = writeln!(
            s,
            "{}",
            if self.passed() { "all properties hold".to_string() } else { format!("violations: {}", self.failing().join(", ")) }
        );
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// A check on one seeded instance: its residual, or an error message.
type Trial = fn(seed: u64) -> std::result::Result<f64, String>;

struct Property {
    name: &'static str,
    tolerance: f64,
    /// Upper limit on trials for expensive properties.
    max_trials: usize,
    trial: Trial,
}

fn err(e: crate::Error) -> String {
    e.to_string()
}

fn ok_or<T>(r: Result<T>) -> std::result::Result<T, String> {
    r.map_err(err)
}

fn dims_for(seed: u64) -> (usize, usize) {
    [(2, 2), (2, 3), (3, 2)][(seed % 3) as usize]
}

fn partial_transpose_involution(seed: u64) -> std::result::Result<f64, String> {
    let (da, db) = dims_for(seed);
    let x = ok_or(BipartiteOp::new(random_hermitian::<f64>(da * db, seed), da, db))?;
    let back = partial_transpose(&partial_transpose(&x, Subsystem::B), Subsystem::B);
    let tr = (partial_transpose(&x, Subsystem::B).trace() - x.trace()).abs();
    Ok((back.op() - x.op()).max_abs().max(tr))
}

fn partial_transpose_sides_agree(seed: u64) -> std::result::Result<f64, String> {
    let (da, db) = dims_for(seed);
    let w = ok_or(BipartiteOp::new(random_hermitian::<f64>(da * db, seed), da, db))?;
    let a = partial_transpose(&w, Subsystem::A).op().min_eigenvalue();
    let b = partial_transpose(&w, Subsystem::B).op().min_eigenvalue();
    Ok((a - b).abs())
}

fn fidelity_symmetric(seed: u64) -> std::result::Result<f64, String> {
    let rho = random_density_matrix::<f64>(3, 1 + (seed % 3) as usize, seed);
    let sigma = random_density_matrix::<f64>(3, 3, seed ^ 0x5a5a);
    let f1 = ok_or(fidelity(rho.op(), sigma.op()))?;
    let f2 = ok_or(fidelity(sigma.op(), rho.op()))?;
    Ok((f1 - f2).abs())
}

fn fidelity_dephasing_monotone(seed: u64) -> std::result::Result<f64, String> {
    let d = 2 + (seed % 2) as usize;
    let phi = max_classically_correlated::<f64>(d);
    let sigma = random_bipartite_state::<f64>(d, d, d * d, seed);
    let before = ok_or(fidelity(phi.op(), sigma.op()))?;
    let after = ok_or(fidelity(dephase_both(phi.bip()).op(), dephase_both(sigma.bip()).op()))?;
    Ok(before - after)
}

fn trace_norm_dominates_trace(seed: u64) -> std::result::Result<f64, String> {
    let x = random_hermitian::<f64>(2 + (seed % 4) as usize, seed);
    Ok(x.trace().abs() - schatten_norm_hermitian(&x, 1.0))
}

fn sqrt_squares_back(seed: u64) -> std::result::Result<f64, String> {
    let rho = random_density_matrix::<f64>(4, 1 + (seed % 4) as usize, seed);
    let r = ok_or(matrix_function(rho.op(), MatrixFunction::Sqrt, SupportPolicy::Restrict))?;
    let sq = ok_or(matrix_function(&r, MatrixFunction::Power(2.0), SupportPolicy::Restrict))?;
    Ok((&sq - rho.op()).max_abs() / rho.op().max_abs())
}

fn isotropic_affine(seed: u64) -> std::result::Result<f64, String> {
    let d = 2 + (seed % 2) as usize;
    let p = ChaCha8Rng::seed_from_u64(seed).random_range(0.0..1.0);
    let x = ok_or(isotropic::<f64>(d, p))?;
    let e0 = ok_or(isotropic::<f64>(d, 0.0))?;
    let e1 = ok_or(isotropic::<f64>(d, 1.0))?;
    let mix = &e0.op().scaled(1.0 - p) + &e1.op().scaled(p);
    Ok((&mix - x.op()).max_abs())
}

fn beta_product_state_is_one(seed: u64) -> std::result::Result<f64, String> {
    let (da, db) = dims_for(seed);
    let rho = random_product_state::<f64>(da, db, seed);
    let a = ok_or(beta_a(rho.bip(), rho.marginal(Subsystem::A).op()))?;
    let b = ok_or(beta_b(rho.bip(), rho.marginal(Subsystem::B).op()))?;
    Ok((a.value - 1.0).abs().max((b.value - 1.0).abs()))
}

fn beta_scale_covariant(seed: u64) -> std::result::Result<f64, String> {
    let rho = random_bipartite_state::<f64>(2, 2, 2 + (seed % 3) as usize, seed);
    let rho_a = rho.marginal(Subsystem::A);
    let base = ok_or(beta_a(rho.bip(), rho_a.op()))?.value;
    let mut worst = 0.0f64;
    for c in [0.5, 2.0] {
        let scaled = ok_or(beta_a(&rho.bip().scaled(c), rho_a.op()))?.value;
        worst = worst.max((scaled - c * base).abs() / (c * base));
    }
    Ok(worst)
}

fn gamma_sandwich(seed: u64) -> std::result::Result<f64, String> {
    let (da, db) = dims_for(seed);
    let rho = random_bipartite_state::<f64>(da, db, 1 + (seed % (da * db) as u64) as usize, seed);
    let g = ok_or(gamma_heuristic(rho.bip(), &GammaOptions::default()))?;
    let b = ok_or(beta_a(rho.bip(), rho.marginal(Subsystem::A).op()))?.value;
    let dmin = da.min(db) as f64;
    let rounds = g.history.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    if !g.certified {
        return Err("gamma certificate failed verification".into());
    }
    Ok((1.0 - g.value).max(g.value - dmin).max(g.value - b).max(rounds))
}

fn swap_covariance(seed: u64) -> std::result::Result<f64, String> {
    let (da, db) = dims_for(seed);
    let rho = random_bipartite_state::<f64>(da, db, 2, seed);
    let t = match ok_or(beta_a(rho.bip(), rho.marginal(Subsystem::A).op()))?.certificate {
        Certificate::Triple(t) => t,
        _ => return Err("beta returned no triple".into()),
    };
    let s = ok_or(swap_triple(&t, rho.bip()))?;
    Ok((s.value - t.value).abs().max(-s.verification.map_or(f64::INFINITY, |v| v.worst())))
}

fn dimension_point_feasible(seed: u64) -> std::result::Result<f64, String> {
    let (da, db) = dims_for(seed);
    let rho = random_bipartite_state::<f64>(da, db, 1 + (seed % 4) as usize, seed);
    let mut worst = f64::NEG_INFINITY;
    for (side, want) in [(Subsystem::A, db), (Subsystem::B, da)] {
        let t = ok_or(dimension_feasible_point(&rho, side))?;
        worst = worst.max((t.value - want as f64).abs()).max(-t.verification.expect("verified").worst());
    }
    Ok(worst)
}

fn beta_triple(sigma: &BipartiteOp<f64>, rho_a: &HermitianOp<f64>) -> std::result::Result<FeasibleTriple, String> {
    match ok_or(beta_a(sigma, rho_a))?.certificate {
        Certificate::Triple(t) => Ok(t),
        _ => Err("beta returned no triple".into()),
    }
}

fn dp_map_preserves(seed: u64) -> std::result::Result<f64, String> {
    let rho = random_bipartite_state::<f64>(2, 2, 2, seed);
    let t = beta_triple(rho.bip(), rho.marginal(Subsystem::A).op())?;
    let dout = 2 + (seed % 2) as usize;
    let n = ok_or(random_channel::<f64>(2, dout, 2, seed ^ 0x11))?;
    let m = ok_or(random_channel::<f64>(2, 2, 3, seed ^ 0x22))?;
    let mapped = ok_or(dp_map_triple(&t, rho.bip(), &n, &m))?;
    Ok((mapped.value - t.value).abs().max(-mapped.verification.expect("verified").worst()))
}

fn comm_bound_scales_by_register(seed: u64) -> std::result::Result<f64, String> {
    let dx = 2;
    let conds = (0..dx).map(|x| random_bipartite_state::<f64>(2, 2, 2, seed.wrapping_add(x as u64 * 0x9e37_79b9))).collect();
    let p = ChaCha8Rng::seed_from_u64(seed).random_range(0.1..0.9);
    let cq = ok_or(CqState::new(vec![p, 1.0 - p], conds))?;
    let view = cq.view_a_bx();
    let rho_a = crate::opalg::partial_trace(&view, Subsystem::B);
    let t = beta_triple(&view, &rho_a)?;
    let mapped = ok_or(comm_bound_map_triple(&t, &view, dx))?;
    Ok((mapped.value - dx as f64 * t.value).abs().max(-mapped.verification.expect("verified").worst()))
}

fn tensor_multiplies(seed: u64) -> std::result::Result<f64, String> {
    let s = random_bipartite_state::<f64>(2, 2, 2, seed);
    let u = random_bipartite_state::<f64>(2, 1 + (seed % 2) as usize, 1, seed ^ 0x33);
    let t1 = beta_triple(s.bip(), s.marginal(Subsystem::A).op())?;
    let t2 = ok_or(dimension_feasible_point(&u, Subsystem::A))?;
    let t = ok_or(tensor_triple(&t1, s.bip(), &t2, u.bip()))?;
    Ok((t.value - t1.value * t2.value).abs().max(-t.verification.expect("verified").worst()))
}

fn fidelity_bound(seed: u64) -> std::result::Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = 2 + (seed % 2) as usize;
    let rank = rng.random_range(1..=d * d);
    let scale = rng.random_range(0.2..5.0);
    let sigma = random_bipartite_state::<f64>(d, d, rank, seed).bip().scaled(scale);
    let g = ok_or(gamma_heuristic(&sigma, &GammaOptions::default()))?.value;
    let c = ok_or(fidelity_bound_check(&sigma, g, d))?;
    Ok(c.observed - c.bound)
}

fn fidelity_saturation(_seed: u64) -> std::result::Result<f64, String> {
    let mut worst = 0.0f64;
    for d in [2usize, 3] {
        let phi = max_classically_correlated::<f64>(d);
        let c = ok_or(fidelity_bound_check(phi.bip(), d as f64, d))?;
        worst = worst.max((c.observed - c.bound).abs());
    }
    let mixed = ok_or(BipartiteOp::new(HermitianOp::identity(4).scaled(0.25), 2, 2))?;
    let c = ok_or(fidelity_bound_check(&mixed, 1.0, 2))?;
    Ok(worst.max((c.observed - c.bound).abs()))
}

fn relative_entropy_scaling(seed: u64) -> std::result::Result<f64, String> {
    let rho = random_density_matrix::<f64>(3, 1 + (seed % 3) as usize, seed);
    let c = ChaCha8Rng::seed_from_u64(seed).random_range(0.05..4.0);
    let d = ok_or(relative_entropy(rho.op(), &rho.op().scaled(c)))?;
    Ok((d + c.log2()).abs())
}

fn renyi_monotone_in_alpha(seed: u64) -> std::result::Result<f64, String> {
    let rho = random_density_matrix::<f64>(3, 2, seed);
    let sigma = random_density_matrix::<f64>(3, 3, seed ^ 0x44);
    let mut prev = f64::NEG_INFINITY;
    let mut worst = f64::NEG_INFINITY;
    for a in [1.1, 1.5, 2.0, 3.0, 5.0] {
        let v = ok_or(sandwiched_renyi(rho.op(), sigma.op(), a))?;
        worst = worst.max(prev - v);
        prev = v;
    }
    Ok(worst)
}

fn gradient_matches_differences(seed: u64) -> std::result::Result<f64, String> {
    let rho = random_density_matrix::<f64>(4, 4, seed);
    let sigma = random_density_matrix::<f64>(4, 4, seed ^ 0x55);
    let h = random_hermitian::<f64>(4, seed ^ 0x66);
    let h = h.scaled(1.0 / h.frobenius_norm());
    let step = 1e-5;
    let f = |t: f64| relative_entropy(rho.op(), &(sigma.op() + &h.scaled(t)));
    let fd = (ok_or(f(step))? - ok_or(f(-step))?) / (2.0 * step);
    let an = relative_entropy_gradient(rho.op(), sigma.op()).inner(&h);
    Ok((fd - an).abs() / an.abs().max(1.0))
}

fn upper_bound_above_holevo(seed: u64) -> std::result::Result<f64, String> {
    let p = ChaCha8Rng::seed_from_u64(seed).random_range(0.0..1.0);
    let rho = ok_or(isotropic::<f64>(2, p))?;
    let cfg = FwConfig::default();
    let a = ok_or(upsilon_a(&rho, &cfg))?;
    let b = ok_or(upsilon_b(&rho, &cfg))?;
    if !(a.certified() && b.certified()) {
        return Err(format!("uncertified sigma at p = {p}"));
    }
    let h = ok_or(isotropic_holevo_closed_form(2, p))?;
    Ok(h - a.value_bits.min(b.value_bits))
}

fn product_states_have_zero_upsilon(seed: u64) -> std::result::Result<f64, String> {
    let rho = random_product_state::<f64>(2, 2, seed);
    let cfg = FwConfig::default();
    let a = ok_or(upsilon_a(&rho, &cfg))?.value_bits;
    let b = ok_or(upsilon_b(&rho, &cfg))?.value_bits;
    Ok(a.abs().max(b.abs()))
}

const PROPERTIES: &[Property] = &[
    Property { name: "partial_transpose_involution", tolerance: 1e-12, max_trials: usize::MAX, trial: partial_transpose_involution },
    Property { name: "partial_transpose_sides_agree", tolerance: 1e-9, max_trials: usize::MAX, trial: partial_transpose_sides_agree },
    Property { name: "fidelity_symmetric", tolerance: 1e-9, max_trials: usize::MAX, trial: fidelity_symmetric },
    Property { name: "fidelity_dephasing_monotone", tolerance: 1e-9, max_trials: usize::MAX, trial: fidelity_dephasing_monotone },
    Property { name: "trace_norm_dominates_trace", tolerance: 1e-12, max_trials: usize::MAX, trial: trace_norm_dominates_trace },
    Property { name: "sqrt_squares_back", tolerance: 1e-8, max_trials: usize::MAX, trial: sqrt_squares_back },
    Property { name: "isotropic_affine", tolerance: 1e-15, max_trials: usize::MAX, trial: isotropic_affine },
    Property { name: "beta_product_state_is_one", tolerance: 1e-6, max_trials: usize::MAX, trial: beta_product_state_is_one },
    Property { name: "beta_scale_covariant", tolerance: 1e-6, max_trials: usize::MAX, trial: beta_scale_covariant },
    Property { name: "gamma_sandwich_and_monotone_rounds", tolerance: 1e-6, max_trials: usize::MAX, trial: gamma_sandwich },
    Property { name: "swap_covariance", tolerance: CERT_TOL, max_trials: usize::MAX, trial: swap_covariance },
    Property { name: "dimension_point_feasible", tolerance: CERT_TOL, max_trials: usize::MAX, trial: dimension_point_feasible },
    Property { name: "dp_map_preserves_value", tolerance: CERT_TOL, max_trials: usize::MAX, trial: dp_map_preserves },
    Property { name: "comm_bound_scales_by_register", tolerance: CERT_TOL, max_trials: usize::MAX, trial: comm_bound_scales_by_register },
    Property { name: "tensor_multiplies_values", tolerance: CERT_TOL, max_trials: usize::MAX, trial: tensor_multiplies },
    Property { name: "fidelity_bound", tolerance: 1e-6, max_trials: usize::MAX, trial: fidelity_bound },
    Property { name: "fidelity_saturation", tolerance: 1e-9, max_trials: 1, trial: fidelity_saturation },
    Property { name: "relative_entropy_scaling", tolerance: 1e-9, max_trials: usize::MAX, trial: relative_entropy_scaling },
    Property { name: "renyi_monotone_in_alpha", tolerance: 1e-12, max_trials: usize::MAX, trial: renyi_monotone_in_alpha },
    Property { name: "gradient_matches_differences", tolerance: 1e-5, max_trials: usize::MAX, trial: gradient_matches_differences },
    Property { name: "upper_bound_above_holevo", tolerance: 1e-6, max_trials: 10, trial: upper_bound_above_holevo },
    Property { name: "product_states_have_zero_upsilon", tolerance: 1e-4, max_trials: 5, trial: product_states_have_zero_upsilon },
];

fn instance_seed(seed: u64, property: usize, trial: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(property as u64);
    rng.set_word_pos(2 * trial as u128);
    rng.random()
}

fn run_property(seed: u64, trials: usize, idx: usize, p: &Property) -> PropertyOutcome {
    let n = trials.min(p.max_trials).max(1);
    let mut max_residual = f64::NEG_INFINITY;
    let mut failure = None;
    for t in 0..n {
        let s = instance_seed(seed, idx, t);
        match (p.trial)(s) {
            Ok(r) => {
                let r = if r.is_nan() { f64::INFINITY } else { r };
                if r > p.tolerance && failure.is_none() {
                    failure = Some(format!("trial {t} (instance seed {s}): residual {r:.3e}"));
                }
                max_residual = max_residual.max(r);
            }
            Err(e) => {
                if failure.is_none() {
                    failure = Some(format!("trial {t} (instance seed {s}): {e}"));
                }
                max_residual = f64::INFINITY;
            }
        }
    }
    PropertyOutcome {
        name: p.name,
        trials: n,
        max_residual,
        tolerance: p.tolerance,
        passed: failure.is_none(),
        failure,
    }
}

/// A certificate that must fail verification: the dimension point of a
/// seeded state with `V` shifted far outside `-K (x) L <= V <= K (x) L`.
pub fn corrupted_triple(seed: u64) -> Result<(FeasibleTriple, BipartiteOp<f64>)> {
    let rho = random_bipartite_state::<f64>(2, 2, 3, seed);
    let good = dimension_feasible_point(&rho, Subsystem::A)?;
    let shift = BipartiteOp::new(HermitianOp::identity(4).scaled(3.0), 2, 2)?;
    let bad = FeasibleTriple::new(good.k.clone(), good.l.clone(), good.v.plus(&shift))?;
    Ok((bad, rho.bip().clone()))
}

fn injected_outcome(seed: u64) -> PropertyOutcome {
    let name = "injected_triple_feasible";
    let (max_residual, failure) = match corrupted_triple(seed).and_then(|(t, s)| verify_feasible(&t, &s, CERT_TOL)) {
        Ok(v) => {
            let r = -v.worst();
            (r, (!v.ok).then(|| format!("verification failed: worst eigenvalue {:.3e}", v.worst())))
        }
        Err(e) => (f64::INFINITY, Some(e.to_string())),
    };
    PropertyOutcome {
        name,
        trials: 1,
        max_residual,
        tolerance: CERT_TOL,
        passed: failure.is_none(),
        failure,
    }
}

/// Run every property. With `inject_corrupted`, a deliberately broken
/// certificate is appended as a negative control.
pub fn run_suite(seed: u64, trials: usize, inject_corrupted: bool) -> PropertyReport {
    let trials = trials.max(1);
    let mut outcomes: Vec<PropertyOutcome> = PROPERTIES
        .par_iter()
        .enumerate()
        .map(|(i, p)| run_property(seed, trials, i, p))
        .collect();
    if inject_corrupted {
        outcomes.push(injected_outcome(seed));
    }
    PropertyReport { seed, trials, outcomes }
}
