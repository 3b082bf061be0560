//! Bounds along the isotropic family `(1-p) Phi^d + p I/d^2`.
//!
//! CSV columns, in order: `p, holevo_lower, upsilonA, upsilonB,
//! upper_min, fw_gap_A, fw_gap_B, status`, followed by
//! `beta_sigmaA, beta_sigmaB` when the beta diagnostic is requested.
//! Floats use 9 significant digits; quantities that were not requested
//! are left empty.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropic::{isotropic_holevo_closed_form, upsilon, FwConfig, UpsilonResult};
use crate::error::{Error, Result};
use crate::opalg::Subsystem;
use crate::states::isotropic;

/// Points within this distance of `stop` are merged with it.
pub const GRID_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SweepMethod {
    UpsilonA,
    UpsilonB,
    Holevo,
    BetaDiag,
}

impl std::str::FromStr for SweepMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "upsilonA" => Ok(Self::UpsilonA),
            "upsilonB" => Ok(Self::UpsilonB),
            "holevo" => Ok(Self::Holevo),
            "betaDiag" => Ok(Self::BetaDiag),
            other => Err(Error::Parse(format!(
                "unknown sweep method `{other}` (expected upsilonA, upsilonB, holevo, betaDiag)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl PGrid {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |x: f64| (0.0..=1.0).contains(&x);
        if !in_unit(self.start) || !in_unit(self.stop) {
            return Err(Error::Domain(format!("grid endpoints {} and {} must lie in [0, 1]", self.start, self.stop)));
        }
        if self.start > self.stop {
            return Err(Error::Domain(format!("grid start {} exceeds stop {}", self.start, self.stop)));
        }
        if !(self.step > 0.0) {
            return Err(Error::Domain(format!("grid step {} must be positive", self.step)));
        }
        Ok(())
    }

    /// `start, start + step, ...` with `stop` appended when the step does
    /// not land on it. A step longer than the whole range yields `start`
    /// alone.
    pub fn points(&self) -> Vec<f64> {
        let range = self.stop - self.start;
        if self.step > range + GRID_TOL {
            return vec![self.start];
        }
        let mut out = Vec::new();
        let mut k = 0usize;
        loop {
            let p = self.start + k as f64 * self.step;
            if p >= self.stop - GRID_TOL {
                break;
            }
            out.push(p);
            k += 1;
        }
        out.push(self.stop);
        out
    }
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub d: usize,
    pub grid: PGrid,
    pub methods: BTreeSet<SweepMethod>,
    pub fw: FwConfig,
    /// Worker threads; results do not depend on it.
    pub jobs: usize,
}

impl SweepConfig {
    pub fn new(d: usize, grid: PGrid) -> Self {
        Self {
            d,
            grid,
            methods: [SweepMethod::UpsilonA, SweepMethod::UpsilonB, SweepMethod::Holevo].into(),
            fw: FwConfig::default(),
            jobs: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::Domain(format!("d = {} must be at least 2", self.d)));
        }
        if self.jobs == 0 {
            return Err(Error::Domain("jobs must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Domain("no sweep methods selected".into()));
        }
        self.grid.validate()?;
        self.fw.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    /// Bounds are valid but the Frank-Wolfe gap tolerance was not met.
    GapNotReached,
    /// The re-solved beta of a returned sigma exceeded one.
    Uncertified,
    SolverFailure,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::GapNotReached => "gap_not_reached",
            Self::Uncertified => "uncertified",
            Self::SolverFailure => "solver_failure",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub p: f64,
    pub holevo_lower: Option<f64>,
    #[serde(rename = "upsilonA")]
    pub upsilon_a: Option<f64>,
    #[serde(rename = "upsilonB")]
    pub upsilon_b: Option<f64>,
    pub upper_min: Option<f64>,
    #[serde(rename = "fw_gap_A")]
    pub fw_gap_a: Option<f64>,
    #[serde(rename = "fw_gap_B")]
    pub fw_gap_b: Option<f64>,
    pub status: RowStatus,
    #[serde(rename = "beta_sigmaA", skip_serializing_if = "Option::is_none")]
    pub beta_sigma_a: Option<f64>,
    #[serde(rename = "beta_sigmaB", skip_serializing_if = "Option::is_none")]
    pub beta_sigma_b: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
    pub elapsed_ms: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepOutput {
    pub d: usize,
    pub grid: PGrid,
    pub methods: BTreeSet<SweepMethod>,
    pub rows: Vec<SweepRow>,
}

impl SweepOutput {
    pub fn any_failure(&self) -> bool {
        self.rows.iter().any(|r| r.status == RowStatus::SolverFailure)
    }

    pub fn to_csv(&self) -> String {
        let diag = self.methods.contains(&SweepMethod::BetaDiag);
        let mut s = String::from("p,holevo_lower,upsilonA,upsilonB,upper_min,fw_gap_A,fw_gap_B,status");
        if diag {
            s.push_str(",beta_sigmaA,beta_sigmaB");
        }
        s.push('\n');
        for r in &self.rows {
            let cells = [r.holevo_lower, r.upsilon_a, r.upsilon_b, r.upper_min, r.fw_gap_a, r.fw_gap_b];
            let _ = write!(s, "{}", fmt_g9(r.p));
            for c in cells {
                let _ = write!(s, ",{}", c.map(fmt_g9).unwrap_or_default());
            }
            let _ = write!(s, ",{}", r.status.as_str());
            if diag {
                for c in [r.beta_sigma_a, r.beta_sigma_b] {
                    let _ = write!(s, ",{}", c.map(fmt_g9).unwrap_or_default());
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep serializes") + "\n"
    }

    /// Gnuplot script drawing both curves from the CSV at `csv_path`.
    pub fn gnuplot_script(&self, csv_path: &str) -> String {
        format!(
            "set datafile separator ','\n\
             set key autotitle columnhead\n\
             set xlabel 'p'\n\
             set ylabel 'bits'\n\
             set title 'isotropic state, d = {d}'\n\
             plot '{csv_path}' using 1:2 with linespoints title 'Holevo lower bound', \\\n     \
             '{csv_path}' using 1:5 with linespoints title 'min(upsilonA, upsilonB)'\n",
            d = self.d
        )
    }
}

/// C-style `%.9g`.
pub fn fmt_g9(x: f64) -> String {
    fmt_g(x, 9)
}

pub fn fmt_g(x: f64, sig: usize) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= sig as i32 {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn side_run(rho: &crate::opalg::DensityMatrix<f64>, side: Subsystem, fw: &FwConfig) -> std::result::Result<UpsilonResult, String> {
    upsilon(rho, side, fw).map_err(|e| format!("upsilon{side:?}: {e}"))
}

fn evaluate(cfg: &SweepConfig, p: f64) -> SweepRow {
    let start = Instant::now();
    let mut errors = Vec::new();
    let holevo_lower = if cfg.methods.contains(&SweepMethod::Holevo) {
        match isotropic_holevo_closed_form(cfg.d, p) {
            Ok(v) => Some(v),
            Err(e) => {
                errors.push(format!("holevo: {e}"));
                None
            }
        }
    } else {
        None
    };

    let mut runs: [Option<UpsilonResult>; 2] = [None, None];
    match isotropic::<f64>(cfg.d, p) {
        Ok(rho) => {
            for (slot, (method, side)) in runs
                .iter_mut()
                .zip([(SweepMethod::UpsilonA, Subsystem::A), (SweepMethod::UpsilonB, Subsystem::B)])
            {
                if cfg.methods.contains(&method) {
                    match side_run(&rho, side, &cfg.fw) {
                        Ok(u) => *slot = Some(u),
                        Err(e) => errors.push(e),
                    }
                }
            }
        }
        Err(e) => errors.push(format!("state: {e}")),
    }
    let [ua, ub] = runs;

    let upper_min = [&ua, &ub].iter().filter_map(|u| u.as_ref().map(|u| u.value_bits)).reduce(f64::min);
    let status = if !errors.is_empty() {
        RowStatus::SolverFailure
    } else if [&ua, &ub].iter().any(|u| u.as_ref().is_some_and(|u| !u.certified())) {
        RowStatus::Uncertified
    } else if [&ua, &ub].iter().any(|u| u.as_ref().is_some_and(|u| !u.converged)) {
        RowStatus::GapNotReached
    } else {
        RowStatus::Ok
    };
    let diag = cfg.methods.contains(&SweepMethod::BetaDiag);
    SweepRow {
        p,
        holevo_lower,
        upsilon_a: ua.as_ref().map(|u| u.value_bits),
        upsilon_b: ub.as_ref().map(|u| u.value_bits),
        upper_min,
        fw_gap_a: ua.as_ref().map(|u| u.fw_gap_bits),
        fw_gap_b: ub.as_ref().map(|u| u.fw_gap_bits),
        status,
        beta_sigma_a: ua.as_ref().filter(|_| diag).map(|u| u.beta_of_sigma),
        beta_sigma_b: ub.as_ref().filter(|_| diag).map(|u| u.beta_of_sigma),
        errors,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

/// Evaluate every grid point. Failures are recorded in the row and the
/// sweep continues.
pub fn sweep_isotropic(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let points = cfg.grid.points();
    let rows = if cfg.jobs == 1 {
        points.iter().map(|&p| evaluate(cfg, p)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
        pool.install(|| points.par_iter().map(|&p| evaluate(cfg, p)).collect())
    };
    Ok(SweepOutput {
        d: cfg.d,
        grid: cfg.grid,
        methods: cfg.methods.clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_clamped_endpoint() {
        let g = PGrid { start: 0.0, stop: 1.0, step: 0.3 };
        let pts = g.points();
        assert_eq!(pts.len(), 5);
        assert_eq!(*pts.last().unwrap(), 1.0);
        let g = PGrid { start: 0.0, stop: 1.0, step: 0.05 };
        let pts = g.points();
        assert_eq!(pts.len(), 21);
        assert_eq!(pts[0], 0.0);
        assert_eq!(pts[20], 1.0);
    }

    #[test]
    fn oversized_step_gives_single_point() {
        let g = PGrid { start: 0.2, stop: 0.4, step: 0.5 };
        assert_eq!(g.points(), vec![0.2]);
        let g = PGrid { start: 0.3, stop: 0.3, step: 0.1 };
        assert_eq!(g.points(), vec![0.3]);
    }

    #[test]
    fn grid_validation() {
        assert!(PGrid { start: 0.5, stop: 0.2, step: 0.1 }.validate().is_err());
        assert!(PGrid { start: 0.0, stop: 1.0, step: 0.0 }.validate().is_err());
        assert!(PGrid { start: -0.1, stop: 1.0, step: 0.1 }.validate().is_err());
        assert!(PGrid { start: 0.0, stop: 1.0, step: 0.1 }.validate().is_ok());
    }

    #[test]
    fn g_format_matches_c() {
        let cases = [
            (1.0, "1"),
            (0.188721875540867, "0.188721876"),
            (0.15000000000000002, "0.15"),
            (1e-5, "1e-05"),
            (1.23456789012e-7, "1.23456789e-07"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (-0.5, "-0.5"),
            (0.0, "0"),
            (0.0001, "0.0001"),
        ];
        for (x, want) in cases {
            assert_eq!(fmt_g9(x), want, "{x}");
        }
    }

    #[test]
    fn methods_parse() {
        assert_eq!("betaDiag".parse::<SweepMethod>().unwrap(), SweepMethod::BetaDiag);
        assert!("gamma".parse::<SweepMethod>().is_err());
    }

    #[test]
    fn holevo_only_sweep_leaves_other_columns_empty() {
        let mut cfg = SweepConfig::new(2, PGrid { start: 0.0, stop: 1.0, step: 0.5 });
        cfg.methods = [SweepMethod::Holevo].into();
        let out = sweep_isotropic(&cfg).unwrap();
        let csv = out.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "p,holevo_lower,upsilonA,upsilonB,upper_min,fw_gap_A,fw_gap_B,status");
        assert_eq!(lines[1], "0,1,,,,,,ok");
        assert_eq!(lines[2], "0.5,0.188721876,,,,,,ok");
        assert_eq!(lines[3], "1,0,,,,,,ok");
    }
}
