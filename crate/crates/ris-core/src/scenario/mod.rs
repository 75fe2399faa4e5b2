//! Built-in models, configuration-driven runs, sweeps and verification.

pub mod config;
pub mod output;

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use log::{info, warn};
use serde::Serialize;

pub use config::{
    CustomModel, Entry, InitialState, MSpec, MatrixSpec, ModelKind, OutputSpec, ScenarioConfig, ScheduleSpec,
};

use crate::adiabatic::{adiabatic_error, build_propagator, ProjectorPath};
use crate::channel::{
    find_m_with, induced_trace_norm_with, invariant_state, irreducibility, spectral_with, verify_cptp, FindMOptions,
    NormOptions, SpectralOptions, Superoperator, M_CAP,
};
use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::models;
use crate::par::{self, Execution};
use crate::perturbation::{kms_dual_check, DetailedBalanceVerdict, KmsReport, DETAILED_BALANCE_TOL};
use crate::quantum::{gibbs_state, DensityMatrix, Hamiltonian};
use crate::sim::{self, constant, run_with, RisSchedule, RunLedger, RunOptions, Sampler};

/// Sample points used for `m` selection and verification.
pub const S_GRID_POINTS: usize = 11;

pub fn s_grid() -> Vec<f64> {
    (0..S_GRID_POINTS).map(|i| i as f64 / (S_GRID_POINTS - 1) as f64).collect()
}

/// Physical data at one value of `s`.
#[derive(Clone, Debug)]
pub struct ModelAtS {
    pub h_s: Hamiltonian,
    pub h_e: Hamiltonian,
    pub v: Hamiltonian,
    pub beta: f64,
}

/// A validated configuration with its samplers built.
#[derive(Clone)]
pub struct Scenario {
    pub cfg: ScenarioConfig,
    h_s: Hamiltonian,
    h_e: Sampler<Hamiltonian>,
    v: Sampler<Hamiltonian>,
    beta: Sampler<f64>,
    probe_level: Option<Sampler<f64>>,
}

pub fn build_model(cfg: &ScenarioConfig, s: f64) -> Result<ModelAtS> {
    Ok(Scenario::new(cfg.clone())?.model_at(s))
}

impl Scenario {
    pub fn new(cfg: ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let beta = cfg.beta_schedule.sampler(&cfg.base_dir)?;
        let (h_s, h_e, v, probe_level): (Hamiltonian, Sampler<Hamiltonian>, Sampler<Hamiltonian>, _) = match cfg.model {
            ModelKind::QubitRw | ModelKind::QubitFd => {
                let e = cfg.e.expect("validated");
                let level = match &cfg.e0_schedule {
                    Some(spec) => spec.sampler(&cfg.base_dir)?,
                    None => constant(cfg.e0.expect("validated")),
                };
                let lv = level.clone();
                let v = if cfg.model == ModelKind::QubitRw {
                    models::coupling_rotating_wave(cfg.u1)
                } else {
                    models::coupling_full_dipole(cfg.u1)
                };
                (
                    models::system_hamiltonian(e),
                    Arc::new(move |s| models::probe_hamiltonian(lv(s))),
                    constant(v),
                    Some(level),
                )
            }
            ModelKind::Custom => {
                let c = cfg.custom.as_ref().expect("validated");
                let h_s = Hamiltonian::new(c.h_s.to_operator()?)?;
                let h_e = Hamiltonian::new(c.h_e.to_operator()?)?;
                let v = Hamiltonian::new(c.v.to_operator()?)?;
                (h_s, constant(h_e), constant(v), None)
            }
        };
        Ok(Self { cfg, h_s, h_e, v, beta, probe_level })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::new(ScenarioConfig::from_path(path)?)
    }

    pub fn model_at(&self, s: f64) -> ModelAtS {
        ModelAtS { h_s: self.h_s.clone(), h_e: (self.h_e)(s), v: (self.v)(s), beta: (self.beta)(s) }
    }

    pub fn schedule(&self, lambda: f64, t: usize, m: usize) -> RisSchedule {
        RisSchedule {
            h_s: self.h_s.clone(),
            h_e: self.h_e.clone(),
            beta: self.beta.clone(),
            v: self.v.clone(),
            lambda,
            tau: self.cfg.tau,
            t,
            m,
        }
    }

    pub fn channel(&self, lambda: f64, s: f64) -> Result<Superoperator> {
        self.schedule(lambda, 1, 1).channel(s)
    }

    pub fn norm_options(&self, exec: Execution) -> NormOptions {
        NormOptions { seed: self.cfg.seed, exec, ..NormOptions::default() }
    }

    pub fn initial_state(&self, lambda: f64) -> Result<DensityMatrix> {
        match &self.cfg.rho_i {
            InitialState::Invariant => invariant_state(&self.channel(lambda, 0.0)?),
            InitialState::Gibbs(b) => gibbs_state(&self.h_s, *b),
            InitialState::Explicit(m) => {
                let op = m.to_operator()?;
                if op.nrows() != self.h_s.dim() {
                    return Err(Error::InvalidConfig("explicit initial state has the wrong dimension".into()));
                }
                DensityMatrix::new(op)
            }
        }
    }

    pub fn resolve_m(&self, lambda: f64, exec: Execution) -> Result<usize> {
        match self.cfg.m {
            MSpec::Fixed(m) => Ok(m),
            MSpec::Auto(g) => {
                let opts = FindMOptions { norm: self.norm_options(exec), cap: M_CAP, exec };
                let m = find_m_with(|s| self.channel(lambda, s), g, &s_grid(), &opts)?;
                info!("lambda = {lambda}: m = {m} for G = {g}");
                Ok(m)
            }
        }
    }

    /// Small-coupling entropy production expected over a full run, per unit
    /// of `T`: `λ² m ∫ γ (βE₀/2) tanh(βE₀/2) ds` on the `k/T` grid.
    pub fn predicted_rate(&self, lambda: f64, m: usize, t: usize) -> Option<f64> {
        if self.cfg.model != ModelKind::QubitFd {
            return None;
        }
        let level = self.probe_level.as_ref()?;
        let e = self.cfg.e?;
        let f = |s: f64| {
            let e0 = level(s);
            let gamma = models::full_dipole_rate_constant(e, e0, self.cfg.tau, self.cfg.u1);
            models::full_dipole_step_rate(1.0, gamma, (self.beta)(s), e0)
        };
        let h = 1.0 / t as f64;
        let inner: f64 = (1..t).map(|k| f(k as f64 * h)).sum();
        let integral = h * (0.5 * (f(0.0) + f(1.0)) + inner);
        Some(lambda * lambda * m as f64 * integral)
    }

    pub fn adiabatic_summary(&self, lambda: f64, t: usize, m: usize, exec: Execution) -> Result<AdiabaticSummary> {
        let sch = self.schedule(lambda, t, m);
        let channels = par::map_range(exec, t + 1, |k| sch.block_channel(sch.s_of(k)))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let path = ProjectorPath::from_channels(&channels, exec)?;
        let prop = build_propagator(&path)?;
        let identity = prop.identity_residuals(&path).iter().map(|r| r.max()).fold(0.0, f64::max);
        let report = adiabatic_error(&channels[1..], &path, &prop, &self.norm_options(exec), exec)?;
        Ok(AdiabaticSummary {
            max_e1: report.max_e1,
            max_e2: report.max_e2,
            c_p_estimate: path.c_p_estimate,
            ell: report.ell,
            max_identity_residual: identity,
            a_norm_max: prop.a_norm_max,
        })
    }

    pub fn run_point(&self, lambda: f64, t: usize, m: usize, exec: Execution) -> Result<PointResult> {
        let start = Instant::now();
        let rho = self.initial_state(lambda)?;
        let ledger = run_with(&self.schedule(lambda, t, m), &rho, &RunOptions::default())?;
        let (adiabatic, adiabatic_failure) = match self.adiabatic_summary(lambda, t, m, exec) {
            Ok(a) => (Some(a), None),
            Err(e) => {
                warn!("adiabatic diagnostics unavailable at T = {t}, lambda = {lambda}: {e}");
                (None, Some(e.to_string()))
            }
        };
        let max_mid_dist = ledger
            .steps
            .iter()
            .filter(|r| r.j == m && (0.25..=0.75).contains(&r.s))
            .map(|r| r.dist_to_invariant)
            .fold(f64::NAN, f64::max);
        let predicted_rate = self.predicted_rate(lambda, m, t);
        let rate_ratio = predicted_rate.map(|p| ledger.sigma_tot / (t as f64 * p));
        Ok(PointResult {
            t,
            lambda,
            m,
            ledger,
            adiabatic,
            adiabatic_failure,
            max_mid_dist,
            predicted_rate,
            rate_ratio,
            runtime_s: start.elapsed().as_secs_f64(),
        })
    }

    /// Run every `(λ, T)` point, concurrently when `exec` allows, writing
    /// per-point files into `out` as each finishes.
    pub fn sweep(&self, exec: Execution, out: Option<&Path>) -> Result<SweepResult> {
        let mut jobs = Vec::new();
        for lambda in self.cfg.lambdas() {
            let m = self.resolve_m(lambda, exec)?;
            for &t in &self.cfg.t_list {
                jobs.push((lambda, t, m));
            }
        }
        let results = par::map_slice(exec, &jobs, |&(lambda, t, m)| -> Result<(PointResult, Option<String>)> {
            let point = self.run_point(lambda, t, m, exec)?;
            let csv = match out {
                Some(dir) => Some(write_point(dir, &point, self.cfg.output.svg)?),
                None => None,
            };
            Ok((point, csv))
        });
        let mut points = Vec::with_capacity(results.len());
        let mut rows = Vec::with_capacity(results.len());
        for r in results {
            let (point, csv) = r?;
            rows.push(SweepRow::from_point(&point, csv));
            points.push(point);
        }
        let result = SweepResult { rows, points };
        if let Some(dir) = out {
            output::write_json(&dir.join("sweep.json"), &result.rows)?;
            output::write_atomic(&dir.join("sweep.csv"), &result.csv_bytes()?)?;
            if self.cfg.output.svg {
                result.write_sigma_chart(&dir.join("sigma_tot_vs_T.svg"))?;
            }
        }
        Ok(result)
    }

    pub fn spectrum(&self, lambda: f64, s: f64, exec: Execution) -> Result<SpectrumReport> {
        let l = self.channel(lambda, s)?;
        let opts = SpectralOptions { norm: Some(self.norm_options(exec)), ..SpectralOptions::default() };
        let sp = spectral_with(&l, &opts)?;
        let verdict = irreducibility(&l)?;
        let pair = |z: C64| [z.re, z.im];
        let (invariant, x_norm, kms) = if verdict.irreducible {
            let inv = invariant_state(&l)?;
            let kernel = self.schedule(lambda, 1, 1).kernel(s)?;
            let x = linalg::trace_norm(&kernel.commutator_defect(inv.op()));
            let kms = kms_dual_check(&l, &inv, &kernel.u, &kernel.xi)?;
            let rows = (0..inv.dim()).map(|i| (0..inv.dim()).map(|j| pair(inv.op()[(i, j)])).collect()).collect();
            (Some(rows), Some(x), Some(kms))
        } else {
            (None, None, None)
        };
        Ok(SpectrumReport {
            s,
            lambda,
            eigenvalues: sp.eigs.iter().copied().map(pair).collect(),
            peripheral: sp.peripheral_values().into_iter().map(pair).collect(),
            z: sp.z,
            gap: sp.gap,
            ell_spr: sp.ell_spr,
            ell_norm: sp.ell_norm.map(|n| n.value),
            near_degenerate_boundary: sp.near_degenerate_boundary,
            reconstruction_residual: sp.reconstruction_residual,
            irreducible: verdict.irreducible,
            invariant_state: invariant,
            x_norm,
            kms,
        })
    }

    /// Module invariants on the configured model at the first coupling and
    /// the shortest schedule.
    pub fn verify(&self, exec: Execution) -> Result<VerifyReport> {
        let lambda = self.cfg.lambdas()[0];
        let t = *self.cfg.t_list.iter().min().expect("validated");
        let coupled = lambda != 0.0;
        let grid = s_grid();
        let mut checks = Vec::new();

        struct GridPoint {
            cptp_min_choi: f64,
            cptp_trace: f64,
            russo_dye: f64,
            irreducible: bool,
            z: Option<usize>,
            ell_spr: f64,
            x_norm: f64,
            kms: Option<KmsReport>,
            pinsker_margin: f64,
        }
        let rho_i = self.initial_state(lambda)?;
        let norm = self.norm_options(Execution::Sequential);
        let points = par::map_slice(exec, &grid, |&s| -> Result<GridPoint> {
            let l = self.channel(lambda, s)?;
            let cptp = verify_cptp(&l);
            let russo_dye = induced_trace_norm_with(&l, &norm).value;
            let sp = spectral_with(&l, &SpectralOptions::without_norm())?;
            let irreducible = irreducibility(&l)?.irreducible;
            let kernel = self.schedule(lambda, 1, 1).kernel(s)?;
            let (x_norm, kms) = if irreducible {
                let inv = invariant_state(&l)?;
                let x = linalg::trace_norm(&kernel.commutator_defect(inv.op()));
                (x, Some(kms_dual_check(&l, &inv, &kernel.u, &kernel.xi)?))
            } else {
                (f64::NAN, None)
            };
            let (next, bal) = sim::simulate_step(&rho_i, &kernel)?;
            let gap = linalg::trace_norm(&(kernel.joint(rho_i.op()) - linalg::kron(next.op(), kernel.xi.op())));
            Ok(GridPoint {
                cptp_min_choi: cptp.min_choi_eigenvalue,
                cptp_trace: cptp.trace_residual,
                russo_dye,
                irreducible,
                z: sp.z,
                ell_spr: sp.ell_spr,
                x_norm,
                kms,
                pinsker_margin: bal.sigma - 0.5 * gap * gap,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

        let min_choi = points.iter().map(|p| p.cptp_min_choi).fold(f64::INFINITY, f64::min);
        let max_trace = points.iter().map(|p| p.cptp_trace).fold(0.0, f64::max);
        checks.push(Check::new("cptp", min_choi >= -1e-10 && max_trace <= 1e-10, true, min_choi, -1e-10));
        let rd = points.iter().map(|p| (p.russo_dye - 1.0).abs()).fold(0.0, f64::max);
        checks.push(Check::new("russo_dye_unit_norm", rd <= 1e-6, true, rd, 1e-6));
        let irreducible = points.iter().all(|p| p.irreducible);
        checks.push(Check::new("irreducible", irreducible, coupled, points.iter().filter(|p| p.irreducible).count() as f64, grid.len() as f64));
        let zs: Vec<Option<usize>> = points.iter().map(|p| p.z).collect();
        let z_ok = zs.iter().all(|z| z.is_some() && *z == zs[0]);
        checks.push(
            Check::new("peripheral_group", z_ok, coupled, zs[0].map_or(f64::NAN, |z| z as f64), f64::NAN)
                .detail(format!("{zs:?}")),
        );
        let ell = points.iter().map(|p| p.ell_spr).fold(0.0, f64::max);
        checks.push(Check::new("contraction_spectral_radius", ell < 1.0, coupled, ell, 1.0));
        let pinsker = points.iter().map(|p| p.pinsker_margin).fold(f64::INFINITY, f64::min);
        checks.push(Check::new("pinsker", pinsker >= -1e-9, true, pinsker, -1e-9));

        let m = self.resolve_m(lambda, exec)?;
        let ledger = run_with(&self.schedule(lambda, t, m), &rho_i, &RunOptions::default())?;
        checks.push(Check::new("run_complete", ledger.complete, true, ledger.steps.len() as f64, (t * m) as f64));
        checks.push(Check::new("balance", ledger.max_balance_residual <= 1e-9, true, ledger.max_balance_residual, 1e-9));
        checks.push(Check::new("sigma_nonnegative", ledger.min_sigma >= -1e-9, true, ledger.min_sigma, -1e-9));
        checks.push(Check::new("landauer", ledger.landauer_gap >= -1e-8, true, ledger.landauer_gap, -1e-8));
        // Totals close up to the accumulated per-step residuals.
        let closure = (ledger.sigma_tot - ledger.landauer_gap).abs();
        let budget = ledger.steps.iter().map(|r| r.balance_residual.abs()).sum::<f64>()
            + 1e-12 * ledger.steps.len().max(1) as f64;
        checks.push(Check::new("landauer_equality", closure <= budget, true, closure, budget));
        let telescope = (ledger.ds_tot - ledger.entropy_drop()).abs();
        checks.push(Check::new("entropy_telescoping", telescope <= 1e-9, true, telescope, 1e-9));

        let x_max = points.iter().map(|p| p.x_norm).fold(f64::NAN, f64::max);
        let x_verdict = if irreducible && x_max <= DETAILED_BALANCE_TOL {
            DetailedBalanceVerdict::DetailedBalance
        } else {
            DetailedBalanceVerdict::Violated
        };
        if self.cfg.model == ModelKind::QubitRw && coupled {
            let ok = z_ok && zs[0] == Some(1) && x_max <= 1e-9;
            checks.push(Check::new("rotating_wave_structure", ok, true, x_max, 1e-9));
        }
        let entropy_verdict = if !coupled || ledger.sigma_tot.abs() <= 1e-12 {
            EntropyVerdict::ZeroProduction
        } else if x_verdict == DetailedBalanceVerdict::DetailedBalance {
            EntropyVerdict::VanishingInT
        } else {
            EntropyVerdict::GrowingInT
        };
        let kms: Vec<KmsPoint> = grid
            .iter()
            .zip(&points)
            .filter_map(|(&s, p)| p.kms.map(|report| KmsPoint { s, report }))
            .collect();
        let passed = checks.iter().all(|c| c.passed || !c.required);
        Ok(VerifyReport {
            model: self.cfg.model,
            lambda,
            t,
            m,
            passed,
            checks,
            x_verdict,
            x_norm_max: x_max,
            entropy_verdict,
            sigma_tot: ledger.sigma_tot,
            landauer_gap: ledger.landauer_gap,
            kms,
        })
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct AdiabaticSummary {
    pub max_e1: f64,
    pub max_e2: f64,
    pub c_p_estimate: f64,
    pub ell: f64,
    pub max_identity_residual: f64,
    pub a_norm_max: f64,
}

#[derive(Clone, Debug)]
pub struct PointResult {
    pub t: usize,
    pub lambda: f64,
    pub m: usize,
    pub ledger: RunLedger,
    pub adiabatic: Option<AdiabaticSummary>,
    pub adiabatic_failure: Option<String>,
    /// Largest distance to the instantaneous invariant state at block ends
    /// with `s ∈ [1/4, 3/4]`.
    pub max_mid_dist: f64,
    pub predicted_rate: Option<f64>,
    /// `σ_tot / (T · predicted_rate)`.
    pub rate_ratio: Option<f64>,
    pub runtime_s: f64,
}

/// Totals written next to each ledger CSV.
#[derive(Clone, Debug, Serialize)]
pub struct LedgerTotals {
    #[serde(rename = "T")]
    pub t: usize,
    pub lambda: f64,
    pub m: usize,
    pub steps: usize,
    pub sigma_tot: f64,
    #[serde(rename = "dS_tot")]
    pub ds_tot: f64,
    #[serde(rename = "beta_dQ_tot")]
    pub beta_dq_tot: f64,
    pub landauer_gap: f64,
    pub max_balance_residual: f64,
    pub min_sigma: f64,
    pub max_mid_dist: f64,
    pub adiabatic: Option<AdiabaticSummary>,
    pub adiabatic_failure: Option<String>,
    pub predicted_rate: Option<f64>,
    pub rate_ratio: Option<f64>,
    pub complete: bool,
    pub error: Option<String>,
}

impl LedgerTotals {
    pub fn from_point(p: &PointResult) -> Self {
        let l = &p.ledger;
        Self {
            t: p.t,
            lambda: p.lambda,
            m: p.m,
            steps: l.steps.len(),
            sigma_tot: l.sigma_tot,
            ds_tot: l.ds_tot,
            beta_dq_tot: l.beta_dq_tot,
            landauer_gap: l.landauer_gap,
            max_balance_residual: l.max_balance_residual,
            min_sigma: l.min_sigma,
            max_mid_dist: p.max_mid_dist,
            adiabatic: p.adiabatic,
            adiabatic_failure: p.adiabatic_failure.clone(),
            predicted_rate: p.predicted_rate,
            rate_ratio: p.rate_ratio,
            complete: l.complete,
            error: l.error.clone(),
        }
    }
}

/// Write the ledger CSV, its totals sidecar and optionally the per-block
/// entropy chart. Returns the CSV file name.
pub fn write_point(dir: &Path, p: &PointResult, svg: bool) -> Result<String> {
    let stem = output::ledger_stem(p.t, p.lambda);
    let rows = output::ledger_rows(&p.ledger);
    let csv = format!("{stem}.csv");
    output::write_ledger_csv(&dir.join(&csv), &rows)?;
    output::write_json(&dir.join(format!("{stem}.json")), &LedgerTotals::from_point(p))?;
    if svg {
        let series = output::block_sigma_series(&rows, format!("T = {}", p.t));
        output::line_chart_svg(
            &dir.join(format!("sigma_k_T{}_lambda{}.svg", p.t, p.lambda)),
            &format!("entropy production per block, T = {}, lambda = {}", p.t, p.lambda),
            "k",
            "sigma_k",
            &[series],
        )?;
    }
    Ok(csv)
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    #[serde(rename = "T")]
    pub t: usize,
    pub lambda: f64,
    pub m: usize,
    pub sigma_tot: f64,
    pub landauer_gap: f64,
    pub max_adiabatic_error: Option<f64>,
    pub max_balance_residual: f64,
    pub max_mid_dist: f64,
    pub rate_ratio: Option<f64>,
    pub runtime_s: f64,
    pub complete: bool,
    pub ledger_csv: Option<String>,
}

impl SweepRow {
    fn from_point(p: &PointResult, ledger_csv: Option<String>) -> Self {
        Self {
            t: p.t,
            lambda: p.lambda,
            m: p.m,
            sigma_tot: p.ledger.sigma_tot,
            landauer_gap: p.ledger.landauer_gap,
            max_adiabatic_error: p.adiabatic.map(|a| a.max_e1),
            max_balance_residual: p.ledger.max_balance_residual,
            max_mid_dist: p.max_mid_dist,
            rate_ratio: p.rate_ratio,
            runtime_s: p.runtime_s,
            complete: p.ledger.complete,
            ledger_csv,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub points: Vec<PointResult>,
}

impl SweepResult {
    pub fn csv_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn write_sigma_chart(&self, path: &Path) -> Result<()> {
        let mut series: Vec<output::Series> = Vec::new();
        for row in &self.rows {
            let label = format!("lambda = {}", row.lambda);
            match series.iter_mut().find(|s| s.label == label) {
                Some(s) => s.points.push((row.t as f64, row.sigma_tot)),
                None => series.push(output::Series { label, points: vec![(row.t as f64, row.sigma_tot)] }),
            }
        }
        for s in &mut series {
            s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        output::line_chart_svg(path, "total entropy production", "T", "sigma_tot", &series)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub s: f64,
    pub lambda: f64,
    pub eigenvalues: Vec<[f64; 2]>,
    pub peripheral: Vec<[f64; 2]>,
    pub z: Option<usize>,
    pub gap: Option<f64>,
    pub ell_spr: f64,
    pub ell_norm: Option<f64>,
    pub near_degenerate_boundary: bool,
    pub reconstruction_residual: f64,
    pub irreducible: bool,
    pub invariant_state: Option<Vec<Vec<[f64; 2]>>>,
    pub x_norm: Option<f64>,
    pub kms: Option<KmsReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Informational checks never fail the report.
    pub required: bool,
    pub value: f64,
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    fn new(name: &str, passed: bool, required: bool, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), passed, required, value, threshold, detail: None }
    }

    fn detail(mut self, d: String) -> Self {
        self.detail = Some(d);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyVerdict {
    ZeroProduction,
    /// Detailed balance holds: total production vanishes as `T` grows.
    VanishingInT,
    /// Detailed balance fails: total production grows linearly in `T`.
    GrowingInT,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct KmsPoint {
    pub s: f64,
    #[serde(flatten)]
    pub report: KmsReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub model: ModelKind,
    pub lambda: f64,
    #[serde(rename = "T")]
    pub t: usize,
    pub m: usize,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub x_verdict: DetailedBalanceVerdict,
    pub x_norm_max: f64,
    pub entropy_verdict: EntropyVerdict,
    pub sigma_tot: f64,
    pub landauer_gap: f64,
    pub kms: Vec<KmsPoint>,
}
