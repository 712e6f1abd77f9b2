//! End-to-end sweeps over `(ell, W)` and the CSV artifacts built on them.
//!
//! For each `ell` every realization draws one unit screen per arm. The
//! screen for strength `W` is that unit screen times `k0 sqrt(cn2 L)`, so all
//! `W` values of a realization share the same random draw and the trend in
//! `W` is free of sampling noise between grid points.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use nalgebra::{Complex, DMatrix, Matrix4};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bipartite::{Averaging, average_matrices, evolve_realization};
use crate::channel::{
    ModeBasis, SpiralSpectrum, anti_diagonal_fraction, coincidence_from_transfer, oam_range,
};
use crate::config::SweepConfig;
use crate::density::{DensityMatrix, DensityMatrixJson, trace};
use crate::entanglement::EntanglementReport;
use crate::error::{Error, Result};
use crate::link::{cn2l_for_w, fried_parameter_path};
use crate::qkd::{KeyRateReport, Protocol, key_rate_e91, key_rate_six_state};
use crate::rng::{Arm, Domain, derive_seed, screen_seed, stream};
use crate::scalar::Real;
use crate::turbulence::{
    GridGeometry, PhaseScreen, ScreenSynthesizer, TurbulenceSpec, structure_function,
};

/// Exact header of the sweep CSV.
pub const SWEEP_CSV_HEADER: &str = "ell,W,realizations,Q_e91a,r_e91a,Q_e91b,r_e91b,Q_e91c,r_e91c,Q_six,r_six,concurrence,eof,postselect_prob,se_Q_six,se_eof";

/// Bootstrap standard errors over realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardErrors<T> {
    /// Per protocol, in the order of [`SweepRecord::rates`].
    pub q: Vec<T>,
    pub r_min: Vec<T>,
    pub concurrence: T,
    pub eof: T,
}

/// Scores of one `(ell, W)` sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord<T: Real> {
    pub ell: i32,
    pub w: T,
    pub realizations: usize,
    pub rates: Vec<(Protocol, KeyRateReport<T>)>,
    pub concurrence: T,
    pub eof: T,
    /// Mean probability that both photons stay in the qubit subspace.
    pub postselect_prob: T,
    pub se: StandardErrors<T>,
    pub state: DensityMatrix<T>,
    /// This point's share of the propagation time plus its own scoring time.
    pub wall_time_s: f64,
}

impl<T: Real> SweepRecord<T> {
    pub fn rate(&self, p: Protocol) -> Option<&KeyRateReport<T>> {
        self.rates.iter().find(|(q, _)| *q == p).map(|(_, r)| r)
    }

    fn position(&self, p: Protocol) -> Option<usize> {
        self.rates.iter().position(|(q, _)| *q == p)
    }

    pub fn se_q(&self, p: Protocol) -> Option<T> {
        self.position(p).map(|i| self.se.q[i])
    }

    pub fn se_r_min(&self, p: Protocol) -> Option<T> {
        self.position(p).map(|i| self.se.r_min[i])
    }
}

struct Score<T: Real> {
    rates: Vec<(Protocol, KeyRateReport<T>)>,
    entanglement: EntanglementReport<T>,
}

fn score<T: Real>(rho: &DensityMatrix<T>, protocols: &[Protocol]) -> Result<Score<T>> {
    let rates = protocols
        .iter()
        .map(|&p| Ok((p, KeyRateReport::evaluate(rho, p)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Score {
        rates,
        entanglement: EntanglementReport::evaluate(rho)?,
    })
}

/// Screen amplitude multiplying a unit screen to reach strength `w`.
pub fn screen_scale_for_w<T: Real>(w: f64, w0: f64, wavelength: f64) -> Result<T> {
    let cn2l = cn2l_for_w(w, w0, wavelength)?;
    Ok(T::of(TurbulenceSpec::new(wavelength, cn2l)?.screen_scale()))
}

fn geometry<T: Real>(cfg: &SweepConfig) -> Result<GridGeometry<T>> {
    GridGeometry::new(cfg.grid_n, T::of(cfg.window))
}

/// Runs `f` on the configured worker pool.
fn with_pool<R: Send>(cfg: &SweepConfig, f: impl FnOnce() -> R + Send) -> Result<R> {
    match cfg.threads {
        Some(n) if cfg.parallel => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        _ => Ok(f()),
    }
}

/// Maps `f` over `0..n`, in parallel when configured, preserving order.
fn map_indices<R: Send>(
    cfg: &SweepConfig,
    n: usize,
    f: impl Fn(usize) -> Result<R> + Sync + Send,
) -> Result<Vec<R>> {
    if cfg.parallel {
        (0..n).into_par_iter().map(f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

/// Full sweep; one record per `(ell, W)`, ordered by `ell` then `W`.
pub fn run_sweep<T: Real>(cfg: &SweepConfig) -> Result<Vec<SweepRecord<T>>> {
    cfg.validate()?;
    with_pool(cfg, || run_sweep_inner(cfg))?
}

fn run_sweep_inner<T: Real>(cfg: &SweepConfig) -> Result<Vec<SweepRecord<T>>> {
    let geom = geometry::<T>(cfg)?;
    let synth = ScreenSynthesizer::new(geom, cfg.subharmonic_levels)?;
    let scales = cfg
        .w_values
        .iter()
        .map(|&w| screen_scale_for_w::<T>(w, cfg.w0, cfg.wavelength))
        .collect::<Result<Vec<_>>>()?;

    let mut records = Vec::with_capacity(cfg.ells.len() * cfg.w_values.len());
    for &ell in &cfg.ells {
        let started = Instant::now();
        let basis = ModeBasis::new(&[-ell.abs(), ell.abs()], T::of(cfg.w0), &geom)?;
        // states[realization][w_index]
        let states = map_indices(cfg, cfg.realizations, |i| {
            let a = synth.unit_screen(screen_seed(cfg.base_seed, ell, i, Arm::A));
            let b = synth.unit_screen(screen_seed(cfg.base_seed, ell, i, Arm::B));
            scales
                .iter()
                .map(|&s| {
                    let ta = basis.transfer_matrix_scaled(&a, s)?;
                    let tb = basis.transfer_matrix_scaled(&b, s)?;
                    Ok(evolve_realization(&ta, &tb)?.rho_unnormalized)
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let propagation = started.elapsed().as_secs_f64() / cfg.w_values.len() as f64;

        for (wi, &w) in cfg.w_values.iter().enumerate() {
            let t0 = Instant::now();
            let mats: Vec<Matrix4<Complex<T>>> = states.iter().map(|s| s[wi]).collect();
            let record = score_point(cfg, ell, wi, w, &mats)?;
            records.push(SweepRecord {
                wall_time_s: propagation + t0.elapsed().as_secs_f64(),
                ..record
            });
        }
    }
    Ok(records)
}

fn score_point<T: Real>(
    cfg: &SweepConfig,
    ell: i32,
    w_index: usize,
    w: f64,
    mats: &[Matrix4<Complex<T>>],
) -> Result<SweepRecord<T>> {
    let locate = |e: Error| match e {
        Error::DegenerateEnsemble(msg) => {
            Error::DegenerateEnsemble(format!("ell = {ell}, W = {w}: {msg}"))
        }
        other => other,
    };
    let state = average_matrices(mats.iter(), cfg.averaging).map_err(locate)?;
    let s = score(&state, &cfg.protocols)?;
    let postselect_prob =
        mats.iter().fold(T::zero(), |a, m| a + trace(m)) / T::of_usize(mats.len());
    let seed = derive_seed(
        cfg.base_seed,
        Domain::Bootstrap,
        &[ell as i64 as u64, w_index as u64],
    );
    let se = bootstrap(
        mats,
        cfg.averaging,
        &cfg.protocols,
        cfg.bootstrap_resamples,
        seed,
    )?;
    Ok(SweepRecord {
        ell,
        w: T::of(w),
        realizations: mats.len(),
        rates: s.rates,
        concurrence: s.entanglement.concurrence,
        eof: s.entanglement.eof,
        postselect_prob,
        se,
        state,
        wall_time_s: 0.0,
    })
}

fn sample_std<T: Real>(xs: &[T]) -> T {
    if xs.len() < 2 {
        return T::zero();
    }
    let n = T::of_usize(xs.len());
    let mean = xs.iter().fold(T::zero(), |a, &x| a + x) / n;
    let ss = xs
        .iter()
        .fold(T::zero(), |a, &x| a + (x - mean) * (x - mean));
    (ss / (n - T::one())).sqrt()
}

/// Standard deviation of every score over resamples (with replacement) of
/// the realizations. Resamples with no surviving coincidences are skipped.
fn bootstrap<T: Real>(
    mats: &[Matrix4<Complex<T>>],
    averaging: Averaging,
    protocols: &[Protocol],
    resamples: usize,
    seed: u64,
) -> Result<StandardErrors<T>> {
    let np = protocols.len();
    let mut q: Vec<Vec<T>> = vec![Vec::with_capacity(resamples); np];
    let mut r: Vec<Vec<T>> = vec![Vec::with_capacity(resamples); np];
    let mut c = Vec::with_capacity(resamples);
    let mut e = Vec::with_capacity(resamples);
    let mut rng = stream(seed);
    let n = mats.len();
    for _ in 0..resamples {
        let picks: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let state = match average_matrices(picks.iter().map(|&i| &mats[i]), averaging) {
            Ok(s) => s,
            Err(Error::DegenerateEnsemble(_)) => continue,
            Err(other) => return Err(other),
        };
        let s = score(&state, protocols)?;
        for (k, (_, rep)) in s.rates.iter().enumerate() {
            q[k].push(rep.q);
            r[k].push(rep.r_min);
        }
        c.push(s.entanglement.concurrence);
        e.push(s.entanglement.eof);
    }
    Ok(StandardErrors {
        q: q.iter().map(|v| sample_std(v)).collect(),
        r_min: r.iter().map(|v| sample_std(v)).collect(),
        concurrence: sample_std(&c),
        eof: sample_std(&e),
    })
}

/// `%.9g`-style formatting: 9 significant digits, `.` as decimal point.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    let s = if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.8e}")
    };
    trim_zeros(&s)
}

fn trim_zeros(s: &str) -> String {
    let (mantissa, exponent) = match s.find('e') {
        Some(i) => (&s[..i], &s[i..]),
        None => (s, ""),
    };
    let mantissa = if mantissa.contains('.') {
        mantissa.trim_end_matches('0').trim_end_matches('.')
    } else {
        mantissa
    };
    format!("{mantissa}{exponent}")
}

/// Sweep CSV text. Raw (unclamped) key rates go in the `r_*` columns;
/// protocols left out of the run leave empty fields.
pub fn to_csv_string<T: Real>(records: &[SweepRecord<T>]) -> Result<String> {
    if records.is_empty() {
        return Err(Error::Config("no sweep records to write".into()));
    }
    let mut out = String::with_capacity(256 * (records.len() + 1));
    out.push_str(SWEEP_CSV_HEADER);
    out.push('\n');
    let f = |v: T| format_sig9(v.as_f64());
    for rec in records {
        let _ = write!(out, "{},{},{}", rec.ell, f(rec.w), rec.realizations);
        for p in Protocol::ALL {
            match rec.rate(p) {
                Some(r) => {
                    let _ = write!(out, ",{},{}", f(r.q), f(r.r_min));
                }
                None => out.push_str(",,"),
            }
        }
        let se_q_six = rec.se_q(Protocol::SixState).map(f).unwrap_or_default();
        let _ = writeln!(
            out,
            ",{},{},{},{},{}",
            f(rec.concurrence),
            f(rec.eof),
            f(rec.postselect_prob),
            se_q_six,
            f(rec.se.eof)
        );
    }
    Ok(out)
}

/// Writes the sweep CSV. Empty input is rejected before the file is touched.
pub fn emit_csv<T: Real>(records: &[SweepRecord<T>], path: &Path) -> Result<()> {
    let text = to_csv_string(records)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct StateDump {
    ell: i32,
    w: f64,
    rho: DensityMatrixJson,
}

/// Mean density matrix of every sweep point as a JSON array.
pub fn emit_states_json<T: Real>(records: &[SweepRecord<T>], path: &Path) -> Result<()> {
    let dump: Vec<StateDump> = records
        .iter()
        .map(|r| StateDump {
            ell: r.ell,
            w: r.w.as_f64(),
            rho: r.state.to_json(),
        })
        .collect();
    let text = serde_json::to_string_pretty(&dump).map_err(|e| Error::Numerical(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `Q,r_E91,r_six` table over a QBER grid.
pub fn run_rates_table(q_grid: &[f64]) -> Result<String> {
    let mut out = String::from("Q,r_E91,r_six\n");
    for &q in q_grid {
        let _ = writeln!(
            out,
            "{},{},{}",
            format_sig9(q),
            format_sig9(key_rate_e91(q)?),
            format_sig9(key_rate_six_state(q)?)
        );
    }
    Ok(out)
}

/// `0, step, ..., max` without accumulated rounding.
pub fn uniform_grid(max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(max >= 0.0) || !max.is_finite() {
        return Err(Error::Config(format!(
            "invalid grid: max = {max}, step = {step}"
        )));
    }
    let n = (max / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| i as f64 * step).collect())
}

/// Coincidence probabilities between `ell_A` (rows) and `ell_B` (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct CrosstalkResult<T: Real> {
    pub ells: Vec<i32>,
    /// Summed over realizations and normalized to unit total.
    pub matrix: DMatrix<T>,
    pub anti_diagonal_fraction: T,
}

impl<T: Real> CrosstalkResult<T> {
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("ell_A");
        for l in &self.ells {
            let _ = write!(out, ",{l}");
        }
        out.push('\n');
        for (i, l) in self.ells.iter().enumerate() {
            let _ = write!(out, "{l}");
            for j in 0..self.ells.len() {
                let _ = write!(out, ",{}", format_sig9(self.matrix[(i, j)].as_f64()));
            }
            out.push('\n');
        }
        out
    }
}

/// Mean crosstalk matrix over `[-ell_max, ell_max]` with a flat spiral
/// spectrum, using the geometry, seeds and realization count of `cfg`.
pub fn run_crosstalk<T: Real>(
    cfg: &SweepConfig,
    w: f64,
    ell_max: i32,
) -> Result<CrosstalkResult<T>> {
    cfg.validate()?;
    with_pool(cfg, || {
        let geom = geometry::<T>(cfg)?;
        let synth = ScreenSynthesizer::new(geom, cfg.subharmonic_levels)?;
        let scale = screen_scale_for_w::<T>(w, cfg.w0, cfg.wavelength)?;
        let ells = oam_range(ell_max);
        let basis = ModeBasis::new(&ells, T::of(cfg.w0), &geom)?;
        let spectrum = SpiralSpectrum::flat(ell_max)?;
        let seed = |i: usize, arm: Arm| {
            derive_seed(cfg.base_seed, Domain::Crosstalk, &[i as u64, arm as u64])
        };
        let parts = map_indices(cfg, cfg.realizations, |i| {
            let a = synth.unit_screen(seed(i, Arm::A));
            let b = synth.unit_screen(seed(i, Arm::B));
            let ta = basis.transfer_matrix_scaled(&a, scale)?;
            let tb = basis.transfer_matrix_scaled(&b, scale)?;
            coincidence_from_transfer(&ta, &tb, &spectrum)
        })?;
        let d = ells.len();
        let mut sum = DMatrix::zeros(d, d);
        for p in &parts {
            sum += p;
        }
        let total = sum.iter().fold(T::zero(), |a, &v| a + v);
        if !(total > T::zero()) {
            return Err(Error::DegenerateEnsemble(format!(
                "no coincidences at W = {w}"
            )));
        }
        let matrix = sum / total;
        Ok(CrosstalkResult {
            anti_diagonal_fraction: anti_diagonal_fraction(&matrix),
            ells,
            matrix,
        })
    })?
}

/// One row of the screen statistics table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureFunctionRow {
    pub pixels: usize,
    /// Separation in metres.
    pub r: f64,
    pub empirical: f64,
    /// `6.88 (r / r0)^(5/3)`.
    pub theory: f64,
}

impl StructureFunctionRow {
    pub fn ratio(&self) -> f64 {
        self.empirical / self.theory
    }
}

/// Lags 1, 2, 3, 4, 6, 8, 12, 16, ... up to `max`.
pub fn default_lags(max: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut p = 1usize;
    while p <= max {
        out.push(p);
        if p >= 2 && p + p / 2 <= max {
            out.push(p + p / 2);
        }
        p *= 2;
    }
    out
}

/// Empirical and Kolmogorov structure functions of `screens` screens at
/// strength `w`, generated with the geometry and seeds of `cfg`.
pub fn run_screen_statistics(
    cfg: &SweepConfig,
    w: f64,
    screens: usize,
    lags: &[usize],
) -> Result<Vec<StructureFunctionRow>> {
    cfg.validate()?;
    if !(w > 0.0) {
        return Err(Error::Config(format!(
            "screen statistics need W > 0, got {w}"
        )));
    }
    let geom = geometry::<f64>(cfg)?;
    let synth = ScreenSynthesizer::new(geom, cfg.subharmonic_levels)?;
    let cn2l = cn2l_for_w(w, cfg.w0, cfg.wavelength)?;
    let spec = TurbulenceSpec::new(cfg.wavelength, cn2l)?;
    let r0 = fried_parameter_path(cfg.wavelength, cn2l);
    let generated: Vec<PhaseScreen<f64>> = with_pool(cfg, || {
        map_indices(cfg, screens, |i| {
            Ok(synth.generate(
                &spec,
                derive_seed(cfg.base_seed, Domain::Screen, &[u64::MAX, i as u64]),
            ))
        })
    })??;
    let dx = geom.cell_size();
    let seps: Vec<f64> = lags.iter().map(|&p| p as f64 * dx).collect();
    let d = structure_function(&generated, &seps)?;
    Ok(lags
        .iter()
        .zip(d)
        .map(|(&pixels, (r, empirical))| StructureFunctionRow {
            pixels,
            r,
            empirical,
            theory: 6.88 * (r / r0).powf(5.0 / 3.0),
        })
        .collect())
}

pub fn structure_function_csv(rows: &[StructureFunctionRow]) -> String {
    let mut out = String::from("pixels,r,D_empirical,D_theory,ratio\n");
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            row.pixels,
            format_sig9(row.r),
            format_sig9(row.empirical),
            format_sig9(row.theory),
            format_sig9(row.ratio())
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SweepConfig {
        SweepConfig {
            ells: vec![1],
            w_values: vec![0.0, 1.0],
            realizations: 3,
            grid_n: 64,
            bootstrap_resamples: 10,
            ..SweepConfig::default()
        }
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(0.25), "0.25");
        assert_eq!(format_sig9(0.0620088023), "0.0620088023");
        assert_eq!(format_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(format_sig9(-2.0 / 3.0), "-0.666666667");
        assert_eq!(format_sig9(123456789.4), "123456789");
        assert_eq!(format_sig9(1e-12), "1e-12");
        assert_eq!(format_sig9(2.5e-7), "2.5e-7");
        assert_eq!(format_sig9(1.23456789012e10), "1.23456789e10");
        for v in [0.1, 3.7e-3, 9.87654321e-6, 42.0] {
            assert_eq!(format_sig9(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn grid_helpers() {
        assert_eq!(uniform_grid(4.0, 0.25).unwrap().len(), 17);
        assert_eq!(uniform_grid(0.3, 0.1).unwrap().len(), 4);
        assert!(uniform_grid(1.0, 0.0).is_err());
        assert_eq!(default_lags(32), [1, 2, 3, 4, 6, 8, 12, 16, 24, 32]);
    }

    #[test]
    fn zero_turbulence_point_is_ideal() {
        let cfg = SweepConfig {
            w_values: vec![0.0],
            ..small()
        };
        let recs = run_sweep::<f64>(&cfg).unwrap();
        assert_eq!(recs.len(), 1);
        let r = &recs[0];
        for (_, rep) in &r.rates {
            assert!(rep.q <= 1e-9);
            assert!((rep.r_min - 1.0).abs() <= 1e-9);
        }
        assert!((r.concurrence - 1.0).abs() <= 1e-9);
        assert!((r.eof - 1.0).abs() <= 1e-9);
        assert!((r.postselect_prob - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn csv_shape_and_determinism() {
        let cfg = small();
        let a = to_csv_string(&run_sweep::<f64>(&cfg).unwrap()).unwrap();
        let b = to_csv_string(&run_sweep::<f64>(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
        let lines: Vec<_> = a.lines().collect();
        assert_eq!(lines[0], SWEEP_CSV_HEADER);
        assert_eq!(lines.len(), 3);
        assert!(lines.iter().all(|l| l.split(',').count() == 16));
        assert!(lines[1].starts_with("1,0,3,"), "{}", lines[1]);
    }

    #[test]
    fn serial_and_parallel_agree() {
        let par = run_sweep::<f64>(&small()).unwrap();
        let ser = run_sweep::<f64>(&SweepConfig {
            parallel: false,
            ..small()
        })
        .unwrap();
        assert_eq!(to_csv_string(&par).unwrap(), to_csv_string(&ser).unwrap());
    }

    #[test]
    fn omitted_protocols_leave_empty_fields() {
        let cfg = SweepConfig {
            protocols: vec![Protocol::E91b],
            w_values: vec![0.5],
            ..small()
        };
        let csv = to_csv_string(&run_sweep::<f64>(&cfg).unwrap()).unwrap();
        let row: Vec<_> = csv.lines().nth(1).unwrap().split(',').collect();
        assert!(row[3].is_empty() && !row[5].is_empty() && row[9].is_empty() && row[14].is_empty());
    }

    #[test]
    fn empty_records_rejected_before_io() {
        let path = std::env::temp_dir().join("oamqkd-never-written.csv");
        std::fs::remove_file(&path).ok();
        assert!(emit_csv::<f64>(&[], &path).is_err());
        assert!(!path.exists());
    }

    #[test]
    fn unwritable_path_names_the_path() {
        let recs = run_sweep::<f64>(&SweepConfig {
            w_values: vec![0.0],
            ..small()
        })
        .unwrap();
        let path = Path::new("/nonexistent-dir/out.csv");
        let err = emit_csv(&recs, path).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/out.csv"));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn rates_table_rows() {
        let t = run_rates_table(&[0.0, 0.1]).unwrap();
        let rows: Vec<Vec<f64>> = t
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows[0], [0.0, 1.0, 1.0]);
        assert!((rows[1][1] - 0.06200).abs() < 1e-5);
        assert!((rows[1][2] - 0.15241).abs() < 1e-5);
        assert!(run_rates_table(&[0.7]).is_err());
    }

    #[test]
    fn crosstalk_without_turbulence_is_anti_diagonal() {
        let cfg = SweepConfig {
            realizations: 2,
            grid_n: 128,
            ..SweepConfig::default()
        };
        let c = run_crosstalk::<f64>(&cfg, 0.0, 3).unwrap();
        assert!(1.0 - c.anti_diagonal_fraction < 1e-12);
        assert!((c.matrix[(0, 6)] - 1.0 / 7.0).abs() < 1e-9);
        let csv = c.to_csv_string();
        assert!(csv.starts_with("ell_A,-3,-2,-1,0,1,2,3\n"));
        assert_eq!(csv.lines().count(), 8);
    }

    #[test]
    fn crosstalk_spreads_with_turbulence() {
        let cfg = SweepConfig {
            realizations: 4,
            grid_n: 128,
            ..SweepConfig::default()
        };
        let c = run_crosstalk::<f64>(&cfg, 2.0, 3).unwrap();
        assert!(c.anti_diagonal_fraction < 0.95);
        assert!((c.matrix.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn screen_statistics_table() {
        let cfg = SweepConfig {
            grid_n: 64,
            ..SweepConfig::default()
        };
        let rows = run_screen_statistics(&cfg, 2.0, 20, &[2, 4]).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.empirical > 0.0 && r.theory > 0.0));
        let csv = structure_function_csv(&rows);
        assert!(csv.starts_with("pixels,r,D_empirical,D_theory,ratio\n"));
        assert!(run_screen_statistics(&cfg, 0.0, 20, &[2]).is_err());
    }
}
