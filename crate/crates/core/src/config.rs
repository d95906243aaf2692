//! Plain-text run configuration.
//!
//! The format is `key = value` lines grouped under `[section]` headers;
//! `#` starts a comment. Every key has a default, so an empty file is a
//! valid configuration. Floats are written with 17 significant digits so
//! that parse → serialize → parse is the identity.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::evolve::{ForcingSpec, Tracked};
use crate::mild::PicardOptions;
use crate::multiplier::PhysicalParams;
use crate::spectral::{Grid, NormSpec};
use crate::stability::CaseId;

/// Initial-data presets.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialData {
    /// `amplitude · sin(k·x)`.
    SingleMode { mode: [i64; 3], amplitude: f64 },
    /// The steady profile `A sin(m x3)`.
    MgSteady,
    /// Steady profile plus `1e−6 A sin(k1 x1) sin(k2 x2) sin(m x3)`.
    MgSteadyPlusPerturbation { k1: i64, k2: i64 },
    RandomSmooth { seed: u64, kmax: f64, l2: f64 },
    FromCheckpoint { path: PathBuf },
}

impl InitialData {
    pub fn preset_name(&self) -> &'static str {
        match self {
            InitialData::SingleMode { .. } => "single_mode",
            InitialData::MgSteady => "mg_steady",
            InitialData::MgSteadyPlusPerturbation { .. } => "mg_steady_plus_perturbation",
            InitialData::RandomSmooth { .. } => "random_smooth",
            InitialData::FromCheckpoint { .. } => "from_checkpoint",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Forcing {
    None,
    MgSteady,
}

impl Forcing {
    pub fn spec(self) -> ForcingSpec {
        match self {
            Forcing::None => ForcingSpec::None,
            Forcing::MgSteady => ForcingSpec::MgSteady,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSection {
    pub dt: f64,
    pub t_end: f64,
    /// Observe every this many steps.
    pub every: usize,
    /// Write a checkpoint every this many observations; 0 disables.
    pub checkpoint_every: usize,
    pub forcing: Forcing,
    pub track: Vec<Tracked>,
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenSection {
    pub k1: i64,
    pub k2: i64,
    pub n_max: usize,
    /// Inclusive ranges; when both are set the whole box is tabulated.
    pub box_k1: Option<[i64; 2]>,
    pub box_k2: Option<[i64; 2]>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanSection {
    pub case: CaseId,
    pub eps: Vec<f64>,
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSection {
    pub kappa: Vec<f64>,
    pub sample_times: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MildSection {
    pub horizon: f64,
    pub options: PicardOptions,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub grid: Grid,
    pub params: PhysicalParams,
    pub initial: InitialData,
    pub run: RunSection,
    pub eigen: EigenSection,
    pub scan: ScanSection,
    pub sweep: SweepSection,
    pub mild: MildSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: Grid::cubic(32).expect("32 is a valid size"),
            params: PhysicalParams::default(),
            initial: InitialData::SingleMode {
                mode: [1, 1, 1],
                amplitude: 1.0,
            },
            run: RunSection {
                dt: 1e-3,
                t_end: 1.0,
                every: 10,
                checkpoint_every: 0,
                forcing: Forcing::None,
                track: vec![
                    Tracked::Norm(NormSpec::lp(2.0)),
                    Tracked::Norm(NormSpec::lp(3.0)),
                    Tracked::Norm(NormSpec::lp(f64::INFINITY)),
                    Tracked::Gradient(2.0),
                ],
                out: PathBuf::from("out"),
            },
            eigen: EigenSection {
                k1: 1,
                k2: 1,
                n_max: 64,
                box_k1: None,
                box_k2: None,
            },
            scan: ScanSection {
                case: CaseId::II,
                eps: vec![1e-1, 1e-2, 1e-3, 1e-4],
                alpha: 2.0,
            },
            sweep: SweepSection {
                kappa: vec![1e-1, 1e-2, 1e-3, 1e-4],
                sample_times: vec![1.0],
            },
            mild: MildSection {
                horizon: 1.0,
                options: PicardOptions::default(),
            },
        }
    }
}

/// `%.17g`: shortest of fixed or scientific, trailing zeros dropped.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    fn trim(s: &str) -> &str {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.')
        } else {
            s
        }
    }
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        trim(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim(mant))
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(", ")
}

/// Parses a tracked-quantity name: `L2`, `Linf`, `Wdot0.5_4`, `W1_2`, `grad_L2`.
pub fn parse_tracked(s: &str) -> std::result::Result<Tracked, String> {
    let num = |t: &str| -> std::result::Result<f64, String> {
        if t == "inf" {
            Ok(f64::INFINITY)
        } else {
            t.parse::<f64>().map_err(|_| format!("bad number `{t}` in `{s}`"))
        }
    };
    let pair = |t: &str| -> std::result::Result<(f64, f64), String> {
        let (a, b) = t.split_once('_').ok_or_else(|| format!("`{s}`: expected <s>_<p>"))?;
        Ok((num(a)?, num(b)?))
    };
    let spec = if let Some(p) = s.strip_prefix("grad_L") {
        let p = num(p)?;
        if !(p >= 1.0) {
            return Err(format!("`{s}`: need p >= 1"));
        }
        return Ok(Tracked::Gradient(p));
    } else if let Some(rest) = s.strip_prefix("Wdot") {
        let (a, b) = pair(rest)?;
        NormSpec::new(a, b, true)
    } else if let Some(rest) = s.strip_prefix('W') {
        let (a, b) = pair(rest)?;
        NormSpec::new(a, b, false)
    } else if let Some(p) = s.strip_prefix('L') {
        NormSpec::new(0.0, num(p)?, false)
    } else {
        return Err(format!("unknown norm `{s}`"));
    };
    spec.map(Tracked::Norm).map_err(|e| format!("`{s}`: {e}"))
}

fn tracked_name(t: &Tracked) -> String {
    match t {
        Tracked::Norm(s) => s.label(),
        Tracked::Gradient(_) => t.label(),
    }
}

struct Entry {
    line: usize,
    value: String,
    used: bool,
}

/// Key/value table with the line each key came from.
struct Table {
    entries: HashMap<(String, String), Entry>,
}

impl Table {
    fn take(&mut self, section: &str, key: &str) -> Option<(usize, String)> {
        self.entries.get_mut(&(section.to_string(), key.to_string())).map(|e| {
            e.used = true;
            (e.line, e.value.clone())
        })
    }

    fn line(&self, section: &str, key: &str) -> usize {
        self.entries
            .get(&(section.to_string(), key.to_string()))
            .map_or(0, |e| e.line)
    }

    fn get<T>(
        &mut self,
        section: &str,
        key: &str,
        default: T,
        parse: impl Fn(&str) -> std::result::Result<T, String>,
    ) -> Result<T> {
        match self.take(section, key) {
            None => Ok(default),
            Some((line, v)) => parse(&v).map_err(|reason| Error::Config {
                line,
                key: format!("{section}.{key}"),
                reason,
            }),
        }
    }
}

fn p_f64(s: &str) -> std::result::Result<f64, String> {
    match s {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s.parse::<f64>().map_err(|_| format!("`{s}` is not a number")),
    }
}

fn p_int<T: std::str::FromStr>(s: &str) -> std::result::Result<T, String> {
    s.parse::<T>().map_err(|_| format!("`{s}` is not a valid integer"))
}

fn p_list<T>(s: &str, item: impl Fn(&str) -> std::result::Result<T, String>) -> std::result::Result<Vec<T>, String> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(item).collect()
}

fn p_fixed<const N: usize>(s: &str) -> std::result::Result<[i64; N], String> {
    let v = p_list(s, p_int::<i64>)?;
    v.try_into().map_err(|_| format!("expected {N} comma-separated integers"))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Parses and validates a configuration.
    pub fn parse(text: &str) -> Result<Self> {
        let mut table = Table {
            entries: HashMap::new(),
        };
        let sections = ["grid", "params", "initial", "run", "eigen", "scan", "sweep", "mild"];
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(name) = body.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| Error::Config {
                    line,
                    key: body.to_string(),
                    reason: "unterminated section header".into(),
                })?;
                let name = name.trim();
                if !sections.contains(&name) {
                    return Err(Error::Config {
                        line,
                        key: name.to_string(),
                        reason: format!("unknown section; expected one of {}", sections.join(", ")),
                    });
                }
                section = name.to_string();
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(Error::Config {
                    line,
                    key: body.to_string(),
                    reason: "expected `key = value`".into(),
                });
            };
            let key = key.trim();
            if section.is_empty() {
                return Err(Error::Config {
                    line,
                    key: key.to_string(),
                    reason: "key outside of any [section]".into(),
                });
            }
            let slot = (section.clone(), key.to_string());
            if let Some(prev) = table.entries.get(&slot) {
                return Err(Error::Config {
                    line,
                    key: format!("{section}.{key}"),
                    reason: format!("duplicate key (first set on line {})", prev.line),
                });
            }
            table.entries.insert(
                slot,
                Entry {
                    line,
                    value: value.trim().to_string(),
                    used: false,
                },
            );
        }

        let d = RunConfig::default();
        let t = &mut table;

        let dims = d.grid.dims();
        let n1 = t.get("grid", "n1", dims[0], p_int)?;
        let n2 = t.get("grid", "n2", dims[1], p_int)?;
        let n3 = t.get("grid", "n3", dims[2], p_int)?;
        let grid = Grid::new(n1, n2, n3).map_err(|e| {
            let key = [("n1", n1), ("n2", n2), ("n3", n3)]
                .into_iter()
                .find(|(_, n)| Grid::new(*n, 8, 8).is_err())
                .map_or("n1", |(k, _)| k);
            Error::Config {
                line: t.line("grid", key),
                key: format!("grid.{key}"),
                reason: e.to_string(),
            }
        })?;

        let dp = d.params;
        let params = PhysicalParams {
            n_squared: t.get("params", "n_squared", dp.n_squared, p_f64)?,
            eps_nu: t.get("params", "eps_nu", dp.eps_nu, p_f64)?,
            eps_kappa: t.get("params", "eps_kappa", dp.eps_kappa, p_f64)?,
            damping_c: t.get("params", "damping_c", dp.damping_c, p_f64)?,
            amplitude_a: t.get("params", "amplitude_a", dp.amplitude_a, p_f64)?,
            forcing_m: t.get("params", "forcing_m", dp.forcing_m, p_int)?,
        };
        if let Err(Error::InvalidParameter { name, reason }) = params.validate() {
            return Err(Error::Config {
                line: t.line("params", name),
                key: format!("params.{name}"),
                reason,
            });
        }

        let preset = t.get("initial", "preset", "single_mode".to_string(), |s| Ok(s.to_string()))?;
        let preset_line = t.line("initial", "preset");
        let initial = match preset.as_str() {
            "single_mode" => {
                let mode = t.get("initial", "mode", [1, 1, 1], p_fixed::<3>)?;
                if mode == [0, 0, 0] {
                    return Err(Error::Config {
                        line: t.line("initial", "mode"),
                        key: "initial.mode".into(),
                        reason: "the zero mode is excluded (mean-free data)".into(),
                    });
                }
                let amplitude = t.get("initial", "amplitude", 1.0, p_f64)?;
                InitialData::SingleMode { mode, amplitude }
            }
            "mg_steady" => InitialData::MgSteady,
            "mg_steady_plus_perturbation" => {
                let [k1, k2] = t.get("initial", "perturb", [1, 1], p_fixed::<2>)?;
                InitialData::MgSteadyPlusPerturbation { k1, k2 }
            }
            "random_smooth" => InitialData::RandomSmooth {
                seed: t.get("initial", "seed", 1, p_int)?,
                kmax: t.get("initial", "kmax", 4.0, p_f64)?,
                l2: t.get("initial", "l2", 1.0, p_f64)?,
            },
            "from_checkpoint" => {
                let (_, path) = t.take("initial", "path").ok_or_else(|| Error::Config {
                    line: preset_line,
                    key: "initial.path".into(),
                    reason: "required by preset from_checkpoint".into(),
                })?;
                InitialData::FromCheckpoint { path: path.into() }
            }
            other => {
                return Err(Error::Config {
                    line: preset_line,
                    key: "initial.preset".into(),
                    reason: format!(
                        "unknown preset `{other}`; expected single_mode, mg_steady, \
                         mg_steady_plus_perturbation, random_smooth or from_checkpoint"
                    ),
                })
            }
        };

        let dr = &d.run;
        let run = RunSection {
            dt: t.get("run", "dt", dr.dt, p_f64)?,
            t_end: t.get("run", "t_end", dr.t_end, p_f64)?,
            every: t.get("run", "every", dr.every, p_int)?,
            checkpoint_every: t.get("run", "checkpoint_every", dr.checkpoint_every, p_int)?,
            forcing: t.get("run", "forcing", dr.forcing, |s| match s {
                "none" => Ok(Forcing::None),
                "mg_steady" => Ok(Forcing::MgSteady),
                _ => Err(format!("`{s}`: expected none or mg_steady")),
            })?,
            track: t.get("run", "track", dr.track.clone(), |s| p_list(s, parse_tracked))?,
            out: t.get("run", "out", dr.out.clone(), |s| Ok(PathBuf::from(s)))?,
        };

        let de = &d.eigen;
        let range = |s: &str| p_fixed::<2>(s).map(Some);
        let eigen = EigenSection {
            k1: t.get("eigen", "k1", de.k1, p_int)?,
            k2: t.get("eigen", "k2", de.k2, p_int)?,
            n_max: t.get("eigen", "n_max", de.n_max, p_int)?,
            box_k1: t.get("eigen", "box_k1", None, range)?,
            box_k2: t.get("eigen", "box_k2", None, range)?,
        };

        let ds = &d.scan;
        let scan = ScanSection {
            case: t.get("scan", "case", ds.case, |s| s.parse::<CaseId>().map_err(|e| e.to_string()))?,
            eps: t.get("scan", "eps", ds.eps.clone(), |s| p_list(s, p_f64))?,
            alpha: t.get("scan", "alpha", ds.alpha, p_f64)?,
        };

        let dw = &d.sweep;
        let sweep = SweepSection {
            kappa: t.get("sweep", "kappa", dw.kappa.clone(), |s| p_list(s, p_f64))?,
            // unset sample times follow the run length, so short runs stay valid
            sample_times: t.get("sweep", "sample_times", vec![run.t_end], |s| p_list(s, p_f64))?,
        };

        let dm = d.mild.options;
        let mild = MildSection {
            horizon: t.get("mild", "horizon", d.mild.horizon, p_f64)?,
            options: PicardOptions {
                max_iter: t.get("mild", "max_iter", dm.max_iter, p_int)?,
                tol: t.get("mild", "tol", dm.tol, p_f64)?,
                panels: t.get("mild", "panels", dm.panels, p_int)?,
                order: t.get("mild", "order", dm.order, p_int)?,
                p: t.get("mild", "p", dm.p, p_f64)?,
                max_halvings: t.get("mild", "max_halvings", dm.max_halvings, p_int)?,
            },
        };

        // keys that belong to another preset, or to nothing at all
        if let Some(((sec, key), e)) = table
            .entries
            .iter()
            .filter(|(_, e)| !e.used)
            .min_by_key(|(_, e)| e.line)
        {
            return Err(Error::Config {
                line: e.line,
                key: format!("{sec}.{key}"),
                reason: if sec == "initial" {
                    format!("not used by preset `{preset}`")
                } else {
                    "unknown key".into()
                },
            });
        }

        let cfg = RunConfig {
            grid,
            params,
            initial,
            run,
            eigen,
            scan,
            sweep,
            mild,
        };
        cfg.validate(&table)?;
        Ok(cfg)
    }

    fn validate(&self, t: &Table) -> Result<()> {
        let fail = |sec: &str, key: &str, reason: String| Error::Config {
            line: t.line(sec, key),
            key: format!("{sec}.{key}"),
            reason,
        };
        let positive = |sec: &str, key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(fail(sec, key, format!("{} must be finite and > 0", fmt_f64(v))))
            }
        };
        match &self.initial {
            InitialData::SingleMode { amplitude, .. } if !amplitude.is_finite() => {
                return Err(fail("initial", "amplitude", "must be finite".into()));
            }
            InitialData::RandomSmooth { kmax, l2, .. } => {
                positive("initial", "kmax", *kmax)?;
                if !(*l2 >= 0.0 && l2.is_finite()) {
                    return Err(fail("initial", "l2", "must be finite and >= 0".into()));
                }
            }
            InitialData::MgSteadyPlusPerturbation { k1, k2 } if *k1 == 0 && *k2 == 0 => {
                return Err(fail("initial", "perturb", "(0, 0) carries no horizontal structure".into()));
            }
            _ => {}
        }
        positive("run", "dt", self.run.dt)?;
        positive("run", "t_end", self.run.t_end)?;
        if self.run.every == 0 {
            return Err(fail("run", "every", "must be >= 1".into()));
        }
        if self.run.track.is_empty() {
            return Err(fail("run", "track", "list at least one norm".into()));
        }
        if self.eigen.k1 == 0 && self.eigen.k2 == 0 {
            return Err(fail("eigen", "k1", "k1 = k2 = 0 is excluded".into()));
        }
        let need = 16.max(4 * self.params.forcing_m as usize);
        if self.eigen.n_max < need {
            return Err(fail("eigen", "n_max", format!("must be >= {need}")));
        }
        for (key, r) in [("box_k1", self.eigen.box_k1), ("box_k2", self.eigen.box_k2)] {
            if let Some([lo, hi]) = r {
                if lo < 0 || hi < lo {
                    return Err(fail("eigen", key, format!("need 0 <= lo <= hi, got {lo}, {hi}")));
                }
            }
        }
        if self.eigen.box_k1.is_some() != self.eigen.box_k2.is_some() {
            let key = if self.eigen.box_k1.is_some() { "box_k1" } else { "box_k2" };
            return Err(fail("eigen", key, "box_k1 and box_k2 go together".into()));
        }
        let eps = &self.scan.eps;
        if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(fail("scan", "eps", "need positive, strictly decreasing values".into()));
        }
        positive("scan", "alpha", self.scan.alpha)?;
        if self.sweep.kappa.is_empty() || self.sweep.kappa.iter().any(|k| !(*k > 0.0)) {
            return Err(fail("sweep", "kappa", "need positive values".into()));
        }
        for s in &self.sweep.sample_times {
            if !(*s > 0.0 && *s <= self.run.t_end) {
                return Err(fail("sweep", "sample_times", format!("{} outside (0, run.t_end]", fmt_f64(*s))));
            }
        }
        let m = &self.mild;
        if !(m.horizon > 0.0 && m.horizon <= 1.0) {
            return Err(fail("mild", "horizon", "must lie in (0, 1]".into()));
        }
        positive("mild", "tol", m.options.tol)?;
        if m.options.panels == 0 {
            return Err(fail("mild", "panels", "must be >= 1".into()));
        }
        if m.options.order == 0 {
            return Err(fail("mild", "order", "must be >= 1".into()));
        }
        if !(m.options.p > 3.0) {
            return Err(fail("mild", "p", "must be > 3".into()));
        }
        if m.options.max_iter == 0 {
            return Err(fail("mild", "max_iter", "must be >= 1".into()));
        }
        Ok(())
    }

    /// Canonical text form; parsing it gives back `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let [n1, n2, n3] = self.grid.dims();
        let p = &self.params;
        // writing to a String cannot fail
        let _ = writeln!(s, "[grid]\nn1 = {n1}\nn2 = {n2}\nn3 = {n3}\n");
        let _ = writeln!(
            s,
            "[params]\nn_squared = {}\neps_nu = {}\neps_kappa = {}\ndamping_c = {}\namplitude_a = {}\nforcing_m = {}\n",
            fmt_f64(p.n_squared),
            fmt_f64(p.eps_nu),
            fmt_f64(p.eps_kappa),
            fmt_f64(p.damping_c),
            fmt_f64(p.amplitude_a),
            p.forcing_m
        );
        let _ = writeln!(s, "[initial]\npreset = {}", self.initial.preset_name());
        match &self.initial {
            InitialData::SingleMode { mode, amplitude } => {
                let _ = writeln!(s, "mode = {}, {}, {}\namplitude = {}", mode[0], mode[1], mode[2], fmt_f64(*amplitude));
            }
            InitialData::MgSteady => {}
            InitialData::MgSteadyPlusPerturbation { k1, k2 } => {
                let _ = writeln!(s, "perturb = {k1}, {k2}");
            }
            InitialData::RandomSmooth { seed, kmax, l2 } => {
                let _ = writeln!(s, "seed = {seed}\nkmax = {}\nl2 = {}", fmt_f64(*kmax), fmt_f64(*l2));
            }
            InitialData::FromCheckpoint { path } => {
                let _ = writeln!(s, "path = {}", path.display());
            }
        }
        let r = &self.run;
        let track: Vec<String> = r.track.iter().map(tracked_name).collect();
        let _ = writeln!(
            s,
            "\n[run]\ndt = {}\nt_end = {}\nevery = {}\ncheckpoint_every = {}\nforcing = {}\ntrack = {}\nout = {}\n",
            fmt_f64(r.dt),
            fmt_f64(r.t_end),
            r.every,
            r.checkpoint_every,
            match r.forcing {
                Forcing::None => "none",
                Forcing::MgSteady => "mg_steady",
            },
            track.join(", "),
            r.out.display()
        );
        let e = &self.eigen;
        let _ = writeln!(s, "[eigen]\nk1 = {}\nk2 = {}\nn_max = {}", e.k1, e.k2, e.n_max);
        if let (Some(a), Some(b)) = (e.box_k1, e.box_k2) {
            let _ = writeln!(s, "box_k1 = {}, {}\nbox_k2 = {}, {}", a[0], a[1], b[0], b[1]);
        }
        let _ = writeln!(
            s,
            "\n[scan]\ncase = {}\neps = {}\nalpha = {}\n",
            self.scan.case,
            fmt_list(&self.scan.eps),
            fmt_f64(self.scan.alpha)
        );
        let _ = writeln!(
            s,
            "[sweep]\nkappa = {}\nsample_times = {}\n",
            fmt_list(&self.sweep.kappa),
            fmt_list(&self.sweep.sample_times)
        );
        let o = &self.mild.options;
        let _ = writeln!(
            s,
            "[mild]\nhorizon = {}\npanels = {}\norder = {}\ntol = {}\nmax_iter = {}\np = {}\nmax_halvings = {}",
            fmt_f64(self.mild.horizon),
            o.panels,
            o.order,
            fmt_f64(o.tol),
            o.max_iter,
            fmt_f64(o.p),
            o.max_halvings
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
        assert_eq!(RunConfig::parse("# nothing\n\n").unwrap(), RunConfig::default());
    }

    #[test]
    fn defaults_round_trip() {
        let d = RunConfig::default();
        assert_eq!(RunConfig::parse(&d.to_text()).unwrap(), d);
    }

    #[test]
    fn float_format_is_exact() {
        for x in [0.1, 1e-3, 1.0 / 3.0, 123456.789, 1e-300, 6.02e23, -2.5, 1e16, 1e17, 0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_f64(1.0), "1");
        assert_eq!(fmt_f64(0.25), "0.25");
        assert_eq!(fmt_f64(0.1), "0.10000000000000001");
        assert_eq!(fmt_f64(1e-7), "9.9999999999999995e-8");
    }

    #[test]
    fn errors_name_line_and_key() {
        let text = "[grid]\nn1 = 32\nn2 = 31\n";
        match RunConfig::parse(text) {
            Err(Error::Config { line, key, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(key, "grid.n2");
            }
            other => panic!("{other:?}"),
        }
        match RunConfig::parse("[params]\neps_nu = -1\n") {
            Err(Error::Config { line: 2, key, .. }) => assert_eq!(key, "params.eps_nu"),
            other => panic!("{other:?}"),
        }
        match RunConfig::parse("[run]\n\ndt = fast\n") {
            Err(Error::Config { line: 3, key, .. }) => assert_eq!(key, "run.dt"),
            other => panic!("{other:?}"),
        }
        match RunConfig::parse("[run]\nspeed = 3\n") {
            Err(Error::Config { line: 2, key, .. }) => assert_eq!(key, "run.speed"),
            other => panic!("{other:?}"),
        }
        match RunConfig::parse("[initial]\npreset = mg_steady\nseed = 4\n") {
            Err(Error::Config { line: 3, key, reason }) => {
                assert_eq!(key, "initial.seed");
                assert!(reason.contains("mg_steady"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            RunConfig::parse("[grid]\nn1 = 32\nn1 = 16\n"),
            Err(Error::Config { line: 3, .. })
        ));
        assert!(matches!(RunConfig::parse("n1 = 32\n"), Err(Error::Config { line: 1, .. })));
        assert!(matches!(RunConfig::parse("[bogus]\n"), Err(Error::Config { line: 1, .. })));
    }

    #[test]
    fn tracked_names() {
        assert_eq!(parse_tracked("L2").unwrap(), Tracked::Norm(NormSpec::lp(2.0)));
        assert_eq!(parse_tracked("Linf").unwrap(), Tracked::Norm(NormSpec::lp(f64::INFINITY)));
        assert_eq!(parse_tracked("Wdot0.5_4").unwrap(), Tracked::Norm(NormSpec::homogeneous(0.5, 4.0)));
        assert_eq!(parse_tracked("W1_2").unwrap(), Tracked::Norm(NormSpec::sobolev(1.0, 2.0)));
        assert_eq!(parse_tracked("grad_L3").unwrap(), Tracked::Gradient(3.0));
        assert!(parse_tracked("H1").is_err());
        assert!(parse_tracked("L0.5").is_err());
        for name in ["L2", "Linf", "Wdot0.9_6", "W1_2", "grad_L2"] {
            assert_eq!(tracked_name(&parse_tracked(name).unwrap()), name);
        }
    }

    #[test]
    fn presets_round_trip() {
        let text = "[initial]\npreset = random_smooth\nseed = 7\nkmax = 3.5\nl2 = 0.25\n\
                    [eigen]\nbox_k1 = 1, 8\nbox_k2 = 1, 8\n[scan]\ncase = iv\neps = 0.01, 0.001\n";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.initial, InitialData::RandomSmooth { seed: 7, kmax: 3.5, l2: 0.25 });
        assert_eq!(c.eigen.box_k1, Some([1, 8]));
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
        let c = RunConfig::parse("[initial]\npreset = from_checkpoint\npath = a/b.mgsp\n").unwrap();
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
        assert!(RunConfig::parse("[initial]\npreset = from_checkpoint\n").is_err());
    }
}
