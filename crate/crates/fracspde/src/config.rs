//! Flat `key = value` run configuration.
//!
//! One setting per line, `#` starts a comment. Unknown and repeated keys are
//! errors, as are preset parameters that the chosen preset does not use.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use fracspde_core::fractional_noise::HurstPair;
use fracspde_core::heat_kernel::InitialData;
use fracspde_core::spde_solver::{snap_theta, DriftSpec, SolveMode, SolverConfig};
use fracspde_core::GridSpec;

use crate::error::{Result, RunError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialPreset {
    Zero,
    /// See [`InitialData::ramp`].
    Ramp { x0: f64, kappa: f64 },
    SmoothBump { center: f64, width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriftPreset {
    Zero,
    Constant { c: f64 },
    /// `clamp(a u + b v, -clip, clip)`.
    Linear { a: f64, b: f64, clip: f64 },
    /// `scale * sin(u + v)`.
    Sine { scale: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub h1: f64,
    pub h2: f64,
    pub horizon: f64,
    pub length: f64,
    pub n_t: usize,
    pub n_x: usize,
    /// Requested shift; `None` means one cell.
    pub theta: Option<f64>,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    pub mode: SolveMode,
    pub seed: u64,
    pub ensemble_size: usize,
    pub output_dir: PathBuf,
    pub u0: InitialPreset,
    pub g: DriftPreset,
    /// `None` means `{8, 4, 2, 1} * dx`.
    pub sweep_thetas: Option<Vec<f64>>,
    pub subset_rows: usize,
    pub subset_cols: usize,
    /// Space point of the variance profile; `None` picks the middle of the
    /// band unaffected by truncation.
    pub growth_x: Option<f64>,
    pub kernel_samples: usize,
}

const KEYS: &[&str] = &[
    "h1",
    "h2",
    "horizon",
    "length",
    "n_t",
    "n_x",
    "theta",
    "picard_tol",
    "picard_max_iters",
    "mode",
    "seed",
    "ensemble_size",
    "output_dir",
    "u0",
    "u0_x0",
    "u0_kappa",
    "u0_center",
    "u0_width",
    "g",
    "g_c",
    "g_a",
    "g_b",
    "g_clip",
    "g_scale",
    "sweep_thetas",
    "subset_rows",
    "subset_cols",
    "growth_x",
    "kernel_samples",
    // written back by every run; ignored on input since it is recalibrated
    "c_h",
];

fn cfg_err(msg: impl Into<String>) -> RunError {
    RunError::Config(msg.into())
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| cfg_err(format!("line {}: expected `key = value`, got `{line}`", no + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(cfg_err(format!("line {}: unknown key `{k}`", no + 1)));
            }
            if v.is_empty() {
                return Err(cfg_err(format!("line {}: empty value for `{k}`", no + 1)));
            }
            if let Some((first, _)) = map.insert(k.to_string(), (no + 1, v.to_string())) {
                return Err(cfg_err(format!("line {}: `{k}` already set on line {first}", no + 1)));
            }
        }
        Ok(Self { map })
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    fn get<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| cfg_err(format!("line {line}: cannot parse `{v}` for `{key}`"))),
        }
    }

    fn require<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        self.get(key)?.ok_or_else(|| cfg_err(format!("missing required key `{key}`")))
    }

    fn float(&mut self, key: &str) -> Result<Option<f64>> {
        match self.get::<f64>(key)? {
            Some(v) if !v.is_finite() => Err(cfg_err(format!("`{key}` must be finite"))),
            other => Ok(other),
        }
    }

    fn require_float(&mut self, key: &str) -> Result<f64> {
        self.float(key)?.ok_or_else(|| cfg_err(format!("missing required key `{key}`")))
    }

    /// Errors on any key left from `keys`; they belong to another preset.
    fn reject_unused(&mut self, keys: &[&str], preset: &str) -> Result<()> {
        for k in keys {
            if let Some((line, _)) = self.take(k) {
                return Err(cfg_err(format!("line {line}: `{k}` is not used by {preset}")));
            }
        }
        Ok(())
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut e = Entries::parse(text)?;
        e.take("c_h");
        let mode = match e.take("mode") {
            None => SolveMode::TimeStepping,
            Some((_, v)) if v == "time_stepping" => SolveMode::TimeStepping,
            Some((_, v)) if v == "picard" => SolveMode::Picard,
            Some((line, v)) => {
                return Err(cfg_err(format!("line {line}: mode must be time_stepping or picard, got `{v}`")))
            }
        };
        let u0_keys = ["u0_x0", "u0_kappa", "u0_center", "u0_width"];
        let u0 = match e.take("u0").map(|(l, v)| (l, v.to_ascii_lowercase())) {
            None => InitialPreset::Zero,
            Some((_, v)) if v == "zero" => InitialPreset::Zero,
            Some((_, v)) if v == "ramp" => InitialPreset::Ramp {
                x0: e.require_float("u0_x0")?,
                kappa: e.float("u0_kappa")?.unwrap_or(1.0),
            },
            Some((_, v)) if v == "smooth_bump" => InitialPreset::SmoothBump {
                center: e.require_float("u0_center")?,
                width: e.require_float("u0_width")?,
            },
            Some((line, v)) => {
                return Err(cfg_err(format!("line {line}: u0 must be zero, ramp or smooth_bump, got `{v}`")))
            }
        };
        e.reject_unused(&u0_keys, &format!("u0 = {}", u0.name()))?;
        let g_keys = ["g_c", "g_a", "g_b", "g_clip", "g_scale"];
        let g = match e.take("g").map(|(l, v)| (l, v.to_ascii_lowercase())) {
            None => DriftPreset::Zero,
            Some((_, v)) if v == "zero" => DriftPreset::Zero,
            Some((_, v)) if v == "constant" => DriftPreset::Constant {
                c: e.require_float("g_c")?,
            },
            Some((_, v)) if v == "linear" => DriftPreset::Linear {
                a: e.require_float("g_a")?,
                b: e.require_float("g_b")?,
                clip: e.require_float("g_clip")?,
            },
            Some((_, v)) if v == "sine" => DriftPreset::Sine {
                scale: e.float("g_scale")?.unwrap_or(1.0),
            },
            Some((line, v)) => {
                return Err(cfg_err(format!(
                    "line {line}: g must be zero, constant, linear or sine, got `{v}`"
                )))
            }
        };
        e.reject_unused(&g_keys, &format!("g = {}", g.name()))?;
        let sweep_thetas = match e.take("sweep_thetas") {
            None => None,
            Some((line, v)) => Some(
                v.split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| cfg_err(format!("line {line}: sweep_thetas must be comma-separated numbers")))?,
            ),
        };
        let cfg = RunConfig {
            h1: e.require_float("h1")?,
            h2: e.require_float("h2")?,
            horizon: e.require_float("horizon")?,
            length: e.require_float("length")?,
            n_t: e.require("n_t")?,
            n_x: e.require("n_x")?,
            theta: e.float("theta")?,
            picard_tol: e.float("picard_tol")?.unwrap_or(1e-8),
            picard_max_iters: e.get("picard_max_iters")?.unwrap_or(200),
            mode,
            seed: e.get("seed")?.unwrap_or(0),
            ensemble_size: e.get("ensemble_size")?.unwrap_or(1),
            output_dir: e.get::<String>("output_dir")?.unwrap_or_else(|| "out".into()).into(),
            u0,
            g,
            sweep_thetas,
            subset_rows: e.get("subset_rows")?.unwrap_or(6),
            subset_cols: e.get("subset_cols")?.unwrap_or(6),
            growth_x: e.float("growth_x")?,
            kernel_samples: e.get("kernel_samples")?.unwrap_or(100_000),
        };
        debug_assert!(e.map.is_empty());
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks everything that does not depend on the command.
    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        HurstPair::sampling_only(self.h1, self.h2)?;
        self.solver_config()?;
        if self.ensemble_size == 0 {
            return Err(cfg_err("ensemble_size must be at least 1"));
        }
        if self.subset_rows == 0 || self.subset_cols == 0 {
            return Err(cfg_err("subset_rows and subset_cols must be at least 1"));
        }
        if self.kernel_samples == 0 {
            return Err(cfg_err("kernel_samples must be at least 1"));
        }
        if self.sweep_thetas.is_some() {
            self.thetas()?;
        }
        self.growth_index()?;
        Ok(())
    }

    /// Checks that the covariance subset fits the interior nodes.
    pub fn check_subset(&self) -> Result<()> {
        if self.subset_rows > self.n_t || self.subset_cols > self.n_x {
            return Err(cfg_err(format!(
                "a {}x{} subset does not fit the {}x{} interior nodes",
                self.subset_rows, self.subset_cols, self.n_t, self.n_x
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<GridSpec> {
        Ok(GridSpec::new(self.horizon, self.length, self.n_t, self.n_x)?)
    }

    /// Pair for sampling and covariance checks.
    pub fn sampling_hurst(&self) -> Result<HurstPair> {
        Ok(HurstPair::sampling_only(self.h1, self.h2)?)
    }

    /// Pair for the solvers and `K_H`, which need `2 h1 + h2 > 2`.
    pub fn solver_hurst(&self) -> Result<HurstPair> {
        Ok(HurstPair::new(self.h1, self.h2)?)
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let grid = self.grid()?;
        let theta = self.theta.unwrap_or(grid.dx());
        Ok(SolverConfig::new(grid, theta, self.picard_tol, self.picard_max_iters, self.mode)?)
    }

    pub fn initial_data(&self) -> Result<InitialData> {
        let grid = self.grid()?;
        Ok(match self.u0 {
            InitialPreset::Zero => InitialData::zero(&grid),
            InitialPreset::Ramp { x0, kappa } => InitialData::ramp(&grid, x0, kappa)?,
            InitialPreset::SmoothBump { center, width } => InitialData::smooth_bump(&grid, center, width)?,
        })
    }

    pub fn drift(&self) -> Result<DriftSpec> {
        Ok(match self.g {
            DriftPreset::Zero => DriftSpec::zero(),
            DriftPreset::Constant { c } => DriftSpec::constant(c)?,
            DriftPreset::Linear { a, b, clip } => DriftSpec::linear(a, b, clip)?,
            DriftPreset::Sine { scale } => DriftSpec::sine(scale)?,
        })
    }

    /// Snapped sweep shifts, in the order given.
    pub fn thetas(&self) -> Result<Vec<f64>> {
        let grid = self.grid()?;
        let dx = grid.dx();
        let raw = match &self.sweep_thetas {
            Some(v) => v.clone(),
            None => [8.0, 4.0, 2.0, 1.0].iter().map(|k| k * dx).collect(),
        };
        if raw.len() < 2 {
            return Err(cfg_err("sweep_thetas needs at least two values"));
        }
        raw.iter()
            .map(|&t| Ok(snap_theta(&grid, t)? as f64 * dx))
            .collect()
    }

    /// Node index of the variance-growth profile.
    pub fn growth_index(&self) -> Result<usize> {
        let grid = self.grid()?;
        let j = match self.growth_x {
            Some(x) => (x / grid.dx()).round(),
            None => ((grid.physical_columns() as f64 - 1.0) / 2.0).round().max(1.0),
        };
        if !(j >= 1.0 && j <= grid.n_x() as f64) {
            return Err(cfg_err(format!(
                "growth_x must lie in (0, length], got {:?}",
                self.growth_x
            )));
        }
        Ok(j as usize)
    }

    /// The configuration with every default made explicit, shifts snapped
    /// and `c_h` appended; parses back to the same run.
    pub fn resolved(&self, c_h: Option<f64>) -> Result<String> {
        let grid = self.grid()?;
        let solver = self.solver_config()?;
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            writeln!(s, "{k} = {v}").expect("write to String");
        };
        let f = FloatDisplay;
        kv("h1", &f(self.h1));
        kv("h2", &f(self.h2));
        kv("horizon", &f(self.horizon));
        kv("length", &f(self.length));
        kv("n_t", &self.n_t);
        kv("n_x", &self.n_x);
        kv("theta", &f(solver.theta()));
        kv("picard_tol", &f(self.picard_tol));
        kv("picard_max_iters", &self.picard_max_iters);
        kv(
            "mode",
            &match self.mode {
                SolveMode::TimeStepping => "time_stepping",
                SolveMode::Picard => "picard",
            },
        );
        kv("seed", &self.seed);
        kv("ensemble_size", &self.ensemble_size);
        kv("output_dir", &self.output_dir.display());
        kv("u0", &self.u0.name());
        match self.u0 {
            InitialPreset::Zero => {}
            InitialPreset::Ramp { x0, kappa } => {
                kv("u0_x0", &f(x0));
                kv("u0_kappa", &f(kappa));
            }
            InitialPreset::SmoothBump { center, width } => {
                kv("u0_center", &f(center));
                kv("u0_width", &f(width));
            }
        }
        kv("g", &self.g.name());
        match self.g {
            DriftPreset::Zero => {}
            DriftPreset::Constant { c } => kv("g_c", &f(c)),
            DriftPreset::Linear { a, b, clip } => {
                kv("g_a", &f(a));
                kv("g_b", &f(b));
                kv("g_clip", &f(clip));
            }
            DriftPreset::Sine { scale } => kv("g_scale", &f(scale)),
        }
        // the default sweep needs at least 9 cells; small grids leave it out
        if let Ok(t) = self.thetas() {
            let t: Vec<String> = t.iter().map(|&t| f(t).to_string()).collect();
            kv("sweep_thetas", &t.join(","));
        }
        kv("subset_rows", &self.subset_rows);
        kv("subset_cols", &self.subset_cols);
        kv("growth_x", &f(grid.x(self.growth_index()?)));
        kv("kernel_samples", &self.kernel_samples);
        match c_h {
            Some(c) => kv("c_h", &f(c)),
            None => s.push_str("# c_h undefined: 2 h1 + h2 <= 2\n"),
        }
        Ok(s)
    }
}

/// Shortest round-trip form, switching to exponent notation outside
/// `[1e-4, 1e15)`.
struct FloatDisplay(f64);

impl std::fmt::Display for FloatDisplay {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let a = self.0.abs();
        if a != 0.0 && !(1e-4..1e15).contains(&a) {
            write!(f, "{:e}", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl InitialPreset {
    pub fn name(&self) -> &'static str {
        match self {
            InitialPreset::Zero => "zero",
            InitialPreset::Ramp { .. } => "ramp",
            InitialPreset::SmoothBump { .. } => "smooth_bump",
        }
    }
}

impl DriftPreset {
    pub fn name(&self) -> &'static str {
        match self {
            DriftPreset::Zero => "zero",
            DriftPreset::Constant { .. } => "constant",
            DriftPreset::Linear { .. } => "linear",
            DriftPreset::Sine { .. } => "sine",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "h1 = 0.8\nh2 = 0.7\nhorizon = 1\nlength = 8\nn_t = 16\nn_x = 32\n";

    fn parse(extra: &str) -> Result<RunConfig> {
        RunConfig::parse(&format!("{BASE}{extra}"))
    }

    #[test]
    fn defaults() {
        let c = parse("").unwrap();
        assert_eq!(c.u0, InitialPreset::Zero);
        assert_eq!(c.g, DriftPreset::Zero);
        assert_eq!(c.ensemble_size, 1);
        assert_eq!(c.solver_config().unwrap().theta(), 0.25);
        assert_eq!(c.thetas().unwrap(), vec![2.0, 1.0, 0.5, 0.25]);
    }

    #[test]
    fn comments_and_presets() {
        let c = parse("# a comment\nu0 = ramp   # trailing\nu0_x0 = 1.5\ng = linear\ng_a = 1\ng_b = 0.5\ng_clip = 4\n").unwrap();
        assert_eq!(c.u0, InitialPreset::Ramp { x0: 1.5, kappa: 1.0 });
        assert_eq!(c.g, DriftPreset::Linear { a: 1.0, b: 0.5, clip: 4.0 });
    }

    #[test]
    fn rejects_bad_input() {
        for (extra, needle) in [
            ("foo = 1\n", "unknown key `foo`"),
            ("seed = 1\nseed = 2\n", "already set"),
            ("seed\n", "expected `key = value`"),
            ("n_t = 3\n", "already set"),
            ("g_c = 1\n", "not used by g = zero"),
            ("u0 = ramp\n", "missing required key `u0_x0`"),
            ("mode = fast\n", "mode must be"),
            ("theta = -1\n", "theta"),
            ("ensemble_size = 0\n", "ensemble_size"),
        ] {
            let e = parse(extra).unwrap_err();
            assert_eq!(e.exit_code(), 2);
            assert!(e.to_string().contains(needle), "{extra:?}: {e}");
        }
        assert!(RunConfig::parse("h1 = 0.8\n").unwrap_err().to_string().contains("missing"));
        assert!(parse("").is_ok());
        assert!(parse("subset_rows = 40\n").unwrap().check_subset().unwrap_err().to_string().contains("does not fit"));
    }

    #[test]
    fn resolved_round_trips() {
        let c = parse("theta = 0.3\nu0 = smooth_bump\nu0_center = 2\nu0_width = 0.5\ng = sine\nseed = 99\n").unwrap();
        let text = c.resolved(Some(1.25)).unwrap();
        assert!(text.contains("theta = 0.25\n"));
        assert!(text.contains("c_h = 1.25\n"));
        assert!(text.contains("picard_tol = 1e-8\n"));
        let back = RunConfig::parse(&text).unwrap();
        assert_eq!(back.resolved(Some(1.25)).unwrap(), text);
        let (a, b) = (back.solver_config().unwrap(), c.solver_config().unwrap());
        assert_eq!((a.theta(), a.shift_cells()), (b.theta(), b.shift_cells()));
        assert_eq!(back.seed, 99);
    }
}
