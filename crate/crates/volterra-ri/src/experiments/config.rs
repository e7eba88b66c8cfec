//! Flat key-value experiment configuration.
//!
//! Grammar: one `section.key = value` per line, `#` starts a comment, blank
//! lines ignored. Unknown keys are errors; missing keys fall back to the
//! baseline parameter set with their provenance logged. Units are years and
//! per-year rates throughout.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::market::{moment_fit, ClaimFamily, ClaimModel, MarketParams};
use crate::mortality::MortalityParams;
use crate::strategies::RiskAversion;
use crate::timefn::TimeFn;

/// Fully resolved experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub mortality: MortalityParams,
    /// Start of the pre-observation window (≤ 0; the control horizon begins
    /// at 0). Snapped to a whole number of grid steps.
    pub hist_t0: f64,
    pub market: MarketParams,
    pub claims: ClaimModel,
    pub risk: RiskAversion,
    /// Nonempty for a state-dependent sweep; single-element otherwise.
    pub phi1_sweep: Vec<f64>,
    pub t_end: f64,
    pub ctrl_steps: usize,
    pub n_paths: u64,
    pub seed: u64,
    pub x0: f64,
    pub out_dir: PathBuf,
    pub alpha_lrd: f64,
    pub alpha_markov: f64,
    /// Drop the history window: forecasts then use [0, T] information only.
    pub history_ablation: bool,
    /// 0 = single-path figure mode; > 0 emits mean ± SE bands over that many
    /// paths (a documented extension of the single-trajectory figures).
    pub ensemble_paths: u64,
    /// Keys that fell back to defaults, for the run log.
    pub defaults_used: Vec<String>,
    /// FNV-1a hash of the raw config text (manifest provenance).
    pub content_hash: u64,
    /// True when every key came from defaults (empty file).
    pub all_default: bool,
}

impl ExperimentConfig {
    /// Number of history steps before the control origin.
    pub fn hist_steps(&self) -> usize {
        let dt = self.t_end / self.ctrl_steps as f64;
        (-self.hist_t0 / dt).round() as usize
    }

    /// Mortality grid covering history plus control window.
    pub fn full_grid(&self) -> Result<crate::grid::DiscreteGrid> {
        let dt = self.t_end / self.ctrl_steps as f64;
        let n_hist = self.hist_steps();
        crate::grid::DiscreteGrid::new(
            -(n_hist as f64) * dt,
            self.t_end,
            n_hist + self.ctrl_steps,
        )
    }
}

fn fnv1a(text: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in text.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

const KNOWN_KEYS: &[&str] = &[
    "kernel.family",
    "kernel.c",
    "kernel.alpha",
    "kernel.decay",
    "mortality.lambda0",
    "mortality.b1",
    "mortality.a1",
    "mortality.sigma_lambda",
    "mortality.hist_t0",
    "market.r",
    "market.mu",
    "market.sigma",
    "market.theta",
    "market.eta",
    "market.k1",
    "claims.family",
    "claims.mu_z",
    "claims.m2",
    "claims.z_max",
    "risk.phi1",
    "risk.phi2",
    "risk.phi1_sweep",
    "grid.t_end",
    "grid.steps",
    "sim.n_paths",
    "sim.seed",
    "sim.x0",
    "outputs.dir",
    "comparison.alpha_lrd",
    "comparison.alpha_markov",
    "comparison.history_ablation",
    "comparison.ensemble_paths",
];

struct RawConfig {
    entries: BTreeMap<String, (usize, String)>,
}

fn parse_raw(text: &str) -> Result<RawConfig> {
    let mut entries = BTreeMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(p) => &raw_line[..p],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
            line: line_no,
            msg: format!("expected `section.key = value`, got `{line}`"),
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::Config { line: line_no, msg: format!("unknown key `{key}`") });
        }
        if entries.insert(key.clone(), (line_no, value)).is_some() {
            return Err(Error::Config {
                line: line_no,
                msg: format!("duplicate key `{key}`"),
            });
        }
    }
    Ok(RawConfig { entries })
}

struct Resolver {
    raw: RawConfig,
    defaults_used: Vec<String>,
}

impl Resolver {
    fn take(&mut self, key: &str, default: &str) -> (String, usize) {
        match self.raw.entries.get(key) {
            Some((line, v)) => (v.clone(), *line),
            None => {
                self.defaults_used.push(format!("{key} = {default} (baseline default)"));
                (default.to_string(), 0)
            }
        }
    }

    fn optional(&mut self, key: &str) -> Option<(String, usize)> {
        self.raw.entries.get(key).map(|(l, v)| (v.clone(), *l))
    }

    fn f64(&mut self, key: &str, default: &str) -> Result<f64> {
        let (v, line) = self.take(key, default);
        v.parse().map_err(|_| Error::Config {
            line,
            msg: format!("{key}: `{v}` is not a number"),
        })
    }

    fn u64(&mut self, key: &str, default: &str) -> Result<u64> {
        let (v, line) = self.take(key, default);
        v.parse().map_err(|_| Error::Config {
            line,
            msg: format!("{key}: `{v}` is not a nonnegative integer"),
        })
    }

    fn bool(&mut self, key: &str, default: &str) -> Result<bool> {
        let (v, line) = self.take(key, default);
        match v.as_str() {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(Error::Config {
                line,
                msg: format!("{key}: `{v}` is not `true`/`false`"),
            }),
        }
    }
}

/// Parses a config file; missing keys take the baseline defaults.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_config_str(&text)
}

/// Parses config text (the file-free entry point used by tests and the CLI).
pub fn load_config_str(text: &str) -> Result<ExperimentConfig> {
    let raw = parse_raw(text)?;
    let all_default = raw.entries.is_empty();
    let mut r = Resolver { raw, defaults_used: Vec::new() };

    let (family_s, family_line) = r.take("kernel.family", "fractional");
    let c = r.f64("kernel.c", "1.0")?;
    let alpha = r.f64("kernel.alpha", "1.33")?;
    let decay = r.f64("kernel.decay", "0.0")?;
    let kernel = match family_s.as_str() {
        "constant" => KernelSpec::constant(c),
        "fractional" => KernelSpec::fractional(c, alpha),
        "exponential" => KernelSpec::exponential(c, decay),
        "gamma" => KernelSpec::gamma_family(c, alpha, decay),
        other => Err(Error::Config {
            line: family_line,
            msg: format!(
                "kernel.family: `{other}` is not one of constant/fractional/exponential/gamma"
            ),
        }),
    }
    .map_err(|e| config_field_err("kernel", family_line, e))?;

    let lambda0 = r.f64("mortality.lambda0", "0.18")?;
    let b1 = r.f64("mortality.b1", "0.15")?;
    let a1 = r.f64("mortality.a1", "0.5")?;
    let sigma_lambda = r.f64("mortality.sigma_lambda", "0.1")?;
    let hist_t0_raw = r.f64("mortality.hist_t0", "-20.0")?;
    if hist_t0_raw > 0.0 {
        return Err(Error::Config {
            line: 0,
            msg: format!(
                "mortality.hist_t0 must be <= 0 (history ends where the control \
                 horizon begins), got {hist_t0_raw}"
            ),
        });
    }
    let mortality =
        MortalityParams::new(lambda0, b1, a1, sigma_lambda, TimeFn::zero(), kernel)
            .map_err(|e| config_field_err("mortality", 0, e))?;

    let market = MarketParams::new(
        TimeFn::constant(r.f64("market.r", "0.05")?),
        TimeFn::constant(r.f64("market.mu", "0.07")?),
        TimeFn::constant(r.f64("market.sigma", "0.2")?),
        r.f64("market.theta", "0.2")?,
        r.f64("market.eta", "0.2")?,
        r.f64("market.k1", "10.0")?,
    )
    .map_err(|e| config_field_err("market", 0, e))?;

    let (claims_family_s, claims_line) = r.take("claims.family", "gamma");
    let claims_family = match claims_family_s.as_str() {
        "exponential" => ClaimFamily::Exponential,
        "gamma" => ClaimFamily::Gamma,
        "lognormal" => ClaimFamily::Lognormal,
        "bounded_uniform" => ClaimFamily::BoundedUniform,
        other => {
            return Err(Error::Config {
                line: claims_line,
                msg: format!(
                    "claims.family: `{other}` is not one of \
                     exponential/gamma/lognormal/bounded_uniform"
                ),
            })
        }
    };
    let mu_z = r.f64("claims.mu_z", "1.0")?;
    let m2 = r.f64("claims.m2", "1.2")?;
    let z_max = match r.optional("claims.z_max") {
        Some((v, line)) => Some(v.parse().map_err(|_| Error::Config {
            line,
            msg: format!("claims.z_max: `{v}` is not a number"),
        })?),
        None => None,
    };
    let claims = moment_fit(claims_family, mu_z, m2, z_max)
        .map_err(|e| config_field_err("claims", claims_line, e))?;

    let phi1 = r.f64("risk.phi1", "1.0")?;
    let phi2 = r.f64("risk.phi2", "0.0")?;
    let risk = RiskAversion::new(phi1, phi2).map_err(|e| config_field_err("risk", 0, e))?;
    let phi1_sweep = match r.optional("risk.phi1_sweep") {
        Some((v, line)) => {
            if phi2 > 0.0 {
                return Err(Error::Config {
                    line,
                    msg: "risk.phi1_sweep conflicts with constant risk aversion (phi2 > 0)"
                        .into(),
                });
            }
            let sweep: Vec<f64> = v
                .split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|_| Error::Config {
                        line,
                        msg: format!("risk.phi1_sweep: `{s}` is not a number"),
                    })
                })
                .collect::<Result<_>>()?;
            if sweep.is_empty() || sweep.iter().any(|p| *p <= 0.0) {
                return Err(Error::Config {
                    line,
                    msg: "risk.phi1_sweep must be a nonempty list of positive weights".into(),
                });
            }
            sweep
        }
        None => vec![phi1],
    };

    let t_end = r.f64("grid.t_end", "3.0")?;
    let ctrl_steps = r.u64("grid.steps", "256")? as usize;
    if t_end <= 0.0 || ctrl_steps == 0 {
        return Err(Error::Config {
            line: 0,
            msg: format!("grid needs t_end > 0 and steps >= 1, got ({t_end}, {ctrl_steps})"),
        });
    }
    let n_paths = r.u64("sim.n_paths", "10000")?;
    if n_paths == 0 {
        return Err(Error::Config { line: 0, msg: "sim.n_paths must be >= 1".into() });
    }
    let seed = r.u64("sim.seed", "42")?;
    let x0 = r.f64("sim.x0", "10.0")?;
    let (out_dir, _) = r.take("outputs.dir", "results");

    let alpha_lrd = r.f64("comparison.alpha_lrd", "1.33")?;
    let alpha_markov = r.f64("comparison.alpha_markov", "1.0")?;
    for (name, a) in [("comparison.alpha_lrd", alpha_lrd), ("comparison.alpha_markov", alpha_markov)] {
        if !(a > 0.5 && a <= 1.5) {
            return Err(Error::Config {
                line: 0,
                msg: format!("{name} must lie in (1/2, 3/2], got {a}"),
            });
        }
    }
    let history_ablation = r.bool("comparison.history_ablation", "false")?;
    let ensemble_paths = r.u64("comparison.ensemble_paths", "0")?;

    // Snap the history window to whole grid steps.
    let dt = t_end / ctrl_steps as f64;
    let n_hist = (-hist_t0_raw / dt).round() as usize;
    let hist_t0 = if history_ablation { 0.0 } else { -(n_hist as f64) * dt };

    Ok(ExperimentConfig {
        mortality,
        hist_t0,
        market,
        claims,
        risk,
        phi1_sweep,
        t_end,
        ctrl_steps,
        n_paths,
        seed,
        x0,
        out_dir: PathBuf::from(out_dir),
        alpha_lrd,
        alpha_markov,
        history_ablation,
        ensemble_paths,
        defaults_used: r.defaults_used,
        content_hash: fnv1a(text),
        all_default,
    })
}

fn config_field_err(section: &str, line: usize, e: Error) -> Error {
    Error::Config { line, msg: format!("{section}: {e}") }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelFamily;
    use crate::strategies::Regime;

    #[test]
    fn empty_file_is_all_defaults() {
        let cfg = load_config_str("").unwrap();
        assert!(cfg.all_default);
        assert_eq!(cfg.mortality.lambda0, 0.18);
        assert_eq!(cfg.mortality.a1, 0.5);
        assert_eq!(cfg.market.k1, 10.0);
        assert_eq!(cfg.claims.mean(), 1.0);
        assert_eq!(cfg.risk.regime(), Regime::StateDependent);
        assert_eq!(cfg.t_end, 3.0);
        assert_eq!(cfg.x0, 10.0);
        // History start snaps to a whole number of grid steps around -20.
        let dt = cfg.t_end / cfg.ctrl_steps as f64;
        assert!((cfg.hist_t0 + 20.0).abs() < dt);
        assert_eq!(cfg.hist_steps(), 1707);
        assert!(!cfg.defaults_used.is_empty());
    }

    #[test]
    fn mixed_regime_is_rejected() {
        let err = load_config_str("risk.phi1 = 1\nrisk.phi2 = 1\n").unwrap_err();
        assert!(err.to_string().contains("mixed"), "{err}");
    }

    #[test]
    fn unknown_key_is_rejected_with_line_number() {
        let err = load_config_str("market.r = 0.05\nrisc.phi1 = 1\n").unwrap_err();
        match err {
            Error::Config { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("risc.phi1"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn comments_and_overrides_parse() {
        let text = "# scenario with a Markov kernel\nkernel.family = constant # inline\n\
                    grid.steps = 64\nrisk.phi1 = 0\nrisk.phi2 = 1.0\n";
        let cfg = load_config_str(text).unwrap();
        assert_eq!(cfg.mortality.kernel.family(), KernelFamily::Constant);
        assert_eq!(cfg.ctrl_steps, 64);
        assert_eq!(cfg.risk.regime(), Regime::Constant);
        assert!(!cfg.all_default);
    }

    #[test]
    fn sweep_parses_and_conflicts_with_phi2() {
        let cfg = load_config_str("risk.phi1_sweep = 0.5, 0.75, 1.0\n").unwrap();
        assert_eq!(cfg.phi1_sweep, vec![0.5, 0.75, 1.0]);
        assert!(load_config_str("risk.phi1 = 0\nrisk.phi2 = 1\nrisk.phi1_sweep = 0.5\n").is_err());
    }

    #[test]
    fn history_ablation_zeroes_the_window() {
        let cfg = load_config_str("comparison.history_ablation = true\n").unwrap();
        assert_eq!(cfg.hist_t0, 0.0);
        assert_eq!(cfg.hist_steps(), 0);
        let grid = cfg.full_grid().unwrap();
        assert_eq!(grid.t0(), 0.0);
    }

    #[test]
    fn content_hash_tracks_bytes() {
        let a = load_config_str("grid.steps = 64\n").unwrap();
        let b = load_config_str("grid.steps = 64\n").unwrap();
        let c = load_config_str("grid.steps = 65\n").unwrap();
        assert_eq!(a.content_hash, b.content_hash);
        assert_ne!(a.content_hash, c.content_hash);
    }

    #[test]
    fn malformed_lines_name_the_line() {
        let err = load_config_str("grid.steps 64\n").unwrap_err();
        match err {
            Error::Config { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected {other}"),
        }
    }
}
