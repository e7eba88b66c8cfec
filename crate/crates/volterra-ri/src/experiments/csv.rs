//! Figure-data CSV export.
//!
//! One CSV per figure analogue, header row first, fixed column order, 12
//! significant digits, LF line endings, `nan` for null cells. A
//! `manifest.txt` records the config hash, seeds, shared-shock checksums and
//! per-risk-level summary rows, so a run is auditable and byte-reproducible.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::config::ExperimentConfig;
use super::section5::ComparisonResult;

/// 12 significant digits; `nan` sentinel for missing cells.
pub fn fmt_sig12(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.11e}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => fmt_sig12(x),
        None => "nan".to_string(),
    }
}

pub(crate) fn write_file(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path)
}

/// Emits the five figure CSVs plus the manifest; returns the written paths.
pub fn export_csv(
    result: &ComparisonResult,
    config: &ExperimentConfig,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut written = Vec::new();

    let mort_grid = result.mortality.grid();
    let ctrl_grid = result.scenario.grid();
    let offset = result.scenario.mort_offset();

    // Figure 1: realized mortality over the full window and the risky asset
    // over the control window (nan before the control origin).
    let mut s = String::from("t,lambda_hat,asset\n");
    for i in 0..mort_grid.n_nodes() {
        let asset = if i >= offset {
            Some(result.scenario.asset()[i - offset])
        } else {
            None
        };
        let _ = writeln!(
            s,
            "{},{},{}",
            fmt_sig12(mort_grid.node(i)),
            fmt_sig12(result.mortality.lambda_hat_at(i)),
            fmt_opt(asset)
        );
    }
    written.push(write_file(dir, "fig1_paths.csv", &s)?);

    // Figures 2 and 3 show the highest risk-aversion level of the sweep.
    let lead = result
        .per_phi
        .last()
        .ok_or_else(|| Error::Consistency("comparison produced no risk levels".into()))?;

    let mut s = String::from("t,pi_lrd,pi_markov,a_lrd,a_markov\n");
    for i in 0..ctrl_grid.n_nodes() {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt_sig12(ctrl_grid.node(i)),
            fmt_sig12(lead.wealth_lrd.pi()[i]),
            fmt_sig12(lead.wealth_markov.pi()[i]),
            fmt_sig12(lead.wealth_lrd.a()[i]),
            fmt_sig12(lead.wealth_markov.a()[i]),
        );
    }
    written.push(write_file(dir, "fig2_strategies.csv", &s)?);

    let mut s = String::from("t,x_lrd,x_markov\n");
    for i in 0..ctrl_grid.n_nodes() {
        let _ = writeln!(
            s,
            "{},{},{}",
            fmt_sig12(ctrl_grid.node(i)),
            fmt_sig12(lead.wealth_lrd.x_at(i)),
            fmt_sig12(lead.wealth_markov.x_at(i)),
        );
    }
    written.push(write_file(dir, "fig3_wealth.csv", &s)?);

    // Figures 4 and 5: percentage differences per risk level.
    let phi_header: String = result
        .per_phi
        .iter()
        .map(|c| format!(",pct_phi_{}", c.phi1))
        .collect();
    let mut s4 = format!("t{phi_header}\n");
    let mut s5 = format!("t{phi_header}\n");
    for i in 0..ctrl_grid.n_nodes() {
        let t = fmt_sig12(ctrl_grid.node(i));
        let row4: String = result
            .per_phi
            .iter()
            .map(|c| format!(",{}", fmt_opt(c.pct_a[i])))
            .collect();
        let row5: String = result
            .per_phi
            .iter()
            .map(|c| format!(",{}", fmt_opt(c.pct_x[i])))
            .collect();
        let _ = writeln!(s4, "{t}{row4}");
        let _ = writeln!(s5, "{t}{row5}");
    }
    written.push(write_file(dir, "fig4_reinsurance_pctdiff.csv", &s4)?);
    written.push(write_file(dir, "fig5_wealth_pctdiff.csv", &s5)?);

    if !result.ensemble.is_empty() {
        // Extension beyond the single-trajectory figures: distribution of the
        // per-path maxima over independent shock sets.
        let mut s = String::from(
            "phi1,mean_max_pct_a,se_max_pct_a,mean_max_pct_x,se_max_pct_x,n_paths\n",
        );
        for row in &result.ensemble {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                row.phi1,
                fmt_sig12(row.mean_max_pct_a),
                fmt_sig12(row.se_max_pct_a),
                fmt_sig12(row.mean_max_pct_x),
                fmt_sig12(row.se_max_pct_x),
                row.n_paths
            );
        }
        written.push(write_file(dir, "ensemble_summary.csv", &s)?);
    }

    written.push(write_file(dir, "manifest.txt", &manifest_text(result, config))?);
    Ok(written)
}

fn manifest_text(result: &ComparisonResult, config: &ExperimentConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "config_hash = {:016x}", config.content_hash);
    let _ = writeln!(s, "root_seed = {}", result.seed);
    let _ = writeln!(s, "regime = {:?}", result.regime);
    let _ = writeln!(s, "dw0_checksum = {:016x}", result.dw0_checksum);
    let _ = writeln!(s, "dw1_checksum = {:016x}", result.dw1_checksum);
    let _ = writeln!(s, "claims_checksum = {:016x}", result.claims_checksum);
    let _ = writeln!(s, "all_default_config = {}", config.all_default);
    for c in &result.per_phi {
        let _ = writeln!(
            s,
            "summary phi1={} max_pct_a={} max_pct_x={}",
            c.phi1,
            fmt_sig12(c.max_pct_a),
            fmt_sig12(c.max_pct_x)
        );
    }
    for line in &config.defaults_used {
        let _ = writeln!(s, "default: {line}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::load_config_str;
    use crate::experiments::section5::run_section5;

    #[test]
    fn format_helper_pins_digits_and_nan() {
        assert_eq!(fmt_sig12(f64::NAN), "nan");
        assert_eq!(fmt_sig12(1.0), "1.00000000000e0");
        assert_eq!(fmt_opt(None), "nan");
    }

    #[test]
    fn export_writes_expected_files_byte_identically() {
        let cfg = load_config_str(
            "grid.steps = 32\nmortality.hist_t0 = -1.0\nrisk.phi1_sweep = 0.5, 1.0\n",
        )
        .unwrap();
        let res = run_section5(&cfg).unwrap();
        let dir_a = std::env::temp_dir().join("vri_csv_test_a");
        let dir_b = std::env::temp_dir().join("vri_csv_test_b");
        let files_a = export_csv(&res, &cfg, &dir_a).unwrap();
        let res2 = run_section5(&cfg).unwrap();
        let files_b = export_csv(&res2, &cfg, &dir_b).unwrap();
        assert_eq!(files_a.len(), 6); // five figures + manifest
        for (a, b) in files_a.iter().zip(&files_b) {
            let ca = std::fs::read(a).unwrap();
            let cb = std::fs::read(b).unwrap();
            assert_eq!(ca, cb, "{}", a.display());
            assert!(!ca.contains(&b'\r'));
        }
        let header = std::fs::read_to_string(&files_a[1]).unwrap();
        assert!(header.starts_with("t,pi_lrd,pi_markov,a_lrd,a_markov\n"));
    }
}
