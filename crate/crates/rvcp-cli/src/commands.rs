//! One function per subcommand. Every numeric path is a library call; the
//! CLI only loads, saves, resolves configuration, and prints.

use std::collections::HashMap;

use serde::Serialize;

use rvcp_core::conformal::{calibrate, evaluate, predict};
use rvcp_core::io::{
    load_predictor, load_sets, load_tensor, save_json, save_predictor, save_sets, save_tensor,
    PredictorFile, SetsHeader, SIZE_WARN_CELLS,
};
use rvcp_core::simulator::{compare_resplits, concat_tensors, generate, CompareResult};
use rvcp_core::types::{RngSpec, ScoreTensor};
use rvcp_core::{Error, Result};

use crate::cli::{CalibrateArgs, CompareArgs, EvaluateArgs, PredictArgs, SimulateArgs};
use crate::config::{load_file_config, load_sim_spec, resolve_calibration, DEFAULT_ALPHA};
use crate::render;

/// Advisory size guard for the line-delimited tensor format.
fn warn_size(t: &ScoreTensor, what: &str) {
    let cells = t.n_items() * t.n_candidates * t.n_samples;
    if cells > SIZE_WARN_CELLS {
        eprintln!(
            "warning: {what} tensor holds {cells} cells (> {SIZE_WARN_CELLS}); \
             the line-delimited format gets slow at this size"
        );
    }
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let spec = load_sim_spec(&a.spec, a.seed)?;
    println!("effective spec: {}", serde_json::to_string(&spec)?);
    let (cal, test, _) = generate(&spec)?;
    warn_size(&cal, "calibration");
    warn_size(&test, "test");
    save_tensor(&cal, &a.out_cal)?;
    save_tensor(&test, &a.out_test)?;
    println!(
        "wrote {} calibration items to {}",
        cal.n_items(),
        a.out_cal.display()
    );
    println!("wrote {} test items to {}", test.n_items(), a.out_test.display());
    Ok(())
}

pub fn calibrate_cmd(a: &CalibrateArgs) -> Result<()> {
    let file_cfg = load_file_config(a.config.as_deref())?;
    let cfg = resolve_calibration(a, &file_cfg)?;
    println!(
        "effective config: method={} alpha={} estimator={} variance_mode={} grid_size={}",
        cfg.method,
        cfg.alpha,
        cfg.estimator,
        cfg.variance_mode,
        cfg.grid_size
    );
    let cal = load_tensor(&a.cal)?;
    warn_size(&cal, "calibration");
    let pred = calibrate(&cal, &cfg)?;
    println!(
        "calibrated on {} items; threshold {} at rank ceil((n+1)(1-alpha))",
        pred.n_cal, pred.threshold
    );
    save_predictor(&PredictorFile::new(cfg, pred), &a.out)?;
    println!("wrote predictor to {}", a.out.display());
    Ok(())
}

pub fn predict_cmd(a: &PredictArgs) -> Result<()> {
    let pf = load_predictor(&a.predictor)?;
    let test = load_tensor(&a.test)?;
    warn_size(&test, "test");
    let sets = predict(&pf.predictor, &test)?;
    let mean_size = sets.iter().map(|s| s.len() as f64).sum::<f64>() / sets.len().max(1) as f64;
    save_sets(&pf.predictor, &sets, &a.out)?;
    println!(
        "wrote {} prediction sets to {} (mean size {:.3})",
        sets.len(),
        a.out.display(),
        mean_size
    );
    Ok(())
}

/// JSON document written by `evaluate`: the set-file header is echoed so the
/// report is self-describing.
#[derive(Debug, Serialize)]
struct EvaluationDocument {
    format_version: u32,
    sets_echo: SetsHeader,
    report: rvcp_core::conformal::EvalReport,
}

pub fn evaluate_cmd(a: &EvaluateArgs) -> Result<()> {
    let (header, sets) = load_sets(&a.sets)?;
    let truth = load_tensor(&a.truth)?;
    if truth.n_candidates != header.n_candidates {
        return Err(Error::ShapeMismatch(format!(
            "sets were made for {} candidates, truth tensor has {}",
            header.n_candidates, truth.n_candidates
        )));
    }
    let labels_all = truth
        .true_label
        .as_ref()
        .ok_or_else(|| Error::MissingLabels("truth tensor has no true labels".into()))?;
    let by_id: HashMap<&str, usize> = truth
        .item_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), labels_all[i]))
        .collect();
    let labels: Vec<usize> = sets
        .iter()
        .map(|s| {
            by_id.get(s.item_id.as_str()).copied().ok_or_else(|| {
                Error::ShapeMismatch(format!(
                    "item '{}' from the sets file is not in the truth tensor",
                    s.item_id
                ))
            })
        })
        .collect::<Result<_>>()?;
    let report = evaluate(&sets, &labels)?;
    println!("{}", render::eval_summary(&report));
    save_json(
        &EvaluationDocument {
            format_version: 1,
            sets_echo: header,
            report,
        },
        &a.out,
    )?;
    println!("wrote report to {}", a.out.display());
    Ok(())
}

/// JSON document written by `compare`.
#[derive(Debug, Serialize)]
struct CompareDocument {
    format_version: u32,
    result: CompareResult,
}

pub fn compare_cmd(a: &CompareArgs) -> Result<()> {
    let file_cfg = load_file_config(a.config.as_deref())?;
    let alpha = a.alpha.or(file_cfg.alpha).unwrap_or(DEFAULT_ALPHA);
    let cal = load_tensor(&a.cal)?;
    let test = load_tensor(&a.test)?;
    warn_size(&cal, "calibration");
    warn_size(&test, "test");
    let pool = concat_tensors(&cal, &test)?;
    let result = compare_resplits(
        &pool,
        cal.n_items(),
        alpha,
        a.trials,
        &RngSpec::new(a.seed),
    )?;
    print!("{}", render::compare_table(&result));
    if let Some(out) = &a.out {
        save_json(
            &CompareDocument {
                format_version: 1,
                result,
            },
            out,
        )?;
        println!("\nwrote report to {}", out.display());
    }
    Ok(())
}
