//! Human-readable tables for stdout. The machine-readable artifacts are the
//! JSON files; nothing here feeds back into computation.

use rvcp_core::conformal::EvalReport;
use rvcp_core::simulator::CompareResult;

pub fn eval_summary(report: &EvalReport) -> String {
    format!(
        "items {}  coverage {:.4}  mean size {:.3} (sd {:.3})  empty sets {}{}",
        report.n_items,
        report.coverage,
        report.mean_set_size,
        report.sd_set_size,
        report.n_empty_sets,
        match report.mean_true_index {
            Some(i) => format!("  mean true-label position {i:.3}"),
            None => String::new(),
        }
    )
}

pub fn compare_table(result: &CompareResult) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "alpha {}  trials {}  split {}/{} (cal/test)\n\n",
        result.alpha, result.n_trials, result.n_cal, result.n_test
    ));
    out.push_str(&format!(
        "{:<26} {:>18} {:>18} {:>12} {:>8}\n",
        "method", "coverage", "mean size", "true index", "empty"
    ));
    for s in &result.summaries {
        let idx = s
            .mean_true_index
            .map_or_else(|| "-".to_string(), |i| format!("{i:.3}"));
        out.push_str(&format!(
            "{:<26} {:>10.4} ± {:>5.4} {:>10.3} ± {:>5.3} {:>12} {:>8.3}\n",
            s.method,
            s.mean_coverage,
            s.coverage_se,
            s.mean_set_size,
            s.set_size_se,
            idx,
            s.mean_empty_fraction
        ));
    }
    out.push_str("\npaired mean set-size differences\n");
    for p in &result.paired {
        out.push_str(&format!(
            "{} - {}: {:+.4} (se {:.4}, {} trials)\n",
            p.method_a, p.method_b, p.mean_diff, p.se, p.n_trials
        ));
    }
    out
}
