//! File formats: line-delimited score tensors, predictor snapshots,
//! prediction-set files, and generic JSON reports.
//!
//! Every writer goes through one atomic path (temp file in the target
//! directory, then rename), and floats are rendered as the shortest decimal
//! that round-trips the exact 64-bit value, so save -> load -> save is
//! byte-identical on valid inputs.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::conformal::{CalibratedPredictor, CalibrationConfig};
use crate::error::{Error, Result};
use crate::types::{
    validate_tensor, Method, PredictionSet, ScoreKind, ScoreTensor, SetMember,
};

/// Cell count (items x candidates x samples) past which callers should warn
/// that the line-delimited format is getting unwieldy. Advisory only; the
/// library never refuses a large tensor.
pub const SIZE_WARN_CELLS: usize = 1_000_000;

pub const TENSOR_FORMAT_VERSION: u32 = 1;
pub const PREDICTOR_FORMAT_VERSION: u32 = 1;
pub const SETS_FORMAT_VERSION: u32 = 1;

/// First line of a tensor file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TensorHeader {
    version: u32,
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "M")]
    m: usize,
    score_kind: ScoreKind,
}

/// One item per line after the header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TensorRecord {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    true_label: Option<usize>,
    /// K rows of M samples.
    scores: Vec<Vec<f64>>,
}

/// Write `bytes` to a sibling temp file and rename it over `path`, so a
/// crash mid-write never leaves a truncated file at the destination.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Serialize a tensor as one header line plus one record line per item.
///
/// The tensor must pass [`validate_tensor`]; the first violation aborts the
/// save (notably non-finite scores, which JSON cannot represent).
pub fn save_tensor(t: &ScoreTensor, path: impl AsRef<Path>) -> Result<()> {
    let report = validate_tensor(t);
    if let Some(issue) = report.issues.first() {
        return Err(Error::Domain(format!(
            "refusing to save invalid tensor: {} at {}",
            issue.message, issue.location
        )));
    }
    let header = TensorHeader {
        version: TENSOR_FORMAT_VERSION,
        k: t.n_candidates,
        m: t.n_samples,
        score_kind: t.score_kind,
    };
    let mut out = Vec::new();
    serde_json::to_writer(&mut out, &header)?;
    out.push(b'\n');
    for item in 0..t.n_items() {
        let record = TensorRecord {
            id: t.item_ids[item].clone(),
            true_label: t.true_label.as_ref().map(|l| l[item]),
            scores: (0..t.n_candidates)
                .map(|c| t.samples(item, c).to_vec())
                .collect(),
        };
        serde_json::to_writer(&mut out, &record)?;
        out.push(b'\n');
    }
    write_atomic(path.as_ref(), &out)
}

/// Read a tensor file written by [`save_tensor`] (or by hand in the same
/// format). Errors carry 1-based line numbers; shape disagreements with the
/// header name the offending record id.
pub fn load_tensor(path: impl AsRef<Path>) -> Result<ScoreTensor> {
    parse_tensor(&fs::read_to_string(path.as_ref())?)
}

fn parse_tensor(text: &str) -> Result<ScoreTensor> {
    let mut lines = text.lines().enumerate();
    let (_, header_line) = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        msg: "empty file, expected a header line".into(),
    })?;
    let header: TensorHeader = serde_json::from_str(header_line).map_err(|e| Error::Parse {
        line: 1,
        msg: format!("bad header: {e}"),
    })?;
    if header.version != TENSOR_FORMAT_VERSION {
        return Err(Error::Parse {
            line: 1,
            msg: format!(
                "unsupported tensor format version {} (this build reads {TENSOR_FORMAT_VERSION})",
                header.version
            ),
        });
    }
    if header.k < 2 || header.m < 1 {
        return Err(Error::Parse {
            line: 1,
            msg: format!(
                "header needs K >= 2 and M >= 1, got K = {}, M = {}",
                header.k, header.m
            ),
        });
    }
    let (k, m) = (header.k, header.m);

    let mut item_ids: Vec<String> = Vec::new();
    let mut scores: Vec<f64> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut labeled: Option<bool> = None;
    let mut seen = std::collections::HashSet::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            return Err(Error::Parse {
                line: line_no,
                msg: "blank line inside record stream".into(),
            });
        }
        let rec: TensorRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: line_no,
            msg: e.to_string(),
        })?;
        if rec.scores.len() != k {
            return Err(Error::HeaderMismatch {
                id: rec.id,
                msg: format!(
                    "record has {} candidate rows, header says K = {k}",
                    rec.scores.len()
                ),
            });
        }
        if let Some(c) = rec.scores.iter().position(|row| row.len() != m) {
            return Err(Error::HeaderMismatch {
                id: rec.id,
                msg: format!(
                    "candidate {c} has {} samples, header says M = {m}",
                    rec.scores[c].len()
                ),
            });
        }
        let has_label = rec.true_label.is_some();
        match labeled {
            None => labeled = Some(has_label),
            Some(expected) if expected != has_label => {
                return Err(Error::HeaderMismatch {
                    id: rec.id,
                    msg: "true_label must be present on all records or none".into(),
                });
            }
            Some(_) => {}
        }
        if let Some(y) = rec.true_label {
            if y >= k {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("true_label {y} out of range [0, {k})"),
                });
            }
            labels.push(y);
        }
        if let Some((c, s)) = rec.scores.iter().enumerate().find_map(|(c, row)| {
            row.iter().position(|v| !v.is_finite()).map(|s| (c, s))
        }) {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("non-finite score at candidate {c}, sample {s}"),
            });
        }
        if !seen.insert(rec.id.clone()) {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("duplicate item id '{}'", rec.id),
            });
        }
        item_ids.push(rec.id);
        for row in &rec.scores {
            scores.extend_from_slice(row);
        }
    }

    Ok(ScoreTensor {
        item_ids,
        n_candidates: k,
        n_samples: m,
        scores,
        true_label: if labeled == Some(true) { Some(labels) } else { None },
        score_kind: header.score_kind,
    })
}

/// On-disk snapshot of a calibrated predictor plus the effective
/// configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorFile {
    pub format_version: u32,
    /// Effective configuration echo, after flag/file/default resolution.
    pub config: CalibrationConfig,
    pub predictor: CalibratedPredictor,
}

impl PredictorFile {
    #[must_use]
    pub fn new(config: CalibrationConfig, predictor: CalibratedPredictor) -> Self {
        PredictorFile {
            format_version: PREDICTOR_FORMAT_VERSION,
            config,
            predictor,
        }
    }
}

/// Pretty-printed single JSON document.
pub fn save_predictor(pf: &PredictorFile, path: impl AsRef<Path>) -> Result<()> {
    save_json(pf, path)
}

/// Load a predictor snapshot and rebuild the derived evaluation cache, so
/// the loaded predictor's `predict` output is bit-identical to the
/// original's.
pub fn load_predictor(path: impl AsRef<Path>) -> Result<PredictorFile> {
    let mut pf: PredictorFile = load_json(path)?;
    if pf.format_version != PREDICTOR_FORMAT_VERSION {
        return Err(Error::InvalidSpec(format!(
            "unsupported predictor format version {} (this build reads {PREDICTOR_FORMAT_VERSION})",
            pf.format_version
        )));
    }
    if let Some(table) = pf.predictor.table.as_mut() {
        table.g_eval.rebuild_cache();
    }
    Ok(pf)
}

/// First line of a prediction-set file: enough of the predictor to
/// interpret the members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetsHeader {
    pub version: u32,
    pub method: Method,
    pub alpha: f64,
    pub threshold: f64,
    pub n_candidates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SetsRecord {
    id: String,
    members: Vec<SetMember>,
}

/// Line-delimited prediction sets, one record per item in the given order.
pub fn save_sets(
    pred: &CalibratedPredictor,
    sets: &[PredictionSet],
    path: impl AsRef<Path>,
) -> Result<()> {
    for set in sets {
        if let Some(bad) = set.members.iter().find(|mm| !mm.nonconformity.is_finite()) {
            return Err(Error::Domain(format!(
                "refusing to save non-finite nonconformity {} in item '{}'",
                bad.nonconformity, set.item_id
            )));
        }
    }
    let header = SetsHeader {
        version: SETS_FORMAT_VERSION,
        method: pred.method,
        alpha: pred.alpha,
        threshold: pred.threshold,
        n_candidates: pred.n_candidates,
    };
    let mut out = Vec::new();
    serde_json::to_writer(&mut out, &header)?;
    out.push(b'\n');
    for set in sets {
        let rec = SetsRecord {
            id: set.item_id.clone(),
            members: set.members.clone(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.push(b'\n');
    }
    write_atomic(path.as_ref(), &out)
}

/// Read a prediction-set file; the returned sets carry the header's method.
pub fn load_sets(path: impl AsRef<Path>) -> Result<(SetsHeader, Vec<PredictionSet>)> {
    let text = fs::read_to_string(path.as_ref())?;
    let mut lines = text.lines().enumerate();
    let (_, header_line) = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        msg: "empty file, expected a header line".into(),
    })?;
    let header: SetsHeader = serde_json::from_str(header_line).map_err(|e| Error::Parse {
        line: 1,
        msg: format!("bad header: {e}"),
    })?;
    if header.version != SETS_FORMAT_VERSION {
        return Err(Error::Parse {
            line: 1,
            msg: format!(
                "unsupported sets format version {} (this build reads {SETS_FORMAT_VERSION})",
                header.version
            ),
        });
    }
    let mut sets = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            return Err(Error::Parse {
                line: line_no,
                msg: "blank line inside record stream".into(),
            });
        }
        let rec: SetsRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: line_no,
            msg: e.to_string(),
        })?;
        if let Some(bad) = rec
            .members
            .iter()
            .find(|mm| mm.candidate >= header.n_candidates)
        {
            return Err(Error::HeaderMismatch {
                id: rec.id,
                msg: format!(
                    "member candidate {} out of range [0, {})",
                    bad.candidate, header.n_candidates
                ),
            });
        }
        sets.push(PredictionSet {
            item_id: rec.id,
            members: rec.members,
            method: header.method,
        });
    }
    Ok((header, sets))
}

/// Pretty-printed JSON document with a trailing newline, written atomically.
pub fn save_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path.as_ref(), &bytes)
}

pub fn load_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path.as_ref())?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::{calibrate, predict};
    use crate::rvalue::Estimator;
    use crate::simulator::{generate, GSpec, GenerativeSpec, TrueLabelRule};
    use crate::types::{RngSpec, ScoreKind};

    fn demo_tensor() -> ScoreTensor {
        ScoreTensor {
            item_ids: vec!["alpha".into(), "beta".into(), "gamma".into()],
            n_candidates: 2,
            n_samples: 2,
            scores: vec![
                0.1,
                2.0,
                -3.5e-12,
                1e300,
                7.0,
                -0.25,
                1.0 / 3.0,
                42.0,
                0.30000000000000004,
                -1.0,
                5e-324,
                0.0,
            ],
            true_label: Some(vec![0, 1, 0]),
            score_kind: ScoreKind::Logit,
        }
    }

    fn small_spec(seed: u64) -> GenerativeSpec {
        GenerativeSpec {
            mu: 0.0,
            tau2: 1.0,
            g_spec: GSpec::TwoPoint {
                s1: 0.1,
                s2: 4.0,
                w: 0.2,
            },
            k: 6,
            m: 8,
            n_cal: 80,
            n_test: 25,
            true_label_rule: TrueLabelRule::ArgmaxTheta,
            rng: RngSpec::new(seed),
        }
    }

    #[test]
    fn tensor_round_trip_is_byte_identical() {
        let t = demo_tensor();
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.tensor");
        let p2 = dir.path().join("b.tensor");
        save_tensor(&t, &p1).unwrap();
        let loaded = load_tensor(&p1).unwrap();
        assert_eq!(loaded, t);
        save_tensor(&loaded, &p2).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
        // Overwriting in place must also succeed (rename replaces).
        save_tensor(&loaded, &p1).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
    }

    #[test]
    fn unlabeled_tensor_round_trips_without_label_field() {
        let mut t = demo_tensor();
        t.true_label = None;
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.tensor");
        save_tensor(&t, &p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(!text.contains("true_label"));
        assert_eq!(load_tensor(&p).unwrap(), t);
    }

    #[test]
    fn shortest_decimal_reloads_exact_float() {
        let text = concat!(
            "{\"version\":1,\"K\":2,\"M\":1,\"score_kind\":\"logit\"}\n",
            "{\"id\":\"x\",\"scores\":[[0.1],[0.30000000000000004]]}\n",
        );
        let t = parse_tensor(text).unwrap();
        assert_eq!(t.score(0, 0, 0), 0.1f64);
        assert_eq!(t.score(0, 1, 0), 0.1f64 + 0.2f64);
    }

    #[test]
    fn candidate_count_mismatch_names_offending_id() {
        let text = concat!(
            "{\"version\":1,\"K\":3,\"M\":1,\"score_kind\":\"logit\"}\n",
            "{\"id\":\"ok-item\",\"scores\":[[1.0],[2.0],[3.0]]}\n",
            "{\"id\":\"bad-item\",\"scores\":[[1.0],[2.0]]}\n",
        );
        match parse_tensor(text) {
            Err(Error::HeaderMismatch { id, msg }) => {
                assert_eq!(id, "bad-item");
                assert!(msg.contains("2 candidate rows"), "{msg}");
            }
            other => panic!("expected HeaderMismatch, got {other:?}"),
        }
    }

    #[test]
    fn sample_count_mismatch_names_offending_id() {
        let text = concat!(
            "{\"version\":1,\"K\":2,\"M\":2,\"score_kind\":\"logit\"}\n",
            "{\"id\":\"ragged\",\"scores\":[[1.0,2.0],[3.0]]}\n",
        );
        match parse_tensor(text) {
            Err(Error::HeaderMismatch { id, msg }) => {
                assert_eq!(id, "ragged");
                assert!(msg.contains("candidate 1 has 1 samples"), "{msg}");
            }
            other => panic!("expected HeaderMismatch, got {other:?}"),
        }
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = concat!(
            "{\"version\":1,\"K\":2,\"M\":1,\"score_kind\":\"logit\"}\n",
            "{\"id\":\"a\",\"scores\":[[1.0],[2.0]]}\n",
            "{not json\n",
        );
        match parse_tensor(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected Parse at line 3, got {other:?}"),
        }
    }

    #[test]
    fn header_problems_report_line_one() {
        for text in [
            "",
            "{\"version\":2,\"K\":2,\"M\":1,\"score_kind\":\"logit\"}\n",
            "{\"version\":1,\"K\":1,\"M\":1,\"score_kind\":\"logit\"}\n",
            "not a header\n",
        ] {
            match parse_tensor(text) {
                Err(Error::Parse { line: 1, .. }) => {}
                other => panic!("expected Parse at line 1 for {text:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn blank_interior_line_rejected() {
        let text = concat!(
            "{\"version\":1,\"K\":2,\"M\":1,\"score_kind\":\"logit\"}\n",
            "\n",
            "{\"id\":\"a\",\"scores\":[[1.0],[2.0]]}\n",
        );
        match parse_tensor(text) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("blank line"), "{msg}");
            }
            other => panic!("expected Parse, got {other:?}"),
        }
    }

    #[test]
    fn mixed_label_presence_rejected() {
        let text = concat!(
            "{\"version\":1,\"K\":2,\"M\":1,\"score_kind\":\"logit\"}\n",
            "{\"id\":\"a\",\"true_label\":0,\"scores\":[[1.0],[2.0]]}\n",
            "{\"id\":\"b\",\"scores\":[[1.0],[2.0]]}\n",
        );
        match parse_tensor(text) {
            Err(Error::HeaderMismatch { id, msg }) => {
                assert_eq!(id, "b");
                assert!(msg.contains("all records or none"), "{msg}");
            }
            other => panic!("expected HeaderMismatch, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_id_and_bad_label_rejected_with_line() {
        let dup = concat!(
            "{\"version\":1,\"K\":2,\"M\":1,\"score_kind\":\"logit\"}\n",
            "{\"id\":\"a\",\"scores\":[[1.0],[2.0]]}\n",
            "{\"id\":\"a\",\"scores\":[[1.0],[2.0]]}\n",
        );
        match parse_tensor(dup) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("duplicate item id 'a'"), "{msg}");
            }
            other => panic!("expected Parse, got {other:?}"),
        }
        let bad_label = concat!(
            "{\"version\":1,\"K\":2,\"M\":1,\"score_kind\":\"logit\"}\n",
            "{\"id\":\"a\",\"true_label\":2,\"scores\":[[1.0],[2.0]]}\n",
        );
        match parse_tensor(bad_label) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("out of range"), "{msg}");
            }
            other => panic!("expected Parse, got {other:?}"),
        }
    }

    #[test]
    fn save_rejects_non_finite_scores() {
        let mut t = demo_tensor();
        t.scores[5] = f64::NAN;
        let dir = tempfile::tempdir().unwrap();
        match save_tensor(&t, dir.path().join("bad.tensor")) {
            Err(Error::Domain(msg)) => assert!(msg.contains("non-finite"), "{msg}"),
            other => panic!("expected Domain error, got {other:?}"),
        }
    }

    fn assert_predictor_round_trip(cfg: CalibrationConfig, seed: u64) {
        let (cal, test, _) = generate(&small_spec(seed)).unwrap();
        let pred = calibrate(&cal, &cfg).unwrap();
        let sets_before = predict(&pred, &test).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("predictor.json");
        save_predictor(&PredictorFile::new(cfg, pred.clone()), &p).unwrap();
        let loaded = load_predictor(&p).unwrap();
        assert_eq!(loaded.predictor, pred);

        let sets_after = predict(&loaded.predictor, &test).unwrap();
        // Compare through the serialized form: shortest-round-trip decimals
        // make this a bit-level check on every nonconformity value.
        assert_eq!(
            serde_json::to_string(&sets_after).unwrap(),
            serde_json::to_string(&sets_before).unwrap()
        );
    }

    #[test]
    fn predictor_round_trip_parametric() {
        let cfg = CalibrationConfig::new(Method::CpRvalue, 0.2);
        assert_predictor_round_trip(cfg, 11);
    }

    #[test]
    fn predictor_round_trip_nonparametric() {
        let mut cfg = CalibrationConfig::new(Method::CpRvalue, 0.2);
        cfg.estimator = Estimator::Nonparametric;
        assert_predictor_round_trip(cfg, 12);
    }

    #[test]
    fn predictor_round_trip_cp_and_cp_avg() {
        let mut cfg = CalibrationConfig::new(Method::Cp, 0.2);
        cfg.sample_index = 1;
        assert_predictor_round_trip(cfg, 13);
        assert_predictor_round_trip(CalibrationConfig::new(Method::CpAvg, 0.2), 14);
    }

    #[test]
    fn predictor_version_gate() {
        let (cal, _, _) = generate(&small_spec(15)).unwrap();
        let cfg = CalibrationConfig::new(Method::CpAvg, 0.2);
        let pred = calibrate(&cal, &cfg).unwrap();
        let mut pf = PredictorFile::new(cfg, pred);
        pf.format_version = 99;
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("future.json");
        save_predictor(&pf, &p).unwrap();
        match load_predictor(&p) {
            Err(Error::InvalidSpec(msg)) => assert!(msg.contains("99"), "{msg}"),
            other => panic!("expected InvalidSpec, got {other:?}"),
        }
    }

    #[test]
    fn sets_round_trip() {
        let (cal, test, _) = generate(&small_spec(16)).unwrap();
        let cfg = CalibrationConfig::new(Method::CpRvalue, 0.2);
        let pred = calibrate(&cal, &cfg).unwrap();
        let sets = predict(&pred, &test).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sets.jsonl");
        save_sets(&pred, &sets, &p).unwrap();
        let (header, loaded) = load_sets(&p).unwrap();
        assert_eq!(header.method, pred.method);
        assert_eq!(header.alpha, pred.alpha);
        assert_eq!(header.threshold, pred.threshold);
        assert_eq!(header.n_candidates, pred.n_candidates);
        assert_eq!(loaded, sets);
    }

    #[test]
    fn sets_member_out_of_range_names_id() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sets.jsonl");
        let text = concat!(
            "{\"version\":1,\"method\":\"cp\",\"alpha\":0.1,\"threshold\":0.5,\"n_candidates\":2}\n",
            "{\"id\":\"w\",\"members\":[{\"candidate\":2,\"nonconformity\":0.1}]}\n",
        );
        fs::write(&p, text).unwrap();
        match load_sets(&p) {
            Err(Error::HeaderMismatch { id, msg }) => {
                assert_eq!(id, "w");
                assert!(msg.contains("out of range"), "{msg}");
            }
            other => panic!("expected HeaderMismatch, got {other:?}"),
        }
    }

    #[test]
    fn generic_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.json");
        save_json(&vec![1.0f64, 0.1, -2.5e-7], &p).unwrap();
        let v: Vec<f64> = load_json(&p).unwrap();
        assert_eq!(v, vec![1.0, 0.1, -2.5e-7]);
    }
}
