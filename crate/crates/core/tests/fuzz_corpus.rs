//! Replays the checked-in fuzz seeds through the same checks the fuzz targets make.

use std::fs;
use std::path::{Path, PathBuf};

use lrsim::causality::{readout_signature, CausalScenario};
use lrsim::models::{Copies, ModelKind};
use lrsim::output::{curve_csv, parse_curve_csv};

fn seeds(target: &str) -> Vec<(PathBuf, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            let text = fs::read_to_string(&p).unwrap();
            (p, text)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

#[test]
fn scenario_seeds() {
    for (path, text) in seeds("scenario_parse") {
        let scenario: CausalScenario = text.parse().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let sig = readout_signature(&scenario).unwrap();
        for r in &sig.readouts {
            assert_eq!(r.variables.len(), 1 << r.influencing.len());
        }
    }
}

#[test]
fn curve_csv_seeds() {
    for (path, text) in seeds("curve_csv_parse") {
        let points = parse_curve_csv(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        if points.is_empty() {
            continue;
        }
        let once = curve_csv(&points).unwrap();
        assert_eq!(once, text, "{}", path.display());
        assert_eq!(curve_csv(&parse_curve_csv(&once).unwrap()).unwrap(), once);
    }
}

#[test]
fn copies_seeds() {
    for (_, text) in seeds("copies_parse") {
        if let Ok(copies) = text.parse::<Copies>() {
            assert_eq!(copies.to_string().parse::<Copies>().unwrap(), copies);
        } else {
            assert_eq!(text.parse::<ModelKind>().unwrap().to_string(), text);
        }
    }
}
