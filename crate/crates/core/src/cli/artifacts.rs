//! Run artifacts on disk: file naming, JSON records and CSV time series.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::{Mode, RunRecord};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::landscape::{LandscapeSnapshot, METRIC_COLUMNS};

/// A run record tagged with where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifact {
    pub model_id: String,
    pub rep: u32,
    pub record: RunRecord,
}

pub fn run_file_name(model_id: &str, mode: Mode, rep: u32) -> String {
    format!("run_{model_id}_{mode}_{rep}.json")
}

pub fn snapshot_file_name(model_id: &str, mode: Mode, rep: u32) -> String {
    format!("snapshots_{model_id}_{mode}_{rep}.csv")
}

pub(crate) fn csv_writer() -> csv::WriterBuilder {
    let mut b = csv::WriterBuilder::new();
    b.terminator(csv::Terminator::Any(b'\n'));
    b
}

pub fn snapshots_to_csv(snapshots: &[LandscapeSnapshot]) -> Result<Vec<u8>> {
    let mut w = csv_writer().from_writer(Vec::new());
    for s in snapshots {
        w.serialize(s)?;
    }
    w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))
}

pub fn snapshots_from_csv(bytes: &[u8]) -> Result<Vec<LandscapeSnapshot>> {
    let mut r = csv::Reader::from_reader(bytes);
    Ok(r.deserialize().collect::<std::result::Result<Vec<LandscapeSnapshot>, _>>()?)
}

/// CSV of the eleven landscape metrics, one row per generation.
pub fn metrics_csv(rows: &[(u32, [f64; 11])]) -> Result<Vec<u8>> {
    let mut w = csv_writer().from_writer(Vec::new());
    let mut header = vec!["generation"];
    header.extend(METRIC_COLUMNS);
    w.write_record(&header)?;
    for (generation, values) in rows {
        let mut rec = vec![generation.to_string()];
        rec.extend(values.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))
}

pub fn write_run(dir: &Path, artifact: &RunArtifact) -> Result<(PathBuf, PathBuf)> {
    let mode = artifact.record.mode;
    let json_path = dir.join(run_file_name(&artifact.model_id, mode, artifact.rep));
    let csv_path = dir.join(snapshot_file_name(&artifact.model_id, mode, artifact.rep));
    let json = serde_json::to_string_pretty(artifact)? + "\n";
    write_atomic(&csv_path, &snapshots_to_csv(&artifact.record.snapshots)?)?;
    write_atomic(&json_path, json.as_bytes())?;
    Ok((json_path, csv_path))
}

pub fn read_run(path: &Path) -> Result<RunArtifact> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))
}

/// Every run artifact in `dir`, grouped by (model id, mode) and sorted by repetition.
pub fn load_runs(dir: &Path) -> Result<BTreeMap<(String, Mode), Vec<RunArtifact>>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("run_") && n.ends_with(".json"))
        })
        .collect();
    paths.sort();
    let mut groups: BTreeMap<(String, Mode), Vec<RunArtifact>> = BTreeMap::new();
    for p in paths {
        let a = read_run(&p)?;
        groups.entry((a.model_id.clone(), a.record.mode)).or_default().push(a);
    }
    for runs in groups.values_mut() {
        runs.sort_by_key(|a| a.rep);
    }
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snap(generation: u32) -> LandscapeSnapshot {
        LandscapeSnapshot {
            generation,
            ppos: 0.1 * f64::from(generation),
            hv: 12.345678901234567,
            maxdiam: 900,
            avgdiam: 612.3333333333334,
            mindiam: 0,
            reldiam: 0.2449333333333333,
            pconnec: 0.5,
            nconnec: 2,
            kconnec: 401,
            lconnec: 3,
            hvconnec: 0.875,
            nconnec_with_singletons: 4,
            front_size: 6,
            div_pop: if generation == 0 { None } else { Some(700.25) },
            adaptive_restart: generation == 2,
            dedup_shortfall: false,
            best_coverage: 0.41,
            unique_crashes: 3,
        }
    }

    #[test]
    fn snapshot_csv_round_trip_is_exact() {
        let snaps: Vec<_> = (0..3).map(snap).collect();
        let bytes = snapshots_to_csv(&snaps).unwrap();
        assert!(!bytes.contains(&b'\r'));
        assert_eq!(snapshots_from_csv(&bytes).unwrap(), snaps);
    }

    #[test]
    fn metrics_csv_header() {
        let bytes = metrics_csv(&[(0, snap(0).metric_values())]).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "generation,ppos,hv,maxdiam,avgdiam,mindiam,reldiam,pconnec,nconnec,kconnec,lconnec,hvconnec"
        );
    }
}
