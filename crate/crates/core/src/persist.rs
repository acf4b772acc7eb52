//! Cache file: a versioned JSON bundle of a [`SelectionReport`] so that
//! reselection works across separate invocations.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::select::SelectionReport;

pub const CACHE_FORMAT: &str = "cachesel-selection-cache";
pub const CACHE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CacheFileError {
    #[error("cannot access cache file {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("cache file is not valid: {0}")]
    Format(#[from] serde_json::Error),
    #[error("cache file has format `{format}` version {version}; expected `{CACHE_FORMAT}` version {CACHE_VERSION}")]
    Version { format: String, version: u32 },
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

#[derive(Serialize, Deserialize)]
struct Bundle {
    format: String,
    version: u32,
    trace_hash: String,
    secondary_hashes: Vec<String>,
    report: SelectionReport,
}

pub fn to_json(report: &SelectionReport) -> Result<String, CacheFileError> {
    let bundle = Bundle {
        format: CACHE_FORMAT.to_string(),
        version: CACHE_VERSION,
        trace_hash: report.trace_hash().to_string(),
        secondary_hashes: report
            .shared_results
            .iter()
            .map(|r| r.secondary_hash.clone())
            .collect(),
        report: report.clone(),
    };
    Ok(serde_json::to_string_pretty(&bundle)?)
}

pub fn from_json(text: &str) -> Result<SelectionReport, CacheFileError> {
    let header: Header = serde_json::from_str(text)?;
    if header.format != CACHE_FORMAT || header.version != CACHE_VERSION {
        return Err(CacheFileError::Version {
            format: header.format,
            version: header.version,
        });
    }
    let bundle: Bundle = serde_json::from_str(text)?;
    Ok(bundle.report)
}

pub fn save(report: &SelectionReport, path: &Path) -> Result<(), CacheFileError> {
    fs::write(path, to_json(report)?).map_err(|source| CacheFileError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load(path: &Path) -> Result<SelectionReport, CacheFileError> {
    let text = fs::read_to_string(path).map_err(|source| CacheFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{run_selection, DesignSpace, Deadline, SelectionOptions, TimingParams, Trace};

    #[test]
    fn version_is_checked() {
        let text = r#"{"format":"cachesel-selection-cache","version":99}"#;
        assert!(matches!(from_json(text), Err(CacheFileError::Version { version: 99, .. })));
        assert!(matches!(from_json("{}"), Err(CacheFileError::Format(_))));
    }

    #[test]
    fn report_survives_round_trip() {
        let t = Trace::empty(2).unwrap();
        let space = DesignSpace::new(vec![1, 2], vec![1, 2], 4).unwrap();
        let r = run_selection(&t, &space, &space, TimingParams::default(), Deadline::from_ns(10), SelectionOptions::default()).unwrap();
        let back = from_json(&to_json(&r).unwrap()).unwrap();
        assert_eq!(back.hierarchy, r.hierarchy);
        assert_eq!(back.private_result, r.private_result);
        assert_eq!(back.shared_results, r.shared_results);
        assert_eq!(back.deadline, r.deadline);
    }
}
