//! Settings from flags, an optional TOML file, and built-in defaults, in
//! that order of precedence.
//!
//! ```toml
//! trace = "jpeg.trc"
//! wcdmot = "1.0s"
//! tp = 1
//! ts = 4
//! tm = 15
//! block = 4
//! sets = "1..16384"
//! assocs = "1,2,4,8,16"
//!
//! [private]
//! sets = "1..256"
//!
//! [shared]
//! assocs = "1,2,4"
//! ```

use std::fmt;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use cachesel_core::design::parse_set_sizes;
use cachesel_core::design::parse_list;
use cachesel_core::{
    parse_trace, Deadline, DesignSpace, SelectError, Strategy, TimingParams, Trace,
};
use serde::Deserialize;

use crate::args::{DeadlineArg, Format, SpaceArgs, StrategyArg, TimingArgs, TraceArgs};

pub const CONFIG_ENV: &str = "CACHESEL_CONFIG";

const DEFAULT_SETS: &str = "1..16384";
const DEFAULT_ASSOCS: &str = "1,2,4,8,16";
const DEFAULT_BLOCK: u32 = 4;

/// A failure with a stable reason code and the process exit status.
#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
    pub exit: u8,
}

impl CliError {
    pub fn input(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            exit: 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl From<SelectError> for CliError {
    fn from(e: SelectError) -> Self {
        Self {
            code: e.code(),
            message: format!("{} (stage: {})", e, e.stage()),
            exit: if e.is_infeasible() { 2 } else { 1 },
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LevelFile {
    sets: Option<String>,
    assocs: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    trace: Option<PathBuf>,
    processors: Option<u32>,
    wcdmot: Option<String>,
    tp: Option<u64>,
    ts: Option<u64>,
    tm: Option<u64>,
    block: Option<u32>,
    sets: Option<String>,
    assocs: Option<String>,
    format: Option<Format>,
    cache: Option<PathBuf>,
    strategy: Option<StrategyArg>,
    back_invalidate: Option<bool>,
    seed: Option<u64>,
    #[serde(default)]
    private: LevelFile,
    #[serde(default)]
    shared: LevelFile,
}

pub struct Settings {
    file: FileConfig,
}

impl Settings {
    /// Reads `explicit`, else the file named by [`CONFIG_ENV`], else nothing.
    pub fn load(explicit: Option<&Path>) -> Result<Self, CliError> {
        let from_env = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
        let Some(path) = explicit.map(Path::to_path_buf).or(from_env) else {
            return Ok(Self {
                file: FileConfig::default(),
            });
        };
        let text = fs::read_to_string(&path).map_err(|e| {
            CliError::input("Io", format!("cannot read config file {}: {e}", path.display()))
        })?;
        let file = toml::from_str(&text).map_err(|e| {
            CliError::input(
                "InvalidConfig",
                format!("{}: {}", path.display(), e.message()),
            )
        })?;
        Ok(Self { file })
    }

    pub fn trace(&self, args: &TraceArgs) -> Result<Trace, CliError> {
        let path = args
            .trace
            .as_ref()
            .or(self.file.trace.as_ref())
            .ok_or_else(|| CliError::input("InvalidInput", "no trace given: pass --trace"))?;
        let file = File::open(path).map_err(|e| {
            CliError::input("Io", format!("cannot open trace {}: {e}", path.display()))
        })?;
        let trace = parse_trace(BufReader::new(file)).map_err(|e| {
            CliError::input("InvalidTrace", format!("{}: {e}", path.display()))
        })?;
        match args.processors.or(self.file.processors) {
            Some(p) if p != trace.processor_count() => trace
                .with_processor_count(p)
                .map_err(|e| CliError::input("InvalidTrace", format!("{}: {e}", path.display()))),
            _ => Ok(trace),
        }
    }

    pub fn spaces(&self, args: &SpaceArgs) -> Result<(DesignSpace, DesignSpace), CliError> {
        let block = args.block.or(self.file.block).unwrap_or(DEFAULT_BLOCK);
        let level = |sets_flag: &Option<String>, assocs_flag: &Option<String>, file: &LevelFile| {
            let sets = sets_flag
                .as_deref()
                .or(args.sets.as_deref())
                .or(file.sets.as_deref())
                .or(self.file.sets.as_deref())
                .unwrap_or(DEFAULT_SETS);
            let assocs = assocs_flag
                .as_deref()
                .or(args.assocs.as_deref())
                .or(file.assocs.as_deref())
                .or(self.file.assocs.as_deref())
                .unwrap_or(DEFAULT_ASSOCS);
            let space_err = |e| CliError::input("InvalidSpace", format!("{e}"));
            DesignSpace::new(
                parse_set_sizes(sets).map_err(space_err)?,
                parse_list(assocs).map_err(space_err)?,
                block,
            )
            .map_err(space_err)
        };
        Ok((
            level(&args.private_sets, &args.private_assocs, &self.file.private)?,
            level(&args.shared_sets, &args.shared_assocs, &self.file.shared)?,
        ))
    }

    pub fn params(&self, args: &TimingArgs) -> Result<TimingParams, CliError> {
        let d = TimingParams::default();
        TimingParams::new(
            args.tp.or(self.file.tp).unwrap_or(d.tp()),
            args.ts.or(self.file.ts).unwrap_or(d.ts()),
            args.tm.or(self.file.tm).unwrap_or(d.tm()),
        )
        .map_err(|e| CliError::input("InvalidTiming", e.to_string()))
    }

    pub fn deadline(&self, args: &DeadlineArg) -> Result<Deadline, CliError> {
        let text = args
            .wcdmot
            .as_deref()
            .or(self.file.wcdmot.as_deref())
            .ok_or_else(|| CliError::input("InvalidInput", "no deadline given: pass --wcdmot"))?;
        text.parse()
            .map_err(|e| CliError::input("InvalidTiming", format!("{e}")))
    }

    pub fn format(&self, flag: Option<Format>, default: Format) -> Format {
        flag.or(self.file.format).unwrap_or(default)
    }

    pub fn cache(&self, flag: Option<&PathBuf>) -> Option<PathBuf> {
        flag.cloned().or_else(|| self.file.cache.clone())
    }

    pub fn strategy(&self, flag: Option<StrategyArg>) -> Strategy {
        match flag.or(self.file.strategy) {
            Some(StrategyArg::LargestTamPrime) => Strategy::LargestTamPrime,
            Some(StrategyArg::CapacitySearch) | None => Strategy::CapacitySearch,
        }
    }

    pub fn back_invalidate(&self, flag: bool) -> bool {
        flag || self.file.back_invalidate.unwrap_or(false)
    }

    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.file.seed).unwrap_or(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(toml_text: &str) -> Settings {
        Settings {
            file: toml::from_str(toml_text).unwrap(),
        }
    }

    #[test]
    fn flags_beat_sections_beat_top_level() {
        let s = settings("sets = \"1..8\"\nassocs = \"1,2\"\n[shared]\nsets = \"4,16\"\n");
        let (p, sh) = s.spaces(&SpaceArgs::default()).unwrap();
        assert_eq!(p.set_sizes(), &[1, 2, 4, 8]);
        assert_eq!(sh.set_sizes(), &[4, 16]);
        assert_eq!(sh.assocs(), &[1, 2]);

        let args = SpaceArgs {
            sets: Some("2".into()),
            shared_assocs: Some("8".into()),
            ..Default::default()
        };
        let (p, sh) = s.spaces(&args).unwrap();
        assert_eq!(p.set_sizes(), &[2]);
        assert_eq!(sh.set_sizes(), &[2]);
        assert_eq!(sh.assocs(), &[8]);
    }

    #[test]
    fn defaults_are_the_full_space() {
        let (p, sh) = settings("").spaces(&SpaceArgs::default()).unwrap();
        assert_eq!(p, DesignSpace::full());
        assert_eq!(sh, DesignSpace::full());
        assert_eq!(settings("").params(&TimingArgs::default()).unwrap(), TimingParams::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("colour = 3").is_err());
    }

    #[test]
    fn deadline_from_file() {
        let s = settings("wcdmot = \"2us\"");
        let d = s.deadline(&DeadlineArg { wcdmot: None }).unwrap();
        assert_eq!(d.ns(), 2000);
        let d = s.deadline(&DeadlineArg { wcdmot: Some("7".into()) }).unwrap();
        assert_eq!(d.ns(), 7);
    }
}
