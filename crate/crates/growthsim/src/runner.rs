//! Run configuration, experiment orchestration over seeds, and output files.
//!
//! Configuration files are flat `key = value` lines; `#` starts a comment and
//! unknown keys are rejected. Recognised keys are the fields of [`RunConfig`],
//! with `c_seq` written as a comma-separated list.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamma::{can_of, GVertex, GammaOracle, Mode, Realization};
use crate::growth::{
    bfs_profile, check_e_choice, exit_events, locate_can_chain, oscillation_summary, EChoiceCheck, ExitEvent, ExitScan,
    GrowthProfile, OscillationSummary,
};
use crate::keyed::derive_key;
use crate::lamplighter::{sample_offsets, LampElement};
use crate::percolation::{Percolation, TriPatch, CRITICAL_P};

/// Most resamples attempted when conditioning on a level-1 root can.
pub const MAX_E0_RESAMPLES: u32 = 256;

pub const DEFAULT_CLASS_SIZE_CAP: u64 = 10 * 6 * 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub patch_size: usize,
    pub percolation_p: f64,
    pub c_seq: Vec<u64>,
    pub max_level: usize,
    pub mode: Mode,
    pub bfs_radius: u32,
    pub master_seed: u64,
    pub num_runs: usize,
    pub class_size_cap: u64,
    /// Resample each run until the root lies in a level-1 can.
    pub condition_e0: bool,
    pub out_csv: PathBuf,
    pub out_json: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            patch_size: 31,
            percolation_p: CRITICAL_P,
            c_seq: vec![1, 2, 3],
            max_level: 3,
            mode: Mode::FullInterior,
            bfs_radius: 10_000_000,
            master_seed: 0,
            num_runs: 1,
            class_size_cap: DEFAULT_CLASS_SIZE_CAP,
            condition_e0: false,
            out_csv: PathBuf::from("growth.csv"),
            out_json: PathBuf::from("report.json"),
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::ConfigInvalid(msg.into())
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| invalid(format!("cannot parse `{value}` for `{key}`")))
}

impl RunConfig {
    /// Parses and validates a configuration. `max_level` defaults to the
    /// length of `c_seq` when absent.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut max_level = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| invalid(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "patch_size" => cfg.patch_size = parse_value(key, value)?,
                "percolation_p" => cfg.percolation_p = parse_value(key, value)?,
                "c_seq" => {
                    cfg.c_seq = value
                        .split(',')
                        .map(|c| parse_value(key, c.trim()))
                        .collect::<Result<Vec<u64>>>()?;
                }
                "max_level" => max_level = Some(parse_value(key, value)?),
                "mode" => cfg.mode = value.parse()?,
                "bfs_radius" => cfg.bfs_radius = parse_value(key, value)?,
                "master_seed" => cfg.master_seed = parse_value(key, value)?,
                "num_runs" => cfg.num_runs = parse_value(key, value)?,
                "class_size_cap" => cfg.class_size_cap = parse_value(key, value)?,
                "condition_e0" => cfg.condition_e0 = parse_value(key, value)?,
                "out_csv" => cfg.out_csv = PathBuf::from(value),
                "out_json" => cfg.out_json = PathBuf::from(value),
                other => return Err(invalid(format!("line {}: unknown key `{other}`", lineno + 1))),
            }
        }
        cfg.max_level = max_level.unwrap_or(cfg.c_seq.len());
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.patch_size < 3 {
            return Err(invalid("patch_size must be at least 3"));
        }
        if !(0.0..=1.0).contains(&self.percolation_p) {
            return Err(invalid("percolation_p must lie in [0, 1]"));
        }
        if self.c_seq.contains(&0) {
            return Err(invalid("every c_i must be positive"));
        }
        if self.max_level == 0 {
            return Err(invalid("max_level must be at least 1"));
        }
        if self.c_seq.len() < self.max_level {
            return Err(invalid(format!(
                "c_seq has {} entries but max_level is {}",
                self.c_seq.len(),
                self.max_level
            )));
        }
        if self.bfs_radius == 0 {
            return Err(invalid("bfs_radius must be at least 1"));
        }
        let mut block = 1u64;
        for (i, &c) in self.c_seq[..self.max_level].iter().enumerate() {
            block = block.checked_mul(c).ok_or_else(|| invalid("block length overflows"))?;
            let size = if block >= 64 { None } else { block.checked_mul(1 << block) };
            match size {
                Some(s) if s <= self.class_size_cap => {}
                _ => {
                    return Err(invalid(format!(
                        "level-{} class size {block}·2^{block} exceeds class_size_cap {}",
                        i + 1,
                        self.class_size_cap
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn patch(&self) -> TriPatch {
        TriPatch::new(self.patch_size)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootInfo {
    pub vertex: GVertex,
    /// The patch centre lay in the outer region and the root moved to the
    /// nearest site that carries cans.
    pub recentered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffsetsReport {
    pub x: Vec<u64>,
    pub alpha: Vec<i64>,
    pub block_len: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainEntry {
    pub index: usize,
    pub can_id: String,
    pub level: usize,
    pub height: usize,
    pub capped: bool,
    pub can_type: u8,
    pub cluster_size: usize,
    pub interior_size: usize,
    pub class_size: usize,
    pub size: usize,
    /// Tree diameter of a type-1 can in spanning-tree mode.
    pub tree_diameter: Option<u32>,
    /// `tree_diameter / ln(size)`.
    pub diameter_log_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityChecks {
    /// Every chain can has size `|δ| · b · 2^b · 10`.
    pub can_size: bool,
    /// Every exit event has `finite_side_volume = interior · |σ| · 10`.
    pub finite_side_volume: bool,
    /// Every exit edge has its parent end one step further than its child end.
    pub cut_edge: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub run_id: usize,
    pub run_seed: u64,
    pub config: RunConfig,
    pub resamples: u32,
    pub e0: bool,
    pub root: Option<RootInfo>,
    pub offsets: OffsetsReport,
    pub chain: Vec<ChainEntry>,
    pub exit_events: Vec<ExitEvent>,
    pub discarded_events: usize,
    pub e_choice: Vec<EChoiceCheck>,
    pub profile: GrowthProfile,
    pub checks: IdentityChecks,
    pub summary: Option<OscillationSummary>,
}

/// Root for a realization: the patch centre at the identity lamp element on
/// fibre 1, or the nearest site outside the outer region (ties broken
/// row-major).
pub fn choose_root(real: &Realization) -> Option<RootInfo> {
    let patch = real.patch();
    let center = patch.center();
    let site = if !real.is_frontier_site(center) {
        center
    } else {
        patch
            .sites()
            .filter(|&s| !real.is_frontier_site(s))
            .min_by_key(|&s| (s.distance(center), s))?
    };
    Some(RootInfo { vertex: GVertex::new(site, LampElement::identity(), 1), recentered: site != center })
}

/// Percolation and partitions sampled from one run key.
pub fn sample_realization(config: &RunConfig, key: u64) -> Result<Realization> {
    let percolation = Percolation::sample(config.patch(), config.percolation_p, key)?;
    let partitions = sample_offsets(&config.c_seq[..config.max_level], key);
    Ok(Realization::new(percolation, partitions))
}

pub fn run_seed(master_seed: u64, run: usize) -> u64 {
    derive_key(master_seed, &format!("run:{run}"))
}

/// Builds the report of run `run_id`.
pub fn run_single(config: &RunConfig, run_id: usize) -> Result<RunReport> {
    let seed = run_seed(config.master_seed, run_id);
    let mut attempt = 0;
    let (key, real, root) = loop {
        let key = if attempt == 0 { seed } else { derive_key(seed, &format!("resample:{attempt}")) };
        let real = sample_realization(config, key)?;
        let root = choose_root(&real);
        let level_one = root
            .as_ref()
            .map(|r| can_of(&r.vertex, &real).map(|c| c.level == 1))
            .transpose()?
            .unwrap_or(false);
        if !config.condition_e0 || level_one || attempt == MAX_E0_RESAMPLES {
            break (key, real, root);
        }
        attempt += 1;
    };

    let ps = &real.partitions;
    let offsets = OffsetsReport { x: ps.x_seq.clone(), alpha: ps.alpha.clone(), block_len: ps.block_len.clone() };
    let mut report = RunReport {
        run_id,
        run_seed: key,
        config: config.clone(),
        resamples: attempt,
        e0: false,
        root: root.clone(),
        offsets,
        chain: Vec::new(),
        exit_events: Vec::new(),
        discarded_events: 0,
        e_choice: Vec::new(),
        profile: GrowthProfile::from_volumes(vec![1], None),
        checks: IdentityChecks { can_size: true, finite_side_volume: true, cut_edge: true },
        summary: None,
    };
    let Some(root) = root else {
        report.profile = GrowthProfile::from_volumes(Vec::new(), None);
        return Ok(report);
    };

    let mut oracle = GammaOracle::new(real, config.mode, key);
    let chain = locate_can_chain(&mut oracle, &root.vertex)?;
    let search = bfs_profile(&mut oracle, &root.vertex, config.bfs_radius)?;

    // Keep the chain prefix whose exit edges fit inside the searched ball.
    let mut usable = chain.links.len();
    if search.profile.truncated_at.is_none() {
        usable = chain
            .links
            .iter()
            .position(|l| l.up_ids().is_some_and(|(_, v)| search.distance(v).is_none()))
            .unwrap_or(chain.links.len());
    }
    let (scan, cut_edge) = match exit_events(&mut oracle, &chain.prefix(usable), &search) {
        Ok(scan) => (scan, true),
        Err(Error::CutEdgeViolated { .. }) => (ExitScan { events: Vec::new(), discarded: usable }, false),
        Err(e) => return Err(e),
    };
    let beyond_radius = chain.links[usable..].iter().filter(|l| l.up_ids().is_some()).count();

    let real = oracle.realization().clone();
    let mut entries = Vec::new();
    for (i, link) in chain.links.iter().enumerate() {
        let can = &link.can;
        let capped = real.is_capped_cluster(can.cluster);
        let tree_diameter =
            if can.can_type == 1 && !capped { oracle.tree_diameter(link.slot)? } else { None };
        entries.push(ChainEntry {
            index: i + 1,
            can_id: can.id(),
            level: can.level,
            height: can.height,
            capped,
            can_type: can.can_type,
            cluster_size: can.cluster_size,
            interior_size: real.percolation.tree.interior_size[can.cluster],
            class_size: can.class_size,
            size: can.size,
            tree_diameter,
            diameter_log_ratio: tree_diameter.map(|d| d as f64 / (can.size as f64).ln()),
        });
    }

    report.e0 = chain.e0;
    report.checks = IdentityChecks {
        can_size: chain.links.iter().all(|l| {
            let c = &l.can;
            let b = real.partitions.block_len(c.level) as usize;
            c.size == c.cluster_size * (b << b) * 10
        }),
        finite_side_volume: scan.events.iter().all(|e| e.finite_side_volume == e.identity_volume),
        cut_edge,
    };
    report.summary = oscillation_summary(&scan.events, &search.profile).ok();
    report.chain = entries;
    report.e_choice = check_e_choice(&chain, &real);
    report.exit_events = scan.events;
    report.discarded_events = scan.discarded + beyond_radius;
    report.profile = search.profile;
    Ok(report)
}

/// Runs every configured run, in parallel, returning reports in run order.
pub fn run_experiment(config: &RunConfig) -> Result<Vec<RunReport>> {
    config.validate()?;
    (0..config.num_runs).into_par_iter().map(|r| run_single(config, r)).collect()
}

/// Decimal rendering with 12 significant digits.
pub fn format_significant(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{:.11}", x);
    }
    let magnitude = x.abs().log10().floor() as i32 + 1;
    let decimals = (12 - magnitude).max(0) as usize;
    format!("{:.*}", decimals, x)
}

/// CSV with header `run_id,n,volume,rate`; the rate column is blank at `n = 0`.
pub fn render_csv(reports: &[RunReport]) -> String {
    let mut out = String::from("run_id,n,volume,rate\n");
    for r in reports {
        for (n, &v) in r.profile.volumes.iter().enumerate() {
            let rate = if n == 0 { String::new() } else { format_significant(r.profile.rates[n - 1]) };
            let _ = writeln!(out, "{},{},{},{}", r.run_id, n, v, rate);
        }
    }
    out
}

pub fn render_json(reports: &[RunReport]) -> Result<String> {
    let mut s = serde_json::to_string_pretty(reports)?;
    s.push('\n');
    Ok(s)
}

pub fn parse_json(text: &str) -> Result<Vec<RunReport>> {
    Ok(serde_json::from_str(text)?)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Writes the CSV profile and the JSON reports. An empty report list is an
/// error unless `allow_empty` is set.
pub fn emit_outputs(reports: &[RunReport], csv: &Path, json: &Path, allow_empty: bool) -> Result<()> {
    if reports.is_empty() && !allow_empty {
        return Err(invalid("no reports to write"));
    }
    write_file(csv, &render_csv(reports))?;
    write_file(json, &render_json(reports)?)
}
